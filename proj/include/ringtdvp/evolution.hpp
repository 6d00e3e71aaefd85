#ifndef RINGTDVP_EVOLUTION_HPP
#define RINGTDVP_EVOLUTION_HPP

#include "ringtdvp/hamiltonian.hpp"

#include <string>

namespace ringtdvp {

struct OptimizerOptions {
  double grad_tol = 1e-8;   // convergence threshold on the natural gradient norm
  int max_iters = 2000;
  double step0 = 0.2;       // initial trial step of the line search
  double armijo_c1 = 1e-4;
  double armijo_shrink = 0.5;
  int armijo_max = 30;
  int restart_every = 0;    // steepest-descent restart period; 0 means 4 D^2
  double spectral_tol = 1e-12;        // tolerance of the spectral decomposition
  double contraction_tol_gram = 1e-9; // looser cutoffs for Gram applications
  double gram_solve_tol = 1e-10;      // relative residual of the metric solve
  int gram_solve_max = 0;             // 0 means 8 * D^2
  std::string trace_csv;              // optional per-iteration trace
};

// One evaluation point of the variational flow: spectral data, energy,
// unnormalized gradient and overlap vector in reduced coordinates.
struct FlowPoint {
  SpectralData spec;
  EnergyBreakdown e;
  TangentVector g_red;  // project_reduced(g - E_total * y)
  TangentVector y_red;  // project_reduced(y)
};

FlowPoint evaluate_flow(const CmpsState& s, const HamiltonianParams& p,
                        const OptimizerOptions& opt);

// Solves G_red x = b by conjugate residuals, where G_red is the Gram operator
// restricted to reduced coordinates (self-adjoint positive semi-definite).
TangentVector gram_solve(const CmpsState& s, const SpectralData& spec,
                         const TangentVector& b_red, const OptimizerOptions& opt);

// Time-derivative direction of the state in reduced coordinates:
// -G^{-1} ghat for imaginary time (with the component along the norm direction
// projected out), -i G^{-1} ghat for real time.
TangentVector flow_direction(const CmpsState& s, const FlowPoint& fp, bool imaginary,
                             const OptimizerOptions& opt);

// One real-time step of size dt (explicit midpoint rule, second order).
CmpsState tdvp_step(const CmpsState& s, const HamiltonianParams& p, double dt,
                    const OptimizerOptions& opt);

struct GroundStateResult {
  CmpsState state;
  EnergyBreakdown e;
  double grad_norm = 0.0;
  int iters = 0;
  bool converged = false;
};

// Preconditioned nonlinear conjugate gradient (Polak-Ribiere with restart) on
// the normalized energy, using the Gram metric as preconditioner. The boundary
// matrix is rescaled to unit state norm after every accepted step.
GroundStateResult cg_ground_state(const CmpsState& s0, const HamiltonianParams& p,
                                  const OptimizerOptions& opt);

// Adjusts p.mu by secant iteration until the converged ground state carries
// n_target particles; returns the final result, with p.mu updated in place.
GroundStateResult tune_mu(CmpsState s0, HamiltonianParams& p, double n_target,
                          const OptimizerOptions& opt, double n_tol = 1e-6,
                          int max_rounds = 30);

}  // namespace ringtdvp

#endif
