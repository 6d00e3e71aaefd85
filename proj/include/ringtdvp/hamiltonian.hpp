#ifndef RINGTDVP_HAMILTONIAN_HPP
#define RINGTDVP_HAMILTONIAN_HPP

#include "ringtdvp/tangent.hpp"

namespace ringtdvp {

// Interacting bosons on a ring of circumference L (units hbar = 1, m = 1/2)
// with a localized barrier of strength U0 co-rotating at angular frequency
// Omega; eps is the penalty weight enforcing the rotating-frame boundary
// matching condition.
struct HamiltonianParams {
  double c = 1.0;      // contact interaction strength
  double mu = 0.0;     // chemical potential
  double U0 = 0.0;     // barrier strength
  double Omega = 0.0;  // barrier angular frequency, in units of 2*pi/L
  double eps = 1e-3;   // boundary penalty weight
};

struct EnergyBreakdown {
  double total = 0.0;     // bulk + boundary (grand-canonical objective)
  double bulk = 0.0;      // ring integral of the local density, includes -mu*N
  double boundary = 0.0;  // barrier + penalty + mixed
  double barrier = 0.0;   // U0/2 barrier expectation
  double penalty = 0.0;   // (1/eps) boundary-matching residual
  double mixed = 0.0;     // first-order rotating-frame cross term
  double norm = 0.0;      // <Psi|Psi>
  double n_particles = 0.0;
  double mu_times_n = 0.0;
  // Canonical energy of the state itself: bulk + mu*N + barrier, i.e. the
  // Hamiltonian expectation without chemical-potential and penalty pieces.
  double canonical() const { return bulk + mu_times_n + barrier; }
};

// Operator builders shared with the reference implementations.
KronSum density_op(const CmpsState& s);                     // R (x) conj(R)
KronSum hamiltonian_density_op(const CmpsState& s, const HamiltonianParams& p);
KronSum barrier_op(const CmpsState& s, const HamiltonianParams& p);   // U0/2 terms
KronSum penalty_op(const CmpsState& s, const HamiltonianParams& p);   // (1/eps) F Fbar
KronSum mixed_op(const CmpsState& s, const HamiltonianParams& p);     // 1/2 (G Fbar + F Gbar)
Mat boundary_hop(const CmpsState& s, double Omega);   // F = B R - e^{i 2 pi Omega} R B
Mat boundary_kin(const CmpsState& s, double Omega);   // G = B [Q,R] + e^{i 2 pi Omega} [Q,R] B

// Same-point variational shapes of the barred legs (bulk density and boundary
// operators respectively); shared with the reference implementations.
VarShape bulk_density_var(const CmpsState& s, const HamiltonianParams& p);
VarShape boundary_point_var(const CmpsState& s, const HamiltonianParams& p);

EnergyBreakdown energy(const CmpsState& s, const SpectralData& spec,
                       const HamiltonianParams& p);

// <F Fbar>/norm: how well the rotating-frame matching condition is satisfied.
double boundary_residual(const CmpsState& s, const SpectralData& spec, double Omega);

// Unnormalized gradient g with <Phi(t)|H|Psi> = <t, g> over full tangents t.
// An optional looser tolerance relaxes the contraction cutoffs.
TangentVector gradient(const CmpsState& s, const SpectralData& spec,
                       const HamiltonianParams& p, double contraction_tol = 0.0);

}  // namespace ringtdvp

#endif
