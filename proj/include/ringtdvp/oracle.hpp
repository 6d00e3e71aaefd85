#ifndef RINGTDVP_ORACLE_HPP
#define RINGTDVP_ORACLE_HPP

#include "ringtdvp/hamiltonian.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ringtdvp {

// Reference implementations used by tests and the self-check command. Nothing
// here shares the cutoff/pseudo-inverse machinery of the production path: all
// sums run over the full D^2 spectrum with exact closed-form weights, and are
// cross-checked against direct quadrature and block-matrix exponentials.

struct FullSpectrum {
  int D = 0;
  double L = 0.0;
  Mat T;                 // dense D^2 x D^2 transfer generator
  std::vector<cxd> lam;  // all D^2 eigenvalues, sorted like production
  std::vector<Mat> r, l; // biorthonormal eigenmatrices
};

FullSpectrum dense_spectrum(const CmpsState& s);

// Exact contractions over the full spectrum.
cxd ref_boundary(const FullSpectrum& fs, const KronSum& P);
cxd ref_single(const FullSpectrum& fs, const KronSum& P, const KronSum& F);
// Ordered double integral, same slot convention as ContractionEngine:
// int_0^L int_x^L Tr[e^{x T} A e^{(y-x) T} B e^{(L-y) T} C] dy dx.
cxd ref_double(const FullSpectrum& fs, const KronSum& A, const KronSum& B, const KronSum& C);

// Independent evaluations of the same integrals.
cxd ref_single_quad(const FullSpectrum& fs, const KronSum& P, const KronSum& F,
                    double rel_tol = 1e-10);
cxd ref_double_quad(const FullSpectrum& fs, const KronSum& A, const KronSum& B,
                    const KronSum& C, double rel_tol = 1e-10);
cxd ref_double_expm(const FullSpectrum& fs, const KronSum& A, const KronSum& B,
                    const KronSum& C);

// Concrete superoperator for a variational shape evaluated at a full tangent.
KronSum instantiate(const VarShape& var, const TangentVector& t);

// Scalar overlaps (unnormalized, full spectrum).
cxd ref_ortho_overlap(const FullSpectrum& fs, const CmpsState& s, const TangentVector& t);
cxd ref_gram_overlap(const FullSpectrum& fs, const CmpsState& s, const TangentVector& t1,
                     const TangentVector& t2);
cxd ref_grad_overlap(const FullSpectrum& fs, const CmpsState& s, const HamiltonianParams& p,
                     const TangentVector& t);
double ref_energy(const FullSpectrum& fs, const CmpsState& s, const HamiltonianParams& p);

struct FullReference {
  double norm = 0.0;
  TangentVector y;         // full coordinates
  Mat gram;                // 3 D^2 x 3 D^2 over stacked vec(V);vec(W);vec(Y)
  TangentVector gradient;  // unnormalized
  bool certified = false;  // quadrature cross-check passed at 1e-8
  double self_check_error = 0.0;
};

// build_gram_matrix is O(D^10); keep it for D <= 4.
FullReference full_spectrum_reference(const CmpsState& s, const HamiltonianParams& p,
                                      bool build_gram_matrix = true);

// Central difference of the normalized energy along a reduced direction; the
// analytic counterpart is 2 Re<expand(dir), g - E y>/norm.
double fd_directional(const CmpsState& s, const HamiltonianParams& p,
                      const TangentVector& direction_reduced, double h = 1e-5);

// Classical (D = 1 limit) ring condensate reference: imaginary-time split-step
// relaxation with a single-cell top-hat barrier of integrated weight U0 and
// rotation entering through the covariant derivative.
struct GpState {
  int n = 0;
  double L = 0.0;
  Eigen::VectorXcd psi;
  Eigen::VectorXd density;
  double energy = 0.0;
  double mu = 0.0;
  double residual = 0.0;
  bool converged = false;
};

GpState gp_ground_state(double c, double U0, double Omega, double L, double n_particles,
                        int n_grid = 512, int max_steps = 400000, double dtau = 0.0);

// Production-vs-reference comparison on a random state; used by tests and the
// `oracle-check` command. If a mismatch is explained by a scaled contraction
// row (fault-injection hook), `offending_row` names it.
struct OracleCheckResult {
  bool pass = false;
  double worst = 0.0;
  std::string worst_name;
  std::vector<std::pair<std::string, double>> errors;
  std::string offending_row;
};

OracleCheckResult oracle_check(int D, std::uint64_t seed, double tol = 1e-8);

}  // namespace ringtdvp

#endif
