#ifndef RINGTDVP_SPECTRAL_HPP
#define RINGTDVP_SPECTRAL_HPP

#include "ringtdvp/core.hpp"
#include "ringtdvp/state.hpp"

#include <Eigen/LU>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace ringtdvp {

// Leading eigentriples of the transfer generator T with the three cutoffs:
//   i > m1 : |e^{L lam_i}|        < tol
//   i > m2 : L |e^{L lam_i}|      < tol
//   i > m3 : (L^2/2)|e^{L lam_i}| < tol
// Eigenvalues sorted by descending real part, ties by descending imaginary
// part; cutoffs never split a near-degenerate pair.
class SpectralData {
 public:
  std::vector<cxd> lambdas;     // n_kept leading eigenvalues
  std::vector<Mat> right_vecs;  // r_i as D x D matrices
  std::vector<Mat> left_vecs;   // l_i, biorthonormal: Tr[l_i^dag r_j] = delta_ij
  int m1 = 0, m2 = 0, m3 = 0;
  double tol = 0.0;
  double L = 0.0;
  int D = 0;

  Mat Q, R;  // copies defining T (state is immutable during a step)

  // Dense path extras (D^2 <= dense_threshold): full spectrum + dense T,
  // enabling exact-tail observables and cached-LU pseudo-inverse solves.
  bool has_full = false;
  std::vector<cxd> full_lambdas;
  std::vector<Mat> full_right, full_left;
  Mat T_dense;

  int n_kept() const { return static_cast<int>(lambdas.size()); }
  TransferAction forward() const { return TransferAction{Q, R, TransferAction::Forward}; }

  // (T~_i^m)^p b  (power 1) or applied twice (power 2); adjoint variant solves
  // with the adjoint operator, realized as a deflated linear solve.
  Mat pinv_apply(int i, int m, int power, const Mat& b, bool adjoint = false) const;

  Mat project_off(int m, const Mat& b, bool adjoint = false) const;

 private:
  struct LuCache {
    std::mutex mtx;
    std::map<std::pair<int, int>, std::shared_ptr<Eigen::PartialPivLU<Mat>>> lu;
  };
  mutable std::shared_ptr<LuCache> cache_ = std::make_shared<LuCache>();

  Mat pinv_once(int i, int m, const Mat& b, bool adjoint) const;
  Mat pinv_gmres(int i, int m, const Mat& b, bool adjoint) const;

  friend SpectralData spectral_decompose(const Mat&, const Mat&, double, double, int);
};

// dense_threshold compares against D^2; above it a Krylov (Arnoldi) path is
// used for both the eigenproblem and the deflated solves.
SpectralData spectral_decompose(const Mat& Q, const Mat& R, double L, double tol,
                                int dense_threshold = 400);

inline SpectralData spectral_decompose(const CmpsState& s, double tol,
                                       int dense_threshold = 400) {
  return spectral_decompose(s.Q(), s.R, s.L, tol, dense_threshold);
}

inline Mat pinv_apply(const SpectralData& spec, const TransferAction& act, int i, int m,
                      int power, const Mat& b) {
  return spec.pinv_apply(i, m, power, b, act.dir == TransferAction::Adjoint);
}

// Leading eigenpairs of a general linear operator on D x D matrices via
// expanding Arnoldi iteration (right eigenvectors only).
struct ArnoldiResult {
  std::vector<cxd> values;
  std::vector<Mat> vectors;
  double max_residual = 0.0;
};
ArnoldiResult arnoldi_leading(const std::function<Mat(const Mat&)>& op, int D, int nev,
                              double eig_tol = 1e-12, int max_dim = 0);

}  // namespace ringtdvp

#endif
