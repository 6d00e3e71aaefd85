#ifndef RINGTDVP_CORE_HPP
#define RINGTDVP_CORE_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace ringtdvp {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr cxd I_unit{0.0, 1.0};

inline Mat comm(const Mat& a, const Mat& b) { return a * b - b * a; }

// Frobenius inner product <a|b> = Tr[a^dag b], the matrix realization of the
// vectorized inner product on the D^2-dimensional auxiliary double layer.
inline cxd frob(const Mat& a, const Mat& b) { return (a.adjoint() * b).trace(); }

struct dimension_error : std::runtime_error {
  explicit dimension_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct solver_error : std::runtime_error {
  explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

// The generator T = Q (x) 1 + 1 (x) conj(Q) + R (x) conj(R) acting on D x D
// matrices through the isomorphism a (x) conj(b) |x> -> a x b^dag.
struct TransferAction {
  const Mat& Q;
  const Mat& R;
  enum Direction { Forward, Adjoint } dir = Forward;

  Mat operator()(const Mat& x) const {
    if (x.rows() != Q.rows() || x.cols() != Q.cols())
      throw dimension_error("apply_transfer: operand dimension mismatch");
    if (dir == Forward)
      return Q * x + x * Q.adjoint() + R * x * R.adjoint();
    return Q.adjoint() * x + x * Q + R.adjoint() * x * R;
  }
};

inline Mat apply_transfer(const TransferAction& act, const Mat& x) { return act(x); }

// Column-major vec convention: vec(a x b^dag) = (conj(b) kron a) vec(x).
inline Eigen::MatrixXcd kron(const Mat& a, const Mat& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Dense matrix of the superoperator x -> a x b^dag.
inline Mat sandwich_matrix(const Mat& a, const Mat& b) { return kron(b.conjugate(), a); }

inline Mat dense_transfer_matrix(const Mat& Q, const Mat& R) {
  const Eigen::Index D = Q.rows();
  Mat id = Mat::Identity(D, D);
  return sandwich_matrix(Q, id) + sandwich_matrix(id, Q) + sandwich_matrix(R, R);
}

inline Mat unvec(const Vec& v, Eigen::Index D) {
  return Eigen::Map<const Mat>(v.data(), D, D);
}

inline Vec vec(const Mat& m) {
  return Eigen::Map<const Vec>(m.data(), m.size());
}

}  // namespace ringtdvp

#endif
