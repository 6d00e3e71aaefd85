#include "ringtdvp/tangent.hpp"

#include <Eigen/QR>

namespace ringtdvp {

cxd tangent_dot(const TangentVector& a, const TangentVector& b) {
  if (a.reduced != b.reduced) throw dimension_error("tangent_dot: mixed reduced/full");
  cxd d = frob(a.W, b.W) + frob(a.Y, b.Y);
  if (!a.reduced) d += frob(a.V, b.V);
  return d;
}

TangentVector tangent_axpy(cxd alpha, const TangentVector& x, const TangentVector& y) {
  if (x.reduced != y.reduced) throw dimension_error("tangent_axpy: mixed reduced/full");
  TangentVector z = y;
  if (!z.reduced) z.V += alpha * x.V;
  z.W += alpha * x.W;
  z.Y += alpha * x.Y;
  return z;
}

TangentSpace::TangentSpace(const CmpsState& s, const SpectralData& spec,
                           double contraction_tol)
    : s_(&s),
      sp_(&spec),
      eng_(contraction_tol > 0.0
               ? ContractionEngine(spec, cutoffs_for(spec, contraction_tol))
               : ContractionEngine(spec)),
      P_BB_(1.0, s.B, s.B) {
  const Mat id = Mat::Identity(s.D, s.D);
  ivw_.add(1.0, id, Mat(), Mat(), Slot::V).add(1.0, s.R, Mat(), Mat(), Slot::W);
  by_.add(1.0, s.B, Mat(), Mat(), Slot::Y);
}

double TangentSpace::norm() const { return eng_.boundary_scalar(P_BB_).real(); }

TangentVector TangentSpace::ortho_vector() const {
  VarAccum acc;
  acc.init(s_->D);
  eng_.single_var(P_BB_, ivw_, 1.0, acc);
  eng_.boundary_var(by_, 1.0, acc);
  return {acc.V, acc.W, acc.Y, false};
}

TangentVector TangentSpace::gram_apply(const TangentVector& t) const {
  if (t.reduced) throw dimension_error("gram_apply: expects a full tangent");
  const int D = s_->D;
  VarAccum acc;
  acc.init(D);
  KronSum vw_t(1.0, t.V, Mat::Identity(D, D));
  vw_t.add(1.0, t.W, s_->R);
  // bulk-bulk, two insertion points (both orderings around the ring)
  eng_.double_var(P_BB_, vw_t, ivw_, 1.0, acc);
  eng_.double_var(vw_t, P_BB_, ivw_, 1.0, acc);
  // bulk-bulk, coincident insertion point
  VarShape ww;
  ww.add(1.0, t.W, Mat(), Mat(), Slot::W);
  eng_.single_var(P_BB_, ww, 1.0, acc);
  // bulk-boundary cross terms
  eng_.single_var(vw_t, by_, 1.0, acc);
  KronSum yb(1.0, t.Y, s_->B);
  eng_.single_var(yb, ivw_, 1.0, acc);
  // boundary-boundary
  VarShape yy;
  yy.add(1.0, t.Y, Mat(), Mat(), Slot::Y);
  eng_.boundary_var(yy, 1.0, acc);
  return {acc.V, acc.W, acc.Y, false};
}

double state_norm(const CmpsState& s, const SpectralData& spec) {
  return TangentSpace(s, spec).norm();
}

TangentVector ortho_vector(const CmpsState& s, const SpectralData& spec) {
  return TangentSpace(s, spec).ortho_vector();
}

TangentVector gram_apply(const CmpsState& s, const SpectralData& spec,
                         const TangentVector& t) {
  return TangentSpace(s, spec).gram_apply(t);
}

TangentVector expand(const CmpsState& s, const TangentVector& red) {
  if (!red.reduced) throw dimension_error("expand: expects a reduced tangent");
  TangentVector t;
  t.reduced = false;
  t.V = -(s.R.adjoint() * red.W);
  t.W = red.W;
  t.Y = red.Y;
  return t;
}

TangentVector project_reduced(const CmpsState& s, const TangentVector& full) {
  if (full.reduced) throw dimension_error("project_reduced: expects a full tangent");
  TangentVector t;
  t.reduced = true;
  t.W = full.W - s.R * full.V;
  t.Y = full.Y;
  return t;
}

CmpsState advance_state(const CmpsState& s, const TangentVector& reduced_dir, double step) {
  if (!reduced_dir.reduced) throw dimension_error("advance_state: expects a reduced direction");
  CmpsState n = s;
  const Mat dW = step * reduced_dir.W;
  n.R = s.R + dW;
  n.K = s.K + (-0.5 * I_unit) * (s.R.adjoint() * dW - dW.adjoint() * s.R);
  n.K = 0.5 * (n.K + n.K.adjoint());
  n.B = s.B + step * reduced_dir.Y;
  return n;
}

TangentVector reduce(const CmpsState& s, const TangentVector& full) {
  if (full.reduced) throw dimension_error("reduce: expects a full tangent");
  const int D = s.D;
  const Mat Q = s.Q();
  const Mat id = Mat::Identity(D, D);
  // vec([X,Q] + R^dag [X,R]) = M vec(X), column-major vectorization
  Mat M = kron(Q.transpose(), id) - kron(id, Q) + kron(s.R.transpose(), s.R.adjoint()) -
          kron(id, s.R.adjoint() * s.R);
  Vec rhs = vec(Mat(-(full.V + s.R.adjoint() * full.W)));
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(M);
  Mat X = unvec(Vec(cod.solve(rhs)), D);
  TangentVector t;
  t.reduced = true;
  t.W = full.W + comm(X, s.R);
  t.Y = full.Y + comm(X, s.B);
  return t;
}

}  // namespace ringtdvp
