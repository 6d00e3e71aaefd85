#include "ringtdvp/contraction.hpp"

#include "ringtdvp/weights.hpp"

#include <map>

namespace ringtdvp {

Mat KronSum::apply(const Mat& x) const {
  Mat out = Mat::Zero(x.rows(), x.cols());
  for (const auto& t : terms) out.noalias() += t.w * t.a * x * t.b.adjoint();
  return out;
}

Mat KronSum::apply_adj(const Mat& x) const {
  Mat out = Mat::Zero(x.rows(), x.cols());
  for (const auto& t : terms) out.noalias() += std::conj(t.w) * t.a.adjoint() * x * t.b;
  return out;
}

Mat KronSum::dense(int D) const {
  Mat out = Mat::Zero(D * D, D * D);
  for (const auto& t : terms) out += t.w * kron(t.b.conjugate(), t.a);
  return out;
}

namespace {

std::map<std::string, double>& scales() {
  static std::map<std::string, double> s;
  return s;
}

}  // namespace

void set_term_scale(const std::string& name, double scale) { scales()[name] = scale; }
void clear_term_scales() { scales().clear(); }
double term_scale(const std::string& name) {
  auto it = scales().find(name);
  return it == scales().end() ? 1.0 : it->second;
}

const std::vector<std::string>& contraction_row_names() {
  static const std::vector<std::string> names = {
      "b1_boundary",  "s1_offdiag",  "s2_diag",     "s3_pinv",     "d1_triple",
      "d2_pair",      "d3_coincide", "d4_tail_a",   "d4_tail_b",   "d4_tail_c",
      "d5_keep_a",    "d5_keep_b",   "d5_keep_c",   "d6_hat_a",    "d6_hat_b",
      "d6_hat_c",     "d7_Lpinv_a",  "d7_Lpinv_b",  "d7_Lpinv_c"};
  return names;
}

Cutoffs cutoffs_for(const SpectralData& spec, double tol) {
  const int n = spec.n_kept();
  auto count = [&](double factor) {
    int m = 0;
    for (int i = 0; i < n; ++i)
      if (factor * std::abs(std::exp(spec.L * spec.lambdas[i])) >= tol) m = i + 1;
    if (m < 1) m = 1;
    // never split a near-degenerate pair across the cutoff
    while (m < n && lambdas_close(spec.lambdas[m - 1], spec.lambdas[m])) ++m;
    return m;
  };
  Cutoffs c;
  c.m1 = count(1.0);
  c.m2 = std::max(c.m1, count(spec.L));
  c.m3 = std::max(c.m2, count(0.5 * spec.L * spec.L));
  return c;
}

ContractionEngine::ContractionEngine(const SpectralData& spec)
    : ContractionEngine(spec, Cutoffs{spec.m1, spec.m2, spec.m3}) {}

ContractionEngine::ContractionEngine(const SpectralData& spec, Cutoffs c)
    : sp_(&spec), c_(c), L_(spec.L) {
  c_.m2 = std::max(c_.m1, c_.m2);
  c_.m3 = std::max(c_.m2, c_.m3);
  if (c_.m3 > spec.n_kept())
    throw dimension_error("ContractionEngine: cutoffs exceed kept spectrum");
  eL_.resize(spec.n_kept());
  for (int i = 0; i < spec.n_kept(); ++i) eL_[i] = std::exp(L_ * spec.lambdas[i]);
}

Eigen::MatrixXcd ContractionEngine::table(const KronSum& F, int n) const {
  Eigen::MatrixXcd t(n, n);
  for (int j = 0; j < n; ++j) {
    const Mat Fr = F.apply(sp_->right_vecs[j]);
    for (int i = 0; i < n; ++i) t(i, j) = frob(sp_->left_vecs[i], Fr);
  }
  return t;
}

void ContractionEngine::extract_pair(const VarShape& var, cxd c, const Mat& x, const Mat& y,
                                     VarAccum& out) const {
  for (const auto& e : var.elems) {
    Mat g = x.adjoint() * (e.a * y);
    if (e.P.size() > 0) g = e.P.adjoint() * g;
    if (e.S.size() > 0) g = g * e.S.adjoint();
    const cxd w = c * e.wbar;
    switch (e.slot) {
      case Slot::V: out.V.noalias() += w * g; break;
      case Slot::W: out.W.noalias() += w * g; break;
      case Slot::Y: out.Y.noalias() += w * g; break;
    }
  }
}

void ContractionEngine::extract_matrix(const VarShape& var, cxd scale,
                                       const Eigen::MatrixXcd& C, VarAccum& out) const {
  const int n = static_cast<int>(C.rows());
  const int D = sp_->D;
  for (int b = 0; b < n; ++b) {
    if (C.row(b).cwiseAbs().maxCoeff() == 0.0) continue;
    Mat yacc = Mat::Zero(D, D);
    for (int c = 0; c < n; ++c)
      if (C(b, c) != cxd(0.0, 0.0)) yacc.noalias() += C(b, c) * sp_->right_vecs[c];
    extract_pair(var, scale, sp_->left_vecs[b], yacc, out);
  }
}

cxd ContractionEngine::boundary_scalar(const KronSum& P) const {
  const double s = term_scale("b1_boundary");
  cxd total(0.0, 0.0);
  for (int i = 0; i < c_.m1; ++i)
    total += eL_[i] * frob(sp_->left_vecs[i], P.apply(sp_->right_vecs[i]));
  return s * total;
}

void ContractionEngine::boundary_var(const VarShape& var, cxd scale, VarAccum& out) const {
  const double s = term_scale("b1_boundary");
  for (int i = 0; i < c_.m1; ++i)
    extract_pair(var, scale * s * eL_[i], sp_->left_vecs[i], sp_->right_vecs[i], out);
}

cxd ContractionEngine::single_scalar(const KronSum& P, const KronSum& F) const {
  const auto& lam = sp_->lambdas;
  const int m1 = c_.m1, m2 = c_.m2;
  const Eigen::MatrixXcd Pt = table(P, m2);
  const Eigen::MatrixXcd Ft = table(F, m2);
  cxd total(0.0, 0.0);
  {
    const double s = term_scale("s1_offdiag");
    cxd acc(0.0, 0.0);
    for (int u = 0; u < m1; ++u)
      for (int v = 0; v < m1; ++v)
        if (u != v) acc += weight_dq(lam[u], lam[v], L_) * Pt(v, u) * Ft(u, v);
    total += s * acc;
  }
  {
    const double s = term_scale("s2_diag");
    cxd acc(0.0, 0.0);
    for (int u = 0; u < m2; ++u) acc += L_ * eL_[u] * Pt(u, u) * Ft(u, u);
    total += s * acc;
  }
  {
    const double s = term_scale("s3_pinv");
    cxd acc(0.0, 0.0);
    for (int u = 0; u < m1; ++u) {
      const Mat& lu = sp_->left_vecs[u];
      const Mat& ru = sp_->right_vecs[u];
      const Mat yr = sp_->pinv_apply(u, m1, 1, P.apply(ru));
      const Mat xl = sp_->pinv_apply(u, m1, 1, P.apply_adj(lu), true);
      acc += eL_[u] * (frob(lu, F.apply(yr)) + frob(xl, F.apply(ru)));
    }
    total += s * acc;
  }
  return total;
}

void ContractionEngine::single_var(const KronSum& P, const VarShape& var, cxd scale,
                                   VarAccum& out) const {
  const auto& lam = sp_->lambdas;
  const int m1 = c_.m1, m2 = c_.m2;
  const Eigen::MatrixXcd Pt = table(P, m2);
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(m2, m2);
  {
    const double s = term_scale("s1_offdiag");
    for (int u = 0; u < m1; ++u)
      for (int v = 0; v < m1; ++v)
        if (u != v) C(u, v) += s * weight_dq(lam[u], lam[v], L_) * Pt(v, u);
  }
  {
    const double s = term_scale("s2_diag");
    for (int u = 0; u < m2; ++u) C(u, u) += s * L_ * eL_[u] * Pt(u, u);
  }
  extract_matrix(var, scale, C, out);
  {
    const double s = term_scale("s3_pinv");
    for (int u = 0; u < m1; ++u) {
      const Mat& lu = sp_->left_vecs[u];
      const Mat& ru = sp_->right_vecs[u];
      const Mat yr = sp_->pinv_apply(u, m1, 1, P.apply(ru));
      const Mat xl = sp_->pinv_apply(u, m1, 1, P.apply_adj(lu), true);
      extract_pair(var, scale * s * eL_[u], lu, yr, out);
      extract_pair(var, scale * s * eL_[u], xl, ru, out);
    }
  }
}

void ContractionEngine::double_var(const KronSum& A, const KronSum& B, const VarShape& var,
                                   cxd scale, VarAccum& out) const {
  const auto& lam = sp_->lambdas;
  const int m1 = c_.m1, m2 = c_.m2, m3 = c_.m3;
  const int D = sp_->D;
  const Eigen::MatrixXcd At = table(A, m3);
  const Eigen::MatrixXcd Bt = table(B, m3);

  // Per-index building blocks shared across the tail branches.
  std::vector<Mat> Ar(m2), Br(m2), Badj_l(m2), Aadj_l(m1);
  for (int i = 0; i < m2; ++i) {
    Ar[i] = A.apply(sp_->right_vecs[i]);
    Br[i] = B.apply(sp_->right_vecs[i]);
    Badj_l[i] = B.apply_adj(sp_->left_vecs[i]);
  }
  for (int i = 0; i < m1; ++i) Aadj_l[i] = A.apply_adj(sp_->left_vecs[i]);
  std::vector<Mat> vA(m1), wB(m1), tB(m1), zA(m1), AtB(m1);
  for (int i = 0; i < m1; ++i) {
    vA[i] = sp_->pinv_apply(i, m1, 1, Ar[i]);
    wB[i] = sp_->pinv_apply(i, m1, 1, Badj_l[i], true);
    tB[i] = sp_->pinv_apply(i, m1, 1, Br[i]);
    zA[i] = sp_->pinv_apply(i, m1, 1, Aadj_l[i], true);
    AtB[i] = A.apply(tB[i]);
  }

  // First-divided-difference coefficients of the single-tail resummation:
  // the tail slot between kept indices i and j carries
  //   [e^{L li} Tpinv_i - e^{L lj} Tpinv_j] / (li - lj).
  auto c1 = [&](int i, int j) { return eL_[i] / (lam[i] - lam[j]); };
  auto c2 = [&](int i, int j) { return -eL_[j] / (lam[i] - lam[j]); };

  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(m3, m3);

  {  // all three indices explicit and pairwise distinct
    const double s = term_scale("d1_triple");
    for (int a = 0; a < m1; ++a)
      for (int b = 0; b < m1; ++b) {
        if (b == a) continue;
        for (int c = 0; c < m1; ++c) {
          if (c == a || c == b) continue;
          C(b, c) += s * weight_triple(lam[a], lam[b], lam[c], L_) * At(c, a) * Bt(a, b);
        }
      }
  }
  {  // exactly two indices equal; rep is the repeated one
    const double s = term_scale("d2_pair");
    for (int rep = 0; rep < m2; ++rep)
      for (int oth = 0; oth < m2; ++oth) {
        if (oth == rep) continue;
        const bool full = (rep < m1 && oth < m1) || lambdas_close(lam[rep], lam[oth]);
        const cxd w = s * (full ? weight_pair(lam[rep], lam[oth], L_)
                                : weight_pair_L_only(lam[rep], lam[oth], L_));
        C(rep, rep) += w * At(rep, oth) * Bt(oth, rep);
        C(oth, rep) += w * At(rep, rep) * Bt(rep, oth);
        C(rep, oth) += w * At(oth, rep) * Bt(rep, rep);
      }
  }
  {  // all three equal
    const double s = term_scale("d3_coincide");
    for (int i = 0; i < m3; ++i)
      C(i, i) += s * 0.5 * L_ * L_ * eL_[i] * At(i, i) * Bt(i, i);
  }

  {  // one tail, slot a (between A and B); kept pair (b,c) = (beta,gamma)
    const double s = term_scale("d4_tail_a");
    for (int be = 0; be < m1; ++be)
      for (int ga = 0; ga < m1; ++ga) {
        if (ga == be) continue;
        C(be, ga) += s * (c1(be, ga) * frob(sp_->left_vecs[ga], AtB[be]) +
                          c2(be, ga) * frob(zA[ga], Br[be]));
      }
  }
  {  // one tail, slot b (between B and the variational slot); kept (a,c)
    const double s = term_scale("d4_tail_b");
    for (int al = 0; al < m1; ++al) {
      Mat yacc = Mat::Zero(D, D);
      bool any = false;
      for (int ga = 0; ga < m1; ++ga) {
        if (ga == al) continue;
        yacc.noalias() += c1(al, ga) * At(ga, al) * sp_->right_vecs[ga];
        any = true;
      }
      if (any) extract_pair(var, scale * s, wB[al], yacc, out);
    }
    for (int ga = 0; ga < m1; ++ga) {
      Mat bacc = Mat::Zero(D, D);
      bool any = false;
      for (int al = 0; al < m1; ++al) {
        if (al == ga) continue;
        bacc.noalias() += std::conj(c2(al, ga) * At(ga, al)) * Badj_l[al];
        any = true;
      }
      if (!any) continue;
      const Mat xacc = sp_->pinv_apply(ga, m1, 1, bacc, true);
      extract_pair(var, scale * s, xacc, sp_->right_vecs[ga], out);
    }
  }
  {  // one tail, slot c (between the variational slot and A); kept (a,b)
    const double s = term_scale("d4_tail_c");
    for (int be = 0; be < m1; ++be) {
      Mat yacc = Mat::Zero(D, D);
      Mat pre = Mat::Zero(D, D);
      bool any = false;
      for (int al = 0; al < m1; ++al) {
        if (al == be) continue;
        yacc.noalias() += Bt(al, be) * c1(al, be) * vA[al];
        pre.noalias() += Bt(al, be) * c2(al, be) * Ar[al];
        any = true;
      }
      if (!any) continue;
      yacc += sp_->pinv_apply(be, m1, 1, pre);
      extract_pair(var, scale * s, sp_->left_vecs[be], yacc, out);
    }
  }

  {  // two tails; the single kept index sits at slot a, b or c
    const double sa = term_scale("d5_keep_a");
    const double sb = term_scale("d5_keep_b");
    const double sc = term_scale("d5_keep_c");
    for (int i = 0; i < m1; ++i) {
      extract_pair(var, scale * sa * eL_[i], wB[i], vA[i], out);
      const Mat yb = sp_->pinv_apply(i, m1, 1, AtB[i]);
      extract_pair(var, scale * sb * eL_[i], sp_->left_vecs[i], yb, out);
      const Mat xc = sp_->pinv_apply(i, m1, 1, B.apply_adj(zA[i]), true);
      extract_pair(var, scale * sc * eL_[i], xc, sp_->right_vecs[i], out);
    }
  }

  {  // repeated-index corrections: squared pseudo-inverse at the tail slot
    const double sa = term_scale("d6_hat_a");
    const double sb = term_scale("d6_hat_b");
    const double sc = term_scale("d6_hat_c");
    for (int i = 0; i < m1; ++i) {
      const Mat hB = sp_->pinv_apply(i, m1, 2, Br[i]);
      C(i, i) += sa * (-eL_[i]) * frob(sp_->left_vecs[i], A.apply(hB));
      const Mat xb = sp_->pinv_apply(i, m1, 2, Badj_l[i], true);
      extract_pair(var, scale * sb * (-eL_[i]) * At(i, i), xb, sp_->right_vecs[i], out);
      const Mat yc = sp_->pinv_apply(i, m1, 2, Ar[i]);
      extract_pair(var, scale * sc * (-eL_[i]) * Bt(i, i), sp_->left_vecs[i], yc, out);
    }
  }
  {  // repeated-index corrections: L-weighted pseudo-inverse, wider cutoff
    const double sa = term_scale("d7_Lpinv_a");
    const double sb = term_scale("d7_Lpinv_b");
    const double sc = term_scale("d7_Lpinv_c");
    for (int i = 0; i < m2; ++i) {
      const Mat pB = sp_->pinv_apply(i, m2, 1, Br[i]);
      C(i, i) += sa * L_ * eL_[i] * frob(sp_->left_vecs[i], A.apply(pB));
      const Mat xb = sp_->pinv_apply(i, m2, 1, Badj_l[i], true);
      extract_pair(var, scale * sb * L_ * eL_[i] * At(i, i), xb, sp_->right_vecs[i], out);
      const Mat yc = sp_->pinv_apply(i, m2, 1, Ar[i]);
      extract_pair(var, scale * sc * L_ * eL_[i] * Bt(i, i), sp_->left_vecs[i], yc, out);
    }
  }

  extract_matrix(var, scale, C, out);
}

}  // namespace ringtdvp
