#ifndef RINGTDVP_TANGENT_HPP
#define RINGTDVP_TANGENT_HPP

#include "ringtdvp/contraction.hpp"
#include "ringtdvp/state.hpp"

namespace ringtdvp {

// Tangent direction of a cMPS with boundary matrix: bulk pieces (V, W) and a
// boundary piece Y. In reduced form the left-gauge constraint V = -R^dag W is
// imposed and V is not stored (left empty).
struct TangentVector {
  Mat V, W, Y;
  bool reduced = false;

  static TangentVector zero_full(int D) {
    return {Mat::Zero(D, D), Mat::Zero(D, D), Mat::Zero(D, D), false};
  }
  static TangentVector zero_reduced(int D) {
    return {Mat(), Mat::Zero(D, D), Mat::Zero(D, D), true};
  }
};

cxd tangent_dot(const TangentVector& a, const TangentVector& b);
inline double tangent_norm(const TangentVector& a) {
  return std::sqrt(std::abs(tangent_dot(a, a).real()));
}
TangentVector tangent_axpy(cxd alpha, const TangentVector& x, const TangentVector& y);
inline TangentVector tangent_scale(cxd alpha, const TangentVector& x) {
  TangentVector z = x;
  if (!z.reduced) z.V *= alpha;
  z.W *= alpha;
  z.Y *= alpha;
  return z;
}

// Contractions around a fixed state: everything here treats (Q, R, B) and the
// spectral data as immutable. An optional looser tolerance relaxes the cutoffs
// relative to the ones the decomposition was built with.
class TangentSpace {
 public:
  TangentSpace(const CmpsState& s, const SpectralData& spec, double contraction_tol = 0.0);

  // <Psi|Psi>
  double norm() const;
  // y with <Phi(t)|Psi> = <t, y> for every full tangent t
  TangentVector ortho_vector() const;
  // G t with <Phi(t')|Phi(t)> = <t', G t>
  TangentVector gram_apply(const TangentVector& t) const;

  const ContractionEngine& engine() const { return eng_; }
  const CmpsState& state() const { return *s_; }
  const SpectralData& spec() const { return *sp_; }

 private:
  const CmpsState* s_;
  const SpectralData* sp_;
  ContractionEngine eng_;
  KronSum P_BB_;
  VarShape ivw_, by_;
};

double state_norm(const CmpsState& s, const SpectralData& spec);
TangentVector ortho_vector(const CmpsState& s, const SpectralData& spec);
TangentVector gram_apply(const CmpsState& s, const SpectralData& spec, const TangentVector& t);

// Gauge transform a full tangent into reduced coordinates: solves the
// least-norm generator X with [X,Q] + R^dag [X,R] = -(V + R^dag W) and shifts
// (W, Y) by ([X,R], [X,B]).
TangentVector reduce(const CmpsState& s, const TangentVector& full);
// Embed reduced coordinates as a full tangent with V = -R^dag W.
TangentVector expand(const CmpsState& s, const TangentVector& red);
// Adjoint of expand: maps a full cotangent to reduced coordinates (W - R V, Y).
TangentVector project_reduced(const CmpsState& s, const TangentVector& full);

// First-order move along a reduced direction: R += step W, B += step Y, and K
// shifts so that the induced dQ equals -R^dag (step W), keeping K hermitian.
CmpsState advance_state(const CmpsState& s, const TangentVector& reduced_dir, double step);

}  // namespace ringtdvp

#endif
