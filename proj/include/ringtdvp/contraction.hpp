#ifndef RINGTDVP_CONTRACTION_HPP
#define RINGTDVP_CONTRACTION_HPP

#include "ringtdvp/core.hpp"
#include "ringtdvp/spectral.hpp"

#include <string>
#include <vector>

namespace ringtdvp {

// Sum of elementary product superoperators  sum_k w_k a_k (x) conj(b_k),
// acting on D x D matrices as  x -> sum_k w_k a_k x b_k^dag.
struct KronTerm {
  cxd w;
  Mat a, b;
};

struct KronSum {
  std::vector<KronTerm> terms;

  KronSum() = default;
  KronSum(cxd w, const Mat& a, const Mat& b) { terms.push_back({w, a, b}); }
  KronSum& add(cxd w, const Mat& a, const Mat& b) {
    terms.push_back({w, a, b});
    return *this;
  }

  Mat apply(const Mat& x) const;      // sum w a x b^dag
  Mat apply_adj(const Mat& x) const;  // adjoint map: sum conj(w) a^dag x b
  Mat dense(int D) const;             // sum w kron(conj(b), a) (column-major vec)
};

// One linearized term  a (x) conj(P Z S) with Z one of the variational slots.
// Extraction: a contraction that pairs this term with bra vector x and ket
// vector y under scalar weight c contributes  c * wbar * P^dag x^dag a y S^dag
// to the gradient coefficient of Z (pairing convention <Z, g> = Tr[Z^dag g]).
enum class Slot { V, W, Y };

struct VarElem {
  cxd wbar;  // coefficient carried by the barred monomial (already conjugated)
  Mat a;     // unbarred factor
  Mat P, S;  // empty matrix means identity
  Slot slot = Slot::V;
};

struct VarShape {
  std::vector<VarElem> elems;
  VarShape& add(cxd wbar, const Mat& a, const Mat& P, const Mat& S, Slot slot) {
    elems.push_back({wbar, a, P, S, slot});
    return *this;
  }
};

struct VarAccum {
  Mat V, W, Y;
  void init(int D) {
    V = Mat::Zero(D, D);
    W = Mat::Zero(D, D);
    Y = Mat::Zero(D, D);
  }
};

// Named scale factors on individual contraction rows. Unit scale by default;
// the self-check harness perturbs one row at a time to prove each row is live.
void set_term_scale(const std::string& name, double scale);
void clear_term_scales();
double term_scale(const std::string& name);
const std::vector<std::string>& contraction_row_names();

// Cutoff triple (m1 <= m2 <= m3) for a possibly looser tolerance than the one
// the decomposition was built with; never splits a near-degenerate pair.
struct Cutoffs {
  int m1 = 1, m2 = 1, m3 = 1;
};
Cutoffs cutoffs_for(const SpectralData& spec, double tol);

// Evaluates ring contractions of one or two local superoperators against the
// spectral representation of e^{L T}: boundary terms, single integrals and
// double integrals, in scalar form or differentiated against a variational
// shape. All cutoff bookkeeping (explicit sums, coincidence weights,
// pseudo-inverse tails) lives here.
class ContractionEngine {
 public:
  explicit ContractionEngine(const SpectralData& spec);
  ContractionEngine(const SpectralData& spec, Cutoffs c);

  // Tr[e^{L T} P]
  cxd boundary_scalar(const KronSum& P) const;
  // int_0^L Tr[e^{(L-x) T} P e^{x T} F] dx
  cxd single_scalar(const KronSum& P, const KronSum& F) const;

  // Same contractions with one factor replaced by a variational shape;
  // results are accumulated into `out` with overall weight `scale`.
  void boundary_var(const VarShape& var, cxd scale, VarAccum& out) const;
  void single_var(const KronSum& P, const VarShape& var, cxd scale, VarAccum& out) const;
  // Ordered double integral over the ring:
  // int_0^L int_x^L Tr[e^{x T} A e^{(y-x) T} B e^{(L-y) T} VAR] dy dx
  // read cyclically as Tr[A S_a B S_b VAR S_c] with the variational shape in
  // the final slot.
  void double_var(const KronSum& A, const KronSum& B, const VarShape& var, cxd scale,
                  VarAccum& out) const;

  const SpectralData& spec() const { return *sp_; }
  int m1() const { return c_.m1; }
  int m2() const { return c_.m2; }
  int m3() const { return c_.m3; }

 private:
  const SpectralData* sp_;
  Cutoffs c_;
  double L_;
  std::vector<cxd> eL_;  // e^{L lambda_i}, i < n_kept

  Eigen::MatrixXcd table(const KronSum& F, int n) const;  // <l_i|F|r_j>
  void extract_pair(const VarShape& var, cxd c, const Mat& x, const Mat& y,
                    VarAccum& out) const;
  void extract_matrix(const VarShape& var, cxd scale, const Eigen::MatrixXcd& C,
                      VarAccum& out) const;
};

}  // namespace ringtdvp

#endif
