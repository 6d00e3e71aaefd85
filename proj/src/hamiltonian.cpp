#include "ringtdvp/hamiltonian.hpp"

#include <array>
#include <cmath>
#include <utility>

namespace ringtdvp {

KronSum density_op(const CmpsState& s) { return KronSum(1.0, s.R, s.R); }

KronSum hamiltonian_density_op(const CmpsState& s, const HamiltonianParams& p) {
  const Mat QR = comm(s.Q(), s.R);
  const Mat R2 = s.R * s.R;
  KronSum h(1.0, QR, QR);
  h.add(p.c, R2, R2);
  h.add(-p.mu, s.R, s.R);
  return h;
}

Mat boundary_hop(const CmpsState& s, double Omega) {
  const cxd phase = std::exp(I_unit * 2.0 * M_PI * Omega);
  return s.B * s.R - phase * s.R * s.B;
}

Mat boundary_kin(const CmpsState& s, double Omega) {
  const cxd phase = std::exp(I_unit * 2.0 * M_PI * Omega);
  const Mat QR = comm(s.Q(), s.R);
  return s.B * QR + phase * QR * s.B;
}

KronSum barrier_op(const CmpsState& s, const HamiltonianParams& p) {
  const Mat BR = s.B * s.R;
  const Mat RB = s.R * s.B;
  KronSum b(0.5 * p.U0, BR, BR);
  b.add(0.5 * p.U0, RB, RB);
  return b;
}

KronSum penalty_op(const CmpsState& s, const HamiltonianParams& p) {
  const Mat F = boundary_hop(s, p.Omega);
  return KronSum(1.0 / p.eps, F, F);
}

KronSum mixed_op(const CmpsState& s, const HamiltonianParams& p) {
  const Mat F = boundary_hop(s, p.Omega);
  const Mat G = boundary_kin(s, p.Omega);
  KronSum m(0.5, G, F);
  m.add(0.5, F, G);
  return m;
}

EnergyBreakdown energy(const CmpsState& s, const SpectralData& spec,
                       const HamiltonianParams& p) {
  ContractionEngine eng(spec);
  const KronSum P_BB(1.0, s.B, s.B);
  EnergyBreakdown e;
  e.norm = eng.boundary_scalar(P_BB).real();
  if (!(e.norm > 0.0) || !std::isfinite(e.norm))
    throw solver_error("energy: state norm is not positive");
  e.bulk = eng.single_scalar(P_BB, hamiltonian_density_op(s, p)).real() / e.norm;
  e.barrier = eng.boundary_scalar(barrier_op(s, p)).real() / e.norm;
  e.penalty = eng.boundary_scalar(penalty_op(s, p)).real() / e.norm;
  e.mixed = eng.boundary_scalar(mixed_op(s, p)).real() / e.norm;
  e.boundary = e.barrier + e.penalty + e.mixed;
  e.total = e.bulk + e.boundary;
  e.n_particles = eng.single_scalar(P_BB, density_op(s)).real() / e.norm;
  e.mu_times_n = p.mu * e.n_particles;
  return e;
}

double boundary_residual(const CmpsState& s, const SpectralData& spec, double Omega) {
  ContractionEngine eng(spec);
  const double norm = eng.boundary_scalar(KronSum(1.0, s.B, s.B)).real();
  const Mat F = boundary_hop(s, Omega);
  return eng.boundary_scalar(KronSum(1.0, F, F)).real() / norm;
}

// Same-point variation of the barred legs of the bulk density: replace
// conj(Q) -> conj(V) and conj(R) -> conj(W) one leg at a time.
VarShape bulk_density_var(const CmpsState& s, const HamiltonianParams& p) {
  const Mat Q = s.Q();
  const Mat QR = comm(Q, s.R);
  const Mat R2 = s.R * s.R;
  VarShape v;
  // conj([Q,R]) varied: [conj(V), conj(R)] + [conj(Q), conj(W)]
  v.add(1.0, QR, Mat(), s.R, Slot::V);
  v.add(-1.0, QR, s.R, Mat(), Slot::V);
  v.add(1.0, QR, Q, Mat(), Slot::W);
  v.add(-1.0, QR, Mat(), Q, Slot::W);
  // c conj(R^2) varied: conj(W R) + conj(R W)
  v.add(p.c, R2, Mat(), s.R, Slot::W);
  v.add(p.c, R2, s.R, Mat(), Slot::W);
  // -mu conj(R) varied
  v.add(-p.mu, s.R, Mat(), Mat(), Slot::W);
  return v;
}

// Same-point variations of the boundary operators at the barrier location:
// conj(B) -> conj(Y) plus the delta-supported conj(R) -> conj(W) and
// conj(Q) -> conj(V) replacements inside the barred boundary factors.
VarShape boundary_point_var(const CmpsState& s, const HamiltonianParams& p) {
  const cxd ph = std::exp(-I_unit * 2.0 * M_PI * p.Omega);  // conj of e^{i theta}
  const Mat Q = s.Q();
  const Mat QR = comm(Q, s.R);
  const Mat F = boundary_hop(s, p.Omega);
  const Mat G = boundary_kin(s, p.Omega);
  const Mat BR = s.B * s.R;
  const Mat RB = s.R * s.B;
  VarShape v;
  // barrier U0/2 (BR conj(BR) + RB conj(RB)): conj legs varied
  v.add(0.5 * p.U0, BR, s.B, Mat(), Slot::W);
  v.add(0.5 * p.U0, RB, Mat(), s.B, Slot::W);
  v.add(0.5 * p.U0, BR, Mat(), s.R, Slot::Y);
  v.add(0.5 * p.U0, RB, s.R, Mat(), Slot::Y);
  // penalty (1/eps) F conj(F) and mixed 1/2 G conj(F): vary conj(F)
  const std::array<std::pair<cxd, const Mat*>, 2> fvars = {
      {{cxd(1.0 / p.eps, 0.0), &F}, {cxd(0.5, 0.0), &G}}};
  for (const auto& [coef, a] : fvars) {
    v.add(coef, *a, s.B, Mat(), Slot::W);
    v.add(-coef * ph, *a, Mat(), s.B, Slot::W);
    v.add(coef, *a, Mat(), s.R, Slot::Y);
    v.add(-coef * ph, *a, s.R, Mat(), Slot::Y);
  }
  // mixed 1/2 F conj(G): vary conj(G) = conj(B[Q,R]) + ph conj([Q,R]B)
  v.add(0.5, F, s.B * Q, Mat(), Slot::W);
  v.add(-0.5, F, s.B, Q, Slot::W);
  v.add(0.5 * ph, F, Q, s.B, Slot::W);
  v.add(-0.5 * ph, F, Mat(), Q * s.B, Slot::W);
  v.add(0.5, F, s.B, s.R, Slot::V);
  v.add(-0.5, F, BR, Mat(), Slot::V);
  v.add(0.5 * ph, F, Mat(), RB, Slot::V);
  v.add(-0.5 * ph, F, s.R, s.B, Slot::V);
  v.add(0.5, F, Mat(), QR, Slot::Y);
  v.add(0.5 * ph, F, QR, Mat(), Slot::Y);
  return v;
}

TangentVector gradient(const CmpsState& s, const SpectralData& spec,
                       const HamiltonianParams& p, double contraction_tol) {
  const ContractionEngine eng = contraction_tol > 0.0
                                    ? ContractionEngine(spec, cutoffs_for(spec, contraction_tol))
                                    : ContractionEngine(spec);
  const int D = s.D;
  const Mat id = Mat::Identity(D, D);
  const KronSum P_BB(1.0, s.B, s.B);
  const KronSum h = hamiltonian_density_op(s, p);
  VarShape ivw;
  ivw.add(1.0, id, Mat(), Mat(), Slot::V).add(1.0, s.R, Mat(), Mat(), Slot::W);
  VarShape by;
  by.add(1.0, s.B, Mat(), Mat(), Slot::Y);

  VarAccum acc;
  acc.init(D);
  // bulk density against the bulk variation at a different point, both orders
  eng.double_var(P_BB, h, ivw, 1.0, acc);
  eng.double_var(h, P_BB, ivw, 1.0, acc);
  // bulk density with a barred leg varied at the same point
  eng.single_var(P_BB, bulk_density_var(s, p), 1.0, acc);
  // bulk density against the boundary-matrix variation
  eng.single_var(h, by, 1.0, acc);
  // boundary operators against the bulk variation at a different point
  KronSum bnd = barrier_op(s, p);
  for (const auto& t : penalty_op(s, p).terms) bnd.terms.push_back(t);
  for (const auto& t : mixed_op(s, p).terms) bnd.terms.push_back(t);
  eng.single_var(bnd, ivw, 1.0, acc);
  // boundary operators with their own barred legs varied
  eng.boundary_var(boundary_point_var(s, p), 1.0, acc);
  return {acc.V, acc.W, acc.Y, false};
}

}  // namespace ringtdvp
