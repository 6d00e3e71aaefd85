#include "ringtdvp/oracle.hpp"

#include "ringtdvp/weights.hpp"

#include <unsupported/Eigen/MatrixFunctions>
#include <fftw3.h>

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <random>

namespace ringtdvp {

FullSpectrum dense_spectrum(const CmpsState& s) {
  FullSpectrum fs;
  fs.D = s.D;
  fs.L = s.L;
  fs.T = dense_transfer_matrix(s.Q(), s.R);
  const int n = s.D * s.D;
  Eigen::ComplexEigenSolver<Mat> es(fs.T);
  if (es.info() != Eigen::Success) throw solver_error("dense_spectrum: eigensolver failed");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const auto& ev = es.eigenvalues();
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (ev(a).real() != ev(b).real()) return ev(a).real() > ev(b).real();
    return ev(a).imag() > ev(b).imag();
  });
  Mat V(n, n);
  fs.lam.resize(n);
  for (int k = 0; k < n; ++k) {
    fs.lam[k] = ev(idx[k]);
    V.col(k) = es.eigenvectors().col(idx[k]);
  }
  Mat Vinv = Eigen::PartialPivLU<Mat>(V).inverse();
  fs.r.resize(n);
  fs.l.resize(n);
  for (int k = 0; k < n; ++k) {
    fs.r[k] = unvec(Vec(V.col(k)), s.D);
    fs.l[k] = unvec(Vec(Vinv.row(k).adjoint()), s.D);
  }
  return fs;
}

namespace {

Eigen::MatrixXcd full_table(const FullSpectrum& fs, const KronSum& F) {
  const int n = fs.D * fs.D;
  Eigen::MatrixXcd t(n, n);
  for (int j = 0; j < n; ++j) {
    const Mat Fr = F.apply(fs.r[j]);
    for (int i = 0; i < n; ++i) t(i, j) = frob(fs.l[i], Fr);
  }
  return t;
}

// e^{x T} assembled from the full eigensystem.
struct Propagator {
  Mat Vr, Vl;
  std::vector<cxd> lam;
  Mat at(double x) const {
    Vec d(static_cast<Eigen::Index>(lam.size()));
    for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = std::exp(x * lam[k]);
    return Vr * d.asDiagonal() * Vl;
  }
};

Propagator make_propagator(const FullSpectrum& fs) {
  const int n = fs.D * fs.D;
  Propagator p;
  p.lam = fs.lam;
  p.Vr.resize(n, n);
  p.Vl.resize(n, n);
  for (int k = 0; k < n; ++k) {
    p.Vr.col(k) = vec(fs.r[k]);
    p.Vl.row(k) = vec(fs.l[k]).adjoint();
  }
  return p;
}

// Adaptive Gauss-Kronrod 15(7).
constexpr double kGkNodes[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                                0.741531185599394, 0.586087235467691, 0.405845151377397,
                                0.207784955007898, 0.0};
constexpr double kGkWeights[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                                  0.140653259715525, 0.169004726639267, 0.190350578064785,
                                  0.204432940075298, 0.209482141084728};
constexpr double kGaussWeights[4] = {0.129484966168870, 0.279705391489277,
                                     0.381830050505119, 0.417959183673469};

struct PanelResult {
  cxd k15;
  double err;
};

PanelResult gk15_panel(const std::function<cxd(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  cxd fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(c - h * kGkNodes[i]);
    fv[14 - i] = f(c + h * kGkNodes[i]);
  }
  fv[7] = f(c);
  cxd k15(0.0, 0.0), g7(0.0, 0.0);
  for (int i = 0; i < 7; ++i) k15 += kGkWeights[i] * (fv[i] + fv[14 - i]);
  k15 += kGkWeights[7] * fv[7];
  for (int i = 0; i < 3; ++i) g7 += kGaussWeights[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
  g7 += kGaussWeights[3] * fv[7];
  return {h * k15, std::abs(h * (k15 - g7))};
}

cxd gk15_adaptive(const std::function<cxd(double)>& f, double a, double b, double rel_tol) {
  PanelResult whole = gk15_panel(f, a, b);
  const double abs_tol = rel_tol * std::max(std::abs(whole.k15), 1e-300);
  std::function<cxd(double, double, const PanelResult&, int)> go =
      [&](double lo, double hi, const PanelResult& pr, int depth) -> cxd {
    if (pr.err <= abs_tol * (hi - lo) / (b - a) || depth > 40) return pr.k15;
    const double mid = 0.5 * (lo + hi);
    PanelResult left = gk15_panel(f, lo, mid);
    PanelResult right = gk15_panel(f, mid, hi);
    return go(lo, mid, left, depth + 1) + go(mid, hi, right, depth + 1);
  };
  return go(a, b, whole, 0);
}

}  // namespace

cxd ref_boundary(const FullSpectrum& fs, const KronSum& P) {
  const int n = fs.D * fs.D;
  cxd total(0.0, 0.0);
  for (int k = 0; k < n; ++k)
    total += std::exp(fs.L * fs.lam[k]) * frob(fs.l[k], P.apply(fs.r[k]));
  return total;
}

cxd ref_single(const FullSpectrum& fs, const KronSum& P, const KronSum& F) {
  const int n = fs.D * fs.D;
  const Eigen::MatrixXcd Pt = full_table(fs, P);
  const Eigen::MatrixXcd Ft = full_table(fs, F);
  cxd total(0.0, 0.0);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      total += weight_dq(fs.lam[u], fs.lam[v], fs.L) * Pt(v, u) * Ft(u, v);
  return total;
}

cxd ref_double(const FullSpectrum& fs, const KronSum& A, const KronSum& B, const KronSum& C) {
  const int n = fs.D * fs.D;
  const Eigen::MatrixXcd At = full_table(fs, A);
  const Eigen::MatrixXcd Bt = full_table(fs, B);
  const Eigen::MatrixXcd Ct = full_table(fs, C);
  cxd total(0.0, 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const cxd ab = Bt(a, b);
      for (int c = 0; c < n; ++c)
        total += weight_triple(fs.lam[a], fs.lam[b], fs.lam[c], fs.L) * At(c, a) * ab * Ct(b, c);
    }
  return total;
}

cxd ref_single_quad(const FullSpectrum& fs, const KronSum& P, const KronSum& F,
                    double rel_tol) {
  const Propagator pr = make_propagator(fs);
  const Mat Pd = P.dense(fs.D);
  const Mat Fd = F.dense(fs.D);
  auto f = [&](double x) -> cxd { return (pr.at(fs.L - x) * Pd * pr.at(x) * Fd).trace(); };
  return gk15_adaptive(f, 0.0, fs.L, rel_tol);
}

cxd ref_double_quad(const FullSpectrum& fs, const KronSum& A, const KronSum& B,
                    const KronSum& C, double rel_tol) {
  const Propagator pr = make_propagator(fs);
  const Mat Ad = A.dense(fs.D);
  const Mat Bd = B.dense(fs.D);
  const Mat Cd = C.dense(fs.D);
  auto outer = [&](double x) -> cxd {
    const Mat head = pr.at(x) * Ad;
    auto inner = [&](double y) -> cxd {
      return (head * pr.at(y - x) * Bd * pr.at(fs.L - y) * Cd).trace();
    };
    if (fs.L - x <= 0.0) return cxd(0.0, 0.0);
    return gk15_adaptive(inner, x, fs.L, 0.1 * rel_tol);
  };
  return gk15_adaptive(outer, 0.0, fs.L, rel_tol);
}

cxd ref_double_expm(const FullSpectrum& fs, const KronSum& A, const KronSum& B,
                    const KronSum& C) {
  const int n = fs.D * fs.D;
  Mat M = Mat::Zero(3 * n, 3 * n);
  M.block(0, 0, n, n) = fs.T;
  M.block(n, n, n, n) = fs.T;
  M.block(2 * n, 2 * n, n, n) = fs.T;
  M.block(0, n, n, n) = A.dense(fs.D);
  M.block(n, 2 * n, n, n) = B.dense(fs.D);
  const Mat E = (fs.L * M).exp();
  return (E.block(0, 2 * n, n, n) * C.dense(fs.D)).trace();
}

KronSum instantiate(const VarShape& var, const TangentVector& t) {
  if (t.reduced) throw dimension_error("instantiate: expects a full tangent");
  KronSum out;
  for (const auto& e : var.elems) {
    const Mat* z = e.slot == Slot::V ? &t.V : (e.slot == Slot::W ? &t.W : &t.Y);
    Mat b = *z;
    if (e.P.size() > 0) b = e.P * b;
    if (e.S.size() > 0) b = b * e.S;
    out.add(e.wbar, e.a, b);
  }
  return out;
}

namespace {

VarShape ivw_shape(const CmpsState& s) {
  VarShape v;
  v.add(1.0, Mat::Identity(s.D, s.D), Mat(), Mat(), Slot::V);
  v.add(1.0, s.R, Mat(), Mat(), Slot::W);
  return v;
}

VarShape by_shape(const CmpsState& s) {
  VarShape v;
  v.add(1.0, s.B, Mat(), Mat(), Slot::Y);
  return v;
}

KronSum boundary_sum(const CmpsState& s, const HamiltonianParams& p) {
  KronSum bnd = barrier_op(s, p);
  for (const auto& t : penalty_op(s, p).terms) bnd.terms.push_back(t);
  for (const auto& t : mixed_op(s, p).terms) bnd.terms.push_back(t);
  return bnd;
}

}  // namespace

cxd ref_ortho_overlap(const FullSpectrum& fs, const CmpsState& s, const TangentVector& t) {
  const KronSum P_BB(1.0, s.B, s.B);
  return ref_single(fs, P_BB, instantiate(ivw_shape(s), t)) +
         ref_boundary(fs, instantiate(by_shape(s), t));
}

cxd ref_gram_overlap(const FullSpectrum& fs, const CmpsState& s, const TangentVector& t1,
                     const TangentVector& t2) {
  const KronSum P_BB(1.0, s.B, s.B);
  KronSum vw2(1.0, t2.V, Mat::Identity(s.D, s.D));
  vw2.add(1.0, t2.W, s.R);
  const KronSum c1 = instantiate(ivw_shape(s), t1);
  cxd v = ref_double(fs, P_BB, vw2, c1) + ref_double(fs, vw2, P_BB, c1);
  v += ref_single(fs, P_BB, KronSum(1.0, t2.W, t1.W));
  v += ref_single(fs, vw2, KronSum(1.0, s.B, t1.Y));
  v += ref_single(fs, KronSum(1.0, t2.Y, s.B), c1);
  v += ref_boundary(fs, KronSum(1.0, t2.Y, t1.Y));
  return v;
}

cxd ref_grad_overlap(const FullSpectrum& fs, const CmpsState& s, const HamiltonianParams& p,
                     const TangentVector& t) {
  const KronSum P_BB(1.0, s.B, s.B);
  const KronSum h = hamiltonian_density_op(s, p);
  const KronSum ivw_t = instantiate(ivw_shape(s), t);
  cxd v = ref_double(fs, P_BB, h, ivw_t) + ref_double(fs, h, P_BB, ivw_t);
  v += ref_single(fs, P_BB, instantiate(bulk_density_var(s, p), t));
  v += ref_single(fs, h, KronSum(1.0, s.B, t.Y));
  v += ref_single(fs, boundary_sum(s, p), ivw_t);
  v += ref_boundary(fs, instantiate(boundary_point_var(s, p), t));
  return v;
}

double ref_energy(const FullSpectrum& fs, const CmpsState& s, const HamiltonianParams& p) {
  const KronSum P_BB(1.0, s.B, s.B);
  const double norm = ref_boundary(fs, P_BB).real();
  const double bulk = ref_single(fs, P_BB, hamiltonian_density_op(s, p)).real();
  const double bnd = ref_boundary(fs, boundary_sum(s, p)).real();
  return (bulk + bnd) / norm;
}

namespace {

TangentVector basis_tangent(int D, Slot slot, int i, int j) {
  TangentVector t = TangentVector::zero_full(D);
  Mat* z = slot == Slot::V ? &t.V : (slot == Slot::W ? &t.W : &t.Y);
  (*z)(i, j) = 1.0;
  return t;
}

TangentVector deterministic_tangent(int D, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  TangentVector t = TangentVector::zero_full(D);
  for (Mat* z : {&t.V, &t.W, &t.Y})
    for (int j = 0; j < D; ++j)
      for (int i = 0; i < D; ++i) (*z)(i, j) = cxd(g(rng), g(rng));
  return t;
}

// The 2-D quadrature cross-check is expensive; run it once per dimension per
// process (the block-expm check still runs on every call).
std::map<int, bool>& quad_checked() {
  static std::map<int, bool> m;
  return m;
}

}  // namespace

FullReference full_spectrum_reference(const CmpsState& s, const HamiltonianParams& p,
                                      bool build_gram_matrix) {
  if (s.D > 6) throw dimension_error("full_spectrum_reference: D must be <= 6");
  const int D = s.D;
  const int n = D * D;
  const FullSpectrum fs = dense_spectrum(s);
  FullReference out;
  const KronSum P_BB(1.0, s.B, s.B);
  out.norm = ref_boundary(fs, P_BB).real();

  out.y = TangentVector::zero_full(D);
  out.gradient = TangentVector::zero_full(D);
  const std::array<Slot, 3> slots = {Slot::V, Slot::W, Slot::Y};
  for (int sl = 0; sl < 3; ++sl)
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        const TangentVector e = basis_tangent(D, slots[sl], i, j);
        const cxd yv = ref_ortho_overlap(fs, s, e);
        const cxd gv = ref_grad_overlap(fs, s, p, e);
        Mat* ym = sl == 0 ? &out.y.V : (sl == 1 ? &out.y.W : &out.y.Y);
        Mat* gm = sl == 0 ? &out.gradient.V : (sl == 1 ? &out.gradient.W : &out.gradient.Y);
        (*ym)(i, j) = yv;
        (*gm)(i, j) = gv;
      }

  if (build_gram_matrix) {
    out.gram.resize(3 * n, 3 * n);
    for (int J = 0; J < 3 * n; ++J) {
      const TangentVector ej = basis_tangent(D, slots[J / n], (J % n) % D, (J % n) / D);
      for (int I = 0; I < 3 * n; ++I) {
        const TangentVector ei = basis_tangent(D, slots[I / n], (I % n) % D, (I % n) / D);
        out.gram(I, J) = ref_gram_overlap(fs, s, ei, ej);
      }
    }
  }

  // Self-certification: the closed-form sums must agree with block-expm
  // evaluation of the double integral and with direct quadrature.
  const TangentVector tcheck = deterministic_tangent(D, 0xC0FFEEu);
  KronSum vw_t(1.0, tcheck.V, Mat::Identity(D, D));
  vw_t.add(1.0, tcheck.W, s.R);
  const KronSum ivw_t = instantiate(ivw_shape(s), tcheck);
  const KronSum h = hamiltonian_density_op(s, p);
  auto rel = [](cxd a, cxd b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
  };
  double worst = 0.0;
  worst = std::max(worst, rel(ref_double(fs, P_BB, vw_t, ivw_t),
                              ref_double_expm(fs, P_BB, vw_t, ivw_t)));
  worst = std::max(worst, rel(ref_double(fs, P_BB, h, ivw_t),
                              ref_double_expm(fs, P_BB, h, ivw_t)));
  if (!quad_checked()[D]) {
    worst = std::max(worst, rel(ref_single(fs, P_BB, h), ref_single_quad(fs, P_BB, h)));
    worst = std::max(worst, rel(ref_double(fs, P_BB, vw_t, ivw_t),
                                ref_double_quad(fs, P_BB, vw_t, ivw_t)));
    if (worst < 1e-8) quad_checked()[D] = true;
  }
  out.self_check_error = worst;
  out.certified = worst < 1e-8;
  return out;
}

double fd_directional(const CmpsState& s, const HamiltonianParams& p,
                      const TangentVector& direction_reduced, double h) {
  if (!direction_reduced.reduced)
    throw dimension_error("fd_directional: expects a reduced direction");
  const CmpsState sp = advance_state(s, direction_reduced, h);
  const CmpsState sm = advance_state(s, direction_reduced, -h);
  const double ep = ref_energy(dense_spectrum(sp), sp, p);
  const double em = ref_energy(dense_spectrum(sm), sm, p);
  return (ep - em) / (2.0 * h);
}

GpState gp_ground_state(double c, double U0, double Omega, double L, double n_particles,
                        int n_grid, int max_steps, double dtau) {
  if (n_grid < 256) throw std::invalid_argument("gp_ground_state: n_grid must be >= 256");
  GpState gp;
  gp.n = n_grid;
  gp.L = L;
  const double dx = L / n_grid;
  const double k_rot = 2.0 * M_PI * Omega / L;
  Eigen::VectorXd V(n_grid);
  V.setZero();
  V(0) = U0 / dx;  // single-cell top-hat, integrated weight U0
  Eigen::VectorXd k2(n_grid);
  for (int j = 0; j < n_grid; ++j) {
    const int f = j < n_grid / 2 ? j : j - n_grid;
    const double k = 2.0 * M_PI * f / L;
    k2(j) = (k - k_rot) * (k - k_rot);
  }
  const double rho0 = n_particles / L;
  if (dtau <= 0.0) dtau = 0.05 / std::max({1.0, 2.0 * c * rho0, U0 / dx * 0.05});

  Eigen::VectorXcd psi = Eigen::VectorXcd::Constant(n_grid, std::sqrt(rho0));
  // seed a dip at the barrier so relaxation does not start on an unstable ridge
  for (int j = 0; j < n_grid; ++j) {
    const double x = j * dx;
    const double d = std::min(x, L - x);
    psi(j) *= 1.0 - 0.5 * std::exp(-d * d);
  }

  fftw_complex* buf = reinterpret_cast<fftw_complex*>(psi.data());
  fftw_plan fwd = fftw_plan_dft_1d(n_grid, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_plan bwd = fftw_plan_dft_1d(n_grid, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);

  auto normalize = [&]() {
    const double nn = psi.squaredNorm() * dx;
    psi *= std::sqrt(n_particles / nn);
  };
  auto energies = [&](double& kin, double& pot, double& inter) {
    Eigen::VectorXcd tmp = psi;
    fftw_complex* tb = reinterpret_cast<fftw_complex*>(tmp.data());
    fftw_plan pf = fftw_plan_dft_1d(n_grid, tb, tb, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(pf);
    fftw_destroy_plan(pf);
    kin = 0.0;
    for (int j = 0; j < n_grid; ++j) kin += k2(j) * std::norm(tmp(j));
    kin *= dx / n_grid;
    pot = 0.0;
    inter = 0.0;
    for (int j = 0; j < n_grid; ++j) {
      const double d = std::norm(psi(j));
      pot += V(j) * d;
      inter += c * d * d;
    }
    pot *= dx;
    inter *= dx;
  };

  normalize();
  double kin, pot, inter;
  energies(kin, pot, inter);
  double e_prev = kin + pot + inter;
  gp.converged = false;
  const int relax_steps = std::min(max_steps, 20000);
  for (int step = 0; step < relax_steps; ++step) {
    // Strang split: half potential, full kinetic, half potential
    for (int j = 0; j < n_grid; ++j)
      psi(j) *= std::exp(-0.5 * dtau * (V(j) + 2.0 * c * std::norm(psi(j))));
    fftw_execute(fwd);
    for (int j = 0; j < n_grid; ++j) psi(j) *= std::exp(-dtau * k2(j)) / double(n_grid);
    fftw_execute(bwd);
    for (int j = 0; j < n_grid; ++j)
      psi(j) *= std::exp(-0.5 * dtau * (V(j) + 2.0 * c * std::norm(psi(j))));
    normalize();
    if (step % 50 == 49) {
      energies(kin, pot, inter);
      const double e = kin + pot + inter;
      if (std::abs(e - e_prev) < 1e-10 * std::max(1.0, std::abs(e))) break;
      e_prev = e;
    }
  }
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);

  // Polish by self-consistent diagonalization: psi is the lowest eigenvector
  // of K + V + 2c|psi|^2, which drives the discrete residual to round-off.
  {
    // kinetic matrix K(a,b) = kernel(a-b), kernel = inverse DFT of (k-k_rot)^2
    Eigen::VectorXcd kernel(n_grid);
    for (int j = 0; j < n_grid; ++j) kernel(j) = k2(j);
    fftw_complex* kb = reinterpret_cast<fftw_complex*>(kernel.data());
    fftw_plan pk = fftw_plan_dft_1d(n_grid, kb, kb, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(pk);
    fftw_destroy_plan(pk);
    kernel /= double(n_grid);
    Mat K(n_grid, n_grid);
    for (int b = 0; b < n_grid; ++b)
      for (int a = 0; a < n_grid; ++a) K(a, b) = kernel(((a - b) % n_grid + n_grid) % n_grid);
    Eigen::VectorXd rho = psi.cwiseAbs2();
    for (int it = 0; it < 80; ++it) {
      Mat H = K;
      for (int j = 0; j < n_grid; ++j) H(j, j) += V(j) + 2.0 * c * rho(j);
      Eigen::SelfAdjointEigenSolver<Mat> es(H);
      if (es.info() != Eigen::Success)
        throw solver_error("gp_ground_state: eigensolver failed");
      psi = es.eigenvectors().col(0);
      psi *= std::sqrt(n_particles / (psi.squaredNorm() * dx));
      const Eigen::VectorXd rho_new = psi.cwiseAbs2();
      const double delta = (rho_new - rho).cwiseAbs().maxCoeff() /
                           std::max(rho_new.maxCoeff(), 1e-300);
      rho = 0.5 * (rho + rho_new);
      if (delta < 1e-13) break;
    }
  }

  energies(kin, pot, inter);
  gp.energy = kin + pot + inter;
  gp.mu = (kin + pot + 2.0 * inter) / n_particles;
  // residual of the stationary equation H psi = mu psi
  {
    Eigen::VectorXcd tmp = psi;
    fftw_complex* tb = reinterpret_cast<fftw_complex*>(tmp.data());
    fftw_plan pf = fftw_plan_dft_1d(n_grid, tb, tb, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(pf);
    for (int j = 0; j < n_grid; ++j) tmp(j) *= k2(j) / double(n_grid);
    fftw_plan pb = fftw_plan_dft_1d(n_grid, tb, tb, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(pb);
    fftw_destroy_plan(pf);
    fftw_destroy_plan(pb);
    double r2 = 0.0, h2 = 0.0;
    for (int j = 0; j < n_grid; ++j) {
      const cxd hpsi = tmp(j) + (V(j) + 2.0 * c * std::norm(psi(j))) * psi(j);
      r2 += std::norm(hpsi - gp.mu * psi(j));
      h2 += std::norm(hpsi);
    }
    gp.residual = std::sqrt(r2 / std::max(h2, 1e-300));
  }
  gp.converged = gp.residual <= 1e-8;
  gp.psi = psi;
  gp.density = psi.cwiseAbs2();
  return gp;
}

namespace {

Vec stack_tangent(const TangentVector& t) {
  const Eigen::Index n = t.V.size();
  Vec v(3 * n);
  v.segment(0, n) = vec(t.V);
  v.segment(n, n) = vec(t.W);
  v.segment(2 * n, n) = vec(t.Y);
  return v;
}

double rel_vec_err(const Vec& a, const Vec& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

struct CheckQuantities {
  double norm_err, y_err, gram_err, grad_err;
  double worst() const { return std::max({norm_err, y_err, gram_err, grad_err}); }
};

CheckQuantities compare_once(const CmpsState& s, const HamiltonianParams& p,
                             const FullReference& ref, const TangentVector& t2) {
  const SpectralData spec = spectral_decompose(s, 1e-12);
  TangentSpace ts(s, spec);
  CheckQuantities q{};
  q.norm_err = std::abs(ts.norm() - ref.norm) / std::abs(ref.norm);
  q.y_err = rel_vec_err(stack_tangent(ts.ortho_vector()), stack_tangent(ref.y));
  const Vec gt_prod = stack_tangent(ts.gram_apply(t2));
  const Vec gt_ref = ref.gram * stack_tangent(t2);
  q.gram_err = rel_vec_err(gt_prod, gt_ref);
  q.grad_err = rel_vec_err(stack_tangent(gradient(s, spec, p)), stack_tangent(ref.gradient));
  return q;
}

}  // namespace

OracleCheckResult oracle_check(int D, std::uint64_t seed, double tol) {
  OracleCheckResult res;
  const double L = 5.0;
  HamiltonianParams p;
  p.c = 1.0;
  p.mu = 0.5;
  p.U0 = 1.3;
  p.Omega = 0.3;
  p.eps = 0.05;
  const CmpsState s = make_state(D, L, InitMode::Random, seed);
  const FullReference ref = full_spectrum_reference(s, p, true);
  if (!ref.certified) {
    res.pass = false;
    res.worst = ref.self_check_error;
    res.worst_name = "oracle_self_check";
    res.errors.push_back({"oracle_self_check", ref.self_check_error});
    return res;
  }
  const TangentVector t2 = deterministic_tangent(D, seed ^ 0x9E3779B97F4A7C15ull);
  const CheckQuantities q = compare_once(s, p, ref, t2);
  res.errors = {{"norm", q.norm_err},
                {"y_vector", q.y_err},
                {"gram_action", q.gram_err},
                {"gradient", q.grad_err}};
  res.worst = 0.0;
  for (const auto& [name, err] : res.errors)
    if (err > res.worst) {
      res.worst = err;
      res.worst_name = name;
    }
  res.pass = res.worst <= tol;
  if (!res.pass) {
    // If a single scaled contraction row explains the mismatch (fault
    // injection hook), identify it by resetting rows one at a time.
    for (const auto& row : contraction_row_names()) {
      const double saved = term_scale(row);
      if (saved == 1.0) continue;
      set_term_scale(row, 1.0);
      const bool fixed = compare_once(s, p, ref, t2).worst() <= tol;
      set_term_scale(row, saved);
      if (fixed) {
        res.offending_row = row;
        break;
      }
    }
  }
  return res;
}

}  // namespace ringtdvp
