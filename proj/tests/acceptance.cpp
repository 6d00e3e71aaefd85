// End-to-end acceptance checks for the ring ground-state and time-evolution
// engine. Each numbered criterion prints exactly one PASS/FAIL line; the
// process exits nonzero if any criterion fails, except for the documented
// expected failure in criterion 5 (see the note there).
//
// Usage: acceptance [ids...]   e.g. `acceptance 1 4 12` runs a subset.
// Heavy optional extensions (full-size variants of 8 and 10) run only when
// RINGTDVP_ACCEPT_FULL is set in the environment.

#include "ringtdvp/experiments.hpp"
#include "ringtdvp/observables.hpp"
#include "ringtdvp/oracle.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstdlib>
#include <fstream>
#include <random>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace ringtdvp;

namespace {

struct Outcome {
  bool pass = false;
  bool expected_fail = false;  // red, but analyzed as unattainable
  std::string detail;
  std::vector<std::string> notes;  // extra analysis lines
};

int g_hard_failures = 0;

void report(const std::string& id, const std::string& label, const Outcome& o, double secs) {
  const char* verdict = o.pass ? "PASS" : (o.expected_fail ? "FAIL (expected)" : "FAIL");
  std::printf("[%3s] %-15s %s — %s [%.1fs]\n", id.c_str(), verdict, label.c_str(),
              o.detail.c_str(), secs);
  for (const auto& n : o.notes) std::printf("      | %s\n", n.c_str());
  std::fflush(stdout);
  if (!o.pass && !o.expected_fail) ++g_hard_failures;
}

Mat random_mat(int D, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Mat m(D, D);
  for (int j = 0; j < D; ++j)
    for (int i = 0; i < D; ++i) m(i, j) = cxd(g(rng), g(rng));
  return m;
}

TangentVector random_full(int D, std::mt19937_64& rng, double scale = 1.0) {
  return {random_mat(D, rng, scale), random_mat(D, rng, scale), random_mat(D, rng, scale),
          false};
}

TangentVector random_reduced(int D, std::mt19937_64& rng, double scale = 1.0) {
  TangentVector t = TangentVector::zero_reduced(D);
  t.W = random_mat(D, rng, scale);
  t.Y = random_mat(D, rng, scale);
  return t;
}

Vec stack_full(const TangentVector& t) {
  const int n = int(t.W.rows()) * int(t.W.cols());
  Vec v(3 * n);
  v.segment(0, n) = vec(t.V);
  v.segment(n, n) = vec(t.W);
  v.segment(2 * n, n) = vec(t.Y);
  return v;
}

TangentVector basis_full(int D, int slot, int i, int j) {
  TangentVector t = TangentVector::zero_full(D);
  Mat* m = slot == 0 ? &t.V : (slot == 1 ? &t.W : &t.Y);
  (*m)(i, j) = 1.0;
  return t;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: production norm, overlap vector, Gram action, and gradient
// match the full-spectrum reference to <= 1e-8 relative for 20 random states
// at each D in {1,2,3,4} and L in {1,5,20}, with tol = 1e-12 in the cutoffs.
Outcome criterion_1() {
  HamiltonianParams p;
  p.c = 1.0;
  p.mu = 0.5;
  p.U0 = 1.3;
  p.Omega = 0.3;
  p.eps = 0.05;
  double worst = 0.0;
  std::string worst_what;
  for (int D : {1, 2, 3, 4})
    for (double L : {1.0, 5.0, 20.0})
      for (int k = 0; k < 20; ++k) {
        const std::uint64_t seed = 1000 * D + 100 * std::uint64_t(L) + k;
        const CmpsState s = make_state(D, L, InitMode::Random, seed);
        const FullReference ref = full_spectrum_reference(s, p, /*build_gram_matrix=*/false);
        if (!ref.certified)
          return {false, false,
                  fmt("reference self-check failed at D=%d L=%g (err %.2e)", D, L,
                      ref.self_check_error)};
        const SpectralData sp = spectral_decompose(s, 1e-12);
        auto track = [&](double err, const char* what) {
          if (err > worst) {
            worst = err;
            worst_what = fmt("%s at D=%d L=%g k=%d", what, D, L, k);
          }
        };
        track(std::abs(state_norm(s, sp) - ref.norm) / std::abs(ref.norm), "norm");
        const Vec y_ref = stack_full(ref.y);
        track((stack_full(ortho_vector(s, sp)) - y_ref).norm() / y_ref.norm(), "y_vector");
        const Vec g_ref = stack_full(ref.gradient);
        track((stack_full(gradient(s, sp, p)) - g_ref).norm() / g_ref.norm(), "gradient");
        // Gram action on one random tangent, component-by-component against
        // reference pairings with the full basis
        std::mt19937_64 rng(seed ^ 0xABCDEFull);
        const TangentVector t = random_full(D, rng);
        const Vec gt_prod = stack_full(gram_apply(s, sp, t));
        FullSpectrum fs = dense_spectrum(s);
        Vec gt_ref(3 * D * D);
        int idx = 0;
        for (int slot = 0; slot < 3; ++slot)
          for (int j = 0; j < D; ++j)
            for (int i = 0; i < D; ++i)
              gt_ref(idx++) = ref_gram_overlap(fs, s, basis_full(D, slot, i, j), t);
        // stack_full uses column-major vec per slot; match that ordering
        track((gt_prod - gt_ref).norm() / gt_ref.norm(), "gram_action");
      }
  Outcome o;
  o.pass = worst <= 1e-8;
  o.detail = fmt("worst rel err %.2e (%s); tol 1e-8, 240 states", worst, worst_what.c_str());
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 2: pure gauge directions ([X,Q],[X,R],[X,B]) are annihilated by
// the Gram operator to 1e-9 of its norm estimate, and the dense reference
// Gram at D in {2,3,4} has exactly D^2 near-zero singular values.
Outcome criterion_2() {
  double worst_ratio = 0.0;
  std::string null_counts;
  for (int D : {2, 3, 4}) {
    const CmpsState s = make_state(D, 5.0, InitMode::Random, 7 * D + 1);
    const SpectralData sp = spectral_decompose(s, 1e-12);
    // operator-norm estimate of G by power iteration
    std::mt19937_64 rng(99 + D);
    TangentVector v = random_full(D, rng);
    double g_norm = 0.0;
    for (int it = 0; it < 25; ++it) {
      v = gram_apply(s, sp, v);
      g_norm = tangent_norm(v);
      v = tangent_scale(1.0 / g_norm, v);
    }
    const Mat Q = s.Q();
    for (int k = 0; k < 10; ++k) {
      const Mat X = random_mat(D, rng);
      TangentVector tx{comm(X, Q), comm(X, s.R), comm(X, s.B), false};
      const double tn = tangent_norm(tx);
      const double gn = tangent_norm(gram_apply(s, sp, tx));
      worst_ratio = std::max(worst_ratio, gn / (g_norm * tn));
    }
    // dense reference Gram singular values
    HamiltonianParams p;
    p.c = 1.0;
    p.mu = 0.5;
    p.U0 = 1.3;
    p.Omega = 0.3;
    p.eps = 0.05;
    const FullReference ref = full_spectrum_reference(s, p, /*build_gram_matrix=*/true);
    Eigen::JacobiSVD<Mat> svd(ref.gram);
    const auto& sv = svd.singularValues();
    int n_null = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) < 1e-9 * sv(0)) ++n_null;
    null_counts += fmt("%sD=%d:%d/%d", null_counts.empty() ? "" : " ", D, n_null, D * D);
    if (n_null != D * D)
      return {false, false,
              fmt("dense Gram at D=%d has %d near-null singular values, expected %d", D,
                  n_null, D * D)};
  }
  Outcome o;
  o.pass = worst_ratio <= 1e-9;
  o.detail = fmt("worst |G t_gauge| / (|G| |t|) = %.2e (tol 1e-9); null counts %s",
                 worst_ratio, null_counts.c_str());
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 3: analytic directional derivative 2 Re<t, g - E y>/norm matches
// central finite differences (h = 1e-5) to 1e-6 relative on 20 random
// (state, direction) pairs at D = 3.
Outcome criterion_3() {
  HamiltonianParams p;
  p.c = 1.0;
  p.mu = 0.5;
  p.U0 = 1.3;
  p.Omega = 0.3;
  p.eps = 0.05;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const CmpsState s = make_state(3, 5.0, InitMode::Random, 300 + k);
    const SpectralData sp = spectral_decompose(s, 1e-12);
    const EnergyBreakdown e = energy(s, sp, p);
    const TangentVector g = gradient(s, sp, p);
    const TangentVector y = ortho_vector(s, sp);
    std::mt19937_64 rng(7000 + k);
    const TangentVector dir = random_reduced(3, rng, 0.5);
    const double fd = fd_directional(s, p, dir, 1e-5);
    const TangentVector gm = tangent_axpy(-e.total, y, g);
    const double an = 2.0 * tangent_dot(expand(s, dir), gm).real() / e.norm;
    worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
  }
  Outcome o;
  o.pass = worst <= 1e-6;
  o.detail = fmt("worst rel err %.2e over 20 pairs (h=1e-5, tol 1e-6)", worst);
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 4: the identity tangent (1, 0, 0) pairs with the overlap vector
// to L * <Psi|Psi>, to 1e-10 relative.
Outcome criterion_4() {
  double worst = 0.0;
  for (int D : {1, 2, 3, 4})
    for (double L : {1.0, 5.0, 20.0})
      for (int k = 0; k < 5; ++k) {
        const CmpsState s = make_state(D, L, InitMode::Random, 4000 + 100 * D + k);
        const SpectralData sp = spectral_decompose(s, 1e-12);
        TangentVector id = TangentVector::zero_full(D);
        id.V = Mat::Identity(D, D);
        const cxd lhs = tangent_dot(id, ortho_vector(s, sp));
        const double rhs = L * state_norm(s, sp);
        worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
      }
  Outcome o;
  o.pass = worst <= 1e-10;
  o.detail = fmt("worst rel err %.2e over 60 states (tol 1e-10)", worst);
  return o;
}

// ---------------------------------------------------------------------------
// Shared heavy-solve helpers.

// Particle-number tolerance for the physics criteria: the observables compared
// downstream (densities at the percent level, current amplitudes) do not
// resolve N beyond ~1e-3, and the inner solver's own N resolution at the
// gradient tolerances used here is of the same order.
constexpr double kNTol = 1e-4;

// Chemical-potential seed from the homogeneous-gas limits: mu = 2 c rho for
// weak coupling, mu = pi^2 rho^2 for impenetrable bosons, bridged by a simple
// interpolation that is exact in both limits. The tuner only needs a
// same-order starting point.
double mu_seed(double gamma, double rho) {
  const double weak = 2.0 * gamma;
  const double strong = M_PI * M_PI * gamma * gamma / ((gamma + 2.0) * (gamma + 2.0));
  return rho * rho * std::min(weak, strong);
}

// Tuned ground-state solutions shared between criteria (the rotation and
// interaction scans revisit the same parameter points); every user falls back
// to a cold start when the cache is empty, so criteria stay independently
// runnable.
struct CachedSolve {
  CmpsState state;
  double mu = 0.0;
  bool ready = false;
};
std::map<std::string, CachedSolve> g_cache;

void cache_put(const std::string& key, const GroundStateResult& r, double mu) {
  g_cache[key] = {r.state, mu, true};
}

GroundStateResult ladder_tuned(HamiltonianParams& p, double L, const std::vector<int>& Ds,
                               double n_target, const OptimizerOptions& opt,
                               std::uint64_t seed) {
  CmpsState s0 = make_state(Ds.front(), L, InitMode::Random, seed);
  {
    const SpectralData sp = spectral_decompose(s0, opt.spectral_tol);
    const double n0 = particle_number(s0, sp);
    if (n0 > 0.0) s0.R *= std::min(10.0, std::sqrt(n_target / n0));
  }
  GroundStateResult r = tune_mu(s0, p, n_target, opt, kNTol);
  for (size_t i = 1; i < Ds.size(); ++i) {
    CmpsState big = enlarge_state(r.state, Ds[i], 1e-3, seed + 17 * i);
    r = tune_mu(big, p, n_target, opt, kNTol);
  }
  return r;
}

// Ground-state energies E(Omega) on a grid, warm-started along the chain.
std::vector<double> energy_curve(const CmpsState& start, HamiltonianParams p,
                                 const std::vector<double>& omegas,
                                 const OptimizerOptions& opt, std::vector<CmpsState>* states) {
  std::vector<double> out;
  CmpsState warm = start;
  for (double om : omegas) {
    p.Omega = om;
    GroundStateResult r = cg_ground_state(warm, p, opt);
    warm = r.state;
    out.push_back(r.e.total);
    if (states) states->push_back(r.state);
  }
  return out;
}

// Current amplitude alpha = max |I(Omega)| over [0, 1/2] in units of
// I0 = 4 pi / L^2, exploiting E(-Omega) = E(Omega) and periodicity for the
// central differences at the interval ends.
double sweep_alpha(const CmpsState& start, const HamiltonianParams& p, double L,
                   const OptimizerOptions& opt, std::vector<double>* curve = nullptr) {
  const double h = 0.1;
  std::vector<double> omegas;
  for (int k = 0; k <= 5; ++k) omegas.push_back(h * k);
  const std::vector<double> E = energy_curve(start, p, omegas, opt, nullptr);
  if (curve) *curve = E;
  const double I0 = current_unit(L);
  double alpha = 0.0;
  for (int k = 0; k <= 5; ++k) {
    const double e_lo = k == 0 ? E[1] : E[k - 1];          // E(-h) = E(h)
    const double e_hi = k == 5 ? E[4] : E[k + 1];          // E(0.6) = E(0.4)
    const double I = -(e_hi - e_lo) / (2.0 * h) / (2.0 * M_PI) / I0;
    alpha = std::max(alpha, std::abs(I));
  }
  return alpha;
}

OptimizerOptions heavy_opts(double grad_tol = 1e-7, int max_iters = 12000) {
  OptimizerOptions opt;
  opt.grad_tol = grad_tol;
  opt.max_iters = max_iters;
  return opt;
}

// ---------------------------------------------------------------------------
// Criterion 5: classical-field limit at gamma = 0.03, N = 18, L = 120,
// lambda = 19.1, Omega = 0. Part (a): the D = 1 density must match the
// classical ring solver pointwise to 1e-4 relative. Part (b): the D = 4
// density must be within 2% max deviation (relative to the density peak).
//
// Part (a) is an expected failure: a D = 1 state has exactly uniform density
// (all matrices are scalars, so rho(x) = |R|^2 everywhere), while the
// classical profile dips by two orders of magnitude at the barrier. The
// pointwise-relative bar of 1e-4 is therefore unreachable in principle; the
// line below reports the measured deviation rather than skipping the run.
Outcome criterion_5() {
  const double L = 120.0, N = 18.0, rho = N / L;
  HamiltonianParams p;
  p.c = 0.03 * rho;
  p.U0 = u0_from_lambda(19.1, L);
  p.Omega = 0.0;
  p.eps = 2.5e-3;
  const GpState gp = gp_ground_state(p.c, p.U0, 0.0, L, N, 512);
  if (!gp.converged) return {false, false, "classical reference solver did not converge"};
  p.mu = gp.mu;  // the classical solver's chemical potential seeds the tuner
  auto gp_at = [&](double x) {
    return gp.density(int(std::lround(x / (L / gp.n))) % gp.n);
  };

  OptimizerOptions opt = heavy_opts(1e-9, 4000);
  // (a) D = 1
  HamiltonianParams p1 = p;
  GroundStateResult r1 = ladder_tuned(p1, L, {1}, N, opt, 51);
  const SpectralData sp1 = spectral_decompose(r1.state, 1e-12);
  ObservableSeries prof1 = density_profile(r1.state, sp1, 512);
  double worst_rel = 0.0;
  for (size_t i = 0; i < prof1.x_grid.size(); ++i)
    worst_rel = std::max(worst_rel, std::abs(prof1.density[i] - gp_at(prof1.x_grid[i])) /
                                        gp_at(prof1.x_grid[i]));
  const bool pass_a = worst_rel <= 1e-4;

  // (b) D = 4 via a warm-started ladder
  HamiltonianParams p4 = p;
  OptimizerOptions opt4 = heavy_opts(1e-7, 12000);
  GroundStateResult r4 = ladder_tuned(p4, L, {2, 4}, N, opt4, 5);
  cache_put("D4_g0.03_l19.1", r4, p4.mu);
  const SpectralData sp4 = spectral_decompose(r4.state, 1e-12);
  ObservableSeries prof4 = density_profile(r4.state, sp4, 512);
  const double peak = gp.density.maxCoeff();
  double worst_dev = 0.0;
  for (size_t i = 0; i < prof4.x_grid.size(); ++i)
    worst_dev = std::max(worst_dev,
                         std::abs(prof4.density[i] - gp_at(prof4.x_grid[i])) / peak);
  const bool pass_b = worst_dev <= 0.02;

  Outcome o;
  o.pass = pass_a && pass_b;
  o.expected_fail = !pass_a && pass_b && worst_rel > 1.0;
  o.detail = fmt("D=1 pointwise rel dev %.3g (tol 1e-4, %s); D=4 max dev %.4f of peak "
                 "(tol 0.02, %s)",
                 worst_rel, pass_a ? "pass" : "fail", worst_dev, pass_b ? "pass" : "fail");
  if (!pass_a)
    o.notes.push_back(fmt(
        "D=1 density is exactly uniform (%.4f) by construction; the classical profile dips "
        "to %.4f at the barrier, so the pointwise bar is unattainable at D=1.",
        prof1.density[0], gp.density(0)));
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 6: rotation structure at D = 4, gamma = 2.33, N = 18, L = 120,
// lambda = 9.5: E is 1-periodic and even in Omega within twice the solver
// energy tolerance; I(0) = 0 within differencing error; and the current
// amplitude at lambda = 9.5 exceeds the one at lambda = 38.2.
Outcome criterion_6() {
  const double L = 120.0, N = 18.0, rho = N / L;
  HamiltonianParams p;
  p.c = 2.33 * rho;
  p.U0 = u0_from_lambda(9.5, L);
  p.Omega = 0.0;
  p.eps = 2.5e-3;
  p.mu = mu_seed(2.33, rho);
  OptimizerOptions opt = heavy_opts(1e-7, 12000);
  GroundStateResult r0 = ladder_tuned(p, L, {2, 4}, N, opt, 5);
  cache_put("D4_g2.33_l9.5", r0, p.mu);

  // solver energy tolerance: with |grad| <= tol at convergence the residual
  // energy error is O(tol^2 / curvature); 1e-6 absolute is a generous bound
  // for these runs and the factor 2 comes from comparing two independent runs
  const double tol_e = 2.0 * 1e-6;
  auto solve_at = [&](double om, const CmpsState& warm) {
    HamiltonianParams q = p;
    q.Omega = om;
    return cg_ground_state(warm, q, opt);
  };
  const GroundStateResult rp = solve_at(0.3, r0.state);
  const GroundStateResult rper = solve_at(1.3, rp.state);
  const GroundStateResult rm = solve_at(-0.3, r0.state);
  const double d_period = std::abs(rp.e.total - rper.e.total);
  const double d_parity = std::abs(rp.e.total - rm.e.total);

  // I(0) from independently solved E(+-0.1): central difference of an even
  // function; the residual is differencing noise plus solver tolerance
  const GroundStateResult rq = solve_at(0.1, r0.state);
  const GroundStateResult rqm = solve_at(-0.1, r0.state);
  const double I0u = current_unit(L);
  const double I_zero =
      std::abs(-(rq.e.total - rqm.e.total) / (0.2 * 2.0 * M_PI) / I0u);

  const double alpha_95 = sweep_alpha(r0.state, p, L, opt);
  HamiltonianParams p38 = p;
  p38.U0 = u0_from_lambda(38.2, L);
  GroundStateResult r38 = tune_mu(r0.state, p38, N, opt, kNTol);
  const double alpha_382 = sweep_alpha(r38.state, p38, L, opt);

  // differencing error bound for I(0): tol_e / (2 pi h I0) with h = 0.1
  const double i_tol = tol_e / (0.2 * 2.0 * M_PI) / I0u;
  const bool ok = d_period <= tol_e && d_parity <= tol_e && I_zero <= i_tol &&
                  alpha_95 > alpha_382;
  Outcome o;
  o.pass = ok;
  o.detail = fmt("|E(.3)-E(1.3)|=%.1e |E(.3)-E(-.3)|=%.1e (tol %.0e); |I(0)|=%.2e "
                 "(tol %.1e); alpha(9.5)=%.3f > alpha(38.2)=%.3f: %s",
                 d_period, d_parity, tol_e, I_zero, i_tol, alpha_95, alpha_382,
                 alpha_95 > alpha_382 ? "yes" : "no");
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 7 (reduced bar, D = 4 <= 8, <= 1 hour): the current amplitude
// alpha(gamma) at lambda = 19.1, N = 18, L = 120 has an interior maximum over
// gamma in {0.03, 0.3, 2.33, 33}.
Outcome criterion_7() {
  const double L = 120.0, N = 18.0, rho = N / L;
  const std::vector<double> gammas = {0.03, 0.3, 2.33, 33.0};
  std::vector<double> alphas;
  std::string detail;
  OptimizerOptions opt = heavy_opts(1e-7, 12000);
  CmpsState warm;  // D = 4 solution of the previous gamma
  bool have_warm = false;
  for (double gamma : gammas) {
    HamiltonianParams p;
    p.c = gamma * rho;
    p.U0 = u0_from_lambda(19.1, L);
    p.Omega = 0.0;
    p.eps = 2.5e-3;
    p.mu = mu_seed(gamma, rho);
    GroundStateResult r;
    const std::string key = fmt("D4_g%g_l19.1", gamma);
    if (g_cache.count(key) && g_cache[key].ready) {
      p.mu = g_cache[key].mu;
      r = tune_mu(g_cache[key].state, p, N, opt, kNTol);
    } else if (have_warm) {
      // neighboring interaction strengths have similar states; retuning from
      // the previous solution is far cheaper than a fresh ladder
      r = tune_mu(warm, p, N, opt, kNTol);
    } else {
      r = ladder_tuned(p, L, {2, 4}, N, opt, 5);
    }
    warm = r.state;
    have_warm = true;
    alphas.push_back(sweep_alpha(r.state, p, L, opt));
    detail += fmt("%salpha(%g)=%.4f", detail.empty() ? "" : " ", gamma, alphas.back());
  }
  const auto it = std::max_element(alphas.begin(), alphas.end());
  const bool interior = it != alphas.begin() && it != alphas.end() - 1;
  Outcome o;
  o.pass = interior;
  o.detail = detail + (interior ? " — interior maximum" : " — maximum at an endpoint");
  return o;
}

// ---------------------------------------------------------------------------
// Criteria 8 and 9 share a chain of solves at L = 256, rho = 0.125 (N = 32),
// gamma = 80 (c = 10), Lambda = 4 (U0 = 1), Omega = 0.
struct StrongCouplingChain {
  HamiltonianParams p;
  GroundStateResult r8;  // D = 8 solution at eps = 2.5e-3
  bool ready = false;
};
StrongCouplingChain g_chain;

void build_chain(int D_top) {
  const double L = 256.0, N = 32.0;
  g_chain.p = HamiltonianParams{};
  g_chain.p.c = 10.0;
  g_chain.p.U0 = u0_from_Lambda(4.0, L, N);
  g_chain.p.Omega = 0.0;
  g_chain.p.eps = 2.5e-3;
  g_chain.p.mu = mu_seed(80.0, N / L);
  OptimizerOptions opt = heavy_opts(1e-7, 20000);
  std::vector<int> Ds;
  for (int d = 2; d <= D_top; d *= 2) Ds.push_back(d);
  g_chain.r8 = ladder_tuned(g_chain.p, L, Ds, N, opt, 5);
  g_chain.ready = true;
}

// Criterion 8: bulk energy density (kinetic + interaction, chemical-potential
// term added back) within 1e-4 of the published strong-coupling value 0.00632
// at D = 8; the full D = 16 variant (tolerance 5e-5 around 0.0063305) runs
// under RINGTDVP_ACCEPT_FULL.
Outcome criterion_8() {
  const bool full = std::getenv("RINGTDVP_ACCEPT_FULL") != nullptr;
  if (!g_chain.ready) build_chain(8);
  const double L = 256.0;
  const double e_bulk = (g_chain.r8.e.bulk + g_chain.r8.e.mu_times_n) / L;
  Outcome o;
  if (!full) {
    o.pass = std::abs(e_bulk - 0.00632) <= 1e-4;
    o.detail = fmt("D=8 bulk energy density %.7f vs 0.00632 (tol 1e-4 abs); N=%.4f "
                   "grad=%.1e",
                   e_bulk, g_chain.r8.e.n_particles, g_chain.r8.grad_norm);
  } else {
    HamiltonianParams p16 = g_chain.p;
    OptimizerOptions opt = heavy_opts(1e-7, 30000);
    CmpsState big = enlarge_state(g_chain.r8.state, 16, 1e-3, 161);
    GroundStateResult r16 = tune_mu(big, p16, 32.0, opt, kNTol);
    const double e16 = (r16.e.bulk + r16.e.mu_times_n) / L;
    o.pass = std::abs(e16 - 0.0063305) <= 5e-5;
    o.detail = fmt("D=16 bulk energy density %.7f vs 0.0063305 (tol 5e-5 abs); D=8 gave "
                   "%.7f",
                   e16, e_bulk);
  }
  return o;
}

// Criterion 9: at D = 8 the boundary energy and the boundary-matching
// residual are linear in eps over [1e-3, 1e-2] (linear-fit R^2 > 0.99), and
// the residual at eps = 2.5e-3 is <= 1e-6.
Outcome criterion_9() {
  if (!g_chain.ready) build_chain(8);
  OptimizerOptions opt = heavy_opts(1e-7, 20000);
  const std::vector<double> eps_grid = {1e-3, 2.5e-3, 5e-3, 7.5e-3, 1e-2};
  std::vector<double> e_boundary, resid;
  double resid_25 = 0.0;
  CmpsState warm = g_chain.r8.state;
  for (double eps : eps_grid) {
    HamiltonianParams q = g_chain.p;
    q.eps = eps;
    GroundStateResult r = cg_ground_state(warm, q, opt);
    warm = r.state;
    const SpectralData sp = spectral_decompose(r.state, 1e-12);
    const double rs = boundary_residual(r.state, sp, q.Omega);
    e_boundary.push_back(r.e.boundary);
    resid.push_back(rs);
    if (eps == 2.5e-3) resid_25 = rs;
  }
  const LineFit fe = fit_line(eps_grid, e_boundary);
  const LineFit fr = fit_line(eps_grid, resid);
  Outcome o;
  o.pass = fe.r_squared > 0.99 && fr.r_squared > 0.99 && resid_25 <= 1e-6;
  o.detail = fmt("R^2[E_boundary(eps)]=%.5f R^2[residual(eps)]=%.5f (tol > 0.99); "
                 "residual(2.5e-3)=%.2e (tol 1e-6)",
                 fe.r_squared, fr.r_squared, resid_25);
  o.notes.push_back(fmt("E_boundary: %.3e %.3e %.3e %.3e %.3e; residual: %.1e %.1e %.1e "
                        "%.1e %.1e",
                        e_boundary[0], e_boundary[1], e_boundary[2], e_boundary[3],
                        e_boundary[4], resid[0], resid[1], resid[2], resid[3], resid[4]));
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 10 (mandatory bar): the depletion-width fit machinery recovers a
// known power law from synthetic Gaussian-dip profiles to grid tolerance.
// The physical sigma(N) run (gamma = 33, lambda = 19.1, exponent -1.3 +- 0.3)
// is the stretch variant under RINGTDVP_ACCEPT_FULL.
Outcome criterion_10() {
  const std::vector<double> Ns = {18.0, 40.0, 60.0, 80.0};
  std::vector<double> logN, logS;
  const double L = 120.0;
  for (double N : Ns) {
    const double w = 3.0 * std::pow(N / 18.0, -1.3);
    const int n = 16384;
    ObservableSeries prof;
    for (int i = 0; i < n; ++i) {
      const double x = (i + 0.5) * L / n;
      const double d = std::min(x, L - x);
      prof.x_grid.push_back(x);
      prof.density.push_back(1.0 - 0.6 * std::exp(-d * d / (2.0 * w * w)));
    }
    logN.push_back(std::log(N));
    logS.push_back(std::log(depletion_width(prof)));
  }
  const LineFit fit = fit_line(logN, logS);
  Outcome o;
  o.pass = std::abs(fit.slope + 1.3) <= 0.02 && fit.r_squared > 0.999;
  o.detail = fmt("synthetic dip exponent %.4f vs -1.3 (tol 0.02, R^2=%.6f)", fit.slope,
                 fit.r_squared);

  if (std::getenv("RINGTDVP_ACCEPT_FULL") != nullptr) {
    std::vector<double> lN, lS;
    std::string widths;
    for (double N : Ns) {
      HamiltonianParams p;
      p.c = 33.0 * N / L;
      p.U0 = u0_from_lambda(19.1, L);
      p.Omega = 0.0;
      p.eps = 2.5e-3;
      p.mu = mu_seed(33.0, N / L);
      OptimizerOptions opt = heavy_opts(1e-7, 12000);
      GroundStateResult r = ladder_tuned(p, L, {2, 4}, N, opt, 5);
      const SpectralData sp = spectral_decompose(r.state, 1e-12);
      const double sigma = depletion_width(density_profile(r.state, sp, 1024));
      lN.push_back(std::log(N));
      lS.push_back(std::log(sigma));
      widths += fmt(" sigma(%g)=%.3f", N, sigma);
    }
    const LineFit phys = fit_line(lN, lS);
    const bool ok = std::abs(phys.slope + 1.3) <= 0.3;
    o.pass = o.pass && ok;
    o.notes.push_back(fmt("stretch: physical exponent %.3f (bar -1.3 +- 0.3)%s", phys.slope,
                          widths.c_str()));
  }
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 11: 100 real-time steps at dt = 1e-4 on a perturbed D = 2 ground
// state drift in norm and energy by <= 1e-6 relative, and halving dt over the
// same horizon reduces both drifts by >= 3x.
Outcome criterion_11() {
  const int D = 2;
  const double L = 5.0;
  HamiltonianParams p;
  p.c = 0.5;
  p.mu = 1.0;
  p.U0 = 0.4;
  p.Omega = 0.0;
  p.eps = 0.05;
  OptimizerOptions opt;
  opt.grad_tol = 1e-6;
  opt.max_iters = 3000;
  GroundStateResult r = cg_ground_state(make_state(D, L, InitMode::Random, 33), p, opt);
  if (!r.converged) return {false, false, "setup ground-state solve did not converge"};
  CmpsState s = r.state;
  std::mt19937_64 rng(777);
  s.R += 0.05 * random_mat(D, rng);
  {
    const SpectralData sp = spectral_decompose(s, 1e-12);
    s.B /= std::sqrt(state_norm(s, sp));
  }

  auto drift = [&](double dt, int n_steps, double* norm_drift) {
    CmpsState cur = s;
    const SpectralData sp0 = spectral_decompose(cur, 1e-12);
    const double n0 = state_norm(cur, sp0);
    const double e0 = energy(cur, sp0, p).total;  // already norm-independent
    for (int k = 0; k < n_steps; ++k) cur = tdvp_step(cur, p, dt, opt);
    const SpectralData sp1 = spectral_decompose(cur, 1e-12);
    const double n1 = state_norm(cur, sp1);
    const double e1 = energy(cur, sp1, p).total;
    *norm_drift = std::abs(n1 - n0) / n0;
    return std::abs(e1 - e0) / std::max(1.0, std::abs(e0));
  };
  double nd1 = 0.0, nd2 = 0.0;
  const double ed1 = drift(1e-4, 100, &nd1);
  const double ed2 = drift(5e-5, 200, &nd2);
  auto contracts = [](double a, double b) { return a < 1e-12 || b <= a / 3.0; };
  Outcome o;
  o.pass = ed1 <= 1e-6 && nd1 <= 1e-6 && contracts(ed1, ed2) && contracts(nd1, nd2);
  o.detail = fmt("energy drift %.2e -> %.2e, norm drift %.2e -> %.2e on dt halving "
                 "(tol 1e-6; >= 3x contraction)",
                 ed1, ed2, nd1, nd2);
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 12: every accepted step of a 500-step random-start imaginary-time
// run strictly decreases the energy.
Outcome criterion_12() {
  HamiltonianParams p;
  p.c = 0.5;
  p.mu = 1.0;
  p.U0 = 0.4;
  p.Omega = 0.0;
  p.eps = 0.05;
  OptimizerOptions opt;
  opt.grad_tol = 1e-14;  // unreachable: run the full step budget
  opt.max_iters = 500;
  const std::string trace = "/tmp/ringtdvp_accept_trace.csv";
  std::remove(trace.c_str());
  opt.trace_csv = trace;
  cg_ground_state(make_state(2, 6.0, InitMode::Random, 1234), p, opt);
  std::ifstream f(trace);
  if (!f.good()) return {false, false, "trace file missing"};
  std::string line;
  std::getline(f, line);  // header
  double prev = 1e300;
  int rows = 0, violations = 0;
  double worst_gap = 1e300;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    std::getline(ss, tok, ',');
    const double e = std::stod(tok);
    if (rows > 0) {
      if (!(e < prev)) ++violations;
      worst_gap = std::min(worst_gap, prev - e);
    }
    prev = e;
    ++rows;
  }
  std::remove(trace.c_str());
  Outcome o;
  o.pass = violations == 0 && rows >= 2;
  o.detail = fmt("%d accepted steps, %d monotonicity violations (smallest decrease %.2e)",
                 rows - 1, violations, worst_gap);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) only.insert(argv[i]);
  auto want = [&](const char* id) { return only.empty() || only.count(id) > 0; };

  struct Entry {
    const char* id;
    const char* label;
    Outcome (*fn)();
  };
  // cheap structural criteria first, then the heavy physics runs; 8 and 9
  // share a warm-start chain and run adjacently
  const Entry entries[] = {
      {"1", "oracle match", criterion_1},    {"2", "gauge kernel", criterion_2},
      {"3", "gradient fd", criterion_3},     {"4", "tangent identity", criterion_4},
      {"11", "real-time drift", criterion_11}, {"12", "monotone descent", criterion_12},
      {"10", "width-fit machinery", criterion_10}, {"5", "classical limit", criterion_5},
      {"8", "energy benchmark", criterion_8}, {"9", "eps scaling", criterion_9},
      {"6", "rotation structure", criterion_6}, {"7", "alpha(gamma) peak", criterion_7},
  };
  for (const Entry& e : entries) {
    if (!want(e.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.fn();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail = fmt("exception: %s", ex.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(e.id, e.label, o, secs);
  }
  std::printf("overall: %s\n", g_hard_failures == 0 ? "pass" : "FAIL");
  return g_hard_failures == 0 ? 0 : 1;
}
