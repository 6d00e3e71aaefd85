#include "ringtdvp/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>

namespace ringtdvp {

namespace {

double re_dot(const TangentVector& a, const TangentVector& b) {
  return tangent_dot(a, b).real();
}

// energy-only evaluation for line-search trials (no gradient, no Gram)
EnergyBreakdown trial_energy(const CmpsState& s, const HamiltonianParams& p,
                             const OptimizerOptions& opt) {
  const SpectralData spec = spectral_decompose(s, opt.spectral_tol);
  return energy(s, spec, p);
}

}  // namespace

FlowPoint evaluate_flow(const CmpsState& s, const HamiltonianParams& p,
                        const OptimizerOptions& opt) {
  FlowPoint fp;
  fp.spec = spectral_decompose(s, opt.spectral_tol);
  fp.e = energy(s, fp.spec, p);
  TangentSpace ts(s, fp.spec);
  const TangentVector y = ts.ortho_vector();
  const TangentVector g = gradient(s, fp.spec, p);
  const TangentVector ghat = tangent_axpy(-fp.e.total, y, g);
  fp.g_red = project_reduced(s, ghat);
  fp.y_red = project_reduced(s, y);
  return fp;
}

namespace {

Vec stack_reduced(const TangentVector& t) {
  const Eigen::Index n = t.W.size();
  Vec v(2 * n);
  v.segment(0, n) = vec(t.W);
  v.segment(n, n) = vec(t.Y);
  return v;
}

TangentVector unstack_reduced(const Vec& v, int D) {
  TangentVector t = TangentVector::zero_reduced(D);
  t.W = unvec(Vec(v.segment(0, D * D)), D);
  t.Y = unvec(Vec(v.segment(D * D, D * D)), D);
  return t;
}

// Eigendecomposition of the reduced Gram with Tikhonov damping: the operator
// is Hermitian PSD but its spectrum can be a gapless continuum spanning
// twelve orders of magnitude (freshly enlarged states couple the new bond
// directions only weakly), so no hard eigenvalue cutoff works — any clip
// either zeroes soft physical modes, stalling the optimizer, or amplifies
// numerical-null (residual gauge) components by 1e12 and derails the line
// search. Damping 1/(lambda + delta) bounds the amplification at 1/delta
// while still moving every mode. A factorization built at one state stays
// useful as a preconditioner for nearby states, so the optimizer reuses it
// across iterations with iterative refinement.
struct DenseGramFactor {
  Eigen::SelfAdjointEigenSolver<Mat> es;
  double damp = 0.0;
  double zero = 0.0;
  bool valid = false;
  int age = 0;

  void build(const std::function<TangentVector(const TangentVector&)>& A, int D) {
    const int n = 2 * D * D;
    Mat G(n, n);
    for (int j = 0; j < n; ++j) {
      Vec e = Vec::Zero(n);
      e(j) = 1.0;
      G.col(j) = stack_reduced(A(unstack_reduced(e, D)));
    }
    if (!G.allFinite()) throw solver_error("gram operator produced non-finite values");
    es.compute(0.5 * (G + G.adjoint()));
    if (es.info() != Eigen::Success) throw solver_error("gram factorization failed");
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    damp = std::max(top * 1e-10, 1e-300);
    // eigenvalues this far down are pure round-off (the residual gauge null
    // space); no displacement along them is ever meaningful
    zero = top * 1e-13;
    valid = true;
    age = 0;
  }

  TangentVector solve(const TangentVector& b, int D) const {
    Vec c = es.eigenvectors().adjoint() * stack_reduced(b);
    const Eigen::VectorXd& ev = es.eigenvalues();
    for (Eigen::Index k = 0; k < c.size(); ++k)
      c(k) = ev(k) > zero ? c(k) / (ev(k) + damp) : cxd(0.0, 0.0);
    return unstack_reduced(Vec(es.eigenvectors() * c), D);
  }
};

}  // namespace

TangentVector gram_solve(const CmpsState& s, const SpectralData& spec,
                         const TangentVector& b_red, const OptimizerOptions& opt) {
  if (!b_red.reduced) throw dimension_error("gram_solve: expects a reduced rhs");
  TangentSpace ts(s, spec, opt.contraction_tol_gram);
  auto A = [&](const TangentVector& x) {
    return project_reduced(s, ts.gram_apply(expand(s, x)));
  };
  const int D = s.D;
  if (2 * D * D <= 512) {
    DenseGramFactor fac;
    fac.build(A, D);
    TangentVector x = fac.solve(b_red, D);
    const double bn = tangent_norm(b_red);
    if (bn == 0.0) return x;
    // refine toward the exact solve; modes below the damping scale converge
    // geometrically slower, so stop once the residual stalls — what remains
    // lives in the numerically un-invertible part of the spectrum
    double rn_prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 40; ++k) {
      TangentVector r = tangent_axpy(-1.0, A(x), b_red);
      const double rn = tangent_norm(r);
      if (rn <= opt.gram_solve_tol * bn || rn >= 0.9 * rn_prev) break;
      rn_prev = rn;
      x = tangent_axpy(1.0, fac.solve(r, D), x);
    }
    return x;
  }
  const int max_it = opt.gram_solve_max > 0 ? opt.gram_solve_max : 8 * D * D;
  const double bnorm = tangent_norm(b_red);
  TangentVector x = TangentVector::zero_reduced(D);
  if (bnorm == 0.0) return x;
  // conjugate residuals: valid for self-adjoint positive semi-definite G
  TangentVector r = b_red;
  TangentVector pdir = r;
  TangentVector Ap = A(pdir);
  double rAr = re_dot(r, Ap);
  for (int it = 0; it < max_it; ++it) {
    const double apap = re_dot(Ap, Ap);
    if (!(apap > 0.0) || !std::isfinite(apap)) break;
    const double alpha = rAr / apap;
    x = tangent_axpy(alpha, pdir, x);
    r = tangent_axpy(-alpha, Ap, r);
    if (tangent_norm(r) <= opt.gram_solve_tol * bnorm) break;
    const TangentVector Ar = A(r);
    const double rAr_new = re_dot(r, Ar);
    if (!(std::abs(rAr) > 0.0)) break;
    const double beta = rAr_new / rAr;
    rAr = rAr_new;
    pdir = tangent_axpy(beta, pdir, r);
    Ap = tangent_axpy(beta, Ap, Ar);
  }
  return x;
}

TangentVector flow_direction(const CmpsState& s, const FlowPoint& fp, bool imaginary,
                             const OptimizerOptions& opt) {
  TangentVector x = gram_solve(s, fp.spec, fp.g_red, opt);
  if (imaginary) {
    // project out the pure-normalization direction G^{-1} y
    const TangentVector u = gram_solve(s, fp.spec, fp.y_red, opt);
    const cxd yu = tangent_dot(fp.y_red, u);
    if (std::abs(yu) > 0.0) {
      const cxd c = tangent_dot(fp.y_red, x) / yu;
      x = tangent_axpy(-c, u, x);
    }
    return tangent_scale(-1.0, x);
  }
  return tangent_scale(cxd(0.0, -1.0), x);
}

CmpsState tdvp_step(const CmpsState& s, const HamiltonianParams& p, double dt,
                    const OptimizerOptions& opt) {
  // explicit midpoint rule
  const FlowPoint fp1 = evaluate_flow(s, p, opt);
  const TangentVector d1 = flow_direction(s, fp1, false, opt);
  const CmpsState half = advance_state(s, d1, 0.5 * dt);
  const FlowPoint fp2 = evaluate_flow(half, p, opt);
  const TangentVector d2 = flow_direction(half, fp2, false, opt);
  CmpsState out = advance_state(s, d2, dt);
  out.B /= std::sqrt(fp2.e.norm);
  return out;
}

GroundStateResult cg_ground_state(const CmpsState& s0, const HamiltonianParams& p,
                                  const OptimizerOptions& opt) {
  GroundStateResult res;
  res.state = s0;
  const int D = s0.D;
  const int restart = opt.restart_every > 0 ? opt.restart_every : 4 * D * D;

  std::ofstream trace;
  if (!opt.trace_csv.empty()) {
    trace.open(opt.trace_csv, std::ios::app);
    if (trace.tellp() == 0)
      trace << "iter,energy,grad_norm,step,n_particles,penalty\n";
  }

  FlowPoint fp = evaluate_flow(res.state, p, opt);
  TangentVector d = TangentVector::zero_reduced(D);
  TangentVector g_prev;
  double denom_prev = 0.0;
  double last_step = opt.step0;

  // Metric (Gram) solver with a factorization reused across iterations; the
  // state moves slowly, so a stale factorization refined with one or two
  // exact applications is far cheaper than re-assembling every iteration.
  DenseGramFactor fac;
  auto metric_solve = [&](const TangentVector& b) {
    if (2 * D * D > 512) return gram_solve(res.state, fp.spec, b, opt);
    TangentSpace ts(res.state, fp.spec, opt.contraction_tol_gram);
    auto A = [&](const TangentVector& x) {
      return project_reduced(res.state, ts.gram_apply(expand(res.state, x)));
    };
    if (!fac.valid || fac.age >= 50) fac.build(A, D);
    ++fac.age;
    const double bn = tangent_norm(b);
    TangentVector x = fac.solve(b, D);
    if (bn == 0.0) return x;
    TangentVector r = tangent_axpy(-1.0, A(x), b);
    double rn = tangent_norm(r);
    if (!std::isfinite(rn) || rn > 2.0 * bn) {
      // residual worse than the rhs itself: the cached factorization has gone
      // stale (the state moved too far); rebuild at the current state
      fac.build(A, D);
      x = fac.solve(b, D);
      r = tangent_axpy(-1.0, A(x), b);
      rn = tangent_norm(r);
    }
    for (int k = 0; k < 3 && rn > 1e-9 * bn; ++k) {
      x = tangent_axpy(1.0, fac.solve(r, D), x);
      TangentVector r_next = tangent_axpy(-1.0, A(x), b);
      const double rn_next = tangent_norm(r_next);
      // refinement converges geometrically only for modes above the damping
      // scale; a stalling residual means the remainder is below it
      if (rn_next >= 0.9 * rn) break;
      r = r_next;
      rn = rn_next;
    }
    if (!std::isfinite(tangent_norm(x)))
      throw solver_error("metric solve produced non-finite values");
    return x;
  };

  for (int iter = 0; iter < opt.max_iters; ++iter) {
    if (!std::isfinite(tangent_norm(fp.g_red)) || !std::isfinite(fp.e.total))
      throw solver_error("non-finite energy gradient");
    TangentVector prec = metric_solve(fp.g_red);
    double gnorm2 = std::max(0.0, re_dot(prec, fp.g_red) / fp.e.norm);
    res.grad_norm = std::sqrt(gnorm2);
    // never declare convergence against a stale cached metric: confirm with a
    // factorization built at the current state
    if (res.grad_norm <= opt.grad_tol && 2 * D * D <= 512 && fac.age > 1) {
      fac.valid = false;
      prec = metric_solve(fp.g_red);
      gnorm2 = std::max(0.0, re_dot(prec, fp.g_red) / fp.e.norm);
      res.grad_norm = std::sqrt(gnorm2);
    }
    res.e = fp.e;
    res.iters = iter;
    if (trace.is_open()) {
      char row[256];
      std::snprintf(row, sizeof(row), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", iter,
                    fp.e.total, res.grad_norm, last_step, fp.e.n_particles, fp.e.penalty);
      trace << row;
    }
    if (res.grad_norm <= opt.grad_tol) {
      res.converged = true;
      break;
    }

    double beta = 0.0;
    if (iter > 0 && iter % restart != 0 && denom_prev > 0.0) {
      const double num = re_dot(prec, fp.g_red) - re_dot(prec, g_prev);
      beta = std::max(0.0, num / denom_prev);
    }
    d = tangent_axpy(beta, d, tangent_scale(-1.0, prec));
    double slope = 2.0 * re_dot(d, fp.g_red) / fp.e.norm;
    if (!(slope < 0.0)) {
      d = tangent_scale(-1.0, prec);
      slope = -2.0 * gnorm2;
    }
    // Cap the direction magnitude relative to the state scale: badly
    // conditioned metrics (fresh enlargements, distorted states) can produce
    // preconditioned directions too large for any backtracking budget.
    {
      const double dn = tangent_norm(d);
      const double cap = 100.0 * (1.0 + res.state.R.norm() + res.state.B.norm());
      if (dn > cap) {
        d = tangent_scale(cap / dn, d);
        slope *= cap / dn;
      }
    }

    // Armijo backtracking on the normalized energy. Near convergence the
    // predicted decrease c1*step*slope drops below the floating-point noise of
    // the energy itself; `fuzz` keeps the test meaningful there, while the
    // strict-decrease requirement guarantees monotone accepted energies.
    const double fuzz = 1e-14 * std::max(1.0, std::abs(fp.e.total));
    // trial step grows past step0 when previous steps kept being accepted
    double step = std::clamp(4.0 * last_step, 1e-2 * opt.step0, 1e3 * opt.step0);
    bool accepted = false;
    CmpsState trial;
    EnergyBreakdown et;
    for (int k = 0; k < opt.armijo_max; ++k) {
      trial = advance_state(res.state, d, step);
      try {
        et = trial_energy(trial, p, opt);
      } catch (const solver_error&) {
        step *= opt.armijo_shrink;
        continue;
      }
      if (et.total < fp.e.total &&
          et.total <= fp.e.total + opt.armijo_c1 * step * slope + fuzz) {
        accepted = true;
        break;
      }
      step *= opt.armijo_shrink;
    }
    // expand while the energy keeps dropping (cheap, and pays off on the
    // long shallow valleys of large rings)
    for (int k = 0; accepted && k < 8; ++k) {
      const CmpsState wider = advance_state(res.state, d, 2.0 * step);
      try {
        const EnergyBreakdown ew = trial_energy(wider, p, opt);
        if (!(ew.total < et.total)) break;
        trial = wider;
        et = ew;
        step *= 2.0;
      } catch (const solver_error&) {
        break;
      }
    }
    if (!accepted) {
      if (beta != 0.0) {
        // retry from steepest descent before giving up
        d = TangentVector::zero_reduced(D);
        denom_prev = 0.0;
        continue;
      }
      break;
    }

    last_step = step;
    denom_prev = re_dot(prec, fp.g_red);
    g_prev = fp.g_red;
    CmpsState next = trial;
    next.B /= std::sqrt(et.norm);
    FlowPoint fp_next = evaluate_flow(next, p, opt);
    // The line search guarantees a strict decrease of the trial energy, but
    // re-evaluating after the norm rescale can round the decrease away
    // entirely. No representable progress means the run is at the
    // floating-point floor: keep the previous point and stop.
    if (!(fp_next.e.total < fp.e.total)) break;
    res.state = next;
    fp = fp_next;
  }
  return res;
}

namespace {

// The vacuum R = 0 is a stationary point of the energy for any mu (the
// gradient is quadratic in R near it), so a run can converge onto it even
// when the true minimum carries particles. Kick the state back to the target
// density when that happens.
GroundStateResult solve_escaping_vacuum(const CmpsState& s0, const HamiltonianParams& p,
                                        const OptimizerOptions& opt, double n_target) {
  GroundStateResult res = cg_ground_state(s0, p, opt);
  for (int kick = 0; kick < 3 && res.e.n_particles < 1e-3 * n_target; ++kick) {
    CmpsState re = res.state;
    if (res.e.n_particles > 1e-4 * n_target) {
      // cap the rescale so a near-empty state cannot be blown up into a
      // regime where the energy overflows and the line search cannot recover
      re.R *= std::min(10.0, std::sqrt(n_target / res.e.n_particles));
    } else {
      re = make_state(s0.D, s0.L, InitMode::Random, 0x5EEDu + kick);
      const SpectralData sp = spectral_decompose(re, opt.spectral_tol);
      const double n0 = energy(re, sp, p).n_particles;
      if (n0 > 0.0) re.R *= std::min(10.0, std::sqrt(n_target / n0));
    }
    res = cg_ground_state(re, p, opt);
  }
  return res;
}

}  // namespace

GroundStateResult tune_mu(CmpsState s0, HamiltonianParams& p, double n_target,
                          const OptimizerOptions& opt, double n_tol, int max_rounds) {
  // N(mu) is nondecreasing (and identically zero below the vacuum threshold),
  // so bracket the target and close in by regula falsi with bisection safety.
  GroundStateResult res = solve_escaping_vacuum(s0, p, opt, n_target);
  // warm-start every evaluation from the most recent particle-carrying
  // solution: restarting from a vacuum-collapsed state would only trigger
  // another round of rescue kicks
  CmpsState warm = res.state;
  const bool debug = std::getenv("RINGTDVP_DEBUG_TUNE") != nullptr;
  auto eval = [&](double mu) {
    p.mu = mu;
    res = solve_escaping_vacuum(warm, p, opt, n_target);
    if (std::isfinite(res.e.total) && res.e.n_particles > 0.1 * n_target)
      warm = res.state;
    if (debug)
      std::fprintf(stderr, "tune_mu: mu=%.8g N=%.8g E=%.8g grad=%.3g iters=%d\n", mu,
                   res.e.n_particles, res.e.total, res.grad_norm, res.iters);
    return res.e.n_particles - n_target;
  };
  if (debug)
    std::fprintf(stderr, "tune_mu: start mu=%.8g N=%.8g iters=%d\n", p.mu,
                 res.e.n_particles, res.iters);
  // the root search spends the iteration budget locating mu, so the last
  // inner solve may stop short of grad_tol; polish at fixed mu before handing
  // the state back (a restart also resets the CG memory and step size, which
  // lets a line search that bottomed out make progress again)
  auto finish = [&]() {
    if (!res.converged) {
      GroundStateResult polished = cg_ground_state(res.state, p, opt);
      if (std::isfinite(polished.e.total)) res = polished;
      if (debug)
        std::fprintf(stderr, "tune_mu: polish mu=%.8g N=%.8g E=%.8g grad=%.3g iters=%d\n",
                     p.mu, res.e.n_particles, res.e.total, res.grad_norm, res.iters);
    }
    return res;
  };
  double mu_a = p.mu;
  double f_a = res.e.n_particles - n_target;
  if (std::abs(f_a) <= n_tol) return finish();
  // expand toward a sign change
  // expansion step relative to the starting guess: overshooting by orders of
  // magnitude costs a full solve at a grossly wrong particle number
  double width = std::max(0.002, 0.25 * std::abs(mu_a));
  // cap the bracket excursion: if no sign change appears within a generous
  // multiple of the starting chemical potential, the inner solves are not
  // producing trustworthy particle numbers and widening further only feeds
  // the root finder garbage
  const double mu_limit = 1e3 * std::max(1.0, std::abs(mu_a));
  double mu_b = mu_a, f_b = f_a;
  int used = 0;
  while (f_a * f_b > 0.0 && used < max_rounds) {
    mu_b = mu_a;
    f_b = f_a;
    mu_a = mu_a + (f_a < 0.0 ? width : -width);
    if (std::abs(mu_a) > mu_limit)
      throw solver_error("tune_mu: no particle-number sign change within |mu| <= " +
                         std::to_string(mu_limit));
    f_a = eval(mu_a);
    if (!std::isfinite(f_a) || !std::isfinite(res.e.total))
      throw solver_error("tune_mu: inner solve returned a non-finite result");
    ++used;
    if (std::abs(f_a) <= n_tol) return finish();
    width *= 2.0;
  }
  if (f_a * f_b > 0.0)
    throw solver_error("tune_mu: failed to bracket the particle-number target");
  // (mu_a, mu_b) now brackets the root (f_a * f_b <= 0). Illinois variant:
  // N(mu) is flat (identically -n_target) across the whole vacuum region, so
  // plain regula falsi would creep toward the occupied endpoint; halving the
  // retained residual when the same endpoint survives twice restores
  // superlinear convergence.
  int kept_side = 0;
  int stalled = 0;
  for (; used < max_rounds; ++used) {
    double mu_m;
    if (std::abs(f_b - f_a) > 1e-12 * std::max(1.0, std::abs(f_b)))
      mu_m = mu_a - f_a * (mu_b - mu_a) / (f_b - f_a);
    else
      mu_m = 0.5 * (mu_a + mu_b);
    // keep strictly inside the bracket
    const double lo = std::min(mu_a, mu_b), hi = std::max(mu_a, mu_b);
    if (!(mu_m > lo && mu_m < hi)) mu_m = 0.5 * (lo + hi);
    const double f_m = eval(mu_m);
    if (std::abs(f_m) <= n_tol || hi - lo < 1e-13 * std::max(1.0, hi)) return finish();
    // the inner solver resolves N only to finite precision: when evaluations
    // stop moving the state at all, tighter brackets carry no information
    stalled = res.iters == 0 ? stalled + 1 : 0;
    if (stalled >= 2) return finish();
    if (f_m * f_a <= 0.0) {
      mu_b = mu_m;
      f_b = f_m;
      if (kept_side == -1) f_a *= 0.5;
      kept_side = -1;
    } else {
      mu_a = mu_m;
      f_a = f_m;
      if (kept_side == +1) f_b *= 0.5;
      kept_side = +1;
    }
  }
  return finish();
}

}  // namespace ringtdvp
