#include "ringtdvp/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ringtdvp {

namespace {

struct ModeSet {
  const std::vector<cxd>* lam;
  const std::vector<Mat>* r;
  const std::vector<Mat>* l;
  int n;
};

ModeSet modes_of(const SpectralData& spec) {
  if (spec.has_full)
    return {&spec.full_lambdas, &spec.full_right, &spec.full_left,
            static_cast<int>(spec.full_lambdas.size())};
  return {&spec.lambdas, &spec.right_vecs, &spec.left_vecs, spec.n_kept()};
}

}  // namespace

ObservableSeries density_profile(const CmpsState& s, const SpectralData& spec,
                                 int n_points) {
  if (n_points < 2) throw dimension_error("density_profile: need at least 2 points");
  const ModeSet m = modes_of(spec);
  const double L = s.L;
  // M(u,v) = <l_u|B r_v B^dag> <l_v|R r_u R^dag>, rho(x) = a(x)^T M b(x)
  Eigen::MatrixXcd M(m.n, m.n);
  double norm = 0.0;
  for (int v = 0; v < m.n; ++v) {
    const Mat BrB = s.B * (*m.r)[v] * s.B.adjoint();
    for (int u = 0; u < m.n; ++u) {
      const Mat RrR = s.R * (*m.r)[u] * s.R.adjoint();
      M(u, v) = frob((*m.l)[u], BrB) * frob((*m.l)[v], RrR);
    }
    norm += (std::exp(L * (*m.lam)[v]) * frob((*m.l)[v], BrB)).real();
  }
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw solver_error("density_profile: state norm is not positive");

  ObservableSeries out;
  out.x_grid.resize(n_points);
  out.density.resize(n_points);
  const double delta = 1e-9 * L;
  for (int j = 0; j < n_points; ++j) {
    const double x = std::clamp(L * j / (n_points - 1), delta, L - delta);
    Eigen::VectorXcd a(m.n), b(m.n);
    for (int k = 0; k < m.n; ++k) {
      a(k) = std::exp((L - x) * (*m.lam)[k]);
      b(k) = std::exp(x * (*m.lam)[k]);
    }
    out.x_grid[j] = x;
    out.density[j] = (a.transpose() * M * b).value().real() / norm;
  }
  return out;
}

double particle_number(const CmpsState& s, const SpectralData& spec) {
  ContractionEngine eng(spec);
  const KronSum P_BB(1.0, s.B, s.B);
  const double norm = eng.boundary_scalar(P_BB).real();
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw solver_error("particle_number: state norm is not positive");
  return eng.single_scalar(P_BB, density_op(s)).real() / norm;
}

double depletion_width(const ObservableSeries& profile) {
  const int n = static_cast<int>(profile.density.size());
  if (n < 8 || profile.x_grid.size() != profile.density.size())
    throw dimension_error("depletion_width: malformed profile");
  const double L = profile.x_grid.back() + profile.x_grid.front();
  // signed distance from the barrier at x = 0, wrapped to [-L/2, L/2)
  auto dist = [&](double x) {
    double d = std::fmod(x, L);
    if (d >= 0.5 * L) d -= L;
    if (d < -0.5 * L) d += L;
    return d;
  };
  // bulk level: median over the third of the ring farthest from the barrier
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(dist(profile.x_grid[a])) > std::abs(dist(profile.x_grid[b]));
  });
  std::vector<double> far;
  for (int k = 0; k < n / 3; ++k) far.push_back(profile.density[order[k]]);
  std::nth_element(far.begin(), far.begin() + far.size() / 2, far.end());
  const double rho_bulk = far[far.size() / 2];

  int imin = 0;
  for (int i = 1; i < n; ++i)
    if (profile.density[i] < profile.density[imin]) imin = i;
  const double rho_min = profile.density[imin];
  if (!(rho_bulk - rho_min > 0.01 * rho_bulk))
    throw DepletionError("depletion_width: no central depletion (min within 1% of bulk)");
  const double half = 0.5 * (rho_bulk + rho_min);

  // walk outward from the minimum to the half-level crossings, wrapping around
  auto crossing = [&](int dir) {
    int i = imin;
    for (int steps = 0; steps < n; ++steps) {
      const int j = ((i + dir) % n + n) % n;
      const double ri = profile.density[i], rj = profile.density[j];
      if (rj >= half) {
        const double f = (half - ri) / (rj - ri);
        double di = dist(profile.x_grid[i]);
        double dj = dist(profile.x_grid[j]);
        if (dir > 0 && dj < di) dj += L;
        if (dir < 0 && dj > di) dj -= L;
        return di + f * (dj - di);
      }
      i = j;
    }
    throw DepletionError("depletion_width: half level never reached");
  };
  return crossing(+1) - crossing(-1);
}

ObservableSeries current_sweep(const CmpsState& s0, HamiltonianParams params,
                               const std::vector<double>& omega_grid,
                               const OptimizerOptions& opt) {
  if (omega_grid.size() < 3)
    throw dimension_error("current_sweep: need at least 3 grid points");
  ObservableSeries out;
  out.omega_grid = omega_grid;
  out.energies.assign(omega_grid.size(), std::numeric_limits<double>::quiet_NaN());
  CmpsState warm = s0;
  for (std::size_t j = 0; j < omega_grid.size(); ++j) {
    params.Omega = omega_grid[j];
    try {
      GroundStateResult r = cg_ground_state(warm, params, opt);
      out.energies[j] = r.e.total;
      warm = r.state;
    } catch (const solver_error&) {
      // point excised; warm start carries over from the last good point
    }
  }
  const double I0 = current_unit(s0.L);
  out.currents.assign(omega_grid.size(), std::numeric_limits<double>::quiet_NaN());
  const auto& E = out.energies;
  auto ok = [&](std::size_t j) { return std::isfinite(E[j]); };
  for (std::size_t j = 0; j < omega_grid.size(); ++j) {
    double dE = std::numeric_limits<double>::quiet_NaN();
    if (j > 0 && j + 1 < E.size() && ok(j - 1) && ok(j + 1))
      dE = (E[j + 1] - E[j - 1]) / (omega_grid[j + 1] - omega_grid[j - 1]);
    else if (j + 2 < E.size() && ok(j) && ok(j + 1) && ok(j + 2))
      dE = (-3.0 * E[j] + 4.0 * E[j + 1] - E[j + 2]) /
           (omega_grid[j + 2] - omega_grid[j]);
    else if (j >= 2 && ok(j) && ok(j - 1) && ok(j - 2))
      dE = (3.0 * E[j] - 4.0 * E[j - 1] + E[j - 2]) /
           (omega_grid[j] - omega_grid[j - 2]);
    out.currents[j] = -dE / (2.0 * M_PI) / I0;
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double c : out.currents)
    if (std::isfinite(c)) {
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
  out.amplitude = std::isfinite(lo) ? 0.5 * (hi - lo) : 0.0;
  return out;
}

}  // namespace ringtdvp
