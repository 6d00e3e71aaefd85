#include "ringtdvp/experiments.hpp"

#include "ringtdvp/oracle.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

namespace ringtdvp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CsvWriter {
  std::ofstream out;
  CsvWriter(const fs::path& p, const std::string& header) : out(p) {
    if (!out) throw std::ios_base::failure("cannot open " + p.string());
    out << header << '\n';
  }
  void row(const std::vector<double>& vals) {
    for (std::size_t i = 0; i < vals.size(); ++i)
      out << (i ? "," : "") << num(vals[i]);
    out << '\n';
  }
};

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw std::ios_base::failure("cannot open " + p.string());
  out << j.dump(2) << '\n';
}

json energy_json(const GroundStateResult& r) {
  return json{{"schema_version", 1},
              {"energy_total", r.e.total},
              {"energy_bulk", r.e.bulk},
              {"energy_boundary", r.e.boundary},
              {"energy_barrier", r.e.barrier},
              {"energy_penalty", r.e.penalty},
              {"energy_mixed", r.e.mixed},
              {"energy_canonical", r.e.canonical()},
              {"norm", r.e.norm},
              {"n_particles", r.e.n_particles},
              {"grad_norm", r.grad_norm},
              {"iters", r.iters},
              {"converged", r.converged}};
}

json manifest_json(const RunConfig& cfg, double wall_ms) {
  json solver{{"grad_tol", cfg.solver.grad_tol},
              {"max_iters", cfg.solver.max_iters},
              {"step0", cfg.solver.step0},
              {"spectral_tol", cfg.solver.spectral_tol},
              {"contraction_tol_gram", cfg.solver.contraction_tol_gram},
              {"gram_solve_tol", cfg.solver.gram_solve_tol}};
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  return json{{"schema_version", 1},
              {"tool", "ringtdvp"},
              {"experiment", cfg.experiment},
              {"model",
               {{"L", cfg.L},
                {"c", cfg.params.c},
                {"mu", cfg.params.mu},
                {"U0", cfg.params.U0},
                {"Omega", cfg.params.Omega},
                {"eps", cfg.params.eps},
                {"gamma", cfg.gamma},
                {"Lambda", cfg.Lambda},
                {"n_target", cfg.n_target},
                {"tune_n", cfg.tune_n}}},
              {"ansatz", {{"D", cfg.D}, {"seed", cfg.seed}}},
              {"solver", solver},
              {"wall_ms", wall_ms},
              {"timestamp_ms",
               std::chrono::duration_cast<std::chrono::milliseconds>(now).count()}};
}

}  // namespace

CmpsState enlarge_state(const CmpsState& s, int D_new, double noise, std::uint64_t seed) {
  if (D_new < s.D) throw dimension_error("enlarge_state: target dimension is smaller");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  auto grow = [&](const Mat& m) {
    Mat out(D_new, D_new);
    for (int j = 0; j < D_new; ++j)
      for (int i = 0; i < D_new; ++i) out(i, j) = noise * cxd(g(rng), g(rng));
    out.topLeftCorner(s.D, s.D) = m;
    return out;
  };
  CmpsState n;
  n.D = D_new;
  n.L = s.L;
  n.R = grow(s.R);
  n.K = grow(s.K);
  n.K = 0.5 * (n.K + n.K.adjoint()).eval();
  n.B = grow(s.B);
  return n;
}

GroundStateResult solve_ground(const CmpsState& init, HamiltonianParams& p,
                               const OptimizerOptions& opt, double n_target, bool tune_n) {
  if (tune_n && n_target > 0.0) return tune_mu(init, p, n_target, opt);
  return cg_ground_state(init, p, opt);
}

GroundStateResult ladder_ground(HamiltonianParams p, double L, const std::vector<int>& Ds,
                                const std::vector<double>& eps_schedule, std::uint64_t seed,
                                const OptimizerOptions& opt, double n_target, bool tune_n) {
  if (Ds.empty()) throw dimension_error("ladder_ground: empty dimension schedule");
  const double eps_final = p.eps;
  GroundStateResult res;
  CmpsState cur = make_state(Ds.front(), L, InitMode::Random, seed);
  for (std::size_t k = 0; k < Ds.size(); ++k) {
    if (k > 0) cur = enlarge_state(res.state, Ds[k], 1e-3, seed + Ds[k]);
    const bool last = (k + 1 == Ds.size());
    OptimizerOptions o = opt;
    if (!last) {
      o.grad_tol = std::max(opt.grad_tol, 1e-6);
      o.max_iters = std::max(50, opt.max_iters / 2);
    }
    if (last) {
      // anneal the penalty weight down to its final value
      for (double e : eps_schedule) {
        if (e <= eps_final) break;
        p.eps = e;
        OptimizerOptions oa = o;
        oa.grad_tol = std::max(opt.grad_tol, 1e-7);
        res = solve_ground(cur, p, oa, n_target, tune_n);
        cur = res.state;
      }
      p.eps = eps_final;
    }
    res = solve_ground(cur, p, o, n_target, tune_n && last);
    cur = res.state;
  }
  return res;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw dimension_error("fit_line: bad input");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  LineFit f;
  const double den = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0.0;
  const double mean_y = sy / n;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double pred = f.intercept + f.slope * x[i];
    ss_res += (y[i] - pred) * (y[i] - pred);
    ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
  }
  f.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

void write_svg_plot(const std::string& path, const std::vector<double>& x,
                    const std::vector<double>& y, const std::string& title) {
  if (x.size() != y.size() || x.empty()) throw dimension_error("write_svg_plot: bad input");
  const int W = 640, H = 400, M = 50;
  double xmin = x[0], xmax = x[0], ymin = y[0], ymax = y[0];
  for (std::size_t i = 0; i < x.size(); ++i) {
    xmin = std::min(xmin, x[i]);
    xmax = std::max(xmax, x[i]);
    ymin = std::min(ymin, y[i]);
    ymax = std::max(ymax, y[i]);
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot open " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << W / 2 << "' y='20' text-anchor='middle'>" << title << "</text>\n"
      << "<polyline fill='none' stroke='steelblue' stroke-width='1.5' points='";
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double px = M + (W - 2 * M) * (x[i] - xmin) / (xmax - xmin);
    const double py = H - M - (H - 2 * M) * (y[i] - ymin) / (ymax - ymin);
    out << px << ',' << py << ' ';
  }
  out << "'/>\n<text x='" << M << "' y='" << H - 10 << "'>x: [" << num(xmin) << ", "
      << num(xmax) << "]  y: [" << num(ymin) << ", " << num(ymax) << "]</text>\n</svg>\n";
}

namespace {

CmpsState initial_state(const RunConfig& cfg) {
  if (!cfg.warm_start_path.empty()) return load_state(cfg.warm_start_path);
  CmpsState s = make_state(cfg.D, cfg.L, InitMode::Random, cfg.seed);
  if (cfg.tune_n && cfg.n_target > 0.0) {
    // start near the target density: random states sit at density O(1)
    const SpectralData sp = spectral_decompose(s, cfg.solver.spectral_tol);
    const double n0 = particle_number(s, sp);
    if (n0 > 0.0) s.R *= std::sqrt(cfg.n_target / n0);
  }
  return s;
}

void run_ground_like(const RunConfig& cfg, const fs::path& dir) {
  HamiltonianParams p = cfg.params;
  OptimizerOptions opt = cfg.solver;
  if (opt.trace_csv.empty()) opt.trace_csv = (dir / "trace.csv").string();
  GroundStateResult r = solve_ground(initial_state(cfg), p, opt, cfg.n_target, cfg.tune_n);
  json e = energy_json(r);
  e["mu"] = p.mu;
  write_json(dir / "energy.json", e);
  save_state(r.state, (dir / "state.ckpt").string());
  if (cfg.experiment == "density") {
    const SpectralData spec = spectral_decompose(r.state, cfg.solver.spectral_tol);
    const ObservableSeries prof = density_profile(r.state, spec, cfg.density_points);
    CsvWriter csv(dir / "density.csv", "x,rho");
    for (std::size_t i = 0; i < prof.x_grid.size(); ++i)
      csv.row({prof.x_grid[i], prof.density[i]});
    json summary{{"schema_version", 1},
                 {"n_particles", r.e.n_particles},
                 {"mu", p.mu},
                 {"gamma", interaction_gamma(p.c, r.e.n_particles / cfg.L)},
                 {"lambda", barrier_parameter_lambda(p.U0, cfg.L)},
                 {"Lambda", barrier_parameter_Lambda(p.U0, cfg.L, r.e.n_particles)},
                 {"healing_length", healing_length(p.c, r.e.n_particles / cfg.L)}};
    try {
      summary["sigma"] = depletion_width(prof);
    } catch (const DepletionError& err) {
      summary["sigma_error"] = err.what();
    }
    write_json(dir / "summary.json", summary);
    if (cfg.emit_svg)
      write_svg_plot((dir / "density.svg").string(), prof.x_grid, prof.density, "density");
  }
}

void run_sweep_omega(const RunConfig& cfg, const fs::path& dir) {
  HamiltonianParams p = cfg.params;
  OptimizerOptions opt = cfg.solver;
  // resolve mu (and the warm start) once at the first grid point
  HamiltonianParams p0 = p;
  p0.Omega = cfg.omega_grid.front();
  GroundStateResult first =
      solve_ground(initial_state(cfg), p0, opt, cfg.n_target, cfg.tune_n);
  p.mu = p0.mu;
  const ObservableSeries sweep = current_sweep(first.state, p, cfg.omega_grid, opt);
  CsvWriter csv(dir / "sweep.csv", "omega,energy,current");
  for (std::size_t i = 0; i < sweep.omega_grid.size(); ++i)
    csv.row({sweep.omega_grid[i], sweep.energies[i], sweep.currents[i]});
  write_json(dir / "summary.json", json{{"schema_version", 1},
                                        {"alpha", sweep.amplitude},
                                        {"I0", current_unit(cfg.L)},
                                        {"mu", p.mu},
                                        {"n_particles", first.e.n_particles}});
  if (cfg.emit_svg)
    write_svg_plot((dir / "sweep.svg").string(), sweep.omega_grid, sweep.currents,
                   "current");
}

void run_eps_scan(const RunConfig& cfg, const fs::path& dir) {
  HamiltonianParams p = cfg.params;
  OptimizerOptions opt = cfg.solver;
  CsvWriter csv(dir / "epsscan.csv", "eps,energy_total,energy_boundary,penalty,residual");
  std::vector<double> eps_sorted = cfg.eps_values;
  std::sort(eps_sorted.rbegin(), eps_sorted.rend());  // anneal from loose to tight
  CmpsState warm = initial_state(cfg);
  std::vector<double> ev, bv, rv;
  for (double e : eps_sorted) {
    p.eps = e;
    GroundStateResult r = solve_ground(warm, p, opt, cfg.n_target, cfg.tune_n);
    warm = r.state;
    const SpectralData spec = spectral_decompose(r.state, cfg.solver.spectral_tol);
    const double resid = boundary_residual(r.state, spec, p.Omega);
    csv.row({e, r.e.total, r.e.boundary, r.e.penalty, resid});
    ev.push_back(e);
    bv.push_back(r.e.boundary);
    rv.push_back(resid);
  }
  const LineFit fb = fit_line(ev, bv);
  const LineFit fr = fit_line(ev, rv);
  write_json(dir / "summary.json",
             json{{"schema_version", 1},
                  {"boundary_fit", {{"slope", fb.slope},
                                    {"intercept", fb.intercept},
                                    {"r_squared", fb.r_squared}}},
                  {"residual_fit", {{"slope", fr.slope},
                                    {"intercept", fr.intercept},
                                    {"r_squared", fr.r_squared}}}});
}

void run_width_scan(const RunConfig& cfg, const fs::path& dir) {
  OptimizerOptions opt = cfg.solver;
  CsvWriter csv(dir / "widthscan.csv", "n_target,sigma,mu,energy,c,U0");
  std::vector<double> logN, logS;
  CmpsState warm = initial_state(cfg);
  for (double N : cfg.n_values) {
    HamiltonianParams p = cfg.params;
    const double rho = N / cfg.L;
    if (cfg.from_gamma) p.c = c_from_gamma(cfg.gamma, rho);
    if (cfg.from_Lambda) p.U0 = u0_from_Lambda(cfg.Lambda, cfg.L, N);
    GroundStateResult r = solve_ground(warm, p, opt, N, true);
    warm = r.state;
    const SpectralData spec = spectral_decompose(r.state, cfg.solver.spectral_tol);
    const ObservableSeries prof = density_profile(r.state, spec, cfg.density_points);
    double sigma = std::nan("");
    try {
      sigma = depletion_width(prof);
      logN.push_back(std::log(N));
      logS.push_back(std::log(sigma));
    } catch (const DepletionError&) {
    }
    csv.row({N, sigma, p.mu, r.e.total, p.c, p.U0});
  }
  json summary{{"schema_version", 1}};
  if (logN.size() >= 2) {
    const LineFit f = fit_line(logN, logS);
    summary["loglog_fit"] = {{"exponent", f.slope},
                             {"prefactor_log", f.intercept},
                             {"r_squared", f.r_squared}};
  }
  write_json(dir / "summary.json", summary);
}

void mark_partial(const fs::path& dir) {
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const fs::path p = entry.path();
    if (p.extension() == ".partial" || p.filename() == "manifest.json") continue;
    fs::rename(p, fs::path(p.string() + ".partial"), ec);
  }
}

}  // namespace

int run_experiment(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::fprintf(stderr, "error: cannot create output directory %s\n", dir.c_str());
    return 4;
  }
  int code = 0;
  try {
    if (cfg.experiment == "ground" || cfg.experiment == "density")
      run_ground_like(cfg, dir);
    else if (cfg.experiment == "sweep-omega")
      run_sweep_omega(cfg, dir);
    else if (cfg.experiment == "eps-scan")
      run_eps_scan(cfg, dir);
    else if (cfg.experiment == "width-scan")
      run_width_scan(cfg, dir);
    else
      throw ConfigError("experiment.type", "unknown experiment '" + cfg.experiment + "'");
  } catch (const solver_error& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    mark_partial(dir);
    code = 3;
  } catch (const std::ios_base::failure& e) {
    std::fprintf(stderr, "i/o failure: %s\n", e.what());
    code = 4;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "i/o failure: %s\n", e.what());
    code = 4;
  }
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();
  try {
    write_json(dir / "manifest.json", manifest_json(cfg, wall_ms));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "i/o failure writing manifest: %s\n", e.what());
    return 4;
  }
  return code;
}

}  // namespace ringtdvp
