#include "ringtdvp/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ringtdvp {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// strips a trailing comment that is not inside a quoted string
std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

double parse_number(const std::string& key, const std::string& tok) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + tok + "'");
  }
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text) {
  ConfigFile f;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno), "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("line " + std::to_string(lineno), "empty key or value");
    f.kv_[section.empty() ? key : section + "." + key] = val;
  }
  return f;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

bool ConfigFile::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string ConfigFile::get_string(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError(key, "missing required key");
  std::string v = it->second;
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

double ConfigFile::get_number(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError(key, "missing required key");
  return parse_number(key, it->second);
}

bool ConfigFile::get_bool(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError(key, "missing required key");
  if (it->second == "true") return true;
  if (it->second == "false") return false;
  throw ConfigError(key, "expected true or false");
}

std::vector<double> ConfigFile::get_array(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError(key, "missing required key");
  const std::string& v = it->second;
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    throw ConfigError(key, "expected an array [a, b, ...]");
  std::vector<double> out;
  std::string item;
  std::istringstream in(v.substr(1, v.size() - 2));
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_number(key, item));
  }
  return out;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& dflt) const {
  return has(key) ? get_string(key) : dflt;
}
double ConfigFile::get_number(const std::string& key, double dflt) const {
  return has(key) ? get_number(key) : dflt;
}
bool ConfigFile::get_bool(const std::string& key, bool dflt) const {
  return has(key) ? get_bool(key) : dflt;
}

RunConfig run_config_from(const ConfigFile& f) {
  RunConfig c;
  c.experiment = f.get_string("experiment.type", "ground");
  const bool is_oracle = c.experiment == "oracle-check";
  if (is_oracle) {
    c.oracle_dim = static_cast<int>(f.get_number("experiment.dim", 3));
    c.seed = static_cast<std::uint64_t>(f.get_number("ansatz.seed", 1));
    c.out_dir = f.get_string("outputs.dir", "out");
    return c;
  }

  c.L = f.get_number("model.L");
  if (!(c.L > 0.0)) throw ConfigError("model.L", "must be positive");

  // interaction: exactly one of c or gamma (gamma needs the target density rho)
  const bool have_c = f.has("model.c"), have_gamma = f.has("model.gamma");
  if (have_c == have_gamma)
    throw ConfigError("model.c/model.gamma", "exactly one of c or gamma must be given");
  if (have_gamma) {
    if (!f.has("model.rho"))
      throw ConfigError("model.rho", "gamma requires the target density rho");
    c.gamma = f.get_number("model.gamma");
    const double rho = f.get_number("model.rho");
    c.params.c = c.gamma * rho;
    c.from_gamma = true;
    c.n_target = rho * c.L;
    c.tune_n = true;
  } else {
    c.params.c = f.get_number("model.c");
  }

  // barrier: exactly one of U0 or Lambda (Lambda needs a particle target)
  const bool have_u0 = f.has("model.U0"), have_Lam = f.has("model.Lambda");
  if (have_u0 == have_Lam)
    throw ConfigError("model.U0/model.Lambda", "exactly one of U0 or Lambda must be given");
  if (f.has("model.n_target")) {
    c.n_target = f.get_number("model.n_target");
    c.tune_n = true;
  }
  if (have_Lam) {
    if (!(c.n_target > 0.0))
      throw ConfigError("model.n_target", "Lambda requires a particle-number target");
    c.Lambda = f.get_number("model.Lambda");
    c.params.U0 = 2.0 * c.Lambda * c.n_target / c.L;
    c.from_Lambda = true;
  } else {
    c.params.U0 = f.get_number("model.U0");
  }

  c.params.Omega = f.get_number("model.Omega", 0.0);
  c.params.eps = f.get_number("model.eps", 1e-3);
  if (!(c.params.eps > 0.0)) throw ConfigError("model.eps", "must be positive");
  c.params.mu = f.get_number("model.mu", 0.0);

  c.D = static_cast<int>(f.get_number("ansatz.D"));
  if (c.D < 1) throw ConfigError("ansatz.D", "must be >= 1");
  c.seed = static_cast<std::uint64_t>(f.get_number("ansatz.seed", 1));
  c.warm_start_path = f.get_string("ansatz.warm_start_path", "");

  OptimizerOptions& o = c.solver;
  o.grad_tol = f.get_number("solver.grad_tol", o.grad_tol);
  o.max_iters = static_cast<int>(f.get_number("solver.max_iters", o.max_iters));
  o.step0 = f.get_number("solver.step0", o.step0);
  o.armijo_c1 = f.get_number("solver.armijo_c1", o.armijo_c1);
  o.armijo_shrink = f.get_number("solver.armijo_shrink", o.armijo_shrink);
  o.armijo_max = static_cast<int>(f.get_number("solver.armijo_max", o.armijo_max));
  o.restart_every = static_cast<int>(f.get_number("solver.restart_every", o.restart_every));
  o.spectral_tol = f.get_number("solver.spectral_tol", o.spectral_tol);
  o.contraction_tol_gram = f.get_number("solver.contraction_tol_gram", o.contraction_tol_gram);
  o.gram_solve_tol = f.get_number("solver.gram_solve_tol", o.gram_solve_tol);
  o.gram_solve_max = static_cast<int>(f.get_number("solver.gram_solve_max", o.gram_solve_max));

  c.out_dir = f.get_string("outputs.dir", "out");
  c.emit_svg = f.get_bool("outputs.svg", false);

  if (c.experiment == "sweep-omega") {
    if (f.has("sweep.omega_values")) {
      c.omega_grid = f.get_array("sweep.omega_values");
    } else {
      const double lo = f.get_number("sweep.omega_min", 0.0);
      const double hi = f.get_number("sweep.omega_max", 1.0);
      const int n = static_cast<int>(f.get_number("sweep.omega_points", 21));
      if (n < 3) throw ConfigError("sweep.omega_points", "need at least 3 points");
      for (int i = 0; i < n; ++i) c.omega_grid.push_back(lo + (hi - lo) * i / (n - 1));
    }
  } else if (c.experiment == "eps-scan") {
    c.eps_values = f.get_array("sweep.eps_values");
    if (c.eps_values.size() < 2)
      throw ConfigError("sweep.eps_values", "need at least 2 values");
  } else if (c.experiment == "width-scan") {
    c.n_values = f.get_array("sweep.n_values");
    if (c.n_values.empty()) throw ConfigError("sweep.n_values", "need at least 1 value");
  } else if (c.experiment != "ground" && c.experiment != "density") {
    throw ConfigError("experiment.type", "unknown experiment '" + c.experiment + "'");
  }
  c.density_points = static_cast<int>(f.get_number("sweep.density_points", 512));
  if (c.density_points < 2) throw ConfigError("sweep.density_points", "must be >= 2");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  return run_config_from(ConfigFile::parse_file(path));
}

}  // namespace ringtdvp
