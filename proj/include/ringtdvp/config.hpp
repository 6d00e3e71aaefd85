#ifndef RINGTDVP_CONFIG_HPP
#define RINGTDVP_CONFIG_HPP

#include "ringtdvp/evolution.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ringtdvp {

// Malformed or inconsistent configuration; `key` names the offender.
struct ConfigError : std::runtime_error {
  std::string key;
  ConfigError(std::string k, const std::string& msg)
      : std::runtime_error(k + ": " + msg), key(std::move(k)) {}
};

// Flat key-value view of a TOML-style file: [section] headers, key = value
// with string/number/boolean/number-array values, # comments. Covers the
// subset this tool documents; nested tables and dates are out of scope.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  double get_number(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_array(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& dflt) const;
  double get_number(const std::string& key, double dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;

  const std::map<std::string, std::string>& raw() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;  // "section.key" -> raw value token
};

struct RunConfig {
  std::string experiment;  // ground | density | sweep-omega | eps-scan |
                           // width-scan | oracle-check
  // resolved physics
  double L = 0.0;
  HamiltonianParams params;
  double n_target = 0.0;  // > 0 requests chemical-potential tuning
  bool tune_n = false;
  // how the interaction / barrier were specified (echoed in the manifest)
  double gamma = 0.0, Lambda = 0.0;
  bool from_gamma = false, from_Lambda = false;
  // ansatz
  int D = 0;
  std::uint64_t seed = 1;
  std::string warm_start_path;
  // solver
  OptimizerOptions solver;
  // outputs
  std::string out_dir = "out";
  bool emit_svg = false;
  // experiment-specific grids
  std::vector<double> omega_grid;
  std::vector<double> eps_values;
  std::vector<double> n_values;
  int density_points = 512;
  int oracle_dim = 3;
};

// Parses and validates; throws ConfigError naming the offending key.
RunConfig load_run_config(const std::string& path);
RunConfig run_config_from(const ConfigFile& f);

}  // namespace ringtdvp

#endif
