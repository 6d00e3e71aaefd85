#include "ringtdvp/experiments.hpp"
#include "ringtdvp/oracle.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>

namespace {

int resolve_threads(int cli_threads) {
  if (cli_threads > 0) return cli_threads;
  if (const char* env = std::getenv("RINGTDVP_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::string& resume, int threads) {
  Eigen::setNbThreads(resolve_threads(threads));
  ringtdvp::RunConfig cfg;
  try {
    cfg = ringtdvp::load_run_config(config_path);
  } catch (const ringtdvp::ConfigError& e) {
    std::fprintf(stderr, "config error at %s\n", e.what());
    return 2;
  }
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (!resume.empty()) cfg.warm_start_path = resume;
  if (cfg.experiment == "oracle-check") {
    const auto res = ringtdvp::oracle_check(cfg.oracle_dim, cfg.seed);
    for (const auto& [name, err] : res.errors)
      std::printf("%-18s %-4s max_rel_err=%.3e\n", name.c_str(),
                  err <= 1e-8 ? "pass" : "FAIL", err);
    if (!res.pass && !res.offending_row.empty())
      std::printf("offending contraction row: %s\n", res.offending_row.c_str());
    return res.pass ? 0 : 1;
  }
  return ringtdvp::run_experiment(cfg);
}

int cmd_oracle_check(int dim, std::uint64_t seed) {
  if (dim < 1 || dim > 6) {
    std::fprintf(stderr, "error: --dim must be in [1, 6]\n");
    return 2;
  }
  const auto res = ringtdvp::oracle_check(dim, seed);
  std::printf("oracle check: D=%d seed=%llu\n", dim,
              static_cast<unsigned long long>(seed));
  for (const auto& [name, err] : res.errors)
    std::printf("%-18s %-4s max_rel_err=%.3e\n", name.c_str(),
                err <= 1e-8 ? "pass" : "FAIL", err);
  if (!res.pass && !res.offending_row.empty())
    std::printf("offending contraction row: %s\n", res.offending_row.c_str());
  std::printf("overall: %s (worst %s, %.3e)\n", res.pass ? "pass" : "FAIL",
              res.worst_name.c_str(), res.worst);
  return res.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground states and rotation response of an interacting Bose gas "
               "on a ring with a localized barrier (uniform cMPS ansatz)"};
  app.require_subcommand(1);

  std::string config_path, out_dir, resume;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Execute an experiment from a TOML config");
  run->add_option("config", config_path, "Path to the config file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides outputs.dir)");
  run->add_option("--threads", threads, "Worker threads (or RINGTDVP_THREADS)");
  run->add_option("--resume", resume, "Checkpoint file to warm-start from");

  int dim = 3;
  std::uint64_t seed = 1;
  auto* oc = app.add_subcommand("oracle-check",
                                "Compare production contractions against the "
                                "full-spectrum reference");
  oc->add_option("--dim", dim, "Bond dimension (<= 6)");
  oc->add_option("--seed", seed, "Random state seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, resume, threads);
    return cmd_oracle_check(dim, seed);
  } catch (const ringtdvp::checkpoint_error& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return 4;
  } catch (const ringtdvp::solver_error& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}
