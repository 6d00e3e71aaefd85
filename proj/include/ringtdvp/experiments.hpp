#ifndef RINGTDVP_EXPERIMENTS_HPP
#define RINGTDVP_EXPERIMENTS_HPP

#include "ringtdvp/config.hpp"
#include "ringtdvp/observables.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ringtdvp {

// Embeds a state into a larger bond dimension; the new blocks are filled with
// small random entries of size `noise` so the optimizer can activate them.
CmpsState enlarge_state(const CmpsState& s, int D_new, double noise, std::uint64_t seed);

// Ground state from a given initial state; tunes mu to n_target when asked.
GroundStateResult solve_ground(const CmpsState& init, HamiltonianParams& p,
                               const OptimizerOptions& opt, double n_target, bool tune_n);

// Warm-started ladder: solve at each bond dimension in `Ds` (ascending),
// enlarging the previous solution, with eps annealed down `eps_schedule`
// (ending at p.eps) at the final dimension.
GroundStateResult ladder_ground(HamiltonianParams p, double L, const std::vector<int>& Ds,
                                const std::vector<double>& eps_schedule, std::uint64_t seed,
                                const OptimizerOptions& opt, double n_target, bool tune_n);

// Least-squares line fit y = a + b x; returns (a, b, r_squared).
struct LineFit {
  double intercept = 0.0, slope = 0.0, r_squared = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Executes the configured experiment, writing CSV/JSON artifacts and a
// manifest into cfg.out_dir. Returns the process exit code contract:
// 0 success, 3 solver failure (partial outputs kept with a .partial suffix),
// 4 I/O failure.
int run_experiment(const RunConfig& cfg);

// Simple SVG polyline plot (one series), used when outputs.svg is enabled.
void write_svg_plot(const std::string& path, const std::vector<double>& x,
                    const std::vector<double>& y, const std::string& title);

}  // namespace ringtdvp

#endif
