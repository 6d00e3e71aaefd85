#ifndef RINGTDVP_OBSERVABLES_HPP
#define RINGTDVP_OBSERVABLES_HPP

#include "ringtdvp/evolution.hpp"

#include <stdexcept>
#include <vector>

namespace ringtdvp {

// Sampled observables. Which vectors are populated depends on the producing
// operation: density profiles fill (x_grid, density); rotation sweeps fill
// (omega_grid, energies, currents, amplitude).
struct ObservableSeries {
  std::vector<double> x_grid;     // positions, length units
  std::vector<double> density;    // rho(x)
  std::vector<double> omega_grid;
  std::vector<double> energies;   // E(Omega), grand-canonical objective
  std::vector<double> currents;   // I(Omega) in units of I0 = 2 pi / (m L^2)
  double amplitude = 0.0;         // half peak-to-peak of I over one period
  double width = 0.0;             // depletion FWHM, length units
};

// hbar = 1, m = 1/2 throughout.
inline double current_unit(double L) { return 4.0 * M_PI / (L * L); }
inline double healing_length(double c, double rho) { return 1.0 / std::sqrt(2.0 * c * rho); }
inline double barrier_parameter_lambda(double U0, double L) { return 0.5 * U0 * L / M_PI; }
inline double u0_from_lambda(double lambda, double L) { return 2.0 * M_PI * lambda / L; }
inline double barrier_parameter_Lambda(double U0, double L, double N) { return 0.5 * U0 * L / N; }
inline double u0_from_Lambda(double Lambda, double L, double N) { return 2.0 * Lambda * N / L; }
inline double interaction_gamma(double c, double rho) { return c / rho; }
inline double c_from_gamma(double gamma, double rho) { return gamma * rho; }

// rho(x) = Tr[B (x) conj(B) e^{x T} (R (x) conj(R)) e^{(L-x) T}] / norm on a
// uniform grid from 0+ to L-, via the spectral sums (full spectrum when the
// decomposition kept it, leading modes otherwise).
ObservableSeries density_profile(const CmpsState& s, const SpectralData& spec, int n_points);

// N = closed-form integral of the density over the ring.
double particle_number(const CmpsState& s, const SpectralData& spec);

struct DepletionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FWHM of the central density dip around x = 0 (the barrier location), with
// rho_bulk the median over the middle third of the ring. Throws DepletionError
// when the dip is shallower than 1% of the bulk density.
double depletion_width(const ObservableSeries& profile);

// Ground state at every Omega on the grid (warm-started left to right), then
// I(Omega) = -(1/2 pi) dE/dOmega by central differences, reported in I0 units.
ObservableSeries current_sweep(const CmpsState& s0, HamiltonianParams params,
                               const std::vector<double>& omega_grid,
                               const OptimizerOptions& opt);

}  // namespace ringtdvp

#endif
