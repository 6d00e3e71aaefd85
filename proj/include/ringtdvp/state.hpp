#ifndef RINGTDVP_STATE_HPP
#define RINGTDVP_STATE_HPP

#include "ringtdvp/core.hpp"

#include <cstdint>
#include <optional>

namespace ringtdvp {

// Uniform cMPS on a ring of length L with a boundary matrix B.
// Q is never stored: it is derived as Q = -1/2 R^dag R - i K with K hermitian,
// which keeps the left gauge condition Q + Q^dag + R^dag R = 0 exact.
struct CmpsState {
  Mat R;
  Mat K;  // hermitian
  Mat B;
  int D = 0;
  double L = 0.0;

  Mat Q() const { return -0.5 * (R.adjoint() * R) - I_unit * K; }
};

Mat derive_Q(const Mat& R, const Mat& K, double herm_tol = 1e-12);

enum class InitMode { Random, WarmStart };

// Random mode: R entries i.i.d. complex Gaussian / sqrt(D), K hermitian part of
// a Gaussian, B = 1 + 0.01 * Gaussian. Deterministic in the seed.
CmpsState make_state(int D, double L, InitMode mode, std::uint64_t seed,
                     const CmpsState* warm_from = nullptr);

struct GaugeTriple {
  Mat Q, R, B;
  double cond_g = 0.0;
};

// Similarity transform R -> g R g^-1 etc.; physical expectations are invariant.
GaugeTriple gauge_transform(const CmpsState& s, const Mat& g);

struct checkpoint_error : std::runtime_error {
  explicit checkpoint_error(const std::string& msg) : std::runtime_error(msg) {}
};

void save_state(const CmpsState& s, const std::string& path);
CmpsState load_state(const std::string& path);

}  // namespace ringtdvp

#endif
