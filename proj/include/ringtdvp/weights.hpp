#ifndef RINGTDVP_WEIGHTS_HPP
#define RINGTDVP_WEIGHTS_HPP

#include "ringtdvp/core.hpp"

namespace ringtdvp {

// Divided differences of f(t) = e^{L t}, evaluated stably near confluence.
// dq: first divided difference, the integral int_0^L e^{x a + (L-x) b} dx.
cxd weight_dq(cxd a, cxd b, double L);

// Second divided difference: the simplex double integral
// int_0^L int_x^L e^{x a + (y-x) b + (L-y) c} dy dx, fully symmetric in (a,b,c).
cxd weight_triple(cxd a, cxd b, cxd c, double L);

// Coincidence weight with a repeated eigenvalue:
//   L e^{L rep}/(rep - other) + (e^{L other} - e^{L rep})/(rep - other)^2
// equal to weight_triple(rep, rep, other); kept separate because the cutoff
// machinery needs the combined form only when both indices are explicit.
cxd weight_pair(cxd rep, cxd other, double L);

// The L e^{L rep}/(rep - other) part alone (used when the difference-quotient
// part is resummed through the pseudo-inverse tails instead).
inline cxd weight_pair_L_only(cxd rep, cxd other, double L) {
  return L * std::exp(L * rep) / (rep - other);
}

inline bool lambdas_close(cxd a, cxd b) {
  return std::abs(a - b) < 1e-8 * std::max(1.0, std::abs(a));
}

}  // namespace ringtdvp

#endif
