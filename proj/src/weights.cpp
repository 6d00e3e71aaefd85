#include "ringtdvp/weights.hpp"

#include <algorithm>
#include <array>

namespace ringtdvp {

namespace {

// Switch to series expansions once |L * gap| drops below this radius; the
// direct quotient forms lose digits to cancellation well before the series
// stops converging quickly.
constexpr double kSeriesRadius = 0.5;
constexpr int kSeriesTerms = 24;

// phi1(z) = (e^z - 1)/z = sum_{n>=0} z^n/(n+1)!
cxd phi1_series(cxd z) {
  cxd term(1.0, 0.0), sum(1.0, 0.0);
  for (int n = 1; n < kSeriesTerms; ++n) {
    term *= z / static_cast<double>(n + 1);
    sum += term;
  }
  return sum;
}

// g(z) = (e^z (z - 1) + 1)/z^2 = sum_{n>=0} (n+1) z^n/(n+2)!
cxd gfun_series(cxd z) {
  double fact = 2.0;  // (n+2)!
  cxd zn(1.0, 0.0), sum(0.5, 0.0);
  for (int n = 1; n < kSeriesTerms; ++n) {
    zn *= z;
    fact *= static_cast<double>(n + 2);
    sum += static_cast<double>(n + 1) * zn / fact;
  }
  return sum;
}

}  // namespace

cxd weight_dq(cxd a, cxd b, double L) {
  const cxd z = L * (a - b);
  if (std::abs(z) < kSeriesRadius) return std::exp(L * b) * L * phi1_series(z);
  return (std::exp(L * a) - std::exp(L * b)) / (a - b);
}

cxd weight_pair(cxd rep, cxd other, double L) {
  const cxd d = rep - other;
  const cxd z = L * d;
  if (std::abs(z) < kSeriesRadius) return std::exp(L * other) * L * L * gfun_series(z);
  return L * std::exp(L * rep) / d + (std::exp(L * other) - std::exp(L * rep)) / (d * d);
}

cxd weight_triple(cxd a, cxd b, cxd c, double L) {
  const double gab = std::abs(L * (a - b));
  const double gac = std::abs(L * (a - c));
  const double gbc = std::abs(L * (b - c));
  const double gmax = std::max({gab, gac, gbc});
  if (gmax >= kSeriesRadius) {
    // Divide by the largest gap; the two first divided differences in the
    // numerator are themselves evaluated stably by weight_dq.
    if (gab >= gac && gab >= gbc) return (weight_dq(c, a, L) - weight_dq(c, b, L)) / (a - b);
    if (gac >= gbc) return (weight_dq(b, a, L) - weight_dq(b, c, L)) / (a - c);
    return (weight_dq(a, b, L) - weight_dq(a, c, L)) / (b - c);
  }
  // Tight cluster: expand around the centroid m. With d_i = L(lam_i - m),
  //   f[a,b,c] = L^2 e^{L m} sum_n h_n(d_a, d_b, d_c)/(n+2)!
  // where h_n is the complete homogeneous symmetric polynomial.
  const cxd m = (a + b + c) / 3.0;
  const std::array<cxd, 3> d = {L * (a - m), L * (b - m), L * (c - m)};
  cxd sum(0.0, 0.0);
  double fact = 2.0;  // (n+2)!
  for (int n = 0; n < kSeriesTerms; ++n) {
    if (n > 0) fact *= static_cast<double>(n + 2);
    cxd hn(0.0, 0.0);
    cxd pa(1.0, 0.0);
    for (int i = 0; i <= n; ++i) {
      cxd pb(1.0, 0.0);
      for (int j = 0; j <= n - i; ++j) {
        cxd pc(1.0, 0.0);
        for (int k = 0; k < n - i - j; ++k) pc *= d[2];
        hn += pa * pb * pc;
        pb *= d[1];
      }
      pa *= d[0];
    }
    sum += hn / fact;
  }
  return L * L * std::exp(L * m) * sum;
}

}  // namespace ringtdvp
