#pragma once

#include <algorithm>
#include <cmath>

namespace insider {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;  // 1/sqrt(2*pi)
inline constexpr double kSqrt2 = 1.41421356237309504880;

// (mean, variance) pair returned by every conditioning operation.
struct GaussianLaw {
  double mean = 0.0;
  double variance = 0.0;

  double stddev() const { return std::sqrt(variance); }
};

inline double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

// Phi and the survival function Phi_bar = 1 - Phi, both through erfc so that
// the tails keep relative accuracy instead of cancelling against 1.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }
inline double normal_sf(double z) { return 0.5 * std::erfc(z / kSqrt2); }

// Phi'(z) / Phi_bar(z), the reciprocal Mills ratio.  Direct division is fine
// while the survival function is comfortably normal; past z = 8 the Laplace
// continued fraction takes over, so the ratio stays O(z) for any z without
// touching subnormals.
inline double mills_ratio_inverse(double z) {
  if (z <= 8.0) return normal_pdf(z) / normal_sf(z);
  double tail = z;  // z + 1/(z + 2/(z + 3/(... + 64/z)))
  for (int k = 64; k >= 1; --k) tail = z + static_cast<double>(k) / tail;
  return tail;
}

// P(z1 < Z < z2) without cancellation when the interval sits in either tail.
inline double normal_interval_probability(double z1, double z2) {
  if (z1 >= 0.0) return normal_sf(z1) - normal_sf(z2);
  if (z2 <= 0.0) return normal_cdf(z2) - normal_cdf(z1);
  return 1.0 - (normal_cdf(z1) + normal_sf(z2));
}

// (Phi'(z1) - Phi'(z2)) / P(z1 < Z < z2) for z1 < z2.  When the interval is
// deep in a tail both numerator and denominator underflow, so the common
// density is factored out and the masses are rebuilt from Mills ratios.
inline double normal_pdf_diff_over_interval(double z1, double z2) {
  constexpr double zc = 8.0;
  if (z1 >= zc) {
    const double m1 = mills_ratio_inverse(z1);
    const double m2 = mills_ratio_inverse(z2);
    const double q = std::exp(0.5 * (z1 - z2) * (z1 + z2));  // Phi'(z2)/Phi'(z1)
    return (1.0 - q) / (1.0 / m1 - q / m2);
  }
  if (z2 <= -zc) {
    const double mw1 = mills_ratio_inverse(-z2);
    const double mw2 = mills_ratio_inverse(-z1);
    const double q = std::exp(0.5 * (z2 - z1) * (z2 + z1));  // Phi'(z1)/Phi'(z2)
    return -(1.0 - q) / (1.0 / mw1 - q / mw2);
  }
  return (normal_pdf(z1) - normal_pdf(z2)) / normal_interval_probability(z1, z2);
}

// (Phi'(z2) - Phi'(z1)) / P(Z <= z1 or Z >= z2) for z1 < z2.  The complement
// mass is tiny only when both tails are far out; that branch factors out the
// dominant density so the ratio survives any z.
inline double normal_pdf_diff_over_complement(double z1, double z2) {
  constexpr double zc = 8.0;
  if (z1 <= -zc && z2 >= zc) {
    const double l1 = -0.5 * z1 * z1;
    const double l2 = -0.5 * z2 * z2;
    const double lm = std::max(l1, l2);
    const double e1 = std::exp(l1 - lm);
    const double e2 = std::exp(l2 - lm);
    const double m_low = mills_ratio_inverse(-z1);
    const double m_up = mills_ratio_inverse(z2);
    return (e2 - e1) / (e1 / m_low + e2 / m_up);
  }
  return (normal_pdf(z2) - normal_pdf(z1)) / (normal_cdf(z1) + normal_sf(z2));
}

}  // namespace insider
