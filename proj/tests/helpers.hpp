#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "insider/affine.hpp"
#include "insider/rng.hpp"

namespace testutil {

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

inline double ks_critical_1pct(std::size_t n, std::size_t m) {
  return 1.6276236115189503 * std::sqrt(static_cast<double>(n + m) /
                                        (static_cast<double>(n) * static_cast<double>(m)));
}

inline double uniform_in(insider::RngStream& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.uniform();
}

inline insider::CoefficientFn random_piecewise(insider::RngStream& rng, double horizon, double lo,
                                               double hi) {
  const int pieces = 1 + static_cast<int>(rng.uniform() * 4.0);
  std::vector<double> breaks;
  for (int i = 1; i < pieces; ++i) breaks.push_back(horizon * i / pieces * (0.8 + 0.4 * rng.uniform()));
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  std::vector<double> values;
  for (std::size_t i = 0; i <= breaks.size(); ++i) values.push_back(uniform_in(rng, lo, hi));
  return insider::CoefficientFn::piecewise_constant(breaks, values);
}

// Coefficient-matching identities from the Gaussian-bridge derivation: the
// quadratic form on the right-hand side must collapse to (b - mean)^2 with the
// bridge-law mean.  Returns the worst scaled mismatch across the three
// coefficients (quadratic, linear, constant).
inline double bridge_identity_mismatch(const insider::AffineModel& model, double t, double delta,
                                       double a, double c) {
  const double T = model.horizon();
  const double td = t + delta;
  const double d_t_td = model.delta_integral(t, td);
  const double d_td_T = model.delta_integral(td, T);
  const double d_t_T = d_t_td + d_td_T;
  const double psi_td = model.psi0(td);
  const double psi_T = model.psi0(T);
  const double n_t_td = model.nabla_integral(t, td);
  const double n_td_T = model.nabla_integral(td, T);
  const double n_t_T = model.nabla_integral(t, T);

  auto rhs = [&](double b) {
    const double term1 = (d_td_T / d_t_T) *
                         std::pow(b - a * model.psi(t, td) - n_t_td * psi_td, 2);
    const double term2 = (d_t_td / d_t_T) * (psi_td * psi_td) / (psi_T * psi_T) *
                         std::pow(c - b * model.psi(td, T) - n_td_T * psi_T, 2);
    const double term3 = (d_t_td * d_td_T / (d_t_T * d_t_T)) * (psi_td * psi_td) /
                         (psi_T * psi_T) *
                         std::pow(c - a * model.psi(t, T) - n_t_T * psi_T, 2);
    return term1 + term2 - term3;
  };

  const double r0 = rhs(0.0);
  const double rp = rhs(1.0);
  const double rm = rhs(-1.0);
  const double quad = 0.5 * (rp + rm) - r0;
  const double lin = 0.5 * (rp - rm);
  const double mean = model.bridge_law(t, delta, a, {c, T}).mean;

  const double scale = std::max({1.0, std::abs(mean), mean * mean});
  double worst = std::abs(quad - 1.0);                        // quadratic coefficient: 1
  worst = std::max(worst, std::abs(lin + 2.0 * mean) / scale);  // linear coefficient: -2 mean
  worst = std::max(worst, std::abs(r0 - mean * mean) / scale);  // constant coefficient: mean^2
  return worst;
}

}  // namespace testutil
