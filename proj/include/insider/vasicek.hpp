#pragma once

#include "insider/affine.hpp"
#include "insider/normal.hpp"
#include "insider/rng.hpp"

namespace insider {

// Ornstein-Uhlenbeck short rate dY = k(mu - Y) dt + sigma dB^Y on [0, T]
// (the Vasicek model).  Transitions are stationary: the law of
// (Y_{t+delta} | Y_t = y) depends on (delta, y) only.
struct OUModel {
  double k;
  double mu;
  double sigma;
  double y0;
  double horizon;

  OUModel(double k_, double mu_, double sigma_, double y0_, double horizon_);

  // mu(dt, y) = mu + (y - mu) e^{-k dt}; negative dt is meaningful (it
  // appears in the bridge law evaluated from the terminal side).
  double mean_after(double dt, double y) const { return mu + (y - mu) * std::exp(-k * dt); }

  // sigma^2(dt) = sigma^2 (1 - e^{-2 k dt}) / (2k)
  double variance_after(double dt) const {
    return sigma * sigma * (-std::expm1(-2.0 * k * dt)) / (2.0 * k);
  }
  double stddev_after(double dt) const { return std::sqrt(variance_after(dt)); }

  GaussianLaw transition_law(double delta, double y) const {
    return {mean_after(delta, y), variance_after(delta)};
  }

  // The same process written with constant affine coefficients (-k, k mu, sigma).
  AffineModel as_affine() const;
};

// The insider's enlargement of the market filtration.
enum class InfoVariant { NoInfo, Terminal, HalfLine, Interval };

struct InfoKind {
  InfoVariant variant = InfoVariant::NoInfo;
  double terminal_value = 0.0;  // Terminal
  double threshold = 0.0;       // HalfLine: A = 1{Y_T >= c}
  double lower = 0.0;           // Interval: A = 1{Y_T in (c1, c2)}
  double upper = 0.0;
  int indicator = 1;            // observed A for evaluation-style calls

  static InfoKind none() { return {}; }
  static InfoKind terminal(double y_T) {
    InfoKind k;
    k.variant = InfoVariant::Terminal;
    k.terminal_value = y_T;
    return k;
  }
  static InfoKind half_line(double c, int a = 1);
  static InfoKind interval(double c1, double c2, int a = 1);
};

// Law of (Y_{t+delta} | Y_t = y_t, Y_T = y_T): the Ornstein-Uhlenbeck bridge.
GaussianLaw ou_bridge_law(const OUModel& model, double t, double delta, double y_t, double y_T);

// Information drift under exact terminal knowledge,
// f_hat = sigma^2 e^{-k(T-t)} (y_T - mu(T-t, y_t)) / sigma^2(T-t).
double f_hat(const OUModel& model, double t, double y_t, double y_T);

// Equivalent hyperbolic form k/sinh(k(T-t)) ((mu - y_t) e^{-k(T-t)} - (mu - y_T)).
double f_hat_hyperbolic(const OUModel& model, double t, double y_t, double y_T);

// Information drift when only A = 1{Y_T >= c} is known.  The a = 0 branch is
// the negative tail ratio, so that P f(y,1) + (1-P) f(y,0) = 0 exactly.
double f_tilde(const OUModel& model, double t, double y_t, double c, int a);

// Information drift when A = 1{Y_T in (c1, c2)} is known.
double f_bar(const OUModel& model, double t, double y_t, double c1, double c2, int a);

// Dispatch over the enlargement kind; NoInfo contributes nothing.
double drift_correction(const OUModel& model, const InfoKind& info, double t, double y_t);

// P(A = 1 | Y_t = y) for the indicator enlargements.
double indicator_probability(const OUModel& model, const InfoKind& info, double t, double y);

// Draw the insider's indicator at time zero from the model law.
int sample_indicator(const OUModel& model, const InfoKind& info, RngStream& stream);

// E[correction(Y_t, A)^2] over the joint law of (Y_t, A), for the indicator
// enlargements.  Evaluated in the standardized coordinate of the terminal
// law, where the tail kernels stay bounded, so the value is accurate even
// where the correction concentrates near the horizon.
double mean_square_correction(const OUModel& model, const InfoKind& info, double t,
                              double z_tol = 1e-12);

}  // namespace insider
