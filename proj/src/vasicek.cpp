#include "insider/vasicek.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "insider/errors.hpp"
#include "insider/quadrature.hpp"

namespace insider {

namespace {

constexpr double kSingularFraction = 1e-12;

void check_strictly_before_horizon(const OUModel& model, double t, const char* what) {
  if (t < 0.0) throw DomainError(std::string(what) + ": negative time");
  if (!(t < model.horizon) || model.horizon - t <= kSingularFraction * model.horizon) {
    throw SingularTime(std::string(what) + ": time too close to the information horizon");
  }
}

}  // namespace

OUModel::OUModel(double k_, double mu_, double sigma_, double y0_, double horizon_)
    : k(k_), mu(mu_), sigma(sigma_), y0(y0_), horizon(horizon_) {
  if (!(k > 0.0)) throw DomainError("OU model: mean reversion k must be positive");
  if (!(sigma > 0.0)) throw DomainError("OU model: volatility sigma must be positive");
  if (!(horizon > 0.0)) throw DomainError("OU model: horizon must be positive");
}

AffineModel OUModel::as_affine() const {
  return AffineModel(CoefficientFn::constant(-k), CoefficientFn::constant(k * mu),
                     CoefficientFn::constant(sigma), y0, horizon);
}

InfoKind InfoKind::half_line(double c, int a) {
  if (a != 0 && a != 1) throw DomainError("info: indicator must be 0 or 1");
  InfoKind k;
  k.variant = InfoVariant::HalfLine;
  k.threshold = c;
  k.indicator = a;
  return k;
}

InfoKind InfoKind::interval(double c1, double c2, int a) {
  if (!(c1 < c2)) throw DomainError("info: interval requires c1 < c2");
  if (a != 0 && a != 1) throw DomainError("info: indicator must be 0 or 1");
  InfoKind k;
  k.variant = InfoVariant::Interval;
  k.lower = c1;
  k.upper = c2;
  k.indicator = a;
  return k;
}

GaussianLaw ou_bridge_law(const OUModel& model, double t, double delta, double y_t, double y_T) {
  if (t < 0.0 || delta < 0.0) throw DomainError("ou bridge law: negative time");
  const double T = model.horizon;
  if (!(t + delta < T)) throw DomainError("ou bridge law: require t + delta < T");
  if (delta == 0.0) return {y_t, 0.0};
  const double remain = T - t;
  const double after = T - t - delta;
  const double var_remain = model.variance_after(remain);
  const double w_terminal =
      model.variance_after(delta) * std::exp(-2.0 * model.k * after) / var_remain;
  const double w_current = model.variance_after(after) / var_remain;
  // the terminal contribution runs the mean function backwards from T
  const double mean = w_terminal * model.mean_after(delta - remain, y_T) +
                      w_current * model.mean_after(delta, y_t);
  const double variance = model.variance_after(after) * model.variance_after(delta) / var_remain;
  return {mean, variance};
}

double f_hat(const OUModel& model, double t, double y_t, double y_T) {
  check_strictly_before_horizon(model, t, "f_hat");
  const double remain = model.horizon - t;
  const double scale = model.sigma * model.sigma * std::exp(-model.k * remain);
  return scale * (y_T - model.mean_after(remain, y_t)) / model.variance_after(remain);
}

double f_hat_hyperbolic(const OUModel& model, double t, double y_t, double y_T) {
  check_strictly_before_horizon(model, t, "f_hat");
  const double x = model.k * (model.horizon - t);
  return model.k / std::sinh(x) *
         ((model.mu - y_t) * std::exp(-x) - (model.mu - y_T));
}

double f_tilde(const OUModel& model, double t, double y_t, double c, int a) {
  check_strictly_before_horizon(model, t, "f_tilde");
  if (a != 0 && a != 1) throw DomainError("f_tilde: indicator must be 0 or 1");
  const double remain = model.horizon - t;
  const double s = model.stddev_after(remain);
  const double z = (model.mean_after(remain, y_t) - c) / s;
  const double scale = model.sigma * model.sigma * std::exp(-model.k * remain) / s;
  // a = 1: Phi'(z)/Phi(z); a = 0: -Phi'(z)/Phi_bar(z).  Both via the Mills
  // ratio so an interval far in a tail still yields a finite correction.
  if (a == 1) return scale * mills_ratio_inverse(-z);
  return -scale * mills_ratio_inverse(z);
}

double f_bar(const OUModel& model, double t, double y_t, double c1, double c2, int a) {
  check_strictly_before_horizon(model, t, "f_bar");
  if (!(c1 < c2)) throw DomainError("f_bar: interval requires c1 < c2");
  if (a != 0 && a != 1) throw DomainError("f_bar: indicator must be 0 or 1");
  const double remain = model.horizon - t;
  const double s = model.stddev_after(remain);
  const double m = model.mean_after(remain, y_t);
  const double z1 = (c1 - m) / s;
  const double z2 = (c2 - m) / s;
  const double scale = model.sigma * model.sigma * std::exp(-model.k * remain) / s;
  if (a == 1) return scale * normal_pdf_diff_over_interval(z1, z2);
  return scale * normal_pdf_diff_over_complement(z1, z2);
}

double drift_correction(const OUModel& model, const InfoKind& info, double t, double y_t) {
  switch (info.variant) {
    case InfoVariant::NoInfo:
      return 0.0;
    case InfoVariant::Terminal:
      return f_hat(model, t, y_t, info.terminal_value);
    case InfoVariant::HalfLine:
      return f_tilde(model, t, y_t, info.threshold, info.indicator);
    case InfoVariant::Interval:
      return f_bar(model, t, y_t, info.lower, info.upper, info.indicator);
  }
  return 0.0;
}

double indicator_probability(const OUModel& model, const InfoKind& info, double t, double y) {
  const double remain = model.horizon - t;
  if (remain < 0.0) throw DomainError("indicator probability: time beyond horizon");
  const double s = model.stddev_after(remain);
  const double m = model.mean_after(remain, y);
  switch (info.variant) {
    case InfoVariant::HalfLine:
      return normal_sf((info.threshold - m) / s);
    case InfoVariant::Interval:
      return normal_interval_probability((info.lower - m) / s, (info.upper - m) / s);
    default:
      throw DomainError("indicator probability: info kind carries no indicator");
  }
}

int sample_indicator(const OUModel& model, const InfoKind& info, RngStream& stream) {
  const double p = indicator_probability(model, info, 0.0, model.y0);
  return stream.uniform() < p ? 1 : 0;
}


namespace {

// tail kernel of E[f_tilde^2]: phi(z) (mri(z) + mri(-z))
double half_line_kernel(double z) {
  return normal_pdf(z) * (mills_ratio_inverse(z) + mills_ratio_inverse(-z));
}

// tail kernel of E[f_bar^2]: [phi(z1) - phi(z2)]^2 / (P_in P_out)
double interval_kernel(double z1, double z2) {
  return -normal_pdf_diff_over_interval(z1, z2) * normal_pdf_diff_over_complement(z1, z2);
}

}  // namespace

// The expectation is taken over the standardized marginal a = (y - m_t)/s_t,
// where the tail kernel is evaluated at z = z0 + lambda a.  The density spike
// sits at a = 0 and the kernel feature at a_star; both become panel endpoints
// so the adaptive rule cannot step over either, whatever their width ratio.
double mean_square_correction(const OUModel& model, const InfoKind& info, double t,
                              double z_tol) {
  const double tau = model.horizon - t;
  if (!(tau > 0.0)) throw SingularTime("mean_square_correction: t at or beyond the horizon");
  if (info.variant != InfoVariant::HalfLine && info.variant != InfoVariant::Interval) {
    throw DomainError("mean_square_correction: info must be half-line or interval");
  }
  const double s = model.stddev_after(tau);
  const double m_t = model.mean_after(t, model.y0);
  const double s_t = model.stddev_after(t);
  const double scale = model.sigma * model.sigma * std::exp(-model.k * tau) / s;
  const double lambda = std::exp(-model.k * tau) * s_t / s;

  const bool half_line = info.variant == InfoVariant::HalfLine;
  const double width = half_line ? 0.0 : (info.upper - info.lower) / s;
  // z-coordinate at the marginal's center a = 0
  const double z0 = half_line ? (model.mean_after(tau, m_t) - info.threshold) / s
                              : (info.lower - model.mean_after(tau, m_t)) / s;
  auto kernel = [&](double z) {
    return half_line ? half_line_kernel(z) : interval_kernel(z, z + width);
  };
  if (s_t == 0.0) return scale * scale * kernel(z0);

  auto integrand = [&](double a) {
    const double z = half_line ? z0 + lambda * a : z0 - lambda * a;
    return normal_pdf(a) * kernel(z);
  };
  // kernel feature: z = 0 for the half-line ratio, the interval midpoint
  // otherwise; its bulk is bracketed so it always spans a panel of its own
  const double z_feature = half_line ? 0.0 : -0.5 * width;
  const double a_star = (z_feature - z0) / (half_line ? lambda : -lambda);
  const double half_span = (half_line ? 8.0 : 0.5 * width + 8.0) / lambda;

  std::vector<double> cuts = {0.0};
  for (double c : {a_star - half_span, a_star, a_star + half_span}) {
    if (std::isfinite(c) && std::abs(c) <= 45.0) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             cuts.end());
  QuadratureOptions opt;
  opt.abs_tol = z_tol;
  const double inf = std::numeric_limits<double>::infinity();
  double acc = integrate(integrand, -inf, cuts.front(), opt).value;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    acc += integrate(integrand, cuts[i], cuts[i + 1], opt).value;
  }
  acc += integrate(integrand, cuts.back(), inf, opt).value;
  return scale * scale * acc;
}

}  // namespace insider
