#include "insider/affine.hpp"

#include <algorithm>
#include <cmath>

#include "insider/errors.hpp"
#include "insider/quadrature.hpp"

namespace insider {

namespace {

constexpr double kSingularFraction = 1e-12;

void check_interval(double u, double s, const char* what) {
  if (!(u <= s)) throw DomainError(std::string(what) + ": require an ordered time interval");
  if (u < 0.0) throw DomainError(std::string(what) + ": negative time");
}

}  // namespace

AffineModel::AffineModel(CoefficientFn a1, CoefficientFn a2, CoefficientFn b2, double r0,
                         double horizon)
    : a1_(std::move(a1)), a2_(std::move(a2)), b2_(std::move(b2)), r0_(r0), horizon_(horizon) {
  if (!(horizon_ > 0.0)) throw DomainError("affine model: horizon must be positive");
  if (!(b2_.min_on(0.0, horizon_) > 0.0)) {
    throw DomainError("affine model: b2 must be bounded away from zero on [0, T]");
  }
}

double AffineModel::psi(double s, double t) const {
  check_interval(std::min(s, t), std::max(s, t), "psi");
  if (s > t) throw DomainError("psi: require s <= t");
  return std::exp(a1_.integral(s, t));
}

double AffineModel::profile_integral(const CoefficientFn& g, int p, double u, double s) const {
  check_interval(u, s, "profile integral");
  if (u == s) return 0.0;
  if (a1_.flat() && g.flat()) {
    std::vector<double> cuts;
    cuts.push_back(u);
    std::vector<double> mids;
    a1_.append_breakpoints(u, s, mids);
    g.append_breakpoints(u, s, mids);
    std::sort(mids.begin(), mids.end());
    for (double m : mids) {
      if (m > cuts.back()) cuts.push_back(m);
    }
    cuts.push_back(s);
    double acc = 0.0;
    double log_psi = a1_.integral(0.0, u);  // A(left edge)
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double left = cuts[i];
      const double right = cuts[i + 1];
      const double len = right - left;
      const double alpha = a1_(0.5 * (left + right));
      const double gval = g(0.5 * (left + right));
      const double weight = std::pow(gval, p) * std::exp(-p * log_psi);
      const double rate = p * alpha;
      // int_0^len exp(-rate x) dx
      const double piece = (rate == 0.0) ? len : -std::expm1(-rate * len) / rate;
      acc += weight * piece;
      log_psi += alpha * len;
    }
    return acc;
  }
  auto integrand = [&](double x) {
    return std::pow(g(x), p) * std::exp(-p * a1_.integral(0.0, x));
  };
  QuadratureOptions opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-12;
  return integrate_value(integrand, u, s, opt);
}

double AffineModel::delta_integral(double u, double s) const {
  return profile_integral(b2_, 2, u, s);
}

double AffineModel::nabla_integral(double u, double s) const {
  return profile_integral(a2_, 1, u, s);
}

GaussianLaw AffineModel::transition_law(double u, double s, double r_u) const {
  check_interval(u, s, "transition law");
  const double psi_us = psi(u, s);
  const double psi_s = psi0(s);
  const double mean = psi_us * r_u + psi_s * nabla_integral(u, s);
  const double variance = psi_s * psi_s * delta_integral(u, s);
  return {mean, variance};
}

GaussianLaw AffineModel::bridge_law(double t, double delta, double r_t,
                                    const BridgeCondition& cond) const {
  if (cond.terminal_time != horizon_) {
    throw DomainError("bridge law: condition must pin the model horizon");
  }
  if (t < 0.0 || delta < 0.0) throw DomainError("bridge law: negative time");
  const double T = horizon_;
  if (!(t + delta < T)) throw DomainError("bridge law: require t + delta < T");
  if (delta == 0.0) return {r_t, 0.0};

  const double td = t + delta;
  const double d_t_td = delta_integral(t, td);
  const double d_td_T = delta_integral(td, T);
  const double d_t_T = d_t_td + d_td_T;
  const double w_future = d_td_T / d_t_T;
  const double w_past = d_t_td / d_t_T;
  const double psi_td = psi0(td);
  const double mean = w_future * (psi(t, td) * r_t + psi_td * nabla_integral(t, td)) +
                      w_past * (cond.terminal_value - psi0(T) * nabla_integral(td, T)) / psi(td, T);
  const double variance = w_future * psi_td * psi_td * d_t_td;
  return {mean, variance};
}

double AffineModel::g_hat(double t, double r_t, double r_T) const {
  const double T = horizon_;
  if (!(t < T) || T - t <= kSingularFraction * T) {
    throw SingularTime("g_hat: time too close to the information horizon");
  }
  if (t < 0.0) throw DomainError("g_hat: negative time");
  const double bp = b2_(t) / psi0(t);
  const double num = r_T - psi(t, T) * r_t - psi0(T) * nabla_integral(t, T);
  return bp * bp * num / (psi(t, T) * delta_integral(t, T));
}

ConditionedAffine AffineModel::conditioned_coefficients(const BridgeCondition& cond) const {
  if (cond.terminal_time != horizon_) {
    throw DomainError("conditioned coefficients: condition must pin the model horizon");
  }
  return ConditionedAffine(*this, cond);
}

std::vector<double> AffineModel::simulate_rate(std::span<const double> times, RngStream& stream,
                                               const std::optional<BridgeCondition>& cond) const {
  if (times.empty()) return {};
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i - 1] < times[i])) throw DomainError("simulate_rate: grid must increase");
  }
  if (times.back() > horizon_) throw DomainError("simulate_rate: grid exceeds the horizon");
  if (cond && !(times.back() < horizon_)) {
    throw SingularTime("simulate_rate: conditioned grid must stop strictly before T");
  }
  std::vector<double> path(times.size());
  double r = r0_;
  if (times[0] > 0.0) {
    const GaussianLaw law = cond ? bridge_law(0.0, times[0], r, *cond)
                                 : transition_law(0.0, times[0], r);
    r = law.mean + law.stddev() * stream.normal();
  }
  path[0] = r;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double t = times[i - 1];
    const double dt = times[i] - t;
    const GaussianLaw law = cond ? bridge_law(t, dt, r, *cond) : transition_law(t, times[i], r);
    r = law.mean + law.stddev() * stream.normal();
    path[i] = r;
  }
  return path;
}

double ConditionedAffine::a1(double t) const {
  const double bp = model_.b2()(t) / model_.psi0(t);
  return model_.a1()(t) - bp * bp / model_.delta_integral(t, model_.horizon());
}

double ConditionedAffine::a2(double t) const {
  const double T = model_.horizon();
  const double bp = model_.b2()(t) / model_.psi0(t);
  const double num = cond_.terminal_value - model_.psi0(T) * model_.nabla_integral(t, T);
  return model_.a2()(t) + bp * bp * num / (model_.psi(t, T) * model_.delta_integral(t, T));
}

}  // namespace insider
