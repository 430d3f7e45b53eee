#include "insider/value_of_info.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "insider/errors.hpp"
#include "insider/quadrature.hpp"

namespace insider {

namespace {

double paired_stderr(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  if (n < 2) return 0.0;
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

}  // namespace

VoIReport value_of_information(const MarketModel& market, const OUModel& model,
                               const InfoKind& info, const VoIConfig& config) {
  VoIReport report;
  report.method = config.method;
  report.n_paths = config.n_paths;
  const bool informed = info.variant != InfoVariant::NoInfo;
  const bool terminal = info.variant == InfoVariant::Terminal;
  if (informed && !(config.epsilon > 0.0 && config.epsilon < model.horizon)) {
    throw DomainError("value_of_information: need 0 < epsilon < T for informed strategies");
  }
  report.epsilon = informed ? config.epsilon : 0.0;
  const double t_end = informed ? model.horizon - config.epsilon : model.horizon;
  const Strategy uninformed = Strategy::uninformed();
  const Strategy strategy = Strategy::for_info(info);

  if (config.method == VoIMethod::Analytic) {
    AnalyticOptions opt;
    opt.gh_nodes = config.gh_nodes;
    opt.panels = config.panels;
    opt.tol = config.tol;
    const double log_x0 = std::log(market.x0);
    report.v_f = log_x0 + analytic_log_utility(market, model, uninformed, t_end, opt);
    if (!informed) {
      report.v_h = report.v_f;  // identical filtrations, identical value
    } else {
      report.v_h = log_x0 + analytic_log_utility(market, model, strategy, t_end, opt);
    }
    report.delta_v = report.v_h - report.v_f;
    report.mc_stderr = 0.0;
    return report;
  }

  // Paired Monte Carlo with common random numbers: both batches use the same
  // grid, the same per-path streams and therefore the same market shocks.
  (void)terminal;
  PathGrid grid = informed ? PathGrid::geometric(model.horizon, model.horizon - t_end,
                                                 config.n_steps)
                           : PathGrid::uniform(t_end, config.n_steps);
  SimOptions sim;
  sim.n_paths = config.n_paths;
  sim.seed = config.seed;
  sim.threads = config.threads;
  const SimBatch batch_f = simulate_wealth(market, model, uninformed, grid, sim);
  if (!informed) {
    report.v_f = batch_f.mean_final_log_wealth();
    report.v_h = report.v_f;
    report.delta_v = 0.0;
    report.mc_stderr = 0.0;
    return report;
  }
  const SimBatch batch_h = simulate_wealth(market, model, strategy, grid, sim);
  report.v_f = batch_f.mean_final_log_wealth();
  report.v_h = batch_h.mean_final_log_wealth();
  report.delta_v = report.v_h - report.v_f;
  report.mc_stderr = paired_stderr(batch_h.final_log_wealth, batch_f.final_log_wealth);
  return report;
}

namespace {

// First two moments of the terminal-informed weight over the joint Gaussian
// law of (Y_t, Y_T), by tensorized Gauss-Hermite quadrature.
void informed_weight_moments(const MarketModel& market, const OUModel& model, double t,
                             int gh_nodes, double* mean_out, double* var_out) {
  const HermiteRule& rule = gauss_hermite(gh_nodes);
  const double m_t = model.mean_after(t, model.y0);
  const double s_t = model.stddev_after(t);
  const double remain = model.horizon - t;
  const double s_T = model.stddev_after(remain);
  const double eta = market.eta(t);
  const double xi = market.xi(t);
  const double w = market.rho / (model.sigma * xi);
  // f_hat depends on (Y_T - mu(T-t, Y_t)) / sigma(T-t) only
  const double corr_scale = model.sigma * model.sigma * std::exp(-model.k * remain) / s_T;
  double mean = 0.0;
  double mean_sq = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double y = m_t + s_t * rule.nodes[i];
    const double merton = (eta - y) / (xi * xi);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double pi = merton + w * corr_scale * rule.nodes[j];
      const double p = rule.weights[i] * rule.weights[j];
      mean += p * pi;
      mean_sq += p * pi * pi;
    }
  }
  *mean_out = mean;
  *var_out = mean_sq - mean * mean;
}

void linear_fit(const std::vector<double>& x, const std::vector<double>& y, double* slope,
                double* intercept, double* r2) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  *slope = (n * sxy - sx * sy) / denom;
  *intercept = (sy - *slope * sx) / n;
  double ss_res = 0.0;
  const double mean_y = sy / n;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fit = *slope * x[i] + *intercept;
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
  }
  *r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
}

}  // namespace

DivergenceStudy variance_divergence(const MarketModel& market, const OUModel& model,
                                    const std::vector<double>& epsilons, const VoIConfig& config) {
  if (epsilons.size() < 2) throw DomainError("variance_divergence: need at least two epsilons");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0 && epsilons[i] < model.horizon)) {
      throw DomainError("variance_divergence: epsilons must lie in (0, T)");
    }
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) {
      throw DomainError("variance_divergence: epsilons must decrease");
    }
  }
  DivergenceStudy study;
  study.epsilons = epsilons;
  auto variance_at = [&](double t) {
    double mean = 0.0, var = 0.0;
    informed_weight_moments(market, model, t, config.gh_nodes, &mean, &var);
    return var;
  };
  // delta V(eps) = rho^2/(2 sigma^2) int_0^{T-eps} E[f_hat^2] dt; the merton
  // cross term vanishes because E[f_hat | Y_t] = 0, and xi cancels.
  const double coef = market.rho * market.rho / (2.0 * model.sigma * model.sigma);
  auto value_gain_at = [&](double t) {
    const double tau = model.horizon - t;
    const double e = std::exp(-model.k * tau);
    const double s4 = model.sigma * model.sigma * model.sigma * model.sigma;
    return coef * s4 * e * e / model.variance_after(tau);
  };
  QuadratureOptions opt;
  opt.abs_tol = 1e-10;
  opt.rel_tol = 1e-10;
  for (double eps : epsilons) {
    study.values.push_back(integrate(value_gain_at, 0.0, model.horizon - eps, opt).value);
    study.variance_integrals.push_back(
        integrate(variance_at, 0.0, model.horizon - eps, opt).value);
    study.log_inv_eps.push_back(std::log(1.0 / eps));
  }
  study.degenerate_fit = epsilons.size() == 2;
  linear_fit(study.log_inv_eps, study.values, &study.slope, &study.intercept, &study.r2);

  // Lemma-style finite-limit check on the mean weight near the horizon.
  const double eps_min = epsilons.back();
  const double eps_next = epsilons[epsilons.size() - 2];
  double var_unused = 0.0;
  informed_weight_moments(market, model, model.horizon - eps_min, config.gh_nodes,
                          &study.weight_mean_smallest, &var_unused);
  informed_weight_moments(market, model, model.horizon - eps_next, config.gh_nodes,
                          &study.weight_mean_second, &var_unused);
  study.weight_mean_gap = std::abs(study.weight_mean_smallest - study.weight_mean_second) /
                          std::max(1.0, std::abs(study.weight_mean_smallest));
  return study;
}

double psi_function(const OUModel& model, double t) {
  const double s4 = model.sigma * model.sigma * model.sigma * model.sigma;
  return s4 * std::exp(-model.k * (model.horizon - t)) /
         (model.stddev_after(t) * model.stddev_after(model.horizon - t));
}

double psi_integral(const OUModel& model, int panels, double tol) {
  auto f = [&](double t) { return psi_function(model, t); };
  double prev = integrate_sqrt_endpoints(f, 0.0, model.horizon, panels);
  for (int d = 0; d < 8; ++d) {
    panels *= 2;
    const double next = integrate_sqrt_endpoints(f, 0.0, model.horizon, panels);
    if (std::abs(next - prev) <= tol * std::max(1.0, std::abs(next))) return next;
    prev = next;
  }
  throw NonConvergence("psi_integral: refinement did not stabilise");
}

double appendix_I(double tol) {
  static std::mutex mutex;
  static double cached = -1.0;
  static double cached_tol = -1.0;
  std::lock_guard<std::mutex> lock(mutex);
  if (cached >= 0.0 && cached_tol == tol) return cached;
  // (1/Phi_bar(z) + 1/Phi_bar(-z)) Phi'(z)^2 = Phi'(z) (mri(z) + mri(-z))
  auto integrand = [](double z) {
    return normal_pdf(z) * (mills_ratio_inverse(z) + mills_ratio_inverse(-z));
  };
  QuadratureOptions opt;
  opt.abs_tol = tol;
  const double inf = std::numeric_limits<double>::infinity();
  cached = integrate(integrand, -inf, inf, opt).value;
  cached_tol = tol;
  return cached;
}

double appendix_I_bar(const OUModel& model, double t, double c1, double c2, double tol) {
  if (!(c1 < c2)) throw DomainError("appendix_I_bar: interval requires c1 < c2");
  if (!(t < model.horizon)) throw SingularTime("appendix_I_bar: t must be below the horizon");
  const double width = (c2 - c1) / model.stddev_after(model.horizon - t);
  auto integrand = [width](double z1) {
    const double z2 = z1 + width;
    const double r_in = normal_pdf_diff_over_interval(z1, z2);
    const double r_out = normal_pdf_diff_over_complement(z1, z2);
    return -r_in * r_out;  // [Phi'(z1)-Phi'(z2)]^2 / (P_in P_out) >= 0
  };
  QuadratureOptions opt;
  opt.abs_tol = tol;
  const double inf = std::numeric_limits<double>::infinity();
  return integrate(integrand, -inf, inf, opt).value;
}


FinitenessCertificate compute_finiteness_certificate(const MarketModel& market,
                                                     const OUModel& model, const InfoKind& info,
                                                     const CertificateConfig& config) {
  (void)market;  // the certificate concerns the rate-side correction only
  if (info.variant != InfoVariant::HalfLine && info.variant != InfoVariant::Interval) {
    throw DomainError("finiteness certificate: info must be half-line or interval");
  }
  FinitenessCertificate cert;
  auto direct = [&](double t) { return mean_square_correction(model, info, t, config.z_tol); };
  cert.refinement_values =
      sqrt_endpoint_refinements(direct, 0.0, model.horizon, config.panels, config.levels);
  for (std::size_t i = 1; i < cert.refinement_values.size(); ++i) {
    cert.refinement_deltas.push_back(
        std::abs(cert.refinement_values[i] - cert.refinement_values[i - 1]));
  }
  cert.integral_estimate = cert.refinement_values.back();

  const int bound_panels = config.panels << (config.levels - 1);
  if (info.variant == InfoVariant::HalfLine) {
    cert.i_constant = appendix_I();
    const double psi_int =
        integrate_sqrt_endpoints([&](double t) { return psi_function(model, t); }, 0.0,
                                 model.horizon, bound_panels);
    cert.bound = kInvSqrt2Pi * cert.i_constant * psi_int;
  } else {
    auto weighted = [&](double t) {
      return psi_function(model, t) * appendix_I_bar(model, t, info.lower, info.upper);
    };
    cert.bound = kInvSqrt2Pi * integrate_sqrt_endpoints(weighted, 0.0, model.horizon, bound_panels);
    cert.i_constant = 0.0;
  }
  cert.pass = cert.integral_estimate <= cert.bound * (1.0 + config.margin_tol);
  return cert;
}

FinitenessCertificate finiteness_certificate(const MarketModel& market, const OUModel& model,
                                             const InfoKind& info,
                                             const CertificateConfig& config) {
  FinitenessCertificate cert = compute_finiteness_certificate(market, model, info, config);
  if (!cert.pass) {
    throw BoundViolation("finiteness certificate: direct integral exceeds the bound");
  }
  return cert;
}

}  // namespace insider
