#include "insider/portfolio.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "insider/errors.hpp"
#include "insider/quadrature.hpp"

namespace insider {

namespace {

constexpr std::size_t kBlockSize = 1024;
constexpr std::uint64_t kDatumStreamOffset = 1ull << 63;

double require_positive_min(const CoefficientFn& fn, double horizon, const char* what) {
  const double m = fn.min_on(0.0, horizon);
  if (!(m > 0.0)) throw DomainError(std::string(what) + " must be bounded away from zero");
  return m;
}

}  // namespace

MarketModel::MarketModel(CoefficientFn eta_, CoefficientFn xi_, double rho_, double x0_, double s0_,
                         double horizon)
    : eta(std::move(eta_)), xi(std::move(xi_)), rho(rho_), x0(x0_), s0(s0_) {
  if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("market: |rho| must be <= 1");
  if (!(x0 > 0.0)) throw DomainError("market: initial wealth must be positive");
  if (!(s0 > 0.0)) throw DomainError("market: initial price must be positive");
  require_positive_min(xi, horizon, "market: xi");
}

PathGrid PathGrid::uniform(double t_end, std::size_t n_steps) {
  if (!(t_end > 0.0) || n_steps == 0) throw DomainError("grid: need t_end > 0 and steps >= 1");
  PathGrid grid;
  grid.times.resize(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) {
    grid.times[i] = t_end * static_cast<double>(i) / static_cast<double>(n_steps);
  }
  return grid;
}

PathGrid PathGrid::geometric(double horizon, double epsilon, std::size_t n_steps) {
  if (!(horizon > 0.0) || !(epsilon > 0.0) || !(epsilon < horizon) || n_steps == 0) {
    throw DomainError("grid: need 0 < epsilon < horizon and steps >= 1");
  }
  PathGrid grid;
  grid.times.resize(n_steps + 1);
  const double ratio = std::pow(epsilon / horizon, 1.0 / static_cast<double>(n_steps));
  grid.times[0] = 0.0;
  double distance = horizon;  // distance to the horizon, shrinks geometrically
  for (std::size_t i = 1; i <= n_steps; ++i) {
    distance *= ratio;
    grid.times[i] = horizon - distance;
  }
  grid.times[n_steps] = horizon - epsilon;
  return grid;
}

void PathGrid::validate() const {
  if (times.size() < 2 || times[0] != 0.0) throw DomainError("grid: must start at 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i - 1] < times[i])) throw DomainError("grid: times must strictly increase");
  }
}

Strategy::Strategy(Filtration f, InfoKind i) : filtration(f), info(i) {
  const bool ok = (f == Filtration::F && i.variant == InfoVariant::NoInfo) ||
                  (f == Filtration::G && i.variant == InfoVariant::Terminal) ||
                  (f == Filtration::Gtilde && i.variant == InfoVariant::HalfLine) ||
                  (f == Filtration::Gbar && i.variant == InfoVariant::Interval);
  if (!ok) throw DomainError("strategy: filtration and info kind are inconsistent");
}

Strategy Strategy::for_info(const InfoKind& info) {
  switch (info.variant) {
    case InfoVariant::NoInfo:
      return Strategy(Filtration::F, info);
    case InfoVariant::Terminal:
      return Strategy(Filtration::G, info);
    case InfoVariant::HalfLine:
      return Strategy(Filtration::Gtilde, info);
    case InfoVariant::Interval:
      return Strategy(Filtration::Gbar, info);
  }
  return Strategy();
}

double merton_weight(const MarketModel& market, double t, double y) {
  const double xi = market.xi(t);
  return (market.eta(t) - y) / (xi * xi);
}

double informed_weight(const MarketModel& market, const OUModel& model, const InfoKind& info,
                       double t, double y) {
  const double base = merton_weight(market, t, y);
  if (info.variant == InfoVariant::NoInfo) return base;
  return base + market.rho / (model.sigma * market.xi(t)) * drift_correction(model, info, t, y);
}

double informed_weight(const MarketModel& market, const AffineModel& model,
                       const BridgeCondition& cond, double t, double r) {
  const double base = merton_weight(market, t, r);
  return base +
         market.rho / (model.b2()(t) * market.xi(t)) * model.g_hat(t, r, cond.terminal_value);
}

double SimBatch::mean_final_log_wealth() const {
  double sum = 0.0;
  for (double v : final_log_wealth) sum += v;
  return sum / static_cast<double>(final_log_wealth.size());
}

double SimBatch::stderr_final_log_wealth() const {
  const double n = static_cast<double>(final_log_wealth.size());
  if (n < 2) return 0.0;
  const double mean = mean_final_log_wealth();
  double ss = 0.0;
  for (double v : final_log_wealth) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0) / n);
}

namespace {

// Per-step tables for the OU rate under each filtration.  All laws here are
// closed-form, so the hot loop is a handful of fused multiplies per step.
struct OUStepTables {
  const OUModel* model = nullptr;
  Filtration filt = Filtration::F;
  InfoKind info;

  std::vector<double> t;   // n+1 nodes
  std::vector<double> h;   // n steps
  std::vector<double> eta, xi, inv_xi_sq, wcoef;  // per node
  // exact transition: y' = mu + (y - mu) e_step + sd_trans Z
  std::vector<double> e_step, sd_trans, sqrt_h;
  // terminal bridge: y' = bA + bB y + bC y_T + bSD Z
  std::vector<double> bA, bB, bC, bSD;
  // corrections per node
  std::vector<double> fh_scale, fh_e;             // terminal
  std::vector<double> cs, zA, zB, z1A, z2A;       // indicator kinds

  double bs_coef = 0.0;  // rho / sigma, the dB^S drift loading

  void build(const MarketModel& market, const OUModel& m, const Strategy& strategy,
             const PathGrid& grid) {
    model = &m;
    filt = strategy.filtration;
    info = strategy.info;
    const std::size_t n = grid.n_steps();
    t = grid.times;
    h.resize(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = t[i + 1] - t[i];
    eta.resize(n + 1);
    xi.resize(n + 1);
    inv_xi_sq.resize(n + 1);
    wcoef.resize(n + 1);
    bs_coef = market.rho / m.sigma;
    for (std::size_t i = 0; i <= n; ++i) {
      eta[i] = market.eta(t[i]);
      xi[i] = market.xi(t[i]);
      inv_xi_sq[i] = 1.0 / (xi[i] * xi[i]);
      wcoef[i] = market.rho / (m.sigma * xi[i]);
    }
    e_step.resize(n);
    sd_trans.resize(n);
    sqrt_h.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      e_step[i] = std::exp(-m.k * h[i]);
      sd_trans[i] = m.stddev_after(h[i]);
      sqrt_h[i] = std::sqrt(h[i]);
    }
    if (filt == Filtration::G) {
      bA.resize(n);
      bB.resize(n);
      bC.resize(n);
      bSD.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double remain = m.horizon - t[i];
        const double after = m.horizon - t[i + 1];
        const double var_remain = m.variance_after(remain);
        const double w_term = m.variance_after(h[i]) * std::exp(-2.0 * m.k * after) / var_remain;
        const double w_cur = m.variance_after(after) / var_remain;
        const double e_back = std::exp(m.k * after);   // mean function run backwards from T
        bA[i] = w_term * m.mu * (1.0 - e_back) + w_cur * m.mu * (1.0 - e_step[i]);
        bB[i] = w_cur * e_step[i];
        bC[i] = w_term * e_back;
        bSD[i] = std::sqrt(m.variance_after(after) * m.variance_after(h[i]) / var_remain);
      }
      fh_scale.resize(n + 1);
      fh_e.resize(n + 1);
      for (std::size_t i = 0; i <= n; ++i) {
        const double remain = m.horizon - t[i];
        fh_e[i] = std::exp(-m.k * remain);
        fh_scale[i] = m.sigma * m.sigma * fh_e[i] / m.variance_after(remain);
      }
    } else if (filt == Filtration::Gtilde || filt == Filtration::Gbar) {
      cs.resize(n + 1);
      zA.resize(n + 1);
      zB.resize(n + 1);
      z1A.resize(n + 1);
      z2A.resize(n + 1);
      for (std::size_t i = 0; i <= n; ++i) {
        const double remain = m.horizon - t[i];
        const double s = m.stddev_after(remain);
        const double e = std::exp(-m.k * remain);
        cs[i] = m.sigma * m.sigma * e / s;
        zB[i] = e / s;
        zA[i] = (m.mu * (1.0 - e) - info.threshold) / s;   // z = zA + zB y (half-line)
        z1A[i] = (info.lower - m.mu * (1.0 - e)) / s;      // z1 = z1A - zB y (interval)
        z2A[i] = (info.upper - m.mu * (1.0 - e)) / s;
      }
    }
  }

  double draw_datum(RngStream& datum_stream) const {
    const OUModel& m = *model;
    switch (filt) {
      case Filtration::F:
        return std::numeric_limits<double>::quiet_NaN();
      case Filtration::G:
        return m.mean_after(m.horizon, m.y0) + m.stddev_after(m.horizon) * datum_stream.normal();
      case Filtration::Gtilde:
      case Filtration::Gbar:
        return static_cast<double>(sample_indicator(m, info, datum_stream));
    }
    return 0.0;
  }

  double correction(std::size_t i, double y, double datum) const {
    switch (filt) {
      case Filtration::F:
        return 0.0;
      case Filtration::G:
        return fh_scale[i] *
               (datum - model->mu - (y - model->mu) * fh_e[i]);
      case Filtration::Gtilde: {
        const double z = zA[i] + zB[i] * y;
        return datum > 0.5 ? cs[i] * mills_ratio_inverse(-z) : -cs[i] * mills_ratio_inverse(z);
      }
      case Filtration::Gbar: {
        const double z1 = z1A[i] - zB[i] * y;
        const double z2 = z2A[i] - zB[i] * y;
        return datum > 0.5 ? cs[i] * normal_pdf_diff_over_interval(z1, z2)
                           : cs[i] * normal_pdf_diff_over_complement(z1, z2);
      }
    }
    return 0.0;
  }

  double base_drift(double y) const { return model->k * (model->mu - y); }

  double rate_sigma(std::size_t) const { return model->sigma; }

  // Advances the rate over step i; exact in law for F and G, Euler for the
  // indicator filtrations (no closed conditional law exists there).
  double step(std::size_t i, double y, double datum, double correction_i, double z) const {
    switch (filt) {
      case Filtration::F:
        return model->mu + (y - model->mu) * e_step[i] + sd_trans[i] * z;
      case Filtration::G:
        return bA[i] + bB[i] * y + bC[i] * datum + bSD[i] * z;
      case Filtration::Gtilde:
      case Filtration::Gbar:
        return y + (base_drift(y) + correction_i) * h[i] + model->sigma * sqrt_h[i] * z;
    }
    return y;
  }

  bool euler_step() const {
    return filt == Filtration::Gtilde || filt == Filtration::Gbar;
  }
};

// Per-step tables for the general affine rate (F and terminal G only); the
// step integrals are precomputed once, so the path loop stays cheap.
struct AffineStepTables {
  const AffineModel* model = nullptr;
  Filtration filt = Filtration::F;
  InfoKind info;

  std::vector<double> t, h, sqrt_h;
  std::vector<double> eta, xi, inv_xi_sq, wcoef, b2;
  std::vector<double> trA, trB, trSD;        // transition y' = trA y + trB + trSD Z
  std::vector<double> bK0, bK1, bK2, bSD;    // bridge
  std::vector<double> gK, gP, gN;            // g_hat = gK (y_T - gP y - gN)
  std::vector<double> a1v, a2v;
  std::vector<double> bs_coef;               // rho / b2(t) per node
  double datum_mean = 0.0, datum_sd = 0.0;

  void build(const MarketModel& market, const AffineModel& m, const Strategy& strategy,
             const PathGrid& grid) {
    model = &m;
    filt = strategy.filtration;
    info = strategy.info;
    const std::size_t n = grid.n_steps();
    const double T = m.horizon();
    t = grid.times;
    h.resize(n);
    sqrt_h.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = t[i + 1] - t[i];
      sqrt_h[i] = std::sqrt(h[i]);
    }
    eta.resize(n + 1);
    xi.resize(n + 1);
    inv_xi_sq.resize(n + 1);
    wcoef.resize(n + 1);
    b2.resize(n + 1);
    bs_coef.resize(n + 1);
    a1v.resize(n + 1);
    a2v.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      eta[i] = market.eta(t[i]);
      xi[i] = market.xi(t[i]);
      inv_xi_sq[i] = 1.0 / (xi[i] * xi[i]);
      b2[i] = m.b2()(t[i]);
      bs_coef[i] = market.rho / b2[i];
      wcoef[i] = market.rho / (b2[i] * xi[i]);
      a1v[i] = m.a1()(t[i]);
      a2v[i] = m.a2()(t[i]);
    }
    trA.resize(n);
    trB.resize(n);
    trSD.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double psi_next = m.psi0(t[i + 1]);
      trA[i] = m.psi(t[i], t[i + 1]);
      trB[i] = psi_next * m.nabla_integral(t[i], t[i + 1]);
      trSD[i] = psi_next * std::sqrt(m.delta_integral(t[i], t[i + 1]));
    }
    if (filt == Filtration::G) {
      bK0.resize(n);
      bK1.resize(n);
      bK2.resize(n);
      bSD.resize(n);
      gK.resize(n + 1);
      gP.resize(n + 1);
      gN.resize(n + 1);
      const double psi_T = m.psi0(T);
      for (std::size_t i = 0; i < n; ++i) {
        const double td = t[i + 1];
        const double d_t_td = m.delta_integral(t[i], td);
        const double d_td_T = m.delta_integral(td, T);
        const double d_t_T = d_t_td + d_td_T;
        const double w_future = d_td_T / d_t_T;
        const double w_past = d_t_td / d_t_T;
        const double psi_td = m.psi0(td);
        bK1[i] = w_future * m.psi(t[i], td);
        bK0[i] = w_future * psi_td * m.nabla_integral(t[i], td) -
                 w_past * psi_T * m.nabla_integral(td, T) / m.psi(td, T);
        bK2[i] = w_past / m.psi(td, T);
        bSD[i] = psi_td * std::sqrt(w_future * d_t_td);
      }
      for (std::size_t i = 0; i <= n; ++i) {
        const double bp = b2[i] / m.psi0(t[i]);
        const double psi_tT = m.psi(t[i], T);
        gK[i] = bp * bp / (psi_tT * m.delta_integral(t[i], T));
        gP[i] = psi_tT;
        gN[i] = psi_T * m.nabla_integral(t[i], T);
      }
      const GaussianLaw terminal = m.transition_law(0.0, T, m.r0());
      datum_mean = terminal.mean;
      datum_sd = terminal.stddev();
    }
  }

  double draw_datum(RngStream& datum_stream) const {
    if (filt == Filtration::F) return std::numeric_limits<double>::quiet_NaN();
    return datum_mean + datum_sd * datum_stream.normal();
  }

  double correction(std::size_t i, double y, double datum) const {
    if (filt == Filtration::F) return 0.0;
    return gK[i] * (datum - gP[i] * y - gN[i]);
  }

  double base_drift_at(std::size_t i, double y) const { return a1v[i] * y + a2v[i]; }

  double rate_sigma(std::size_t i) const { return b2[i]; }

  double step(std::size_t i, double y, double datum, double, double z) const {
    if (filt == Filtration::F) return trA[i] * y + trB[i] + trSD[i] * z;
    return bK0[i] + bK1[i] * y + bK2[i] * datum + bSD[i] * z;
  }

  bool euler_step() const { return false; }
};

template <class Tables>
struct WealthWorker {
  const Tables& tables;
  const MarketModel& market;
  const SimOptions& options;
  double rho;
  double ortho;  // sqrt(1 - rho^2)
  double log_x0;

  struct BlockAccum {
    std::vector<double> sum_rate, sum_rate_sq, sum_lnx, sum_lnx_sq;
  };

  double base_drift(std::size_t i, double y) const {
    if constexpr (requires(const Tables& t) { t.base_drift_at(i, y); }) {
      return tables.base_drift_at(i, y);
    } else {
      return tables.base_drift(y);
    }
  }

  double weight(std::size_t i, double y, double corr) const {
    if (options.weight_override) return options.weight_override(tables.t[i], y);
    return (tables.eta[i] - y) * tables.inv_xi_sq[i] + tables.wcoef[i] * corr;
  }

  // drift of ln X plus the dB^S drift contribution, the finite-variation integrand
  double dt_term(std::size_t i, double y, double pi, double corr) const {
    const double xi = tables.xi[i];
    const double bs = (tables.filt == Filtration::F)
                          ? 0.0
                          : bs_drift(i) * corr;
    return (1.0 - pi) * y + pi * tables.eta[i] - 0.5 * pi * pi * xi * xi + pi * xi * bs;
  }

  double bs_drift(std::size_t i) const {
    if constexpr (requires(const Tables& t) { t.bs_coef[i]; }) {
      return tables.bs_coef[i];
    } else {
      return tables.bs_coef;
    }
  }

  void run_block(std::size_t block, std::size_t n_paths, SimBatch& batch,
                 BlockAccum& accum) const {
    const std::size_t n = tables.h.size();
    const std::size_t begin = block * kBlockSize;
    const std::size_t end = std::min(begin + kBlockSize, n_paths);
    accum.sum_rate.assign(n + 1, 0.0);
    accum.sum_rate_sq.assign(n + 1, 0.0);
    accum.sum_lnx.assign(n + 1, 0.0);
    accum.sum_lnx_sq.assign(n + 1, 0.0);
    for (std::size_t p = begin; p < end; ++p) {
      RngStream noise(batch.seed, p);
      RngStream datum_stream(batch.seed, p + kDatumStreamOffset);
      const double datum = tables.draw_datum(datum_stream);
      double y = initial_rate();
      double lnx = log_x0;
      double corr = tables.correction(0, y, datum);
      double pi = weight(0, y, corr);
      double g = dt_term(0, y, pi, corr);
      accum.sum_rate[0] += y;
      accum.sum_rate_sq[0] += y * y;
      accum.sum_lnx[0] += lnx;
      accum.sum_lnx_sq[0] += lnx * lnx;
      double* rate_path = nullptr;
      double* lnx_path = nullptr;
      double* bs_path = nullptr;
      double* corr_path = nullptr;
      if (options.store_paths) {
        batch.rate_paths[p].resize(n + 1);
        batch.log_wealth_paths[p].resize(n + 1);
        batch.bs_increments[p].resize(n);
        batch.corrections[p].resize(n);
        rate_path = batch.rate_paths[p].data();
        lnx_path = batch.log_wealth_paths[p].data();
        bs_path = batch.bs_increments[p].data();
        corr_path = batch.corrections[p].data();
        rate_path[0] = y;
        lnx_path[0] = lnx;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double z1 = noise.normal();
        const double z2 = noise.normal();
        const double y_next = tables.step(i, y, datum, corr, z1);
        const double hi = tables.h[i];
        double implied_dw;
        if (tables.euler_step()) {
          implied_dw = tables.sqrt_h[i] * z1;
        } else {
          implied_dw = (y_next - y - (base_drift(i, y) + corr) * hi) / tables.rate_sigma(i);
        }
        const double dws = rho * implied_dw + ortho * std::sqrt(hi) * z2;
        const double corr_next = tables.correction(i + 1, y_next, datum);
        const double pi_next = weight(i + 1, y_next, corr_next);
        const double g_next = dt_term(i + 1, y_next, pi_next, corr_next);
        lnx += 0.5 * (g + g_next) * hi + pi * tables.xi[i] * dws;
        if (!std::isfinite(lnx)) {
          throw NonFinite("simulate_wealth: non-finite log wealth (step too coarse near T)");
        }
        if (options.store_paths) {
          bs_path[i] = bs_drift(i) * corr * hi + dws;
          corr_path[i] = corr;
          rate_path[i + 1] = y_next;
          lnx_path[i + 1] = lnx;
        }
        y = y_next;
        corr = corr_next;
        pi = pi_next;
        g = g_next;
        accum.sum_rate[i + 1] += y;
        accum.sum_rate_sq[i + 1] += y * y;
        accum.sum_lnx[i + 1] += lnx;
        accum.sum_lnx_sq[i + 1] += lnx * lnx;
      }
      batch.final_log_wealth[p] = lnx;
      batch.info_draw[p] = datum;
    }
  }

  double initial_rate() const {
    if constexpr (requires(const Tables& t) { t.model->y0; }) {
      return tables.model->y0;
    } else {
      return tables.model->r0();
    }
  }
};

template <class Tables>
SimBatch run_simulation(const Tables& tables, const MarketModel& market, const Strategy& strategy,
                        const PathGrid& grid, const SimOptions& options) {
  if (options.n_paths == 0) throw DomainError("simulate_wealth: need at least one path");
  SimBatch batch;
  batch.grid = grid;
  batch.n_paths = options.n_paths;
  batch.seed = options.seed;
  batch.filtration = strategy.filtration;
  batch.info = strategy.info;
  const std::size_t n = grid.n_steps();
  batch.final_log_wealth.resize(options.n_paths);
  batch.info_draw.resize(options.n_paths);
  batch.sum_rate.assign(n + 1, 0.0);
  batch.sum_rate_sq.assign(n + 1, 0.0);
  batch.sum_log_wealth.assign(n + 1, 0.0);
  batch.sum_log_wealth_sq.assign(n + 1, 0.0);
  if (options.store_paths) {
    batch.rate_paths.resize(options.n_paths);
    batch.log_wealth_paths.resize(options.n_paths);
    batch.bs_increments.resize(options.n_paths);
    batch.corrections.resize(options.n_paths);
  }

  WealthWorker<Tables> worker{tables, market, options, market.rho,
                              std::sqrt(1.0 - market.rho * market.rho), std::log(market.x0)};

  const std::size_t n_blocks = (options.n_paths + kBlockSize - 1) / kBlockSize;
  std::vector<typename WealthWorker<Tables>::BlockAccum> accums(n_blocks);
  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(static_cast<unsigned>(std::max(options.threads, 1)),
                                      static_cast<unsigned>(n_blocks)));
  std::atomic<std::size_t> next_block{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto drain = [&]() {
    try {
      while (true) {
        const std::size_t b = next_block.fetch_add(1);
        if (b >= n_blocks) break;
        worker.run_block(b, options.n_paths, batch, accums[b]);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };
  if (n_threads == 1) {
    drain();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(drain);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // merge in block order so the result is independent of the thread count
  for (const auto& accum : accums) {
    for (std::size_t i = 0; i <= n; ++i) {
      batch.sum_rate[i] += accum.sum_rate[i];
      batch.sum_rate_sq[i] += accum.sum_rate_sq[i];
      batch.sum_log_wealth[i] += accum.sum_lnx[i];
      batch.sum_log_wealth_sq[i] += accum.sum_lnx_sq[i];
    }
  }
  return batch;
}

void check_grid_for_strategy(const PathGrid& grid, const Strategy& strategy, double horizon) {
  grid.validate();
  if (grid.t_end() > horizon) throw DomainError("simulate_wealth: grid exceeds the horizon");
  if (strategy.filtration != Filtration::F && !(grid.t_end() < horizon)) {
    throw SingularTime(
        "simulate_wealth: informed strategies must stop strictly before the horizon");
  }
}

}  // namespace

SimBatch simulate_wealth(const MarketModel& market, const OUModel& model, const Strategy& strategy,
                         const PathGrid& grid, const SimOptions& options) {
  check_grid_for_strategy(grid, strategy, model.horizon);
  OUStepTables tables;
  tables.build(market, model, strategy, grid);
  return run_simulation(tables, market, strategy, grid, options);
}

SimBatch simulate_wealth(const MarketModel& market, const AffineModel& model,
                         const Strategy& strategy, const PathGrid& grid,
                         const SimOptions& options) {
  if (strategy.filtration == Filtration::Gtilde || strategy.filtration == Filtration::Gbar) {
    throw DomainError("simulate_wealth: indicator information requires the OU rate model");
  }
  check_grid_for_strategy(grid, strategy, model.horizon());
  AffineStepTables tables;
  tables.build(market, model, strategy, grid);
  return run_simulation(tables, market, strategy, grid, options);
}

double analytic_log_utility(const MarketModel& market, const OUModel& model,
                            const Strategy& strategy, double t_max, const AnalyticOptions& options) {
  if (!(t_max > 0.0) || t_max > model.horizon) {
    throw DomainError("analytic_log_utility: need 0 < t_max <= T");
  }
  if (strategy.filtration == Filtration::G && !(t_max < model.horizon)) {
    throw SingularTime("analytic_log_utility: terminal information requires t_max < T");
  }
  const HermiteRule& rule = gauss_hermite(options.gh_nodes);

  auto integrand = [&](double t) {
    const double m_t = model.mean_after(t, model.y0);
    const double s_t = model.stddev_after(t);
    const double eta = market.eta(t);
    const double xi = market.xi(t);
    const double shift = options.weight_shift;
    auto value_at = [&](double y, double corr) {
      const double linear = eta - y + xi * xi * (market.rho / (model.sigma * xi)) * corr;
      const double pi = linear / (xi * xi) + shift;
      return y + linear * pi - 0.5 * xi * xi * pi * pi;
    };
    double acc = 0.0;
    switch (strategy.filtration) {
      case Filtration::F: {
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
          const double y = m_t + s_t * rule.nodes[i];
          acc += rule.weights[i] * value_at(y, 0.0);
        }
        break;
      }
      case Filtration::G: {
        const double remain = model.horizon - t;
        const double s_T = model.stddev_after(remain);
        const double corr_scale =
            model.sigma * model.sigma * std::exp(-model.k * remain) / (s_T * s_T);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
          const double y = m_t + s_t * rule.nodes[i];
          double inner = 0.0;
          for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            const double corr = corr_scale * s_T * rule.nodes[j];  // f_hat at (y_T - mean)
            inner += rule.weights[j] * value_at(y, corr);
          }
          acc += rule.weights[i] * inner;
        }
        break;
      }
      case Filtration::Gtilde:
      case Filtration::Gbar: {
        // Branch-weighting the quadratic integrand splits it exactly: the
        // cross term dies by the tower identity P1 f(y,1) + P0 f(y,0) = 0,
        // leaving the merton part (polynomial, GH-exact) plus
        // rho^2/(2 sigma^2) E[correction^2], which is taken in the
        // standardized tail coordinate where it stays resolved near T.
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
          const double y = m_t + s_t * rule.nodes[i];
          acc += rule.weights[i] * value_at(y, 0.0);
        }
        acc += market.rho * market.rho / (2.0 * model.sigma * model.sigma) *
               mean_square_correction(model, strategy.info, t);
        break;
      }
    }
    return acc;
  };

  double prev = integrate_sqrt_endpoints(integrand, 0.0, t_max, options.panels);
  int panels = options.panels;
  for (int d = 0; d < options.max_doublings; ++d) {
    panels *= 2;
    const double next = integrate_sqrt_endpoints(integrand, 0.0, t_max, panels);
    if (std::abs(next - prev) <= options.tol) return next;
    prev = next;
  }
  throw NonConvergence("analytic_log_utility: time integral did not stabilise");
}

ConcavityWitness concavity_check(const MarketModel& market, const OUModel& model,
                                 const Strategy& strategy, double t, double y_t, double delta) {
  if (!(delta > 0.0)) throw DomainError("concavity_check: delta must be positive");
  const double corr = drift_correction(model, strategy.info, t, y_t);
  const double eta = market.eta(t);
  const double xi = market.xi(t);
  const double linear = eta - y_t + xi * market.rho / model.sigma * corr;
  auto value_at = [&](double pi) { return y_t + linear * pi - 0.5 * xi * xi * pi * pi; };
  const double pi_star = linear / (xi * xi);
  ConcavityWitness witness;
  witness.below = value_at(pi_star - delta);
  witness.at = value_at(pi_star);
  witness.above = value_at(pi_star + delta);
  witness.maximum = witness.at > witness.below && witness.at > witness.above;
  return witness;
}

}  // namespace insider
