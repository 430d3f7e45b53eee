#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "insider/affine.hpp"
#include "insider/coefficients.hpp"
#include "insider/vasicek.hpp"

namespace insider {

// Two-asset market: riskless numeraire dD = D R dt and risky asset
// dS = S (eta dt + xi dB^S), with driver correlation rho between the rate
// and price Brownian motions.
struct MarketModel {
  CoefficientFn eta;
  CoefficientFn xi;
  double rho = 0.0;
  double x0 = 1.0;
  double s0 = 1.0;

  MarketModel(CoefficientFn eta_, CoefficientFn xi_, double rho_, double x0_, double s0_,
              double horizon);
};

struct PathGrid {
  std::vector<double> times;  // strictly increasing, times[0] == 0

  static PathGrid uniform(double t_end, std::size_t n_steps);
  // 0 -> horizon - epsilon with steps proportional to (horizon - t); used for
  // informed strategies whose drift grows like 1/(T-t).
  static PathGrid geometric(double horizon, double epsilon, std::size_t n_steps);

  std::size_t n_steps() const { return times.size() - 1; }
  double t_end() const { return times.back(); }
  void validate() const;
};

enum class Filtration { F, G, Gtilde, Gbar };

// A filtration together with the insider datum description that generates it.
struct Strategy {
  Filtration filtration = Filtration::F;
  InfoKind info;

  Strategy() = default;
  Strategy(Filtration f, InfoKind i);

  static Strategy uninformed() { return {}; }
  static Strategy for_info(const InfoKind& info);
};

// Merton ratio (eta_t - y) / xi_t^2, the log-optimal weight without extra information.
double merton_weight(const MarketModel& market, double t, double y);

// Optimal weight under the enlarged filtration:
// merton + rho/(sigma xi_t) * drift_correction.
double informed_weight(const MarketModel& market, const OUModel& model, const InfoKind& info,
                       double t, double y);

// General affine version: merton + rho/(b2(t) xi_t) * g_hat.
double informed_weight(const MarketModel& market, const AffineModel& model,
                       const BridgeCondition& cond, double t, double r);

struct SimOptions {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  int threads = 1;
  bool store_paths = false;  // keep per-path arrays (small runs / diagnostics)
  std::function<double(double, double)> weight_override;  // (t, y) -> pi
};

struct SimBatch {
  PathGrid grid;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  Filtration filtration = Filtration::F;
  InfoKind info;

  std::vector<double> final_log_wealth;  // per path, ln X at t_end
  std::vector<double> info_draw;         // y_T or indicator; NaN for NoInfo

  // per grid point, summed over paths in path order
  std::vector<double> sum_rate, sum_rate_sq;
  std::vector<double> sum_log_wealth, sum_log_wealth_sq;

  // only filled when store_paths is set
  std::vector<std::vector<double>> rate_paths;
  std::vector<std::vector<double>> log_wealth_paths;
  std::vector<std::vector<double>> bs_increments;  // realized dB^S per step
  std::vector<std::vector<double>> corrections;    // drift correction per step

  double mean_final_log_wealth() const;
  double stderr_final_log_wealth() const;
};

// Simulates wealth paths under the strategy's filtration: per path the
// insider datum is drawn first, the rate is stepped in the conditioned
// dynamics (exact Gaussian stepping where a closed law exists, drift-corrected
// Euler for the indicator enlargements), and ln X is integrated with the
// dB^S increments reconstructed from the filtration's Brownian decomposition.
SimBatch simulate_wealth(const MarketModel& market, const OUModel& model, const Strategy& strategy,
                         const PathGrid& grid, const SimOptions& options);

// Affine-rate variant; supports the F and G (terminal) filtrations.
SimBatch simulate_wealth(const MarketModel& market, const AffineModel& model,
                         const Strategy& strategy, const PathGrid& grid,
                         const SimOptions& options);

struct AnalyticOptions {
  int gh_nodes = 48;
  int panels = 16;          // starting panel count for the time integral
  double tol = 1e-8;        // stop once a panel doubling moves the value less than this
  int max_doublings = 6;
  double weight_shift = 0.0;  // evaluate a perturbed weight pi + shift instead of pi
};

// E[ln X_{t_max}/x0] + ln x0 for the optimal strategy of the filtration:
// integral of E[Y_t + (xi_t pi_t)^2 / 2] with the outer expectation taken by
// Gauss-Hermite quadrature over the exact Gaussian laws (tensorized over
// (Y_t, Y_T) for terminal information, branch-weighted over the indicator
// enlargements).
double analytic_log_utility(const MarketModel& market, const OUModel& model,
                            const Strategy& strategy, double t_max,
                            const AnalyticOptions& options = {});

struct ConcavityWitness {
  double below = 0.0;
  double at = 0.0;
  double above = 0.0;
  bool maximum = false;
};

// Evaluates the quadratic wealth integrand at pi* - delta, pi*, pi* + delta;
// the gap is xi^2 delta^2 / 2 on both sides.
ConcavityWitness concavity_check(const MarketModel& market, const OUModel& model,
                                 const Strategy& strategy, double t, double y_t, double delta);

}  // namespace insider
