#pragma once

#include <functional>
#include <vector>

namespace insider {

struct QuadratureOptions {
  double abs_tol = 1e-9;
  double rel_tol = 0.0;
  int initial_panels = 1;   // composite pre-split; doubling it refines the estimate
  int max_intervals = 8192;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // accumulated Gauss-Kronrod error estimate
};

// Globally adaptive Gauss-Kronrod (G7/K15).  Infinite limits are mapped
// through a tangent substitution; the rule is open, so integrable endpoint
// singularities (inverse-square-root type) are handled by subdivision.
// Throws NonConvergence when the interval budget runs out above tolerance.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opt = {});

double integrate_value(const std::function<double(double)>& f, double a, double b,
                       const QuadratureOptions& opt = {});

// Non-adaptive composite rule on [a, b] after a sin^2 endpoint substitution.
// Meant for integrands with inverse-square-root endpoint behaviour: the
// transform makes them smooth, so doubling `panels` gives a clean
// convergence record.
double integrate_sqrt_endpoints(const std::function<double(double)>& f, double a, double b,
                                int panels);

// Values of integrate_sqrt_endpoints at panels, 2*panels, ..., for `levels`
// refinement levels (used by convergence certificates).
std::vector<double> sqrt_endpoint_refinements(const std::function<double(double)>& f, double a,
                                              double b, int panels, int levels);

// Gauss-Hermite rule against the standard normal weight:
// E[f(Z)] ~= sum_i weights[i] * f(nodes[i]), weights summing to one.
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const HermiteRule& gauss_hermite(int n);

}  // namespace insider
