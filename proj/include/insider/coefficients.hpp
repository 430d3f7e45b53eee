#pragma once

#include <vector>

namespace insider {

// Deterministic time coefficient on [0, T].  A small closed-form registry
// (constant / piecewise-constant / polynomial) rather than arbitrary
// callbacks, so that the integrals entering the conditioned laws can be
// taken exactly whenever the shapes allow it.
class CoefficientFn {
 public:
  enum class Kind { Constant, PiecewiseConstant, Polynomial };

  static CoefficientFn constant(double value);
  // values[i] applies on [breakpoints[i-1], breakpoints[i]); the last value
  // extends beyond the final breakpoint.  Requires values.size() == breakpoints.size() + 1.
  static CoefficientFn piecewise_constant(std::vector<double> breakpoints,
                                          std::vector<double> values);
  static CoefficientFn polynomial(std::vector<double> coefficients);  // c0 + c1 t + c2 t^2 + ...

  Kind kind() const { return kind_; }
  bool flat() const { return kind_ != Kind::Polynomial; }

  double operator()(double t) const;

  // Exact antiderivative difference over [s, t] (s <= t or reversed).
  double integral(double s, double t) const;

  // Breakpoints strictly inside (s, t), appended in increasing order.
  void append_breakpoints(double s, double t, std::vector<double>& out) const;

  // Minimum over [a, b]; exact for flat kinds, sampled for polynomials.
  double min_on(double a, double b, int samples = 257) const;

  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }

 private:
  CoefficientFn(Kind kind, std::vector<double> breaks, std::vector<double> values);

  Kind kind_;
  std::vector<double> breaks_;
  std::vector<double> values_;
};

}  // namespace insider
