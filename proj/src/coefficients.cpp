#include "insider/coefficients.hpp"

#include <algorithm>
#include <cmath>

#include "insider/errors.hpp"

namespace insider {

CoefficientFn::CoefficientFn(Kind kind, std::vector<double> breaks, std::vector<double> values)
    : kind_(kind), breaks_(std::move(breaks)), values_(std::move(values)) {}

CoefficientFn CoefficientFn::constant(double value) {
  return CoefficientFn(Kind::Constant, {}, {value});
}

CoefficientFn CoefficientFn::piecewise_constant(std::vector<double> breakpoints,
                                                std::vector<double> values) {
  if (values.size() != breakpoints.size() + 1) {
    throw DomainError("piecewise coefficient: need one more value than breakpoints");
  }
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i - 1] < breakpoints[i])) {
      throw DomainError("piecewise coefficient: breakpoints must be strictly increasing");
    }
  }
  if (breakpoints.empty()) return constant(values.front());
  return CoefficientFn(Kind::PiecewiseConstant, std::move(breakpoints), std::move(values));
}

CoefficientFn CoefficientFn::polynomial(std::vector<double> coefficients) {
  if (coefficients.empty()) coefficients.push_back(0.0);
  if (coefficients.size() == 1) return constant(coefficients.front());
  return CoefficientFn(Kind::Polynomial, {}, std::move(coefficients));
}

double CoefficientFn::operator()(double t) const {
  switch (kind_) {
    case Kind::Constant:
      return values_.front();
    case Kind::PiecewiseConstant: {
      const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
      return values_[static_cast<std::size_t>(it - breaks_.begin())];
    }
    case Kind::Polynomial: {
      double acc = 0.0;
      for (auto it = values_.rbegin(); it != values_.rend(); ++it) acc = acc * t + *it;
      return acc;
    }
  }
  return 0.0;
}

double CoefficientFn::integral(double s, double t) const {
  if (s > t) return -integral(t, s);
  switch (kind_) {
    case Kind::Constant:
      return values_.front() * (t - s);
    case Kind::PiecewiseConstant: {
      double acc = 0.0;
      double left = s;
      for (std::size_t i = 0; i < breaks_.size() && left < t; ++i) {
        if (breaks_[i] <= left) continue;
        const double right = std::min(breaks_[i], t);
        acc += values_[i] * (right - left);
        left = right;
      }
      if (left < t) acc += values_.back() * (t - left);
      return acc;
    }
    case Kind::Polynomial: {
      auto anti = [this](double x) {
        double acc = 0.0;
        for (std::size_t i = values_.size(); i-- > 0;) {
          acc = acc * x + values_[i] / static_cast<double>(i + 1);
        }
        return acc * x;
      };
      return anti(t) - anti(s);
    }
  }
  return 0.0;
}

void CoefficientFn::append_breakpoints(double s, double t, std::vector<double>& out) const {
  if (kind_ != Kind::PiecewiseConstant) return;
  for (double b : breaks_) {
    if (b > s && b < t) out.push_back(b);
  }
}

double CoefficientFn::min_on(double a, double b, int samples) const {
  switch (kind_) {
    case Kind::Constant:
      return values_.front();
    case Kind::PiecewiseConstant: {
      double m = (*this)(a);
      m = std::min(m, (*this)(b));
      for (std::size_t i = 0; i < breaks_.size(); ++i) {
        if (breaks_[i] > a && breaks_[i] <= b) m = std::min(m, values_[i]);
        if (breaks_[i] >= a && breaks_[i] < b) m = std::min(m, values_[i + 1]);
      }
      return m;
    }
    case Kind::Polynomial: {
      double m = (*this)(a);
      for (int i = 1; i < samples; ++i) {
        const double x = a + (b - a) * i / (samples - 1);
        m = std::min(m, (*this)(x));
      }
      return m;
    }
  }
  return 0.0;
}

}  // namespace insider
