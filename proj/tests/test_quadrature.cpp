#include <doctest.h>

#include <cmath>
#include <limits>

#include "insider/errors.hpp"
#include "insider/normal.hpp"
#include "insider/quadrature.hpp"

using namespace insider;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("basic panels") {
  CHECK(integrate_value([](double) { return 1.0; }, 0.0, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(integrate_value([](double x) { return x * x; }, 0.0, 2.0) ==
        doctest::Approx(8.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("integrable endpoint singularity") {
  CHECK(integrate_value([](double t) { return 1.0 / std::sqrt(t); }, 0.0, 1.0) ==
        doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("infinite domains through the tangent substitution") {
  CHECK(integrate_value([](double z) { return normal_pdf(z); }, -kInf, kInf) ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK(integrate_value([](double x) { return std::exp(-x); }, 0.0, kInf) ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK(integrate_value([](double x) { return std::exp(x); }, -kInf, 0.0) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("divergent integrand raises NonConvergence") {
  QuadratureOptions opt;
  opt.max_intervals = 512;
  CHECK_THROWS_AS(integrate([](double t) { return 1.0 / t; }, 0.0, 1.0, opt), NonConvergence);
}

TEST_CASE("refinement and error reporting") {
  auto f = [](double x) { return std::sin(3.0 * x) * std::exp(-x); };
  QuadratureOptions coarse;
  coarse.initial_panels = 1;
  QuadratureOptions fine;
  fine.initial_panels = 2;
  const QuadratureResult a = integrate(f, 0.0, 3.0, coarse);
  const QuadratureResult b = integrate(f, 0.0, 3.0, fine);
  CHECK(std::abs(a.value - b.value) <= a.error + b.error + 1e-12);
}

TEST_CASE("sqrt-endpoint transform converges fast") {
  auto f = [](double t) { return 1.0 / std::sqrt(t) + 1.0 / std::sqrt(1.0 - t); };
  const auto values = sqrt_endpoint_refinements(f, 0.0, 1.0, 2, 4);
  CHECK(values.back() == doctest::Approx(4.0).epsilon(1e-10));
  const double gap1 = std::abs(values[1] - values[0]);
  const double gap2 = std::abs(values[2] - values[1]);
  CHECK((gap2 <= gap1 / 4.0 || gap2 < 1e-12));
}

TEST_CASE("gauss-hermite rules") {
  SUBCASE("two nodes") {
    const HermiteRule& rule = gauss_hermite(2);
    CHECK(rule.nodes[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(rule.nodes[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rule.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("normal moments") {
    for (int n : {8, 21, 48, 64}) {
      const HermiteRule& rule = gauss_hermite(n);
      double w = 0.0, m2 = 0.0, m4 = 0.0, m6 = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double x = rule.nodes[i];
        w += rule.weights[i];
        m2 += rule.weights[i] * x * x;
        m4 += rule.weights[i] * x * x * x * x;
        m6 += rule.weights[i] * std::pow(x, 6);
      }
      CHECK(w == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
      CHECK(m6 == doctest::Approx(15.0).epsilon(1e-11));
    }
  }
  SUBCASE("non-polynomial expectation") {
    const HermiteRule& rule = gauss_hermite(48);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      acc += rule.weights[i] * std::exp(0.3 * rule.nodes[i]);
    }
    CHECK(acc == doctest::Approx(std::exp(0.3 * 0.3 / 2.0)).epsilon(1e-12));
  }
}
