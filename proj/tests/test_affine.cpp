#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "insider/affine.hpp"
#include "insider/errors.hpp"
#include "insider/portfolio.hpp"
#include "insider/vasicek.hpp"

using namespace insider;

namespace {

AffineModel brownian() {
  return AffineModel(CoefficientFn::constant(0.0), CoefficientFn::constant(0.0),
                     CoefficientFn::constant(1.0), 0.0, 1.0);
}

AffineModel ou_affine(double k, double mu, double sigma, double y0, double T) {
  return AffineModel(CoefficientFn::constant(-k), CoefficientFn::constant(k * mu),
                     CoefficientFn::constant(sigma), y0, T);
}

}  // namespace

TEST_CASE("psi") {
  CHECK(brownian().psi(0.2, 0.9) == doctest::Approx(1.0).epsilon(1e-15));
  const auto decay = ou_affine(2.0, 0.0, 1.0, 0.0, 1.0);
  CHECK(decay.psi(0.1, 0.6) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  const AffineModel pieces(CoefficientFn::piecewise_constant({0.5}, {-1.0, -2.0}),
                           CoefficientFn::constant(0.0), CoefficientFn::constant(1.0), 0.0, 1.0);
  CHECK(pieces.psi(0.0, 1.0) == doctest::Approx(std::exp(-1.5)).epsilon(1e-14));
  // multiplicative through any midpoint
  RngStream rng(11, 0);
  for (int i = 0; i < 20; ++i) {
    const double s = testutil::uniform_in(rng, 0.0, 0.4);
    const double u = testutil::uniform_in(rng, s, 0.7);
    const double t = testutil::uniform_in(rng, u, 1.0);
    CHECK(pieces.psi(s, u) * pieces.psi(u, t) ==
          doctest::Approx(pieces.psi(s, t)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(brownian().psi(0.5, 0.2), DomainError);
}

TEST_CASE("delta and nabla integrals") {
  const auto bm = brownian();
  CHECK(bm.delta_integral(0.0, 0.7) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(bm.delta_integral(0.3, 0.3) == 0.0);
  const double k = 1.3, mu = 0.4;
  const auto ou = ou_affine(k, mu, 0.8, 0.0, 1.0);
  // closed-form antiderivative: nabla_0^t = mu (e^{kt} - 1)
  CHECK(ou.nabla_integral(0.0, 0.9) ==
        doctest::Approx(mu * (std::exp(k * 0.9) - 1.0)).epsilon(1e-13));
  // additivity
  CHECK(ou.delta_integral(0.0, 0.4) + ou.delta_integral(0.4, 0.9) ==
        doctest::Approx(ou.delta_integral(0.0, 0.9)).epsilon(1e-13));
  CHECK_THROWS_AS(ou.delta_integral(0.5, 0.1), DomainError);
}

TEST_CASE("polynomial coefficients fall back to quadrature") {
  // a1(t) = -2t, b2 = 1: delta_0^1 = int exp(2 t^2)... using A(x) = -x^2,
  // delta = int_0^1 e^{2x^2} dx has no elementary form; check against the
  // error-function identity for a1(t) = t instead: A(x) = x^2/2,
  // delta_0^1 = int_0^1 e^{-x^2} dx = sqrt(pi)/2 erf(1).
  const AffineModel model(CoefficientFn::polynomial({0.0, 1.0}), CoefficientFn::constant(0.0),
                          CoefficientFn::constant(1.0), 0.0, 1.0);
  CHECK(model.delta_integral(0.0, 1.0) ==
        doctest::Approx(std::sqrt(M_PI) / 2.0 * std::erf(1.0)).epsilon(1e-11));
}

TEST_CASE("transition law") {
  const auto bm = brownian();
  const GaussianLaw law = bm.transition_law(0.2, 0.9, 0.4);
  CHECK(law.mean == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(law.variance == doctest::Approx(0.7).epsilon(1e-14));
  const GaussianLaw degenerate = bm.transition_law(0.3, 0.3, 0.4);
  CHECK(degenerate.mean == 0.4);
  CHECK(degenerate.variance == 0.0);
  // OU marginal: mean mu + (r-mu)e^{-k dt}, variance sigma^2(1-e^{-2k dt})/2k
  const double kk = 1.7, mu = 0.3, sigma = 0.6;
  const auto ou = ou_affine(kk, mu, sigma, 0.0, 2.0);
  const GaussianLaw marginal = ou.transition_law(0.5, 1.4, 0.1);
  const double dt = 0.9;
  CHECK(marginal.mean == doctest::Approx(mu + (0.1 - mu) * std::exp(-kk * dt)).epsilon(1e-13));
  CHECK(marginal.variance ==
        doctest::Approx(sigma * sigma * (1.0 - std::exp(-2.0 * kk * dt)) / (2.0 * kk))
            .epsilon(1e-13));
}

TEST_CASE("bridge law") {
  const auto bm = brownian();
  const BridgeCondition cond{1.0, 1.0};
  SUBCASE("brownian bridge closed form") {
    const double t = 0.3, delta = 0.25, r_t = 0.2;
    const GaussianLaw law = bm.bridge_law(t, delta, r_t, cond);
    CHECK(law.mean ==
          doctest::Approx(r_t + delta * (cond.terminal_value - r_t) / (1.0 - t)).epsilon(1e-13));
    CHECK(law.variance ==
          doctest::Approx(delta * (1.0 - t - delta) / (1.0 - t)).epsilon(1e-13));
  }
  SUBCASE("short-step continuity") {
    const GaussianLaw law = bm.bridge_law(0.3, 1e-9, 0.2, cond);
    CHECK(law.mean == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(law.variance < 1e-6);
  }
  SUBCASE("conditioning shrinks variance") {
    RngStream rng(13, 0);
    for (int i = 0; i < 50; ++i) {
      const double t = testutil::uniform_in(rng, 0.0, 0.8);
      const double delta = testutil::uniform_in(rng, 1e-4, (1.0 - t) * 0.95);
      const GaussianLaw free_law = bm.transition_law(t, t + delta, 0.2);
      const GaussianLaw pinned = bm.bridge_law(t, delta, 0.2, cond);
      CHECK(pinned.variance < free_law.variance);
    }
  }
  SUBCASE("domain checks") {
    CHECK_THROWS_AS(bm.bridge_law(0.5, 0.6, 0.0, cond), DomainError);
    CHECK_THROWS_AS(bm.bridge_law(0.5, 0.2, 0.0, BridgeCondition{1.0, 0.7}), DomainError);
  }
}

TEST_CASE("g_hat") {
  const auto bm = brownian();
  SUBCASE("zero at the conditional mean") {
    const auto ou = ou_affine(1.1, 0.2, 0.5, 0.0, 1.0);
    const double mean = ou.transition_law(0.4, 1.0, 0.3).mean;
    CHECK(ou.g_hat(0.4, 0.3, mean) == doctest::Approx(0.0).epsilon(1e-13));
  }
  SUBCASE("brownian drift") {
    CHECK(bm.g_hat(0.25, 0.1, 0.9) == doctest::Approx((0.9 - 0.1) / 0.75).epsilon(1e-13));
  }
  SUBCASE("finite difference against the bridge mean") {
    const auto ou = ou_affine(0.9, -0.1, 0.7, 0.2, 1.0);
    const double t = 0.35, r_t = 0.45, r_T = -0.3;
    const BridgeCondition cond{r_T, 1.0};
    // Richardson extrapolation of (bridge mean - r_t)/delta - base drift
    auto fd = [&](double delta) {
      const double drift = (ou.bridge_law(t, delta, r_t, cond).mean - r_t) / delta;
      return drift - (ou.a1()(t) * r_t + ou.a2()(t));
    };
    const double f1 = fd(1e-3), f2 = fd(1e-4), f3 = fd(1e-5);
    // quadratic extrapolation through (1e-3, 1e-4, 1e-5) at 0
    const double d1 = 1e-3, d2 = 1e-4, d3 = 1e-5;
    const double w1 = d2 * d3 / ((d1 - d2) * (d1 - d3));
    const double w2 = d1 * d3 / ((d2 - d1) * (d2 - d3));
    const double w3 = d1 * d2 / ((d3 - d1) * (d3 - d2));
    const double extrapolated = w1 * f1 + w2 * f2 + w3 * f3;
    CHECK(extrapolated == doctest::Approx(ou.g_hat(t, r_t, r_T)).epsilon(1e-7));
  }
  SUBCASE("singular horizon") {
    CHECK_THROWS_AS(bm.g_hat(1.0, 0.0, 0.0), SingularTime);
    CHECK_THROWS_AS(bm.g_hat(1.0 - 1e-14, 0.0, 0.0), SingularTime);
  }
}

TEST_CASE("conditioned coefficients") {
  const auto ou = ou_affine(1.4, 0.25, 0.6, 0.1, 1.0);
  const BridgeCondition cond{0.8, 1.0};
  const ConditionedAffine hat = ou.conditioned_coefficients(cond);
  SUBCASE("drift identity a1_hat r + a2_hat = a1 r + a2 + g_hat") {
    for (double r : {-1.0, 0.0, 1.0}) {
      for (double t = 0.1; t < 0.95; t += 0.1) {
        const double lhs = hat.drift(t, r);
        const double rhs = ou.a1()(t) * r + ou.a2()(t) + ou.g_hat(t, r, cond.terminal_value);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
      }
    }
  }
  SUBCASE("diffusion unchanged") {
    for (double t = 0.0; t <= 0.99; t += 0.11) CHECK(hat.b2(t) == ou.b2()(t));
  }
  SUBCASE("brownian case") {
    const ConditionedAffine bb = brownian().conditioned_coefficients({0.5, 1.0});
    for (double t : {0.1, 0.5, 0.9}) {
      CHECK(bb.a1(t) == doctest::Approx(-1.0 / (1.0 - t)).epsilon(1e-12));
    }
  }
}

TEST_CASE("coefficient-matching identity suite (randomized)") {
  RngStream rng(17, 0);
  for (int trial = 0; trial < 25; ++trial) {
    const double T = testutil::uniform_in(rng, 0.6, 1.8);
    const AffineModel model(testutil::random_piecewise(rng, T, -2.0, 1.0),
                            testutil::random_piecewise(rng, T, -1.0, 1.0),
                            testutil::random_piecewise(rng, T, 0.3, 1.5), 0.0, T);
    const double t = testutil::uniform_in(rng, 0.02, 0.8) * T;
    const double delta = testutil::uniform_in(rng, 0.05, 0.9) * (T - t);
    const double a = testutil::uniform_in(rng, -1.5, 1.5);
    const double c = testutil::uniform_in(rng, -1.5, 1.5);
    CHECK(testutil::bridge_identity_mismatch(model, t, delta, a, c) < 1e-12);
  }
}

TEST_CASE("chapman-kolmogorov composition of bridge means") {
  const auto ou = ou_affine(1.2, 0.1, 0.5, 0.0, 1.0);
  const BridgeCondition cond{0.7, 1.0};
  const double t = 0.2, d1 = 0.15, d2 = 0.2, r_t = 0.05;
  // one step
  const double direct = ou.bridge_law(t, d1 + d2, r_t, cond).mean;
  // two steps: the mid law is Gaussian and the second-step mean is affine in
  // the midpoint, so composing means is exact
  const GaussianLaw mid = ou.bridge_law(t, d1, r_t, cond);
  const double m0 = ou.bridge_law(t + d1, d2, mid.mean, cond).mean;
  const double m1 = ou.bridge_law(t + d1, d2, mid.mean + 1.0, cond).mean;
  const double slope = m1 - m0;
  (void)slope;
  CHECK(m0 == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("simulate_rate") {
  SUBCASE("unconditioned OU moments at the horizon") {
    const double k = 1.0, mu = 0.2, sigma = 0.5, y0 = -0.1, T = 1.0;
    const auto ou = ou_affine(k, mu, sigma, y0, T);
    const PathGrid grid = PathGrid::uniform(T, 16);
    const std::size_t n = 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      RngStream stream(101, p);
      const auto path = ou.simulate_rate(grid.times, stream);
      sum += path.back();
      sum_sq += path.back() * path.back();
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    const GaussianLaw expectation = ou.transition_law(0.0, T, y0);
    const double se_mean = expectation.stddev() / std::sqrt(static_cast<double>(n));
    const double se_var = expectation.variance * std::sqrt(2.0 / n);
    CHECK(std::abs(mean - expectation.mean) < 3.0 * se_mean);
    CHECK(std::abs(var - expectation.variance) < 3.0 * se_var);
  }
  SUBCASE("conditioned paths pin the terminal value") {
    const auto ou = ou_affine(1.0, 0.0, 1.0, 0.0, 1.0);
    const BridgeCondition cond{1.0, 1.0};
    const PathGrid grid = PathGrid::geometric(1.0, 1e-6, 128);
    std::size_t close = 0;
    const std::size_t n = 2000;
    for (std::size_t p = 0; p < n; ++p) {
      RngStream stream(102, p);
      const auto path = ou.simulate_rate(grid.times, stream, cond);
      if (std::abs(path.back() - cond.terminal_value) < 1e-2) ++close;
    }
    CHECK(static_cast<double>(close) / static_cast<double>(n) >= 0.99);
  }
  SUBCASE("zero-noise limit follows the ODE") {
    const AffineModel model(CoefficientFn::constant(-1.0), CoefficientFn::constant(0.5),
                            CoefficientFn::constant(1e-12), 0.3, 1.0);
    const PathGrid grid = PathGrid::uniform(1.0, 32);
    RngStream stream(103, 0);
    const auto path = model.simulate_rate(grid.times, stream);
    for (std::size_t i = 0; i < grid.times.size(); ++i) {
      const double t = grid.times[i];
      const double ode = std::exp(-t) * 0.3 + 0.5 * (1.0 - std::exp(-t));
      CHECK(path[i] == doctest::Approx(ode).epsilon(1e-6));
    }
  }
  SUBCASE("conditioned grid must stop before T") {
    const auto ou = ou_affine(1.0, 0.0, 1.0, 0.0, 1.0);
    const PathGrid grid = PathGrid::uniform(1.0, 8);
    RngStream stream(104, 0);
    CHECK_THROWS_AS(ou.simulate_rate(grid.times, stream, BridgeCondition{1.0, 1.0}),
                    SingularTime);
  }
}
