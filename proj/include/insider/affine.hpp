#pragma once

#include <optional>
#include <span>
#include <vector>

#include "insider/coefficients.hpp"
#include "insider/normal.hpp"
#include "insider/rng.hpp"

namespace insider {

// Conditioning datum: the known terminal value of the rate process.
struct BridgeCondition {
  double terminal_value = 0.0;
  double terminal_time = 0.0;  // must equal the model horizon
};

class ConditionedAffine;

// Affine diffusion dR = [a1(t) R + a2(t)] dt + b2(t) dB^R on [0, T].
// All conditioned laws are built from three deterministic integrals:
//   psi(s,t)            = exp(int_s^t a1)
//   delta_integral(u,s) = int_u^s (b2/psi)^2
//   nabla_integral(u,s) = int_u^s (a2/psi)
// computed by exact antiderivatives for flat coefficients and by tight
// quadrature otherwise, so that ratios of them stay clean.
class AffineModel {
 public:
  AffineModel(CoefficientFn a1, CoefficientFn a2, CoefficientFn b2, double r0, double horizon);

  const CoefficientFn& a1() const { return a1_; }
  const CoefficientFn& a2() const { return a2_; }
  const CoefficientFn& b2() const { return b2_; }
  double r0() const { return r0_; }
  double horizon() const { return horizon_; }

  double psi(double s, double t) const;
  double psi0(double t) const { return psi(0.0, t); }

  double delta_integral(double u, double s) const;
  double nabla_integral(double u, double s) const;

  // Law of (R_s | R_u = r_u), exact Gaussian transition.
  GaussianLaw transition_law(double u, double s, double r_u) const;

  // Law of (R_{t+delta} | R_t = r_t, R_T = cond.terminal_value).
  // Conditioning always shrinks the variance of the step.
  GaussianLaw bridge_law(double t, double delta, double r_t, const BridgeCondition& cond) const;

  // Extra drift of the rate under the terminally-enlarged filtration;
  // blows up like 1/(T-t) for an off-mean pinning as t -> T.
  double g_hat(double t, double r_t, double r_T) const;

  // Drift coefficients of the conditioned process, which is again affine.
  ConditionedAffine conditioned_coefficients(const BridgeCondition& cond) const;

  // Exact Gaussian stepping along `times` (no discretisation bias in the
  // rate).  With a condition, every step uses the bridge law; the grid must
  // then stay strictly below T.
  std::vector<double> simulate_rate(std::span<const double> times, RngStream& stream,
                                    const std::optional<BridgeCondition>& cond = {}) const;

 private:
  // int_u^s g(x)^p exp(-p * A(x)) dx with A(x) = int_0^x a1.
  double profile_integral(const CoefficientFn& g, int p, double u, double s) const;

  CoefficientFn a1_, a2_, b2_;
  double r0_;
  double horizon_;
};

// Coefficients of (R | R_T): still affine, with the same diffusion.
class ConditionedAffine {
 public:
  ConditionedAffine(AffineModel model, BridgeCondition cond)
      : model_(std::move(model)), cond_(cond) {}

  double a1(double t) const;
  double a2(double t) const;
  double b2(double t) const { return model_.b2()(t); }

  // a1(t) r + a2(t) reproduces the original drift plus g_hat, for every r.
  double drift(double t, double r) const { return a1(t) * r + a2(t); }

 private:
  AffineModel model_;
  BridgeCondition cond_;
};

}  // namespace insider
