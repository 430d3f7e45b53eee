#pragma once

#include <cstdint>
#include <vector>

#include "insider/portfolio.hpp"
#include "insider/vasicek.hpp"

namespace insider {

enum class VoIMethod { Analytic, MonteCarlo };

struct VoIConfig {
  VoIMethod method = VoIMethod::Analytic;
  double epsilon = 1e-3;     // horizon truncation used by informed strategies
  std::size_t n_paths = 20000;
  std::size_t n_steps = 512;
  std::uint64_t seed = 1;
  int threads = 1;
  int gh_nodes = 48;
  int panels = 16;
  double tol = 1e-8;
};

struct VoIReport {
  double v_f = 0.0;       // uninformed optimal value E[ln X]
  double v_h = 0.0;       // informed optimal value (truncated at T - epsilon)
  double delta_v = 0.0;   // v_h - v_f
  double mc_stderr = 0.0; // 0 for the analytic method
  double epsilon = 0.0;
  std::size_t n_paths = 0;
  VoIMethod method = VoIMethod::Analytic;
};

// Price of the information of the enlargement `info`: both values are
// computed by the same method (analytic quadrature, or paired Monte Carlo
// with common random numbers) over the same horizon, so the difference is
// clean.  Terminal information is always truncated at T - epsilon.
VoIReport value_of_information(const MarketModel& market, const OUModel& model,
                               const InfoKind& info, const VoIConfig& config);

struct DivergenceStudy {
  std::vector<double> epsilons;
  std::vector<double> values;              // delta V(eps), the truncated price of information
  std::vector<double> variance_integrals;  // int_0^{T-eps} Var[pi_hat*_t] dt
  std::vector<double> log_inv_eps;         // ln(1/eps)
  double slope = 0.0;                      // fit of values against ln(1/eps)
  double intercept = 0.0;
  double r2 = 0.0;
  bool degenerate_fit = false;      // two-point fit: r2 = 1 by construction
  double weight_mean_smallest = 0.0;  // E[pi_hat*] at T - eps_min
  double weight_mean_second = 0.0;    // ... at T - eps_next
  double weight_mean_gap = 0.0;       // relative difference (finite-limit check)
};

// The exact-information blow-up: the truncated price of information
// delta V(eps) grows like slope * log(1/eps) and the truncated variance
// integral of the optimal weight diverges alongside it, witnessing that the
// untruncated value is infinite while E[pi_hat*_t] stays finite up to T.
DivergenceStudy variance_divergence(const MarketModel& market, const OUModel& model,
                                    const std::vector<double>& epsilons, const VoIConfig& config);

// psi(t) = sigma^4 e^{-k(T-t)} / (sigma(t) sigma(T-t)); integrable on [0, T]
// with inverse-square-root endpoints.
double psi_function(const OUModel& model, double t);
double psi_integral(const OUModel& model, int panels = 8, double tol = 1e-9);

// Universal tail constant I = int (1/Phi_bar(z) + 1/Phi_bar(-z)) Phi'(z)^2 dz,
// evaluated through Mills ratios so the tails behave like |z| Phi'(z).
double appendix_I(double tol = 1e-11);

// Interval analogue at a fixed time: int [Phi'(z1)-Phi'(z2)]^2 / (P_in P_out)
// in the standardized coordinate, with z2 = z1 + (c2-c1)/sigma(T-t).
double appendix_I_bar(const OUModel& model, double t, double c1, double c2, double tol = 1e-10);

struct CertificateConfig {
  double z_tol = 1e-12;  // tolerance of the inner standardized-tail integrals
  int panels = 4;
  int levels = 4;        // panel doublings recorded in the certificate
  double margin_tol = 1e-9;
};

struct FinitenessCertificate {
  double integral_estimate = 0.0;          // int_0^T E[correction^2] dt, finest level
  double bound = 0.0;                      // (1/sqrt(2 pi)) * (I * int psi  or  int psi(t) Ibar(t))
  std::vector<double> refinement_values;   // per refinement level
  std::vector<double> refinement_deltas;   // successive |differences|
  double i_constant = 0.0;                 // I for half-line info, 0 otherwise
  bool pass = false;
};

// No-throw variant: reports pass = false when the bound is violated.
FinitenessCertificate compute_finiteness_certificate(const MarketModel& market,
                                                     const OUModel& model, const InfoKind& info,
                                                     const CertificateConfig& config = {});

// Throws BoundViolation when the direct integral exceeds the paper bound
// beyond tolerance (that signals a sign/stability bug, not a math failure).
FinitenessCertificate finiteness_certificate(const MarketModel& market, const OUModel& model,
                                             const InfoKind& info,
                                             const CertificateConfig& config = {});

}  // namespace insider
