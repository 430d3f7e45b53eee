#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "insider/errors.hpp"
#include "insider/portfolio.hpp"
#include "insider/value_of_info.hpp"

namespace insider {

// Config validation failure; carries the offending field path so the CLI can
// anchor the message.
struct ConfigError : Error {
  ConfigError(std::string field_path, const std::string& message)
      : Error(message), field(std::move(field_path)) {}
  std::string field;
};

struct GridSpec {
  std::size_t n_steps = 512;
  std::string refinement = "geometric";  // "uniform" | "geometric"
  double epsilon = -1.0;                 // horizon truncation; < 0 means 1e-3 * T
};

struct McSpec {
  std::size_t n_paths = 20000;
  std::uint64_t seed = 1;
};

struct StudySpec {
  std::vector<double> epsilons;
  std::string method = "monte-carlo";  // "monte-carlo" | "analytic"
  double quad_tol = 1e-8;
  int gh_nodes = 48;
  int panels = 16;
  int levels = 4;
  bool test_corrupt_certificate = false;
};

// One experiment = one JSON document.  Unknown keys are rejected; every model
// invariant is validated at load with a field-anchored message.
struct ExperimentConfig {
  std::optional<OUModel> ou;
  std::optional<AffineModel> affine;
  std::optional<MarketModel> market;
  InfoKind info;
  GridSpec grid;
  McSpec mc;
  StudySpec study;
  std::string output = "out";
  std::string resolved;  // canonical JSON echo for the manifest

  double horizon() const;
  bool informed() const { return info.variant != InfoVariant::NoInfo; }
  double grid_epsilon() const;
};

ExperimentConfig load_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

struct RunOptions {
  std::string out_dir;  // overrides config.output when non-empty
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

// CLI command bodies.  Each writes its CSV outputs plus a manifest.json into
// the output directory; failures surface as exceptions which the CLI maps to
// exit codes (2 config, 3 numeric, 4 certificate).
void run_simulate(const ExperimentConfig& config, const RunOptions& options);
void run_voi(const ExperimentConfig& config, const RunOptions& options);
void run_divergence(const ExperimentConfig& config, const RunOptions& options);
void run_certify(const ExperimentConfig& config, const RunOptions& options);

}  // namespace insider
