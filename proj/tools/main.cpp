#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "insider/experiment.hpp"
#include "insider/version.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")->required();
  cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "seed override")->each([&args](const std::string&) {
    args.seed_set = true;
  });
  cmd->add_option("--threads", args.threads, "worker threads (fallback: INSIDER_RATES_THREADS)");
}

insider::RunOptions make_options(const CommonArgs& args) {
  insider::RunOptions options;
  options.out_dir = args.out_dir;
  if (args.seed_set) options.seed = args.seed;
  int threads = args.threads;
  if (threads <= 0) {
    if (const char* env = std::getenv("INSIDER_RATES_THREADS")) threads = std::atoi(env);
  }
  options.threads = threads > 0 ? threads : 1;
  return options;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"insider-rates: optimal portfolios under insider information on a Vasicek rate"};
  app.set_version_flag("--version", insider::kVersion);
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* simulate = app.add_subcommand("simulate", "simulate rate and wealth paths");
  CLI::App* voi = app.add_subcommand("voi", "value of the insider information");
  CLI::App* divergence = app.add_subcommand("divergence", "variance blow-up of exact information");
  CLI::App* certify = app.add_subcommand("certify", "finiteness certificate for weak information");
  for (CLI::App* cmd : {simulate, voi, divergence, certify}) add_common(cmd, args);

  CLI11_PARSE(app, argc, argv);

  try {
    const insider::ExperimentConfig config = insider::load_config_file(args.config_path);
    const insider::RunOptions options = make_options(args);
    if (simulate->parsed()) insider::run_simulate(config, options);
    if (voi->parsed()) insider::run_voi(config, options);
    if (divergence->parsed()) insider::run_divergence(config, options);
    if (certify->parsed()) insider::run_certify(config, options);
  } catch (const insider::ConfigError& err) {
    std::cerr << err.what() << "\n";
    return 2;
  } catch (const insider::BoundViolation& err) {
    std::cerr << err.what() << "\n";
    return 4;
  } catch (const insider::Error& err) {
    std::cerr << err.what() << "\n";
    return 3;
  } catch (const std::exception& err) {
    std::cerr << err.what() << "\n";
    return 1;
  }
  return 0;
}
