#include "insider/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "insider/version.hpp"

namespace insider {

namespace {

using nlohmann::json;

// Best-effort line anchor: locate the field's last path segment in the raw text.
int locate_line(const std::string& raw, const std::string& field_path) {
  const auto dot = field_path.rfind('.');
  const std::string key = dot == std::string::npos ? field_path : field_path.substr(dot + 1);
  const auto pos = raw.find("\"" + key + "\"");
  if (pos == std::string::npos) return 1;
  return 1 + static_cast<int>(std::count(raw.begin(), raw.begin() + pos, '\n'));
}

[[noreturn]] void fail(const std::string& raw, const std::string& field, const std::string& what) {
  std::ostringstream msg;
  msg << "config:" << locate_line(raw, field) << ": " << field << ": " << what;
  throw ConfigError(field, msg.str());
}

void check_keys(const json& obj, const std::string& path, const std::string& raw,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        ok = true;
        break;
      }
    }
    if (!ok) fail(raw, path + "." + item.key(), "unknown key");
  }
}

double get_number(const json& obj, const char* key, const std::string& path,
                  const std::string& raw) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    fail(raw, path + "." + key, "required numeric field");
  }
  return obj[key].get<double>();
}

double get_number_or(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  return obj[key].get<double>();
}

CoefficientFn parse_coefficient(const json& obj, const std::string& path, const std::string& raw) {
  if (!obj.is_object()) fail(raw, path, "expected a coefficient object");
  check_keys(obj, path, raw, {"type", "value", "breakpoints", "values", "coeffs"});
  const std::string type = obj.value("type", "");
  if (type == "constant") {
    return CoefficientFn::constant(get_number(obj, "value", path, raw));
  }
  if (type == "piecewise") {
    if (!obj.contains("breakpoints") || !obj.contains("values")) {
      fail(raw, path, "piecewise coefficient needs breakpoints and values");
    }
    try {
      return CoefficientFn::piecewise_constant(obj["breakpoints"].get<std::vector<double>>(),
                                               obj["values"].get<std::vector<double>>());
    } catch (const DomainError& err) {
      fail(raw, path, err.what());
    }
  }
  if (type == "polynomial") {
    if (!obj.contains("coeffs")) fail(raw, path, "polynomial coefficient needs coeffs");
    return CoefficientFn::polynomial(obj["coeffs"].get<std::vector<double>>());
  }
  fail(raw, path + ".type", "must be constant, piecewise or polynomial");
}

InfoKind parse_info(const json& obj, const std::string& raw) {
  check_keys(obj, "info", raw, {"kind", "c", "c1", "c2"});
  const std::string kind = obj.value("kind", "none");
  if (kind == "none") return InfoKind::none();
  if (kind == "terminal") return InfoKind::terminal(0.0);  // the datum is drawn per path
  if (kind == "half_line") return InfoKind::half_line(get_number(obj, "c", "info", raw));
  if (kind == "interval") {
    const double c1 = get_number(obj, "c1", "info", raw);
    const double c2 = get_number(obj, "c2", "info", raw);
    if (!(c1 < c2)) fail(raw, "info.c1", "interval requires c1 < c2");
    return InfoKind::interval(c1, c2);
  }
  fail(raw, "info.kind", "must be none, terminal, half_line or interval");
}

std::string canonical_echo(const json& parsed) { return parsed.dump(2); }

}  // namespace

double ExperimentConfig::horizon() const {
  return ou ? ou->horizon : affine->horizon();
}

double ExperimentConfig::grid_epsilon() const {
  return grid.epsilon > 0.0 ? grid.epsilon : 1e-3 * horizon();
}

ExperimentConfig load_config_text(const std::string& text) {
  json parsed;
  try {
    parsed = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ConfigError("", std::string("config: ") + err.what());
  }
  if (!parsed.is_object()) throw ConfigError("", "config: top level must be an object");
  ExperimentConfig config;
  check_keys(parsed, "config", text,
             {"rate", "market", "info", "grid", "mc", "study", "output"});

  if (!parsed.contains("rate") || !parsed["rate"].is_object()) {
    fail(text, "rate", "required block");
  }
  const json& rate = parsed["rate"];
  const std::string model_kind = rate.value("model", "ou");
  if (model_kind == "ou") {
    check_keys(rate, "rate", text, {"model", "k", "mu", "sigma", "y0", "T"});
    const double k = get_number(rate, "k", "rate", text);
    const double mu = get_number(rate, "mu", "rate", text);
    const double sigma = get_number(rate, "sigma", "rate", text);
    const double y0 = get_number(rate, "y0", "rate", text);
    const double T = get_number(rate, "T", "rate", text);
    if (!(k > 0.0)) fail(text, "rate.k", "mean reversion must be positive");
    if (!(sigma > 0.0)) fail(text, "rate.sigma", "volatility must be positive");
    if (!(T > 0.0)) fail(text, "rate.T", "horizon must be positive");
    config.ou.emplace(k, mu, sigma, y0, T);
  } else if (model_kind == "affine") {
    check_keys(rate, "rate", text, {"model", "a1", "a2", "b2", "r0", "T"});
    if (!rate.contains("a1") || !rate.contains("a2") || !rate.contains("b2")) {
      fail(text, "rate", "affine rate needs a1, a2, b2 coefficient blocks");
    }
    const double r0 = get_number(rate, "r0", "rate", text);
    const double T = get_number(rate, "T", "rate", text);
    if (!(T > 0.0)) fail(text, "rate.T", "horizon must be positive");
    CoefficientFn a1 = parse_coefficient(rate["a1"], "rate.a1", text);
    CoefficientFn a2 = parse_coefficient(rate["a2"], "rate.a2", text);
    CoefficientFn b2 = parse_coefficient(rate["b2"], "rate.b2", text);
    if (!(b2.min_on(0.0, T) > 0.0)) fail(text, "rate.b2", "must be strictly positive on [0, T]");
    config.affine.emplace(std::move(a1), std::move(a2), std::move(b2), r0, T);
  } else {
    fail(text, "rate.model", "must be ou or affine");
  }
  const double T = config.horizon();

  if (!parsed.contains("market") || !parsed["market"].is_object()) {
    fail(text, "market", "required block");
  }
  const json& market = parsed["market"];
  check_keys(market, "market", text, {"eta", "xi", "rho", "x0", "s0"});
  if (!market.contains("eta") || !market.contains("xi")) {
    fail(text, "market", "needs eta and xi coefficient blocks");
  }
  CoefficientFn eta = parse_coefficient(market["eta"], "market.eta", text);
  CoefficientFn xi = parse_coefficient(market["xi"], "market.xi", text);
  const double rho = get_number(market, "rho", "market", text);
  const double x0 = get_number_or(market, "x0", 1.0);
  const double s0 = get_number_or(market, "s0", 1.0);
  if (!(rho >= -1.0 && rho <= 1.0)) fail(text, "market.rho", "must lie in [-1, 1]");
  if (!(x0 > 0.0)) fail(text, "market.x0", "initial wealth must be positive");
  if (!(s0 > 0.0)) fail(text, "market.s0", "initial price must be positive");
  if (!(xi.min_on(0.0, T) > 0.0)) fail(text, "market.xi", "must be bounded away from zero");
  config.market.emplace(std::move(eta), std::move(xi), rho, x0, s0, T);

  if (parsed.contains("info")) config.info = parse_info(parsed["info"], text);

  if (parsed.contains("grid")) {
    const json& grid = parsed["grid"];
    check_keys(grid, "grid", text, {"n_steps", "refinement", "epsilon"});
    if (grid.contains("n_steps")) {
      const double n = get_number(grid, "n_steps", "grid", text);
      if (!(n >= 1.0)) fail(text, "grid.n_steps", "need at least one step");
      config.grid.n_steps = static_cast<std::size_t>(n);
    }
    if (grid.contains("refinement")) {
      config.grid.refinement = grid["refinement"].get<std::string>();
      if (config.grid.refinement != "uniform" && config.grid.refinement != "geometric") {
        fail(text, "grid.refinement", "must be uniform or geometric");
      }
    }
    if (grid.contains("epsilon")) {
      config.grid.epsilon = get_number(grid, "epsilon", "grid", text);
      if (!(config.grid.epsilon > 0.0 && config.grid.epsilon < T)) {
        fail(text, "grid.epsilon", "must lie in (0, T)");
      }
    }
  }

  if (parsed.contains("mc")) {
    const json& mc = parsed["mc"];
    check_keys(mc, "mc", text, {"n_paths", "seed"});
    if (mc.contains("n_paths")) {
      const double n = get_number(mc, "n_paths", "mc", text);
      if (!(n >= 1.0)) fail(text, "mc.n_paths", "need at least one path");
      config.mc.n_paths = static_cast<std::size_t>(n);
    }
    if (mc.contains("seed")) config.mc.seed = mc["seed"].get<std::uint64_t>();
  }

  if (parsed.contains("study")) {
    const json& study = parsed["study"];
    check_keys(study, "study", text,
               {"epsilons", "method", "quad_tol", "gh_nodes", "panels", "levels",
                "test_corrupt_certificate"});
    if (study.contains("epsilons")) {
      config.study.epsilons = study["epsilons"].get<std::vector<double>>();
      for (std::size_t i = 0; i < config.study.epsilons.size(); ++i) {
        const double e = config.study.epsilons[i];
        if (!(e > 0.0 && e < T)) fail(text, "study.epsilons", "entries must lie in (0, T)");
        if (i > 0 && !(e < config.study.epsilons[i - 1])) {
          fail(text, "study.epsilons", "entries must strictly decrease");
        }
      }
    }
    if (study.contains("method")) {
      config.study.method = study["method"].get<std::string>();
      if (config.study.method != "monte-carlo" && config.study.method != "analytic") {
        fail(text, "study.method", "must be monte-carlo or analytic");
      }
    }
    config.study.quad_tol = get_number_or(study, "quad_tol", config.study.quad_tol);
    config.study.gh_nodes = static_cast<int>(get_number_or(study, "gh_nodes", config.study.gh_nodes));
    config.study.panels = static_cast<int>(get_number_or(study, "panels", config.study.panels));
    config.study.levels = static_cast<int>(get_number_or(study, "levels", config.study.levels));
    if (study.contains("test_corrupt_certificate")) {
      config.study.test_corrupt_certificate = study["test_corrupt_certificate"].get<bool>();
    }
  }

  if (parsed.contains("output")) config.output = parsed["output"].get<std::string>();

  if (config.affine && (config.info.variant == InfoVariant::HalfLine ||
                        config.info.variant == InfoVariant::Interval)) {
    fail(text, "info.kind", "interval-type information requires the OU rate model");
  }
  config.resolved = canonical_echo(parsed);
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "config: cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_config_text(buffer.str());
}

namespace {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error("cannot open output file " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << "\r\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << "\r\n";
  }

 private:
  std::ofstream out_;
};

struct Resolved {
  fs::path dir;
  std::uint64_t seed;
  int threads;
};

Resolved resolve(const ExperimentConfig& config, const RunOptions& options,
                 const char* command) {
  Resolved r;
  r.dir = options.out_dir.empty() ? fs::path(config.output) : fs::path(options.out_dir);
  fs::create_directories(r.dir);
  r.seed = options.seed ? *options.seed : config.mc.seed;
  r.threads = std::max(1, options.threads);
  (void)command;
  return r;
}

void write_manifest(const fs::path& dir, const char* command, const ExperimentConfig& config,
                    std::uint64_t seed) {
  json manifest;
  manifest["command"] = command;
  manifest["config"] = json::parse(config.resolved);
  manifest["seed"] = seed;
  manifest["version"] = kVersion;
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
}

const char* filtration_name(Filtration f) {
  switch (f) {
    case Filtration::F:
      return "F";
    case Filtration::G:
      return "G";
    case Filtration::Gtilde:
      return "Gtilde";
    case Filtration::Gbar:
      return "Gbar";
  }
  return "?";
}

const char* info_name(InfoVariant v) {
  switch (v) {
    case InfoVariant::NoInfo:
      return "none";
    case InfoVariant::Terminal:
      return "terminal";
    case InfoVariant::HalfLine:
      return "half_line";
    case InfoVariant::Interval:
      return "interval";
  }
  return "?";
}

PathGrid build_grid(const ExperimentConfig& config) {
  const double T = config.horizon();
  if (!config.informed()) {
    if (config.grid.refinement == "geometric") {
      return PathGrid::geometric(T, config.grid_epsilon(), config.grid.n_steps);
    }
    return PathGrid::uniform(T, config.grid.n_steps);
  }
  const double eps = config.grid_epsilon();
  if (config.grid.refinement == "uniform") {
    return PathGrid::uniform(T - eps, config.grid.n_steps);
  }
  return PathGrid::geometric(T, eps, config.grid.n_steps);
}

}  // namespace

void run_simulate(const ExperimentConfig& config, const RunOptions& options) {
  const Resolved r = resolve(config, options, "simulate");
  const Strategy strategy = Strategy::for_info(config.info);
  const PathGrid grid = build_grid(config);
  SimOptions sim;
  sim.n_paths = config.mc.n_paths;
  sim.seed = r.seed;
  sim.threads = r.threads;
  const SimBatch batch = config.ou
                             ? simulate_wealth(*config.market, *config.ou, strategy, grid, sim)
                             : simulate_wealth(*config.market, *config.affine, strategy, grid, sim);

  {
    CsvWriter paths(r.dir / "paths.csv", {"t", "mean_Y", "stderr_Y", "mean_lnX", "stderr_lnX"});
    const double n = static_cast<double>(batch.n_paths);
    for (std::size_t i = 0; i < grid.times.size(); ++i) {
      const double mean_y = batch.sum_rate[i] / n;
      const double var_y =
          std::max(0.0, (batch.sum_rate_sq[i] - n * mean_y * mean_y) / std::max(1.0, n - 1.0));
      const double mean_lnx = batch.sum_log_wealth[i] / n;
      const double var_lnx = std::max(
          0.0, (batch.sum_log_wealth_sq[i] - n * mean_lnx * mean_lnx) / std::max(1.0, n - 1.0));
      paths.row({format_double(grid.times[i]), format_double(mean_y),
                 format_double(std::sqrt(var_y / n)), format_double(mean_lnx),
                 format_double(std::sqrt(var_lnx / n))});
    }
  }
  {
    CsvWriter summary(r.dir / "summary.csv",
                      {"mean_lnX_T", "stderr", "filtration", "info", "n_paths", "n_steps",
                       "t_end", "seed"});
    summary.row({format_double(batch.mean_final_log_wealth()),
                 format_double(batch.stderr_final_log_wealth()),
                 filtration_name(batch.filtration), info_name(batch.info.variant),
                 std::to_string(batch.n_paths), std::to_string(grid.n_steps()),
                 format_double(grid.t_end()), std::to_string(r.seed)});
  }
  write_manifest(r.dir, "simulate", config, r.seed);
}

void run_voi(const ExperimentConfig& config, const RunOptions& options) {
  if (!config.ou) {
    throw ConfigError("rate.model", "config: value-of-information studies require the OU rate");
  }
  const Resolved r = resolve(config, options, "voi");
  const bool terminal = config.info.variant == InfoVariant::Terminal;
  if (terminal && config.study.epsilons.empty()) {
    throw ConfigError("study.epsilons",
                      "config: terminal information has a divergent value; an epsilon list is "
                      "required (study.epsilons)");
  }
  VoIConfig voi;
  voi.method =
      config.study.method == "analytic" ? VoIMethod::Analytic : VoIMethod::MonteCarlo;
  voi.n_paths = config.mc.n_paths;
  voi.n_steps = config.grid.n_steps;
  voi.seed = r.seed;
  voi.threads = r.threads;
  voi.gh_nodes = config.study.gh_nodes;
  voi.panels = config.study.panels;
  voi.tol = config.study.quad_tol;

  CsvWriter out(r.dir / "voi.csv", {"v_f", "v_h", "delta_v", "stderr", "epsilon"});
  if (terminal) {
    for (double eps : config.study.epsilons) {
      voi.epsilon = eps;
      const VoIReport report = value_of_information(*config.market, *config.ou, config.info, voi);
      out.row({format_double(report.v_f), format_double(report.v_h),
               format_double(report.delta_v), format_double(report.mc_stderr),
               format_double(report.epsilon)});
    }
  } else {
    voi.epsilon = config.informed() ? config.grid_epsilon() : 0.0;
    if (!config.informed()) voi.epsilon = 1e-3 * config.horizon();  // unused for NoInfo
    const VoIReport report = value_of_information(*config.market, *config.ou, config.info, voi);
    out.row({format_double(report.v_f), format_double(report.v_h), format_double(report.delta_v),
             format_double(report.mc_stderr), format_double(report.epsilon)});
  }
  write_manifest(r.dir, "voi", config, r.seed);
}

void run_divergence(const ExperimentConfig& config, const RunOptions& options) {
  if (!config.ou) {
    throw ConfigError("rate.model", "config: the divergence study requires the OU rate");
  }
  if (config.study.epsilons.size() < 2) {
    throw ConfigError("study.epsilons", "config: divergence study needs >= 2 epsilons");
  }
  const Resolved r = resolve(config, options, "divergence");
  VoIConfig voi;
  voi.gh_nodes = config.study.gh_nodes;
  const DivergenceStudy study =
      variance_divergence(*config.market, *config.ou, config.study.epsilons, voi);
  {
    CsvWriter out(r.dir / "divergence.csv", {"epsilon", "value", "log_inv_eps"});
    for (std::size_t i = 0; i < study.epsilons.size(); ++i) {
      out.row({format_double(study.epsilons[i]), format_double(study.values[i]),
               format_double(study.log_inv_eps[i])});
    }
  }
  {
    CsvWriter out(r.dir / "fit.csv",
                  {"slope", "intercept", "r2", "degenerate", "weight_mean_gap"});
    out.row({format_double(study.slope), format_double(study.intercept), format_double(study.r2),
             study.degenerate_fit ? "1" : "0", format_double(study.weight_mean_gap)});
  }
  write_manifest(r.dir, "divergence", config, r.seed);
}

void run_certify(const ExperimentConfig& config, const RunOptions& options) {
  if (!config.ou) {
    throw ConfigError("rate.model", "config: certificates require the OU rate");
  }
  if (config.info.variant != InfoVariant::HalfLine &&
      config.info.variant != InfoVariant::Interval) {
    throw ConfigError("info.kind", "config: certify needs half_line or interval information");
  }
  const Resolved r = resolve(config, options, "certify");
  CertificateConfig cert_config;
  cert_config.panels = std::max(1, config.study.panels / 4);
  cert_config.levels = config.study.levels;
  FinitenessCertificate cert =
      compute_finiteness_certificate(*config.market, *config.ou, config.info, cert_config);
  if (config.study.test_corrupt_certificate) {
    cert.bound = -cert.bound;  // deliberate sign corruption for the negative test
    cert.pass = cert.integral_estimate <= cert.bound;
  }
  {
    std::vector<std::string> header = {"direct_integral", "bound", "margin", "i_constant"};
    for (std::size_t i = 0; i < cert.refinement_deltas.size(); ++i) {
      header.push_back("gap_" + std::to_string(i + 1));
    }
    header.push_back("verdict");
    CsvWriter out(r.dir / "certificate.csv", header);
    std::vector<std::string> cells = {format_double(cert.integral_estimate),
                                      format_double(cert.bound),
                                      format_double(cert.bound - cert.integral_estimate),
                                      format_double(cert.i_constant)};
    for (double gap : cert.refinement_deltas) cells.push_back(format_double(gap));
    cells.push_back(cert.pass ? "PASS" : "FAIL");
    out.row(cells);
  }
  write_manifest(r.dir, "certify", config, r.seed);
  if (!cert.pass) {
    throw BoundViolation("certificate: direct integral exceeds the bound");
  }
}

}  // namespace insider
