// Process-level checks of the insider-rates binary: exit-code contract and
// byte-level reproducibility of the CSV outputs.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "insider_cli_tests";

int run_cli(const std::string& args) {
  const std::string command = std::string(INSIDER_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

fs::path write_config(const std::string& name, const std::string& info,
                      const std::string& extra = "") {
  fs::create_directories(kWork);
  const fs::path path = kWork / name;
  std::ofstream out(path);
  out << R"({
  "rate": {"model": "ou", "k": 1.0, "mu": 0.0, "sigma": 1.0, "y0": 0.0, "T": 1.0},
  "market": {"eta": {"type": "constant", "value": 0.05},
             "xi": {"type": "constant", "value": 0.3},
             "rho": 0.5},
  "info": )"
      << info << R"(,
  "grid": {"n_steps": 48},
  "mc": {"n_paths": 2000, "seed": 4})"
      << extra << "\n}\n";
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("simulate exits cleanly and reproduces byte-identical output") {
  const fs::path config = write_config("sim.json", R"({"kind": "half_line", "c": 0.0})");
  const fs::path out_a = kWork / "sim_a";
  const fs::path out_b = kWork / "sim_b";
  CHECK(run_cli("simulate --config " + config.string() + " --out " + out_a.string()) == 0);
  CHECK(run_cli("simulate --config " + config.string() + " --out " + out_b.string() +
                " --threads 8") == 0);
  CHECK(slurp(out_a / "paths.csv") == slurp(out_b / "paths.csv"));
  CHECK(slurp(out_a / "summary.csv") == slurp(out_b / "summary.csv"));
  CHECK(fs::exists(out_a / "manifest.json"));
}

TEST_CASE("config validation failures exit with code 2") {
  fs::create_directories(kWork);
  const fs::path bad = kWork / "bad.json";
  {
    std::ofstream out(bad);
    out << R"({
  "rate": {"model": "ou", "k": 1.0, "mu": 0.0, "sigma": 1.0, "y0": 0.0, "T": 1.0},
  "market": {"eta": {"type": "constant", "value": 0.05},
             "xi": {"type": "constant", "value": 0.3},
             "rho": 1.5}
})";
  }
  CHECK(run_cli("simulate --config " + bad.string() + " --out " + (kWork / "x").string()) == 2);

  const fs::path terminal = write_config("terminal_no_eps.json", R"({"kind": "terminal"})");
  CHECK(run_cli("voi --config " + terminal.string() + " --out " + (kWork / "y").string()) == 2);

  CHECK(run_cli("simulate --config " + (kWork / "missing.json").string()) == 2);
}

TEST_CASE("corrupted certificate exits with code 4") {
  const fs::path config = write_config("cert.json", R"({"kind": "half_line", "c": 0.0})",
                                       R"(,
  "study": {"test_corrupt_certificate": true})");
  const fs::path out = kWork / "cert_out";
  CHECK(run_cli("certify --config " + config.string() + " --out " + out.string()) == 4);
  CHECK(slurp(out / "certificate.csv").find("FAIL") != std::string::npos);
}

TEST_CASE("healthy certificate exits with code 0") {
  const fs::path config = write_config("cert_ok.json", R"({"kind": "half_line", "c": 0.0})");
  const fs::path out = kWork / "cert_ok_out";
  CHECK(run_cli("certify --config " + config.string() + " --out " + out.string()) == 0);
  CHECK(slurp(out / "certificate.csv").find("PASS") != std::string::npos);
}
