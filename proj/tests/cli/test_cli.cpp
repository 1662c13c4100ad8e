// End-to-end checks of the qwlab executable: exit codes, one-line summaries,
// and manifest verification, all through real process spawns.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

fs::path scratch_root() {
  static fs::path root = [] {
    fs::path p = fs::temp_directory_path() /
                 ("qwlab_cli_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  fs::path log = scratch_root() / ("log_" + std::to_string(counter++) + ".txt");
  std::string cmd = std::string(QWLAB_CLI_PATH) + " " + args + " > " +
                    log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = slurp(log);
  return r;
}

// a fiber small enough that every spawn finishes in milliseconds
std::string small_fiber_lines() {
  return "fiber.n_in_h = 20\n"
         "fiber.n_in_v = 20\n"
         "fiber.n_out = 25\n"
         "ttm.f1 = 5,7\n"
         "ttm.f2 = 15,17\n"
         "focus.target_f1 = 5\n"
         "focus.target_f2 = 17\n";
}

fs::path write_config(const std::string& name, const std::string& body) {
  fs::path p = scratch_root() / name;
  std::ofstream os(p, std::ios::binary);
  os << body;
  return p;
}

}  // namespace

TEST_CASE("version and help exit cleanly") {
  CliResult v = run_cli("--version");
  CHECK(v.exit_code == 0);
  CHECK(v.output.find("0.1.0") != std::string::npos);

  CliResult h = run_cli("--help");
  CHECK(h.exit_code == 0);
  CHECK(h.output.find("measure-tm") != std::string::npos);
  CHECK(h.output.find("hom-scan") != std::string::npos);
}

TEST_CASE("missing or unknown subcommands are usage errors") {
  CliResult none = run_cli("");
  CHECK(none.exit_code == 2);

  CliResult bogus = run_cli("defocus");
  CHECK(bogus.exit_code == 2);
}

TEST_CASE("bad flag values are usage errors") {
  CHECK(run_cli("--noise banana measure-tm").exit_code == 2);
  CHECK(run_cli("--seed banana measure-tm").exit_code == 2);
}

TEST_CASE("config file problems exit with code 2") {
  fs::path typo = write_config("typo.cfg", "fibre.n_out = 10\n");
  CliResult r1 = run_cli("--config " + typo.string() + " measure-tm");
  CHECK(r1.exit_code == 2);
  CHECK(r1.output.find("unknown key") != std::string::npos);

  fs::path malformed = write_config("malformed.cfg", "this line has no equals\n");
  CHECK(run_cli("--config " + malformed.string() + " measure-tm").exit_code == 2);

  CliResult missing = run_cli("--config /nonexistent/nowhere.cfg measure-tm");
  CHECK(missing.exit_code == 2);

  fs::path overlap = write_config(
      "overlap.cfg", small_fiber_lines() + "ttm.f2 = 5,17\n");
  CliResult r2 = run_cli("--config " + overlap.string() + " ttm-matrix");
  CHECK(r2.exit_code == 2);
  CHECK(r2.output.find("disjoint") != std::string::npos);
}

TEST_CASE("physics the settings cannot produce exits with code 3") {
  // with essentially no probe light every camera frame is all zeros, so no
  // row of the matrix can be compared against the oracle
  fs::path dark = write_config(
      "dark.cfg", small_fiber_lines() + "tm.flux = 1e-9\nnoise = poisson\n");
  fs::path out = scratch_root() / "dark_run";
  CliResult r = run_cli("--config " + dark.string() + " --seed 5 --out " +
                        out.string() + " measure-tm");
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("degenerate physics") != std::string::npos);
}

TEST_CASE("a run produces a summary line and a verifiable manifest") {
  fs::path cfg = write_config("ok.cfg", small_fiber_lines());
  fs::path out = scratch_root() / "ok_run";
  CliResult r = run_cli("--config " + cfg.string() + " --seed 11 --out " +
                        out.string() + " measure-tm");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("measure-tm: fidelity_vs_oracle=1") != std::string::npos);
  REQUIRE(fs::exists(out / "manifest.json"));
  REQUIRE(fs::exists(out / "tm.qwtm"));

  CliResult ok = run_cli("--verify " + (out / "manifest.json").string());
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("verify: OK") != std::string::npos);

  // flip one byte of an artifact and verification must fail
  {
    std::fstream f(out / "tm.qwtm",
                   std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(64);
    char c = 0;
    f.seekg(64);
    f.get(c);
    f.seekp(64);
    f.put(static_cast<char>(c ^ 0x1));
  }
  CliResult bad = run_cli("--verify " + (out / "manifest.json").string());
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("verify: FAILED") != std::string::npos);
  CHECK(bad.output.find("MISMATCH") != std::string::npos);
}

TEST_CASE("command line seed and noise reach the run manifest") {
  fs::path cfg = write_config("echo.cfg", small_fiber_lines() + "seed = 3\n");
  fs::path out = scratch_root() / "echo_run";
  CliResult r = run_cli("--config " + cfg.string() +
                        " --seed 21 --noise poisson --out " + out.string() +
                        " hom-scan");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("hom-scan:") != std::string::npos);
  std::string manifest = slurp(out / "manifest.json");
  CHECK(manifest.find("\"seed\": \"21\"") != std::string::npos);
  CHECK(manifest.find("\"noise\": \"poisson\"") != std::string::npos);
}
