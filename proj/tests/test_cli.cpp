#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, std::string* out = nullptr) {
  const fs::path log = fs::temp_directory_path() / "twinforge_cli_test.log";
  const std::string cmd = std::string(TWINFORGE_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (out) {
    std::ifstream f(log);
    std::stringstream ss;
    ss << f.rdbuf();
    *out = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("twinforge_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("run v9-clear-1200") == 2);
  CHECK(run("run --model v3 --weather sunny --time 12:00") == 2);
  CHECK(run("batch --mode sideways") == 2);
  CHECK(run("run v3-clear-1200 --scenario /nonexistent.json") == 2);
  CHECK(run("report --out /nonexistent_dir_xyz") == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("matrix subcommand") {
  const auto dir = scratch("matrix");
  std::string out;
  CHECK(run("matrix --models v3,v2 --weathers clear --times 12:00,00:00 --out " +
                (dir / "m.json").string(), &out) == 0);
  CHECK(out.find("4 cases") != std::string::npos);
  CHECK(fs::exists(dir / "m.json"));
  CHECK(run("matrix --models v7 --out " + (dir / "x.json").string()) == 2);
}

TEST_CASE("run subcommand writes telemetry and prints a verdict") {
  const auto dir = scratch("run");
  std::string out;
  const auto csv = dir / "case.csv";
  CHECK(run("run v3-clear-1200 --out " + csv.string(), &out) == 0);
  CHECK(out.rfind("PASS", 0) == 0);
  CHECK(fs::file_size(csv) > 1000);
  // A failing verdict is still a successful run.
  CHECK(run("run --model v2_tiny --weather thick_fog --time 00:00 --out " + (dir / "b.csv").string(),
            &out) == 0);
  CHECK(out.find("FAIL") != std::string::npos);
  CHECK(run("run v3-clear-1200 --seed-override 5 --out " + (dir / "c.csv").string(), &out) == 0);
  CHECK(out.find("non-reproducible") != std::string::npos);
}

TEST_CASE("batch then report") {
  const auto dir = scratch("batch");
  std::string out;
  const std::string factors = "--models v3 --weathers clear,thick_fog --times 12:00,00:00";
  CHECK(run("batch " + factors + " --workers 2 --batch-size 2 --out " + dir.string(), &out) == 0);
  CHECK(out.find("Batch ID") != std::string::npos);
  CHECK(fs::exists(dir / "timing.json"));
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "cases" / "v3-clear-1200.csv"));
  std::string rep;
  CHECK(run("report --out " + dir.string() + " --export dtc --stride 50", &rep) == 0);
  CHECK(fs::exists(dir / "dtc.csv"));
  CHECK(run("report --out " + dir.string() + " --export nope") == 2);
  // A corrupt CSV is a usage error.
  std::ofstream(dir / "cases" / "v3-clear-1200.csv") << "garbage\n";
  CHECK(run("report --out " + dir.string()) == 2);
}

TEST_CASE("thread-mode batch honours the worker environment variable") {
  const auto dir = scratch("thread");
  const std::string cmd = "batch --models v3 --weathers clear --times 12:00 --mode thread --out " +
                          dir.string();
  setenv("TWINFORGE_WORKERS", "3", 1);
  CHECK(run(cmd) == 0);
  unsetenv("TWINFORGE_WORKERS");
  std::ifstream f(dir / "timing.json");
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(nlohmann::json::parse(ss.str())["workers"] == 3);
}
