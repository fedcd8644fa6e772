#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "hystdyn/cli.hpp"

namespace fs = std::filesystem;
using hystdyn::cli::run;

namespace {

int invoke(std::initializer_list<std::string> args) {
  std::vector<std::string> storage = {"hystdyn"};
  storage.insert(storage.end(), args);
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "hystdyn_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(invoke({}) == hystdyn::cli::kUsage);
  CHECK(invoke({"frobnicate"}) == hystdyn::cli::kUsage);
  CHECK(invoke({"babble", "--mode", "sideways", "--out", path("x.csv")}) == hystdyn::cli::kUsage);
  CHECK(invoke({"train", "--data", path("x.csv")}) == hystdyn::cli::kUsage);
  CHECK(invoke({"train", "--data", path("x.csv"), "--k", "7", "--out", path("m.json")}) ==
        hystdyn::cli::kUsage);
}

TEST_CASE("babble writes data and a manifest, reproducibly") {
  REQUIRE(invoke({"babble", "--mode", "bi", "--duration", "120", "--seed", "3", "--out",
                  path("bi_a.csv")}) == 0);
  REQUIRE(invoke({"babble", "--mode", "bi", "--duration", "120", "--seed", "3", "--out",
                  path("bi_b.csv")}) == 0);
  CHECK(slurp(path("bi_a.csv")) == slurp(path("bi_b.csv")));
  CHECK(slurp(path("bi_a.csv")).rfind("time_s,u_a,u_b,temp_a_c,temp_b_c,theta_deg\n", 0) == 0);
  const auto manifest = nlohmann::json::parse(slurp(path("bi_a.manifest.json")));
  CHECK(manifest["command"] == "babble");
  CHECK(manifest["seed"] == 3);
  CHECK(manifest.contains("tool_version"));
  CHECK(manifest.contains("timestamp"));
}

TEST_CASE("seed precedence: flag over environment") {
  setenv("HYSTDYN_SEED", "3", 1);
  REQUIRE(invoke({"babble", "--mode", "bi", "--duration", "120", "--out", path("env.csv")}) == 0);
  REQUIRE(invoke({"babble", "--mode", "bi", "--duration", "120", "--seed", "4", "--out",
                  path("flag.csv")}) == 0);
  unsetenv("HYSTDYN_SEED");
  REQUIRE(invoke({"babble", "--mode", "bi", "--duration", "120", "--seed", "3", "--out",
                  path("ref.csv")}) == 0);
  CHECK(slurp(path("env.csv")) == slurp(path("ref.csv")));
  CHECK(slurp(path("flag.csv")) != slurp(path("ref.csv")));

  setenv("HYSTDYN_SEED", "not-a-number", 1);
  CHECK(invoke({"babble", "--mode", "bi", "--duration", "120", "--out", path("bad.csv")}) ==
        hystdyn::cli::kDataError);
  unsetenv("HYSTDYN_SEED");
}

TEST_CASE("train, eval, baseline and compare pipeline") {
  REQUIRE(invoke({"babble", "--mode", "bi", "--duration", "180", "--seed", "5", "--out",
                  path("pipe.csv")}) == 0);
  REQUIRE(invoke({"train", "--data", path("pipe.csv"), "--k", "4", "--epochs", "1", "--hidden",
                  "6", "--out", path("m4.json")}) == 0);
  for (const char* f : {"m4.json", "m4.history.csv", "m4.best.json", "m4.manifest.json"}) {
    CHECK(fs::exists(workdir() / f));
  }

  REQUIRE(invoke({"eval", "--model", path("m4.json"), "--data", path("pipe.csv"), "--mode",
                  "rollout", "--t0", "5", "--out", path("ev_roll"), "--label", "t4"}) == 0);
  for (const char* f : {"report.json", "trajectory.csv", "manifest.json"}) {
    CHECK(fs::exists(workdir() / "ev_roll" / f));
  }
  const auto report = nlohmann::json::parse(slurp(workdir() / "ev_roll" / "report.json"));
  CHECK(report["mode"] == "rollout");
  CHECK(report["k"] == 4);

  REQUIRE(invoke({"eval", "--model", path("m4.json"), "--data", path("pipe.csv"), "--mode",
                  "onestep", "--out", path("ev_one")}) == 0);
  REQUIRE(invoke({"baseline", "--data", path("pipe.csv"), "--k", "4", "--mode", "rollout",
                  "--t0", "5", "--out", path("ls_roll"), "--label", "t4"}) == 0);
  CHECK(fs::exists(workdir() / "ls_roll" / "model_linear.json"));

  REQUIRE(invoke({"compare", "--reports", path("ev_roll/report.json"),
                  path("ls_roll/report.json"), path("ev_one/report.json"), "--out",
                  path("table.csv")}) == 0);
  std::istringstream table(slurp(path("table.csv")));
  std::string line;
  std::getline(table, line);
  CHECK(line == "test_case,model_type,mode,k,rmse_deg");
  std::vector<double> rmses;
  while (std::getline(table, line)) rmses.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  REQUIRE(rmses.size() == 3);
  CHECK(std::is_sorted(rmses.begin(), rmses.end()));

  SUBCASE("k mismatch on eval is a config error") {
    CHECK(invoke({"eval", "--model", path("m4.json"), "--data", path("pipe.csv"), "--k", "2",
                  "--out", path("ev_bad")}) == hystdyn::cli::kDataError);
  }
}

TEST_CASE("data errors exit with 2") {
  CHECK(invoke({"train", "--data", path("missing.csv"), "--k", "1", "--out", path("m.json")}) ==
        hystdyn::cli::kDataError);

  std::ofstream(path("uni_only.csv")) << "time_s,u_a,temp_a_c,theta_deg\n0,0.1,25,0\n0.1,0.2,26,1\n";
  CHECK(invoke({"train", "--data", path("uni_only.csv"), "--k", "3", "--out", path("m.json")}) ==
        hystdyn::cli::kDataError);

  std::ofstream(path("junk.csv")) << "time_s,u_a,u_b,temp_a_c,temp_b_c,theta_deg\n0,x,0,25,25,0\n";
  CHECK(invoke({"baseline", "--data", path("junk.csv"), "--k", "1", "--out", path("ls_bad")}) ==
        hystdyn::cli::kDataError);
}
