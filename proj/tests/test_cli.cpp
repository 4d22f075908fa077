#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "seesaw/cli.hpp"

using namespace seesaw;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path(SEESAW_TEST_TMP) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("simulate then analyze", "[cli]") {
  const auto dir = fresh_dir("sim");
  const auto sim = run({"simulate", "--ns", "1000", "--nr", "10", "--steps", "50000", "--seed", "4", "--out",
                        dir.string()});
  INFO(sim.err);
  REQUIRE(sim.code == 0);
  for (const char* f : {"trajectory.csv", "params.cfg", "manifest.json"}) CHECK(fs::exists(dir / f));

  const auto manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["subcommand"] == "simulate");
  CHECK(manifest["seed"] == 4);
  CHECK(manifest["params"]["ns"] == "1000");

  const auto ana = run({"analyze", "--in", (dir / "trajectory.csv").string()});
  INFO(ana.err);
  REQUIRE(ana.code == 0);
  const auto tail = json::parse(slurp(dir / "tail_fit.json"));
  CHECK(tail["xi"].get<double>() > 0.0);
  CHECK(tail["n_returns"].get<int>() > 10'000);
  for (const char* f : {"ccdf.csv", "acf_returns.csv", "acf_magnitudes.csv", "analysis.json"}) {
    CHECK(fs::exists(dir / f));
  }
  CHECK(slurp(dir / "acf_returns.csv").rfind("lag,acf\n0,1\n", 0) == 0);
}

TEST_CASE("simulation output is reproducible", "[cli]") {
  const auto a = fresh_dir("rep_a");
  const auto b = fresh_dir("rep_b");
  for (const auto& d : {a, b}) {
    REQUIRE(run({"simulate", "--ns", "50", "--nr", "2", "--steps", "2000", "--seed", "9", "--reset", "--out",
                 d.string()})
                .code == 0);
  }
  CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
  CHECK(slurp(a / "params.cfg") == slurp(b / "params.cfg"));
}

TEST_CASE("markov reproduces the two-agent reset chain", "[cli]") {
  const auto dir = fresh_dir("markov");
  const auto r = run({"markov", "--n", "2", "--reset", "--matrix", "--out", dir.string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(dir / "stationary.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "d,probability");
  const double expected[] = {0.25, 0.5, 0.25};
  for (int d = 0; d <= 2; ++d) {
    REQUIRE(std::getline(csv, line));
    const auto comma = line.find(',');
    CHECK(line.substr(0, comma) == std::to_string(d));
    CHECK(std::abs(std::stod(line.substr(comma + 1)) - expected[d]) < 1e-10);
  }
  CHECK(fs::exists(dir / "matrix.csv"));
  CHECK(json::parse(slurp(dir / "markov.json"))["unique"] == true);

  const auto absorbing = run({"markov", "--n", "4", "--out", dir.string()});
  CHECK(absorbing.code == 0);
  CHECK(absorbing.err.find("warning") != std::string::npos);
}

TEST_CASE("optimize writes the profile", "[cli]") {
  const auto dir = fresh_dir("opt");
  REQUIRE(run({"optimize", "--ns", "20", "--nr", "2", "--out", dir.string()}).code == 0);
  const auto csv = slurp(dir / "profile.csv");
  CHECK(csv.rfind("d,d_over_N,q_demand,q_price\n", 0) == 0);
  CHECK(json::parse(slurp(dir / "optimize.json"))["max_abs_difference"].get<double>() > 0.0);
}

TEST_CASE("botgame writes a replayable log", "[cli]") {
  const auto dir = fresh_dir("bot");
  REQUIRE(run({"botgame", "--rounds", "300", "--skip-prob", "0.1", "--seed", "2", "--out", dir.string()}).code == 0);
  std::ifstream in(dir / "rounds.jsonl");
  const auto records = read_round_log(in);
  CHECK(records.size() == 300);
  GameConfig cfg{11, PayoffMode::minority_point, 0.1, 300, 2};
  CHECK(records == run_bot_game(cfg, BotKind::demand_efficient));
  const auto m = json::parse(slurp(dir / "metrics.json"));
  CHECK(m["n_rounds"] == 300);
}

TEST_CASE("exit codes", "[cli]") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"--version"}).out == std::string(kVersion) + "\n");
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"simulate", "--steps", "10"}).code == 1);
  CHECK(run({"botgame", "--bot", "genius"}).code == 1);
  CHECK(run({"markov", "--n", "4", "--nr", "4"}).code == 1);
  CHECK(run({"botgame", "--players", "1", "--out", fresh_dir("bad").string()}).code == 1);

  const auto dir = fresh_dir("broken");
  {
    std::ofstream(dir / "trajectory.csv") << "t,demand,price\n0,banana,1\n";
    std::ofstream(dir / "params.cfg") << "n_speculators = 10\nn_random = 2\nboundary_mode = clamp\nseed = 0\n";
  }
  const auto broken = run({"analyze", "--in", (dir / "trajectory.csv").string()});
  CHECK(broken.code == 2);
  CHECK(broken.err.find("error") != std::string::npos);
  CHECK(run({"markov", "--n", "50", "--reset", "--max-iter", "2", "--out", dir.string()}).code == 2);
}
