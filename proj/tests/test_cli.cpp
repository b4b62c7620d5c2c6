#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>

#include "evac/harness.hpp"
#include "fixtures.hpp"

using evac::testing::temp_path;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(EVACPLAN_BIN) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Workdir {
  std::string dir = temp_path("cli");
  std::string config = dir + "/config.json";
  Workdir() {
    std::filesystem::create_directories(dir);
    std::ofstream(config) << R"({"c_max": 60, "t_max": 80})";
  }
  ~Workdir() { std::filesystem::remove_all(dir); }
  std::string path(const std::string& name) const { return dir + "/" + name; }
};

}  // namespace

TEST_CASE("usage errors exit nonzero") {
  CHECK(run("") != 0);
  CHECK(run("frobnicate") != 0);
  CHECK(run("trajectories --n 2 --bogus 1 --out /dev/null") != 0);
  CHECK(run("trajectories --n 0 --out /dev/null") != 0);
  CHECK(run("--help") == 0);
}

TEST_CASE("trajectories are byte-identical for a fixed seed") {
  Workdir w;
  REQUIRE(run("trajectories --n 2 --seed 7 --config " + w.config + " --out " + w.path("a.jsonl")) == 0);
  REQUIRE(run("trajectories --n 2 --seed 7 --config " + w.config + " --out " + w.path("b.jsonl")) == 0);
  CHECK(slurp(w.path("a.jsonl")) == slurp(w.path("b.jsonl")));
  CHECK(run("trajectories --n 2 --seed 8 --config " + w.config + " --out " + w.path("c.jsonl")) == 0);
  CHECK(slurp(w.path("a.jsonl")) != slurp(w.path("c.jsonl")));
}

TEST_CASE("config from the environment") {
  Workdir w;
  const std::string env = "EVACPLAN_CONFIG=" + w.config + " ";
  const std::string cmd = env + EVACPLAN_BIN + " trajectories --n 1 --seed 3 --out " + w.path("env.jsonl");
  REQUIRE(std::system(cmd.c_str()) == 0);
  REQUIRE(run("trajectories --n 1 --seed 3 --config " + w.config + " --out " + w.path("flag.jsonl")) == 0);
  CHECK(slurp(w.path("env.jsonl")) == slurp(w.path("flag.jsonl")));
}

TEST_CASE("solve, grid and evaluate") {
  Workdir w;
  const std::string tables = w.path("tables/");
  REQUIRE(run("solve --level all --config " + w.config + " --out " + tables + " --jobs 2") == 0);
  CHECK(std::filesystem::exists(tables + "level_I.evpt"));
  CHECK(std::filesystem::exists(tables + "level_IIb.evvt"));

  REQUIRE(run("solve --level 1 --config " + w.config + " --out " + w.path("l1.evpt")) == 0);
  CHECK(slurp(w.path("l1.evpt")) == slurp(tables + "level_I.evpt"));
  CHECK(run("solve --level 3 --config " + w.config + " --out " + w.path("x.evpt")) != 0);

  REQUIRE(run("grid --policy " + w.path("l1.evpt") + " --c 60 --t 80 --config " + w.config +
              " --out " + w.path("grid.json")) == 0);
  const auto grid = nlohmann::json::parse(slurp(w.path("grid.json")));
  CHECK(grid["capacity"] == 60);
  CHECK(grid["time"] == 80);
  for (const auto& row : grid["rows"]) CHECK(row["actions"][4] == "REJECT");
  CHECK(run("grid --policy " + w.path("l1.evpt") + " --c 10,20 --t 5 --out " + w.path("grids.json") +
            " --config " + w.config) == 0);
  CHECK(nlohmann::json::parse(slurp(w.path("grids.json")))["grids"].size() == 2u);
  // default config has another digest
  CHECK(run("grid --policy " + w.path("l1.evpt") + " --config /nonexistent.json --out " + w.path("g.json")) != 0);
  {
    std::ofstream(w.path("other.json")) << R"({"c_max": 60, "t_max": 80, "p_board": 0.7})";
  }
  CHECK(run("grid --policy " + w.path("l1.evpt") + " --config " + w.path("other.json") + " --out " + w.path("g.json")) != 0);
  CHECK(run("grid --policy " + w.path("l1.evpt") + " --c 61 --t 5 --out " + w.path("g.json")) != 0);

  REQUIRE(run("trajectories --n 5 --seed 1 --config " + w.config + " --out " + w.path("t.jsonl")) == 0);
  const std::string eval = "evaluate --policies accept_all,non_isisk,level_i,level_iib --trajectories " +
                           w.path("t.jsonl") + " --tables " + tables + " --config " + w.config;
  REQUIRE(run(eval + " --out " + w.path("m1.csv") + " --curves " + w.path("c.csv") +
              " --episodes-json " + w.path("e.json")) == 0);
  REQUIRE(run(eval + " --out " + w.path("m2.csv") + " --jobs 3") == 0);
  const std::string m1 = slurp(w.path("m1.csv"));
  CHECK(m1 == slurp(w.path("m2.csv")));

  std::istringstream lines(m1);
  std::string header, all, non;
  std::getline(lines, header);
  std::getline(lines, all);
  std::getline(lines, non);
  CHECK(all.substr(all.find(',')) == non.substr(non.find(',')));

  const auto episodes = nlohmann::json::parse(slurp(w.path("e.json")));
  CHECK(episodes.size() == 20u);

  CHECK(run("evaluate --policies greedy --trajectories " + w.path("t.jsonl") + " --tables " + tables +
            " --config " + w.config + " --out " + w.path("m3.csv")) != 0);
  CHECK(run("evaluate --policies level_i --trajectories " + w.path("missing.jsonl") + " --tables " +
            tables + " --config " + w.config + " --out " + w.path("m3.csv")) != 0);
  // tables solved under other params are refused
  CHECK(run("evaluate --policies level_i --trajectories " + w.path("t.jsonl") + " --tables " + tables +
            " --config " + w.path("other.json") + " --out " + w.path("m3.csv")) != 0);
}
