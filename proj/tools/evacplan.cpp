// evacplan: solve tables, sample trajectories, evaluate policies, export
// policy grids, and serve the training exercise.

#include <CLI11.hpp>
#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "evac/exercise_service.hpp"
#include "evac/harness.hpp"
#include "evac/table_io.hpp"
#include "evac/table_store.hpp"

namespace fs = std::filesystem;
using namespace evac;

namespace {

ModelParams resolve_params(const std::string& config_flag) {
  std::string path = config_flag;
  if (path.empty()) {
    if (const char* env = std::getenv("EVACPLAN_CONFIG"); env != nullptr) path = env;
  }
  if (path.empty()) return ModelParams{};
  return load_params(path);
}

unsigned resolve_jobs(unsigned jobs) {
  return jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : jobs;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  for (char ch : s + ",") {
    if (ch == ',') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else if (ch != ' ') {
      item.push_back(ch);
    }
  }
  return out;
}

bool is_dir_target(const std::string& path) {
  return (!path.empty() && path.back() == '/') || fs::is_directory(path);
}

struct SolveArgs {
  std::string level = "1";
  std::string config;
  std::string out;
  std::string values;
  unsigned jobs = 0;
};

int cmd_solve(const SolveArgs& a) {
  const ModelParams params = resolve_params(a.config);
  std::vector<Level> levels;
  if (a.level == "all") {
    levels = {Level::kI, Level::kIIb};
  } else {
    auto level = parse_level(a.level);
    if (!level || (*level != Level::kI && *level != Level::kIIb)) {
      throw DomainError("--level must be 1, 2b or all");
    }
    levels = {*level};
  }
  const bool dir = is_dir_target(a.out);
  if (!dir && levels.size() > 1) throw DomainError("--level all needs a directory for --out");
  if (dir) fs::create_directories(a.out);

  SolveOptions opts;
  opts.jobs = resolve_jobs(a.jobs);
  for (Level level : levels) {
    const Solution sol = solve(level, params, opts);
    if (dir) {
      save_policy(sol.policy, (fs::path(a.out) / policy_file_name(level)).string());
      save_values(sol.values, (fs::path(a.out) / value_file_name(level)).string());
    } else {
      save_policy(sol.policy, a.out);
      if (!a.values.empty()) save_values(sol.values, a.values);
    }
    std::cerr << "solved level " << level_name(level) << " digest "
              << to_hex(sol.policy.header().digest) << "\n";
  }
  return 0;
}

struct TrajArgs {
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
};

int cmd_trajectories(const TrajArgs& a) {
  const ModelParams params = resolve_params(a.config);
  save_trajectories(a.out, generate_trajectories(a.n, a.seed, params));
  return 0;
}

struct EvalArgs {
  std::string policies;
  std::string trajectories;
  std::string tables;
  std::string config;
  std::string out;
  std::string curves;
  std::string episodes_json;
  unsigned jobs = 0;
};

int cmd_evaluate(const EvalArgs& a) {
  const ModelParams params = resolve_params(a.config);
  std::vector<PolicyKind> kinds;
  for (const std::string& name : split_list(a.policies)) {
    auto kind = parse_policy_kind(name);
    if (!kind) throw DomainError("unknown policy '" + name + "'");
    kinds.push_back(*kind);
  }
  if (kinds.empty()) throw DomainError("--policies is empty");

  SolveOptions sopts;
  sopts.jobs = resolve_jobs(a.jobs);
  const auto store =
      a.tables.empty() ? TableStore::solve_all(params, sopts) : TableStore::load(a.tables, params, sopts);
  std::vector<Policy> policies;
  for (PolicyKind kind : kinds) policies.push_back(store->make_policy(kind));
  std::vector<const Policy*> ptrs;
  for (const Policy& p : policies) ptrs.push_back(&p);

  const auto trajectories = load_trajectories(a.trajectories, params);
  if (trajectories.empty()) throw DomainError("trajectory file is empty");

  std::vector<std::vector<EpisodeResult>> episodes;
  EvaluateOptions eopts;
  eopts.jobs = resolve_jobs(a.jobs);
  if (!a.episodes_json.empty()) eopts.episodes_out = &episodes;
  const MetricsTable table = evaluate(ptrs, trajectories, params, eopts);

  std::ostringstream csv;
  write_metrics_csv(csv, table);
  write_text_file(a.out, csv.str());
  if (!a.curves.empty()) {
    std::ostringstream curves;
    write_curves_csv(curves, table, params);
    write_text_file(a.curves, curves.str());
  }
  if (!a.episodes_json.empty()) {
    nlohmann::json all = nlohmann::json::array();
    for (std::size_t p = 0; p < policies.size(); ++p) {
      for (std::size_t i = 0; i < trajectories.size(); ++i) {
        all.push_back(episode_to_json(std::string(policies[p].name()), trajectories[i], episodes[p][i]));
      }
    }
    write_text_file(a.episodes_json, all.dump() + "\n");
  }
  return 0;
}

struct GridArgs {
  std::string policy;
  std::string config;
  std::vector<int> c{500};
  std::vector<int> t{1200};
  std::string out;
};

int cmd_grid(const GridArgs& a) {
  std::optional<Digest> expected;
  if (!a.config.empty() || std::getenv("EVACPLAN_CONFIG") != nullptr) {
    expected = params_digest(resolve_params(a.config));
  }
  const PolicyTable table = load_policy(a.policy, expected);
  const StateSpace& space = table.space();
  nlohmann::json grids = nlohmann::json::array();
  for (int c : a.c) {
    for (int t : a.t) {
      if (c < 1 || c > space.c_max() || t < 1 || t > space.t_max()) {
        throw DomainError("grid point (c=" + std::to_string(c) + ", t=" + std::to_string(t) +
                          ") outside the table");
      }
      grids.push_back(grid_to_json(policy_grid(table, c, t), table.header().level));
    }
  }
  nlohmann::json out = grids.size() == 1 ? grids[0] : nlohmann::json{{"grids", grids}};
  write_text_file(a.out, out.dump(2) + "\n");
  return 0;
}

struct ServeArgs {
  std::string config;
  std::string tables;
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string static_dir;
  long ttl = 3600;
  unsigned jobs = 0;
};

int cmd_serve(const ServeArgs& a) {
  const ModelParams params = resolve_params(a.config);
  SolveOptions sopts;
  sopts.jobs = resolve_jobs(a.jobs);
  const auto store =
      a.tables.empty() ? TableStore::solve_all(params, sopts) : TableStore::load(a.tables, params, sopts);
  ServiceOptions options;
  options.idle_ttl = std::chrono::seconds(a.ttl);
  ExerciseService service(store, options);
  httplib::Server server;
  mount_routes(server, service, a.static_dir);
  std::cerr << "serving on " << a.host << ":" << a.port << "\n";
  if (!server.listen(a.host, a.port)) throw DomainError("could not listen on port " + std::to_string(a.port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evacuation gate planning: solve, simulate, evaluate, serve"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a Level I or IIb table by backward induction");
  solve_cmd->add_option("--level", solve_args.level, "1, 2b or all")->capture_default_str();
  solve_cmd->add_option("--config", solve_args.config, "Model config JSON");
  solve_cmd->add_option("--out", solve_args.out, "Policy table file, or a directory")->required();
  solve_cmd->add_option("--values", solve_args.values, "Also write the value table here");
  solve_cmd->add_option("--jobs", solve_args.jobs, "Worker threads (0 = all cores)");

  TrajArgs traj_args;
  auto* traj_cmd = app.add_subcommand("trajectories", "Sample static trajectories");
  traj_cmd->add_option("--n", traj_args.n, "Number of trajectories")->check(CLI::PositiveNumber)->capture_default_str();
  traj_cmd->add_option("--seed", traj_args.seed, "Master seed")->capture_default_str();
  traj_cmd->add_option("--config", traj_args.config, "Model config JSON");
  traj_cmd->add_option("--out", traj_args.out, "Output JSON Lines file")->required();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "Replay policies on a trajectory set");
  eval_cmd->add_option("--policies", eval_args.policies, "Comma-separated policy kinds")->required();
  eval_cmd->add_option("--trajectories", eval_args.trajectories, "Trajectory file")->required();
  eval_cmd->add_option("--tables", eval_args.tables, "Directory of solved tables (solved in-process if omitted)");
  eval_cmd->add_option("--config", eval_args.config, "Model config JSON");
  eval_cmd->add_option("--out", eval_args.out, "Metrics CSV")->required();
  eval_cmd->add_option("--curves", eval_args.curves, "Cumulative reward curves CSV");
  eval_cmd->add_option("--episodes-json", eval_args.episodes_json, "Per-episode step logs JSON");
  eval_cmd->add_option("--jobs", eval_args.jobs, "Worker threads (0 = all cores)");

  GridArgs grid_args;
  auto* grid_cmd = app.add_subcommand("grid", "Export the policy over (family size, category)");
  grid_cmd->add_option("--policy", grid_args.policy, "Policy table file")->required();
  grid_cmd->add_option("--config", grid_args.config, "Model config JSON (checks the digest)");
  grid_cmd->add_option("--c", grid_args.c, "Capacities")->delimiter(',')->capture_default_str();
  grid_cmd->add_option("--t", grid_args.t, "Times remaining")->delimiter(',')->capture_default_str();
  grid_cmd->add_option("--out", grid_args.out, "Output JSON")->required();

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run the training exercise HTTP service");
  serve_cmd->add_option("--config", serve_args.config, "Model config JSON");
  serve_cmd->add_option("--tables", serve_args.tables, "Directory of solved tables (solved in-process if omitted)");
  serve_cmd->add_option("--host", serve_args.host)->capture_default_str();
  serve_cmd->add_option("--port", serve_args.port)->capture_default_str();
  serve_cmd->add_option("--static", serve_args.static_dir, "Directory served at /");
  serve_cmd->add_option("--ttl", serve_args.ttl, "Idle session lifetime in seconds")->capture_default_str();
  serve_cmd->add_option("--jobs", serve_args.jobs, "Solver threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*solve_cmd) return cmd_solve(solve_args);
    if (*traj_cmd) return cmd_trajectories(traj_args);
    if (*eval_cmd) return cmd_evaluate(eval_args);
    if (*grid_cmd) return cmd_grid(grid_args);
    if (*serve_cmd) return cmd_serve(serve_args);
  } catch (const std::exception& e) {
    std::cerr << "evacplan: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
