#pragma once

// Static trajectories, episode replay, Table-I-style metrics and the data
// exports behind the policy-grid, cumulative-reward and trajectory figures.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evac/policies.hpp"

namespace evac {

struct ArrivalRecord {
  int family = 1;
  Category truth = Category::kAmcit;
  Category claimed = Category::kAmcit;
  /// Boarding succeeds iff u_board < p_board.
  double u_board = 0.0;

  friend bool operator==(const ArrivalRecord&, const ArrivalRecord&) = default;
};

struct Trajectory {
  std::uint64_t seed = 0;
  CategoryVector theta{};
  std::vector<ArrivalRecord> arrivals;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// One trajectory from its own seed: θ ~ Dirichlet(populations / scale), then
/// t_max arrivals with v ~ θ, f ~ family pmf, claim ~ claim row, u ~ U[0,1).
Trajectory generate_trajectory(std::uint64_t seed, const ModelParams& params);
/// Trajectory i uses seed mix_seed(master_seed, i).
std::vector<Trajectory> generate_trajectories(std::size_t n, std::uint64_t master_seed,
                                              const ModelParams& params);

/// JSON Lines: {"seed", "theta":[5], "arrivals":[{"f","true","claimed","u"}]}.
void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajectories);
void save_trajectories(const std::string& path, const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> read_trajectories(std::istream& in, const ModelParams& params);
std::vector<Trajectory> load_trajectories(const std::string& path, const ModelParams& params);

struct StepRecord {
  int time = 0;
  int capacity = 0;
  int family = 1;
  Category claimed = Category::kAmcit;
  Category truth = Category::kAmcit;
  Action action = Action::kReject;
  bool boarded = false;
  double reward = 0.0;
};

struct EpisodeResult {
  double reward = 0.0;
  std::array<long, kNumCategories> accepted{};  // people, by true category
  std::array<long, kNumCategories> arrived{};   // people, by true category
  long accepted_total = 0;
  long boarded_total = 0;
  /// Number of arrivals processed before the episode ended.
  int steps = 0;
  /// Cumulative reward after each processed arrival.
  std::vector<double> cumulative;
  std::vector<StepRecord> log;
};

struct EpisodeOptions {
  bool keep_log = true;
  /// Stop after this many arrivals (partial replay); nullopt = full horizon.
  std::optional<int> max_steps;
};

/// Arrival k is seen at t = t_max - k with the claimed category; rewards use
/// the true category. Ends when capacity reaches zero or arrivals run out.
EpisodeResult run_episode(const Policy& policy, const Trajectory& trajectory,
                          const ModelParams& params, const EpisodeOptions& options = {});

/// Reward, boarding and counters for one decision; shared by the harness and
/// the exercise service so both evolve episodes identically.
struct StepOutcome {
  bool boarded = false;
  double reward = 0.0;
  int next_capacity = 0;
};
StepOutcome apply_step(const ArrivalRecord& record, Action action, int capacity,
                       const ModelParams& params);

struct PolicyMetrics {
  std::string policy;
  std::size_t episodes = 0;
  double reward_mean = 0.0;
  double reward_stderr = 0.0;
  double accepted_mean = 0.0;
  double accepted_stderr = 0.0;
  CategoryVector accepted_by_category{};
  CategoryVector arrived_by_category{};
  /// Mean cumulative reward after each of the t_max steps.
  std::vector<double> curve;
};

struct MetricsTable {
  std::vector<PolicyMetrics> rows;
};

struct EvaluateOptions {
  unsigned jobs = 1;
  /// Keeps every episode result (with step logs) in `episodes_out`.
  std::vector<std::vector<EpisodeResult>>* episodes_out = nullptr;
};

/// Mean and standard error (sample sd / sqrt(n); 0 when n < 2).
std::pair<double, double> mean_stderr(const std::vector<double>& xs);

MetricsTable evaluate(const std::vector<const Policy*>& policies,
                      const std::vector<Trajectory>& trajectories, const ModelParams& params,
                      const EvaluateOptions& options = {});

// ---- exports ---------------------------------------------------------------------

/// Shortest round-trip decimal text for a double.
std::string format_number(double x);

void write_metrics_csv(std::ostream& out, const MetricsTable& table);
/// policy,step,time,mean_cumulative_reward; t_max rows per policy.
void write_curves_csv(std::ostream& out, const MetricsTable& table, const ModelParams& params);
nlohmann::json grid_to_json(const PolicyGrid& grid, Level level);
nlohmann::json episode_to_json(const std::string& policy, const Trajectory& trajectory,
                               const EpisodeResult& result);

void write_text_file(const std::string& path, const std::string& contents);

}  // namespace evac
