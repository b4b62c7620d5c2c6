#include "evac/harness.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace evac {

// ---- trajectories -------------------------------------------------------------------

Trajectory generate_trajectory(std::uint64_t seed, const ModelParams& params) {
  const FamilySizePMF fam = family_size_pmf(params);
  const DirichletBelief prior = DirichletBelief::from_params(params);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Trajectory traj;
  traj.seed = seed;
  traj.theta = prior.sample(rng);
  traj.arrivals.reserve(static_cast<std::size_t>(params.t_max));
  for (int k = 0; k < params.t_max; ++k) {
    ArrivalRecord r;
    r.truth = sample_category(rng, traj.theta);
    r.family = static_cast<int>(sample_index(rng, std::span<const double>(fam.p))) + 1;
    r.claimed = sample_category(rng, params.claim_matrix[code(r.truth)]);
    r.u_board = unit(rng);
    traj.arrivals.push_back(r);
  }
  return traj;
}

std::vector<Trajectory> generate_trajectories(std::size_t n, std::uint64_t master_seed,
                                              const ModelParams& params) {
  if (n < 1) throw DomainError("need at least one trajectory");
  std::vector<Trajectory> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(generate_trajectory(mix_seed(master_seed, i), params));
  return out;
}

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajectories) {
  for (const Trajectory& t : trajectories) {
    std::string line = "{\"seed\":" + std::to_string(t.seed) + ",\"theta\":[";
    for (std::size_t i = 0; i < kNumCategories; ++i) {
      if (i) line += ',';
      line += format_number(t.theta[i]);
    }
    line += "],\"arrivals\":[";
    for (std::size_t k = 0; k < t.arrivals.size(); ++k) {
      const ArrivalRecord& r = t.arrivals[k];
      if (k) line += ',';
      line += "{\"f\":" + std::to_string(r.family) + ",\"true\":\"" +
              std::string(category_name(r.truth)) + "\",\"claimed\":\"" +
              std::string(category_name(r.claimed)) + "\",\"u\":" + format_number(r.u_board) + "}";
    }
    line += "]}\n";
    out << line;
  }
}

void save_trajectories(const std::string& path, const std::vector<Trajectory>& trajectories) {
  std::ostringstream os;
  write_trajectories(os, trajectories);
  write_text_file(path, os.str());
}

namespace {

Category category_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw DomainError(std::string("trajectory record missing category field '") + key + "'");
  }
  auto v = parse_category(j[key].get<std::string>());
  if (!v) throw DomainError("unknown category in trajectory: " + j[key].get<std::string>());
  return *v;
}

}  // namespace

std::vector<Trajectory> read_trajectories(std::istream& in, const ModelParams& params) {
  std::vector<Trajectory> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw DomainError("trajectory line " + std::to_string(line_no) + " is not a JSON object");
    }
    Trajectory t;
    t.seed = j.at("seed").get<std::uint64_t>();
    const auto& theta = j.at("theta");
    if (!theta.is_array() || theta.size() != kNumCategories) {
      throw DomainError("trajectory theta must have 5 entries");
    }
    for (std::size_t i = 0; i < kNumCategories; ++i) t.theta[i] = theta[i].get<double>();
    const auto& arrivals = j.at("arrivals");
    if (!arrivals.is_array() || arrivals.size() != static_cast<std::size_t>(params.t_max)) {
      throw DomainError("trajectory line " + std::to_string(line_no) + " must hold exactly t_max arrivals");
    }
    t.arrivals.reserve(arrivals.size());
    for (const auto& a : arrivals) {
      ArrivalRecord r;
      r.family = a.at("f").get<int>();
      if (r.family < 1 || r.family > params.f_max) throw DomainError("family size out of range");
      r.truth = category_field(a, "true");
      r.claimed = category_field(a, "claimed");
      r.u_board = a.at("u").get<double>();
      if (!(r.u_board >= 0.0 && r.u_board < 1.0)) throw DomainError("u_board must lie in [0, 1)");
      t.arrivals.push_back(r);
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Trajectory> load_trajectories(const std::string& path, const ModelParams& params) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
  return read_trajectories(in, params);
}

// ---- episodes ----------------------------------------------------------------------------

StepOutcome apply_step(const ArrivalRecord& record, Action action, int capacity,
                       const ModelParams& params) {
  StepOutcome out;
  out.next_capacity = capacity;
  if (action == Action::kAccept) {
    out.reward = record.family * params.rewards[code(record.truth)] + params.epsilon;
    out.boarded = record.u_board < params.p_board;
    if (out.boarded) out.next_capacity = capacity - record.family;
  }
  return out;
}

EpisodeResult run_episode(const Policy& policy, const Trajectory& trajectory,
                          const ModelParams& params, const EpisodeOptions& options) {
  const ClaimModel claim(params.claim_matrix, population_prior(params));
  EpisodeContext ctx = policy.new_context(params, trajectory.seed);
  EpisodeResult result;
  int capacity = params.c_max;
  int limit = std::min<int>(params.t_max, static_cast<int>(trajectory.arrivals.size()));
  if (options.max_steps) limit = std::min(limit, *options.max_steps);
  result.cumulative.reserve(static_cast<std::size_t>(limit));
  if (options.keep_log) result.log.reserve(static_cast<std::size_t>(limit));

  for (int k = 0; k < limit && capacity > 0; ++k) {
    const ArrivalRecord& rec = trajectory.arrivals[static_cast<std::size_t>(k)];
    const int time = params.t_max - k;
    result.arrived[code(rec.truth)] += rec.family;

    const EvacState obs{capacity, time, rec.family, rec.claimed, false};
    const Action action = policy.decide(obs, ctx);
    const StepOutcome step = apply_step(rec, action, capacity, params);
    if (action == Action::kAccept) {
      result.accepted[code(rec.truth)] += rec.family;
      result.accepted_total += rec.family;
      if (step.boarded) result.boarded_total += rec.family;
    }
    result.reward += step.reward;
    result.cumulative.push_back(result.reward);
    if (options.keep_log) {
      result.log.push_back(
          {time, capacity, rec.family, rec.claimed, rec.truth, action, step.boarded, step.reward});
    }
    policy.observe(Arrival{rec.family, rec.claimed}, ctx, claim);
    capacity = step.next_capacity;
    result.steps = k + 1;
  }
  return result;
}

// ---- metrics ---------------------------------------------------------------------------

std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return {mean, sd / std::sqrt(static_cast<double>(xs.size()))};
}

MetricsTable evaluate(const std::vector<const Policy*>& policies,
                      const std::vector<Trajectory>& trajectories, const ModelParams& params,
                      const EvaluateOptions& options) {
  if (policies.empty() || trajectories.empty()) {
    throw DomainError("evaluate needs at least one policy and one trajectory");
  }
  const std::size_t n_traj = trajectories.size();
  const std::size_t n_jobs = policies.size() * n_traj;
  std::vector<EpisodeResult> results(n_jobs);
  const bool keep_log = options.episodes_out != nullptr;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < n_jobs; job = next++) {
      const Policy& policy = *policies[job / n_traj];
      EpisodeOptions eo;
      eo.keep_log = keep_log;
      results[job] = run_episode(policy, trajectories[job % n_traj], params, eo);
    }
  };
  const unsigned threads =
      std::max(1u, std::min<unsigned>(options.jobs == 0 ? std::thread::hardware_concurrency() : options.jobs,
                                      static_cast<unsigned>(n_jobs)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  // Reduce in (policy, trajectory) order so the output does not depend on scheduling.
  MetricsTable table;
  const auto t_max = static_cast<std::size_t>(params.t_max);
  for (std::size_t p = 0; p < policies.size(); ++p) {
    PolicyMetrics m;
    m.policy = std::string(policies[p]->name());
    m.episodes = n_traj;
    m.curve.assign(t_max, 0.0);
    std::vector<double> rewards, accepted;
    rewards.reserve(n_traj);
    accepted.reserve(n_traj);
    for (std::size_t i = 0; i < n_traj; ++i) {
      const EpisodeResult& r = results[p * n_traj + i];
      rewards.push_back(r.reward);
      accepted.push_back(static_cast<double>(r.accepted_total));
      for (std::size_t v = 0; v < kNumCategories; ++v) {
        m.accepted_by_category[v] += static_cast<double>(r.accepted[v]);
        m.arrived_by_category[v] += static_cast<double>(r.arrived[v]);
      }
      for (std::size_t k = 0; k < t_max; ++k) {
        const double c = r.cumulative.empty() ? 0.0
                         : k < r.cumulative.size() ? r.cumulative[k]
                                                    : r.cumulative.back();
        m.curve[k] += c;
      }
    }
    const double n = static_cast<double>(n_traj);
    for (std::size_t v = 0; v < kNumCategories; ++v) {
      m.accepted_by_category[v] /= n;
      m.arrived_by_category[v] /= n;
    }
    for (double& c : m.curve) c /= n;
    std::tie(m.reward_mean, m.reward_stderr) = mean_stderr(rewards);
    std::tie(m.accepted_mean, m.accepted_stderr) = mean_stderr(accepted);
    table.rows.push_back(std::move(m));
  }

  if (options.episodes_out) {
    options.episodes_out->assign(policies.size(), {});
    for (std::size_t p = 0; p < policies.size(); ++p) {
      auto& dst = (*options.episodes_out)[p];
      dst.reserve(n_traj);
      for (std::size_t i = 0; i < n_traj; ++i) dst.push_back(std::move(results[p * n_traj + i]));
    }
  }
  return table;
}

// ---- exports ------------------------------------------------------------------------------

std::string format_number(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void write_metrics_csv(std::ostream& out, const MetricsTable& table) {
  out << "policy,reward_mean,reward_stderr,accepted_mean,accepted_stderr";
  for (Category v : kAllCategories) {
    out << ',' << category_name(v) << "_accepted," << category_name(v) << "_arrived";
  }
  out << '\n';
  for (const PolicyMetrics& m : table.rows) {
    out << m.policy << ',' << format_number(m.reward_mean) << ',' << format_number(m.reward_stderr)
        << ',' << format_number(m.accepted_mean) << ',' << format_number(m.accepted_stderr);
    for (std::size_t v = 0; v < kNumCategories; ++v) {
      out << ',' << format_number(m.accepted_by_category[v]) << ','
          << format_number(m.arrived_by_category[v]);
    }
    out << '\n';
  }
}

void write_curves_csv(std::ostream& out, const MetricsTable& table, const ModelParams& params) {
  out << "policy,step,time,mean_cumulative_reward\n";
  for (const PolicyMetrics& m : table.rows) {
    for (std::size_t k = 0; k < m.curve.size(); ++k) {
      out << m.policy << ',' << (k + 1) << ',' << (params.t_max - static_cast<int>(k)) << ','
          << format_number(m.curve[k]) << '\n';
    }
  }
}

nlohmann::json grid_to_json(const PolicyGrid& grid, Level level) {
  nlohmann::json categories = nlohmann::json::array();
  for (Category v : kAllCategories) categories.push_back(category_name(v));
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t f = 0; f < grid.rows.size(); ++f) {
    nlohmann::json actions = nlohmann::json::array();
    for (Action a : grid.rows[f]) actions.push_back(action_name(a));
    rows.push_back({{"family", f + 1}, {"actions", actions}});
  }
  return {{"level", level_name(level)},
          {"capacity", grid.capacity},
          {"time", grid.time},
          {"categories", categories},
          {"rows", rows}};
}

nlohmann::json episode_to_json(const std::string& policy, const Trajectory& trajectory,
                               const EpisodeResult& result) {
  nlohmann::json steps = nlohmann::json::array();
  for (const StepRecord& s : result.log) {
    steps.push_back({{"t", s.time},
                     {"c", s.capacity},
                     {"f", s.family},
                     {"claimed", category_name(s.claimed)},
                     {"true", category_name(s.truth)},
                     {"action", action_name(s.action)},
                     {"boarded", s.boarded},
                     {"reward", s.reward}});
  }
  return {{"policy", policy},
          {"trajectory_seed", trajectory.seed},
          {"reward", result.reward},
          {"accepted_total", result.accepted_total},
          {"steps", steps}};
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace evac
