#include "evac/pomcp.hpp"

#include <cmath>
#include <limits>

namespace evac {

PlannerConfig PlannerConfig::from_params(const ModelParams& params, std::uint64_t seed) {
  PlannerConfig cfg;
  cfg.iterations = params.pomcp.iterations;
  cfg.max_depth = params.pomcp.max_depth;
  cfg.ucb_c = params.pomcp.exploration;
  cfg.seed = seed;
  return cfg;
}

nlohmann::json to_json(const PlanDiagnostics& d) {
  return {{"action", action_name(d.action)},
          {"q", {{"accept", d.q.accept}, {"reject", d.q.reject}}},
          {"n", {{"accept", d.n_accept}, {"reject", d.n_reject}}},
          {"belief_mean", d.belief_mean}};
}

namespace {

struct ActionEdge {
  int visits = 0;
  double mean = 0.0;
  /// (observation key, node index); key = (f-1)·5 + observed category.
  std::vector<std::pair<int, int>> children;
};

struct Node {
  int visits = 0;
  bool expanded = false;
  std::array<ActionEdge, 2> edges;  // indexed by Action
};

struct SimState {
  int capacity;
  int time;
  int family;
  Category truth;
  Category observed;
};

class Search {
 public:
  Search(Level level, const ValueTable& leaf, const ModelParams& params, const FamilySizePMF& fam,
         const PlannerConfig& cfg)
      : level_(level), leaf_(leaf), params_(params), fam_(fam), cfg_(cfg), rng_(cfg.seed) {
    nodes_.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
    nodes_.emplace_back();
    nodes_[0].expanded = true;
  }

  void run(const DirichletBelief& belief, const EvacState& obs) {
    for (int it = 0; it < cfg_.iterations; ++it) {
      theta_ = belief.sample(rng_);
      SimState s{obs.capacity, obs.time, obs.family, obs.category, obs.category};
      if (level_ == Level::kIII) {
        const CategoryVector post =
            posterior_true_given_claim(obs.category, PopulationPrior{theta_}, params_.claim_matrix);
        s.truth = sample_category(rng_, post);
      }
      simulate(0, s, 0);
    }
  }

  const Node& root() const { return nodes_[0]; }

 private:
  double leaf_value(const SimState& s) const {
    return leaf_.value(EvacState{s.capacity, s.time, s.family, s.observed, false});
  }

  Action select(const Node& node) const {
    // Untried actions first, ACCEPT before REJECT.
    for (Action a : {Action::kAccept, Action::kReject}) {
      if (node.edges[static_cast<std::size_t>(a)].visits == 0) return a;
    }
    const double log_n = std::log(static_cast<double>(node.visits));
    double best = -std::numeric_limits<double>::infinity();
    Action choice = Action::kAccept;
    for (Action a : {Action::kAccept, Action::kReject}) {
      const ActionEdge& e = node.edges[static_cast<std::size_t>(a)];
      const double score = e.mean + cfg_.ucb_c * std::sqrt(log_n / e.visits);
      if (score > best) {
        best = score;
        choice = a;
      }
    }
    return choice;
  }

  int child_for(int node_index, Action a, int key) {
    auto& children = nodes_[static_cast<std::size_t>(node_index)].edges[static_cast<std::size_t>(a)].children;
    for (const auto& [k, idx] : children) {
      if (k == key) return idx;
    }
    const int idx = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    // `children` may dangle after emplace_back; look it up again.
    nodes_[static_cast<std::size_t>(node_index)].edges[static_cast<std::size_t>(a)].children.emplace_back(key, idx);
    return idx;
  }

  double simulate(int node_index, const SimState& s, int depth) {
    if (s.capacity <= 0 || s.time <= 0) return 0.0;
    if (depth >= cfg_.max_depth) return leaf_value(s);
    {
      Node& node = nodes_[static_cast<std::size_t>(node_index)];
      if (!node.expanded) {
        node.expanded = true;
        return leaf_value(s);
      }
    }
    const Action a = select(nodes_[static_cast<std::size_t>(node_index)]);

    double ret = 0.0;
    int capacity = s.capacity;
    if (a == Action::kAccept) {
      ret = s.family * params_.rewards[code(s.truth)] + params_.epsilon;
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      if (unit(rng_) < params_.p_board) capacity -= s.family;
    }
    const int time = s.time - 1;
    if (capacity > 0 && time > 0) {
      SimState next{capacity, time, 1, Category::kAmcit, Category::kAmcit};
      next.family = static_cast<int>(sample_index(rng_, std::span<const double>(fam_.p))) + 1;
      next.truth = sample_category(rng_, theta_);
      next.observed = level_ == Level::kIII
                          ? sample_category(rng_, params_.claim_matrix[code(next.truth)])
                          : next.truth;
      const int key = (next.family - 1) * static_cast<int>(kNumCategories) +
                      static_cast<int>(code(next.observed));
      const int child = child_for(node_index, a, key);
      ret += simulate(child, next, depth + 1);
    }

    Node& node = nodes_[static_cast<std::size_t>(node_index)];
    ActionEdge& edge = node.edges[static_cast<std::size_t>(a)];
    node.visits += 1;
    edge.visits += 1;
    edge.mean += (ret - edge.mean) / edge.visits;
    return ret;
  }

  Level level_;
  const ValueTable& leaf_;
  const ModelParams& params_;
  const FamilySizePMF& fam_;
  const PlannerConfig& cfg_;
  Rng rng_;
  CategoryVector theta_{};
  std::vector<Node> nodes_;
};

}  // namespace

PomcpPlanner::PomcpPlanner(Level level, const ValueTable& leaf_values, const ModelParams& params)
    : level_(level), leaf_values_(&leaf_values), params_(params), family_(family_size_pmf(params)) {
  if (level != Level::kIIa && level != Level::kIII) {
    throw DomainError("POMCP planning is defined for Level IIa and Level III only");
  }
  const Level expected = level == Level::kIIa ? Level::kI : Level::kIIb;
  if (leaf_values.header().level != expected) {
    throw DomainError("Level " + std::string(level_name(level)) + " planning needs the Level " +
                      std::string(level_name(expected)) + " value table");
  }
  require_matching_params(leaf_values.header(), params);
}

PlanDiagnostics PomcpPlanner::plan(const DirichletBelief& belief, const EvacState& obs_state,
                                   const PlannerConfig& cfg) const {
  if (obs_state.terminal || obs_state.pre_terminal()) {
    throw DomainError("plan requires a live (nonterminal) state");
  }
  if (!leaf_values_->space().contains(obs_state)) throw DomainError("state out of range");
  if (cfg.iterations < 1 || cfg.max_depth < 1) {
    throw DomainError("planner needs iterations >= 1 and max_depth >= 1");
  }
  Search search(level_, *leaf_values_, params_, family_, cfg);
  search.run(belief, obs_state);

  const Node& root = search.root();
  const ActionEdge& acc = root.edges[static_cast<std::size_t>(Action::kAccept)];
  const ActionEdge& rej = root.edges[static_cast<std::size_t>(Action::kReject)];
  PlanDiagnostics d;
  d.q = {acc.mean, rej.mean};
  d.n_accept = acc.visits;
  d.n_reject = rej.visits;
  d.belief_mean = belief.mean();
  if (rej.visits == 0) {
    d.action = Action::kAccept;
  } else if (acc.visits == 0) {
    d.action = Action::kReject;
  } else {
    d.action = acc.mean >= rej.mean ? Action::kAccept : Action::kReject;
  }
  return d;
}

DirichletBelief step_belief(Level level, const DirichletBelief& belief, const Arrival& observed,
                            const ClaimModel& claim, const PopulationPrior& pop) {
  switch (level) {
    case Level::kIIa:
      return dirichlet_update(belief, observed.category);
    case Level::kIII:
      return dirichlet_update(belief,
                              posterior_true_given_claim(observed.category, pop, claim.forward()));
    default:
      throw DomainError("belief updates apply to Level IIa and Level III only");
  }
}

}  // namespace evac
