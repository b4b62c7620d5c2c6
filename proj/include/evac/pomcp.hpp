#pragma once

// Online POMCP for the two hidden-population levels. The population mix θ
// is the hidden parameter (sampled once per simulation from the Dirichlet
// belief); Level III additionally hides each arrival's true category behind
// its claim. Leaves are scored with the exact MDP value table rather than a
// random rollout.

#include <array>
#include <cstdint>

#include "evac/dp_solver.hpp"
#include "evac/domain.hpp"

namespace evac {

struct PlannerConfig {
  int iterations = 500;
  int max_depth = 120;
  double ucb_c = 100.0;
  std::uint64_t seed = 0;

  static PlannerConfig from_params(const ModelParams& params, std::uint64_t seed);
};

struct PlanDiagnostics {
  Action action = Action::kReject;
  QValues q;
  int n_accept = 0;
  int n_reject = 0;
  CategoryVector belief_mean{};
};

nlohmann::json to_json(const PlanDiagnostics& d);

class PomcpPlanner {
 public:
  /// `leaf_values` must be the Level I table for IIa and the Level IIb table
  /// for III, solved under `params`. The table must outlive the planner.
  PomcpPlanner(Level level, const ValueTable& leaf_values, const ModelParams& params);

  Level level() const { return level_; }

  /// Runs cfg.iterations simulations from the observed state (its category
  /// is the claimed one) and returns the root action with the best mean.
  PlanDiagnostics plan(const DirichletBelief& belief, const EvacState& obs_state,
                       const PlannerConfig& cfg) const;

 private:
  Level level_;
  const ValueTable* leaf_values_;
  ModelParams params_;
  FamilySizePMF family_;
};

/// Level IIa counts the observed category; Level III adds the posterior over
/// true categories given the claim as soft evidence.
DirichletBelief step_belief(Level level, const DirichletBelief& belief, const Arrival& observed,
                            const ClaimModel& claim, const PopulationPrior& pop);

}  // namespace evac
