#pragma once

// Uniform decision interface over the four optimized levels and the eight
// heuristic baselines. Every policy sees only the observed state: its
// category field is the *claimed* category.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evac/dp_solver.hpp"
#include "evac/pomcp.hpp"

namespace evac {

enum class PolicyKind {
  kLevelI,
  kLevelIIa,
  kLevelIIb,
  kLevelIII,
  kAfterThresholdAmcits,
  kBeforeThresholdAmcits,
  kAmcits,
  kSivAmcits,
  kSivAmcitsP1P2,
  kNonIsisK,
  kAcceptAll,
  kRandom,
};

inline constexpr std::size_t kNumPolicyKinds = 12;
extern const std::array<PolicyKind, kNumPolicyKinds> kAllPolicyKinds;

/// Canonical upper-case names, e.g. "LEVEL_IIA", "SIV_AMCITS_P1P2".
std::string_view policy_kind_name(PolicyKind kind);
/// Case-insensitive.
std::optional<PolicyKind> parse_policy_kind(std::string_view name);

bool is_planner_kind(PolicyKind kind);
/// Level whose belief the policy maintains (IIa / III), if any.
std::optional<Level> belief_level(PolicyKind kind);

/// Tables and planners a policy may draw on; not owned.
struct PolicyResources {
  const PolicyTable* level_i = nullptr;
  const PolicyTable* level_iib = nullptr;
  const PomcpPlanner* planner_iia = nullptr;
  const PomcpPlanner* planner_iii = nullptr;
};

struct PolicySettings {
  int threshold_t = 200;
  /// Late phase starts at t <= threshold_t when true, t < threshold_t otherwise.
  bool threshold_inclusive = true;
  PomcpSettings planner;

  static PolicySettings from_params(const ModelParams& params);
};

/// Per-episode mutable state: the population belief and the dedicated
/// stream the RANDOM policy draws from.
struct EpisodeContext {
  std::optional<DirichletBelief> belief;
  Rng random_stream{0};
  std::uint64_t planner_seed = 0;
};

struct Decision {
  Action action = Action::kReject;
  std::optional<PlanDiagnostics> diagnostics;
};

class Policy {
 public:
  /// Throws DomainError when a required table or planner is missing.
  Policy(PolicyKind kind, PolicyResources resources, PolicySettings settings);

  PolicyKind kind() const { return kind_; }
  std::string_view name() const { return policy_kind_name(kind_); }

  /// Fresh context for one episode whose trajectory seed is `episode_seed`.
  EpisodeContext new_context(const ModelParams& params, std::uint64_t episode_seed) const;

  Decision decide_with_diagnostics(const EvacState& obs_state, EpisodeContext& ctx) const;
  Action decide(const EvacState& obs_state, EpisodeContext& ctx) const {
    return decide_with_diagnostics(obs_state, ctx).action;
  }

  /// Folds the just-observed arrival into the episode belief (no-op for
  /// policies without one).
  void observe(const Arrival& observed, EpisodeContext& ctx, const ClaimModel& claim) const;

  bool late_phase(int time) const {
    return settings_.threshold_inclusive ? time <= settings_.threshold_t
                                         : time < settings_.threshold_t;
  }

 private:
  PolicyKind kind_;
  PolicyResources resources_;
  PolicySettings settings_;
};

Action decide(const Policy& policy, const EvacState& obs_state, EpisodeContext& ctx);

}  // namespace evac
