#include "evac/policies.hpp"

#include <algorithm>
#include <cctype>

namespace evac {

const std::array<PolicyKind, kNumPolicyKinds> kAllPolicyKinds = {
    PolicyKind::kLevelI,           PolicyKind::kLevelIIa,
    PolicyKind::kLevelIIb,         PolicyKind::kLevelIII,
    PolicyKind::kAfterThresholdAmcits, PolicyKind::kBeforeThresholdAmcits,
    PolicyKind::kAmcits,           PolicyKind::kSivAmcits,
    PolicyKind::kSivAmcitsP1P2,    PolicyKind::kNonIsisK,
    PolicyKind::kAcceptAll,        PolicyKind::kRandom,
};

namespace {

// Stream ids for per-episode seeds derived from the trajectory seed.
constexpr std::uint64_t kRandomStream = 0x52414e44;   // "RAND"
constexpr std::uint64_t kPlannerStream = 0x504c414e;  // "PLAN"

Action accept_if(bool b) { return b ? Action::kAccept : Action::kReject; }

}  // namespace

std::string_view policy_kind_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kLevelI: return "LEVEL_I";
    case PolicyKind::kLevelIIa: return "LEVEL_IIA";
    case PolicyKind::kLevelIIb: return "LEVEL_IIB";
    case PolicyKind::kLevelIII: return "LEVEL_III";
    case PolicyKind::kAfterThresholdAmcits: return "AFTER_THRESHOLD_AMCITS";
    case PolicyKind::kBeforeThresholdAmcits: return "BEFORE_THRESHOLD_AMCITS";
    case PolicyKind::kAmcits: return "AMCITS";
    case PolicyKind::kSivAmcits: return "SIV_AMCITS";
    case PolicyKind::kSivAmcitsP1P2: return "SIV_AMCITS_P1P2";
    case PolicyKind::kNonIsisK: return "NON_ISISK";
    case PolicyKind::kAcceptAll: return "ACCEPT_ALL";
    case PolicyKind::kRandom: return "RANDOM";
  }
  return "?";
}

std::optional<PolicyKind> parse_policy_kind(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
  for (PolicyKind k : kAllPolicyKinds) {
    if (policy_kind_name(k) == upper) return k;
  }
  return std::nullopt;
}

bool is_planner_kind(PolicyKind kind) {
  return kind == PolicyKind::kLevelIIa || kind == PolicyKind::kLevelIII;
}

std::optional<Level> belief_level(PolicyKind kind) {
  if (kind == PolicyKind::kLevelIIa) return Level::kIIa;
  if (kind == PolicyKind::kLevelIII) return Level::kIII;
  return std::nullopt;
}

PolicySettings PolicySettings::from_params(const ModelParams& params) {
  PolicySettings s;
  s.threshold_t = params.threshold_t;
  s.threshold_inclusive = params.threshold_inclusive;
  s.planner = params.pomcp;
  return s;
}

Policy::Policy(PolicyKind kind, PolicyResources resources, PolicySettings settings)
    : kind_(kind), resources_(resources), settings_(settings) {
  auto require = [&](const void* p, const char* what) {
    if (p == nullptr) {
      throw DomainError(std::string(policy_kind_name(kind)) + " requires " + what);
    }
  };
  switch (kind) {
    case PolicyKind::kLevelI:
    case PolicyKind::kAfterThresholdAmcits:
    case PolicyKind::kBeforeThresholdAmcits:
      require(resources_.level_i, "the Level I policy table");
      break;
    case PolicyKind::kLevelIIb:
      require(resources_.level_iib, "the Level IIb policy table");
      break;
    case PolicyKind::kLevelIIa:
      require(resources_.planner_iia, "a Level IIa planner");
      break;
    case PolicyKind::kLevelIII:
      require(resources_.planner_iii, "a Level III planner");
      break;
    default:
      break;
  }
}

EpisodeContext Policy::new_context(const ModelParams& params, std::uint64_t episode_seed) const {
  EpisodeContext ctx;
  if (belief_level(kind_)) ctx.belief = DirichletBelief::from_params(params);
  ctx.random_stream.seed(mix_seed(episode_seed, kRandomStream));
  ctx.planner_seed = mix_seed(episode_seed, kPlannerStream);
  return ctx;
}

Decision Policy::decide_with_diagnostics(const EvacState& obs, EpisodeContext& ctx) const {
  if (obs.terminal) throw DomainError("decide called on the terminal state");
  const Category claimed = obs.category;
  switch (kind_) {
    case PolicyKind::kAmcits:
      return {accept_if(claimed == Category::kAmcit), std::nullopt};
    case PolicyKind::kSivAmcits:
      return {accept_if(claimed == Category::kAmcit || claimed == Category::kSiv), std::nullopt};
    case PolicyKind::kSivAmcitsP1P2:
      return {accept_if(claimed == Category::kAmcit || claimed == Category::kSiv ||
                        claimed == Category::kP1P2),
              std::nullopt};
    case PolicyKind::kNonIsisK:
      return {accept_if(claimed != Category::kIsisK), std::nullopt};
    case PolicyKind::kAcceptAll:
      return {Action::kAccept, std::nullopt};
    case PolicyKind::kRandom: {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      return {accept_if(unit(ctx.random_stream) < 0.5), std::nullopt};
    }
    case PolicyKind::kAfterThresholdAmcits:
      if (late_phase(obs.time)) return {accept_if(claimed == Category::kAmcit), std::nullopt};
      return {resources_.level_i->lookup(obs), std::nullopt};
    case PolicyKind::kBeforeThresholdAmcits:
      if (late_phase(obs.time)) return {resources_.level_i->lookup(obs), std::nullopt};
      return {accept_if(claimed == Category::kAmcit), std::nullopt};
    case PolicyKind::kLevelI:
      return {resources_.level_i->lookup(obs), std::nullopt};
    case PolicyKind::kLevelIIb:
      return {resources_.level_iib->lookup(obs), std::nullopt};
    case PolicyKind::kLevelIIa:
    case PolicyKind::kLevelIII: {
      if (obs.pre_terminal()) return {Action::kReject, std::nullopt};
      if (!ctx.belief) throw DomainError("planner policy needs an episode belief");
      const PomcpPlanner* planner =
          kind_ == PolicyKind::kLevelIIa ? resources_.planner_iia : resources_.planner_iii;
      PlannerConfig cfg;
      cfg.iterations = settings_.planner.iterations;
      cfg.max_depth = settings_.planner.max_depth;
      cfg.ucb_c = settings_.planner.exploration;
      cfg.seed = mix_seed(ctx.planner_seed, static_cast<std::uint64_t>(obs.time));
      PlanDiagnostics d = planner->plan(*ctx.belief, obs, cfg);
      return {d.action, d};
    }
  }
  throw DomainError("unknown policy kind");
}

void Policy::observe(const Arrival& observed, EpisodeContext& ctx, const ClaimModel& claim) const {
  const auto level = belief_level(kind_);
  if (!level || !ctx.belief) return;
  ctx.belief = step_belief(*level, *ctx.belief, observed, claim, claim.prior());
}

Action decide(const Policy& policy, const EvacState& obs_state, EpisodeContext& ctx) {
  return policy.decide(obs_state, ctx);
}

}  // namespace evac
