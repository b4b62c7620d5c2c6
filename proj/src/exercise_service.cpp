#include "evac/exercise_service.hpp"

#include <random>

namespace evac {

using nlohmann::json;

namespace {

// Keys a session may override; everything else shapes the solved MDP.
constexpr std::string_view kOverridable[] = {"pomcp", "threshold_t", "threshold_inclusive",
                                              "dirichlet_scale"};

json category_vector_json(const CategoryVector& v) { return json(v); }

json people_by_category(const std::array<long, kNumCategories>& counts) {
  json j = json::object();
  for (Category v : kAllCategories) j[std::string(category_name(v))] = counts[code(v)];
  return j;
}

PolicyKind default_advisor(Level level) {
  switch (level) {
    case Level::kI: return PolicyKind::kLevelI;
    case Level::kIIa: return PolicyKind::kLevelIIa;
    case Level::kIIb: return PolicyKind::kLevelIIb;
    case Level::kIII: return PolicyKind::kLevelIII;
  }
  return PolicyKind::kLevelI;
}

}  // namespace

struct ExerciseService::Session {
  Session(std::string id_, ModelParams params_, Level level_, Policy advisor_, Trajectory traj,
          std::uint64_t seed_)
      : id(std::move(id_)),
        params(std::move(params_)),
        claim(params.claim_matrix, population_prior(params)),
        level(level_),
        advisor(advisor_),
        trajectory(std::move(traj)),
        seed(seed_),
        capacity(params.c_max),
        ctx(advisor.new_context(params, trajectory.seed)) {}

  struct LoggedStep {
    StepRecord step;
    Action advisor_action;
  };

  std::string id;
  ModelParams params;
  ClaimModel claim;
  Level level;
  Policy advisor;
  Trajectory trajectory;
  std::uint64_t seed;
  int cursor = 0;
  int capacity;
  EpisodeContext ctx;
  std::optional<Decision> cached;  // advisor decision at the current cursor
  std::vector<LoggedStep> log;
  double reward = 0.0;
  std::array<long, kNumCategories> accepted{};
  std::array<long, kNumCategories> arrived{};
  long accepted_total = 0;
  bool finished = false;
  Clock::time_point last_access = Clock::now();
  std::mutex mu;

  int time() const { return params.t_max - cursor; }
  const ArrivalRecord& current() const { return trajectory.arrivals[static_cast<std::size_t>(cursor)]; }
  EvacState observed_state() const {
    return EvacState{capacity, time(), current().family, current().claimed, false};
  }

  const Decision& advisor_decision() {
    if (!cached) cached = advisor.decide_with_diagnostics(observed_state(), ctx);
    return *cached;
  }

  json view() const {
    json v = {{"session_id", id},
              {"status", finished ? "finished" : "active"},
              {"level", level_name(level)},
              {"advisor", advisor.name()},
              {"seed", seed},
              {"cursor", cursor},
              {"c", capacity},
              {"t", time()},
              {"t_max", params.t_max},
              {"c_max", params.c_max}};
    if (!finished) {
      v["arrival"] = {{"f", current().family}, {"claimed", category_name(current().claimed)}};
    }
    if (ctx.belief) v["belief_mean"] = category_vector_json(ctx.belief->mean());
    return v;
  }
};

ExerciseService::ExerciseService(std::shared_ptr<const TableStore> tables, ServiceOptions options)
    : tables_(std::move(tables)), options_(options), id_rng_(std::random_device{}()) {}

ExerciseService::~ExerciseService() = default;

std::string ExerciseService::new_id() {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id;
  for (int word = 0; word < 2; ++word) {
    std::uint64_t x = id_rng_();
    for (int i = 0; i < 16; ++i, x >>= 4) id.push_back(kHex[x & 0xf]);
  }
  return id;
}

std::shared_ptr<ExerciseService::Session> ExerciseService::find(const std::string& id) {
  const auto now = Clock::now();
  purge_expired(now);
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ApiError(404, "not_found", "unknown session " + id);
  it->second->last_access = now;
  return it->second;
}

std::size_t ExerciseService::purge_expired(Clock::time_point now) {
  std::lock_guard lock(mu_);
  std::size_t dropped = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now - it->second->last_access > options_.idle_ttl) {
      it = sessions_.erase(it);
      ++dropped;
    } else {
      ++it;
    }
  }
  return dropped;
}

std::size_t ExerciseService::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

json ExerciseService::create_session(const json& request) {
  purge_expired(Clock::now());
  if (!request.is_object()) throw ApiError(400, "bad_request", "request body must be a JSON object");
  for (const auto& item : request.items()) {
    const std::string& k = item.key();
    if (k != "level" && k != "advisor" && k != "seed" && k != "config") {
      throw ApiError(400, "bad_request", "unknown field '" + k + "'");
    }
  }

  Level level = Level::kI;
  if (request.contains("level")) {
    if (!request["level"].is_string()) throw ApiError(400, "bad_request", "level must be a string");
    auto parsed = parse_level(request["level"].get<std::string>());
    if (!parsed) throw ApiError(400, "unknown_level", "unknown level " + request["level"].dump());
    level = *parsed;
  }
  PolicyKind kind = default_advisor(level);
  if (request.contains("advisor")) {
    if (!request["advisor"].is_string()) throw ApiError(400, "bad_request", "advisor must be a string");
    auto parsed = parse_policy_kind(request["advisor"].get<std::string>());
    if (!parsed) throw ApiError(400, "unknown_kind", "unknown advisor " + request["advisor"].dump());
    kind = *parsed;
  }
  std::uint64_t seed = 0;
  if (request.contains("seed")) {
    const json& js = request["seed"];
    if (!js.is_number_integer() || (!js.is_number_unsigned() && js.get<long long>() < 0)) {
      throw ApiError(400, "bad_request", "seed must be a nonnegative integer");
    }
    seed = request["seed"].get<std::uint64_t>();
  } else {
    std::lock_guard lock(mu_);
    seed = id_rng_();
  }

  ModelParams params = tables_->params();
  if (request.contains("config")) {
    const json& overrides = request["config"];
    if (!overrides.is_object()) throw ApiError(400, "bad_request", "config must be an object");
    json merged = params_to_json(params);
    for (const auto& item : overrides.items()) {
      bool allowed = false;
      for (std::string_view k : kOverridable) allowed = allowed || item.key() == k;
      if (!allowed) {
        throw ApiError(400, "bad_config",
                       "config override '" + item.key() + "' would change the solved model");
      }
      merged[item.key()] = item.value();
    }
    try {
      params = params_from_json(merged);
    } catch (const DomainError& e) {
      throw ApiError(400, "bad_config", e.what());
    }
  }

  std::optional<Policy> advisor;
  try {
    advisor.emplace(kind, tables_->resources(), PolicySettings::from_params(params));
  } catch (const DomainError& e) {
    throw ApiError(400, "advisor_unavailable", e.what());
  }

  // Trajectory 0 of the `trajectories --seed <seed>` set.
  Trajectory traj = generate_trajectory(mix_seed(seed, 0), params);
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = new_id();
  }
  auto session = std::make_shared<Session>(id, params, level, *advisor, std::move(traj), seed);
  json view = session->view();
  {
    std::lock_guard lock(mu_);
    sessions_.emplace(id, std::move(session));
  }
  return {{"session_id", id}, {"view", view}};
}

json ExerciseService::get_session(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return s->view();
}

json ExerciseService::get_recommendation(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  if (s->finished) throw ApiError(409, "finished", "session is finished");

  const EvacState obs = s->observed_state();
  const Decision& d = s->advisor_decision();
  json out = {{"cursor", s->cursor}, {"action", action_name(d.action)}};

  std::optional<QValues> q;
  if (d.diagnostics) {
    q = d.diagnostics->q;
    out["n"] = {{"accept", d.diagnostics->n_accept}, {"reject", d.diagnostics->n_reject}};
  } else {
    const Solution* sol = s->advisor.kind() == PolicyKind::kLevelIIb ? tables_->level_iib()
                                                                      : tables_->level_i();
    if (sol != nullptr) {
      try {
        q = sol->values.q_values(obs);
      } catch (const DomainError&) {
        // ACCEPT undefined for this claim (zero marginal); leave q null.
      }
    }
  }
  out["q_accept"] = q ? json(q->accept) : json(nullptr);
  out["q_reject"] = q ? json(q->reject) : json(nullptr);
  if (s->claim.has_posterior(obs.category)) {
    out["posterior_true"] = category_vector_json(s->claim.posterior(obs.category));
  } else {
    out["posterior_true"] = nullptr;
  }
  if (s->ctx.belief) out["belief_mean"] = category_vector_json(s->ctx.belief->mean());
  return out;
}

json ExerciseService::post_decision(const std::string& id, const json& body) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  if (s->finished) throw ApiError(409, "finished", "session is finished");
  if (!body.is_object() || !body.contains("action") || !body["action"].is_string()) {
    throw ApiError(400, "bad_action", "body must be {\"action\": \"ACCEPT\"|\"REJECT\"}");
  }
  const auto action = parse_action(body["action"].get<std::string>());
  if (!action) throw ApiError(400, "bad_action", "action must be ACCEPT or REJECT");
  if (body.contains("cursor")) {
    if (!body["cursor"].is_number_integer() || body["cursor"].get<long>() != s->cursor) {
      throw ApiError(409, "stale_cursor",
                     "decision is for cursor " + body["cursor"].dump() + ", session is at " +
                         std::to_string(s->cursor));
    }
  }

  // The advisor decides at every cursor so its random stream and belief stay
  // in lockstep with a plain replay of the same trajectory.
  const Action advised = s->advisor_decision().action;
  const ArrivalRecord& rec = s->current();
  const StepOutcome step = apply_step(rec, *action, s->capacity, s->params);
  s->arrived[code(rec.truth)] += rec.family;
  if (*action == Action::kAccept) {
    s->accepted[code(rec.truth)] += rec.family;
    s->accepted_total += rec.family;
  }
  s->reward += step.reward;
  s->log.push_back({{s->time(), s->capacity, rec.family, rec.claimed, rec.truth, *action,
                     step.boarded, step.reward},
                    advised});
  s->advisor.observe(Arrival{rec.family, rec.claimed}, s->ctx, s->claim);
  s->capacity = step.next_capacity;
  s->cursor += 1;
  s->cached.reset();
  if (s->capacity <= 0 || s->cursor >= s->params.t_max) s->finished = true;

  json out = {{"outcome", {{"boarded", step.boarded}, {"reward", step.reward}}}};
  out["view"] = s->view();
  if (s->finished) out["summary"] = summary_of(*s);
  return out;
}

json ExerciseService::get_summary(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return summary_of(*s);
}

json ExerciseService::summary_of(Session& session) {
  Session* s = &session;
  EpisodeOptions eo;
  eo.keep_log = true;
  if (!s->finished) eo.max_steps = s->cursor;
  const EpisodeResult replay = run_episode(s->advisor, s->trajectory, s->params, eo);

  json steps = json::array();
  for (std::size_t i = 0; i < s->log.size(); ++i) {
    const auto& [st, advised] = s->log[i];
    json row = {{"t", st.time},
                {"c", st.capacity},
                {"f", st.family},
                {"claimed", category_name(st.claimed)},
                {"true", category_name(st.truth)},
                {"human_action", action_name(st.action)},
                {"advisor_recommendation", action_name(advised)},
                {"boarded", st.boarded},
                {"reward", st.reward}};
    if (i < replay.log.size()) {
      const StepRecord& r = replay.log[i];
      row["replay"] = {{"c", r.capacity}, {"action", action_name(r.action)},
                       {"boarded", r.boarded}, {"reward", r.reward}};
    }
    steps.push_back(std::move(row));
  }
  json replay_steps = json::array();
  for (const StepRecord& r : replay.log) {
    replay_steps.push_back({{"t", r.time}, {"c", r.capacity}, {"f", r.family},
                            {"claimed", category_name(r.claimed)}, {"true", category_name(r.truth)},
                            {"action", action_name(r.action)}, {"boarded", r.boarded},
                            {"reward", r.reward}});
  }

  return {{"session_id", s->id},
          {"status", s->finished ? "finished" : "active"},
          {"partial", !s->finished},
          {"seed", s->seed},
          {"advisor", s->advisor.name()},
          {"human",
           {{"reward", s->reward},
            {"accepted_total", s->accepted_total},
            {"accepted", people_by_category(s->accepted)},
            {"arrived", people_by_category(s->arrived)},
            {"steps", s->log.size()}}},
          {"advisor_replay",
           {{"reward", replay.reward},
            {"accepted_total", replay.accepted_total},
            {"accepted", people_by_category(replay.accepted)},
            {"arrived", people_by_category(replay.arrived)},
            {"steps", replay.steps},
            {"log", replay_steps}}},
          {"comparison", steps}};
}

void ExerciseService::delete_session(const std::string& id) {
  std::lock_guard lock(mu_);
  if (sessions_.erase(id) == 0) throw ApiError(404, "not_found", "unknown session " + id);
}

}  // namespace evac
