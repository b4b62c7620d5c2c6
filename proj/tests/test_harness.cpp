#include <doctest.h>

#include <sstream>

#include "evac/harness.hpp"
#include "fixtures.hpp"

using namespace evac;
using evac::testing::default_store;

namespace {

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

const std::vector<Trajectory>& default_trajectories() {
  static const auto t = generate_trajectories(40, 2024, ModelParams{});
  return t;
}

}  // namespace

TEST_CASE("trajectories are well formed and reproducible") {
  const ModelParams params;
  const Trajectory a = generate_trajectory(17, params);
  const Trajectory b = generate_trajectory(17, params);
  CHECK(a == b);
  CHECK(a.seed == 17u);
  CHECK(a.arrivals.size() == 1200u);
  double total = 0.0;
  for (double x : a.theta) {
    CHECK(x >= 0.0);
    total += x;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  const ClaimModel claim(params.claim_matrix, population_prior(params));
  for (const ArrivalRecord& r : a.arrivals) {
    CHECK(r.family >= 1);
    CHECK(r.family <= 13);
    CHECK(r.u_board >= 0.0);
    CHECK(r.u_board < 1.0);
    CHECK(claim.forward(r.truth, r.claimed) > 0.0);
  }
  CHECK_FALSE(generate_trajectory(18, params) == a);

  const auto set = generate_trajectories(3, 5, params);
  CHECK(set[1].seed == mix_seed(5, 1));
  CHECK(set[1] == generate_trajectory(mix_seed(5, 1), params));
}

TEST_CASE("mean people per trajectory") {
  const auto& ts = default_trajectories();
  double people = 0.0;
  for (const Trajectory& t : ts) {
    for (const ArrivalRecord& r : t.arrivals) people += r.family;
  }
  people /= static_cast<double>(ts.size());
  // 1200 · E[f] = 5546.1; per-trajectory sd is about 4.3 · sqrt(1200) ≈ 150
  CHECK(people == doctest::Approx(1200 * 4.621780626662683).epsilon(0.02));
}

TEST_CASE("concentrated dirichlet reproduces the prior") {
  ModelParams params;
  params.dirichlet_scale = 1e-6;  // α scaled ×10⁶
  const auto ts = generate_trajectories(20, 3, params);
  CategoryVector freq{};
  double n = 0.0;
  for (const Trajectory& t : ts) {
    for (const ArrivalRecord& r : t.arrivals) {
      freq[code(r.truth)] += 1.0;
      n += 1.0;
    }
  }
  const PopulationPrior prior = population_prior(params);
  for (std::size_t v = 0; v < kNumCategories; ++v) {
    const double sd = std::sqrt(prior.p[v] * (1 - prior.p[v]) / n);
    CHECK(std::abs(freq[v] / n - prior.p[v]) < 5 * sd + 1e-12);
  }
}

TEST_CASE("trajectory files round trip") {
  const ModelParams params;
  const auto ts = generate_trajectories(3, 8, params);
  std::ostringstream out;
  write_trajectories(out, ts);
  const std::string text = out.str();
  CHECK(lines_of(text).size() == 3u);
  const auto first = nlohmann::json::parse(lines_of(text)[0]);
  CHECK(first.contains("seed"));
  CHECK(first["theta"].size() == 5u);
  CHECK(first["arrivals"][0].contains("true"));
  CHECK(first["arrivals"][0].contains("claimed"));
  CHECK(first["arrivals"][0].contains("u"));
  CHECK(first["arrivals"][0].contains("f"));

  std::istringstream in(text);
  CHECK(read_trajectories(in, params) == ts);

  std::ostringstream again;
  write_trajectories(again, read_trajectories(*std::make_unique<std::istringstream>(text), params));
  CHECK(again.str() == text);

  ModelParams shorter = params;
  shorter.t_max = 100;
  std::istringstream in2(text);
  CHECK_THROWS_AS(read_trajectories(in2, shorter), DomainError);
  std::istringstream bad("{\"seed\": 1}\n");
  CHECK_THROWS(read_trajectories(bad, params));
}

TEST_CASE("episode bookkeeping") {
  const ModelParams params;
  for (PolicyKind kind : {PolicyKind::kLevelI, PolicyKind::kAcceptAll, PolicyKind::kAmcits,
                          PolicyKind::kRandom, PolicyKind::kBeforeThresholdAmcits}) {
    CAPTURE(policy_kind_name(kind));
    const Policy policy = default_store()->make_policy(kind);
    for (const Trajectory& t : default_trajectories()) {
      const EpisodeResult r = run_episode(policy, t, params);
      double sum = 0.0;
      long boarded = 0;
      for (const StepRecord& s : r.log) {
        sum += s.reward;
        if (s.boarded) boarded += s.family;
      }
      CHECK(std::abs(sum - r.reward) < 1e-9 * std::max(1.0, std::abs(r.reward)));
      CHECK(boarded == r.boarded_total);
      CHECK(r.boarded_total <= params.c_max + params.f_max - 1);
      CHECK(r.steps == static_cast<int>(r.log.size()));
      CHECK(r.cumulative.size() == r.log.size());
      for (std::size_t v = 0; v < kNumCategories; ++v) CHECK(r.accepted[v] <= r.arrived[v]);
    }
  }
}

TEST_CASE("step semantics") {
  const ModelParams params;
  const ArrivalRecord miss{3, Category::kSiv, Category::kAmcit, 0.95};
  const StepOutcome acc = apply_step(miss, Action::kAccept, 50, params);
  CHECK_FALSE(acc.boarded);
  CHECK(acc.next_capacity == 50);
  CHECK(acc.reward == doctest::Approx(75.0001));  // true category pays
  const StepOutcome rej = apply_step(miss, Action::kReject, 50, params);
  CHECK(rej.reward == 0.0);
  CHECK(rej.next_capacity == 50);
  const ArrivalRecord hit{3, Category::kSiv, Category::kAmcit, 0.1};
  CHECK(apply_step(hit, Action::kAccept, 50, params).next_capacity == 47);
  CHECK(apply_step(hit, Action::kAccept, 2, params).next_capacity == -1);
}

TEST_CASE("accept-all runs until capacity is used") {
  ModelParams params;
  params.p_board = 1.0;
  const Policy policy = default_store()->make_policy(PolicyKind::kAcceptAll);
  for (const Trajectory& t : generate_trajectories(20, 4, params)) {
    const EpisodeResult r = run_episode(policy, t, params);
    CHECK(r.accepted_total >= 500);
    CHECK(r.accepted_total <= 512);
    CHECK(r.accepted_total == r.boarded_total);
  }
}

TEST_CASE("partial replay") {
  const Policy policy = default_store()->make_policy(PolicyKind::kLevelI);
  const Trajectory& t = default_trajectories()[0];
  EpisodeOptions opts;
  opts.max_steps = 10;
  const EpisodeResult part = run_episode(policy, t, ModelParams{}, opts);
  const EpisodeResult full = run_episode(policy, t, ModelParams{});
  CHECK(part.steps == 10);
  CHECK(part.cumulative.back() == full.cumulative[9]);
}

TEST_CASE("evaluate") {
  const ModelParams params;
  const auto& store = default_store();
  const Policy all = store->make_policy(PolicyKind::kAcceptAll);
  const Policy non = store->make_policy(PolicyKind::kNonIsisK);
  const Policy rnd = store->make_policy(PolicyKind::kRandom);
  const Policy l1 = store->make_policy(PolicyKind::kLevelI);
  const auto& ts = default_trajectories();

  SUBCASE("single trajectory has zero stderr") {
    const MetricsTable m = evaluate({&l1}, {ts[0]}, params);
    REQUIRE(m.rows.size() == 1u);
    CHECK(m.rows[0].reward_stderr == 0.0);
    CHECK(m.rows[0].reward_mean == run_episode(l1, ts[0], params).reward);
    CHECK(m.rows[0].policy == "LEVEL_I");
  }
  SUBCASE("threads do not change the numbers") {
    EvaluateOptions one;
    one.jobs = 1;
    EvaluateOptions four;
    four.jobs = 4;
    std::ostringstream a, b;
    write_metrics_csv(a, evaluate({&l1, &rnd, &all}, ts, params, one));
    write_metrics_csv(b, evaluate({&l1, &rnd, &all}, ts, params, four));
    CHECK(a.str() == b.str());
  }
  SUBCASE("random draws do not disturb other policies") {
    const MetricsTable with = evaluate({&rnd, &all}, ts, params);
    const MetricsTable without = evaluate({&all}, ts, params);
    CHECK(with.rows[1].reward_mean == without.rows[0].reward_mean);
    CHECK(with.rows[1].accepted_mean == without.rows[0].accepted_mean);
  }
  SUBCASE("accept-all and non-isis-k coincide when nobody claims isis-k") {
    const MetricsTable m = evaluate({&all, &non}, ts, params);
    CHECK(m.rows[0].reward_mean == m.rows[1].reward_mean);
    CHECK(m.rows[0].accepted_by_category == m.rows[1].accepted_by_category);
  }
  SUBCASE("stderr is the sample sd over sqrt(n)") {
    const auto [mean, se] = mean_stderr({1.0, 2.0, 3.0, 4.0});
    CHECK(mean == 2.5);
    CHECK(se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(mean_stderr({7.0}).second == 0.0);
  }
}

TEST_CASE("exports") {
  const ModelParams params;
  const auto& store = default_store();
  const Policy all = store->make_policy(PolicyKind::kAcceptAll);
  const Policy amc = store->make_policy(PolicyKind::kAmcits);
  const auto& ts = default_trajectories();
  std::vector<std::vector<EpisodeResult>> episodes;
  EvaluateOptions opts;
  opts.episodes_out = &episodes;
  const MetricsTable m = evaluate({&all, &amc}, ts, params, opts);

  std::ostringstream csv;
  write_metrics_csv(csv, m);
  const auto rows = lines_of(csv.str());
  REQUIRE(rows.size() == 3u);
  CHECK(rows[0] ==
        "policy,reward_mean,reward_stderr,accepted_mean,accepted_stderr,"
        "AMCIT_accepted,AMCIT_arrived,SIV_accepted,SIV_arrived,P1P2_accepted,P1P2_arrived,"
        "VULNERABLE_accepted,VULNERABLE_arrived,ISISK_accepted,ISISK_arrived");
  CHECK(rows[1].rfind("ACCEPT_ALL,", 0) == 0);

  std::ostringstream curves;
  write_curves_csv(curves, m, params);
  const auto crows = lines_of(curves.str());
  CHECK(crows.size() == 1 + 2 * 1200u);
  CHECK(crows[0] == "policy,step,time,mean_cumulative_reward");
  // the curve ends at the mean reward
  CHECK(m.rows[1].curve.back() == doctest::Approx(m.rows[1].reward_mean));

  REQUIRE(episodes.size() == 2u);
  REQUIRE(episodes[0].size() == ts.size());
  const nlohmann::json ej = episode_to_json("AMCITS", ts[0], episodes[1][0]);
  CHECK(ej["policy"] == "AMCITS");
  CHECK(ej["steps"].size() == episodes[1][0].log.size());
  CHECK(ej["steps"][0].contains("true"));

  const nlohmann::json gj = grid_to_json(policy_grid(store->level_i()->policy, 500, 1200), Level::kI);
  CHECK(gj["rows"].size() == 13u);
  for (const auto& row : gj["rows"]) CHECK(row["actions"][4] == "REJECT");

  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(3.0) == "3");
}
