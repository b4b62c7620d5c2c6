// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Sizes are flags so the slow planner check can be scaled.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>
#include <thread>

#include "evac/harness.hpp"
#include "evac/table_io.hpp"
#include "evac/table_store.hpp"
#include "fixtures.hpp"
#include "oracle/expectimax.hpp"

using namespace evac;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int prec = 2) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(prec);
  s << x;
  return s.str();
}

std::string sci(double x) {
  std::ostringstream s;
  s.setf(std::ios::scientific);
  s.precision(2);
  s << x;
  return s.str();
}

struct Report {
  std::vector<std::string> lines;
  int failures = 0;

  void record(int id, bool pass, const std::string& what, const std::string& measured) {
    std::string line = "criterion " + std::to_string(id) + ": " + (pass ? "PASS" : "FAIL") + ": " +
                       what + " [" + measured + "]";
    std::cout << line << std::endl;
    lines.push_back(line);
    if (!pass) ++failures;
  }
};

struct Shared {
  ModelParams params;
  std::shared_ptr<const TableStore> store;
  double level_i_solve_seconds = 0.0;
  std::vector<Trajectory> trajectories;
  MetricsTable table;
  std::vector<std::vector<EpisodeResult>> episodes;
  double evaluate_seconds = 0.0;
  std::vector<PolicyKind> kinds;

  const PolicyMetrics& row(PolicyKind k) const {
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      if (kinds[i] == k) return table.rows[i];
    }
    throw std::logic_error("policy not evaluated");
  }
};

double combined(const PolicyMetrics& a, const PolicyMetrics& b) {
  return std::sqrt(a.reward_stderr * a.reward_stderr + b.reward_stderr * b.reward_stderr);
}

void criterion_1(Report& r) {
  const auto t0 = Clock::now();
  const ModelParams p = evac::testing::mini_params();
  const Solution sol = solve(Level::kI, p);
  oracle::Expectimax ex(p, oracle::level_i_law(p));
  const StateSpace space(p);
  double max_dv = 0.0;
  int mismatches = 0;
  for (std::size_t i = 0; i < space.nonterminal_size(); ++i) {
    const EvacState s = space.state(i);
    max_dv = std::max(max_dv, std::abs(sol.values.value(s) - ex.value(s)));
    if (!s.pre_terminal() && sol.policy.lookup(s) != ex.action(s)) ++mismatches;
  }
  const double secs = seconds_since(t0);
  r.record(1, max_dv < 1e-9 && mismatches == 0 && secs < 1.0 && space.size() <= 10000,
           "backward induction equals brute-force expectimax on a miniature instance",
           "states " + std::to_string(space.size()) + ", max |dV| " + sci(max_dv) +
               ", action mismatches " + std::to_string(mismatches) + ", " + fmt(secs, 3) + " s");
}

void criterion_2(Report& r, const Shared& sh) {
  const ModelParams& p = sh.params;
  const PolicyTable& policy = sh.store->level_i()->policy;
  long checked = 0;
  long violations = 0;
  for (int c = 1; c <= p.c_max; ++c) {
    for (int f = 1; f <= std::min(c, p.f_max); ++f) {
      for (Category v : kAllCategories) {
        const bool positive = f * p.rewards[code(v)] + p.epsilon > 0.0;
        const Action want = positive ? Action::kAccept : Action::kReject;
        if (policy.lookup({c, 1, f, v, false}) != want) ++violations;
        ++checked;
      }
    }
  }
  r.record(2, violations == 0, "at t=1 with c >= f, ACCEPT iff f*r_v + eps > 0",
           std::to_string(checked) + " states, " + std::to_string(violations) + " violations");
}

void criterion_3(Report& r, const Shared& sh) {
  const ModelParams& p = sh.params;
  const ValueTable& w = sh.store->level_i()->values;
  long violations = 0;
  long pairs = 0;
  for (int t = 0; t <= p.t_max; ++t) {
    for (int c = p.c_min(); c <= p.c_max; ++c) {
      const double x = w.continuation(c, t);
      if (c > p.c_min()) {
        ++pairs;
        if (x < w.continuation(c - 1, t)) ++violations;
      }
      if (t > 0) {
        ++pairs;
        if (x < w.continuation(c, t - 1)) ++violations;
      }
    }
  }
  r.record(3, violations == 0, "W(c,t) nondecreasing in c and t over the default Level I table",
           std::to_string(pairs) + " neighbour pairs, " + std::to_string(violations) + " violations");
}

void criterion_4(Report& r, const Shared& sh) {
  const ModelParams& p = sh.params;
  const PolicyTable& policy = sh.store->level_i()->policy;
  long states = 0;
  long accepted = 0;
  for (int c = p.c_min(); c <= p.c_max; ++c) {
    for (int t = 0; t <= p.t_max; ++t) {
      for (int f = 1; f <= p.f_max; ++f) {
        ++states;
        if (policy.lookup({c, t, f, Category::kIsisK, false}) == Action::kAccept) ++accepted;
      }
    }
  }
  r.record(4, accepted == 0, "Level I rejects ISISK at every nonterminal state",
           std::to_string(states) + " ISISK states, " + std::to_string(accepted) + " accepted");
}

void criterion_5(Report& r, const Shared& sh) {
  const StateSpace space(sh.params);
  r.record(5, sh.level_i_solve_seconds <= 300.0, "full default Level I solve within 5 minutes",
           fmt(sh.level_i_solve_seconds, 3) + " s single-threaded, kernel " +
               std::string(kernels::isa_name(kernels::best_isa())) + ", " +
               std::to_string(space.size()) + " states");
}

void criterion_6(Report& r, const Shared& sh) {
  struct Target {
    PolicyKind kind;
    double reference;
  };
  const Target targets[] = {{PolicyKind::kAmcits, 5308.43},         {PolicyKind::kSivAmcitsP1P2, 4906.96},
                            {PolicyKind::kNonIsisK, 3096.94},       {PolicyKind::kAcceptAll, 3096.94},
                            {PolicyKind::kRandom, 3093.61},         {PolicyKind::kBeforeThresholdAmcits, 8495.33}};
  const PolicyMetrics& l1 = sh.row(PolicyKind::kLevelI);
  bool ok = true;
  std::ostringstream m;
  const double l1_dev = l1.reward_mean / 12112.97 - 1.0;
  ok = ok && std::abs(l1_dev) <= 0.20;
  m << "LEVEL_I " << fmt(l1.reward_mean) << " +- " << fmt(l1.reward_stderr) << " (" << fmt(100 * l1_dev, 1)
    << "% vs reference)";
  for (const Target& t : targets) {
    const PolicyMetrics& row = sh.row(t.kind);
    const double margin = (l1.reward_mean - row.reward_mean) / combined(l1, row);
    const double dev = row.reward_mean / t.reference - 1.0;
    ok = ok && margin > 2.0 && std::abs(dev) <= 0.20;
    m << "; " << row.policy << " " << fmt(row.reward_mean) << " (gap " << fmt(margin, 1) << " se, "
      << fmt(100 * dev, 1) << "% vs reference)";
  }
  ok = ok && sh.evaluate_seconds <= 600.0;
  m << "; " << sh.trajectories.size() << " trajectories, evaluate " << fmt(sh.evaluate_seconds, 1) << " s";
  r.record(6, ok, "Level I beats each baseline by > 2 combined stderr, magnitudes within 20% of reference rewards",
           m.str());
}

void criterion_7(Report& r, const Shared& sh) {
  const PolicyMetrics& a = sh.row(PolicyKind::kLevelI);
  const PolicyMetrics& b = sh.row(PolicyKind::kLevelIIb);
  const double gap = std::abs(a.reward_mean - b.reward_mean);
  r.record(7, gap < combined(a, b), "Level IIb mean reward within 1 combined stderr of Level I",
           "I " + fmt(a.reward_mean) + ", IIb " + fmt(b.reward_mean) + ", gap " + fmt(gap) +
               ", combined stderr " + fmt(combined(a, b)));
}

void criterion_8(Report& r, const Shared& sh) {
  std::size_t ia = 0, in = 0;
  for (std::size_t i = 0; i < sh.kinds.size(); ++i) {
    if (sh.kinds[i] == PolicyKind::kAcceptAll) ia = i;
    if (sh.kinds[i] == PolicyKind::kNonIsisK) in = i;
  }
  std::size_t differing = 0;
  for (std::size_t k = 0; k < sh.trajectories.size(); ++k) {
    const EpisodeResult& a = sh.episodes[ia][k];
    const EpisodeResult& b = sh.episodes[in][k];
    if (a.reward != b.reward || a.accepted != b.accepted || a.arrived != b.arrived || a.steps != b.steps) {
      ++differing;
    }
  }
  long isis_claims = 0;
  for (const Trajectory& t : sh.trajectories) {
    for (const ArrivalRecord& rec : t.arrivals) isis_claims += rec.claimed == Category::kIsisK;
  }
  r.record(8, differing == 0, "ACCEPT_ALL and NON_ISISK identical on every trajectory",
           std::to_string(differing) + " of " + std::to_string(sh.trajectories.size()) +
               " trajectories differ; ISISK claims in the set: " + std::to_string(isis_claims));
}

void criterion_9(Report& r, const Shared& sh) {
  const PolicyMetrics& a = sh.row(PolicyKind::kAcceptAll);
  r.record(9, a.accepted_mean >= 615.0 && a.accepted_mean <= 645.0,
           "ACCEPT_ALL mean accepted people in [615, 645]",
           fmt(a.accepted_mean) + " +- " + fmt(a.accepted_stderr));
}

void criterion_10(Report& r, const ModelParams& params) {
  Rng rng(mix_seed(2023, 10));
  const DirichletBelief prior = DirichletBelief::from_params(params);
  int close = 0;
  double worst = 0.0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    const CategoryVector theta = prior.sample(rng);
    DirichletBelief b = prior;
    for (int k = 0; k < params.t_max; ++k) b = dirichlet_update(b, sample_category(rng, theta));
    const CategoryVector m = b.mean();
    double l1 = 0.0;
    for (std::size_t v = 0; v < kNumCategories; ++v) l1 += std::abs(m[v] - theta[v]);
    worst = std::max(worst, l1);
    close += l1 < 0.05;
  }
  r.record(10, close >= 90, "posterior mean within L1 0.05 of theta after 1200 hard updates in >= 90% of trials",
           std::to_string(close) + "/" + std::to_string(trials) + " trials, worst L1 " + fmt(worst, 4));
}

void criterion_11(Report& r, const Shared& sh, std::size_t n) {
  n = std::min(n, sh.trajectories.size());
  const std::vector<Trajectory> subset(sh.trajectories.begin(), sh.trajectories.begin() + static_cast<long>(n));
  const Policy l1 = sh.store->make_policy(PolicyKind::kLevelI);
  const Policy iia = sh.store->make_policy(PolicyKind::kLevelIIa);
  const Policy iii = sh.store->make_policy(PolicyKind::kLevelIII);
  EvaluateOptions opts;
  opts.jobs = std::max(1u, std::thread::hardware_concurrency());
  const auto t0 = Clock::now();
  const MetricsTable m = evaluate({&l1, &iia, &iii}, subset, sh.params, opts);
  const double secs = seconds_since(t0);
  const double ratio_a = m.rows[1].reward_mean / m.rows[0].reward_mean;
  const double ratio_3 = m.rows[2].reward_mean / m.rows[0].reward_mean;
  r.record(11, ratio_a >= 0.85 && ratio_3 >= 0.75,
           "POMCP (500 iterations, depth 120): IIa >= 0.85 x Level I, III >= 0.75 x Level I",
           std::to_string(n) + " trajectories; I " + fmt(m.rows[0].reward_mean) + ", IIa " +
               fmt(m.rows[1].reward_mean) + " +- " + fmt(m.rows[1].reward_stderr) + " (ratio " + fmt(ratio_a, 3) +
               "), III " + fmt(m.rows[2].reward_mean) + " +- " + fmt(m.rows[2].reward_stderr) + " (ratio " +
               fmt(ratio_3, 3) + "); " + fmt(secs, 0) + " s");
}

void criterion_12(Report& r, const Shared& sh) {
  const PolicyTable& policy = sh.store->level_i()->policy;
  auto accepted_set = [&](int c, int t) {
    std::set<Category> out;
    const PolicyGrid g = policy_grid(policy, c, t);
    for (const auto& row : g.rows) {
      for (Category v : kAllCategories) {
        if (row[code(v)] == Action::kAccept) out.insert(v);
      }
    }
    return out;
  };
  bool ok = true;
  std::ostringstream m;
  const auto top = accepted_set(500, 1200);
  for (Category v : top) ok = ok && (v == Category::kAmcit || v == Category::kSiv);
  m << "(500,1200) accepts";
  for (Category v : top) m << " " << category_name(v);
  for (int c : {1, 5, 10, 20, 40}) {
    for (int t : {1000, 1200}) {
      const auto s = accepted_set(c, t);
      const bool only_amcit = s == std::set<Category>{Category::kAmcit};
      ok = ok && only_amcit;
      if (!only_amcit) m << "; (" << c << "," << t << ") not AMCIT-only";
    }
  }
  m << "; small c in {1,5,10,20,40} at t in {1000,1200} AMCIT-only";
  long isis = 0;
  for (int c = 1; c <= sh.params.c_max; ++c) {
    for (int t = 1; t <= sh.params.t_max; ++t) {
      for (const auto& row : policy_grid(policy, c, t).rows) isis += row[code(Category::kIsisK)] == Action::kAccept;
    }
  }
  ok = ok && isis == 0;
  m << "; ISISK accepted in " << isis << " grid cells";
  r.record(12, ok, "policy grid: (500,1200) within {AMCIT,SIV}, small c only AMCIT, ISISK never", m.str());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void criterion_13(Report& r, const std::string& bin) {
  const std::string dir = evac::testing::temp_path("acceptance");
  std::filesystem::create_directories(dir);
  auto sh = [&](const std::string& args) {
    const std::string cmd = bin + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  bool ok = sh("solve --level all --out " + dir + "/tables/ --jobs 1");
  ok = ok && sh("trajectories --n 200 --seed 99 --out " + dir + "/a.jsonl");
  ok = ok && sh("trajectories --n 200 --seed 99 --out " + dir + "/b.jsonl");
  const bool traj_same = ok && slurp(dir + "/a.jsonl") == slurp(dir + "/b.jsonl");
  const std::string eval = "evaluate --policies level_i,level_iib,after_threshold_amcits,before_threshold_amcits,"
                           "amcits,siv_amcits,siv_amcits_p1p2,non_isisk,accept_all,random --tables " +
                           dir + "/tables --trajectories " + dir + "/a.jsonl";
  ok = ok && sh(eval + " --out " + dir + "/m1.csv --curves " + dir + "/c1.csv --jobs 1");
  ok = ok && sh(eval + " --out " + dir + "/m2.csv --curves " + dir + "/c2.csv --jobs 4");
  const bool eval_same = ok && slurp(dir + "/m1.csv") == slurp(dir + "/m2.csv") &&
                         slurp(dir + "/c1.csv") == slurp(dir + "/c2.csv");
  ok = ok && sh("trajectories --n 2 --seed 5 --out " + dir + "/p.jsonl");
  const std::string plan = "evaluate --policies level_iia,level_iii --tables " + dir + "/tables --trajectories " +
                           dir + "/p.jsonl";
  ok = ok && sh(plan + " --out " + dir + "/p1.csv --jobs 1") && sh(plan + " --out " + dir + "/p2.csv --jobs 2");
  const bool plan_same = ok && slurp(dir + "/p1.csv") == slurp(dir + "/p2.csv");
  const bool nonempty = slurp(dir + "/m1.csv").size() > 100;
  std::filesystem::remove_all(dir);
  r.record(13, ok && traj_same && eval_same && plan_same && nonempty,
           "repeated trajectories/evaluate runs are byte-identical",
           std::string("trajectories ") + (traj_same ? "identical" : "DIFFER") + ", metrics+curves " +
               (eval_same ? "identical" : "DIFFER") + ", planner metrics " + (plan_same ? "identical" : "DIFFER"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::size_t n_traj = 1000;
  std::size_t n_planner = 1000;
  std::uint64_t seed = 20210826;
  std::string report_path;
  std::string bin = EVACPLAN_BIN;
  app.add_option("--trajectories", n_traj)->capture_default_str();
  app.add_option("--planner-trajectories", n_planner)->capture_default_str();
  app.add_option("--seed", seed)->capture_default_str();
  app.add_option("--report", report_path, "Also write the result lines here");
  app.add_option("--cli", bin, "evacplan binary")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  Report report;
  Shared sh;
  {
    SolveOptions one;
    one.jobs = 1;
    const auto t0 = Clock::now();
    solve(Level::kI, sh.params, one);
    sh.level_i_solve_seconds = seconds_since(t0);
  }
  sh.store = TableStore::solve_all(sh.params);
  sh.trajectories = generate_trajectories(n_traj, seed, sh.params);
  sh.kinds = {PolicyKind::kLevelI,    PolicyKind::kLevelIIb,      PolicyKind::kAfterThresholdAmcits,
              PolicyKind::kBeforeThresholdAmcits, PolicyKind::kAmcits, PolicyKind::kSivAmcits,
              PolicyKind::kSivAmcitsP1P2, PolicyKind::kNonIsisK, PolicyKind::kAcceptAll,
              PolicyKind::kRandom};
  std::vector<Policy> policies;
  for (PolicyKind k : sh.kinds) policies.push_back(sh.store->make_policy(k));
  std::vector<const Policy*> ptrs;
  for (const Policy& p : policies) ptrs.push_back(&p);
  EvaluateOptions opts;
  opts.jobs = std::max(1u, std::thread::hardware_concurrency());
  opts.episodes_out = &sh.episodes;
  const auto t0 = Clock::now();
  sh.table = evaluate(ptrs, sh.trajectories, sh.params, opts);
  sh.evaluate_seconds = seconds_since(t0);

  criterion_1(report);
  criterion_2(report, sh);
  criterion_3(report, sh);
  criterion_4(report, sh);
  criterion_5(report, sh);
  criterion_6(report, sh);
  criterion_7(report, sh);
  criterion_8(report, sh);
  criterion_9(report, sh);
  criterion_10(report, sh.params);
  criterion_11(report, sh, n_planner);
  criterion_12(report, sh);
  criterion_13(report, bin);

  std::cout << (report.failures == 0 ? "all criteria passed" : std::to_string(report.failures) + " criteria failed")
            << std::endl;
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    for (const std::string& line : report.lines) out << line << "\n";
  }
  return report.failures == 0 ? 0 : 1;
}
