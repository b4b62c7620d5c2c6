#include "evac/domain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace evac {

namespace {

constexpr std::array<std::string_view, kNumCategories> kCategoryNames = {
    "AMCIT", "SIV", "P1P2", "VULNERABLE", "ISISK"};

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

template <class... Args>
[[noreturn]] void fail(Args&&... parts) {
  std::ostringstream os;
  (os << ... << parts);
  throw DomainError(os.str());
}

void check_probability_vector(std::span<const double> p, double tol, const char* what) {
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) fail(what, ": entries must be finite and nonnegative");
    total += x;
  }
  if (std::abs(total - 1.0) > tol) fail(what, ": entries sum to ", total, ", expected 1");
}

}  // namespace

Category category_from_code(std::size_t c) {
  if (c >= kNumCategories) fail("category code out of range: ", c);
  return static_cast<Category>(c);
}

std::string_view category_name(Category v) { return kCategoryNames[code(v)]; }

std::optional<Category> parse_category(std::string_view name) {
  for (std::size_t i = 0; i < kNumCategories; ++i) {
    if (kCategoryNames[i] == name) return static_cast<Category>(i);
  }
  return std::nullopt;
}

std::string_view action_name(Action a) { return a == Action::kAccept ? "ACCEPT" : "REJECT"; }

std::optional<Action> parse_action(std::string_view name) {
  if (name == "ACCEPT") return Action::kAccept;
  if (name == "REJECT") return Action::kReject;
  return std::nullopt;
}

ClaimMatrix identity_claim_matrix() {
  ClaimMatrix m{};
  for (std::size_t i = 0; i < kNumCategories; ++i) m[i][i] = 1.0;
  return m;
}

// ---- ModelParams ------------------------------------------------------------

void ModelParams::validate() const {
  if (c_max < 1) fail("c_max must be >= 1");
  if (t_max < 1) fail("t_max must be >= 1");
  if (f_max < 1) fail("f_max must be >= 1");
  for (double r : rewards) {
    if (!std::isfinite(r)) fail("rewards must be finite");
  }
  const auto& r = rewards;
  if (!(r[4] < 0.0 && 0.0 < r[3] && r[3] < r[2] && r[2] < r[1] && r[1] < r[0])) {
    fail("rewards must satisfy ISISK < 0 < VULNERABLE < P1P2 < SIV < AMCIT");
  }
  double pop_total = 0.0;
  for (double p : populations) {
    if (!(p >= 0.0) || !std::isfinite(p)) fail("populations must be finite and nonnegative");
    pop_total += p;
  }
  if (!(pop_total > 0.0)) fail("populations must not all be zero");
  if (!(p_board > 0.0 && p_board <= 1.0)) fail("p_board must lie in (0, 1]");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) fail("epsilon must be finite and >= 0");
  if (gamma != 1.0) fail("gamma is fixed at 1.0 for the finite-horizon model");

  const auto& fm = family_mixture;
  for (std::size_t k = 0; k < 2; ++k) {
    if (!(fm.sds[k] > 0.0)) fail("family_mixture sd must be positive");
    if (!std::isfinite(fm.means[k])) fail("family_mixture mean must be finite");
  }
  check_probability_vector(fm.weights, 1e-12, "family_mixture weights");

  for (std::size_t v = 0; v < kNumCategories; ++v) {
    check_probability_vector(claim_matrix[v], 1e-12, "claim_matrix row");
    if (v == code(Category::kIsisK)) continue;
    for (std::size_t o = v + 1; o < kNumCategories; ++o) {
      if (claim_matrix[v][o] != 0.0) {
        fail("claim_matrix row ", kCategoryNames[v], " places mass on lower-priority claim ",
             kCategoryNames[o]);
      }
    }
  }
  if (!(dirichlet_scale > 0.0)) fail("dirichlet_scale must be positive");
  if (pomcp.iterations < 1) fail("pomcp.iterations must be >= 1");
  if (pomcp.max_depth < 1) fail("pomcp.max_depth must be >= 1");
  if (!(pomcp.exploration >= 0.0)) fail("pomcp.exploration must be >= 0");
  if (threshold_t < 0) fail("threshold_t must be >= 0");
}

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<std::string_view> known,
                    std::string_view where) {
  if (!j.is_object()) fail(where, ": expected a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      fail(where, ": unknown key '", item.key(), "'");
    }
  }
}

double get_number(const json& j, std::string_view where) {
  if (!j.is_number()) fail(where, ": expected a number");
  return j.get<double>();
}

int get_int(const json& j, std::string_view where) {
  if (!j.is_number_integer()) fail(where, ": expected an integer");
  return j.get<int>();
}

template <std::size_t N>
std::array<double, N> get_array(const json& j, std::string_view where) {
  if (!j.is_array() || j.size() != N) fail(where, ": expected an array of ", N, " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = get_number(j[i], where);
  return out;
}

CategoryVector get_category_map(const json& j, const CategoryVector& defaults,
                                std::string_view where) {
  if (!j.is_object()) fail(where, ": expected an object keyed by category name");
  CategoryVector out = defaults;
  for (const auto& item : j.items()) {
    auto v = parse_category(item.key());
    if (!v) fail(where, ": unknown category '", item.key(), "'");
    out[code(*v)] = get_number(item.value(), where);
  }
  return out;
}

json category_map(const CategoryVector& values) {
  json j = json::object();
  for (std::size_t i = 0; i < kNumCategories; ++i) j[std::string(kCategoryNames[i])] = values[i];
  return j;
}

}  // namespace

ModelParams params_from_json(const json& j) {
  reject_unknown(j,
                 {"c_max", "t_max", "f_max", "rewards", "populations", "p_board", "epsilon",
                  "gamma", "family_mixture", "claim_matrix", "dirichlet_scale", "pomcp",
                  "threshold_t", "threshold_inclusive"},
                 "config");
  ModelParams p;
  if (j.contains("c_max")) p.c_max = get_int(j["c_max"], "c_max");
  if (j.contains("t_max")) p.t_max = get_int(j["t_max"], "t_max");
  if (j.contains("f_max")) p.f_max = get_int(j["f_max"], "f_max");
  if (j.contains("rewards")) p.rewards = get_category_map(j["rewards"], p.rewards, "rewards");
  if (j.contains("populations")) {
    p.populations = get_category_map(j["populations"], p.populations, "populations");
  }
  if (j.contains("p_board")) p.p_board = get_number(j["p_board"], "p_board");
  if (j.contains("epsilon")) p.epsilon = get_number(j["epsilon"], "epsilon");
  if (j.contains("gamma")) p.gamma = get_number(j["gamma"], "gamma");
  if (j.contains("family_mixture")) {
    const json& fm = j["family_mixture"];
    reject_unknown(fm, {"weights", "means", "sds"}, "family_mixture");
    if (fm.contains("weights")) p.family_mixture.weights = get_array<2>(fm["weights"], "weights");
    if (fm.contains("means")) p.family_mixture.means = get_array<2>(fm["means"], "means");
    if (fm.contains("sds")) p.family_mixture.sds = get_array<2>(fm["sds"], "sds");
  }
  if (j.contains("claim_matrix")) {
    const json& m = j["claim_matrix"];
    if (!m.is_array() || m.size() != kNumCategories) fail("claim_matrix: expected 5 rows");
    for (std::size_t v = 0; v < kNumCategories; ++v) {
      p.claim_matrix[v] = get_array<kNumCategories>(m[v], "claim_matrix row");
    }
  }
  if (j.contains("dirichlet_scale")) {
    p.dirichlet_scale = get_number(j["dirichlet_scale"], "dirichlet_scale");
  }
  if (j.contains("pomcp")) {
    const json& pc = j["pomcp"];
    reject_unknown(pc, {"iterations", "max_depth", "exploration"}, "pomcp");
    if (pc.contains("iterations")) p.pomcp.iterations = get_int(pc["iterations"], "iterations");
    if (pc.contains("max_depth")) p.pomcp.max_depth = get_int(pc["max_depth"], "max_depth");
    if (pc.contains("exploration")) {
      p.pomcp.exploration = get_number(pc["exploration"], "exploration");
    }
  }
  if (j.contains("threshold_t")) p.threshold_t = get_int(j["threshold_t"], "threshold_t");
  if (j.contains("threshold_inclusive")) {
    if (!j["threshold_inclusive"].is_boolean()) fail("threshold_inclusive: expected a boolean");
    p.threshold_inclusive = j["threshold_inclusive"].get<bool>();
  }
  p.validate();
  return p;
}

json params_to_json(const ModelParams& p) {
  json j;
  j["c_max"] = p.c_max;
  j["t_max"] = p.t_max;
  j["f_max"] = p.f_max;
  j["rewards"] = category_map(p.rewards);
  j["populations"] = category_map(p.populations);
  j["p_board"] = p.p_board;
  j["epsilon"] = p.epsilon;
  j["gamma"] = p.gamma;
  j["family_mixture"] = {{"weights", p.family_mixture.weights},
                         {"means", p.family_mixture.means},
                         {"sds", p.family_mixture.sds}};
  j["claim_matrix"] = p.claim_matrix;
  j["dirichlet_scale"] = p.dirichlet_scale;
  j["pomcp"] = {{"iterations", p.pomcp.iterations},
                {"max_depth", p.pomcp.max_depth},
                {"exploration", p.pomcp.exploration}};
  j["threshold_t"] = p.threshold_t;
  j["threshold_inclusive"] = p.threshold_inclusive;
  return j;
}

ModelParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file: ", path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    fail("config file ", path, " is not valid JSON: ", e.what());
  }
  return params_from_json(j);
}

// ---- StateSpace ---------------------------------------------------------------

StateSpace::StateSpace(const ModelParams& params)
    : StateSpace(params.c_max, params.t_max, params.f_max) {}

StateSpace::StateSpace(int c_max, int t_max, int f_max)
    : c_min_(1 - f_max), c_max_(c_max), t_max_(t_max), f_max_(f_max) {}

bool StateSpace::contains(const EvacState& s) const {
  if (s.terminal) return true;
  return s.capacity >= c_min_ && s.capacity <= c_max_ && s.time >= 0 && s.time <= t_max_ &&
         s.family >= 1 && s.family <= f_max_ && code(s.category) < kNumCategories;
}

std::size_t StateSpace::index(const EvacState& s) const {
  if (s.terminal) return terminal_index();
  if (!contains(s)) {
    fail("state out of range: c=", s.capacity, " t=", s.time, " f=", s.family,
         " v=", code(s.category));
  }
  return cell_offset(s.capacity, s.time) +
         static_cast<std::size_t>(s.family - 1) * kNumCategories + code(s.category);
}

EvacState StateSpace::state(std::size_t index) const {
  if (index == terminal_index()) return EvacState::make_terminal();
  if (index > terminal_index()) fail("state index out of range: ", index);
  EvacState s;
  s.category = static_cast<Category>(index % kNumCategories);
  index /= kNumCategories;
  s.family = static_cast<int>(index % f_range()) + 1;
  index /= f_range();
  s.time = static_cast<int>(index % t_range());
  index /= t_range();
  s.capacity = static_cast<int>(index) + c_min_;
  return s;
}

// ---- distributions -----------------------------------------------------------

double FamilySizePMF::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) m += static_cast<double>(i + 1) * p[i];
  return m;
}

FamilySizePMF family_size_pmf(const ModelParams& params) {
  const auto& fm = params.family_mixture;
  const double lo = 0.5;
  const double hi = params.f_max + 0.5;
  FamilySizePMF pmf;
  pmf.p.assign(static_cast<std::size_t>(params.f_max), 0.0);
  for (std::size_t k = 0; k < 2; ++k) {
    if (!(fm.sds[k] > 0.0)) fail("family_mixture sd must be positive");
    if (fm.weights[k] == 0.0) continue;
    const double mu = fm.means[k];
    const double sd = fm.sds[k];
    // Each component is a Gaussian truncated to the support, so it carries
    // its full weight regardless of how much of it falls outside.
    const double mass = normal_cdf((hi - mu) / sd) - normal_cdf((lo - mu) / sd);
    if (!(mass > 0.0)) fail("family_mixture component ", k, " has no mass on [1, f_max]");
    for (int f = 1; f <= params.f_max; ++f) {
      const double bin = normal_cdf((f + 0.5 - mu) / sd) - normal_cdf((f - 0.5 - mu) / sd);
      pmf.p[static_cast<std::size_t>(f - 1)] += fm.weights[k] * bin / mass;
    }
  }
  const double total = std::accumulate(pmf.p.begin(), pmf.p.end(), 0.0);
  for (double& x : pmf.p) x /= total;
  return pmf;
}

PopulationPrior population_prior(const ModelParams& params) {
  double total = 0.0;
  for (double p : params.populations) {
    if (!(p >= 0.0)) fail("populations must be nonnegative");
    total += p;
  }
  if (!(total > 0.0)) fail("populations must not all be zero");
  PopulationPrior prior;
  for (std::size_t i = 0; i < kNumCategories; ++i) prior.p[i] = params.populations[i] / total;
  return prior;
}

CategoryVector posterior_true_given_claim(Category claimed, const PopulationPrior& pop,
                                          const ClaimMatrix& forward) {
  const std::size_t o = code(claimed);
  CategoryVector post{};
  double marginal = 0.0;
  for (std::size_t s = 0; s < kNumCategories; ++s) {
    post[s] = forward[s][o] * pop.p[s];
    marginal += post[s];
  }
  if (!(marginal > 0.0)) {
    fail("claimed category ", kCategoryNames[o], " has zero marginal probability");
  }
  for (double& x : post) x /= marginal;
  return post;
}

ClaimModel::ClaimModel(const ClaimMatrix& forward, const PopulationPrior& prior)
    : forward_(forward), prior_(prior) {
  for (std::size_t o = 0; o < kNumCategories; ++o) {
    for (std::size_t v = 0; v < kNumCategories; ++v) {
      marginal_[o] += forward_[v][o] * prior_.p[v];
    }
    if (marginal_[o] > 0.0) {
      posterior_[o] = posterior_true_given_claim(static_cast<Category>(o), prior_, forward_);
    }
  }
}

const CategoryVector& ClaimModel::posterior(Category claimed) const {
  if (!has_posterior(claimed)) {
    fail("claimed category ", category_name(claimed), " has zero marginal probability");
  }
  return posterior_[code(claimed)];
}

// ---- Dirichlet ------------------------------------------------------------------

DirichletBelief::DirichletBelief(const CategoryVector& alpha) : alpha_(alpha) {
  for (double a : alpha_) {
    if (!(a > 0.0) || !std::isfinite(a)) fail("Dirichlet pseudo-counts must be positive");
  }
}

DirichletBelief DirichletBelief::from_params(const ModelParams& params) {
  CategoryVector alpha{};
  for (std::size_t i = 0; i < kNumCategories; ++i) {
    // Zero-population categories keep a vanishing pseudo-count so the
    // belief stays a proper Dirichlet.
    alpha[i] = std::max(params.populations[i] / params.dirichlet_scale, 1e-9);
  }
  return DirichletBelief(alpha);
}

CategoryVector DirichletBelief::mean() const {
  const double total = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
  CategoryVector m{};
  for (std::size_t i = 0; i < kNumCategories; ++i) m[i] = alpha_[i] / total;
  return m;
}

DirichletBelief dirichlet_update(const DirichletBelief& belief, Category observed) {
  CategoryVector alpha = belief.alpha();
  alpha[code(observed)] += 1.0;
  return DirichletBelief(alpha);
}

DirichletBelief dirichlet_update(const DirichletBelief& belief, const CategoryVector& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) fail("soft evidence weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) fail("soft evidence weights must sum to 1, got ", total);
  CategoryVector alpha = belief.alpha();
  for (std::size_t i = 0; i < kNumCategories; ++i) alpha[i] += weights[i];
  return DirichletBelief(alpha);
}

// ---- rewards and transitions ----------------------------------------------------------

double reward(const EvacState& state, Action action, const ModelParams& params) {
  if (state.terminal) fail("reward is undefined at the terminal state");
  if (state.pre_terminal() || action == Action::kReject) return 0.0;
  return state.family * params.rewards[code(state.category)] + params.epsilon;
}

double observed_reward(const EvacState& obs_state, Action action, const ClaimModel& claim,
                       const ModelParams& params) {
  if (obs_state.terminal) fail("observed reward is undefined at the terminal state");
  if (obs_state.pre_terminal() || action == Action::kReject) return 0.0;
  const CategoryVector& post = claim.posterior(obs_state.category);
  double expected = 0.0;
  for (std::size_t s = 0; s < kNumCategories; ++s) expected += post[s] * params.rewards[s];
  return obs_state.family * expected + params.epsilon;
}

std::vector<Outcome> transition_outcomes(const EvacState& state, Action action,
                                         const PopulationPrior& pop, const FamilySizePMF& fam,
                                         const ModelParams& params) {
  if (state.terminal) fail("no transitions out of the terminal state");
  std::vector<Outcome> out;
  if (state.pre_terminal() || state.time - 1 == 0) {
    out.push_back({EvacState::make_terminal(), 1.0});
    return out;
  }
  auto add_arrivals = [&](int capacity, double mass) {
    if (capacity <= 0) {
      out.push_back({EvacState::make_terminal(), mass});
      return;
    }
    for (int f = 1; f <= fam.f_max(); ++f) {
      for (Category v : kAllCategories) {
        const double p = mass * fam(f) * pop(v);
        if (p == 0.0) continue;
        out.push_back({EvacState{capacity, state.time - 1, f, v, false}, p});
      }
    }
  };
  if (action == Action::kReject) {
    add_arrivals(state.capacity, 1.0);
  } else {
    const int boarded = std::max(state.capacity - state.family, 1 - params.f_max);
    add_arrivals(boarded, params.p_board);
    if (params.p_board < 1.0) add_arrivals(state.capacity, 1.0 - params.p_board);
  }
  return out;
}

// ---- seeds ------------------------------------------------------------------------------

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace evac
