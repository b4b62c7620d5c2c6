#pragma once

// Gate-admission evacuation model: categories, states, parameters, the
// arrival/claim/population distributions, rewards, transitions and the dense
// state index shared by the solvers.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace evac {

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Priority categories in strictly decreasing priority; the integer code is
/// stable and used as an array index throughout.
enum class Category : std::uint8_t {
  kAmcit = 0,
  kSiv = 1,
  kP1P2 = 2,
  kVulnerable = 3,
  kIsisK = 4,
};

inline constexpr std::size_t kNumCategories = 5;
inline constexpr std::array<Category, kNumCategories> kAllCategories = {
    Category::kAmcit, Category::kSiv, Category::kP1P2, Category::kVulnerable,
    Category::kIsisK};

constexpr std::size_t code(Category v) { return static_cast<std::size_t>(v); }
Category category_from_code(std::size_t code);
std::string_view category_name(Category v);
std::optional<Category> parse_category(std::string_view name);

enum class Action : std::uint8_t { kReject = 0, kAccept = 1 };

std::string_view action_name(Action a);
std::optional<Action> parse_action(std::string_view name);

using CategoryVector = std::array<double, kNumCategories>;
using ClaimMatrix = std::array<CategoryVector, kNumCategories>;

/// (capacity, time, family size, category) or the absorbing terminal state.
/// For observed states `category` holds the claimed category.
struct EvacState {
  int capacity = 0;
  int time = 0;
  int family = 1;
  Category category = Category::kAmcit;
  bool terminal = false;

  static EvacState make_terminal() {
    EvacState s;
    s.terminal = true;
    return s;
  }

  /// t = 0 or c <= 0: both actions lead to TERMINAL with reward 0.
  bool pre_terminal() const { return terminal || time <= 0 || capacity <= 0; }

  friend bool operator==(const EvacState&, const EvacState&) = default;
};

struct FamilyMixture {
  std::array<double, 2> weights = {0.5, 0.5};
  std::array<double, 2> means = {8.0, 1.0};
  std::array<double, 2> sds = {2.0, 0.6};
};

struct PomcpSettings {
  int iterations = 500;
  int max_depth = 120;
  double exploration = 100.0;
};

struct ModelParams {
  int c_max = 500;
  int t_max = 1200;
  int f_max = 13;
  CategoryVector rewards = {100.0, 25.0, 5.0, 1.0, -500.0};
  CategoryVector populations = {14786.0, 123000.0, 604500.0, 1000000.0, 20.0};
  double p_board = 0.8;
  double epsilon = 1e-4;
  double gamma = 1.0;
  FamilyMixture family_mixture;
  /// Row = true category, column = claimed category.
  ClaimMatrix claim_matrix = {{
      {1.0, 0.0, 0.0, 0.0, 0.0},
      {0.01, 0.99, 0.0, 0.0, 0.0},
      {0.01, 0.14, 0.85, 0.0, 0.0},
      {0.001, 0.009, 0.24, 0.75, 0.0},
      {0.05, 0.10, 0.35, 0.50, 0.0},
  }};
  double dirichlet_scale = 1000.0;
  PomcpSettings pomcp;
  int threshold_t = 200;
  /// Threshold heuristics switch phase at t <= threshold_t (else t < threshold_t).
  bool threshold_inclusive = true;

  /// Throws DomainError describing the first violated invariant.
  void validate() const;

  int c_min() const { return 1 - f_max; }
};

ClaimMatrix identity_claim_matrix();

/// Strict parse: unknown keys and wrong types are rejected; absent keys keep
/// their defaults. The result is validated.
ModelParams params_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const ModelParams& params);
ModelParams load_params(const std::string& path);

/// Dense (c, t, f, v) row-major index with TERMINAL as the last entry.
class StateSpace {
 public:
  explicit StateSpace(const ModelParams& params);
  StateSpace(int c_max, int t_max, int f_max);

  int c_min() const { return c_min_; }
  int c_max() const { return c_max_; }
  int t_max() const { return t_max_; }
  int f_max() const { return f_max_; }
  std::size_t c_range() const { return static_cast<std::size_t>(c_max_ - c_min_ + 1); }
  std::size_t t_range() const { return static_cast<std::size_t>(t_max_ + 1); }
  std::size_t f_range() const { return static_cast<std::size_t>(f_max_); }
  /// Number of (f, v) arrival combinations.
  std::size_t arrivals() const { return f_range() * kNumCategories; }

  std::size_t size() const { return nonterminal_size() + 1; }
  std::size_t nonterminal_size() const { return c_range() * t_range() * arrivals(); }
  std::size_t terminal_index() const { return nonterminal_size(); }

  bool contains(const EvacState& s) const;
  std::size_t index(const EvacState& s) const;
  EvacState state(std::size_t index) const;

  /// Offset of the first (f, v) entry for a given (c, t) cell.
  std::size_t cell_offset(int c, int t) const {
    return (static_cast<std::size_t>(c - c_min_) * t_range() + static_cast<std::size_t>(t)) *
           arrivals();
  }

  friend bool operator==(const StateSpace&, const StateSpace&) = default;

 private:
  int c_min_;
  int c_max_;
  int t_max_;
  int f_max_;
};

/// P(f) for f = 1..f_max, stored at index f - 1.
struct FamilySizePMF {
  std::vector<double> p;

  double operator()(int f) const { return p.at(static_cast<std::size_t>(f - 1)); }
  int f_max() const { return static_cast<int>(p.size()); }
  double mean() const;
};

struct PopulationPrior {
  CategoryVector p{};

  double operator()(Category v) const { return p[code(v)]; }
};

FamilySizePMF family_size_pmf(const ModelParams& params);
PopulationPrior population_prior(const ModelParams& params);

/// P(true | claimed) for a given population; throws DomainError when the
/// claimed category has zero marginal probability.
CategoryVector posterior_true_given_claim(Category claimed, const PopulationPrior& pop,
                                          const ClaimMatrix& forward);

class ClaimModel {
 public:
  ClaimModel(const ClaimMatrix& forward, const PopulationPrior& prior);

  const ClaimMatrix& forward() const { return forward_; }
  double forward(Category truth, Category claimed) const {
    return forward_[code(truth)][code(claimed)];
  }
  /// Σ_v P(claimed | v) prior(v).
  double marginal(Category claimed) const { return marginal_[code(claimed)]; }
  bool has_posterior(Category claimed) const { return marginal_[code(claimed)] > 0.0; }
  const CategoryVector& posterior(Category claimed) const;
  const PopulationPrior& prior() const { return prior_; }

 private:
  ClaimMatrix forward_;
  PopulationPrior prior_;
  CategoryVector marginal_{};
  ClaimMatrix posterior_{};
};

/// Dirichlet pseudo-counts over the five categories.
class DirichletBelief {
 public:
  explicit DirichletBelief(const CategoryVector& alpha);
  /// α = populations / dirichlet_scale.
  static DirichletBelief from_params(const ModelParams& params);

  const CategoryVector& alpha() const { return alpha_; }
  CategoryVector mean() const;
  PopulationPrior mean_prior() const { return PopulationPrior{mean()}; }

  template <class Rng>
  CategoryVector sample(Rng& rng) const;

  friend bool operator==(const DirichletBelief&, const DirichletBelief&) = default;

 private:
  CategoryVector alpha_;
};

DirichletBelief dirichlet_update(const DirichletBelief& belief, Category observed);
DirichletBelief dirichlet_update(const DirichletBelief& belief, const CategoryVector& weights);

struct Arrival {
  int family = 1;
  Category category = Category::kAmcit;
};

struct Outcome {
  EvacState next;
  double probability = 0.0;
};

double reward(const EvacState& state, Action action, const ModelParams& params);
double observed_reward(const EvacState& obs_state, Action action, const ClaimModel& claim,
                       const ModelParams& params);

std::vector<Outcome> transition_outcomes(const EvacState& state, Action action,
                                         const PopulationPrior& pop, const FamilySizePMF& fam,
                                         const ModelParams& params);

// ---- sampling -------------------------------------------------------------

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; derives independent stream seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream);

/// Index drawn from a nonnegative weight vector (need not be normalized).
template <class Rng>
std::size_t sample_index(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

template <class Rng>
Category sample_category(Rng& rng, const CategoryVector& p) {
  return category_from_code(sample_index(rng, std::span<const double>(p)));
}

template <class Rng>
Arrival sample_arrival(Rng& rng, const PopulationPrior& pop, const FamilySizePMF& fam) {
  Arrival a;
  a.family = static_cast<int>(sample_index(rng, std::span<const double>(fam.p))) + 1;
  a.category = sample_category(rng, pop.p);
  return a;
}

template <class Rng>
Category sample_claim(Rng& rng, Category truth, const ClaimModel& claim) {
  return sample_category(rng, claim.forward()[code(truth)]);
}

template <class Rng>
CategoryVector DirichletBelief::sample(Rng& rng) const {
  CategoryVector theta{};
  double total = 0.0;
  for (std::size_t i = 0; i < kNumCategories; ++i) {
    std::gamma_distribution<double> gamma(alpha_[i], 1.0);
    theta[i] = gamma(rng);
    total += theta[i];
  }
  if (!(total > 0.0)) {
    // Every gamma draw underflowed (tiny α); fall back to the mean.
    return mean();
  }
  for (double& x : theta) x /= total;
  return theta;
}

}  // namespace evac
