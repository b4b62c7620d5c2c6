#include "evac/dp_solver.hpp"

#include <algorithm>
#include <barrier>
#include <thread>

namespace evac {

std::string_view level_name(Level level) {
  switch (level) {
    case Level::kI: return "I";
    case Level::kIIa: return "IIa";
    case Level::kIIb: return "IIb";
    case Level::kIII: return "III";
  }
  return "?";
}

std::optional<Level> parse_level(std::string_view name) {
  if (name == "I" || name == "1") return Level::kI;
  if (name == "IIa" || name == "2a") return Level::kIIa;
  if (name == "IIb" || name == "2b") return Level::kIIb;
  if (name == "III" || name == "3") return Level::kIII;
  return std::nullopt;
}

ArrivalModel ArrivalModel::build(Level level, const ModelParams& params) {
  if (level != Level::kI && level != Level::kIIb) {
    throw DomainError("exact solve is only defined for Level I and Level IIb");
  }
  const FamilySizePMF fam = family_size_pmf(params);
  const PopulationPrior pop = population_prior(params);
  const ClaimModel claim(params.claim_matrix, pop);
  const std::size_t n = static_cast<std::size_t>(params.f_max) * kNumCategories;

  ArrivalModel m;
  m.immediate.assign(n, 0.0);
  m.probability.assign(n, 0.0);
  m.acceptable.assign(n, 1);
  m.p_board = params.p_board;
  std::size_t i = 0;
  for (int f = 1; f <= params.f_max; ++f) {
    for (Category v : kAllCategories) {
      // Any live state works as a carrier; the reward ignores (c, t).
      const EvacState carrier{1, 1, f, v, false};
      if (level == Level::kI) {
        m.immediate[i] = reward(carrier, Action::kAccept, params);
        m.probability[i] = fam(f) * pop(v);
      } else {
        m.probability[i] = fam(f) * claim.marginal(v);
        if (claim.has_posterior(v)) {
          m.immediate[i] = observed_reward(carrier, Action::kAccept, claim, params);
        } else {
          m.acceptable[i] = 0;
        }
      }
      ++i;
    }
  }
  return m;
}

// ---- ValueTable ---------------------------------------------------------------------

ValueTable::ValueTable(TableHeader header, ArrivalModel model, std::vector<double> continuation)
    : header_(header), model_(std::move(model)), w_(std::move(continuation)) {
  if (w_.size() != space().c_range() * space().t_range()) {
    throw DomainError("continuation table does not match the state space");
  }
  if (model_.immediate.size() != space().arrivals()) {
    throw DomainError("arrival model does not match the state space");
  }
}

QValues ValueTable::q_values(const EvacState& s) const {
  if (s.terminal) throw DomainError("q_values is undefined at the terminal state");
  if (!space().contains(s)) throw DomainError("state out of range");
  if (s.pre_terminal()) return {0.0, 0.0};
  const std::size_t i = static_cast<std::size_t>(s.family - 1) * kNumCategories + code(s.category);
  if (model_.acceptable[i] == 0) {
    throw DomainError("ACCEPT is undefined for claimed category " +
                      std::string(category_name(s.category)) + " (zero marginal)");
  }
  // Same operation order as the backup kernels.
  const double prev = continuation(s.capacity, s.time - 1);
  const double shifted = continuation(s.capacity - s.family, s.time - 1);
  const double base = model_.p_board * shifted + (1.0 - model_.p_board) * prev;
  return {model_.immediate[i] + base, prev};
}

double ValueTable::value(const EvacState& s) const {
  if (s.terminal || s.pre_terminal()) return 0.0;
  const std::size_t i = static_cast<std::size_t>(s.family - 1) * kNumCategories + code(s.category);
  if (model_.acceptable[i] == 0) return continuation(s.capacity, s.time - 1);
  const QValues q = q_values(s);
  return q.accept >= q.reject ? q.accept : q.reject;
}

// ---- PolicyTable ---------------------------------------------------------------------

PolicyTable::PolicyTable(TableHeader header, std::vector<std::uint8_t> actions)
    : header_(header), actions_(std::move(actions)) {
  if (actions_.size() != space().nonterminal_size()) {
    throw DomainError("policy payload does not match the state space");
  }
}

Action PolicyTable::lookup(const EvacState& s) const {
  if (s.terminal) return Action::kReject;
  const std::size_t i = space().index(s);
  return actions_[i] != 0 ? Action::kAccept : Action::kReject;
}

Action lookup(const PolicyTable& policy, const EvacState& state) { return policy.lookup(state); }

void require_matching_params(const TableHeader& header, const ModelParams& params) {
  if (params_digest(params) != header.digest) {
    throw DomainError("params digest mismatch: table was solved under " + to_hex(header.digest) +
                      ", current params hash to " + to_hex(params_digest(params)));
  }
  if (!(StateSpace(params) == header.space)) {
    throw DomainError("table dimensions do not match params");
  }
}

QValues q_values(const ValueTable& values, const EvacState& state, const ModelParams& params) {
  require_matching_params(values.header(), params);
  return values.q_values(state);
}

PolicyGrid policy_grid(const PolicyTable& policy, int capacity, int time) {
  const StateSpace& space = policy.space();
  if (capacity < space.c_min() || capacity > space.c_max() || time < 0 || time > space.t_max()) {
    throw DomainError("policy grid coordinates out of range");
  }
  PolicyGrid grid;
  grid.capacity = capacity;
  grid.time = time;
  grid.rows.resize(space.f_range());
  for (int f = 1; f <= space.f_max(); ++f) {
    for (Category v : kAllCategories) {
      grid.rows[static_cast<std::size_t>(f - 1)][code(v)] =
          policy.lookup(EvacState{capacity, time, f, v, false});
    }
  }
  return grid;
}

// ---- solve ----------------------------------------------------------------------------------

Solution solve(Level level, const ModelParams& params, const SolveOptions& options) {
  params.validate();
  const StateSpace space(params);
  ArrivalModel model = ArrivalModel::build(level, params);
  const TableHeader header{level, params_digest(params), space};

  const std::size_t c_range = space.c_range();
  std::vector<double> w(c_range * space.t_range(), 0.0);
  std::vector<std::uint8_t> actions(space.nonterminal_size(), 0);

  const kernels::BackupFn kernel = kernels::backup_kernel(options.isa.value_or(kernels::best_isa()));
  const std::size_t c_stride = space.t_range() * space.arrivals();

  auto run_slice = [&](int t, int c_lo, int c_hi) {
    if (c_lo > c_hi) return;
    kernels::BackupSlice slice;
    slice.w_prev = std::span<const double>(w.data() + static_cast<std::size_t>(t - 1) * c_range, c_range);
    slice.w_cur = std::span<double>(w.data() + static_cast<std::size_t>(t) * c_range, c_range);
    slice.policy = actions.data() + space.cell_offset(c_lo, t);
    slice.policy_c_stride = c_stride;
    slice.c_min = space.c_min();
    slice.c_lo = c_lo;
    slice.c_hi = c_hi;
    slice.f_max = params.f_max;
    slice.immediate = model.immediate;
    slice.arrival = model.probability;
    slice.acceptable = model.acceptable;
    slice.p_board = model.p_board;
    kernel(slice);
  };

  unsigned jobs = options.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.jobs;
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(params.c_max));

  if (jobs <= 1) {
    for (int t = 1; t <= params.t_max; ++t) run_slice(t, 1, params.c_max);
  } else {
    // Slice t reads only slice t-1; the barrier separates slices.
    std::barrier sync(static_cast<std::ptrdiff_t>(jobs));
    auto worker = [&](unsigned id) {
      const int span = params.c_max;
      const int lo = 1 + static_cast<int>(static_cast<long>(span) * id / jobs);
      const int hi = static_cast<int>(static_cast<long>(span) * (id + 1) / jobs);
      for (int t = 1; t <= params.t_max; ++t) {
        run_slice(t, lo, hi);
        sync.arrive_and_wait();
      }
    };
    std::vector<std::jthread> team;
    team.reserve(jobs);
    for (unsigned id = 0; id < jobs; ++id) team.emplace_back(worker, id);
  }

  return Solution{ValueTable(header, std::move(model), std::move(w)),
                  PolicyTable(header, std::move(actions))};
}

}  // namespace evac
