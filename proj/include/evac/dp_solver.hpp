#pragma once

// Exact backward induction for the fully observed (Level I) and claim-weighted
// (Level IIb) evacuation MDPs.
//
// Arrivals are i.i.d., so the value of a state splits into the immediate
// reward plus the marginal continuation W(c, t) = E_{f,v}[V(c, t, f, v)].
// The solver only iterates W over (c, t); dense per-state values are derived
// from W on demand.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evac/backup_kernels.hpp"
#include "evac/digest.hpp"
#include "evac/domain.hpp"

namespace evac {

/// Stable 8-bit tags used in table headers.
enum class Level : std::uint8_t { kI = 1, kIIa = 2, kIIb = 3, kIII = 4 };

std::string_view level_name(Level level);
std::optional<Level> parse_level(std::string_view name);

struct TableHeader {
  Level level = Level::kI;
  Digest digest{};
  StateSpace space{1, 1, 1};

  friend bool operator==(const TableHeader&, const TableHeader&) = default;
};

struct QValues {
  double accept = 0.0;
  double reject = 0.0;
};

/// Per-arrival quantities the induction needs: ACCEPT reward, arrival
/// probability and whether ACCEPT is defined, each indexed (f-1)·5 + v.
struct ArrivalModel {
  std::vector<double> immediate;
  std::vector<double> probability;
  std::vector<std::uint8_t> acceptable;
  double p_board = 1.0;

  static ArrivalModel build(Level level, const ModelParams& params);
};

class ValueTable {
 public:
  ValueTable(TableHeader header, ArrivalModel model, std::vector<double> continuation);

  const TableHeader& header() const { return header_; }
  const StateSpace& space() const { return header_.space; }
  const ArrivalModel& model() const { return model_; }

  /// W(c, t); zero for t = 0 or c <= 0.
  double continuation(int c, int t) const {
    return w_[static_cast<std::size_t>(t) * space().c_range() +
              static_cast<std::size_t>(c - space().c_min())];
  }
  /// Row-major (t, c) storage of W.
  const std::vector<double>& continuation_table() const { return w_; }

  /// Throws DomainError at TERMINAL and where ACCEPT is undefined.
  QValues q_values(const EvacState& state) const;
  /// Optimal value; 0 at TERMINAL and pre-terminal states.
  double value(const EvacState& state) const;

  friend bool operator==(const ValueTable&, const ValueTable&) = default;

 private:
  TableHeader header_;
  ArrivalModel model_;
  std::vector<double> w_;
};

class PolicyTable {
 public:
  PolicyTable(TableHeader header, std::vector<std::uint8_t> actions);

  const TableHeader& header() const { return header_; }
  const StateSpace& space() const { return header_.space; }
  /// One byte per nonterminal state in state-index order (1 = ACCEPT).
  const std::vector<std::uint8_t>& actions() const { return actions_; }

  /// REJECT at TERMINAL and at pre-terminal states.
  Action lookup(const EvacState& state) const;

  friend bool operator==(const PolicyTable&, const PolicyTable&) = default;

 private:
  TableHeader header_;
  std::vector<std::uint8_t> actions_;
};

struct Solution {
  ValueTable values;
  PolicyTable policy;
};

struct SolveOptions {
  /// Worker threads splitting each time slice by capacity; 0 = hardware.
  unsigned jobs = 1;
  std::optional<kernels::Isa> isa;
};

/// Level must be kI or kIIb.
Solution solve(Level level, const ModelParams& params, const SolveOptions& options = {});

/// Checks that `params` hashes to the table's digest.
void require_matching_params(const TableHeader& header, const ModelParams& params);

Action lookup(const PolicyTable& policy, const EvacState& state);
QValues q_values(const ValueTable& values, const EvacState& state, const ModelParams& params);

/// Actions over all (f, v) at a fixed (c, t); rows[f-1][v].
struct PolicyGrid {
  int capacity = 0;
  int time = 0;
  std::vector<std::array<Action, kNumCategories>> rows;
};

PolicyGrid policy_grid(const PolicyTable& policy, int capacity, int time);

}  // namespace evac
