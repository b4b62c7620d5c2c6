#pragma once

// Solved tables and planners for one parameter set, shared read-only by the
// CLI and the exercise service. Heap-pinned: planners keep pointers into the
// value tables.

#include <memory>
#include <optional>
#include <string>

#include "evac/dp_solver.hpp"
#include "evac/policies.hpp"
#include "evac/pomcp.hpp"

namespace evac {

/// Canonical file name inside a tables directory, e.g. "level_I.evpt".
std::string policy_file_name(Level level);
std::string value_file_name(Level level);

class TableStore {
 public:
  TableStore(const TableStore&) = delete;
  TableStore& operator=(const TableStore&) = delete;

  /// Solves Level I and Level IIb in-process.
  static std::shared_ptr<const TableStore> solve_all(const ModelParams& params,
                                                     const SolveOptions& options = {});

  /// Loads whichever policy tables exist in `dir` (digests must match
  /// `params`). Value tables come from the matching .evvt file when present,
  /// otherwise they are re-solved and the result is checked against the
  /// loaded policy.
  static std::shared_ptr<const TableStore> load(const std::string& dir, const ModelParams& params,
                                                const SolveOptions& options = {});

  const ModelParams& params() const { return params_; }
  const Solution* level_i() const { return level_i_ ? &*level_i_ : nullptr; }
  const Solution* level_iib() const { return level_iib_ ? &*level_iib_ : nullptr; }

  PolicyResources resources() const;

  /// Throws DomainError naming the missing table.
  Policy make_policy(PolicyKind kind) const;

 private:
  explicit TableStore(const ModelParams& params) : params_(params) {}
  void attach_planners();

  ModelParams params_;
  std::optional<Solution> level_i_;
  std::optional<Solution> level_iib_;
  std::optional<PomcpPlanner> planner_iia_;
  std::optional<PomcpPlanner> planner_iii_;
};

}  // namespace evac
