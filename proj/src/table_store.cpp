#include "evac/table_store.hpp"

#include <filesystem>

#include "evac/table_io.hpp"

namespace evac {

std::string policy_file_name(Level level) {
  return "level_" + std::string(level_name(level)) + ".evpt";
}

std::string value_file_name(Level level) {
  return "level_" + std::string(level_name(level)) + ".evvt";
}

std::shared_ptr<const TableStore> TableStore::solve_all(const ModelParams& params,
                                                        const SolveOptions& options) {
  std::shared_ptr<TableStore> store(new TableStore(params));
  store->level_i_.emplace(solve(Level::kI, params, options));
  store->level_iib_.emplace(solve(Level::kIIb, params, options));
  store->attach_planners();
  return store;
}

std::shared_ptr<const TableStore> TableStore::load(const std::string& dir, const ModelParams& params,
                                                   const SolveOptions& options) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("tables directory not found: " + dir);
  std::shared_ptr<TableStore> store(new TableStore(params));
  const Digest digest = params_digest(params);
  for (Level level : {Level::kI, Level::kIIb}) {
    const fs::path policy_path = fs::path(dir) / policy_file_name(level);
    if (!fs::exists(policy_path)) continue;
    PolicyTable policy = load_policy(policy_path.string(), digest);
    if (policy.header().level != level) {
      throw DomainError(policy_path.string() + " holds a Level " +
                        std::string(level_name(policy.header().level)) + " table");
    }
    const fs::path value_path = fs::path(dir) / value_file_name(level);
    std::optional<Solution> sol;
    if (fs::exists(value_path)) {
      sol.emplace(Solution{load_values(value_path.string(), params), std::move(policy)});
    } else {
      Solution solved = solve(level, params, options);
      if (!(solved.policy == policy)) {
        throw DomainError(policy_path.string() + " disagrees with a fresh solve under these params");
      }
      sol.emplace(std::move(solved));
    }
    (level == Level::kI ? store->level_i_ : store->level_iib_) = std::move(sol);
  }
  store->attach_planners();
  return store;
}

void TableStore::attach_planners() {
  if (level_i_) planner_iia_.emplace(Level::kIIa, level_i_->values, params_);
  if (level_iib_) planner_iii_.emplace(Level::kIII, level_iib_->values, params_);
}

PolicyResources TableStore::resources() const {
  PolicyResources r;
  if (level_i_) r.level_i = &level_i_->policy;
  if (level_iib_) r.level_iib = &level_iib_->policy;
  if (planner_iia_) r.planner_iia = &*planner_iia_;
  if (planner_iii_) r.planner_iii = &*planner_iii_;
  return r;
}

Policy TableStore::make_policy(PolicyKind kind) const {
  return Policy(kind, resources(), PolicySettings::from_params(params_));
}

}  // namespace evac
