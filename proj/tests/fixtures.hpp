#pragma once

#include <unistd.h>

#include <filesystem>
#include <memory>
#include <string>

#include "evac/table_store.hpp"

namespace evac::testing {

/// Default-parameter Level I and IIb tables, solved once per test binary.
inline const std::shared_ptr<const TableStore>& default_store() {
  static const auto store = TableStore::solve_all(ModelParams{});
  return store;
}

/// Miniature instance: c_max 3, t_max 4, f in {1, 2}, three populated
/// categories (AMCIT, VULNERABLE, ISISK).
inline ModelParams mini_params() {
  ModelParams p;
  p.c_max = 3;
  p.t_max = 4;
  p.f_max = 2;
  p.populations = {2.0, 0.0, 0.0, 5.0, 1.0};
  p.family_mixture.means = {2.0, 1.0};
  p.family_mixture.sds = {0.7, 0.5};
  p.p_board = 0.8;
  return p;
}

/// Small but nontrivial instance for quick end-to-end checks.
inline ModelParams small_params() {
  ModelParams p;
  p.c_max = 40;
  p.t_max = 60;
  return p;
}

inline std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("evacplan_test_" + std::to_string(::getpid()) + "_" + name)).string();
}

}  // namespace evac::testing
