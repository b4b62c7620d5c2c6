#pragma once

// Little-endian table files.
//
//   offset  size  field
//   0       4     magic "EVPT" (policy) or "EVVT" (value)
//   4       2     format version (u16)
//   6       1     level tag (u8)
//   7       32    params digest (SHA-256)
//   39      16    dimensions c_range, t_range, f_range, v_range (4 x u32)
//   55      ...   payload, row-major (c, t, f, v) over nonterminal states:
//                 one byte per state (policy) or one f64 per state (value)

#include <optional>
#include <string>

#include "evac/dp_solver.hpp"

namespace evac {

inline constexpr std::uint16_t kTableFormatVersion = 1;

class TableFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_policy(const PolicyTable& table, const std::string& path);
/// With `expected` set, a digest mismatch raises DomainError.
PolicyTable load_policy(const std::string& path, const std::optional<Digest>& expected = {});

/// Writes dense per-state values derived from W.
void save_values(const ValueTable& table, const std::string& path);
/// Rebuilds W from the dense values using `params`, whose digest must match.
ValueTable load_values(const std::string& path, const ModelParams& params);

}  // namespace evac
