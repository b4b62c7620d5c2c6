#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "evac/domain.hpp"

namespace evac {

using Digest = std::array<std::uint8_t, 32>;

/// SHA-256 over the canonical JSON of every field that shapes the MDP
/// (dimensions, rewards, populations, boarding, epsilon, family mixture,
/// claim matrix). Planner and heuristic knobs are excluded so tuning them
/// does not invalidate solved tables.
Digest params_digest(const ModelParams& params);

std::string to_hex(const Digest& digest);

}  // namespace evac
