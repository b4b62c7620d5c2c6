#pragma once

// One backward-induction time slice: given W(·, t-1) over all capacities,
// compute W(c, t) and the greedy action for every (f, v) arrival at each
// capacity c in [c_lo, c_hi].
//
//   Q_reject = W(c, t-1)
//   Q_accept = r(f, v) + (p·W(c-f, t-1) + (1-p)·W(c, t-1))
//   W(c, t)  = Σ_{f,v} P(f, v) · max(Q_accept, Q_reject)      (ACCEPT on ties)
//
// Every variant evaluates exactly these operations in exactly this order per
// capacity, so results are bit-identical across variants (the build disables
// FMA contraction).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace evac::kernels {

struct BackupSlice {
  /// W(·, t-1) indexed by c - c_min; entries for c <= 0 must be zero.
  std::span<const double> w_prev;
  /// W(·, t) indexed by c - c_min; only [c_lo, c_hi] is written.
  std::span<double> w_cur;
  /// Policy byte of (c_lo, t, f=1, v=0); consecutive capacities are
  /// `policy_c_stride` bytes apart and the 5·f_max arrivals are contiguous.
  std::uint8_t* policy = nullptr;
  std::size_t policy_c_stride = 0;
  int c_min = 0;
  int c_lo = 1;
  int c_hi = 0;
  int f_max = 0;
  /// Immediate ACCEPT reward per arrival, index (f-1)·5 + v.
  std::span<const double> immediate;
  /// Arrival probability per (f, v).
  std::span<const double> arrival;
  /// 0 forces REJECT (ACCEPT undefined for that arrival).
  std::span<const std::uint8_t> acceptable;
  double p_board = 1.0;
};

using BackupFn = void (*)(const BackupSlice&);

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);

/// Variants compiled in and supported by the running CPU, scalar first.
std::vector<Isa> available_isas();
Isa best_isa();
BackupFn backup_kernel(Isa isa);

void backup_scalar(const BackupSlice& s);
#if defined(__x86_64__) || defined(_M_X64)
void backup_avx2(const BackupSlice& s);
#endif
#if defined(__aarch64__)
void backup_neon(const BackupSlice& s);
#endif

}  // namespace evac::kernels
