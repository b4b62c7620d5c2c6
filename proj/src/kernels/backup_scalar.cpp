#include "evac/backup_kernels.hpp"

namespace evac::kernels {

void backup_scalar(const BackupSlice& s) {
  const double stay = 1.0 - s.p_board;
  std::uint8_t* policy_row = s.policy;
  for (int c = s.c_lo; c <= s.c_hi; ++c, policy_row += s.policy_c_stride) {
    const double prev = s.w_prev[static_cast<std::size_t>(c - s.c_min)];
    double w = 0.0;
    std::size_t i = 0;
    for (int f = 1; f <= s.f_max; ++f) {
      const double shifted = s.w_prev[static_cast<std::size_t>(c - f - s.c_min)];
      const double base = s.p_board * shifted + stay * prev;
      for (int v = 0; v < 5; ++v, ++i) {
        const double q_accept = s.immediate[i] + base;
        const bool accept = s.acceptable[i] != 0 && q_accept >= prev;
        const double value = accept ? q_accept : prev;
        w += s.arrival[i] * value;
        policy_row[i] = accept ? 1 : 0;
      }
    }
    s.w_cur[static_cast<std::size_t>(c - s.c_min)] = w;
  }
}

}  // namespace evac::kernels
