#include <arm_neon.h>

#include "evac/backup_kernels.hpp"

namespace evac::kernels {

void backup_neon(const BackupSlice& s) {
  constexpr int kLanes = 2;
  const float64x2_t p_board = vdupq_n_f64(s.p_board);
  const float64x2_t stay = vdupq_n_f64(1.0 - s.p_board);
  const double* w_prev = s.w_prev.data();

  int c = s.c_lo;
  std::uint8_t* policy_row = s.policy;
  for (; c + kLanes - 1 <= s.c_hi; c += kLanes, policy_row += kLanes * s.policy_c_stride) {
    const float64x2_t prev = vld1q_f64(w_prev + (c - s.c_min));
    float64x2_t w = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (int f = 1; f <= s.f_max; ++f) {
      const float64x2_t shifted = vld1q_f64(w_prev + (c - f - s.c_min));
      const float64x2_t base = vaddq_f64(vmulq_f64(p_board, shifted), vmulq_f64(stay, prev));
      for (int v = 0; v < 5; ++v, ++i) {
        const float64x2_t q_accept = vaddq_f64(vdupq_n_f64(s.immediate[i]), base);
        uint64x2_t accept = vcgeq_f64(q_accept, prev);
        if (s.acceptable[i] == 0) accept = vdupq_n_u64(0);
        const float64x2_t value = vbslq_f64(accept, q_accept, prev);
        w = vaddq_f64(w, vmulq_f64(vdupq_n_f64(s.arrival[i]), value));
        policy_row[i] = static_cast<std::uint8_t>(vgetq_lane_u64(accept, 0) & 1);
        policy_row[s.policy_c_stride + i] = static_cast<std::uint8_t>(vgetq_lane_u64(accept, 1) & 1);
      }
    }
    vst1q_f64(s.w_cur.data() + (c - s.c_min), w);
  }

  if (c <= s.c_hi) {
    BackupSlice tail = s;
    tail.c_lo = c;
    tail.policy = policy_row;
    backup_scalar(tail);
  }
}

}  // namespace evac::kernels
