// Compiled with -mavx2; only reached after a runtime CPU check.
#include <immintrin.h>

#include "evac/backup_kernels.hpp"

namespace evac::kernels {

void backup_avx2(const BackupSlice& s) {
  constexpr int kLanes = 4;
  const double stay_s = 1.0 - s.p_board;
  const __m256d p_board = _mm256_set1_pd(s.p_board);
  const __m256d stay = _mm256_set1_pd(stay_s);
  const double* w_prev = s.w_prev.data();

  int c = s.c_lo;
  std::uint8_t* policy_row = s.policy;
  for (; c + kLanes - 1 <= s.c_hi; c += kLanes, policy_row += kLanes * s.policy_c_stride) {
    const __m256d prev = _mm256_loadu_pd(w_prev + (c - s.c_min));
    __m256d w = _mm256_setzero_pd();
    std::size_t i = 0;
    for (int f = 1; f <= s.f_max; ++f) {
      const __m256d shifted = _mm256_loadu_pd(w_prev + (c - f - s.c_min));
      const __m256d base =
          _mm256_add_pd(_mm256_mul_pd(p_board, shifted), _mm256_mul_pd(stay, prev));
      for (int v = 0; v < 5; ++v, ++i) {
        const __m256d q_accept = _mm256_add_pd(_mm256_set1_pd(s.immediate[i]), base);
        __m256d accept = _mm256_cmp_pd(q_accept, prev, _CMP_GE_OQ);
        if (s.acceptable[i] == 0) accept = _mm256_setzero_pd();
        const __m256d value = _mm256_blendv_pd(prev, q_accept, accept);
        w = _mm256_add_pd(w, _mm256_mul_pd(_mm256_set1_pd(s.arrival[i]), value));
        const int bits = _mm256_movemask_pd(accept);
        for (int lane = 0; lane < kLanes; ++lane) {
          policy_row[lane * s.policy_c_stride + i] = static_cast<std::uint8_t>((bits >> lane) & 1);
        }
      }
    }
    _mm256_storeu_pd(s.w_cur.data() + (c - s.c_min), w);
  }

  if (c <= s.c_hi) {
    BackupSlice tail = s;
    tail.c_lo = c;
    tail.policy = policy_row;
    backup_scalar(tail);
  }
}

}  // namespace evac::kernels
