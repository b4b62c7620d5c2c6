#include "evac/backup_kernels.hpp"

#include <stdexcept>

namespace evac::kernels {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::kScalar};
#if defined(__x86_64__) || defined(_M_X64)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) out.push_back(Isa::kAvx2);
#endif
#if defined(__aarch64__)
  out.push_back(Isa::kNeon);
#endif
  return out;
}

Isa best_isa() { return available_isas().back(); }

BackupFn backup_kernel(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return &backup_scalar;
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::kAvx2: return &backup_avx2;
#endif
#if defined(__aarch64__)
    case Isa::kNeon: return &backup_neon;
#endif
    default: break;
  }
  throw std::invalid_argument("backup kernel not compiled for this architecture");
}

}  // namespace evac::kernels
