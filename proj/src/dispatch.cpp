#include "lmd/simd/dispatch.hpp"

#include <cstdlib>
#include <cstring>

namespace lmd::simd {
namespace {

struct Selection {
  const Kernels* table;
  const char* isa;
};

Selection select() {
  const char* forced = std::getenv("LMD_ISA");
  if (forced && std::strcmp(forced, "scalar") == 0)
    return {&scalar_kernels(), "scalar"};
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    const Kernels* avx = &avx2_kernels();
    if (avx != &scalar_kernels()) return {avx, "avx2"};
  }
#endif
  return {&scalar_kernels(), "scalar"};
}

const Selection& selection() {
  static const Selection s = select();
  return s;
}

}  // namespace

const Kernels& kernels() { return *selection().table; }
const char* active_isa() { return selection().isa; }

}  // namespace lmd::simd
