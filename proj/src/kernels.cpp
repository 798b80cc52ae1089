// kernel lane selection. resolved once on first use: SOFTFIN_KERNELS=scalar|avx2
// wins if set (requesting avx2 on a cpu without it is a hard error), otherwise
// the widest supported lane is used.

#include "softfin/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace softfin::kern {
namespace {

Backend g_backend = Backend::scalar;
bool g_resolved = false;

Backend resolve() {
  const char* env = std::getenv("SOFTFIN_KERNELS");
  if (env && *env) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!avx2_supported())
        throw std::runtime_error("SOFTFIN_KERNELS=avx2 but this cpu/build has no avx2 lane");
      return Backend::avx2;
    }
    throw std::runtime_error(std::string("unknown SOFTFIN_KERNELS value: ") + env);
  }
  return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

}  // namespace

bool avx2_supported() {
#if SOFTFIN_HAVE_AVX2_LANE
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend backend() {
  if (!g_resolved) {
    g_backend = resolve();
    g_resolved = true;
  }
  return g_backend;
}

void set_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_supported())
    throw std::runtime_error("avx2 kernel lane not available on this cpu/build");
  g_backend = b;
  g_resolved = true;
}

const char* backend_name() { return backend() == Backend::avx2 ? "avx2" : "scalar"; }

const Ops& ops() {
#if SOFTFIN_HAVE_AVX2_LANE
  return backend() == Backend::avx2 ? avx2_ops : scalar_ops;
#else
  backend();
  return scalar_ops;
#endif
}

}  // namespace softfin::kern
