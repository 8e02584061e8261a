#include "arlp/kernels.hpp"

#include <cstdlib>
#include <string>

#include "arlp/errors.hpp"

namespace arlp::kernels {
namespace {

const Backend* g_active = nullptr;

const Backend& resolve(std::string_view name) {
  if (name == "scalar") return scalar_backend();
  if (name == "avx2") {
    if (!avx2_available())
      throw ConfigError("kernel backend 'avx2' is not available on this machine");
    return avx2_backend();
  }
  if (name == "auto") return avx2_available() ? avx2_backend() : scalar_backend();
  throw ConfigError("unknown kernel backend '" + std::string(name) +
                    "' (expected scalar, avx2 or auto)");
}

}  // namespace

bool avx2_available() {
#if defined(ARLP_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

#if !defined(ARLP_HAVE_AVX2)
// The AVX2 translation unit is only compiled on x86-64; give the symbol a
// body that refuses politely elsewhere.
const Backend& avx2_backend() {
  throw ConfigError("this build does not contain avx2 kernels");
}
#endif

const Backend& active() {
  if (!g_active) {
    const char* env = std::getenv("ARLP_KERNELS");
    g_active = &resolve(env && *env ? env : "auto");
  }
  return *g_active;
}

void select(std::string_view name) { g_active = &resolve(name); }

}  // namespace arlp::kernels
