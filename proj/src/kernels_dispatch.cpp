#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "bbm/kernels.hpp"

namespace bbm::kernels {

namespace {
const Backend* g_active = nullptr;

const Backend& detect() {
  if (avx2_supported()) return avx2_backend();
  return scalar_backend();
}
}  // namespace

bool avx2_supported() {
#if defined(BBM_HAVE_AVX2_TU) && (defined(__x86_64__) || defined(_M_X64))
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

const Backend& active() {
  if (g_active == nullptr) {
    const char* env = std::getenv("BBM_KERNELS");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) {
      g_active = &scalar_backend();
    } else if (env != nullptr && std::strcmp(env, "avx2") == 0) {
      if (!avx2_supported())
        throw std::runtime_error("BBM_KERNELS=avx2 but AVX2 is unavailable");
      g_active = &avx2_backend();
    } else {
      g_active = &detect();
    }
  }
  return *g_active;
}

void set_backend(const char* name) {
  if (std::strcmp(name, "auto") == 0) {
    g_active = &detect();
  } else if (std::strcmp(name, "scalar") == 0) {
    g_active = &scalar_backend();
  } else if (std::strcmp(name, "avx2") == 0) {
    if (!avx2_supported())
      throw std::runtime_error("AVX2 backend requested but unavailable");
    g_active = &avx2_backend();
  } else {
    throw std::invalid_argument("unknown kernel backend name");
  }
}

}  // namespace bbm::kernels
