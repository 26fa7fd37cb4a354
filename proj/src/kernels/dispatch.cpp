#include "frank/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace frank::kernels {

#ifdef FRANK_HAVE_AVX2
const Backend& avx2_backend_impl();        // kernels_avx2.cpp
void avx2_exp4_impl(const double*, double*);
void avx2_log4_impl(const double*, double*);
#endif

const Backend* avx2_backend() {
#ifdef FRANK_HAVE_AVX2
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return &avx2_backend_impl();
  }
#endif
  return nullptr;
}

const Backend& backend() {
  static const Backend& chosen = []() -> const Backend& {
    if (const char* env = std::getenv("FRANK_KERNELS")) {
      const std::string s(env);
      if (s == "scalar") return scalar_backend();
      if (s == "avx2") {
        if (const Backend* b = avx2_backend()) return *b;
        throw std::runtime_error(
            "FRANK_KERNELS=avx2 requested but AVX2+FMA is unavailable");
      }
      throw std::runtime_error("FRANK_KERNELS must be 'scalar' or 'avx2'");
    }
    const Backend* b = avx2_backend();
    return b != nullptr ? *b : scalar_backend();
  }();
  return chosen;
}

bool avx2_exp4(const double in[4], double out[4]) {
#ifdef FRANK_HAVE_AVX2
  if (avx2_backend() != nullptr) {
    avx2_exp4_impl(in, out);
    return true;
  }
#endif
  (void)in;
  (void)out;
  return false;
}

bool avx2_log4(const double in[4], double out[4]) {
#ifdef FRANK_HAVE_AVX2
  if (avx2_backend() != nullptr) {
    avx2_log4_impl(in, out);
    return true;
  }
#endif
  (void)in;
  (void)out;
  return false;
}

}  // namespace frank::kernels
