#include "frank/kernels.hpp"

#include <cmath>

namespace frank::kernels {

namespace {

double accum_scalar(const double* m, const double* d, std::size_t n, double theta) {
  double sum_d = 0.0;
  double sum_log_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double b = -std::expm1(-theta * (1.0 - m[i])) +
                     std::exp(-theta * d[i]) * (-std::expm1(-theta * m[i]));
    sum_d += d[i];
    sum_log_b += std::log(b);
  }
  return -theta * sum_d - 2.0 * sum_log_b;
}

}  // namespace

const Backend& scalar_backend() {
  static const Backend b{"scalar", &accum_scalar};
  return b;
}

}  // namespace frank::kernels
