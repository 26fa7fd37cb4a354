#include "frank/copula.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace frank {

namespace {

void require_interior(double u, double v) {
  if (!(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0)) {
    throw std::domain_error("frank: (u,v) must lie strictly inside the unit square");
  }
}

void require_finite_theta(double theta) {
  if (!std::isfinite(theta)) {
    throw std::domain_error("frank: theta must be finite");
  }
}

// Largest |theta| for which the exp/expm1-based branches are evaluated
// directly; far beyond every tabulated value and the MLE search bounds.
constexpr double kThetaMax = 500.0;

void require_theta_range(double theta) {
  require_finite_theta(theta);
  if (std::abs(theta) > kThetaMax) {
    throw std::domain_error("frank: |theta| > 500 unsupported");
  }
}

// log(1 - e^{-x}) for x > 0, accurate at both ends (branch switch at ln 2).
double log1mexp(double x) {
  return x <= 0.6931471805599453 ? std::log(-std::expm1(-x))
                                 : std::log1p(-std::exp(-x));
}

}  // namespace

namespace detail {

double log_b_factor(double m, double d, double theta) {
  const double b = -std::expm1(-theta * (1.0 - m)) +
                   std::exp(-theta * d) * (-std::expm1(-theta * m));
  return std::log(b);
}

double log_density_const(double theta) {
  return std::log(theta) + std::log(-std::expm1(-theta));
}

}  // namespace detail

double log_density(double u, double v, double theta) {
  require_interior(u, v);
  require_theta_range(theta);
  if (std::abs(theta) < kThetaEps) {
    // log c = theta (2uv - u - v + 1/2) + theta^2 {uv(u-1)(v-1) - 1/24}
    const double g1 = 2.0 * u * v - u - v + 0.5;
    const double g2 = u * v * (u - 1.0) * (v - 1.0) - 1.0 / 24.0;
    return theta * (g1 + theta * g2);
  }
  if (theta < 0.0) {
    v = 1.0 - v;
    theta = -theta;
  }
  const double m = std::min(u, v);
  const double d = std::abs(u - v);
  return detail::log_density_const(theta) - theta * d -
         2.0 * detail::log_b_factor(m, d, theta);
}

double density(double u, double v, double theta) {
  return std::exp(log_density(u, v, theta));
}

double cdf(double u, double v, double theta) {
  require_theta_range(theta);
  if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) {
    throw std::domain_error("frank: (u,v) must lie inside the closed unit square");
  }
  if (u == 0.0 || v == 0.0) return 0.0;
  if (u == 1.0) return v;
  if (v == 1.0) return u;
  if (std::abs(theta) < kThetaEps) {
    const double base = u * v * (1.0 - u) * (1.0 - v);
    // uv + (theta/2) uv(1-u)(1-v) + (theta^2/12) uv(1-u)(1-v)(2u-1)(2v-1)
    return u * v + 0.5 * theta * base +
           theta * theta / 12.0 * base * (2.0 * u - 1.0) * (2.0 * v - 1.0);
  }
  if (theta < 0.0) {
    return u - cdf(u, 1.0 - v, -theta);
  }
  const double m = std::min(u, v);
  const double d = std::abs(u - v);
  const double log_b = detail::log_b_factor(m, d, theta);
  const double c = m - (log_b - std::log(-std::expm1(-theta))) / theta;
  return std::clamp(c, 0.0, 1.0);
}

double k_cdf(double t, double theta) {
  require_theta_range(theta);
  if (t <= 0.0) {
    throw std::domain_error("frank: k_cdf requires t > 0");
  }
  if (t >= 1.0) return 1.0;
  if (std::abs(theta) < kThetaEps) {
    const double lt = std::log(t);
    const double k0 = t - t * lt;
    const double k1 = -0.5 * t * t * lt + 0.5 * (t * t - t);
    const double k2 = -t * t * t * lt / 6.0 + 5.0 * t * t * t / 24.0 -
                      0.25 * t * t + t / 24.0;
    return k0 + theta * (k1 + theta * k2);
  }
  if (theta < 0.0) {
    // Same closed form with s = -theta > 0:
    //   K(t,-s) = t + {(1-e^{-st})/s} [s(1-t) + log(1-e^{-s}) - log(1-e^{-st})]
    // Both bracket terms are positive, so no cancellation for any s, t.
    const double s = -theta;
    const double bracket = s * (1.0 - t) + log1mexp(s) - log1mexp(s * t);
    const double k = t + (-std::expm1(-s * t)) / s * bracket;
    return std::clamp(k, 0.0, 1.0);
  }
  // K(t) = t + {e^{theta t}-1}/theta * log[1 + (e^{-theta t} - e^{-theta})/(1 - e^{-theta t})]
  const double frac =
      (std::exp(-theta * t) - std::exp(-theta)) / (-std::expm1(-theta * t));
  const double k = t + std::expm1(theta * t) / theta * std::log1p(frac);
  return std::clamp(k, 0.0, 1.0);
}

double k_density(double t, double theta) {
  require_theta_range(theta);
  if (!(t > 0.0 && t < 1.0)) {
    throw std::domain_error("frank: k_density requires t strictly inside (0,1)");
  }
  if (std::abs(theta) < kThetaEps) {
    const double lt = std::log(t);
    const double k0 = -lt;
    const double k1 = -t * lt + 0.5 * (t - 1.0);
    const double k2 = -0.5 * t * t * lt + 11.0 * t * t / 24.0 - 0.5 * t + 1.0 / 24.0;
    return k0 + theta * (k1 + theta * k2);
  }
  if (theta < 0.0) {
    // k(t,-s) = e^{-st} [s(1-t) + log(1-e^{-s}) - log(1-e^{-st})], s = -theta
    const double s = -theta;
    return std::exp(-s * t) * (s * (1.0 - t) + log1mexp(s) - log1mexp(s * t));
  }
  // k(t) = e^{theta t} log[(1 - e^{-theta})/(1 - e^{-theta t})]
  return std::exp(theta * t) * (log1mexp(theta) - log1mexp(theta * t));
}

namespace {

double debye_quadrature(double x, int order) {
  using boost::math::quadrature::gauss_kronrod;
  const auto integrand = [order](double t) {
    if (t < 1e-12) {
      // t^order / (e^t - 1) -> t^{order-1} (1 - t/2 + ...)
      return order == 1 ? 1.0 - 0.5 * t : t * (1.0 - 0.5 * t);
    }
    const double p = order == 1 ? t : t * t;
    return p / std::expm1(t);
  };
  return gauss_kronrod<double, 61>::integrate(integrand, 0.0, x, 10, 1e-13);
}

}  // namespace

DebyeValues debye_integrals(double theta) {
  require_finite_theta(theta);
  const double x = std::abs(theta);
  double d1, d2;
  if (x < 0.1) {
    // Bernoulli-number series; next terms are O(x^8) < 1e-14 at x = 0.1.
    const double x2 = theta * theta;
    d1 = 1.0 - theta / 4.0 +
         x2 * (1.0 / 36.0 + x2 * (-1.0 / 3600.0 + x2 / 211680.0));
    d2 = 1.0 - theta / 3.0 +
         x2 * (1.0 / 24.0 + x2 * (-1.0 / 2160.0 + x2 / 120960.0));
  } else {
    d1 = debye_quadrature(x, 1) / x;
    d2 = 2.0 * debye_quadrature(x, 2) / (x * x);
    if (theta < 0.0) {
      // D1(-x) = D1(x) + x/2, D2(-x) = D2(x) + 2x/3 for x > 0.
      d1 += 0.5 * x;
      d2 += 2.0 * x / 3.0;
    }
  }
  return {d1, d2};
}

double kendall_tau(double theta) {
  require_finite_theta(theta);
  if (std::abs(theta) < 0.01) {
    const double t2 = theta * theta;
    return theta * (1.0 / 9.0 + t2 * (-1.0 / 900.0 + t2 / 52920.0));
  }
  return 1.0 - 4.0 / theta * (1.0 - debye_integrals(theta).d1);
}

double spearman_rho(double theta) {
  require_finite_theta(theta);
  if (std::abs(theta) < 0.01) {
    const double t2 = theta * theta;
    return theta * (1.0 / 6.0 + t2 * (-1.0 / 450.0 + t2 / 23520.0));
  }
  const DebyeValues d = debye_integrals(theta);
  return 1.0 - 12.0 / theta * (d.d1 - d.d2);
}

namespace {

template <class Map>
double invert_monotone(double target, Map map, const char* what) {
  if (!(std::abs(target) < 1.0)) {
    throw std::invalid_argument(std::string("frank: ") + what +
                                " target must lie strictly inside (-1,1)");
  }
  if (target == 0.0) return 0.0;
  const double p = std::abs(target);
  double lo = 0.0;
  double hi = 1.0;
  while (map(hi) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) {
      throw std::invalid_argument(std::string("frank: ") + what +
                                  " target too close to +/-1");
    }
  }
  boost::math::tools::eps_tolerance<double> tol(48);
  std::uintmax_t max_iter = 200;
  const auto r = boost::math::tools::toms748_solve(
      [&](double th) { return map(th) - p; }, lo, hi, tol, max_iter);
  const double root = 0.5 * (r.first + r.second);
  return target < 0.0 ? -root : root;
}

}  // namespace

double invert_kendall_tau(double target) {
  return invert_monotone(target, [](double th) { return kendall_tau(th); },
                         "invert_kendall_tau");
}

double invert_spearman_rho(double target) {
  return invert_monotone(target, [](double th) { return spearman_rho(th); },
                         "invert_spearman_rho");
}

namespace {

// Closed-form conditional inverse for theta > 0: solves dC/du(v|u) = w.
double conditional_inverse_pos(double theta, double u, double w) {
  const double a = std::exp(-theta * u);
  const double z = std::exp(-theta);
  const double num = (1.0 - w) * a + w * z;
  const double den = (1.0 - w) * a + w;
  double v = -std::log(num / den) / theta;
  // num/den in (z,1) guarantees v in (0,1); clamp only against FP rounding.
  return std::clamp(v, 1e-16, 1.0 - 1e-16);
}

}  // namespace

UnitPair sample_pair(Rng& rng, double theta) {
  require_theta_range(theta);
  const double u = rng.u01();
  const double w = rng.u01();
  if (std::abs(theta) < kThetaEps) {
    return {u, w};
  }
  if (theta > 0.0) {
    return {u, conditional_inverse_pos(theta, u, w)};
  }
  return {u, 1.0 - conditional_inverse_pos(-theta, u, w)};
}

std::vector<UnitPair> sample(std::size_t n, double theta, Rng& rng) {
  std::vector<UnitPair> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(sample_pair(rng, theta));
  }
  return out;
}

std::vector<UnitPair> sample(std::size_t n, double theta, std::uint64_t seed) {
  Rng rng(seed, 0);
  return sample(n, theta, rng);
}

UnitPair reflect(UnitPair p) { return {p.u, 1.0 - p.v}; }

std::vector<UnitPair> reflect(const std::vector<UnitPair>& pairs) {
  std::vector<UnitPair> out;
  out.reserve(pairs.size());
  for (const UnitPair& p : pairs) out.push_back(reflect(p));
  return out;
}

}  // namespace frank
