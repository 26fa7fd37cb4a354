// Core bivariate Frank copula: density, CDF, the Kendall distribution
// function K, Debye integrals, dependence-measure maps and their inverses,
// and exact conditional-inversion sampling.
//
// Parameterization: for association parameter theta != 0,
//
//   c(u,v|theta) = theta (1 - e^{-theta}) e^{-theta(u+v)} / A2^2,
//   A2           = e^{-theta u} + e^{-theta v} - e^{-theta} - e^{-theta(u+v)},
//   C(u,v|theta) = -(1/theta) log[1 + (e^{-theta u}-1)(e^{-theta v}-1)/(e^{-theta}-1)],
//
// with the independence limits c = 1, C = uv as theta -> 0.  theta > 0 gives
// positive association, theta < 0 negative; the family is reflection
// symmetric: c(u, 1-v | theta) = c(u, v | -theta).
//
// All evaluation routines are limit-safe: |theta| < kThetaEps switches to
// second-order Taylor branches; density and CDF route negative theta through
// the reflection identity above, and the Kendall distribution (which does
// not reflect) uses a dedicated cancellation-free rearrangement, so the
// exp/expm1 arguments never overflow.
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "frank/rng.hpp"

namespace frank {

// Below this magnitude every theta-dependent quantity uses its Taylor branch.
inline constexpr double kThetaEps = 1e-5;

struct UnitPair {
  double u;
  double v;
};

struct DebyeValues {
  double d1;  // D1(theta) = (1/theta) Int_0^theta t/(e^t - 1) dt
  double d2;  // D2(theta) = (2/theta^2) Int_0^theta t^2/(e^t - 1) dt
};

// log c(u,v|theta).  Requires u,v strictly inside (0,1); throws
// std::domain_error otherwise or for non-finite theta.
double log_density(double u, double v, double theta);
double density(double u, double v, double theta);

// C(u,v|theta).  Boundary values are permitted here (C(0,v)=0, C(1,v)=v, ...);
// throws std::domain_error outside the closed unit square.
double cdf(double u, double v, double theta);

// Kendall distribution function K(t|theta) = P(C(U,V) <= t) and its density
// k(t|theta) = dK/dt.  k_cdf clamps to 1 for t >= 1 (the simplified
// Cramer-von Mises sum evaluates K at (n+1)/n); t <= 0 is a domain error.
// k_density requires t strictly inside (0,1).
double k_cdf(double t, double theta);
double k_density(double t, double theta);

// Debye integrals of order 1 and 2; series branch for small |theta|,
// adaptive Gauss-Kronrod otherwise, absolute error <= 1e-10.
DebyeValues debye_integrals(double theta);

// Population dependence measures: both odd, strictly increasing, 0 at 0.
//   kendall_tau(theta)  = 1 - (4/theta)  {1 - D1(theta)}
//   spearman_rho(theta) = 1 - (12/theta) {D1(theta) - D2(theta)}
double kendall_tau(double theta);
double spearman_rho(double theta);

// Inverse maps (used by the moment estimators).  |target| < 1 required;
// result satisfies map(result) = target to ~1e-10.
double invert_kendall_tau(double target);
double invert_spearman_rho(double target);

// One draw by conditional inversion: u = U1, and V solved in closed form
// from dC/du (v|u) = U2.  Consumes exactly two uniforms per pair, in the
// order (u, w), so streams are reproducible.
UnitPair sample_pair(Rng& rng, double theta);
std::vector<UnitPair> sample(std::size_t n, double theta, Rng& rng);
std::vector<UnitPair> sample(std::size_t n, double theta, std::uint64_t seed);

// (u,v) -> (u,1-v): flips the sign of the association.
UnitPair reflect(UnitPair p);
std::vector<UnitPair> reflect(const std::vector<UnitPair>& pairs);

namespace detail {
// Shared positive-theta building block: with m = min(u,v), d = |u-v|,
//   A2 = e^{-theta m} * B,   B = -expm1(-theta(1-m)) + e^{-theta d} * (-expm1(-theta m)),
// both summands nonnegative, so B carries no cancellation.
double log_b_factor(double m, double d, double theta);
// log(theta) + log(1 - e^{-theta}) for theta > 0: the per-observation
// constant of the log density.
double log_density_const(double theta);
}  // namespace detail

}  // namespace frank
