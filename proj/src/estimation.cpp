#include "frank/estimation.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "frank/kernels.hpp"
#include "frank/stats.hpp"

namespace frank {

const char* method_name(Method m) {
  switch (m) {
    case Method::MLE_LOGLIK: return "mle_loglik";
    case Method::MLE_SCORE: return "mle_score";
    case Method::MME1: return "mme1";
    case Method::MME2: return "mme2";
    case Method::BFPE: return "bfpe";
    case Method::BJPE: return "bjpe";
  }
  return "?";
}

PreparedSample PreparedSample::from(const std::vector<UnitPair>& pairs) {
  PreparedSample ps;
  ps.n = pairs.size();
  ps.u.reserve(ps.n);
  ps.v.reserve(ps.n);
  ps.mp.reserve(ps.n);
  ps.dp.reserve(ps.n);
  ps.mn.reserve(ps.n);
  ps.dn.reserve(ps.n);
  for (const UnitPair& p : pairs) {
    if (!(p.u > 0.0 && p.u < 1.0 && p.v > 0.0 && p.v < 1.0)) {
      throw std::domain_error("frank: sample pairs must lie strictly inside (0,1)^2");
    }
    ps.u.push_back(p.u);
    ps.v.push_back(p.v);
    ps.mp.push_back(std::min(p.u, p.v));
    ps.dp.push_back(std::abs(p.u - p.v));
    const double vr = 1.0 - p.v;
    ps.mn.push_back(std::min(p.u, vr));
    ps.dn.push_back(std::abs(p.u - vr));
    ps.sum_u += p.u;
    ps.sum_v += p.v;
  }
  return ps;
}

namespace {

double loglik_series(const PreparedSample& ps, double theta) {
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < ps.n; ++i) {
    const double u = ps.u[i], v = ps.v[i];
    s1 += 2.0 * u * v - u - v + 0.5;
    s2 += u * v * (u - 1.0) * (v - 1.0) - 1.0 / 24.0;
  }
  return theta * (s1 + theta * s2);
}

double loglik_branch(const PreparedSample& ps, double theta,
                     const kernels::Backend& kb) {
  if (!std::isfinite(theta) || std::abs(theta) > 500.0) {
    throw std::domain_error("frank: log_likelihood requires |theta| <= 500");
  }
  if (std::abs(theta) < kThetaEps) {
    return loglik_series(ps, theta);
  }
  const bool pos = theta > 0.0;
  const double th = std::abs(theta);
  const double* m = pos ? ps.mp.data() : ps.mn.data();
  const double* d = pos ? ps.dp.data() : ps.dn.data();
  return static_cast<double>(ps.n) * detail::log_density_const(th) +
         kb.accum(m, d, ps.n, th);
}

}  // namespace

double log_likelihood(const PreparedSample& ps, double theta) {
  return loglik_branch(ps, theta, kernels::backend());
}

double log_likelihood(const std::vector<UnitPair>& data, double theta) {
  return log_likelihood(PreparedSample::from(data), theta);
}

std::vector<double> log_likelihood_grid(const PreparedSample& ps,
                                        const std::vector<double>& nodes) {
  const kernels::Backend& kb = kernels::backend();
  std::vector<double> out;
  out.reserve(nodes.size());
  for (double th : nodes) out.push_back(loglik_branch(ps, th, kb));
  return out;
}

namespace {

// Positive-theta score core; sums A1_i/A2_i in the cancellation-free
// factored form (common factor e^{-theta m} divided out of A1 and A2).
double score_pos(const double* m, const double* d, std::size_t n, double sum_uv,
                 double theta) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double mi = m[i], di = d[i];
    const double big = mi + di;  // max(u,v)
    const double ed = std::exp(-theta * di);
    const double b = -std::expm1(-theta * (1.0 - mi)) + ed * (-std::expm1(-theta * mi));
    const double a1 = mi + big * ed - std::exp(-theta * (1.0 - mi)) -
                      (mi + big) * std::exp(-theta * big);
    s += a1 / b;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return 1.0 / theta + 1.0 / std::expm1(theta) - sum_uv * inv_n +
         2.0 * inv_n * s;
}

}  // namespace

double score(const PreparedSample& ps, double theta) {
  if (!std::isfinite(theta) || std::abs(theta) > 500.0) {
    throw std::domain_error("frank: score requires |theta| <= 500");
  }
  if (std::abs(theta) < kThetaEps) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < ps.n; ++i) {
      const double u = ps.u[i], v = ps.v[i];
      s1 += 2.0 * u * v - u - v + 0.5;
      s2 += 2.0 * u * v * (u - 1.0) * (v - 1.0) - 1.0 / 12.0;
    }
    const double inv_n = 1.0 / static_cast<double>(ps.n);
    return inv_n * s1 + theta * inv_n * s2;
  }
  if (theta > 0.0) {
    return score_pos(ps.mp.data(), ps.dp.data(), ps.n, ps.sum_u + ps.sum_v, theta);
  }
  // Reflection antisymmetry: H(data, theta) = -H(reflected data, -theta).
  const double sum_refl = ps.sum_u + (static_cast<double>(ps.n) - ps.sum_v);
  return -score_pos(ps.mn.data(), ps.dn.data(), ps.n, sum_refl, -theta);
}

double score(const std::vector<UnitPair>& data, double theta) {
  return score(PreparedSample::from(data), theta);
}

namespace {

EstimatorResult mle_loglik_max(const PreparedSample& ps) {
  constexpr std::uintmax_t kMaxIter = 200;
  std::uintmax_t iter = kMaxIter;  // on exit: iterations actually used
  const auto r = boost::math::tools::brent_find_minima(
      [&](double th) { return -log_likelihood(ps, th); }, -kMleBound, kMleBound,
      30, iter);
  EstimatorResult res;
  res.estimate = r.first;
  res.method = Method::MLE_LOGLIK;
  res.iterations = static_cast<int>(iter);
  res.converged = iter < kMaxIter && std::abs(r.first) < kMleBound - 1e-6;
  res.objective_at_solution = -r.second;
  return res;
}

EstimatorResult mle_score_root(const PreparedSample& ps) {
  EstimatorResult res;
  res.method = Method::MLE_SCORE;

  // Initial value from the moment map of the sample tau.
  double tau = stats::kendall_tau_b(ps.u, ps.v);
  tau = std::clamp(tau, -0.9999, 0.9999);
  double th0 = std::clamp(invert_kendall_tau(tau), -kMleBound + 1.0, kMleBound - 1.0);

  int evals = 1;
  double a = th0;
  double fa = score(ps, a);
  if (fa == 0.0) {
    res.estimate = a;
    res.iterations = evals;
    res.converged = true;
    res.objective_at_solution = 0.0;
    return res;
  }
  const int sign0 = fa > 0.0 ? 1 : -1;
  // H = (1/n) dl/dtheta, so H > 0 means the maximum lies to the right.
  const double dir = sign0 > 0 ? 1.0 : -1.0;
  double step = 0.25;
  double b = a, fb = fa;
  bool bracketed = false;
  while (std::abs(b) < kMleBound) {
    a = b;
    fa = fb;
    b = std::clamp(b + dir * step, -kMleBound, kMleBound);
    fb = score(ps, b);
    ++evals;
    step *= 2.0;
    if ((fb > 0.0 ? 1 : -1) != sign0) {
      bracketed = true;
      break;
    }
  }
  if (!bracketed) {
    // Monotone likelihood over the whole search interval: report the best
    // iterate (the Brent maximizer, which will sit at the boundary).
    EstimatorResult fallback = mle_loglik_max(ps);
    res.estimate = fallback.estimate;
    res.iterations = evals;
    res.converged = false;
    res.objective_at_solution = score(ps, res.estimate);
    return res;
  }
  double lo = std::min(a, b), hi = std::max(a, b);
  double flo = lo == a ? fa : fb, fhi = lo == a ? fb : fa;
  boost::math::tools::eps_tolerance<double> tol(48);
  std::uintmax_t max_iter = 100;
  const auto r = boost::math::tools::toms748_solve(
      [&](double th) { return score(ps, th); }, lo, hi, flo, fhi, tol, max_iter);
  res.estimate = 0.5 * (r.first + r.second);
  res.iterations = evals + static_cast<int>(max_iter);
  res.converged = true;
  res.objective_at_solution = score(ps, res.estimate);
  return res;
}

}  // namespace

EstimatorResult mle(const PreparedSample& ps, Method approach) {
  if (ps.n < 2) {
    throw std::invalid_argument("frank: mle requires n >= 2");
  }
  switch (approach) {
    case Method::MLE_LOGLIK: return mle_loglik_max(ps);
    case Method::MLE_SCORE: return mle_score_root(ps);
    default:
      throw std::invalid_argument("frank: mle approach must be MLE_LOGLIK or MLE_SCORE");
  }
}

EstimatorResult mle(const std::vector<UnitPair>& data, Method approach) {
  return mle(PreparedSample::from(data), approach);
}

namespace {

EstimatorResult invert_correlation(double corr, Method method, const char* what) {
  if (!(std::abs(corr) < 1.0)) {
    throw std::invalid_argument(std::string("frank: ") + what +
                                ": sample correlation indicates perfect dependence");
  }
  EstimatorResult res;
  res.method = method;
  res.estimate = method == Method::MME1 ? invert_kendall_tau(corr)
                                        : invert_spearman_rho(corr);
  res.iterations = 0;
  res.converged = true;
  res.objective_at_solution = corr;
  return res;
}

}  // namespace

EstimatorResult mme1(const std::vector<UnitPair>& data) {
  std::vector<double> x, y;
  x.reserve(data.size());
  y.reserve(data.size());
  for (const UnitPair& p : data) {
    x.push_back(p.u);
    y.push_back(p.v);
  }
  return invert_correlation(stats::kendall_tau_b(x, y), Method::MME1, "mme1");
}

EstimatorResult mme2(const std::vector<UnitPair>& data) {
  std::vector<double> x, y;
  x.reserve(data.size());
  y.reserve(data.size());
  for (const UnitPair& p : data) {
    x.push_back(p.u);
    y.push_back(p.v);
  }
  return invert_correlation(stats::spearman(x, y), Method::MME2, "mme2");
}

// ---------------------------------------------------------------------------
// Fisher information
// ---------------------------------------------------------------------------

namespace {

struct GlRule {
  std::vector<double> x;  // nodes on [0,1]
  std::vector<double> w;
};

GlRule make_gl(int n) {
  // Gauss-Legendre by Newton iteration on the three-term recurrence.
  GlRule r;
  r.x.resize(static_cast<std::size_t>(n));
  r.w.resize(static_cast<std::size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(M_PI * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      // p0 = P_n(z); derivative from the recurrence.
      pp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    // Map from [-1,1] to [0,1].
    r.x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
    r.w[static_cast<std::size_t>(i)] = 0.5 * w;
    r.x[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (1.0 + z);
    r.w[static_cast<std::size_t>(n - 1 - i)] = 0.5 * w;
  }
  return r;
}

const GlRule& gl_rule(int order) {
  static const GlRule r64 = make_gl(64);
  static const GlRule r96 = make_gl(96);
  static const GlRule r192 = make_gl(192);
  switch (order) {
    case 64: return r64;
    case 96: return r96;
    case 192: return r192;
    default: throw std::logic_error("gl_rule: unsupported order");
  }
}

// E[J(U,V|theta)] by a tensor Gauss-Legendre rule, theta > 0.
double expected_j(double theta, int order) {
  const GlRule& g = gl_rule(order);
  const std::size_t n = g.x.size();
  std::vector<double> ex(n);
  for (std::size_t i = 0; i < n; ++i) ex[i] = std::exp(-theta * g.x[i]);
  const double ez = std::exp(-theta);
  const double log_c0 = detail::log_density_const(theta);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = g.x[i], eu = ex[i];
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = g.x[j], ev = ex[j];
      const double euv = eu * ev;
      const double a2 = eu + ev - ez - euv;
      const double j1 =
          euv * (-(u - v) * (u - v) + u * u * ev + v * v * eu -
                 (u + v - 1.0) * (u + v - 1.0) * ez) +
          (v - 1.0) * (v - 1.0) * ev * ez + (u - 1.0) * (u - 1.0) * eu * ez;
      // c = theta(1-e^-theta) e^{-theta(u+v)} / A2^2, evaluated in log space
      // so large-theta underflow in the numerator cannot zero the integrand.
      const double log_c = log_c0 - theta * (u + v) - 2.0 * std::log(a2);
      row += g.w[j] * (j1 / (a2 * a2)) * std::exp(log_c);
    }
    total += g.w[i] * row;
  }
  return total;
}

}  // namespace

FisherInfo fisher_information(double theta) {
  if (!std::isfinite(theta) || std::abs(theta) > 100.0) {
    throw std::domain_error("frank: fisher_information requires |theta| <= 100");
  }
  FisherInfo out;
  out.theta = theta;
  const double t = std::abs(theta);
  if (t < 0.5) {
    // Even Taylor series; coefficients fitted against 40-digit quadrature,
    // max error ~3e-13 at the 0.5 crossover.  I1 and I2 individually blow
    // up like 2/t^2 as t -> 0, so the closed forms are not used here.
    const double t2 = t * t;
    out.value = 1.0 / 36.0 +
                t2 * (-1.0 / 2160.0 +
                      t2 * (2.2045856124836718e-6 +
                            t2 * (2.4932413353529226e-7 +
                                  t2 * -1.5064609197866588e-8)));
    if (t >= kThetaEps) {
      const double sh = 2.0 * std::sinh(0.5 * t);
      out.i1 = 1.0 / (t * t) + 1.0 / (sh * sh);
      out.i2 = out.i1 - out.value;
    } else {
      out.i1 = std::numeric_limits<double>::infinity();
      out.i2 = std::numeric_limits<double>::infinity();
    }
    return out;
  }
  const double sh = 2.0 * std::sinh(0.5 * t);
  out.i1 = 1.0 / (t * t) + 1.0 / (sh * sh);
  double q;
  if (t > 30.0) {
    q = expected_j(t, 192);
  } else {
    const double q64 = expected_j(t, 64);
    const double q96 = expected_j(t, 96);
    q = std::abs(q96 - q64) > 5e-11 ? expected_j(t, 192) : q96;
  }
  out.i2 = 2.0 * q;
  out.value = out.i1 - out.i2;
  if (!(out.value > 0.0)) {
    throw std::runtime_error("frank: fisher_information quadrature failure");
  }
  return out;
}

double jeffreys_prior(double theta) {
  return std::sqrt(fisher_information(theta).value);
}

// ---------------------------------------------------------------------------
// Posterior means
// ---------------------------------------------------------------------------

std::vector<double> posterior_nodes(double center, const PosteriorSpec& spec) {
  if (spec.subintervals < 2 || !(spec.half_width > 0.0)) {
    throw std::invalid_argument("frank: invalid posterior grid spec");
  }
  const std::size_t count = spec.subintervals + 1;
  const double h = 2.0 * spec.half_width / static_cast<double>(spec.subintervals);
  std::vector<double> nodes(count);
  for (std::size_t k = 0; k < count; ++k) {
    nodes[k] = center - spec.half_width + static_cast<double>(k) * h;
  }
  return nodes;
}

namespace {

double resolve_center(const PreparedSample& ps, const PosteriorSpec& spec) {
  if (spec.center) return *spec.center;
  return mle(ps, Method::MLE_SCORE).estimate;
}

}  // namespace

JeffreysCache build_jeffreys_cache(double center, const PosteriorSpec& spec) {
  JeffreysCache cache;
  cache.nodes = posterior_nodes(center, spec);
  cache.prior.reserve(cache.nodes.size());
  for (double th : cache.nodes) cache.prior.push_back(jeffreys_prior(th));
  return cache;
}

double posterior_mean_from_loglik(const std::vector<double>& nodes,
                                  const std::vector<double>& loglik,
                                  const std::vector<double>* prior_at_nodes) {
  if (nodes.size() != loglik.size() ||
      (prior_at_nodes != nullptr && prior_at_nodes->size() != nodes.size())) {
    throw std::invalid_argument("frank: posterior grid size mismatch");
  }
  double max_lw = -std::numeric_limits<double>::infinity();
  std::vector<double> lw(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    double w = loglik[k];
    if (prior_at_nodes != nullptr) {
      const double p = (*prior_at_nodes)[k];
      if (!(p > 0.0) || !std::isfinite(p)) {
        throw std::invalid_argument("frank: prior must be positive and finite");
      }
      w += std::log(p);
    }
    lw[k] = w;
    max_lw = std::max(max_lw, w);
  }
  if (!std::isfinite(max_lw)) {
    throw std::runtime_error("frank: posterior weights degenerate");
  }
  double sum_w = 0.0, sum_tw = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double w = std::exp(lw[k] - max_lw);
    sum_w += w;
    sum_tw += nodes[k] * w;
  }
  if (!(sum_w > 0.0) || !std::isfinite(sum_w)) {
    throw std::runtime_error("frank: posterior weights vanished");
  }
  return sum_tw / sum_w;
}

PosteriorGrid posterior_grid(const PreparedSample& ps, const PosteriorSpec& spec,
                             const std::vector<double>* prior_at_nodes) {
  PosteriorGrid grid;
  grid.center = resolve_center(ps, spec);
  grid.theta_nodes = posterior_nodes(grid.center, spec);
  const std::vector<double> ll = log_likelihood_grid(ps, grid.theta_nodes);
  grid.mean = posterior_mean_from_loglik(grid.theta_nodes, ll, prior_at_nodes);

  // Store the normalized weights for inspection.
  double max_lw = -std::numeric_limits<double>::infinity();
  std::vector<double> lw(ll.size());
  for (std::size_t k = 0; k < ll.size(); ++k) {
    lw[k] = ll[k] + (prior_at_nodes != nullptr ? std::log((*prior_at_nodes)[k]) : 0.0);
    max_lw = std::max(max_lw, lw[k]);
  }
  grid.weights.resize(lw.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < lw.size(); ++k) {
    grid.weights[k] = std::exp(lw[k] - max_lw);
    sum += grid.weights[k];
  }
  for (double& w : grid.weights) w /= sum;
  return grid;
}

namespace {

EstimatorResult bayes_result(const PreparedSample& ps, const PosteriorSpec& spec,
                             Method method) {
  PosteriorSpec resolved = spec;
  resolved.center = resolve_center(ps, spec);
  const std::vector<double>* prior = nullptr;
  JeffreysCache cache;
  if (method == Method::BJPE) {
    cache = build_jeffreys_cache(*resolved.center, resolved);
    prior = &cache.prior;
  }
  const PosteriorGrid grid = posterior_grid(ps, resolved, prior);
  EstimatorResult res;
  res.estimate = grid.mean;
  res.method = method;
  res.iterations = static_cast<int>(resolved.subintervals);
  res.converged = true;
  res.objective_at_solution = log_likelihood(ps, grid.mean);
  return res;
}

}  // namespace

EstimatorResult bayes_flat(const PreparedSample& ps, const PosteriorSpec& spec) {
  return bayes_result(ps, spec, Method::BFPE);
}

EstimatorResult bayes_flat(const std::vector<UnitPair>& data,
                           const PosteriorSpec& spec) {
  return bayes_flat(PreparedSample::from(data), spec);
}

EstimatorResult bayes_jeffreys(const PreparedSample& ps, const PosteriorSpec& spec) {
  return bayes_result(ps, spec, Method::BJPE);
}

EstimatorResult bayes_jeffreys(const std::vector<UnitPair>& data,
                               const PosteriorSpec& spec) {
  return bayes_jeffreys(PreparedSample::from(data), spec);
}

}  // namespace frank
