// Point and generalized Bayes estimation of the Frank association parameter:
// log-likelihood and score, MLE by two routes (bounded Brent maximization
// and score-equation root-finding), moment estimators from the rank
// correlations, Fisher information per observation by tensor quadrature,
// the Jeffreys prior, and posterior-mean estimators under flat and Jeffreys
// priors evaluated on a uniform grid.
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "frank/copula.hpp"

namespace frank {

enum class Method { MLE_LOGLIK, MLE_SCORE, MME1, MME2, BFPE, BJPE };

const char* method_name(Method m);

struct EstimatorResult {
  double estimate = 0.0;
  Method method = Method::MLE_LOGLIK;
  int iterations = 0;
  bool converged = false;
  // Log-likelihood at the estimate for the MLE routes and the posterior
  // means; the score residual for MLE_SCORE; the matched rank correlation
  // for the moment estimators.
  double objective_at_solution = 0.0;
};

struct FisherInfo {
  double theta = 0.0;
  double value = 0.0;  // I(theta) = i1 - i2 > 0
  double i1 = 0.0;     // theta^-2 + e^theta/(e^theta - 1)^2
  double i2 = 0.0;     // 2 E[J(U,V|theta)]
};

// Likelihood evaluations reuse m = min(u,v), d = |u-v| for the original and
// the reflected ((u,1-v)) orientation, computed once per sample.
struct PreparedSample {
  std::vector<double> u, v;    // original pairs
  std::vector<double> mp, dp;  // min/|diff| of (u, v): theta > 0 branch
  std::vector<double> mn, dn;  // min/|diff| of (u, 1-v): theta < 0 branch
  double sum_u = 0.0;
  double sum_v = 0.0;
  std::size_t n = 0;

  static PreparedSample from(const std::vector<UnitPair>& pairs);
};

// l(theta) = sum_i log c(u_i, v_i | theta).
double log_likelihood(const PreparedSample& ps, double theta);
double log_likelihood(const std::vector<UnitPair>& data, double theta);

// l(theta) on many grid nodes in one pass (the Bayes hot path).
std::vector<double> log_likelihood_grid(const PreparedSample& ps,
                                        const std::vector<double>& nodes);

// Normal-equation function H(theta) = (1/n) dl/dtheta:
//   H = 1/theta + 1/(e^theta - 1) - (Ubar + Vbar) + (2/n) sum_i A1_i/A2_i.
double score(const PreparedSample& ps, double theta);
double score(const std::vector<UnitPair>& data, double theta);

// MLE search interval; covers every tabulated |theta| with wide margin.
inline constexpr double kMleBound = 50.0;

EstimatorResult mle(const PreparedSample& ps, Method approach = Method::MLE_SCORE);
EstimatorResult mle(const std::vector<UnitPair>& data,
                    Method approach = Method::MLE_SCORE);

// Moment estimators: invert_kendall_tau(sample tau-b) and
// invert_spearman_rho(sample Spearman rho).
EstimatorResult mme1(const std::vector<UnitPair>& data);
EstimatorResult mme2(const std::vector<UnitPair>& data);

// Fisher information per observation.  |theta| < 0.5 uses an even Taylor
// series (I1 and I2 diverge individually at 0 while their difference tends
// to 1/36, so the closed forms are ill-conditioned there); otherwise a
// tensor Gauss-Legendre rule with an internal 64^2 -> 96^2 (-> 192^2)
// refinement check, absolute accuracy ~1e-9.  Domain |theta| <= 100.
FisherInfo fisher_information(double theta);

// pi_JP(theta) = sqrt(I(theta)).
double jeffreys_prior(double theta);

// Posterior-mean window: [center - half_width, center + half_width] cut into
// `subintervals` equal pieces (subintervals + 1 nodes).  Without an explicit
// center the window is centered at the score-root MLE (applied mode);
// simulation reruns pass the true theta.
struct PosteriorSpec {
  double half_width = 25.0;
  std::size_t subintervals = 2000;
  std::optional<double> center;
};

struct PosteriorGrid {
  std::vector<double> theta_nodes;  // strictly increasing, uniform spacing
  std::vector<double> weights;      // normalized to sum 1
  double center = 0.0;
  double mean = 0.0;
};

// The node grid of a spec at an explicit center (shared by simulation loops
// that evaluate the likelihood once and reuse it under several priors).
std::vector<double> posterior_nodes(double center, const PosteriorSpec& spec);

// Jeffreys prior evaluated on the node grid of a given spec/center, built
// once and reused across replications.
struct JeffreysCache {
  std::vector<double> nodes;
  std::vector<double> prior;
};

JeffreysCache build_jeffreys_cache(double center, const PosteriorSpec& spec);

// prior = nullptr gives the flat prior; otherwise node-aligned prior values.
PosteriorGrid posterior_grid(const PreparedSample& ps, const PosteriorSpec& spec,
                             const std::vector<double>* prior_at_nodes);

EstimatorResult bayes_flat(const PreparedSample& ps, const PosteriorSpec& spec = {});
EstimatorResult bayes_flat(const std::vector<UnitPair>& data,
                           const PosteriorSpec& spec = {});
EstimatorResult bayes_jeffreys(const PreparedSample& ps,
                               const PosteriorSpec& spec = {});
EstimatorResult bayes_jeffreys(const std::vector<UnitPair>& data,
                               const PosteriorSpec& spec = {});

// Shared core for simulation loops that already hold the prior cache and
// the log-likelihood grid values.
double posterior_mean_from_loglik(const std::vector<double>& nodes,
                                  const std::vector<double>& loglik,
                                  const std::vector<double>* prior_at_nodes);

}  // namespace frank
