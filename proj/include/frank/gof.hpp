// Goodness-of-fit machinery for the Frank copula.
//
// Pipeline: pseudo-observations (adjusted-ECDF grades + dominance fractions
// W_j), the empirical Kendall distribution K_n, the Cramer-von Mises
// statistic S_n and Kolmogorov-Smirnov statistic T_n against the fitted
// K(., theta_hat), simulated critical-value tables, the |theta_hat| reading
// policy with reorientation for strong negative dependence, and nonparametric
// bootstrap p-values.
//
// Conventions (pinned by the reference tables these tests reproduce):
//   * margins use the adjusted ECDF (#{x_k <= x_j} + 0.5)/(n+1); ties take
//     the <=-count (max rank), not the average rank;
//   * observed statistics use the signed MLE theta_hat; |theta_hat| is only
//     the table-lookup coordinate;
//   * T_n is the supremum of sqrt(n)|K_n - K| restricted to t in [1/n, 1];
//   * critical-value percentiles use the ceil(reps*level) order statistic;
//   * bootstrap p-values count strict exceedances (stat* > stat_obs).
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "frank/copula.hpp"
#include "frank/data_io.hpp"

namespace frank {

struct PseudoSample {
  std::vector<UnitPair> pairs;  // adjusted-ECDF grades, strictly interior
  std::size_t n = 0;
  std::vector<double> w;  // W_j = (1/n) #{k: x_k <= x_j and y_k <= y_j}
};

PseudoSample pseudo_observations(const std::vector<double>& x,
                                 const std::vector<double>& y);
PseudoSample pseudo_observations(const BivariateSample& raw);

// (u, v) -> (u, 1-v): grades reflected and dominance fractions recomputed
// with the y-direction reversed.  The MLE of the reflected sample is exactly
// the negated MLE of the original sample.
PseudoSample reflect(const PseudoSample& ps);

// Dominance fractions of a sample whose margins are already uniform (the
// null simulation uses sampled pairs directly, with no rank transform).
std::vector<double> dominance_fractions(const std::vector<UnitPair>& pairs);

// K_n(t) = (1/n) #{W_j <= t}.
double empirical_k(const std::vector<double>& w, double t);
double empirical_k(const PseudoSample& ps, double t);

// Cramer-von Mises statistic: the closed-form lattice evaluation of
// n * integral of (K_n - K)^2 dK with K = k_cdf(., theta_hat); the K value
// needed at (n+1)/n is clamped to 1.
double sn_statistic(const std::vector<double>& w, double theta_hat);
double sn_statistic(const PseudoSample& ps, double theta_hat);

// Kolmogorov-Smirnov statistic sqrt(n) * sup |K_n - K| over t in [1/n, 1]:
// max over j = 1..n, i in {0,1} of |K_n(j/n) - K((j+i)/n)|.
double tn_statistic(const std::vector<double>& w, double theta_hat);
double tn_statistic(const PseudoSample& ps, double theta_hat);

enum class GofStat { SN, TN };
const char* gof_stat_name(GofStat s);

struct ThetaUseDecision {
  double theta_use = 0.0;  // |theta_hat|
  bool reoriented = false;  // theta_hat <= -2.5: reflect and re-test
};
ThetaUseDecision theta_use_policy(double theta_hat);

// Order statistic at rank ceil(values.size() * level) (1-based).
double empirical_percentile(std::vector<double> values, double level);

// One simulated (n, theta) cell: critical values per requested level.
struct CriticalCell {
  std::size_t n = 0;
  double theta = 0.0;
  std::vector<double> levels;
  std::vector<double> sn;  // per level
  std::vector<double> tn;  // per level
  std::size_t replications = 0;
  std::uint64_t seed = 0;
  std::size_t mle_nonconverged = 0;  // diagnostics; estimates still used
};

// For each replication: sample n pairs at theta, re-estimate theta by MLE
// from the sampled pairs, compute S_n and T_n, then read empirical
// percentiles.  One RNG stream per replication index: results are identical
// for a fixed (seed, reps) at any thread count.
CriticalCell simulate_critical_values(std::size_t n, double theta,
                                      const std::vector<double>& levels,
                                      std::size_t reps, std::uint64_t seed,
                                      unsigned threads = 0);

struct CriticalValueTable {
  std::vector<double> levels;        // ascending, e.g. {0.90, 0.95}
  std::vector<std::size_t> n_grid;   // ascending
  std::vector<double> theta_grid;    // ascending
  // Flattened level-major: index = (li * n_grid.size() + ni) *
  // theta_grid.size() + ti.
  std::vector<double> values_sn;
  std::vector<double> values_tn;
  std::size_t replications = 0;
  std::uint64_t seed = 0;

  std::size_t index(std::size_t li, std::size_t ni, std::size_t ti) const {
    return (li * n_grid.size() + ni) * theta_grid.size() + ti;
  }
};

// Deterministic per-cell seed derivation for table builds.
std::uint64_t table_cell_seed(std::uint64_t table_seed, std::size_t cell_index);

CriticalValueTable build_critical_table(const std::vector<std::size_t>& n_grid,
                                        const std::vector<double>& theta_grid,
                                        const std::vector<double>& levels,
                                        std::size_t reps, std::uint64_t seed,
                                        unsigned threads = 0);

// CSV serialization, header `level,n,theta,sn,tn,reps,seed`, one row per
// (level, n, theta) cell, statistics at 6 decimal places.  The loader
// tolerates `#` metadata lines ahead of the header.
void save_critical_table(const CriticalValueTable& table, std::ostream& out);
void save_critical_table(const CriticalValueTable& table,
                         const std::string& path);
CriticalValueTable load_critical_table(const std::string& path);

// Bilinear interpolation in (n, theta) at an exactly-covered level;
// extrapolation outside the grid is refused (std::domain_error).
double critical_lookup(const CriticalValueTable& table, GofStat stat, double n,
                       double theta, double level);

struct BootstrapResult {
  double p_sn = 0.0;
  double p_tn = 0.0;
  double sn_obs = 0.0;
  double tn_obs = 0.0;
  double theta_obs = 0.0;
  std::size_t b = 0;
  std::size_t redraws = 0;  // degenerate resamples (< 3 distinct rows)
};

// Nonparametric bootstrap: resample raw rows with replacement, re-rank,
// re-estimate, recompute both statistics; p = (1/B) #{stat* > stat_obs}.
// One RNG stream per replication index (thread-count invariant).
BootstrapResult bootstrap_pvalues(const std::vector<double>& x,
                                  const std::vector<double>& y, std::size_t b,
                                  std::uint64_t seed, unsigned threads = 0);
double bootstrap_pvalue(const BivariateSample& raw, GofStat stat,
                        std::size_t b, std::uint64_t seed,
                        unsigned threads = 0);

struct GofReport {
  double sn = 0.0;  // observed statistics, original orientation, signed MLE
  double tn = 0.0;
  double theta_hat = 0.0;  // signed score-root MLE
  double theta_use = 0.0;  // |theta_hat|, the table coordinate
  bool reoriented = false;
  // Statistics compared against the (positive-theta) table: equal to sn/tn
  // unless reoriented, in which case they are recomputed on the reflected
  // sample at -theta_hat.
  double sn_cmp = 0.0;
  double tn_cmp = 0.0;
  double critical_sn = std::numeric_limits<double>::quiet_NaN();
  double critical_tn = std::numeric_limits<double>::quiet_NaN();
  double p_boot_sn = std::numeric_limits<double>::quiet_NaN();
  double p_boot_tn = std::numeric_limits<double>::quiet_NaN();
  std::size_t bootstrap_reps = 0;
  std::size_t bootstrap_redraws = 0;
};

// Full test workflow for one dataset.  `table` may be null (no critical
// values filled); `bootstrap_b` = 0 skips the bootstrap.
GofReport make_gof_report(const BivariateSample& raw,
                          const CriticalValueTable* table, double level,
                          std::size_t bootstrap_b, std::uint64_t seed,
                          unsigned threads = 0);

}  // namespace frank
