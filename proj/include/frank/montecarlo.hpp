// Bias/MSE simulation harness: batched replications over an (n, theta) grid
// for the maximum-likelihood, moment, and posterior-mean estimators.
//
// Error conventions per cell of M replications split into m batches:
//   bias    = (1/M) sum (theta_hat - theta)
//   mse     = (1/M) sum (theta_hat - theta)^2
//   bias_se = sqrt(mse / M)            (the reference convention; it keeps
//                                       bias^2 inside the variance estimate)
//   mse_se  = sd(batch MSEs) / sqrt(m) (sample standard deviation, m >= 2)
//
// Determinism: one RNG stream per replication index and index-ordered
// reductions make reports bit-identical at any thread count.  Running the
// same plan at -theta with the same seed draws the exactly reflected samples,
// so bias flips sign and MSE is preserved up to estimator round-off
// (negation_check verifies this).
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "frank/estimation.hpp"

namespace frank {

struct ExperimentPlan {
  std::vector<std::size_t> n_grid;
  std::vector<double> theta_grid;
  std::size_t reps_total = 10000;  // M; must be divisible by batches
  std::size_t batches = 4;         // >= 2 (batch-variance SE)
  std::vector<Method> estimators = {Method::MLE_SCORE, Method::BFPE,
                                    Method::BJPE};
  std::uint64_t seed = 42;
  // Posterior window placement for BFPE/BJPE: true = centered at the true
  // theta of the cell (simulation mode, the table-reproduction convention);
  // false = centered at each replication's own MLE (application mode; BJPE
  // then rebuilds its prior per replication, which is far slower).
  bool center_true = true;
  double half_width = 25.0;
  std::size_t subintervals = 2000;
};

struct CellResult {
  std::size_t n = 0;
  double theta = 0.0;
  Method estimator = Method::MLE_SCORE;
  double bias = 0.0;
  double bias_se = 0.0;
  double mse = 0.0;
  double mse_se = 0.0;
  std::size_t reps = 0;      // replications included
  std::size_t failures = 0;  // excluded replications (0 in clean runs)
};

using SimulationReport = std::vector<CellResult>;

// Throws std::invalid_argument on divisibility/batches/grid violations.
void validate_plan(const ExperimentPlan& plan);

// One (n, theta) cell for every estimator in the plan.  A replication whose
// estimator throws is recorded and excluded; the cell hard-fails
// (std::runtime_error) if more than 0.1% of replications are excluded.
SimulationReport run_cell(std::size_t n, double theta,
                          const ExperimentPlan& plan, unsigned threads = 0);

SimulationReport run_plan(const ExperimentPlan& plan, unsigned threads = 0);

struct NegationRow {
  Method estimator = Method::MLE_SCORE;
  double bias_sum = 0.0;   // bias(+theta) + bias(-theta), ideally 0
  double bias_tol = 0.0;   // 3 * combined SE
  double mse_diff = 0.0;   // mse(+theta) - mse(-theta), ideally 0
  double mse_tol = 0.0;    // 3 * combined SE
  bool pass = false;
};

struct NegationVerdict {
  std::vector<NegationRow> rows;
  bool pass = false;
};

// Compares mirrored-seed runs at +theta and -theta: bias antisymmetric and
// MSE symmetric within 3 combined standard errors.
NegationVerdict negation_check(const SimulationReport& pos,
                               const SimulationReport& neg);

// CSV `n,theta,estimator,bias,bias_se,mse,mse_se,reps` plus a long-format
// companion `n,theta,estimator,metric,value` for plotting.
void save_report_csv(const SimulationReport& report, std::ostream& out);
void save_report_csv(const SimulationReport& report, const std::string& path);
void save_report_long(const SimulationReport& report, std::ostream& out);
void save_report_long(const SimulationReport& report, const std::string& path);

}  // namespace frank
