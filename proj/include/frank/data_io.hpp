// Dataset ingestion and sample correlation estimates.
//
// CSV files with a header row; cells that fail numeric parsing are accepted
// only when they equal the below-detection-limit token (default "bdl") and
// the column schema supplies a substitution value, mirroring the handling of
// the bundled groundwater data (arsenic bdl -> 4 ppb, chloride bdl -> 0.01
// ppm).  Units are taken from a JSON sidecar schema, never inferred.
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace frank {

// Ingestion/validation problem: maps to the CLI's data-error exit code.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BivariateSample {
  std::vector<double> x, y;
  std::string x_label, y_label;
  std::string x_unit, y_unit;
  std::string source;
  std::size_t n = 0;
  std::size_t bdl_x = 0;  // substitutions applied per column
  std::size_t bdl_y = 0;
};

struct CorrelationEstimates {
  double kendall = 0.0;
  double spearman = 0.0;
  double pearson = 0.0;  // NaN where not applicable (parametric estimates)
};

struct ColumnRule {
  std::string unit;
  std::optional<double> bdl_value;
};

using Schema = std::map<std::string, ColumnRule>;

// Bundled-dataset schema (As ppb with bdl -> 4.0, Cl ppm with bdl -> 0.01,
// Eh mV, pH unitless).
Schema default_schema();

// JSON sidecar: {"columns": {"As": {"unit": "ppb", "bdl": 4.0}, ...}}.
Schema load_schema(const std::string& path);

BivariateSample load_dataset(const std::string& csv_path,
                             const std::string& x_col, const std::string& y_col,
                             const Schema& schema = default_schema(),
                             const std::string& bdl_token = "bdl");

// Sample Kendall tau.  Tie-corrected tau-b is the default: the bdl
// substitution leaves tied rows, and tau-b is the convention that reproduces
// the published reference values for this dataset.  tau-a is available for
// comparison.
double kendall_hat(const BivariateSample& s);
double kendall_hat_tau_a(const BivariateSample& s);

// Product-moment correlation of average ranks (grade correlation).
double spearman_hat(const BivariateSample& s);

double pearson_hat(const BivariateSample& s);

// All three sample correlations.
CorrelationEstimates correlations(const BivariateSample& s);

// Model-implied correlations at theta_hat: (rho_K(theta_hat),
// rho_S(theta_hat), NaN).
CorrelationEstimates parametric_correlations(double theta_hat);

}  // namespace frank
