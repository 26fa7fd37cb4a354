#include "frank/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "frank/copula.hpp"
#include "frank/stats.hpp"
#include "json.hpp"

namespace frank {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& cell, double* value) {
  if (cell.empty()) return false;
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    if (pos != cell.size()) return false;
    *value = v;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

Schema default_schema() {
  Schema s;
  s["As"] = ColumnRule{"ppb", 4.0};
  s["Cl"] = ColumnRule{"ppm", 0.01};
  s["Eh"] = ColumnRule{"mV", std::nullopt};
  s["pH"] = ColumnRule{"", std::nullopt};
  return s;
}

Schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError("invalid schema JSON in " + path + ": " + e.what());
  }
  if (!j.contains("columns") || !j["columns"].is_object())
    throw DataError("schema " + path + " lacks a \"columns\" object");
  Schema s;
  for (const auto& [name, rule] : j["columns"].items()) {
    ColumnRule r;
    if (rule.contains("unit")) r.unit = rule["unit"].get<std::string>();
    if (rule.contains("bdl")) r.bdl_value = rule["bdl"].get<double>();
    s[name] = r;
  }
  return s;
}

BivariateSample load_dataset(const std::string& csv_path,
                             const std::string& x_col, const std::string& y_col,
                             const Schema& schema,
                             const std::string& bdl_token) {
  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open dataset: " + csv_path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty dataset: " + csv_path);
  const auto header = split_csv_line(line);
  auto find_col = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw DataError("column \"" + name + "\" not found in " + csv_path);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ix = find_col(x_col);
  const std::size_t iy = find_col(y_col);

  BivariateSample s;
  s.x_label = x_col;
  s.y_label = y_col;
  s.source = csv_path;
  if (const auto it = schema.find(x_col); it != schema.end())
    s.x_unit = it->second.unit;
  if (const auto it = schema.find(y_col); it != schema.end())
    s.y_unit = it->second.unit;

  auto read_cell = [&](const std::vector<std::string>& cells, std::size_t col,
                       const std::string& col_name, std::size_t* bdl_count,
                       std::size_t row) -> double {
    if (col >= cells.size())
      throw DataError(csv_path + ": row " + std::to_string(row) +
                      " has too few cells");
    const std::string& cell = cells[col];
    double v = 0.0;
    if (parse_double(cell, &v)) return v;
    if (cell == bdl_token) {
      const auto it = schema.find(col_name);
      if (it != schema.end() && it->second.bdl_value) {
        ++*bdl_count;
        return *it->second.bdl_value;
      }
      throw DataError(csv_path + ": column \"" + col_name +
                      "\" has a below-detection-limit cell but no "
                      "substitution value in the schema");
    }
    throw DataError(csv_path + ": unparseable cell \"" + cell +
                    "\" in column \"" + col_name + "\", row " +
                    std::to_string(row));
  };

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    s.x.push_back(read_cell(cells, ix, x_col, &s.bdl_x, row));
    s.y.push_back(read_cell(cells, iy, y_col, &s.bdl_y, row));
  }
  s.n = s.x.size();
  if (s.n < 2) throw DataError(csv_path + ": fewer than two data rows");
  return s;
}

double kendall_hat(const BivariateSample& s) {
  return stats::kendall_tau_b(s.x, s.y);
}

double kendall_hat_tau_a(const BivariateSample& s) {
  return stats::kendall_tau_a(s.x, s.y);
}

double spearman_hat(const BivariateSample& s) {
  return stats::spearman(s.x, s.y);
}

double pearson_hat(const BivariateSample& s) {
  return stats::pearson(s.x, s.y);
}

CorrelationEstimates correlations(const BivariateSample& s) {
  return CorrelationEstimates{kendall_hat(s), spearman_hat(s), pearson_hat(s)};
}

CorrelationEstimates parametric_correlations(double theta_hat) {
  return CorrelationEstimates{kendall_tau(theta_hat), spearman_rho(theta_hat),
                              std::numeric_limits<double>::quiet_NaN()};
}

}  // namespace frank
