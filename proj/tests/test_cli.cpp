// End-to-end tests of the frankcli binary: each subcommand is executed as a
// subprocess against the bundled datasets, outputs are parsed back, numeric
// results are compared with direct library calls and the frozen reference
// values, and the exit-code contract (1 usage, 2 data, 3 numerical) is
// exercised.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "frank/copula.hpp"
#include "frank/estimation.hpp"

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args) {
  static int call = 0;
  const std::string errfile =
      "/tmp/frank_cli_stderr_" + std::to_string(call++) + ".txt";
  const std::string cmd =
      std::string(FRANK_CLI_PATH) + " " + args + " 2>" + errfile;
  CliResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) {
    res.out.append(buf, got);
  }
  const int status = pclose(pipe);
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.err = slurp(errfile);
  std::remove(errfile.c_str());
  return res;
}

std::string dataset(const char* name) {
  return std::string(FRANK_DATA_DIR) + "/" + name;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  return lines;
}

// Value of a `key,value` row; empty string when absent.
std::string kv(const std::string& text, const std::string& key) {
  for (const std::string& line : lines_of(text)) {
    if (line.rfind(key + ",", 0) == 0) {
      return line.substr(key.size() + 1);
    }
  }
  return "";
}

double kv_num(const std::string& text, const std::string& key) {
  const std::string v = kv(text, key);
  REQUIRE(!v.empty());
  return std::stod(v);
}

// The estimate subcommand's row for one method, split into fields.
std::vector<std::string> method_row(const std::string& text,
                                    const std::string& method) {
  for (const std::string& line : lines_of(text)) {
    if (line.rfind(method + ",", 0) == 0) {
      std::vector<std::string> fields;
      std::istringstream ss(line);
      std::string field;
      while (std::getline(ss, field, ',')) fields.push_back(field);
      return fields;
    }
  }
  return {};
}

// Drops every `#` metadata line (timestamp, and the config echo, which
// embeds the --out path), leaving just the csv payload.
std::string strip_comments(const std::string& text) {
  std::string out;
  for (const std::string& line : lines_of(text)) {
    if (!line.empty() && line[0] == '#') continue;
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace

TEST_CASE("estimate: all six estimators on a bundled dataset") {
  const auto res = run_cli("estimate --in " + dataset("north.csv") +
                           " --x As --y pH");
  REQUIRE(res.code == 0);
  const auto lines = lines_of(res.out);
  REQUIRE(!lines.empty());
  CHECK(lines[0].rfind("# frankcli ", 0) == 0);
  CHECK(res.out.find("# seed ") != std::string::npos);
  CHECK(res.out.find("# config ") != std::string::npos);
  CHECK(res.out.find("n=23") != std::string::npos);
  CHECK(res.out.find("method,estimate,converged,iterations,objective\n") !=
        std::string::npos);

  const auto mle_row = method_row(res.out, "mle_score");
  REQUIRE(mle_row.size() == 5);
  const double theta_cli = std::stod(mle_row[1]);
  CHECK(std::fabs(theta_cli - 2.898) <= 0.01);
  CHECK(mle_row[2] == "1");  // converged

  for (const char* m :
       {"mle_loglik", "mme1", "mme2", "bfpe", "bjpe"}) {
    const auto row = method_row(res.out, m);
    REQUIRE(row.size() == 5);
    const double est = std::stod(row[1]);
    CHECK(std::isfinite(est));
    // All estimators land in the same neighborhood for this dataset.
    CHECK(std::fabs(est - theta_cli) <= 1.5);
  }
}

TEST_CASE("estimate: paper format rounds to three decimals") {
  const auto res = run_cli("estimate --in " + dataset("north.csv") +
                           " --x As --y pH --paper-format");
  REQUIRE(res.code == 0);
  const auto row = method_row(res.out, "mle_score");
  REQUIRE(row.size() == 5);
  const std::size_t dot = row[1].find('.');
  REQUIRE(dot != std::string::npos);
  CHECK(row[1].size() - dot - 1 == 3);
  CHECK(row[1] == "2.898");  // the frozen reference rendering
}

TEST_CASE("gof: reorientation path on a strongly negative fit") {
  const auto res = run_cli("gof --in " + dataset("north.csv") +
                           " --x Eh --y pH");
  REQUIRE(res.code == 0);
  CHECK(std::fabs(kv_num(res.out, "theta_hat") - (-4.006)) <= 0.01);
  CHECK(std::fabs(kv_num(res.out, "sn") - 0.304) <= 0.005);
  CHECK(std::fabs(kv_num(res.out, "tn") - 1.084) <= 0.005);
  CHECK(kv(res.out, "reoriented") == "1");
  CHECK(std::fabs(kv_num(res.out, "theta_use") - 4.006) <= 0.01);
  CHECK(!kv(res.out, "sn_cmp").empty());
  CHECK(!kv(res.out, "tn_cmp").empty());
  // No table, no bootstrap: those sections must be absent.
  CHECK(kv(res.out, "critical_sn").empty());
  CHECK(kv(res.out, "p_boot_sn").empty());
}

TEST_CASE("gof: bootstrap block attaches when requested") {
  const auto res = run_cli("gof --in " + dataset("north.csv") +
                           " --x As --y pH --bootstrap 150 --seed 77");
  REQUIRE(res.code == 0);
  const double p = kv_num(res.out, "p_boot_sn");
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);
  CHECK(kv(res.out, "bootstrap_reps") == "150");
  CHECK(!kv(res.out, "bootstrap_redraws").empty());

  // Deterministic under a fixed seed, including across thread counts.
  const auto again = run_cli("gof --in " + dataset("north.csv") +
                             " --x As --y pH --bootstrap 150 --seed 77 --threads 3");
  REQUIRE(again.code == 0);
  CHECK(kv(again.out, "p_boot_sn") == kv(res.out, "p_boot_sn"));
  CHECK(kv(again.out, "p_boot_tn") == kv(res.out, "p_boot_tn"));
}

TEST_CASE("crit-table: format, determinism, and use by gof") {
  const std::string table_path = "/tmp/frank_cli_table.csv";
  const std::string args = "crit-table --n-grid 20,30 --theta-grid 2,4"
                           " --level 0.90,0.95 --reps 200 --seed 9 --out " +
                           table_path;
  const auto res = run_cli(args);
  REQUIRE(res.code == 0);
  const std::string table_text = slurp(table_path);
  CHECK(table_text.find("level,n,theta,sn,tn,reps,seed\n") != std::string::npos);
  std::size_t rows = 0;
  for (const std::string& line : lines_of(table_text)) {
    if (!line.empty() && line[0] != '#' && line.rfind("level,", 0) != 0) ++rows;
  }
  CHECK(rows == 2 * 2 * 2);  // levels x n-grid x theta-grid

  // Byte-identical rerun once the metadata lines are stripped.
  const std::string second_path = "/tmp/frank_cli_table2.csv";
  const auto rerun = run_cli("crit-table --n-grid 20,30 --theta-grid 2,4"
                             " --level 0.90,0.95 --reps 200 --seed 9 --out " +
                             second_path);
  REQUIRE(rerun.code == 0);
  CHECK(strip_comments(slurp(second_path)) == strip_comments(table_text));
  std::remove(second_path.c_str());

  // gof consumes the table: As/pH fits theta_hat ~ 2.9 inside the grid.
  const auto gof = run_cli("gof --in " + dataset("north.csv") +
                           " --x As --y pH --table " + table_path +
                           " --level 0.95");
  REQUIRE(gof.code == 0);
  CHECK(!kv(gof.out, "critical_sn").empty());
  CHECK(!kv(gof.out, "critical_tn").empty());
  CHECK(kv(gof.out, "verdict_sn") == "not rejected");
  CHECK(kv(gof.out, "verdict_tn") == "not rejected");

  // Uncovered cell (south n = 44 > 30): numerical-failure exit naming the gap.
  const auto missing = run_cli("gof --in " + dataset("south.csv") +
                               " --x As --y pH --table " + table_path);
  CHECK(missing.code == 3);
  CHECK(missing.err.find("needed cell") != std::string::npos);
  std::remove(table_path.c_str());
}

TEST_CASE("correlations: sample and parametric estimates with bdl counts") {
  const auto res = run_cli("correlations --in " + dataset("north.csv") +
                           " --x As --y pH");
  REQUIRE(res.code == 0);
  CHECK(std::fabs(kv_num(res.out, "kendall") - 0.269) <= 0.0006);
  CHECK(std::fabs(kv_num(res.out, "spearman") - 0.384) <= 0.0006);
  CHECK(std::fabs(kv_num(res.out, "pearson") - 0.766) <= 0.0006);
  CHECK(std::fabs(kv_num(res.out, "parametric_kendall") - 0.298) <= 0.005);
  CHECK(std::fabs(kv_num(res.out, "parametric_spearman") - 0.436) <= 0.005);
  CHECK(!kv(res.out, "kendall_tau_a").empty());
  CHECK(kv(res.out, "bdl_x") == "2");  // As carries the two bdl entries
  CHECK(kv(res.out, "bdl_y") == "0");

  const auto bdl = run_cli("correlations --in " + dataset("north.csv") +
                           " --x As --y Cl");
  REQUIRE(bdl.code == 0);
  CHECK(kv(bdl.out, "bdl_x") == "2");
  CHECK(kv(bdl.out, "bdl_y") == "1");
}

TEST_CASE("rho-curves: correlation and prior curves over a theta grid") {
  const auto res = run_cli("rho-curves --theta-grid 0,1,5");
  REQUIRE(res.code == 0);
  CHECK(res.out.find("theta,rho_k,rho_s,pi_jp\n") != std::string::npos);
  CHECK(res.out.find("0.000000,0.000000,0.000000,0.166667\n") !=
        std::string::npos);
  // Parse the theta = 5 row and compare against the library.
  bool found = false;
  for (const std::string& line : lines_of(res.out)) {
    if (line.rfind("5.000000,", 0) == 0) {
      std::istringstream ss(line);
      std::string field;
      std::vector<double> vals;
      while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
      REQUIRE(vals.size() == 4);
      CHECK(std::fabs(vals[1] - frank::kendall_tau(5.0)) <= 1e-6);
      CHECK(std::fabs(vals[2] - frank::spearman_rho(5.0)) <= 1e-6);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("bootstrap subcommand is deterministic") {
  const std::string args = "bootstrap --in " + dataset("north.csv") +
                           " --x As --y pH --reps 150 --seed 4";
  const auto a = run_cli(args);
  REQUIRE(a.code == 0);
  CHECK(!kv(a.out, "theta_hat").empty());
  CHECK(!kv(a.out, "sn_obs").empty());
  CHECK(!kv(a.out, "tn_obs").empty());
  CHECK(kv(a.out, "bootstrap_reps") == "150");
  const double p = kv_num(a.out, "p_boot_sn");
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);
  const auto b = run_cli(args + " --threads 2");
  REQUIRE(b.code == 0);
  CHECK(kv(b.out, "p_boot_sn") == kv(a.out, "p_boot_sn"));
  CHECK(kv(b.out, "p_boot_tn") == kv(a.out, "p_boot_tn"));
}

TEST_CASE("bias-mse: small grid end to end") {
  const std::string out_path = "/tmp/frank_cli_biasmse.csv";
  const auto res = run_cli("bias-mse --n-grid 15 --theta-grid 2 --reps 200"
                           " --batches 4 --estimators mle_score,mme1 --out " +
                           out_path);
  REQUIRE(res.code == 0);
  const std::string text = slurp(out_path);
  CHECK(text.find("n,theta,estimator,bias,bias_se,mse,mse_se,reps") !=
        std::string::npos);
  CHECK(text.find("15,2,mle_score,") != std::string::npos);
  CHECK(text.find("15,2,mme1,") != std::string::npos);
  // Companion long-format file for plotting.
  const std::string long_text = slurp(out_path + ".long");
  CHECK(long_text.find("n,theta,estimator,metric,value") != std::string::npos);
  CHECK(long_text.find(",bias,") != std::string::npos);
  CHECK(long_text.find(",mse_se,") != std::string::npos);
  std::remove(out_path.c_str());
  std::remove((out_path + ".long").c_str());
}

TEST_CASE("output files are written atomically") {
  const std::string out_path = "/tmp/frank_cli_outfile.csv";
  const auto res = run_cli("estimate --in " + dataset("north.csv") +
                           " --x As --y pH --out " + out_path);
  REQUIRE(res.code == 0);
  const std::string text = slurp(out_path);
  CHECK(text.rfind("# frankcli ", 0) == 0);
  // No leftover temporary.
  std::ifstream tmp(out_path + ".tmp");
  CHECK(!tmp.good());
  std::remove(out_path.c_str());
}

TEST_CASE("exit-code contract") {
  // Usage errors: unknown flag, missing required flags, bad method name.
  CHECK(run_cli("estimate --bogus-flag 1").code == 1);
  CHECK(run_cli("estimate").code == 1);
  CHECK(run_cli("bias-mse --n-grid 10 --theta-grid 1 --reps 100 --batches 4"
                " --estimators not_a_method").code == 1);
  // Data errors: missing file, missing column.
  CHECK(run_cli("estimate --in /nonexistent.csv --x As --y pH").code == 2);
  CHECK(run_cli("estimate --in " + dataset("north.csv") +
                " --x As --y Missing").code == 2);
  // Numerical domain failures.
  CHECK(run_cli("rho-curves --theta-grid 200").code == 3);
  // Help exits cleanly.
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("gof --help").code == 0);
}
