// frankcli: command-line front end for the Frank copula toolkit.
//
// Subcommands: estimate, gof, crit-table, bias-mse, bootstrap, correlations,
// rho-curves.  Every output embeds the tool version, the full invocation, and
// the seed; re-running the printed config reproduces the file byte-for-byte
// except for the timestamp line.  File outputs are staged to a `.tmp` path
// and renamed only on success.
//
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "frank/copula.hpp"
#include "frank/data_io.hpp"
#include "frank/estimation.hpp"
#include "frank/gof.hpp"
#include "frank/montecarlo.hpp"
#include "frank/parallel.hpp"

#ifndef FRANK_VERSION
#define FRANK_VERSION "0.0.0"
#endif

namespace {

std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) s += ' ';
    s += argv[i];
  }
  return s;
}

// Output sink: stdout, or a temp file renamed into place on commit so that a
// failed run never leaves a partial output file behind.
class OutputTarget {
 public:
  explicit OutputTarget(std::string path) : path_(std::move(path)) {
    if (!path_.empty()) {
      tmp_ = path_ + ".tmp";
      file_.open(tmp_, std::ios::binary | std::ios::trunc);
      if (!file_) throw frank::DataError("cannot open for writing: " + path_);
    }
  }
  OutputTarget(const OutputTarget&) = delete;
  OutputTarget& operator=(const OutputTarget&) = delete;

  std::ostream& stream() {
    return path_.empty() ? static_cast<std::ostream&>(std::cout) : file_;
  }

  void commit() {
    if (path_.empty()) {
      std::cout.flush();
      committed_ = true;
      return;
    }
    file_.flush();
    if (!file_) throw frank::DataError("write failure: " + tmp_);
    file_.close();
    if (std::rename(tmp_.c_str(), path_.c_str()) != 0)
      throw frank::DataError("cannot move output into place: " + path_);
    committed_ = true;
  }

  ~OutputTarget() {
    if (!path_.empty() && !committed_) {
      file_.close();
      std::remove(tmp_.c_str());
    }
  }

 private:
  std::string path_, tmp_;
  std::ofstream file_;
  bool committed_ = false;
};

struct Options {
  std::string in, out, table, schema;
  std::string x_col, y_col;
  std::vector<std::size_t> n_grid;
  std::vector<double> theta_grid;
  std::size_t reps = 10000;
  std::size_t batches = 4;
  std::uint64_t seed = 42;
  std::vector<double> levels{0.90, 0.95};
  double level = 0.95;
  std::size_t bootstrap = 0;
  unsigned threads = 0;  // 0 = machine parallelism
  bool paper_format = false;
  bool center_at_mle = false;
  std::vector<std::string> estimators{"mle_score", "bfpe", "bjpe"};
};

void write_header(std::ostream& os, const std::string& config,
                  std::uint64_t seed) {
  os << "# frankcli " << FRANK_VERSION << "\n";
  os << "# generated " << timestamp_utc() << "\n";
  os << "# config " << config << "\n";
  os << "# seed " << seed << "\n";
}

std::string fmt(double v, bool paper) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), paper ? "%.3f" : "%.6f", v);
  return buf;
}

frank::Method parse_method(const std::string& name) {
  using frank::Method;
  if (name == "mle" || name == "mle_score") return Method::MLE_SCORE;
  if (name == "mle_loglik") return Method::MLE_LOGLIK;
  if (name == "mme1") return Method::MME1;
  if (name == "mme2") return Method::MME2;
  if (name == "bfpe") return Method::BFPE;
  if (name == "bjpe") return Method::BJPE;
  throw std::invalid_argument("unknown estimator: " + name);
}

frank::BivariateSample load_input(const Options& o) {
  const frank::Schema schema =
      o.schema.empty() ? frank::default_schema() : frank::load_schema(o.schema);
  return frank::load_dataset(o.in, o.x_col, o.y_col, schema);
}

void cmd_estimate(const Options& o, const std::string& config) {
  const frank::BivariateSample raw = load_input(o);
  const frank::PseudoSample ps = frank::pseudo_observations(raw);
  const frank::PreparedSample prep = frank::PreparedSample::from(ps.pairs);

  std::vector<frank::EstimatorResult> rows;
  rows.push_back(frank::mle(prep, frank::Method::MLE_SCORE));
  rows.push_back(frank::mle(prep, frank::Method::MLE_LOGLIK));
  rows.push_back(frank::mme1(ps.pairs));
  rows.push_back(frank::mme2(ps.pairs));
  rows.push_back(frank::bayes_flat(prep));
  rows.push_back(frank::bayes_jeffreys(prep));

  OutputTarget out(o.out);
  std::ostream& os = out.stream();
  write_header(os, config, o.seed);
  os << "# input " << o.in << " x=" << raw.x_label << " y=" << raw.y_label
     << " n=" << raw.n << "\n";
  os << "method,estimate,converged,iterations,objective\n";
  for (const frank::EstimatorResult& r : rows) {
    os << frank::method_name(r.method) << ',' << fmt(r.estimate, o.paper_format)
       << ',' << (r.converged ? 1 : 0) << ',' << r.iterations << ','
       << fmt(r.objective_at_solution, o.paper_format) << "\n";
  }
  out.commit();
}

void cmd_gof(const Options& o, const std::string& config) {
  const frank::BivariateSample raw = load_input(o);
  std::optional<frank::CriticalValueTable> table;
  if (!o.table.empty()) table = frank::load_critical_table(o.table);

  frank::GofReport rep = frank::make_gof_report(raw, nullptr, o.level,
                                                o.bootstrap, o.seed, o.threads);
  bool have_crit = false;
  if (table) {
    try {
      rep.critical_sn =
          frank::critical_lookup(*table, frank::GofStat::SN,
                                 static_cast<double>(raw.n), rep.theta_use,
                                 o.level);
      rep.critical_tn =
          frank::critical_lookup(*table, frank::GofStat::TN,
                                 static_cast<double>(raw.n), rep.theta_use,
                                 o.level);
      have_crit = true;
    } catch (const std::domain_error& e) {
      throw std::domain_error(std::string(e.what()) + " [needed cell n=" +
                              std::to_string(raw.n) + ", theta_use=" +
                              fmt(rep.theta_use, false) + ", level=" +
                              fmt(o.level, false) + "]");
    }
  }

  OutputTarget out(o.out);
  std::ostream& os = out.stream();
  write_header(os, config, o.seed);
  os << "key,value\n";
  os << "input," << o.in << "\n";
  os << "x," << raw.x_label << "\n";
  os << "y," << raw.y_label << "\n";
  os << "n," << raw.n << "\n";
  os << "theta_hat," << fmt(rep.theta_hat, o.paper_format) << "\n";
  os << "theta_use," << fmt(rep.theta_use, o.paper_format) << "\n";
  os << "reoriented," << (rep.reoriented ? 1 : 0) << "\n";
  os << "sn," << fmt(rep.sn, o.paper_format) << "\n";
  os << "tn," << fmt(rep.tn, o.paper_format) << "\n";
  os << "sn_cmp," << fmt(rep.sn_cmp, o.paper_format) << "\n";
  os << "tn_cmp," << fmt(rep.tn_cmp, o.paper_format) << "\n";
  if (have_crit) {
    os << "level," << fmt(o.level, o.paper_format) << "\n";
    os << "critical_sn," << fmt(rep.critical_sn, o.paper_format) << "\n";
    os << "critical_tn," << fmt(rep.critical_tn, o.paper_format) << "\n";
    os << "verdict_sn,"
       << (rep.sn_cmp > rep.critical_sn ? "rejected" : "not rejected") << "\n";
    os << "verdict_tn,"
       << (rep.tn_cmp > rep.critical_tn ? "rejected" : "not rejected") << "\n";
  }
  if (o.bootstrap > 0) {
    os << "p_boot_sn," << fmt(rep.p_boot_sn, o.paper_format) << "\n";
    os << "p_boot_tn," << fmt(rep.p_boot_tn, o.paper_format) << "\n";
    os << "bootstrap_reps," << rep.bootstrap_reps << "\n";
    os << "bootstrap_redraws," << rep.bootstrap_redraws << "\n";
  }
  out.commit();
}

void cmd_crit_table(const Options& o, const std::string& config) {
  const frank::CriticalValueTable table = frank::build_critical_table(
      o.n_grid, o.theta_grid, o.levels, o.reps, o.seed, o.threads);
  OutputTarget out(o.out);
  std::ostream& os = out.stream();
  write_header(os, config, o.seed);
  frank::save_critical_table(table, os);
  out.commit();
}

void cmd_bias_mse(const Options& o, const std::string& config) {
  frank::ExperimentPlan plan;
  plan.n_grid = o.n_grid;
  plan.theta_grid = o.theta_grid;
  plan.reps_total = o.reps;
  plan.batches = o.batches;
  plan.seed = o.seed;
  plan.center_true = !o.center_at_mle;
  plan.estimators.clear();
  for (const std::string& name : o.estimators)
    plan.estimators.push_back(parse_method(name));

  const frank::SimulationReport report = frank::run_plan(plan, o.threads);

  OutputTarget out(o.out);
  std::ostream& os = out.stream();
  write_header(os, config, o.seed);
  frank::save_report_csv(report, os);
  out.commit();

  if (!o.out.empty()) {
    OutputTarget aux(o.out + ".long");
    std::ostream& as = aux.stream();
    write_header(as, config, o.seed);
    frank::save_report_long(report, as);
    aux.commit();
  }
}

void cmd_bootstrap(const Options& o, const std::string& config) {
  const frank::BivariateSample raw = load_input(o);
  const frank::BootstrapResult res =
      frank::bootstrap_pvalues(raw.x, raw.y, o.reps, o.seed, o.threads);

  OutputTarget out(o.out);
  std::ostream& os = out.stream();
  write_header(os, config, o.seed);
  os << "key,value\n";
  os << "input," << o.in << "\n";
  os << "x," << raw.x_label << "\n";
  os << "y," << raw.y_label << "\n";
  os << "n," << raw.n << "\n";
  os << "theta_hat," << fmt(res.theta_obs, o.paper_format) << "\n";
  os << "sn_obs," << fmt(res.sn_obs, o.paper_format) << "\n";
  os << "tn_obs," << fmt(res.tn_obs, o.paper_format) << "\n";
  os << "p_boot_sn," << fmt(res.p_sn, o.paper_format) << "\n";
  os << "p_boot_tn," << fmt(res.p_tn, o.paper_format) << "\n";
  os << "bootstrap_reps," << res.b << "\n";
  os << "bootstrap_redraws," << res.redraws << "\n";
  out.commit();
}

void cmd_correlations(const Options& o, const std::string& config) {
  const frank::BivariateSample raw = load_input(o);
  const frank::CorrelationEstimates nonpar = frank::correlations(raw);
  const double tau_a = frank::kendall_hat_tau_a(raw);
  const frank::PseudoSample ps = frank::pseudo_observations(raw);
  const double theta_hat = frank::mle(ps.pairs).estimate;
  const frank::CorrelationEstimates par =
      frank::parametric_correlations(theta_hat);

  OutputTarget out(o.out);
  std::ostream& os = out.stream();
  write_header(os, config, o.seed);
  os << "key,value\n";
  os << "input," << o.in << "\n";
  os << "x," << raw.x_label << "\n";
  os << "y," << raw.y_label << "\n";
  os << "n," << raw.n << "\n";
  os << "bdl_x," << raw.bdl_x << "\n";
  os << "bdl_y," << raw.bdl_y << "\n";
  os << "kendall," << fmt(nonpar.kendall, o.paper_format) << "\n";
  os << "kendall_tau_a," << fmt(tau_a, o.paper_format) << "\n";
  os << "spearman," << fmt(nonpar.spearman, o.paper_format) << "\n";
  os << "pearson," << fmt(nonpar.pearson, o.paper_format) << "\n";
  os << "theta_hat," << fmt(theta_hat, o.paper_format) << "\n";
  os << "parametric_kendall," << fmt(par.kendall, o.paper_format) << "\n";
  os << "parametric_spearman," << fmt(par.spearman, o.paper_format) << "\n";
  out.commit();
}

void cmd_rho_curves(const Options& o, const std::string& config) {
  struct Row {
    double theta, rho_k, rho_s, pi_jp;
  };
  std::vector<Row> rows;
  rows.reserve(o.theta_grid.size());
  for (const double theta : o.theta_grid) {
    rows.push_back(Row{theta, frank::kendall_tau(theta),
                       frank::spearman_rho(theta),
                       frank::jeffreys_prior(theta)});
  }

  OutputTarget out(o.out);
  std::ostream& os = out.stream();
  write_header(os, config, o.seed);
  os << "theta,rho_k,rho_s,pi_jp\n";
  for (const Row& r : rows) {
    os << fmt(r.theta, o.paper_format) << ',' << fmt(r.rho_k, o.paper_format)
       << ',' << fmt(r.rho_s, o.paper_format) << ','
       << fmt(r.pi_jp, o.paper_format) << "\n";
  }
  out.commit();
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Frank copula estimation and goodness-of-fit toolkit"};
  app.set_version_flag("--version", std::string("frankcli ") + FRANK_VERSION);
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* c) {
    c->add_option("--out", o.out, "output file (default: stdout)");
    c->add_option("--seed", o.seed, "RNG seed recorded in the output");
    c->add_option("--threads", o.threads,
                  "worker threads (0 = machine parallelism)");
    c->add_flag("--paper-format", o.paper_format,
                "3-decimal rendering for side-by-side table comparison");
  };
  auto add_data = [&](CLI::App* c) {
    c->add_option("--in", o.in, "input CSV with a header row")->required();
    c->add_option("--x", o.x_col, "x column name")->required();
    c->add_option("--y", o.y_col, "y column name")->required();
    c->add_option("--schema", o.schema,
                  "JSON sidecar with units and bdl substitutions "
                  "(default: built-in groundwater schema)");
  };

  CLI::App* estimate =
      app.add_subcommand("estimate", "all point and posterior-mean estimates");
  add_data(estimate);
  add_common(estimate);

  CLI::App* gof = app.add_subcommand(
      "gof", "S_n/T_n statistics, table verdicts, bootstrap p-values");
  add_data(gof);
  add_common(gof);
  gof->add_option("--table", o.table, "critical-value table CSV");
  gof->add_option("--level", o.level, "test level (default 0.95)");
  gof->add_option("--bootstrap", o.bootstrap,
                  "bootstrap replications B (0 = skip)");

  CLI::App* crit =
      app.add_subcommand("crit-table", "simulate a critical-value table");
  add_common(crit);
  crit->add_option("--n-grid", o.n_grid, "sample sizes")
      ->required()
      ->delimiter(',');
  crit->add_option("--theta-grid", o.theta_grid, "theta values")
      ->required()
      ->delimiter(',');
  crit->add_option("--level", o.levels, "levels (default 0.90,0.95)")
      ->delimiter(',');
  crit->add_option("--reps", o.reps, "replications per cell (default 10000)");

  CLI::App* bias =
      app.add_subcommand("bias-mse", "bias/MSE simulation over a grid");
  add_common(bias);
  bias->add_option("--n-grid", o.n_grid, "sample sizes")
      ->required()
      ->delimiter(',');
  bias->add_option("--theta-grid", o.theta_grid, "theta values")
      ->required()
      ->delimiter(',');
  bias->add_option("--reps", o.reps, "total replications M (default 10000)");
  bias->add_option("--batches", o.batches, "SE batches (default 4)");
  bias->add_option("--estimators", o.estimators,
                   "estimators (default mle_score,bfpe,bjpe)")
      ->delimiter(',');
  bias->add_flag("--center-at-mle", o.center_at_mle,
                 "center the posterior window at each replication's MLE "
                 "instead of the true theta");

  CLI::App* boot =
      app.add_subcommand("bootstrap", "bootstrap p-values for S_n and T_n");
  add_data(boot);
  add_common(boot);
  boot->add_option("--reps", o.reps, "bootstrap replications B");

  CLI::App* corr = app.add_subcommand(
      "correlations", "sample and model-implied correlation estimates");
  add_data(corr);
  add_common(corr);

  CLI::App* rho = app.add_subcommand(
      "rho-curves", "rho_K, rho_S, and the Jeffreys prior on a theta grid");
  add_common(rho);
  rho->add_option("--theta-grid", o.theta_grid, "theta values")
      ->required()
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string config = join_args(argc, argv);
  try {
    if (app.got_subcommand(estimate)) cmd_estimate(o, config);
    else if (app.got_subcommand(gof)) cmd_gof(o, config);
    else if (app.got_subcommand(crit)) cmd_crit_table(o, config);
    else if (app.got_subcommand(bias)) cmd_bias_mse(o, config);
    else if (app.got_subcommand(boot)) cmd_bootstrap(o, config);
    else if (app.got_subcommand(corr)) cmd_correlations(o, config);
    else if (app.got_subcommand(rho)) cmd_rho_curves(o, config);
  } catch (const frank::DataError& e) {
    std::cerr << "frankcli: data error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "frankcli: usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "frankcli: numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
