// Acceptance gate: exercises the seven release criteria end to end and
// prints exactly one PASS/FAIL line per criterion with the measured values.
// Exit status is nonzero when any criterion fails.
//
//   --smoke   run the reduced-cost profile of the critical-value criterion
//             only (10^3 replications, +-0.04 tolerance, 180 s budget).
//
// Tolerances are pinned in code next to each criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "frank/copula.hpp"
#include "frank/data_io.hpp"
#include "frank/estimation.hpp"
#include "frank/gof.hpp"
#include "frank/montecarlo.hpp"
#include "frank/rng.hpp"
#include "frank/stats.hpp"

#ifndef FRANK_DATA_DIR
#error "FRANK_DATA_DIR must point at the bundled datasets"
#endif

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string dataset(const char* name) {
  return std::string(FRANK_DATA_DIR) + "/" + name;
}

// ---------------------------------------------------------------------------
// Criterion 1: Kendall's tau at the four anchor parameters.
// ---------------------------------------------------------------------------
void criterion_tau_anchors() {
  const struct { double theta, tau; } anchors[] = {
      {1.861, 0.2}, {4.161, 0.4}, {7.930, 0.6}, {18.192, 0.8}};
  const double tol = 0.005;
  double worst = 0.0;
  for (const auto& a : anchors) {
    worst = std::max(worst, std::fabs(frank::kendall_tau(a.theta) - a.tau));
  }
  report(1, worst <= tol,
         "tau at theta {1.861, 4.161, 7.930, 18.192} hits {0.2, 0.4, 0.6, "
         "0.8}; max |error| " + num(worst) + " (tol " + num(tol) + ")");
}

// ---------------------------------------------------------------------------
// Criterion 2: simulated 95% critical values at n = 100.
// ---------------------------------------------------------------------------
void criterion_critical_values(bool smoke) {
  const double thetas[] = {1.861, 4.161, 7.930, 18.192};
  const double ref_sn[] = {0.157, 0.133, 0.102, 0.058};
  const double ref_tn[] = {0.961, 0.895, 0.813, 0.645};
  const std::size_t reps = smoke ? 1000 : 10000;
  const double tol_sn = smoke ? 0.04 : 0.012;
  const double tol_tn = smoke ? 0.04 : 0.03;
  const double cell_budget_s = smoke ? 180.0 : 1800.0;

  double worst_sn = 0.0;
  double worst_tn = 0.0;
  double slowest = 0.0;
  const auto t_all = std::chrono::steady_clock::now();
  for (int i = 0; i < 4; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cell = frank::simulate_critical_values(
        100, thetas[i], {0.95}, reps, 20260800 + static_cast<std::uint64_t>(i));
    slowest = std::max(slowest, seconds_since(t0));
    worst_sn = std::max(worst_sn, std::fabs(cell.sn[0] - ref_sn[i]));
    worst_tn = std::max(worst_tn, std::fabs(cell.tn[0] - ref_tn[i]));
  }
  const double total_s = seconds_since(t_all);
  bool pass = worst_sn <= tol_sn && worst_tn <= tol_tn;
  std::string detail =
      std::string(smoke ? "smoke " : "") + "critical values, n=100, " +
      std::to_string(reps) + " reps: max |dSn| " + num(worst_sn) + " (tol " +
      num(tol_sn) + "), max |dTn| " + num(worst_tn) + " (tol " + num(tol_tn) +
      "), slowest cell " + num(slowest, 1) + " s";
  if (smoke) {
    pass = pass && total_s <= cell_budget_s;
    detail += ", total " + num(total_s, 1) + " s (budget 180 s)";
  } else {
    pass = pass && slowest <= cell_budget_s;
  }
  report(2, pass, detail);
}

// ---------------------------------------------------------------------------
// Criterion 3: bias/MSE table reproduction and the MSE ordering.
// ---------------------------------------------------------------------------
void criterion_bias_mse() {
  bool pass = true;
  std::string detail;

  {
    frank::ExperimentPlan plan;
    plan.n_grid = {50};
    plan.theta_grid = {5.0};
    plan.reps_total = 10000;
    plan.estimators = {frank::Method::MLE_SCORE};
    plan.seed = 42;
    const auto rep = frank::run_cell(50, 5.0, plan);
    const auto& mle = rep.front();
    const double bias_tol = 3.0 * std::sqrt(mle.bias_se * mle.bias_se + 0.006 * 0.006);
    const double mse_tol = 3.0 * std::sqrt(mle.mse_se * mle.mse_se + 0.009 * 0.009);
    const bool ok_bias = std::fabs(mle.bias - 0.104) <= bias_tol;
    const bool ok_mse = std::fabs(mle.mse - 1.148) <= mse_tol;
    pass = pass && ok_bias && ok_mse;
    detail += "n=50 theta=5 MLE bias " + num(mle.bias) + " vs 0.104 (tol " +
              num(bias_tol) + "), mse " + num(mle.mse) + " vs 1.148 (tol " +
              num(mse_tol) + ")";
  }

  {
    frank::ExperimentPlan plan;
    plan.n_grid = {15};
    plan.theta_grid = {3.0, 5.0, 10.0};
    plan.reps_total = 10000;
    plan.estimators = {frank::Method::MLE_SCORE, frank::Method::BFPE,
                       frank::Method::BJPE};
    plan.seed = 42;
    bool order_ok = true;
    for (double theta : plan.theta_grid) {
      const auto rep = frank::run_cell(15, theta, plan);
      const frank::CellResult* mle = nullptr;
      const frank::CellResult* bfpe = nullptr;
      const frank::CellResult* bjpe = nullptr;
      for (const auto& c : rep) {
        if (c.estimator == frank::Method::MLE_SCORE) mle = &c;
        if (c.estimator == frank::Method::BFPE) bfpe = &c;
        if (c.estimator == frank::Method::BJPE) bjpe = &c;
      }
      const double slack_jm =
          2.0 * std::sqrt(bjpe->mse_se * bjpe->mse_se + mle->mse_se * mle->mse_se);
      const double slack_mf =
          2.0 * std::sqrt(mle->mse_se * mle->mse_se + bfpe->mse_se * bfpe->mse_se);
      order_ok = order_ok && bjpe->mse <= mle->mse + slack_jm &&
                 mle->mse <= bfpe->mse + slack_mf;
    }
    pass = pass && order_ok;
    detail += std::string("; n=15 MSE ordering BJPE <= MLE <= BFPE at theta "
                          "{3, 5, 10} within 2 SE: ") +
              (order_ok ? "holds" : "violated");
  }

  report(3, pass, detail);
}

// ---------------------------------------------------------------------------
// Criterion 4: applied fits and model-implied correlations, all eight pairs.
// ---------------------------------------------------------------------------
struct AppliedRef {
  const char* file;
  const char* x;
  const char* y;
  double theta, sn, tn;          // observed fit
  double par_tau, par_rho;       // model-implied correlations at theta_hat
  double p_sn, p_tn;             // bootstrap p-values (criterion 5)
};

const AppliedRef kApplied[] = {
    {"north.csv", "As", "Cl", -0.560, 0.158, 0.758, -0.062, -0.093, 0.978, 0.993},
    {"north.csv", "As", "Eh", -1.912, 0.192, 0.741, -0.205, -0.304, 0.932, 0.991},
    {"north.csv", "As", "pH", 2.898, 0.080, 0.574, 0.298, 0.436, 0.999, 1.000},
    {"north.csv", "Eh", "pH", -4.006, 0.304, 1.084, -0.389, -0.558, 0.959, 0.949},
    {"south.csv", "As", "Cl", -2.157, 0.144, 0.877, -0.229, -0.339, 0.982, 0.956},
    {"south.csv", "As", "Eh", -7.017, 0.199, 0.707, -0.563, -0.764, 0.991, 1.000},
    {"south.csv", "As", "pH", 0.920, 0.320, 1.118, 0.101, 0.152, 0.909, 0.946},
    {"south.csv", "Eh", "pH", 0.325, 0.111, 0.859, 0.036, 0.054, 0.997, 0.944},
};

void criterion_applied_fits() {
  double worst_theta = 0.0;
  double worst_stat = 0.0;
  double worst_corr = 0.0;
  for (const auto& ref : kApplied) {
    const auto data = frank::load_dataset(dataset(ref.file), ref.x, ref.y);
    const auto ps = frank::pseudo_observations(data);
    const double theta_hat = frank::mle(ps.pairs).estimate;
    worst_theta = std::max(worst_theta, std::fabs(theta_hat - ref.theta));
    worst_stat = std::max(
        worst_stat, std::fabs(frank::sn_statistic(ps, theta_hat) - ref.sn));
    worst_stat = std::max(
        worst_stat, std::fabs(frank::tn_statistic(ps, theta_hat) - ref.tn));
    const auto par = frank::parametric_correlations(theta_hat);
    worst_corr = std::max(worst_corr, std::fabs(par.kendall - ref.par_tau));
    worst_corr = std::max(worst_corr, std::fabs(par.spearman - ref.par_rho));
  }
  const bool pass = worst_theta <= 0.01 && worst_stat <= 0.005 && worst_corr <= 0.005;
  report(4, pass,
         "eight applied fits: max |dtheta| " + num(worst_theta) +
             " (tol 0.0100), max |dstat| " + num(worst_stat) +
             " (tol 0.0050), max |dcorr| " + num(worst_corr) + " (tol 0.0050)");
}

// ---------------------------------------------------------------------------
// Criterion 5: bootstrap p-values for all eight pairs at B = 10^4.
// ---------------------------------------------------------------------------
void criterion_bootstrap_pvalues() {
  double worst = 0.0;
  double smallest = 1.0;
  int idx = 0;
  for (const auto& ref : kApplied) {
    const auto data = frank::load_dataset(dataset(ref.file), ref.x, ref.y);
    const auto res = frank::bootstrap_pvalues(
        data.x, data.y, 10000, 5150 + static_cast<std::uint64_t>(idx++));
    worst = std::max(worst, std::fabs(res.p_sn - ref.p_sn));
    worst = std::max(worst, std::fabs(res.p_tn - ref.p_tn));
    smallest = std::min(smallest, std::min(res.p_sn, res.p_tn));
  }
  const bool pass = worst <= 0.02 && smallest > 0.90;
  report(5, pass,
         "sixteen bootstrap p-values at B=10000: max |dp| " + num(worst) +
             " (tol 0.0200), smallest p " + num(smallest) + " (> 0.90)");
}

// ---------------------------------------------------------------------------
// Criterion 6: oracle equivalences.
// ---------------------------------------------------------------------------

// xorshift64* generator, deliberately unrelated to the library RNG.
struct OracleRand {
  std::uint64_t s;
  explicit OracleRand(std::uint64_t seed) : s(seed | 1) {}
  std::uint64_t next_u64() {
    s ^= s >> 12;
    s ^= s << 25;
    s ^= s >> 27;
    return s * 0x2545F4914F6CDD1DULL;
  }
  double next() { return ((next_u64() >> 11) + 0.5) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }
};

double direct_sn(const std::vector<double>& w, double theta) {
  const std::size_t n = w.size();
  const int nodes = 2000;
  double acc = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    const double a = static_cast<double>(j) / static_cast<double>(n);
    const double b = std::min(static_cast<double>(j + 1) / static_cast<double>(n), 1.0);
    if (b <= a) continue;
    const double h = (b - a) / nodes;
    for (int q = 0; q < nodes; ++q) {
      const double t = a + (q + 0.5) * h;
      const double diff = frank::empirical_k(w, t) - frank::k_cdf(t, theta);
      acc += diff * diff * frank::k_density(t, theta) * h;
    }
  }
  return static_cast<double>(n) * acc;
}

double direct_tn(const std::vector<double>& w, double theta) {
  const std::size_t n = w.size();
  const double lo = 1.0 / static_cast<double>(n);
  double sup = 0.0;
  auto probe = [&](double t) {
    if (t < lo || t > 1.0) return;
    sup = std::max(sup, std::fabs(frank::empirical_k(w, t) - frank::k_cdf(t, theta)));
  };
  for (std::size_t j = 1; j <= n; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(n);
    probe(t);
    probe(t - 1e-9);
  }
  for (int g = 0; g <= 20000; ++g) {
    probe(lo + (1.0 - lo) * g / 20000.0);
  }
  return std::sqrt(static_cast<double>(n)) * sup;
}

double naive_j(double u, double v, double theta) {
  const double eu = std::exp(-theta * u);
  const double ev = std::exp(-theta * v);
  const double ez = std::exp(-theta);
  const double euv = std::exp(-theta * (u + v));
  const double a2 = eu + ev - ez - euv;
  const double a2p = -u * eu - v * ev + ez + (u + v) * euv;
  const double a2pp = u * u * eu + v * v * ev - ez - (u + v) * (u + v) * euv;
  return (a2p * a2p - a2 * a2pp) / (a2 * a2);
}

void criterion_oracles() {
  bool pass = true;
  std::string detail;

  // (a) S_n and T_n lattice formulas vs direct integral/supremum.
  {
    OracleRand rand(0xC6A5ULL);
    double worst = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
      const std::size_t n = 2 + static_cast<std::size_t>(rand.next() * 9);
      std::vector<double> x, y;
      for (std::size_t i = 0; i < n; ++i) {
        x.push_back(rand.next());
        y.push_back(rand.next());
      }
      const auto ps = frank::pseudo_observations(x, y);
      const double theta = rand.uniform(-8.0, 8.0);
      worst = std::max(worst, std::fabs(frank::sn_statistic(ps, theta) -
                                        direct_sn(ps.w, theta)));
      worst = std::max(worst, std::fabs(frank::tn_statistic(ps, theta) -
                                        direct_tn(ps.w, theta)));
    }
    pass = pass && worst <= 1e-6;
    detail += "Sn/Tn vs direct forms max " + num(worst, 9);
  }

  // (b) score vs finite differences of the log-likelihood.
  {
    OracleRand rand(0x5C04EULL);
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
      const std::size_t n = 5 + static_cast<std::size_t>(rand.next() * 36);
      const auto pairs = frank::sample(n, rand.uniform(-10.0, 10.0),
                                       31000 + static_cast<std::uint64_t>(c));
      const auto ps = frank::PreparedSample::from(pairs);
      const double theta0 = rand.uniform(-8.0, 8.0);
      const double h = 1e-5 * std::max(1.0, std::fabs(theta0));
      const double fd = (frank::log_likelihood(ps, theta0 + h) -
                         frank::log_likelihood(ps, theta0 - h)) /
                        (2.0 * h * static_cast<double>(n));
      worst = std::max(worst, std::fabs(frank::score(ps, theta0) - fd));
    }
    pass = pass && worst <= 1e-5;
    detail += ", score vs FD max " + num(worst, 8);
  }

  // (c) Fisher i2 quadrature vs Monte Carlo of the direct integrand.
  {
    double worst = 0.0;
    int idx = 0;
    for (double theta : {1.0, -1.0, 3.0, -3.0, 8.0, -8.0}) {
      const auto pairs =
          frank::sample(400000, theta, 616000 + static_cast<std::uint64_t>(idx++));
      double acc = 0.0;
      for (const auto& p : pairs) acc += naive_j(p.u, p.v, theta);
      const double mc = 2.0 * acc / static_cast<double>(pairs.size());
      worst = std::max(worst, std::fabs(mc - frank::fisher_information(theta).i2));
    }
    pass = pass && worst <= 1e-3;
    detail += ", i2 quad vs MC max " + num(worst, 6);
  }

  // (d) Kendall-distribution cdf vs an independent long-double evaluation of
  // the generator form t - phi(t)/phi'(t) on a 20x20 grid of signed theta.
  {
    double worst = 0.0;
    for (int i = 1; i <= 20; ++i) {
      const double t = i / 21.0;
      for (int j = 1; j <= 20; ++j) {
        const double theta = -10.0 + (j - 1) * 20.0 / 19.0;
        const long double th = theta;
        const long double tl = t;
        const long double phi =
            -std::log((std::exp(-th * tl) - 1.0L) / (std::exp(-th) - 1.0L));
        const long double dphi =
            th * std::exp(-th * tl) / (std::exp(-th * tl) - 1.0L);
        const long double ref = tl - phi / dphi;
        worst = std::max(
            worst, std::fabs(frank::k_cdf(t, theta) - static_cast<double>(ref)));
      }
    }
    pass = pass && worst <= 1e-10;
    detail += ", K generator-form max " + num(worst, 12);
  }

  // (e) sampler recovers the model tau.
  {
    double worst = 0.0;
    int idx = 0;
    for (double theta : {-10.0, -3.0, 0.0, 3.0, 10.0}) {
      const auto pairs =
          frank::sample(100000, theta, 909000 + static_cast<std::uint64_t>(idx++));
      std::vector<double> u, v;
      for (const auto& p : pairs) {
        u.push_back(p.u);
        v.push_back(p.v);
      }
      worst = std::max(worst, std::fabs(frank::stats::kendall_tau_b(u, v) -
                                        frank::kendall_tau(theta)));
    }
    pass = pass && worst <= 0.01;
    detail += ", sampler tau max " + num(worst);
  }

  report(6, pass, detail);
}

// ---------------------------------------------------------------------------
// Criterion 7: byte-identical Monte Carlo results at any thread count.
// ---------------------------------------------------------------------------
void criterion_determinism() {
  bool pass = true;

  const auto cell1 = frank::simulate_critical_values(50, 3.0, {0.90, 0.95}, 500, 777, 1);
  const auto cell4 = frank::simulate_critical_values(50, 3.0, {0.90, 0.95}, 500, 777, 4);
  pass = pass && cell1.sn == cell4.sn && cell1.tn == cell4.tn;

  frank::ExperimentPlan plan;
  plan.n_grid = {25};
  plan.theta_grid = {3.0};
  plan.reps_total = 200;
  plan.estimators = {frank::Method::MLE_SCORE, frank::Method::BFPE,
                     frank::Method::BJPE};
  plan.seed = 4242;
  const auto run1 = frank::run_cell(25, 3.0, plan, 1);
  const auto run4 = frank::run_cell(25, 3.0, plan, 4);
  for (std::size_t i = 0; i < run1.size(); ++i) {
    pass = pass && run1[i].bias == run4[i].bias && run1[i].mse == run4[i].mse &&
           run1[i].bias_se == run4[i].bias_se && run1[i].mse_se == run4[i].mse_se;
  }

  const auto north = frank::load_dataset(dataset("north.csv"), "As", "pH");
  const auto boot1 = frank::bootstrap_pvalues(north.x, north.y, 300, 99, 1);
  const auto boot3 = frank::bootstrap_pvalues(north.x, north.y, 300, 99, 3);
  pass = pass && boot1.p_sn == boot3.p_sn && boot1.p_tn == boot3.p_tn;

  report(7, pass,
         "critical-value cell, bias/MSE cell, and bootstrap byte-identical "
         "at thread counts {1, 3, 4}");
}

}  // namespace

int main(int argc, char** argv) {
  bool smoke = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--smoke") == 0) smoke = true;
  }

  if (smoke) {
    criterion_tau_anchors();
    criterion_critical_values(true);
  } else {
    criterion_tau_anchors();
    criterion_critical_values(false);
    criterion_bias_mse();
    criterion_applied_fits();
    criterion_bootstrap_pvalues();
    criterion_oracles();
    criterion_determinism();
  }

  if (g_failures > 0) {
    std::printf("ACCEPTANCE: %d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("ACCEPTANCE: all criteria passed\n");
  return 0;
}
