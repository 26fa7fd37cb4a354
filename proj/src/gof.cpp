#include "frank/gof.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "frank/estimation.hpp"
#include "frank/parallel.hpp"
#include "frank/rng.hpp"

namespace frank {

namespace {

// K_n on the lattice: kn[j-1] = K_n(j/n) for j = 1..n, from the histogram of
// the W_j (each W_j is an exact multiple of 1/n).
std::vector<double> kn_lattice(const std::vector<double>& w, std::size_t n) {
  std::vector<std::size_t> counts(n + 1, 0);
  for (const double wj : w) {
    auto j = static_cast<std::size_t>(std::llround(wj * static_cast<double>(n)));
    if (j < 1) j = 1;
    if (j > n) j = n;
    ++counts[j];
  }
  std::vector<double> kn(n);
  std::size_t cum = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    cum += counts[j];
    kn[j - 1] = static_cast<double>(cum) / static_cast<double>(n);
  }
  return kn;
}

// K(j/n | theta) for j = 1..n+1 with the (n+1)/n argument clamped to 1.
std::vector<double> model_k_lattice(std::size_t n, double theta) {
  std::vector<double> k(n + 1);
  for (std::size_t j = 1; j <= n; ++j)
    k[j - 1] = k_cdf(static_cast<double>(j) / static_cast<double>(n), theta);
  k[n] = 1.0;
  return k;
}

struct SnTn {
  double sn = 0.0;
  double tn = 0.0;
};

SnTn sn_tn_from_w(const std::vector<double>& w, std::size_t n, double theta) {
  const std::vector<double> kn = kn_lattice(w, n);
  const std::vector<double> k = model_k_lattice(n, theta);
  const auto dn = static_cast<double>(n);

  double sum1 = 0.0;  // sum_{j=1}^{n-1} Kn(j/n)^2 {K((j+1)/n) - K(j/n)}
  for (std::size_t j = 1; j < n; ++j)
    sum1 += kn[j - 1] * kn[j - 1] * (k[j] - k[j - 1]);
  double sum2 = 0.0;  // sum_{j=1}^{n} Kn(j/n) {K^2((j+1)/n) - K^2(j/n)}
  for (std::size_t j = 1; j <= n; ++j)
    sum2 += kn[j - 1] * (k[j] * k[j] - k[j - 1] * k[j - 1]);
  const double sn = dn / 3.0 + dn * sum1 - dn * sum2;

  double sup = 0.0;  // max_{j=1..n, i in {0,1}} |Kn(j/n) - K((j+i)/n)|
  for (std::size_t j = 1; j <= n; ++j) {
    sup = std::max(sup, std::abs(kn[j - 1] - k[j - 1]));
    sup = std::max(sup, std::abs(kn[j - 1] - k[j]));
  }
  return SnTn{sn, std::sqrt(dn) * sup};
}

std::size_t percentile_rank(std::size_t count, double level) {
  // ceil(count * level) with a guard against floating-point excess
  // (e.g. 1000 * 0.95 evaluating just above 950).
  double r = std::ceil(static_cast<double>(count) * level - 1e-9);
  if (r < 1.0) r = 1.0;
  if (r > static_cast<double>(count)) r = static_cast<double>(count);
  return static_cast<std::size_t>(r);
}

std::size_t count_distinct_rows(std::vector<std::pair<double, double>> rows) {
  std::sort(rows.begin(), rows.end());
  return static_cast<std::size_t>(
      std::unique(rows.begin(), rows.end()) - rows.begin());
}

}  // namespace

PseudoSample pseudo_observations(const std::vector<double>& x,
                                 const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (y.size() != n)
    throw std::invalid_argument("pseudo_observations: size mismatch");
  if (n < 2)
    throw std::invalid_argument("pseudo_observations: need at least 2 rows");

  PseudoSample ps;
  ps.n = n;
  ps.pairs.resize(n);
  ps.w.resize(n);
  const double scale = 1.0 / (static_cast<double>(n) + 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t cx = 0, cy = 0, cxy = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const bool lx = x[k] <= x[j];
      const bool ly = y[k] <= y[j];
      cx += lx;
      cy += ly;
      cxy += lx && ly;
    }
    // Adjusted ECDF margins; ties take the <=-count (max rank).
    ps.pairs[j].u = (static_cast<double>(cx) + 0.5) * scale;
    ps.pairs[j].v = (static_cast<double>(cy) + 0.5) * scale;
    ps.w[j] = static_cast<double>(cxy) / static_cast<double>(n);
  }
  return ps;
}

PseudoSample pseudo_observations(const BivariateSample& raw) {
  return pseudo_observations(raw.x, raw.y);
}

std::vector<double> dominance_fractions(const std::vector<UnitPair>& pairs) {
  const std::size_t n = pairs.size();
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t c = 0;
    for (std::size_t k = 0; k < n; ++k)
      c += pairs[k].u <= pairs[j].u && pairs[k].v <= pairs[j].v;
    w[j] = static_cast<double>(c) / static_cast<double>(n);
  }
  return w;
}

PseudoSample reflect(const PseudoSample& ps) {
  PseudoSample out;
  out.n = ps.n;
  out.pairs = reflect(ps.pairs);
  // Grades preserve the raw-data order (including ties), so dominance
  // counting on the reflected grades realizes the (<=, >=) counts.
  out.w = dominance_fractions(out.pairs);
  return out;
}

double empirical_k(const std::vector<double>& w, double t) {
  std::size_t c = 0;
  for (const double wj : w) c += wj <= t;
  return static_cast<double>(c) / static_cast<double>(w.size());
}

double empirical_k(const PseudoSample& ps, double t) {
  return empirical_k(ps.w, t);
}

double sn_statistic(const std::vector<double>& w, double theta_hat) {
  return sn_tn_from_w(w, w.size(), theta_hat).sn;
}

double sn_statistic(const PseudoSample& ps, double theta_hat) {
  return sn_tn_from_w(ps.w, ps.n, theta_hat).sn;
}

double tn_statistic(const std::vector<double>& w, double theta_hat) {
  return sn_tn_from_w(w, w.size(), theta_hat).tn;
}

double tn_statistic(const PseudoSample& ps, double theta_hat) {
  return sn_tn_from_w(ps.w, ps.n, theta_hat).tn;
}

const char* gof_stat_name(GofStat s) {
  return s == GofStat::SN ? "Sn" : "Tn";
}

ThetaUseDecision theta_use_policy(double theta_hat) {
  return ThetaUseDecision{std::abs(theta_hat), theta_hat <= -2.5};
}

double empirical_percentile(std::vector<double> values, double level) {
  if (values.empty())
    throw std::invalid_argument("empirical_percentile: empty sample");
  if (!(level > 0.0 && level <= 1.0))
    throw std::invalid_argument("empirical_percentile: level outside (0,1]");
  std::sort(values.begin(), values.end());
  return values[percentile_rank(values.size(), level) - 1];
}

CriticalCell simulate_critical_values(std::size_t n, double theta,
                                      const std::vector<double>& levels,
                                      std::size_t reps, std::uint64_t seed,
                                      unsigned threads) {
  if (n < 2) throw std::invalid_argument("simulate_critical_values: n < 2");
  if (reps < 100)
    throw std::invalid_argument("simulate_critical_values: reps < 100");

  std::vector<double> sn_all(reps), tn_all(reps);
  std::vector<unsigned char> nonconv(reps, 0);
  parallel_for(reps, threads, [&](std::size_t r) {
    Rng rng(seed, r);
    const std::vector<UnitPair> sample_pairs = sample(n, theta, rng);
    // Margins-known null: the sampled pairs feed both the MLE and the
    // dominance counts directly, with no rank transform.
    const EstimatorResult est = mle(sample_pairs);
    if (!est.converged) nonconv[r] = 1;
    const std::vector<double> w = dominance_fractions(sample_pairs);
    const SnTn st = sn_tn_from_w(w, n, est.estimate);
    sn_all[r] = st.sn;
    tn_all[r] = st.tn;
  });

  CriticalCell cell;
  cell.n = n;
  cell.theta = theta;
  cell.levels = levels;
  cell.replications = reps;
  cell.seed = seed;
  for (const unsigned char f : nonconv) cell.mle_nonconverged += f;

  std::sort(sn_all.begin(), sn_all.end());
  std::sort(tn_all.begin(), tn_all.end());
  for (const double level : levels) {
    const std::size_t rank = percentile_rank(reps, level);
    cell.sn.push_back(sn_all[rank - 1]);
    cell.tn.push_back(tn_all[rank - 1]);
  }
  return cell;
}

std::uint64_t table_cell_seed(std::uint64_t table_seed,
                              std::size_t cell_index) {
  return splitmix64(splitmix64(table_seed) +
                    static_cast<std::uint64_t>(cell_index));
}

CriticalValueTable build_critical_table(const std::vector<std::size_t>& n_grid,
                                        const std::vector<double>& theta_grid,
                                        const std::vector<double>& levels,
                                        std::size_t reps, std::uint64_t seed,
                                        unsigned threads) {
  if (n_grid.empty() || theta_grid.empty() || levels.empty())
    throw std::invalid_argument("build_critical_table: empty grid");
  if (!std::is_sorted(n_grid.begin(), n_grid.end()) ||
      !std::is_sorted(theta_grid.begin(), theta_grid.end()) ||
      !std::is_sorted(levels.begin(), levels.end()))
    throw std::invalid_argument("build_critical_table: grids must be ascending");

  CriticalValueTable t;
  t.levels = levels;
  t.n_grid = n_grid;
  t.theta_grid = theta_grid;
  t.replications = reps;
  t.seed = seed;
  t.values_sn.assign(levels.size() * n_grid.size() * theta_grid.size(), 0.0);
  t.values_tn.assign(t.values_sn.size(), 0.0);

  std::size_t cell_index = 0;
  for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
    for (std::size_t ti = 0; ti < theta_grid.size(); ++ti, ++cell_index) {
      const CriticalCell cell = simulate_critical_values(
          n_grid[ni], theta_grid[ti], levels, reps,
          table_cell_seed(seed, cell_index), threads);
      for (std::size_t li = 0; li < levels.size(); ++li) {
        t.values_sn[t.index(li, ni, ti)] = cell.sn[li];
        t.values_tn[t.index(li, ni, ti)] = cell.tn[li];
      }
    }
  }
  return t;
}

void save_critical_table(const CriticalValueTable& table, std::ostream& out) {
  out << "level,n,theta,sn,tn,reps,seed\n";
  char buf[256];
  for (std::size_t li = 0; li < table.levels.size(); ++li) {
    for (std::size_t ni = 0; ni < table.n_grid.size(); ++ni) {
      for (std::size_t ti = 0; ti < table.theta_grid.size(); ++ti) {
        const std::size_t idx = table.index(li, ni, ti);
        std::snprintf(buf, sizeof(buf), "%.2f,%zu,%.6g,%.6f,%.6f,%zu,%llu\n",
                      table.levels[li], table.n_grid[ni], table.theta_grid[ti],
                      table.values_sn[idx], table.values_tn[idx],
                      table.replications,
                      static_cast<unsigned long long>(table.seed));
        out << buf;
      }
    }
  }
}

void save_critical_table(const CriticalValueTable& table,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  save_critical_table(table, out);
  if (!out) throw DataError("write failure: " + path);
}

CriticalValueTable load_critical_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open critical-value table: " + path);
  std::string line;
  // Tolerate `#` metadata lines ahead of the header.
  for (;;) {
    if (!std::getline(in, line))
      throw DataError("empty critical-value table: " + path);
    if (!line.empty() && line[0] != '#') break;
  }
  if (line.find("level,n,theta,sn,tn,reps,seed") != 0)
    throw DataError("unexpected header in " + path + ": " + line);

  struct Row {
    double level, theta, sn, tn;
    std::size_t n, reps;
    std::uint64_t seed;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Row r;
    unsigned long long n_ull = 0, reps_ull = 0, seed_ull = 0;
    if (std::sscanf(line.c_str(), "%lf,%llu,%lf,%lf,%lf,%llu,%llu", &r.level,
                    &n_ull, &r.theta, &r.sn, &r.tn, &reps_ull,
                    &seed_ull) != 7)
      throw DataError("malformed row in " + path + ": " + line);
    r.n = static_cast<std::size_t>(n_ull);
    r.reps = static_cast<std::size_t>(reps_ull);
    r.seed = seed_ull;
    rows.push_back(r);
  }
  if (rows.empty()) throw DataError("no data rows in " + path);

  CriticalValueTable t;
  auto insert_sorted = [](auto& vec, auto value) {
    auto it = std::lower_bound(vec.begin(), vec.end(), value);
    if (it == vec.end() || *it != value) vec.insert(it, value);
  };
  for (const Row& r : rows) {
    insert_sorted(t.levels, r.level);
    insert_sorted(t.n_grid, r.n);
    insert_sorted(t.theta_grid, r.theta);
  }
  t.replications = rows.front().reps;
  t.seed = rows.front().seed;
  const std::size_t cells =
      t.levels.size() * t.n_grid.size() * t.theta_grid.size();
  if (rows.size() != cells)
    throw DataError(path + ": incomplete grid (" + std::to_string(rows.size()) +
                    " rows, expected " + std::to_string(cells) + ")");
  t.values_sn.assign(cells, 0.0);
  t.values_tn.assign(cells, 0.0);
  std::vector<unsigned char> seen(cells, 0);
  auto position = [](const auto& vec, auto value) {
    return static_cast<std::size_t>(
        std::lower_bound(vec.begin(), vec.end(), value) - vec.begin());
  };
  for (const Row& r : rows) {
    if (r.reps != t.replications || r.seed != t.seed)
      throw DataError(path + ": inconsistent reps/seed across rows");
    const std::size_t idx = t.index(position(t.levels, r.level),
                                    position(t.n_grid, r.n),
                                    position(t.theta_grid, r.theta));
    if (seen[idx]) throw DataError(path + ": duplicate cell");
    seen[idx] = 1;
    t.values_sn[idx] = r.sn;
    t.values_tn[idx] = r.tn;
  }
  return t;
}

double critical_lookup(const CriticalValueTable& table, GofStat stat, double n,
                       double theta, double level) {
  std::size_t li = table.levels.size();
  for (std::size_t i = 0; i < table.levels.size(); ++i)
    if (std::abs(table.levels[i] - level) < 1e-9) li = i;
  if (li == table.levels.size())
    throw std::domain_error("critical_lookup: level not covered by table");

  // Bracket a coordinate inside a sorted grid; refuse extrapolation.
  auto bracket = [](const std::vector<double>& grid, double q,
                    const char* what) {
    if (grid.empty()) throw std::domain_error("critical_lookup: empty grid");
    if (q < grid.front() || q > grid.back())
      throw std::domain_error(std::string("critical_lookup: ") + what +
                              " outside table range");
    if (grid.size() == 1) return std::pair<std::size_t, double>{0, 0.0};
    auto hi = std::upper_bound(grid.begin(), grid.end(), q);
    std::size_t i1 = static_cast<std::size_t>(hi - grid.begin());
    if (i1 == 0) i1 = 1;
    if (i1 == grid.size()) i1 = grid.size() - 1;
    const std::size_t i0 = i1 - 1;
    const double span = grid[i1] - grid[i0];
    const double frac = span > 0.0 ? (q - grid[i0]) / span : 0.0;
    return std::pair<std::size_t, double>{i0, frac};
  };

  std::vector<double> n_as_real(table.n_grid.begin(), table.n_grid.end());
  const auto [ni0, fn] = bracket(n_as_real, n, "n");
  const auto [ti0, ft] = bracket(table.theta_grid, theta, "theta");
  const std::size_t ni1 = std::min(ni0 + 1, table.n_grid.size() - 1);
  const std::size_t ti1 = std::min(ti0 + 1, table.theta_grid.size() - 1);

  const std::vector<double>& v =
      stat == GofStat::SN ? table.values_sn : table.values_tn;
  const double v00 = v[table.index(li, ni0, ti0)];
  const double v01 = v[table.index(li, ni0, ti1)];
  const double v10 = v[table.index(li, ni1, ti0)];
  const double v11 = v[table.index(li, ni1, ti1)];
  return (1.0 - fn) * ((1.0 - ft) * v00 + ft * v01) +
         fn * ((1.0 - ft) * v10 + ft * v11);
}

BootstrapResult bootstrap_pvalues(const std::vector<double>& x,
                                  const std::vector<double>& y, std::size_t b,
                                  std::uint64_t seed, unsigned threads) {
  if (b < 100) throw std::invalid_argument("bootstrap_pvalues: b < 100");
  if (x.size() != y.size()) {
    throw std::invalid_argument("bootstrap_pvalues: column length mismatch");
  }
  const std::size_t n = x.size();
  {
    std::vector<std::pair<double, double>> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = {x[i], y[i]};
    if (count_distinct_rows(std::move(rows)) < 3) {
      throw std::invalid_argument(
          "bootstrap_pvalues: need at least 3 distinct (x, y) rows");
    }
  }
  const PseudoSample ps = pseudo_observations(x, y);
  const EstimatorResult obs_est = mle(ps.pairs);
  const SnTn obs = sn_tn_from_w(ps.w, n, obs_est.estimate);

  std::vector<double> sn_star(b), tn_star(b);
  std::vector<std::size_t> redraw(b, 0);
  parallel_for(b, threads, [&](std::size_t r) {
    Rng rng(seed, r);
    std::vector<double> xb(n), yb(n);
    for (;;) {
      std::vector<std::pair<double, double>> rows(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = static_cast<std::size_t>(rng.below(n));
        xb[i] = x[idx];
        yb[i] = y[idx];
        rows[i] = {xb[i], yb[i]};
      }
      if (count_distinct_rows(std::move(rows)) >= 3) break;
      ++redraw[r];  // degenerate rank space: redraw within the same stream
    }
    const PseudoSample psb = pseudo_observations(xb, yb);
    const EstimatorResult est = mle(psb.pairs);
    const SnTn st = sn_tn_from_w(psb.w, n, est.estimate);
    sn_star[r] = st.sn;
    tn_star[r] = st.tn;
  });

  BootstrapResult res;
  res.sn_obs = obs.sn;
  res.tn_obs = obs.tn;
  res.theta_obs = obs_est.estimate;
  res.b = b;
  std::size_t excess_sn = 0, excess_tn = 0;
  for (std::size_t r = 0; r < b; ++r) {
    excess_sn += sn_star[r] > obs.sn;
    excess_tn += tn_star[r] > obs.tn;
    res.redraws += redraw[r];
  }
  res.p_sn = static_cast<double>(excess_sn) / static_cast<double>(b);
  res.p_tn = static_cast<double>(excess_tn) / static_cast<double>(b);
  return res;
}

double bootstrap_pvalue(const BivariateSample& raw, GofStat stat,
                        std::size_t b, std::uint64_t seed, unsigned threads) {
  const BootstrapResult r = bootstrap_pvalues(raw.x, raw.y, b, seed, threads);
  return stat == GofStat::SN ? r.p_sn : r.p_tn;
}

GofReport make_gof_report(const BivariateSample& raw,
                          const CriticalValueTable* table, double level,
                          std::size_t bootstrap_b, std::uint64_t seed,
                          unsigned threads) {
  const PseudoSample ps = pseudo_observations(raw);
  const EstimatorResult est = mle(ps.pairs);

  GofReport rep;
  rep.theta_hat = est.estimate;
  const ThetaUseDecision policy = theta_use_policy(est.estimate);
  rep.theta_use = policy.theta_use;
  rep.reoriented = policy.reoriented;

  const SnTn obs = sn_tn_from_w(ps.w, ps.n, est.estimate);
  rep.sn = obs.sn;
  rep.tn = obs.tn;

  if (policy.reoriented) {
    // Recompute on the reflected sample at the (exactly negated) MLE; these
    // are the values compared against the positive-theta table.
    const PseudoSample ref = reflect(ps);
    const SnTn cmp = sn_tn_from_w(ref.w, ref.n, -est.estimate);
    rep.sn_cmp = cmp.sn;
    rep.tn_cmp = cmp.tn;
  } else {
    rep.sn_cmp = obs.sn;
    rep.tn_cmp = obs.tn;
  }

  if (table != nullptr) {
    rep.critical_sn = critical_lookup(*table, GofStat::SN,
                                      static_cast<double>(ps.n),
                                      rep.theta_use, level);
    rep.critical_tn = critical_lookup(*table, GofStat::TN,
                                      static_cast<double>(ps.n),
                                      rep.theta_use, level);
  }

  if (bootstrap_b > 0) {
    const BootstrapResult boot =
        bootstrap_pvalues(raw.x, raw.y, bootstrap_b, seed, threads);
    rep.p_boot_sn = boot.p_sn;
    rep.p_boot_tn = boot.p_tn;
    rep.bootstrap_reps = boot.b;
    rep.bootstrap_redraws = boot.redraws;
  }
  return rep;
}

}  // namespace frank
