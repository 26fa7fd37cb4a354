// Shared rank statistics: average ranks, Kendall tau (tau-a and tau-b),
// Spearman rank correlation, Pearson correlation.
//
// tau-b uses Knight's O(n log n) algorithm (merge-sort inversion counting
// with tie corrections); it is the default sample version of Kendall's tau
// throughout because detection-limit substitution leaves tied rows in the
// bundled data, and the tie-corrected form is what reproduces the published
// reference values.  tau-a (plain concordant-minus-discordant over C(n,2))
// is provided alongside.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace frank::stats {

// Average (midrank) ranks, 1-based: ties share the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = rank;
    i = j + 1;
  }
  return r;
}

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("pearson: need two equal-length columns, n >= 2");
  }
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw std::invalid_argument("pearson: zero-variance column");
  }
  return sxy / std::sqrt(sxx * syy);
}

// Spearman's rho: Pearson correlation of average ranks.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

namespace detail {

// Counts inversions in v by bottom-up merge sort; strict descents only,
// so tied neighbours contribute nothing.
inline std::uint64_t merge_count(std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> buf(n);
  std::uint64_t swaps = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      if (mid >= hi) continue;
      std::size_t a = lo, b = mid, o = lo;
      while (a < mid && b < hi) {
        if (v[b] < v[a]) {
          swaps += mid - a;
          buf[o++] = v[b++];
        } else {
          buf[o++] = v[a++];
        }
      }
      while (a < mid) buf[o++] = v[a++];
      while (b < hi) buf[o++] = v[b++];
      std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
                buf.begin() + static_cast<std::ptrdiff_t>(hi),
                v.begin() + static_cast<std::ptrdiff_t>(lo));
    }
  }
  return swaps;
}

// Sum over tie groups of t*(t-1)/2 in an already-sorted vector under eq.
template <class Vec, class Eq>
std::uint64_t tie_pairs(const Vec& v, Eq eq) {
  std::uint64_t total = 0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j + 1 < v.size() && eq(v[j + 1], v[i])) ++j;
    const std::uint64_t t = j - i + 1;
    total += t * (t - 1) / 2;
    i = j + 1;
  }
  return total;
}

struct KendallCounts {
  std::uint64_t n0;        // C(n,2)
  std::uint64_t tie_x;     // pairs tied in x
  std::uint64_t tie_y;     // pairs tied in y
  std::uint64_t tie_xy;    // pairs tied in both
  std::int64_t con_minus_dis;
};

inline KendallCounts kendall_counts(const std::vector<double>& x,
                                    const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (y.size() != n || n < 2) {
    throw std::invalid_argument("kendall: need two equal-length columns, n >= 2");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });
  std::vector<std::pair<double, double>> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = {x[idx[i]], y[idx[i]]};

  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t tx = tie_pairs(s, [](const auto& a, const auto& b) {
    return a.first == b.first;
  });
  const std::uint64_t txy = tie_pairs(s, [](const auto& a, const auto& b) {
    return a.first == b.first && a.second == b.second;
  });
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = s[i].second;
  const std::uint64_t dis = merge_count(ys);  // ys now sorted
  const std::uint64_t ty = tie_pairs(ys, [](double a, double b) { return a == b; });

  // Discordant pairs = y-inversions among pairs not tied in x; pairs tied in
  // x were pre-sorted by y, so they contribute no inversions.  Then
  //   concordant = n0 - tie_x - tie_y + tie_xy - discordant.
  const std::int64_t concordant =
      static_cast<std::int64_t>(n0) - static_cast<std::int64_t>(tx) -
      static_cast<std::int64_t>(ty) + static_cast<std::int64_t>(txy) -
      static_cast<std::int64_t>(dis);
  return {n0, tx, ty, txy,
          concordant - static_cast<std::int64_t>(dis)};
}

}  // namespace detail

// Tie-corrected Kendall rank correlation (tau-b).
inline double kendall_tau_b(const std::vector<double>& x,
                            const std::vector<double>& y) {
  const auto c = detail::kendall_counts(x, y);
  const double denom =
      std::sqrt(static_cast<double>(c.n0 - c.tie_x)) *
      std::sqrt(static_cast<double>(c.n0 - c.tie_y));
  if (denom == 0.0) {
    throw std::invalid_argument("kendall_tau_b: a margin is constant");
  }
  return static_cast<double>(c.con_minus_dis) / denom;
}

// Plain tau-a: (concordant - discordant) / C(n,2); tied pairs count as
// neither.
inline double kendall_tau_a(const std::vector<double>& x,
                            const std::vector<double>& y) {
  const auto c = detail::kendall_counts(x, y);
  return static_cast<double>(c.con_minus_dis) / static_cast<double>(c.n0);
}

}  // namespace frank::stats
