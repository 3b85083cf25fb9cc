#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "vsr/error.hpp"

namespace vsr::stats {

// ---------------------------------------------------------------------------
// Ranks

/// 1-based ranks with ties assigned their average rank.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

/// Sum of t^3 - t over tie groups.
inline double tie_term(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] == v[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    sum += t * t * t - t;
    i = j + 1;
  }
  return sum;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorKind::ConstantInput, "correlation of a constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace detail {

inline void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    fail(ErrorKind::LengthMismatch, std::to_string(x.size()) + " vs " + std::to_string(y.size()) + " observations");
  if (x.size() < 3) fail(ErrorKind::InsufficientData, "need at least 3 paired observations");
}

inline bool constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

}  // namespace detail

/// Spearman's rho: Pearson correlation of average ranks.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

/// Kendall's tau-b in O(n log n) (Knight's algorithm).
inline double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y);
  if (detail::constant(x) || detail::constant(y)) fail(ErrorKind::ConstantInput, "correlation of a constant sequence");
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  auto pairs = [](std::int64_t t) { return t * (t - 1) / 2; };
  std::int64_t ties_x = 0, ties_xy = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    ties_x += pairs(static_cast<std::int64_t>(j - i + 1));
    for (std::size_t a = i; a <= j;) {
      std::size_t b = a;
      while (b + 1 <= j && y[idx[b + 1]] == y[idx[a]]) ++b;
      ties_xy += pairs(static_cast<std::int64_t>(b - a + 1));
      a = b + 1;
    }
    i = j + 1;
  }

  // Merge sort on y counting swaps = discordant pairs.
  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
  std::int64_t swaps = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n), hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (ys[j] < ys[i]) {
          swaps += static_cast<std::int64_t>(mid - i);
          buf[k++] = ys[j++];
        } else {
          buf[k++] = ys[i++];
        }
      }
      while (i < mid) buf[k++] = ys[i++];
      while (j < hi) buf[k++] = ys[j++];
    }
    std::swap(ys, buf);
  }
  std::int64_t ties_y = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && ys[j + 1] == ys[i]) ++j;
    ties_y += pairs(static_cast<std::int64_t>(j - i + 1));
    i = j + 1;
  }

  const std::int64_t n0 = pairs(static_cast<std::int64_t>(n));
  const std::int64_t s = n0 - ties_x - ties_y + ties_xy - 2 * swaps;
  const double denom = std::sqrt(static_cast<double>(n0 - ties_x) * static_cast<double>(n0 - ties_y));
  return std::clamp(static_cast<double>(s) / denom, -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Group difference tests

struct MannWhitneyResult {
  double u = 0.0;      // U statistic of the first sample
  double p = 1.0;      // two-sided
  bool exact = false;  // p from the exact null distribution
};

/// Number of arrangements of n x-values and m y-values with each U = 0..n*m.
inline std::vector<double> mann_whitney_null_counts(std::size_t n, std::size_t m) {
  // counts[n][m][u] via the recurrence c(n,m,u) = c(n-1,m,u-m) + c(n,m-1,u).
  std::vector<std::vector<std::vector<double>>> c(n + 1, std::vector<std::vector<double>>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= m; ++j) {
      auto& cell = c[i][j];
      cell.assign(i * j + 1, 0.0);
      if (i == 0 || j == 0) {
        cell[0] = 1.0;
        continue;
      }
      for (std::size_t u = 0; u <= i * j; ++u) {
        double v = 0.0;
        if (u >= j && u - j < c[i - 1][j].size()) v += c[i - 1][j][u - j];
        if (u < c[i][j - 1].size()) v += c[i][j - 1][u];
        cell[u] = v;
      }
    }
  }
  return c[n][m];
}

inline constexpr std::size_t kMannWhitneyExactLimit = 8;

/// Two-sided Mann-Whitney U. Exact when both samples have at most 8
/// observations and there are no ties; otherwise the normal approximation
/// with tie and continuity corrections.
inline MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) fail(ErrorKind::EmptyInput, "both samples must be non-empty");
  const std::size_t n = x.size(), m = y.size();
  std::vector<double> all(x.begin(), x.end());
  all.insert(all.end(), y.begin(), y.end());
  const auto ranks = average_ranks(all);
  double r1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) r1 += ranks[i];
  const double nd = static_cast<double>(n), md = static_cast<double>(m);
  MannWhitneyResult out;
  out.u = r1 - nd * (nd + 1.0) / 2.0;

  const double ties = tie_term(all);
  if (n <= kMannWhitneyExactLimit && m <= kMannWhitneyExactLimit && ties == 0.0) {
    const auto counts = mann_whitney_null_counts(n, m);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto u = static_cast<std::size_t>(std::llround(out.u));
    double lower = 0.0, upper = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (k <= u) lower += counts[k];
      if (k >= u) upper += counts[k];
    }
    out.p = std::min(1.0, 2.0 * std::min(lower, upper) / total);
    out.exact = true;
    return out;
  }

  const double big_n = nd + md;
  const double mean = nd * md / 2.0;
  const double var = nd * md / 12.0 * ((big_n + 1.0) - ties / (big_n * (big_n - 1.0)));
  if (var <= 0.0) {
    out.p = 1.0;
    return out;
  }
  const double z = std::max(0.0, std::abs(out.u - mean) - 0.5) / std::sqrt(var);
  out.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return out;
}

struct KruskalWallisResult {
  double h = 0.0;
  double p = 1.0;
  std::size_t df = 0;
};

/// Upper tail of the chi-square distribution.
inline double chi_square_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

/// Kruskal-Wallis H with tie correction; p from chi-square with groups - 1 df.
inline KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) fail(ErrorKind::TooFewGroups, "need at least two groups");
  std::vector<double> all;
  for (const auto& g : groups) {
    if (g.empty()) fail(ErrorKind::EmptyInput, "every group must be non-empty");
    all.insert(all.end(), g.begin(), g.end());
  }
  const double n = static_cast<double>(all.size());
  if (all.size() < 5) fail(ErrorKind::InsufficientData, "the chi-square approximation needs at least 5 observations");
  const auto ranks = average_ranks(all);

  KruskalWallisResult out;
  out.df = groups.size() - 1;
  const double correction = 1.0 - tie_term(all) / (n * n * n - n);
  if (correction <= 0.0) return out;  // every observation tied

  double sum = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double r = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) r += ranks[offset + i];
    offset += g.size();
    sum += r * r / static_cast<double>(g.size());
  }
  out.h = std::max(0.0, (12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction);
  out.p = chi_square_sf(out.h, static_cast<double>(out.df));
  return out;
}

// ---------------------------------------------------------------------------
// Krippendorff's alpha

enum class AlphaMetric { Nominal, Ordinal, Interval, Ratio };

inline std::optional<AlphaMetric> parse_alpha_metric(std::string_view s) {
  if (s == "nominal") return AlphaMetric::Nominal;
  if (s == "ordinal") return AlphaMetric::Ordinal;
  if (s == "interval") return AlphaMetric::Interval;
  if (s == "ratio") return AlphaMetric::Ratio;
  return std::nullopt;
}

/// Raters x items; std::nullopt marks a missing rating.
using RatingMatrix = std::vector<std::vector<std::optional<double>>>;

/// Alpha = 1 - D_o / D_e from the coincidence matrix of pairable values
/// (units with at least two ratings).
inline double krippendorff_alpha(const RatingMatrix& ratings, AlphaMetric metric = AlphaMetric::Interval) {
  std::size_t items = 0;
  for (const auto& row : ratings) items = std::max(items, row.size());

  std::vector<std::vector<double>> units;
  for (std::size_t j = 0; j < items; ++j) {
    std::vector<double> unit;
    for (const auto& row : ratings)
      if (j < row.size() && row[j]) unit.push_back(*row[j]);
    if (unit.size() >= 2) units.push_back(std::move(unit));
  }
  if (units.size() < 2) fail(ErrorKind::InsufficientData, "need at least two items with two or more ratings");

  std::vector<double> values;
  for (const auto& u : units) values.insert(values.end(), u.begin(), u.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  const std::size_t k = values.size();
  auto index_of = [&](double v) {
    return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), v) - values.begin());
  };

  // Coincidence matrix o[c][k] and marginals n_c.
  std::vector<double> o(k * k, 0.0);
  for (const auto& u : units) {
    std::map<std::size_t, double> tally;
    for (double v : u) tally[index_of(v)] += 1.0;
    const double w = 1.0 / static_cast<double>(u.size() - 1);
    for (const auto& [c, nc] : tally)
      for (const auto& [d, nd] : tally) o[c * k + d] += (c == d ? nc * (nc - 1.0) : nc * nd) * w;
  }
  std::vector<double> marg(k, 0.0);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = 0; d < k; ++d) marg[c] += o[c * k + d];
  const double n = std::accumulate(marg.begin(), marg.end(), 0.0);

  // Cumulative marginals for the ordinal metric.
  std::vector<double> cum(k + 1, 0.0);
  for (std::size_t c = 0; c < k; ++c) cum[c + 1] = cum[c] + marg[c];

  auto delta2 = [&](std::size_t c, std::size_t d) -> double {
    if (c == d) return 0.0;
    const double a = values[c], b = values[d];
    switch (metric) {
      case AlphaMetric::Nominal: return 1.0;
      case AlphaMetric::Interval: return (a - b) * (a - b);
      case AlphaMetric::Ratio: {
        const double s = a + b;
        return s == 0.0 ? 0.0 : ((a - b) / s) * ((a - b) / s);
      }
      case AlphaMetric::Ordinal: {
        const std::size_t lo = std::min(c, d), hi = std::max(c, d);
        const double g = cum[hi + 1] - cum[lo] - (marg[lo] + marg[hi]) / 2.0;
        return g * g;
      }
    }
    return 0.0;
  };

  double observed = 0.0, expected = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) {
      if (c == d) continue;
      const double w = delta2(c, d);
      observed += o[c * k + d] * w;
      expected += marg[c] * marg[d] * w;
    }
  }
  observed /= n;
  expected /= n * (n - 1.0);
  if (expected == 0.0) fail(ErrorKind::ZeroExpectedDisagreement, "all pairable ratings are identical");
  return 1.0 - observed / expected;
}

/// "reliable" at alpha >= 0.8, "tentative" at >= 0.6, otherwise "unreliable".
inline std::string_view alpha_band(double alpha) {
  if (alpha >= 0.8) return "reliable";
  if (alpha >= 0.6) return "tentative";
  return "unreliable";
}

}  // namespace vsr::stats
