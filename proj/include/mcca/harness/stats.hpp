#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace mcca {

/// Boxplot summary of one sample.
struct SummaryStats {
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
  std::vector<double> outliers;  // ascending
};

/// Linear-interpolation quantile (type 7) of an ascending sample.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must be in [0, 1]");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

inline SummaryStats summarize(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("summarize: empty sample");
  for (double x : samples)
    if (!std::isfinite(x)) throw std::invalid_argument("summarize: non-finite sample");
  std::sort(samples.begin(), samples.end());
  SummaryStats s;
  s.n = samples.size();
  double sum = 0.0;
  for (double x : samples) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  s.q25 = quantile_sorted(samples, 0.25);
  s.median = quantile_sorted(samples, 0.5);
  s.q75 = quantile_sorted(samples, 0.75);
  const double iqr = s.q75 - s.q25;
  const double lo_fence = s.q25 - 1.5 * iqr;
  const double hi_fence = s.q75 + 1.5 * iqr;
  s.whisker_lo = std::numeric_limits<double>::infinity();
  s.whisker_hi = -std::numeric_limits<double>::infinity();
  for (double x : samples) {
    if (x < lo_fence || x > hi_fence) {
      s.outliers.push_back(x);
    } else {
      s.whisker_lo = std::min(s.whisker_lo, x);
      s.whisker_hi = std::max(s.whisker_hi, x);
    }
  }
  return s;
}

struct PairedTest {
  std::size_t n = 0;
  double mean_diff = 0.0;
  double t = 0.0;
  double p_greater = 1.0;  // one-sided, H1: mean(a - b) > 0
};

/// Paired t-test on a[i] - b[i].
inline PairedTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_t_test: size mismatch");
  if (a.size() < 2) throw std::invalid_argument("paired_t_test: need at least two pairs");
  PairedTest r;
  r.n = a.size();
  const double n = static_cast<double>(r.n);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] - b[i];
  r.mean_diff = sum / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - r.mean_diff;
    ss += d * d;
  }
  const double se = std::sqrt(ss / (n - 1.0) / n);
  if (se == 0.0) {
    r.t = r.mean_diff > 0 ? std::numeric_limits<double>::infinity()
                          : (r.mean_diff < 0 ? -std::numeric_limits<double>::infinity() : 0.0);
    r.p_greater = r.mean_diff > 0 ? 0.0 : 1.0;
    return r;
  }
  r.t = r.mean_diff / se;
  const boost::math::students_t dist(n - 1.0);
  r.p_greater = boost::math::cdf(boost::math::complement(dist, r.t));
  return r;
}

}  // namespace mcca
