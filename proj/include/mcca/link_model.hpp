#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

namespace mcca {

/// Reference propagation and reliability parameters of a link.
///
/// tx_power_dbm - noise_dbm is the link budget at ref_distance_m, already net
/// of the reference path loss. Default values: 60 dB budget at 1 m,
/// exponent 3, 1 MHz per channel, outage target 1e-5.
struct LinkModel {
  double tx_power_dbm = 20.0;
  double noise_dbm = -40.0;
  double path_loss_exponent = 3.0;
  double ref_distance_m = 1.0;
  double bandwidth_hz = 1.0e6;
  double outage_target = 1.0e-5;
  double min_distance_m = 1.0;

  void validate() const {
    if (!(outage_target > 0.0 && outage_target < 0.5))
      throw std::invalid_argument("LinkModel: outage_target must lie in (0, 0.5)");
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("LinkModel: bandwidth_hz must be positive");
    if (!(path_loss_exponent >= 2.0))
      throw std::invalid_argument("LinkModel: path_loss_exponent must be >= 2");
    if (!(ref_distance_m > 0.0)) throw std::invalid_argument("LinkModel: ref_distance_m must be positive");
    if (!(min_distance_m > 0.0)) throw std::invalid_argument("LinkModel: min_distance_m must be positive");
  }

  [[nodiscard]] double budget_db() const noexcept { return tx_power_dbm - noise_dbm; }
};

/// Mean SNR in dB of one channel at distance d with obstacle factor k_db.
inline double mean_snr_db(const LinkModel& m, double distance_m, double k_db) {
  const double d = std::max(distance_m, m.min_distance_m);
  return m.budget_db() - 10.0 * m.path_loss_exponent * std::log10(d / m.ref_distance_m) + k_db;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// log of the selection-combining outage CDF, log prod_j (1 - exp(-x / g_j)).
inline double log_outage_cdf(double x, std::span<const double> mean_snrs) {
  double acc = 0.0;
  for (double g : mean_snrs) acc += std::log(-std::expm1(-x / g));
  return acc;
}

inline double outage_cdf(double x, std::span<const double> mean_snrs) {
  return std::exp(log_outage_cdf(x, mean_snrs));
}

/// SNR threshold x* with outage_cdf(x*) = eps under independent Rayleigh
/// fading with the given mean SNRs (linear). Bisection on a bracket derived
/// from the weakest and strongest branch, run until the bracket is two
/// adjacent doubles. Returns the smallest double with F(x) >= eps, which keeps
/// the result monotone under adding channels. Returns 0 for an empty set.
inline double outage_quantile(std::span<const double> mean_snrs, double eps) {
  if (mean_snrs.empty()) return 0.0;
  const auto [lo_it, hi_it] = std::minmax_element(mean_snrs.begin(), mean_snrs.end());
  const double m = static_cast<double>(mean_snrs.size());
  // Per-branch level u with u^m = eps; F is bracketed by the i.i.d. cases.
  const double per_branch = -std::log1p(-std::pow(eps, 1.0 / m));
  double lo = 0.5 * *lo_it * per_branch;
  double hi = 2.0 * *hi_it * per_branch;
  const double log_eps = std::log(eps);
  while (true) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (log_outage_cdf(mid, mean_snrs) < log_eps) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

/// Outage capacity (bit/s) of a channel set with the given mean SNRs.
inline double outage_capacity(const LinkModel& m, std::span<const double> mean_snrs) {
  if (mean_snrs.empty()) return 0.0;
  return m.bandwidth_hz * std::log2(1.0 + outage_quantile(mean_snrs, m.outage_target));
}

}  // namespace mcca
