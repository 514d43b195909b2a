#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mcca/bitmask.hpp"
#include "mcca/link_model.hpp"
#include "mcca/rng.hpp"

namespace mcca {

enum class SetupClass { SS, MS, LS };

inline std::string_view to_string(SetupClass c) {
  switch (c) {
    case SetupClass::SS: return "SS";
    case SetupClass::MS: return "MS";
    case SetupClass::LS: return "LS";
  }
  return "?";
}

inline SetupClass parse_setup(std::string_view s) {
  if (s == "ss" || s == "SS") return SetupClass::SS;
  if (s == "ms" || s == "MS") return SetupClass::MS;
  if (s == "ls" || s == "LS") return SetupClass::LS;
  throw std::invalid_argument("unknown setup class: " + std::string(s));
}

/// Geometry and resource envelope of a setup class.
struct SetupParams {
  double width_m;
  double height_m;
  int n_tenants;
  int n_bs;
  int min_channels_per_bs;
  int max_channels_per_bs;
  int max_total_channels;
};

constexpr SetupParams setup_params(SetupClass c) {
  switch (c) {
    case SetupClass::SS: return {100.0, 50.0, 6, 8, 1, 3, 20};
    case SetupClass::MS: return {120.0, 70.0, 12, 12, 2, 5, 45};
    case SetupClass::LS: return {150.0, 100.0, 20, 16, 3, 6, 60};
  }
  return {};
}

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Minimum and maximum capacity requirement of a tenant (bit/s).
struct UtilityBounds {
  double c_min = 0.0;
  double c_max = 0.0;
  friend bool operator==(const UtilityBounds&, const UtilityBounds&) = default;
};

enum class FadingMode {
  DbValue,  // K = K_ref * u, scaling the dB value
  Linear,   // K = K_ref + 10 log10(u), scaling the linear power gain
};

inline constexpr double kReferenceK_dB = 14.1;

/// Knobs of scenario generation. Defaults reproduce the moderately complex
/// obstacle environment (30% of links faded by 20-80%).
struct ScenarioConfig {
  double k_ref_db = kReferenceK_dB;
  double obstacle_fraction = 0.30;
  double fade_factor_lo = 0.20;
  double fade_factor_hi = 0.80;
  FadingMode fading_mode = FadingMode::DbValue;

  // Utility bounds are drawn relative to a reference rate: the capacity of
  // `reference_channels` i.i.d. clear-LOS channels at half the area diagonal.
  LinkModel link{};
  int reference_channels = 3;
  double c_min_lo = 0.25;
  double c_min_hi = 0.50;
  double c_max_lo = 1.5;
  double c_max_hi = 3.0;
};

/// A simulation instance: geometry, channel inventory, fading and demands.
/// Immutable after construction by convention; all members are values.
struct Scenario {
  std::optional<SetupClass> setup;
  double width_m = 0.0;
  double height_m = 0.0;
  std::vector<Point> tenant_positions;
  std::vector<Point> bs_positions;
  std::vector<int> channels_per_bs;
  std::vector<int> channel_owner;     // channel -> BS
  std::vector<double> fading_db;      // n_T x n_BS, row-major
  std::vector<UtilityBounds> utility_bounds;
  std::uint64_t seed = 0;

  friend bool operator==(const Scenario&, const Scenario&) = default;

  [[nodiscard]] std::size_t n_tenants() const noexcept { return tenant_positions.size(); }
  [[nodiscard]] std::size_t n_bs() const noexcept { return bs_positions.size(); }
  [[nodiscard]] std::size_t n_channels() const noexcept { return channel_owner.size(); }

  [[nodiscard]] double k_db(std::size_t tenant, std::size_t bs) const {
    return fading_db.at(tenant * n_bs() + bs);
  }

  [[nodiscard]] int owner(std::size_t channel) const { return channel_owner.at(channel); }

  /// Channels of base station `bs` as a mask.
  [[nodiscard]] ItemMask channels_of_bs(std::size_t bs) const {
    ItemMask m = 0;
    for (std::size_t j = 0; j < channel_owner.size(); ++j)
      if (static_cast<std::size_t>(channel_owner[j]) == bs) m |= bit(j);
    return m;
  }

  [[nodiscard]] ItemMask all_channels() const noexcept { return low_bits(n_channels()); }

  /// Structural consistency; throws std::invalid_argument.
  void validate() const {
    const std::size_t nt = n_tenants();
    const std::size_t nb = n_bs();
    if (channels_per_bs.size() != nb)
      throw std::invalid_argument("Scenario: channels_per_bs length differs from BS count");
    if (fading_db.size() != nt * nb) throw std::invalid_argument("Scenario: fading matrix has wrong size");
    if (utility_bounds.size() != nt)
      throw std::invalid_argument("Scenario: utility_bounds length differs from tenant count");
    if (n_channels() > kMaxItems) throw std::invalid_argument("Scenario: more than 64 channels");
    std::vector<int> counted(nb, 0);
    for (int o : channel_owner) {
      if (o < 0 || static_cast<std::size_t>(o) >= nb)
        throw std::invalid_argument("Scenario: channel owner out of range");
      ++counted[static_cast<std::size_t>(o)];
    }
    for (std::size_t i = 0; i < nb; ++i) {
      if (channels_per_bs[i] <= 0) throw std::invalid_argument("Scenario: BS without channels");
      if (counted[i] != channels_per_bs[i])
        throw std::invalid_argument("Scenario: channel_owner inconsistent with channels_per_bs");
    }
    for (const auto& b : utility_bounds) {
      if (!(b.c_min > 0.0 && b.c_min < b.c_max))
        throw std::invalid_argument("Scenario: utility bounds require 0 < c_min < c_max");
    }
  }
};

/// Euclidean distance between tenant k and base station i.
inline double distance(const Scenario& s, std::size_t tenant, std::size_t bs) {
  if (tenant >= s.n_tenants() || bs >= s.n_bs()) throw std::out_of_range("distance: index out of range");
  const Point& a = s.tenant_positions[tenant];
  const Point& b = s.bs_positions[bs];
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Point at arc length t along the rectangle perimeter, counter-clockwise from (0,0).
inline Point perimeter_point(double width, double height, double t) {
  if (t < width) return {t, 0.0};
  t -= width;
  if (t < height) return {width, t};
  t -= height;
  if (t < width) return {width - t, height};
  t -= width;
  return {0.0, std::max(0.0, height - t)};
}

/// Obstacle fading matrix (n_tenants x n_bs, row-major, dB).
/// Exactly round(fraction * n_T * n_BS) distinct entries are reduced.
inline std::vector<double> apply_obstacle_fading(std::size_t n_tenants, std::size_t n_bs,
                                                 const ScenarioConfig& cfg, Rng& rng) {
  const std::size_t total = n_tenants * n_bs;
  std::vector<double> k(total, cfg.k_ref_db);
  const auto n_faded = static_cast<std::size_t>(std::lround(cfg.obstacle_fraction * static_cast<double>(total)));
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t e : rng.sample(std::move(idx), n_faded)) {
    const double u = rng.uniform(cfg.fade_factor_lo, cfg.fade_factor_hi);
    k[e] = cfg.fading_mode == FadingMode::DbValue ? cfg.k_ref_db * u : cfg.k_ref_db + 10.0 * std::log10(u);
  }
  return k;
}

/// Reduce per-BS counts round-robin from the last BS until the total fits,
/// never going below `floor`.
inline void enforce_channel_cap(std::vector<int>& counts, int floor, int cap) {
  int total = std::accumulate(counts.begin(), counts.end(), 0);
  bool progressed = true;
  while (total > cap && progressed) {
    progressed = false;
    for (std::size_t r = counts.size(); r-- > 0 && total > cap;) {
      if (counts[r] > floor) {
        --counts[r];
        --total;
        progressed = true;
      }
    }
  }
}

/// Reference rate used to scale the utility bounds of a setup class.
inline double reference_rate(const SetupParams& p, const ScenarioConfig& cfg) {
  const double half_diag = 0.5 * std::hypot(p.width_m, p.height_m);
  const double g = db_to_linear(mean_snr_db(cfg.link, half_diag, cfg.k_ref_db));
  const std::vector<double> snrs(static_cast<std::size_t>(std::max(1, cfg.reference_channels)), g);
  return outage_capacity(cfg.link, snrs);
}

inline Scenario generate_scenario(SetupClass cls, std::uint64_t seed, const ScenarioConfig& cfg) {
  const SetupParams p = setup_params(cls);
  const Rng master(seed);
  Scenario s;
  s.setup = cls;
  s.width_m = p.width_m;
  s.height_m = p.height_m;
  s.seed = seed;

  Rng placement = master.substream("placement");
  s.tenant_positions.reserve(static_cast<std::size_t>(p.n_tenants));
  for (int k = 0; k < p.n_tenants; ++k) {
    // Open interval: redraw the (measure-zero) boundary hits.
    Point q;
    do {
      q = {placement.uniform(0.0, p.width_m), placement.uniform(0.0, p.height_m)};
    } while (q.x <= 0.0 || q.y <= 0.0);
    s.tenant_positions.push_back(q);
  }
  const double perimeter = 2.0 * (p.width_m + p.height_m);
  for (int i = 0; i < p.n_bs; ++i)
    s.bs_positions.push_back(perimeter_point(p.width_m, p.height_m, placement.uniform(0.0, perimeter)));

  Rng counts = master.substream("channels");
  s.channels_per_bs.resize(static_cast<std::size_t>(p.n_bs));
  for (int& c : s.channels_per_bs) c = counts.uniform_int(p.min_channels_per_bs, p.max_channels_per_bs);
  enforce_channel_cap(s.channels_per_bs, p.min_channels_per_bs, p.max_total_channels);
  for (std::size_t i = 0; i < s.channels_per_bs.size(); ++i)
    s.channel_owner.insert(s.channel_owner.end(), static_cast<std::size_t>(s.channels_per_bs[i]), static_cast<int>(i));

  Rng fading = master.substream("fading");
  s.fading_db = apply_obstacle_fading(s.n_tenants(), s.n_bs(), cfg, fading);

  Rng demand = master.substream("utility");
  const double r_ref = reference_rate(p, cfg);
  for (int k = 0; k < p.n_tenants; ++k) {
    const double c_min = demand.uniform(cfg.c_min_lo, cfg.c_min_hi) * r_ref;
    const double c_max = demand.uniform(cfg.c_max_lo, cfg.c_max_hi) * r_ref;
    s.utility_bounds.push_back({c_min, c_max});
  }
  s.validate();
  return s;
}

inline Scenario generate_scenario(SetupClass cls, std::uint64_t seed) {
  return generate_scenario(cls, seed, ScenarioConfig{});
}

/// Checks the invariants that hold for generated scenarios: interior
/// tenants, boundary BSs, setup-class caps. Returns an empty string when
/// everything holds, otherwise a description of the first violation.
inline std::string check_generated(const Scenario& s, const ScenarioConfig& cfg = {}) {
  if (!s.setup) return "scenario has no setup class";
  const SetupParams p = setup_params(*s.setup);
  if (static_cast<int>(s.n_tenants()) != p.n_tenants) return "tenant count";
  if (static_cast<int>(s.n_bs()) != p.n_bs) return "BS count";
  for (const Point& t : s.tenant_positions)
    if (!(t.x > 0.0 && t.x < s.width_m && t.y > 0.0 && t.y < s.height_m)) return "tenant outside interior";
  for (const Point& b : s.bs_positions) {
    const bool on_x = b.x == 0.0 || b.x == s.width_m;
    const bool on_y = b.y == 0.0 || b.y == s.height_m;
    const bool in_box = b.x >= 0.0 && b.x <= s.width_m && b.y >= 0.0 && b.y <= s.height_m;
    if (!in_box || !(on_x || on_y)) return "BS not on boundary";
  }
  int total = 0;
  for (int c : s.channels_per_bs) {
    if (c < p.min_channels_per_bs || c > p.max_channels_per_bs) return "per-BS channel count";
    total += c;
  }
  if (total > p.max_total_channels) return "channel total cap";
  const auto expected = static_cast<std::size_t>(std::lround(cfg.obstacle_fraction * static_cast<double>(s.fading_db.size())));
  std::size_t reduced = 0;
  for (double k : s.fading_db) {
    if (k > cfg.k_ref_db) return "fading above K_ref";
    if (k < cfg.k_ref_db) ++reduced;
  }
  if (reduced != expected) return "faded entry count";
  return {};
}

}  // namespace mcca
