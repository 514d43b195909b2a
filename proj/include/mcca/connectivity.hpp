#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "mcca/bitmask.hpp"
#include "mcca/link_model.hpp"
#include "mcca/scenario.hpp"

namespace mcca {

/// Mean linear SNR of one channel of BS i at tenant k.
inline double mean_snr(const Scenario& s, const LinkModel& m, std::size_t tenant, std::size_t bs) {
  return db_to_linear(mean_snr_db(m, distance(s, tenant, bs), s.k_db(tenant, bs)));
}

/// Mean SNR of every (tenant, BS) pair, n_T x n_BS row-major.
struct CapacityProfile {
  std::size_t n_bs = 0;
  std::vector<double> mean_snr_linear;

  CapacityProfile() = default;
  CapacityProfile(const Scenario& s, const LinkModel& m) : n_bs(s.n_bs()) {
    mean_snr_linear.reserve(s.n_tenants() * s.n_bs());
    for (std::size_t k = 0; k < s.n_tenants(); ++k)
      for (std::size_t i = 0; i < s.n_bs(); ++i) mean_snr_linear.push_back(mean_snr(s, m, k, i));
  }

  [[nodiscard]] double at(std::size_t tenant, std::size_t bs) const { return mean_snr_linear[tenant * n_bs + bs]; }
};

/// Pluggable connectivity function rho_k: capacity of tenant k holding the
/// given channel set. Implementations must be non-decreasing under set
/// inclusion and return 0 for the empty set.
class ConnectivityModel {
 public:
  virtual ~ConnectivityModel() = default;
  [[nodiscard]] virtual double capacity(std::size_t tenant, ItemMask channels) const = 0;
};

/// Independent Rayleigh branches with selection combining; the tenant is in
/// outage only when every assigned channel is.
class RayleighSelectionModel final : public ConnectivityModel {
 public:
  RayleighSelectionModel(const Scenario& s, const LinkModel& m)
      : link_(m), profile_(s, m), owner_(s.channel_owner) {
    m.validate();
  }

  [[nodiscard]] double capacity(std::size_t tenant, ItemMask channels) const override {
    double snrs[kMaxItems];
    std::size_t n = 0;
    for_each_bit(channels, [&](std::size_t j) {
      snrs[n++] = profile_.at(tenant, static_cast<std::size_t>(owner_[j]));
    });
    return outage_capacity(link_, std::span<const double>(snrs, n));
  }

  [[nodiscard]] const CapacityProfile& profile() const noexcept { return profile_; }
  [[nodiscard]] const LinkModel& link() const noexcept { return link_; }

 private:
  LinkModel link_;
  CapacityProfile profile_;
  std::vector<int> owner_;
};

/// Memoizing front end over a ConnectivityModel for one scenario.
///
/// Not thread-safe: each concurrent evaluation owns its own evaluator.
/// Cached values are the model's own results, so memoized and direct
/// calls agree bit for bit.
class ConnectivityEvaluator {
 public:
  ConnectivityEvaluator(const Scenario& s, const LinkModel& m)
      : scenario_(&s), model_(std::make_shared<RayleighSelectionModel>(s, m)) {}

  ConnectivityEvaluator(const Scenario& s, std::shared_ptr<const ConnectivityModel> model)
      : scenario_(&s), model_(std::move(model)) {}

  [[nodiscard]] double capacity(std::size_t tenant, ItemMask channels) {
    if (channels == 0) return 0.0;
    auto [it, inserted] = cache_.try_emplace(Key{tenant, channels}, 0.0);
    if (inserted) it->second = model_->capacity(tenant, channels);
    return it->second;
  }

  /// Single-connectivity value of `channel` for `tenant`.
  [[nodiscard]] double scv(std::size_t tenant, std::size_t channel) { return capacity(tenant, bit(channel)); }

  /// SCV of any one channel of base station `bs`.
  [[nodiscard]] double bs_scv(std::size_t tenant, std::size_t bs) {
    const ItemMask chans = scenario_->channels_of_bs(bs);
    return chans == 0 ? 0.0 : scv(tenant, static_cast<std::size_t>(std::countr_zero(chans)));
  }

  [[nodiscard]] const Scenario& scenario() const noexcept { return *scenario_; }
  [[nodiscard]] std::size_t cache_size() const noexcept { return cache_.size(); }

 private:
  struct Key {
    std::size_t tenant;
    ItemMask channels;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return static_cast<std::size_t>(mix64(k.channels ^ mix64(k.tenant)));
    }
  };

  const Scenario* scenario_;
  std::shared_ptr<const ConnectivityModel> model_;
  std::unordered_map<Key, double, KeyHash> cache_;
};

/// Capacity of tenant k holding channel set `channels` (reference model).
inline double connectivity(const Scenario& s, const LinkModel& m, std::size_t tenant, ItemMask channels) {
  return RayleighSelectionModel(s, m).capacity(tenant, channels);
}

inline double single_connectivity_value(const Scenario& s, const LinkModel& m, std::size_t tenant,
                                        std::size_t channel) {
  return connectivity(s, m, tenant, bit(channel));
}

/// Log-shaped utility in [0, 1]: zero at or below c_min, one above c_max.
inline double utility(double capacity, double c_min, double c_max) {
  if (capacity > c_max) return 1.0;
  if (capacity <= c_min) return 0.0;
  return std::log(capacity / c_min) / std::log(c_max / c_min);
}

inline double utility(double capacity, const UtilityBounds& b) { return utility(capacity, b.c_min, b.c_max); }

}  // namespace mcca
