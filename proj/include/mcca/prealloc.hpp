#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string_view>
#include <vector>

#include "mcca/assignment.hpp"
#include "mcca/connectivity.hpp"
#include "mcca/rng.hpp"
#include "mcca/scenario.hpp"

// Simple per-tenant preallocation heuristics. Every function takes a const
// seed stream and derives one substream per (purpose, tenant), so rows are
// independent of each other and of other methods' draws.

namespace mcca {

namespace detail {

inline std::vector<std::size_t> channel_indices(const Scenario& s) {
  std::vector<std::size_t> v(s.n_channels());
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

/// Visits BSs in the given order, taking all their channels while they fit
/// the remaining budget, otherwise a uniform subset of exactly the remainder.
inline ItemMask fill_from_ordered_bs(const Scenario& s, const std::vector<std::size_t>& bs_order, int budget,
                                     Rng& pick) {
  ItemMask taken = 0;
  int remaining = std::min<int>(budget, static_cast<int>(s.n_channels()));
  for (std::size_t i : bs_order) {
    if (remaining <= 0) break;
    const ItemMask chans = s.channels_of_bs(i);
    const int n = popcount(chans);
    if (n <= remaining) {
      taken |= chans;
      remaining -= n;
    } else {
      taken |= from_indices(pick.sample(to_indices(chans), static_cast<std::size_t>(remaining)));
      remaining = 0;
    }
  }
  return taken;
}

/// BS indices sorted ascending by `key`, ties broken by a random key drawn
/// once per (tenant, BS) from the tie-break stream.
template <typename Key>
std::vector<std::size_t> order_bs(std::size_t n_bs, Key&& key, Rng& tiebreak) {
  struct Entry {
    double key;
    std::uint64_t tie;
    std::size_t bs;
  };
  std::vector<Entry> e;
  e.reserve(n_bs);
  for (std::size_t i = 0; i < n_bs; ++i) e.push_back({key(i), tiebreak.next_u64(), i});
  std::sort(e.begin(), e.end(), [](const Entry& a, const Entry& b) {
    return a.key != b.key ? a.key < b.key : a.tie < b.tie;
  });
  std::vector<std::size_t> out;
  out.reserve(n_bs);
  for (const Entry& x : e) out.push_back(x.bs);
  return out;
}

/// `count` distinct channels drawn sequentially, each draw proportional to
/// the weights of the channels not yet taken. Zero-weight channels are only
/// drawn (uniformly) once no positive weight remains.
inline ItemMask sequential_weighted_draw(std::vector<double> weights, int count, Rng& rng) {
  ItemMask taken = 0;
  const auto n = static_cast<int>(weights.size());
  count = std::min(count, n);
  for (int d = 0; d < count; ++d) {
    double total = 0.0;
    for (double w : weights) total += w;
    std::size_t chosen = weights.size();
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (std::size_t j = 0; j < weights.size(); ++j) {
        if (weights[j] <= 0.0) continue;
        chosen = j;
        if (r < weights[j]) break;
        r -= weights[j];
      }
    } else {
      std::vector<std::size_t> left;
      for (std::size_t j = 0; j < weights.size(); ++j)
        if (!contains(taken, j)) left.push_back(j);
      chosen = left[rng.below(left.size())];
    }
    taken |= bit(chosen);
    weights[chosen] = 0.0;
  }
  return taken;
}

}  // namespace detail

/// R: every tenant draws max_channels distinct channels uniformly.
inline Preallocation random_prealloc(const Scenario& s, int max_channels, const Rng& streams) {
  Preallocation p{AssignmentMatrix(s.n_tenants(), s.n_channels()), Method::R};
  for (std::size_t k = 0; k < s.n_tenants(); ++k) {
    Rng rng = streams.substream("prealloc.R", k);
    p.assign.set_row(k, from_indices(rng.sample(detail::channel_indices(s), static_cast<std::size_t>(max_channels))));
  }
  return p;
}

/// DB: nearest base stations first.
inline Preallocation distance_based(const Scenario& s, int max_channels, const Rng& streams) {
  Preallocation p{AssignmentMatrix(s.n_tenants(), s.n_channels()), Method::DB};
  for (std::size_t k = 0; k < s.n_tenants(); ++k) {
    Rng tie = streams.substream("tiebreak.bs", k);
    Rng pick = streams.substream("prealloc.DB", k);
    const auto order = detail::order_bs(s.n_bs(), [&](std::size_t i) { return distance(s, k, i); }, tie);
    p.assign.set_row(k, detail::fill_from_ordered_bs(s, order, max_channels, pick));
  }
  return p;
}

/// SCVB: base stations with the highest single-channel capacity first.
inline Preallocation scvb(ConnectivityEvaluator& eval, int max_channels, const Rng& streams) {
  const Scenario& s = eval.scenario();
  Preallocation p{AssignmentMatrix(s.n_tenants(), s.n_channels()), Method::SCVB};
  for (std::size_t k = 0; k < s.n_tenants(); ++k) {
    Rng tie = streams.substream("tiebreak.bs", k);
    Rng pick = streams.substream("prealloc.SCVB", k);
    const auto order = detail::order_bs(s.n_bs(), [&](std::size_t i) { return -eval.bs_scv(k, i); }, tie);
    p.assign.set_row(k, detail::fill_from_ordered_bs(s, order, max_channels, pick));
  }
  return p;
}

/// DBSR: weighted draws, weight inversely proportional to BS distance.
inline Preallocation dbsr(const Scenario& s, const LinkModel& m, int max_channels, const Rng& streams) {
  Preallocation p{AssignmentMatrix(s.n_tenants(), s.n_channels()), Method::DBSR};
  for (std::size_t k = 0; k < s.n_tenants(); ++k) {
    Rng rng = streams.substream("prealloc.DBSR", k);
    std::vector<double> w(s.n_channels());
    for (std::size_t j = 0; j < w.size(); ++j)
      w[j] = 1.0 / std::max(distance(s, k, static_cast<std::size_t>(s.owner(j))), m.min_distance_m);
    p.assign.set_row(k, detail::sequential_weighted_draw(std::move(w), max_channels, rng));
  }
  return p;
}

/// SCVBSR: weighted draws, weight proportional to the channel's SCV.
inline Preallocation scvbsr(ConnectivityEvaluator& eval, int max_channels, const Rng& streams) {
  const Scenario& s = eval.scenario();
  Preallocation p{AssignmentMatrix(s.n_tenants(), s.n_channels()), Method::SCVBSR};
  for (std::size_t k = 0; k < s.n_tenants(); ++k) {
    Rng rng = streams.substream("prealloc.SCVBSR", k);
    std::vector<double> w(s.n_channels());
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = eval.scv(k, j);
    p.assign.set_row(k, detail::sequential_weighted_draw(std::move(w), max_channels, rng));
  }
  return p;
}

}  // namespace mcca
