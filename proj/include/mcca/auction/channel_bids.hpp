#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcca/assignment.hpp"
#include "mcca/auction/bids.hpp"
#include "mcca/connectivity.hpp"

namespace mcca {

/// One bid per non-empty subset of each tenant's preallocated set, valued by
/// the tenant's utility of the subset's capacity. Bundles are listed in
/// ascending mask order per tenant.
inline BidMatrix generate_channel_bids(ConnectivityEvaluator& eval, const AssignmentMatrix& prealloc,
                                       int max_channels = kDefaultMaxChannels) {
  const Scenario& s = eval.scenario();
  if (prealloc.n_tenants() != s.n_tenants() || prealloc.n_channels() != s.n_channels())
    throw std::invalid_argument("generate_channel_bids: preallocation does not match the scenario");
  BidMatrix bm;
  bm.item_count = s.n_channels();
  bm.bidder_count = s.n_tenants();
  for (std::size_t k = 0; k < s.n_tenants(); ++k) {
    if (prealloc.row_sum(k) > max_channels)
      throw std::invalid_argument("generate_channel_bids: tenant " + std::to_string(k) + " holds more than " +
                                  std::to_string(max_channels) + " channels");
  }
  for (std::size_t k = 0; k < s.n_tenants(); ++k) {
    const ItemMask own = prealloc.row(k);
    std::vector<ItemMask> subsets;
    for_each_nonempty_subset(own, [&](ItemMask sub) { subsets.push_back(sub); });
    for (auto it = subsets.rbegin(); it != subsets.rend(); ++it)
      bm.rows.push_back({*it, utility(eval.capacity(k, *it), s.utility_bounds[k]), k});
  }
  return bm;
}

/// Drops, per bidder, every bid whose bundle strictly contains another bid's
/// bundle of at least the same value. The winner-determination optimum is
/// unchanged.
inline BidMatrix prune_dominated_bids(const BidMatrix& bm) {
  BidMatrix out;
  out.item_count = bm.item_count;
  out.bidder_count = bm.bidder_count;
  for (std::size_t r = 0; r < bm.rows.size(); ++r) {
    const Bid& b = bm.rows[r];
    bool dominated = false;
    for (const Bid& o : bm.rows) {
      if (o.bidder == b.bidder && o.bundle != b.bundle && is_subset(o.bundle, b.bundle) && o.value >= b.value) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.rows.push_back(b);
  }
  return out;
}

}  // namespace mcca
