#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mcca/assignment.hpp"
#include "mcca/auction/bids.hpp"
#include "mcca/auction/wdp.hpp"
#include "mcca/connectivity.hpp"
#include "mcca/prealloc.hpp"
#include "mcca/rng.hpp"

// Relaxed combinatorial auction over base stations: a BS may serve up to
// q_BS tenants and every tenant must end up with at least min_channels
// (capped) channels.

namespace mcca {

struct RcaConfig {
  int q_bs = 2;
  int n_chpbs = 3;  // channels of a BS a tenant considers
  int min_channels = 2;
  int max_channels = kDefaultMaxChannels;
  int max_bs_considered = kDefaultMaxChannels;

  void validate() const {
    if (q_bs < 2) throw std::invalid_argument("RcaConfig: q_BS must be >= 2");
    if (q_bs > 15) throw std::invalid_argument("RcaConfig: q_BS above 15 is not supported");
    if (n_chpbs < 1) throw std::invalid_argument("RcaConfig: n_chpBS must be >= 1");
    if (min_channels > max_channels) throw std::invalid_argument("RcaConfig: min_channels exceeds max_channels");
    if (max_bs_considered < 1) throw std::invalid_argument("RcaConfig: max_bs_considered must be >= 1");
  }
};

/// Channel counts per BS with values above n_chpBS replaced by n_chpBS.
inline std::vector<int> capped_channel_counts(const Scenario& s, const RcaConfig& cfg) {
  std::vector<int> c = s.channels_per_bs;
  for (int& x : c) x = std::min(x, cfg.n_chpbs);
  return c;
}

inline int bundle_channels(ItemMask bs_bundle, const std::vector<int>& counts) {
  int total = 0;
  for_each_bit(bs_bundle, [&](std::size_t i) { total += counts[i]; });
  return total;
}

/// BS-level bids. Per tenant: keep the max_bs_considered BSs with the best
/// single-channel capacity (random tie-break), enumerate every non-empty
/// subset whose capped channel total stays within max_channels, and value it
/// by the raw capacity of one representative channel per BS.
inline BidMatrix generate_bs_bids(ConnectivityEvaluator& eval, const RcaConfig& cfg, const Rng& streams) {
  cfg.validate();
  const Scenario& s = eval.scenario();
  const auto capped = capped_channel_counts(s, cfg);
  std::vector<std::size_t> representative(s.n_bs());
  for (std::size_t i = 0; i < s.n_bs(); ++i)
    representative[i] = static_cast<std::size_t>(std::countr_zero(s.channels_of_bs(i)));

  BidMatrix bm;
  bm.item_count = s.n_bs();
  bm.bidder_count = s.n_tenants();
  for (std::size_t k = 0; k < s.n_tenants(); ++k) {
    Rng tie = streams.substream("tiebreak.rca", k);
    auto order = detail::order_bs(s.n_bs(), [&](std::size_t i) { return -eval.bs_scv(k, i); }, tie);
    order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(cfg.max_bs_considered)));
    const ItemMask kept = from_indices(order);
    std::vector<ItemMask> subsets;
    for_each_nonempty_subset(kept, [&](ItemMask sub) {
      if (bundle_channels(sub, capped) <= cfg.max_channels) subsets.push_back(sub);
    });
    for (auto it = subsets.rbegin(); it != subsets.rend(); ++it) {
      ItemMask reps = 0;
      for_each_bit(*it, [&](std::size_t i) { reps |= bit(representative[i]); });
      bm.rows.push_back({*it, eval.capacity(k, reps), k});
    }
  }
  return bm;
}

/// Eligibility of each row under the minimum-channel constraint.
inline std::vector<bool> rca_eligibility(const BidMatrix& bids, const RcaConfig& cfg,
                                         const std::vector<int>& capped_counts) {
  if (capped_counts.size() != bids.item_count) throw std::invalid_argument("rca: channel count vector size mismatch");
  std::vector<bool> ok(bids.rows.size());
  for (std::size_t r = 0; r < bids.rows.size(); ++r)
    ok[r] = bundle_channels(bids.rows[r].bundle, capped_counts) >= cfg.min_channels;
  return ok;
}

/// Optimal relaxed auction: every tenant receives exactly one eligible
/// bundle, every BS appears in at most q_BS accepted bundles.
///
/// On infeasibility `infeasible_bidder` names the first tenant without an
/// eligible bundle, or else the lowest k such that tenants 0..k cannot be
/// served together.
inline WdpSolution solve_rca(const BidMatrix& bids, const RcaConfig& cfg, const std::vector<int>& capped_counts,
                             const WdpOptions& opt = {}) {
  cfg.validate();
  WdpProblem pb{&bids, cfg.q_bs, true, rca_eligibility(bids, cfg, capped_counts)};
  WdpSolution sol = solve_wdp(pb, opt);
  if (sol.status != WdpStatus::Infeasible || sol.infeasible_bidder) return sol;

  // Joint infeasibility: find the shortest infeasible prefix of tenants.
  for (std::size_t k = 0; k < bids.bidder_count; ++k) {
    BidMatrix prefix;
    prefix.item_count = bids.item_count;
    prefix.bidder_count = k + 1;
    std::vector<bool> elig;
    for (std::size_t r = 0; r < bids.rows.size(); ++r) {
      if (bids.rows[r].bidder > k) continue;
      Bid b = bids.rows[r];
      b.value = 0.0;
      prefix.rows.push_back(b);
      elig.push_back(pb.eligible[r]);
    }
    WdpProblem sub{&prefix, cfg.q_bs, true, elig};
    if (solve_wdp(sub, opt).status == WdpStatus::Infeasible) {
      sol.infeasible_bidder = k;
      break;
    }
  }
  return sol;
}

/// Translates accepted BS bundles back into channels: all channels of a BS
/// when it has at most n_chpBS, otherwise n_chpBS of them uniformly.
inline Preallocation rca_to_preallocation(const Scenario& s, const BidMatrix& bids, const WdpSolution& sol,
                                          const RcaConfig& cfg, const Rng& streams) {
  Preallocation p{AssignmentMatrix(s.n_tenants(), s.n_channels()), Method::RCA};
  for (std::size_t r : sol.accepted) {
    const Bid& b = bids.rows[r];
    Rng pick = streams.substream("prealloc.RCA", b.bidder);
    ItemMask row = 0;
    for_each_bit(b.bundle, [&](std::size_t i) {
      const ItemMask chans = s.channels_of_bs(i);
      if (popcount(chans) <= cfg.n_chpbs) {
        row |= chans;
      } else {
        row |= from_indices(pick.sample(to_indices(chans), static_cast<std::size_t>(cfg.n_chpbs)));
      }
    });
    p.assign.set_row(b.bidder, row);
  }
  return p;
}

}  // namespace mcca
