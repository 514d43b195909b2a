#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mcca/auction/bids.hpp"
#include "mcca/auction/wdp.hpp"

namespace mcca {

/// Minimum-channel requirement for the relaxed auction: per-item channel
/// counts and the least total an accepted bundle must reach.
struct MinChannels {
  std::vector<int> channels_per_item;
  int min_total = 0;
};

inline constexpr std::size_t kBruteForceMaxRows = 24;

/// Exhaustive enumeration of acceptance vectors (test oracle).
///
/// Walks every row in index order choosing accept/reject and abandons a
/// branch only when it already violates a constraint; no bounding, so every
/// feasible acceptance vector is visited.
inline WdpSolution brute_force_wdp(const BidMatrix& bm, int item_quota, bool require_all_bidders,
                                   const std::optional<MinChannels>& min_channels = std::nullopt) {
  if (bm.rows.size() > kBruteForceMaxRows) throw std::invalid_argument("brute_force_wdp: instance too large");
  const std::size_t n = bm.rows.size();
  std::vector<bool> allowed(n, true);
  if (min_channels) {
    for (std::size_t r = 0; r < n; ++r) {
      int total = 0;
      for (std::size_t j = 0; j < bm.item_count; ++j)
        if (contains(bm.rows[r].bundle, j)) total += min_channels->channels_per_item.at(j);
      allowed[r] = total >= min_channels->min_total;
    }
  }

  std::vector<int> bidder_used(bm.bidder_count, 0);
  std::vector<int> item_used(bm.item_count, 0);
  std::vector<std::size_t> chosen;
  std::optional<std::vector<std::size_t>> best;
  double best_value = -std::numeric_limits<double>::infinity();

  auto rec = [&](auto&& self, std::size_t r) -> void {
    if (r == n) {
      if (require_all_bidders)
        for (int u : bidder_used)
          if (u != 1) return;
      std::vector<std::size_t> rows = chosen;
      const double v = canonical_objective(bm, rows);
      if (!best || v > best_value) {
        best_value = v;
        best = std::move(rows);
      }
      return;
    }
    self(self, r + 1);  // reject row r
    const Bid& b = bm.rows[r];
    if (!allowed[r] || bidder_used[b.bidder] != 0) return;
    for (std::size_t j = 0; j < bm.item_count; ++j)
      if (contains(b.bundle, j) && item_used[j] >= item_quota) return;
    ++bidder_used[b.bidder];
    for (std::size_t j = 0; j < bm.item_count; ++j)
      if (contains(b.bundle, j)) ++item_used[j];
    chosen.push_back(r);
    self(self, r + 1);
    chosen.pop_back();
    for (std::size_t j = 0; j < bm.item_count; ++j)
      if (contains(b.bundle, j)) --item_used[j];
    --bidder_used[b.bidder];
  };
  rec(rec, 0);

  WdpSolution sol;
  if (!best) {
    sol.status = WdpStatus::Infeasible;
    return sol;
  }
  sol.accepted = *best;
  sol.objective = canonical_objective(bm, sol.accepted);
  sol.proven_optimal = true;
  return sol;
}

}  // namespace mcca
