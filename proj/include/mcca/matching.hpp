#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcca/assignment.hpp"
#include "mcca/connectivity.hpp"
#include "mcca/rng.hpp"

namespace mcca {

/// Strict preference orders of tenants over channels and channels over
/// tenants, both derived from single-connectivity values.
struct PreferenceProfile {
  std::vector<std::vector<std::size_t>> tenant_prefs;   // tenant -> channels, best first
  std::vector<std::vector<std::size_t>> channel_prefs;  // channel -> tenants, best first
  std::vector<std::uint64_t> tie_keys;                  // n_T x n_ch, row-major

  [[nodiscard]] std::size_t n_tenants() const noexcept { return tenant_prefs.size(); }
  [[nodiscard]] std::size_t n_channels() const noexcept { return channel_prefs.size(); }
};

struct Quotas {
  int q_tenant = 8;   // q_T: offers a tenant holds
  int q_channel = 2;  // q_ch: tenants a channel may be matched to

  void validate(int max_channels = kDefaultMaxChannels) const {
    if (q_tenant < 1 || q_tenant > max_channels)
      throw std::invalid_argument("Quotas: q_T must lie in [1, max_channels]");
    if (q_channel < 1) throw std::invalid_argument("Quotas: q_ch must be >= 1");
  }
};

/// Orders sorted by (SCV descending, tie key ascending). One tie key per
/// (tenant, channel) pair, shared by both sides.
inline PreferenceProfile build_preferences(ConnectivityEvaluator& eval, const Rng& streams) {
  const Scenario& s = eval.scenario();
  const std::size_t nt = s.n_tenants();
  const std::size_t nc = s.n_channels();
  PreferenceProfile p;
  p.tie_keys.resize(nt * nc);
  Rng tie = streams.substream("tiebreak.pairs");
  for (auto& key : p.tie_keys) key = tie.next_u64();

  std::vector<double> scv(nt * nc);
  for (std::size_t k = 0; k < nt; ++k)
    for (std::size_t j = 0; j < nc; ++j) scv[k * nc + j] = eval.scv(k, j);

  p.tenant_prefs.resize(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    auto& order = p.tenant_prefs[k];
    order.resize(nc);
    for (std::size_t j = 0; j < nc; ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double va = scv[k * nc + a];
      const double vb = scv[k * nc + b];
      return va != vb ? va > vb : p.tie_keys[k * nc + a] < p.tie_keys[k * nc + b];
    });
  }
  p.channel_prefs.resize(nc);
  for (std::size_t j = 0; j < nc; ++j) {
    auto& order = p.channel_prefs[j];
    order.resize(nt);
    for (std::size_t k = 0; k < nt; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double va = scv[a * nc + j];
      const double vb = scv[b * nc + j];
      return va != vb ? va > vb : p.tie_keys[a * nc + j] < p.tie_keys[b * nc + j];
    });
  }
  return p;
}

enum class ProposalOrder { Fifo, Lifo };

struct MatchingStats {
  std::size_t proposals = 0;
};

namespace detail {

// rank[x][y]: position of y in x's list.
inline std::vector<std::vector<std::size_t>> ranks(const std::vector<std::vector<std::size_t>>& prefs,
                                                   std::size_t n_other) {
  std::vector<std::vector<std::size_t>> r(prefs.size(), std::vector<std::size_t>(n_other, n_other));
  for (std::size_t x = 0; x < prefs.size(); ++x)
    for (std::size_t pos = 0; pos < prefs[x].size(); ++pos) r[x][prefs[x][pos]] = pos;
  return r;
}

inline void check_profile(const PreferenceProfile& p) {
  const std::size_t nt = p.n_tenants();
  const std::size_t nc = p.n_channels();
  for (const auto& l : p.tenant_prefs) {
    std::vector<bool> seen(nc, false);
    if (l.size() != nc) throw std::invalid_argument("PreferenceProfile: tenant list is not a permutation");
    for (std::size_t j : l) {
      if (j >= nc || seen[j]) throw std::invalid_argument("PreferenceProfile: tenant list is not a permutation");
      seen[j] = true;
    }
  }
  for (const auto& l : p.channel_prefs) {
    std::vector<bool> seen(nt, false);
    if (l.size() != nt) throw std::invalid_argument("PreferenceProfile: channel list is not a permutation");
    for (std::size_t k : l) {
      if (k >= nt || seen[k]) throw std::invalid_argument("PreferenceProfile: channel list is not a permutation");
      seen[k] = true;
    }
  }
}

}  // namespace detail

/// Many-to-many deferred acceptance, channels proposing.
///
/// A channel with a free slot proposes to the next tenant on its list it has
/// not yet tried. A tenant keeps its q_T best proposers and rejects the
/// displaced one, whose channel then resumes proposing. Stops when no channel
/// has both a free slot and an untried tenant.
inline Preallocation m2m_gale_shapley(const PreferenceProfile& p, const Quotas& q,
                                      ProposalOrder order = ProposalOrder::Fifo, MatchingStats* stats = nullptr) {
  detail::check_profile(p);
  if (q.q_tenant < 1 || q.q_channel < 1) throw std::invalid_argument("m2m_gale_shapley: quotas must be >= 1");
  const std::size_t nt = p.n_tenants();
  const std::size_t nc = p.n_channels();
  const auto tenant_rank = detail::ranks(p.tenant_prefs, nc);

  std::vector<std::size_t> next(nc, 0);  // next list position per channel
  std::vector<int> matched(nc, 0);
  std::vector<std::vector<std::size_t>> held(nt);  // channels held by tenant
  std::deque<std::size_t> free_channels;
  for (std::size_t j = 0; j < nc; ++j) free_channels.push_back(j);
  std::size_t proposals = 0;

  while (!free_channels.empty()) {
    std::size_t j;
    if (order == ProposalOrder::Fifo) {
      j = free_channels.front();
      free_channels.pop_front();
    } else {
      j = free_channels.back();
      free_channels.pop_back();
    }
    // Propose until the channel's slots are full or its list is exhausted.
    while (matched[j] < q.q_channel && next[j] < nt) {
      const std::size_t k = p.channel_prefs[j][next[j]++];
      ++proposals;
      auto& h = held[k];
      if (static_cast<int>(h.size()) < q.q_tenant) {
        h.push_back(j);
        ++matched[j];
        continue;
      }
      auto worst = std::max_element(h.begin(), h.end(), [&](std::size_t a, std::size_t b) {
        return tenant_rank[k][a] < tenant_rank[k][b];
      });
      if (tenant_rank[k][j] < tenant_rank[k][*worst]) {
        const std::size_t displaced = *worst;
        *worst = j;
        ++matched[j];
        --matched[displaced];
        free_channels.push_back(displaced);
      }
    }
  }
  if (stats) stats->proposals = proposals;

  Preallocation out{AssignmentMatrix(nt, nc), Method::M2MGS};
  for (std::size_t k = 0; k < nt; ++k)
    for (std::size_t j : held[k]) out.assign.set(k, j);
  return out;
}

struct BlockingPair {
  std::size_t tenant;
  std::size_t channel;
  friend bool operator==(const BlockingPair&, const BlockingPair&) = default;
};

struct StabilityReport {
  bool stable = true;
  std::vector<BlockingPair> violations;
  std::string error;  // quota violations, not blocking pairs
};

/// Pairwise stability check, independent of the matching engine.
/// (k, j) blocks when unmatched to each other, k has a free slot or prefers
/// j to its worst held channel, and j has a free slot or prefers k to its
/// worst matched tenant.
inline StabilityReport verify_pairwise_stability(const PreferenceProfile& p, const Quotas& q,
                                                 const AssignmentMatrix& m) {
  const std::size_t nt = p.n_tenants();
  const std::size_t nc = p.n_channels();
  if (m.n_tenants() != nt || m.n_channels() != nc)
    throw std::invalid_argument("verify_pairwise_stability: dimension mismatch");
  const auto tenant_rank = detail::ranks(p.tenant_prefs, nc);
  const auto channel_rank = detail::ranks(p.channel_prefs, nt);

  StabilityReport rep;
  std::vector<std::size_t> worst_of_tenant(nt, 0);
  std::vector<int> tenant_load(nt, 0);
  for (std::size_t k = 0; k < nt; ++k) {
    tenant_load[k] = m.row_sum(k);
    for (std::size_t j = 0; j < nc; ++j)
      if (m.get(k, j)) worst_of_tenant[k] = std::max(worst_of_tenant[k], tenant_rank[k][j]);
    if (tenant_load[k] > q.q_tenant) rep.error = "tenant quota exceeded";
  }
  std::vector<std::size_t> worst_of_channel(nc, 0);
  std::vector<int> channel_load(nc, 0);
  for (std::size_t j = 0; j < nc; ++j) {
    for (std::size_t k = 0; k < nt; ++k) {
      if (!m.get(k, j)) continue;
      ++channel_load[j];
      worst_of_channel[j] = std::max(worst_of_channel[j], channel_rank[j][k]);
    }
    if (channel_load[j] > q.q_channel) rep.error = "channel quota exceeded";
  }
  for (std::size_t k = 0; k < nt; ++k) {
    for (std::size_t j = 0; j < nc; ++j) {
      if (m.get(k, j)) continue;
      const bool tenant_wants = tenant_load[k] < q.q_tenant || tenant_rank[k][j] < worst_of_tenant[k];
      const bool channel_wants = channel_load[j] < q.q_channel || channel_rank[j][k] < worst_of_channel[j];
      if (tenant_wants && channel_wants) rep.violations.push_back({k, j});
    }
  }
  rep.stable = rep.violations.empty() && rep.error.empty();
  return rep;
}

}  // namespace mcca
