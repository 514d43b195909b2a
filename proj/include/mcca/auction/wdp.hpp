#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcca/auction/bids.hpp"
#include "mcca/bitmask.hpp"
#include "mcca/rng.hpp"

namespace mcca {

enum class WdpStatus { Optimal, TimedOut, Infeasible };

inline std::string_view to_string(WdpStatus s) {
  switch (s) {
    case WdpStatus::Optimal: return "optimal";
    case WdpStatus::TimedOut: return "timeout";
    case WdpStatus::Infeasible: return "infeasible";
  }
  return "?";
}

struct WdpSolution {
  std::vector<std::size_t> accepted;  // row indices, ascending
  double objective = 0.0;             // canonical_objective of accepted
  bool proven_optimal = false;
  WdpStatus status = WdpStatus::Optimal;
  std::optional<std::size_t> infeasible_bidder;
  std::size_t nodes = 0;
};

/// A winner determination instance over a bid matrix.
///
/// Every item may appear in at most `item_quota` accepted bundles and every
/// bidder receives at most one bundle. Mandatory bidders must receive
/// exactly one. Rows with `eligible[r] == false` can never be accepted.
struct WdpProblem {
  const BidMatrix* bids = nullptr;
  int item_quota = 1;
  bool all_bidders_mandatory = false;
  std::vector<bool> eligible;  // empty: every row eligible
};

struct WdpOptions {
  double time_budget_s = 10.0;
  std::size_t memo_limit = std::size_t{1} << 21;
};

/// Sorts `rows` and returns the sum of their values taken in ascending value
/// order, so solutions with the same multiset of values agree bit for bit.
inline double canonical_objective(const BidMatrix& bm, std::vector<std::size_t>& rows) {
  std::sort(rows.begin(), rows.end());
  std::vector<double> values;
  values.reserve(rows.size());
  for (std::size_t r : rows) values.push_back(bm.rows[r].value);
  std::sort(values.begin(), values.end());
  double v = 0.0;
  for (double x : values) v += x;
  return v;
}

/// Independent post-hoc constraint check. Returns an empty string when the
/// accepted rows satisfy bidder, item-quota, eligibility and mandatory
/// constraints; otherwise a description of the violation.
inline std::string check_solution(const WdpProblem& pb, const std::vector<std::size_t>& accepted) {
  const BidMatrix& bm = *pb.bids;
  std::vector<int> per_bidder(bm.bidder_count, 0);
  std::vector<int> per_item(bm.item_count, 0);
  for (std::size_t r : accepted) {
    if (r >= bm.rows.size()) return "row index out of range";
    if (!pb.eligible.empty() && !pb.eligible[r]) return "ineligible row accepted";
    const Bid& b = bm.rows[r];
    if (++per_bidder[b.bidder] > 1) return "bidder " + std::to_string(b.bidder) + " receives two bundles";
    for (std::size_t j = 0; j < bm.item_count; ++j)
      if (contains(b.bundle, j) && ++per_item[j] > pb.item_quota)
        return "item " + std::to_string(j) + " exceeds its quota";
  }
  if (pb.all_bidders_mandatory)
    for (std::size_t k = 0; k < bm.bidder_count; ++k)
      if (per_bidder[k] != 1) return "mandatory bidder " + std::to_string(k) + " unassigned";
  return {};
}

namespace detail {

/// Interchangeable items grouped into classes. Two items are interchangeable
/// when swapping them maps every row to a row of the same bidder with the
/// same value; the relation is an equivalence, so a bid is fully described
/// by how many items of each class it demands.
struct ItemClasses {
  std::vector<int> class_of;                   // item -> class, -1 if unused
  std::vector<std::vector<std::size_t>> items;  // class -> items, ascending
};

struct RowKey {
  std::size_t bidder;
  ItemMask bundle;
  friend bool operator==(const RowKey&, const RowKey&) = default;
};
struct RowKeyHash {
  std::size_t operator()(const RowKey& k) const noexcept {
    return static_cast<std::size_t>(mix64(mix64(k.bidder) ^ k.bundle));
  }
};
using RowIndex = std::unordered_map<RowKey, std::size_t, RowKeyHash>;

inline ItemMask swap_items(ItemMask m, std::size_t a, std::size_t b) {
  const bool ha = contains(m, a);
  const bool hb = contains(m, b);
  if (ha == hb) return m;
  return m ^ bit(a) ^ bit(b);
}

inline ItemClasses find_item_classes(const BidMatrix& bm, const std::vector<std::size_t>& rows, const RowIndex& index,
                                     std::size_t max_class_size) {
  const std::size_t n = bm.item_count;
  // Cheap necessary condition: identical (bidder, row count) profiles.
  std::vector<std::vector<std::pair<std::size_t, int>>> sig(n);
  ItemMask used = 0;
  for (std::size_t r : rows) {
    const Bid& b = bm.rows[r];
    used |= b.bundle;
    for_each_bit(b.bundle, [&](std::size_t j) {
      auto& s = sig[j];
      if (!s.empty() && s.back().first == b.bidder) {
        ++s.back().second;
      } else {
        s.emplace_back(b.bidder, 1);
      }
    });
  }
  auto interchangeable = [&](std::size_t a, std::size_t b) {
    if (sig[a] != sig[b]) return false;
    for (std::size_t r : rows) {
      const Bid& bid = bm.rows[r];
      const ItemMask swapped = swap_items(bid.bundle, a, b);
      if (swapped == bid.bundle) continue;
      auto it = index.find({bid.bidder, swapped});
      if (it == index.end() || bm.rows[it->second].value != bid.value) return false;
    }
    return true;
  };

  ItemClasses ic;
  ic.class_of.assign(n, -1);
  std::vector<std::size_t> reps;
  for (std::size_t j = 0; j < n; ++j) {
    if (!contains(used, j)) continue;
    std::size_t c = 0;
    for (; c < reps.size(); ++c)
      if (interchangeable(reps[c], j)) break;
    if (c == reps.size()) {
      reps.push_back(j);
      ic.items.emplace_back();
    }
    ic.items[c].push_back(j);
  }
  // Split oversized classes so per-class counts stay small.
  std::vector<std::vector<std::size_t>> split;
  for (auto& cls : ic.items) {
    for (std::size_t i = 0; i < cls.size(); i += max_class_size) {
      const std::size_t e = std::min(cls.size(), i + max_class_size);
      split.emplace_back(cls.begin() + static_cast<std::ptrdiff_t>(i), cls.begin() + static_cast<std::ptrdiff_t>(e));
    }
  }
  ic.items = std::move(split);
  for (std::size_t c = 0; c < ic.items.size(); ++c)
    for (std::size_t j : ic.items[c]) ic.class_of[j] = static_cast<int>(c);
  return ic;
}

/// A bid expressed as a demand over item classes.
struct Demand {
  std::vector<std::pair<std::uint8_t, std::uint8_t>> parts;  // (class, count), class ascending
  ItemMask classes = 0;
  bool multi = false;  // some count above one
  friend bool operator==(const Demand& a, const Demand& b) { return a.parts == b.parts; }
};

inline Demand demand_of(ItemMask bundle, const ItemClasses& ic) {
  std::array<std::uint8_t, kMaxItems> cnt{};
  ItemMask cls = 0;
  for_each_bit(bundle, [&](std::size_t j) {
    const auto c = static_cast<std::size_t>(ic.class_of[j]);
    ++cnt[c];
    cls |= bit(c);
  });
  Demand d;
  d.classes = cls;
  for_each_bit(cls, [&](std::size_t c) {
    d.parts.emplace_back(static_cast<std::uint8_t>(c), cnt[c]);
    if (cnt[c] > 1) d.multi = true;
  });
  return d;
}

inline bool demand_le(const Demand& a, const Demand& b) {
  if (!is_subset(a.classes, b.classes)) return false;
  std::size_t j = 0;
  for (const auto& [c, n] : a.parts) {
    while (b.parts[j].first != c) ++j;
    if (n > b.parts[j].second) return false;
  }
  return true;
}

/// Depth-first branch and bound over bidders, on class counts.
///
/// At each depth one bidder either takes one of its compatible bids (by
/// descending value) or, if optional, nothing. Two admissible bounds are
/// combined at every node:
///  - the sum over the remaining bidders of their best bid still compatible
///    with the current class counts;
///  - a Lagrangian bound with class prices lambda >= 0: each remaining bidder
///    contributes its best reduced value v - sum lambda_c n_c (or 0 when
///    optional), plus lambda_c times the residual capacity of every class.
///    Prices are fitted once per search by subgradient descent at the root.
/// Bids are tried in order of value minus the price of the classes later
/// bidders can use, which also bounds every bid not yet tried.
/// Subtree results are memoized per (depth, counts of the classes the
/// remaining bidders can use).
///
/// With unit capacities an optional preference table prunes bundles that
/// hold a class while a preferred class is still free: preferred means the
/// current bidder values both alike and every remaining bidder that can use
/// the preferred one treats the two as interchangeable, so swapping them in
/// any completion loses nothing.
class BranchAndBound {
 public:
  struct Candidate {
    const Demand* demand;
    double value;
    std::size_t ref;  // caller's handle
  };
  struct Bidder {
    std::vector<Candidate> bids;  // descending value
    bool mandatory = false;
    std::size_t id = 0;
  };
  struct Choice {
    std::size_t bidder;
    std::size_t ref;
  };

  BranchAndBound(std::vector<Bidder> bidders, std::vector<int> caps, const WdpOptions& opt,
                 std::chrono::steady_clock::time_point deadline)
      : bidders_(std::move(bidders)), caps_(std::move(caps)), opt_(opt), deadline_(deadline) {
    if (caps_.size() > kMaxItems) throw std::invalid_argument("wdp: too many item classes");
    const std::size_t n = bidders_.size();
    suffix_classes_.assign(n + 1, 0);
    for (std::size_t d = n; d-- > 0;) {
      ItemMask u = 0;
      for (const auto& c : bidders_[d].bids) u |= c.demand->classes;
      suffix_classes_[d] = suffix_classes_[d + 1] | u;
    }
    path_.assign(n, nullptr);
    for (std::size_t c = 0; c < caps_.size(); ++c)
      if (caps_[c] <= 0) full_ |= bit(c);
  }

  /// Runs the search; returns false when the deadline was hit.
  bool run() {
    greedy(false);
    fit_prices();
    greedy(true);
    improve();
    if (!aborted_) search(0, 0.0);
    return !aborted_;
  }

  /// prefer[d][c]: classes preferred over c for the bidder at depth d.
  void set_preferences(std::vector<std::array<ItemMask, kMaxItems>> prefer) { prefer_ = std::move(prefer); }

  [[nodiscard]] bool has_incumbent() const noexcept { return best_value_ > kNegInf; }
  [[nodiscard]] const std::vector<Choice>& incumbent() const noexcept { return best_; }
  [[nodiscard]] std::size_t nodes() const noexcept { return nodes_; }

  [[nodiscard]] double root_bound() {
    fit_prices();
    return std::min(rest_bound(0), price_bound(0));
  }

 private:
  static constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  static constexpr double kPruneTol = 1e-9;
  static constexpr std::size_t kNoPick = std::numeric_limits<std::size_t>::max();
  static constexpr std::size_t kWindow = 6;
  static constexpr int kPasses = 4;

  struct Key {
    std::uint32_t depth;
    std::array<std::uint64_t, 8> counts;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t h = mix64(k.depth);
      for (auto w : k.counts) h = mix64(h ^ w);
      return static_cast<std::size_t>(h);
    }
  };

  [[nodiscard]] bool fits(const Candidate& c) const {
    if ((c.demand->classes & full_) != 0) return false;
    if (!c.demand->multi) return true;
    for (const auto& [cl, n] : c.demand->parts)
      if (counts_[cl] + n > caps_[cl]) return false;
    return true;
  }

  [[nodiscard]] bool canonical(std::size_t d, ItemMask cls) const {
    if (prefer_.empty()) return true;
    const auto& pref = prefer_[d];
    const ItemMask open = ~cls & ~full_;
    bool ok = true;
    for_each_bit(cls, [&](std::size_t c) {
      if ((pref[c] & open) != 0) ok = false;
    });
    return ok;
  }

  [[nodiscard]] double best_compatible(std::size_t d) const {
    for (const auto& c : bidders_[d].bids)
      if (fits(c)) return c.value;
    return bidders_[d].mandatory ? kNegInf : 0.0;
  }

  [[nodiscard]] double rest_bound(std::size_t from) const {
    double b = 0.0;
    for (std::size_t t = from; t < bidders_.size(); ++t) {
      b += best_compatible(t);
      if (b == kNegInf) break;
    }
    return b;
  }

  [[nodiscard]] double reduced(const Candidate& c) const {
    double v = c.value;
    for (const auto& [cl, n] : c.demand->parts) v -= lambda_[cl] * n;
    return v;
  }

  [[nodiscard]] double price_bound(std::size_t from) const {
    double b = 0.0;
    for (std::size_t t = from; t < bidders_.size(); ++t) {
      const Bidder& bd = bidders_[t];
      double best = bd.mandatory ? kNegInf : 0.0;
      for (std::size_t idx : by_reduced_[t]) {
        if (fits(bd.bids[idx])) {
          best = std::max(best, reduced_value_[t][idx]);
          break;
        }
      }
      if (best == kNegInf) return kNegInf;
      b += best;
    }
    for_each_bit(suffix_classes_[from] & ~full_, [&](std::size_t c) {
      b += lambda_[c] * static_cast<double>(caps_[c] - counts_[c]);
    });
    return b;
  }

  /// Subgradient descent on the Lagrangian dual at the root. Prices stay
  /// fixed afterwards, so any lambda >= 0 keeps the bound admissible.
  void fit_prices() {
    if (fitted_) return;
    fitted_ = true;
    lambda_.fill(0.0);
    const std::size_t n = bidders_.size();
    auto sorted_by = [](const std::vector<double>& v) {
      std::vector<std::size_t> ord(v.size());
      std::iota(ord.begin(), ord.end(), std::size_t{0});
      std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
      return ord;
    };
    auto refresh_order = [&] {
      reduced_value_.assign(n, {});
      local_value_.assign(n, {});
      by_reduced_.assign(n, {});
      by_local_.assign(n, {});
      for (std::size_t t = 0; t < n; ++t) {
        const auto& bids = bidders_[t].bids;
        auto& rv = reduced_value_[t];
        auto& lv = local_value_[t];
        rv.resize(bids.size());
        lv.resize(bids.size());
        for (std::size_t i = 0; i < bids.size(); ++i) {
          rv[i] = reduced(bids[i]);
          lv[i] = bids[i].value;
          for (const auto& [cl, cnt] : bids[i].demand->parts)
            if (contains(suffix_classes_[t + 1], cl)) lv[i] -= lambda_[cl] * cnt;
        }
        by_reduced_[t] = sorted_by(rv);
        by_local_[t] = sorted_by(lv);
      }
    };
    if (n < 2) {
      refresh_order();
      return;
    }
    const double target = best_value_ > kNegInf ? best_value_ : 0.0;
    std::array<double, kMaxItems> best_lambda{};
    double best_bound = std::numeric_limits<double>::infinity();
    double scale = 2.0;
    int stall = 0;
    for (int it = 0; it < 1000; ++it) {
      std::array<int, kMaxItems> usage{};
      double value = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        const Bidder& bd = bidders_[t];
        double best = bd.mandatory ? kNegInf : 0.0;
        const Candidate* arg = nullptr;
        for (const auto& c : bd.bids) {
          const double r = reduced(c);
          if (r > best) {
            best = r;
            arg = &c;
          }
        }
        if (best == kNegInf) break;
        value += best;
        if (arg)
          for (const auto& [cl, cnt] : arg->demand->parts) usage[cl] += cnt;
      }
      double norm = 0.0;
      std::array<double, kMaxItems> g{};
      for_each_bit(suffix_classes_[0], [&](std::size_t c) {
        value += lambda_[c] * caps_[c];
        g[c] = static_cast<double>(caps_[c] - usage[c]);
        if (lambda_[c] <= 0.0 && g[c] > 0.0) g[c] = 0.0;  // projected
        norm += g[c] * g[c];
      });
      if (value < best_bound - 1e-12) {
        best_bound = value;
        best_lambda = lambda_;
        stall = 0;
      } else if (++stall >= 30) {
        scale *= 0.5;
        stall = 0;
        lambda_ = best_lambda;
      }
      if (norm == 0.0 || best_bound - target <= 1e-9 || scale < 1e-4) break;
      const double step = scale * std::max(value - target, 1e-3) / norm;
      for_each_bit(suffix_classes_[0], [&](std::size_t c) { lambda_[c] = std::max(0.0, lambda_[c] - step * g[c]); });
    }
    if (best_bound < std::numeric_limits<double>::infinity()) lambda_ = best_lambda;
    refresh_order();
  }

  [[nodiscard]] Key make_key(std::size_t d) const {
    Key k{static_cast<std::uint32_t>(d), {}};
    std::size_t slot = 0;
    for_each_bit(suffix_classes_[d], [&](std::size_t c) {
      k.counts[slot / 8] |= static_cast<std::uint64_t>(counts_[c]) << (8 * (slot % 8));
      ++slot;
    });
    return k;
  }

  void take(const Demand& dm) {
    for (const auto& [c, n] : dm.parts)
      if ((counts_[c] += n) >= caps_[c]) full_ |= bit(c);
  }
  void release(const Demand& dm) {
    for (const auto& [c, n] : dm.parts) {
      counts_[c] -= n;
      full_ &= ~bit(c);
    }
  }

  void greedy(bool priced) {
    double v = 0.0;
    std::vector<const Candidate*> picks(bidders_.size(), nullptr);
    bool ok = true;
    for (std::size_t d = 0; d < bidders_.size() && ok; ++d) {
      const auto& bids = bidders_[d].bids;
      for (std::size_t i = 0; i < bids.size(); ++i) {
        const Candidate& c = bids[priced ? by_local_[d][i] : i];
        if (fits(c)) {
          picks[d] = &c;
          break;
        }
      }
      if (picks[d]) {
        take(*picks[d]->demand);
        v += picks[d]->value;
      } else if (bidders_[d].mandatory) {
        ok = false;
      }
    }
    for (const Candidate* c : picks)
      if (c) release(*c->demand);
    if (ok && v > best_value_) {
      path_ = picks;
      record_leaf(v);
      std::fill(path_.begin(), path_.end(), nullptr);
    }
  }

  void record_leaf(double value) {
    best_value_ = value;
    best_.clear();
    best_idx_.assign(path_.size(), kNoPick);
    for (std::size_t d = 0; d < path_.size(); ++d) {
      if (!path_[d]) continue;
      best_.push_back({bidders_[d].id, path_[d]->ref});
      best_idx_[d] = static_cast<std::size_t>(path_[d] - bidders_[d].bids.data());
    }
  }

  /// Local improvement of the incumbent: for every bidder below its best
  /// bid, re-solve exactly the window made of it and the bidders holding
  /// the classes it wants most, all others fixed.
  void improve() {
    const std::size_t n = bidders_.size();
    if (!has_incumbent() || n <= kWindow) return;
    std::vector<const Candidate*> picks(n, nullptr);
    for (std::size_t d = 0; d < n; ++d)
      if (best_idx_[d] != kNoPick) picks[d] = &bidders_[d].bids[best_idx_[d]];
    auto held = [&](std::size_t t) { return picks[t] ? picks[t]->value : 0.0; };
    for (int pass = 0; pass < kPasses; ++pass) {
      bool better = false;
      for (std::size_t d = 0; d < n; ++d) {
        const auto& bids = bidders_[d].bids;
        if (bids.empty() || held(d) >= bids.front().value) continue;
        ItemMask want = 0;
        for (const auto& c : bids)
          if (c.value > held(d)) want |= c.demand->classes;
        std::vector<std::pair<int, std::size_t>> overlap;
        for (std::size_t t = 0; t < n; ++t)
          if (t != d && picks[t])
            if (const int o = popcount(picks[t]->demand->classes & want); o > 0) overlap.emplace_back(-o, t);
        std::sort(overlap.begin(), overlap.end());
        std::vector<std::size_t> window{d};
        for (std::size_t i = 0; i < overlap.size() && window.size() < kWindow; ++i) window.push_back(overlap[i].second);
        std::sort(window.begin(), window.end());

        std::vector<int> caps = caps_;
        double before = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
          if (std::binary_search(window.begin(), window.end(), t)) {
            before += held(t);
          } else if (picks[t]) {
            for (const auto& [c, k] : picks[t]->demand->parts) caps[c] -= k;
          }
        }
        std::vector<Bidder> sub;
        for (std::size_t t : window) sub.push_back(bidders_[t]);
        BranchAndBound local(std::move(sub), std::move(caps), opt_, deadline_);
        local.greedy(false);
        local.fit_prices();
        local.greedy(true);
        local.search(0, 0.0);
        nodes_ += local.nodes_;
        if (local.aborted_) {
          aborted_ = true;
          return;
        }
        if (!local.has_incumbent() || local.best_value_ <= before + kPruneTol) continue;
        for (std::size_t i = 0; i < window.size(); ++i) {
          const std::size_t idx = local.best_idx_[i];
          picks[window[i]] = idx == kNoPick ? nullptr : &bidders_[window[i]].bids[idx];
        }
        better = true;
      }
      if (!better) break;
    }
    double v = 0.0;
    for (std::size_t t = 0; t < n; ++t) v += held(t);
    if (v > best_value_) {
      path_ = picks;
      record_leaf(v);
      std::fill(path_.begin(), path_.end(), nullptr);
    }
  }

  bool out_of_time() {
    if (aborted_) return true;
    if ((++nodes_ & 0xFFF) == 0 && std::chrono::steady_clock::now() > deadline_) aborted_ = true;
    return aborted_;
  }

  // Improvements below kPruneTol are not worth a search.
  [[nodiscard]] bool cannot_improve(double cur, double bound) const {
    return cur + bound <= best_value_ + kPruneTol;
  }

  double search(std::size_t d, double cur) {
    if (out_of_time()) return 0.0;
    if (d == bidders_.size()) {
      if (cur > best_value_) record_leaf(cur);
      return 0.0;
    }
    const Key key = make_key(d);
    if (auto it = memo_.find(key); it != memo_.end()) {
      // A hit that would improve the incumbent is re-searched so the
      // improving path is recovered.
      if (cannot_improve(cur, it->second)) return it->second;
    }

    const double node_bound = std::min(rest_bound(d), price_bound(d));
    if (cannot_improve(cur, node_bound)) return node_bound;

    const double rest = rest_bound(d + 1);
    const double priced = price_bound(d + 1);
    double upper = kNegInf;
    const Bidder& b = bidders_[d];
    for (std::size_t idx : by_local_[d]) {
      const Candidate& c = b.bids[idx];
      if (!fits(c) || !canonical(d, c.demand->classes)) continue;
      const double via_price = local_value_[d][idx] + priced;
      if (cannot_improve(cur, via_price)) {
        // Sorted by priced value, so this bounds every later bid too.
        upper = std::max(upper, via_price);
        break;
      }
      if (cannot_improve(cur + c.value, rest)) {
        upper = std::max(upper, c.value + rest);
        continue;
      }
      take(*c.demand);
      path_[d] = &c;
      const double sub = search(d + 1, cur + c.value);
      path_[d] = nullptr;
      release(*c.demand);
      if (aborted_) return 0.0;
      upper = std::max(upper, c.value + sub);
    }
    if (!b.mandatory) {
      const double skip = std::min(rest, priced);
      if (cannot_improve(cur, skip)) {
        upper = std::max(upper, skip);
      } else {
        const double sub = search(d + 1, cur);
        if (aborted_) return 0.0;
        upper = std::max(upper, sub);
      }
    }
    if (memo_.size() < opt_.memo_limit || memo_.count(key) != 0) memo_[key] = upper;
    return upper;
  }

  std::vector<Bidder> bidders_;
  std::vector<int> caps_;
  WdpOptions opt_;
  std::chrono::steady_clock::time_point deadline_;

  std::vector<ItemMask> suffix_classes_;
  std::array<int, kMaxItems> counts_{};
  ItemMask full_ = 0;
  std::vector<const Candidate*> path_;
  std::vector<std::array<ItemMask, kMaxItems>> prefer_;

  std::array<double, kMaxItems> lambda_{};
  std::vector<std::vector<std::size_t>> by_reduced_;
  std::vector<std::vector<double>> reduced_value_;
  std::vector<std::vector<std::size_t>> by_local_;
  std::vector<std::vector<double>> local_value_;
  bool fitted_ = false;

  double best_value_ = kNegInf;
  std::vector<Choice> best_;
  std::vector<std::size_t> best_idx_;  // per depth, index into the bidder's bids
  std::unordered_map<Key, double, KeyHash> memo_;
  std::size_t nodes_ = 0;
  bool aborted_ = false;
};

/// The instance after filtering, symmetry reduction and dominance pruning.
struct Reduced {
  ItemClasses classes;
  std::vector<int> caps;
  std::vector<Demand> demands;                     // one per aggregated bid
  std::vector<std::size_t> rep_row;                // aggregated bid -> lowest row
  std::vector<BranchAndBound::Bidder> bidders;     // indexed by bidder id
  RowIndex index;
  // Unit quota only: per bidder, class -> bidder-local interchangeability
  // group, -1 when the bidder never uses the class.
  std::vector<std::vector<int>> local_group;
};

inline Reduced reduce(const WdpProblem& pb) {
  const BidMatrix& bm = *pb.bids;
  Reduced out;
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < bm.rows.size(); ++r) {
    if (!pb.eligible.empty() && !pb.eligible[r]) continue;
    const Bid& b = bm.rows[r];
    if (!pb.all_bidders_mandatory && b.value <= 0.0) continue;
    // Duplicate bundles of one bidder: only the best row can matter.
    auto [it, inserted] = out.index.try_emplace(RowKey{b.bidder, b.bundle}, r);
    if (!inserted) {
      if (bm.rows[it->second].value < b.value) it->second = r;
      continue;
    }
  }
  for (const auto& [k, r] : out.index) rows.push_back(r);
  std::sort(rows.begin(), rows.end());

  // Unit quotas are handled by preferences instead of aggregation.
  const std::size_t max_size =
      pb.item_quota == 1 ? 1 : std::min<std::size_t>(static_cast<std::size_t>(255 / pb.item_quota), kMaxItems);
  out.classes = find_item_classes(bm, rows, out.index, max_size);
  for (const auto& cls : out.classes.items) out.caps.push_back(static_cast<int>(cls.size()) * pb.item_quota);

  // One aggregated bid per (bidder, demand); rows are visited ascending so the
  // lowest row represents it.
  std::vector<std::vector<std::size_t>> per_bidder(bm.bidder_count);
  out.demands.reserve(rows.size());
  for (std::size_t r : rows) {
    const Bid& b = bm.rows[r];
    Demand dm = demand_of(b.bundle, out.classes);
    bool seen = false;
    for (std::size_t a : per_bidder[b.bidder]) {
      if (out.demands[a] == dm) {
        seen = true;
        break;
      }
    }
    if (seen) continue;
    per_bidder[b.bidder].push_back(out.demands.size());
    out.demands.push_back(std::move(dm));
    out.rep_row.push_back(r);
  }

  if (pb.item_quota == 1) {
    std::vector<std::vector<std::size_t>> rows_of(bm.bidder_count);
    for (std::size_t r : rows) rows_of[bm.rows[r].bidder].push_back(r);
    out.local_group.assign(bm.bidder_count, std::vector<int>(out.classes.items.size(), -1));
    for (std::size_t k = 0; k < bm.bidder_count; ++k) {
      const ItemClasses local = find_item_classes(bm, rows_of[k], out.index, kMaxItems);
      for (std::size_t j = 0; j < bm.item_count; ++j)
        if (local.class_of[j] >= 0) out.local_group[k][static_cast<std::size_t>(out.classes.class_of[j])] = local.class_of[j];
    }
  }

  out.bidders.resize(bm.bidder_count);
  for (std::size_t k = 0; k < bm.bidder_count; ++k) {
    auto& bd = out.bidders[k];
    bd.id = k;
    bd.mandatory = pb.all_bidders_mandatory;
    std::vector<std::size_t> ids = per_bidder[k];
    auto total = [&](std::size_t a) {
      int t = 0;
      for (const auto& p : out.demands[a].parts) t += p.second;
      return t;
    };
    // Highest value first; among equal values the smaller demand first.
    std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
      const double va = bm.rows[out.rep_row[a]].value;
      const double vb = bm.rows[out.rep_row[b]].value;
      if (va != vb) return va > vb;
      if (total(a) != total(b)) return total(a) < total(b);
      return out.rep_row[a] < out.rep_row[b];
    });
    for (std::size_t a : ids) {
      bool dominated = false;
      for (const auto& kept : bd.bids) {
        if (demand_le(*kept.demand, out.demands[a])) {
          dominated = true;
          break;
        }
      }
      if (!dominated) bd.bids.push_back({&out.demands[a], bm.rows[out.rep_row[a]].value, a});
    }
  }
  return out;
}

/// Groups bidders into independent components (connected through shared classes).
inline std::vector<std::vector<std::size_t>> components(const std::vector<BranchAndBound::Bidder>& bidders) {
  const std::size_t n = bidders.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::array<std::size_t, kMaxItems> first_user;
  first_user.fill(n);
  for (std::size_t k = 0; k < n; ++k) {
    ItemMask u = 0;
    for (const auto& c : bidders[k].bids) u |= c.demand->classes;
    for_each_bit(u, [&](std::size_t j) {
      if (first_user[j] == n) {
        first_user[j] = k;
      } else {
        parent[find(k)] = find(first_user[j]);
      }
    });
  }
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t r = find(k);
    if (slot[r] == n) {
      slot[r] = groups.size();
      groups.emplace_back();
    }
    groups[slot[r]].push_back(k);
  }
  return groups;
}

/// Preference table for a bidder order (unit quotas).
inline std::vector<std::array<ItemMask, kMaxItems>> preferences(const Reduced& red,
                                                                const std::vector<BranchAndBound::Bidder>& order) {
  const std::size_t nc = red.classes.items.size();
  std::vector<std::array<ItemMask, kMaxItems>> pref(order.size());
  for (std::size_t d = 0; d < order.size(); ++d) {
    pref[d].fill(0);
    const auto& mine = red.local_group[order[d].id];
    // b may stand in for a in every later bidder that can use b.
    auto covers = [&](std::size_t a, std::size_t b) {
      for (std::size_t t = d + 1; t < order.size(); ++t) {
        const auto& g = red.local_group[order[t].id];
        if (g[b] >= 0 && g[a] != g[b]) return false;
      }
      return true;
    };
    for (std::size_t a = 0; a < nc; ++a) {
      if (mine[a] < 0) continue;
      for (std::size_t b = 0; b < nc; ++b) {
        if (b == a || mine[b] != mine[a] || !covers(a, b)) continue;
        if (!covers(b, a) || b < a) pref[d][a] |= bit(b);
      }
    }
  }
  return pref;
}

/// Concrete rows for accepted aggregated bids. Each class hands out its
/// items cyclically, so no item is used more than `quota` times.
inline std::vector<std::size_t> concretize(const BidMatrix& bm, const Reduced& red,
                                           const std::vector<BranchAndBound::Choice>& choices) {
  std::vector<std::size_t> cursor(red.classes.items.size(), 0);
  std::vector<std::size_t> rows;
  for (const auto& ch : choices) {
    const Demand& dm = red.demands[ch.ref];
    ItemMask bundle = 0;
    for (const auto& [c, n] : dm.parts) {
      const auto& items = red.classes.items[c];
      for (int i = 0; i < n; ++i) {
        bundle |= bit(items[cursor[c] % items.size()]);
        ++cursor[c];
      }
    }
    auto it = red.index.find({ch.bidder, bundle});
    if (it == red.index.end() || bm.rows[it->second].value != bm.rows[red.rep_row[ch.ref]].value)
      throw std::logic_error("wdp: symmetric bundle missing");
    rows.push_back(it->second);
  }
  return rows;
}

}  // namespace detail

/// Exact winner determination by branch and bound.
inline WdpSolution solve_wdp(const WdpProblem& pb, const WdpOptions& opt = {}) {
  if (pb.bids == nullptr) throw std::invalid_argument("solve_wdp: no bids");
  const BidMatrix& bm = *pb.bids;
  bm.validate();
  if (pb.item_quota < 1 || pb.item_quota > 15) throw std::invalid_argument("solve_wdp: item quota must be in [1, 15]");
  if (!pb.eligible.empty() && pb.eligible.size() != bm.rows.size())
    throw std::invalid_argument("solve_wdp: eligibility mask size mismatch");

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(opt.time_budget_s));
  const detail::Reduced red = detail::reduce(pb);
  WdpSolution sol;
  for (const auto& b : red.bidders) {
    if (b.mandatory && b.bids.empty()) {
      sol.status = WdpStatus::Infeasible;
      sol.infeasible_bidder = b.id;
      return sol;
    }
  }

  bool timed_out = false;
  std::vector<detail::BranchAndBound::Choice> choices;
  for (const auto& group : detail::components(red.bidders)) {
    std::vector<std::size_t> ids = group;
    // Bidders with the most valuable bids first, then the most constrained.
    std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
      const auto& ba = red.bidders[a].bids;
      const auto& bb = red.bidders[b].bids;
      const double va = ba.empty() ? 0.0 : ba.front().value;
      const double vb = bb.empty() ? 0.0 : bb.front().value;
      if (va != vb) return va > vb;
      return ba.size() < bb.size();
    });
    std::vector<detail::BranchAndBound::Bidder> order;
    bool trivial = true;
    for (std::size_t id : ids) {
      if (!red.bidders[id].bids.empty() || red.bidders[id].mandatory) trivial = false;
      order.push_back(red.bidders[id]);
    }
    if (trivial) continue;
    auto prefer = red.local_group.empty() ? std::vector<std::array<ItemMask, kMaxItems>>{}
                                          : detail::preferences(red, order);
    detail::BranchAndBound bb(std::move(order), red.caps, opt, deadline);
    bb.set_preferences(std::move(prefer));
    const bool finished = bb.run();
    sol.nodes += bb.nodes();
    if (!bb.has_incumbent()) {
      if (finished) {
        sol.status = WdpStatus::Infeasible;
        sol.accepted.clear();
        sol.objective = 0.0;
        return sol;
      }
      timed_out = true;
      continue;
    }
    timed_out = timed_out || !finished;
    choices.insert(choices.end(), bb.incumbent().begin(), bb.incumbent().end());
  }
  sol.accepted = detail::concretize(bm, red, choices);
  sol.objective = canonical_objective(bm, sol.accepted);
  sol.status = timed_out ? WdpStatus::TimedOut : WdpStatus::Optimal;
  sol.proven_optimal = !timed_out;
  return sol;
}

/// Standard combinatorial auction: disjoint bundles, one per bidder.
inline WdpSolution solve_ca(const BidMatrix& bids, const WdpOptions& opt = {}) {
  WdpProblem pb{&bids, 1, false, {}};
  return solve_wdp(pb, opt);
}

/// Upper bound used at the root of the search (admissibility checks).
inline double root_upper_bound(const WdpProblem& pb) {
  const detail::Reduced red = detail::reduce(pb);
  detail::BranchAndBound bb(red.bidders, red.caps, WdpOptions{}, std::chrono::steady_clock::now());
  return bb.root_bound();
}

}  // namespace mcca
