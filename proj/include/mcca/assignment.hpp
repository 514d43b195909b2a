#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mcca/bitmask.hpp"

namespace mcca {

/// Binary tenant x channel matrix, one channel mask per tenant row.
/// Used both for (non-univalent) preallocations and final allocations.
class AssignmentMatrix {
 public:
  AssignmentMatrix() = default;
  AssignmentMatrix(std::size_t n_tenants, std::size_t n_channels) : rows_(n_tenants, 0), n_channels_(n_channels) {
    if (n_channels > kMaxItems) throw std::invalid_argument("AssignmentMatrix: more than 64 channels");
  }

  [[nodiscard]] std::size_t n_tenants() const noexcept { return rows_.size(); }
  [[nodiscard]] std::size_t n_channels() const noexcept { return n_channels_; }

  [[nodiscard]] ItemMask row(std::size_t k) const { return rows_.at(k); }
  void set_row(std::size_t k, ItemMask m) {
    if ((m & ~low_bits(n_channels_)) != 0) throw std::out_of_range("AssignmentMatrix: channel index out of range");
    rows_.at(k) = m;
  }
  void set(std::size_t k, std::size_t j, bool value = true) {
    if (j >= n_channels_) throw std::out_of_range("AssignmentMatrix: channel index out of range");
    if (value) {
      rows_.at(k) |= bit(j);
    } else {
      rows_.at(k) &= ~bit(j);
    }
  }
  [[nodiscard]] bool get(std::size_t k, std::size_t j) const { return contains(rows_.at(k), j); }

  [[nodiscard]] int row_sum(std::size_t k) const { return popcount(rows_.at(k)); }

  [[nodiscard]] int column_sum(std::size_t j) const {
    int c = 0;
    for (ItemMask r : rows_) c += contains(r, j) ? 1 : 0;
    return c;
  }

  [[nodiscard]] std::vector<int> column_sums() const {
    std::vector<int> c(n_channels_, 0);
    for (ItemMask r : rows_) for_each_bit(r, [&](std::size_t j) { ++c[j]; });
    return c;
  }

  /// Every channel assigned to at most one tenant.
  [[nodiscard]] bool is_univalent() const {
    ItemMask seen = 0;
    for (ItemMask r : rows_) {
      if ((seen & r) != 0) return false;
      seen |= r;
    }
    return true;
  }

  [[nodiscard]] const std::vector<ItemMask>& rows() const noexcept { return rows_; }

  friend bool operator==(const AssignmentMatrix&, const AssignmentMatrix&) = default;

 private:
  std::vector<ItemMask> rows_;
  std::size_t n_channels_ = 0;
};

enum class Method { R, DB, SCVB, DBSR, SCVBSR, M2MGS, RCA };

inline constexpr Method kAllMethods[] = {Method::R,      Method::DB,    Method::SCVB, Method::DBSR,
                                         Method::SCVBSR, Method::M2MGS, Method::RCA};

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::R: return "R";
    case Method::DB: return "DB";
    case Method::SCVB: return "SCVB";
    case Method::DBSR: return "DBSR";
    case Method::SCVBSR: return "SCVBSR";
    case Method::M2MGS: return "M2MGS";
    case Method::RCA: return "RCA";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (Method m : kAllMethods)
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown method: " + std::string(s));
}

/// Non-exclusive tenant -> channels assignment produced by one method.
struct Preallocation {
  AssignmentMatrix assign;
  Method method = Method::R;
};

/// Default per-tenant preallocation budget (at most 2^8 - 1 bids).
inline constexpr int kDefaultMaxChannels = 8;

}  // namespace mcca
