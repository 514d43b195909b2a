#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace mcca {

/// Set of up to 64 items (channels or base stations), bit j = item j.
using ItemMask = std::uint64_t;

inline constexpr std::size_t kMaxItems = 64;

constexpr ItemMask bit(std::size_t j) noexcept { return ItemMask{1} << j; }

constexpr ItemMask low_bits(std::size_t n) noexcept {
  return n >= kMaxItems ? ~ItemMask{0} : (ItemMask{1} << n) - 1;
}

constexpr int popcount(ItemMask m) noexcept { return std::popcount(m); }

constexpr bool contains(ItemMask m, std::size_t j) noexcept { return (m >> j) & 1U; }

constexpr bool is_subset(ItemMask a, ItemMask b) noexcept { return (a & ~b) == 0; }

/// Calls f(j) for every set bit j in ascending order.
template <typename F>
constexpr void for_each_bit(ItemMask m, F&& f) {
  while (m != 0) {
    f(static_cast<std::size_t>(std::countr_zero(m)));
    m &= m - 1;
  }
}

inline std::vector<std::size_t> to_indices(ItemMask m) {
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(popcount(m)));
  for_each_bit(m, [&](std::size_t j) { out.push_back(j); });
  return out;
}

inline ItemMask from_indices(const std::vector<std::size_t>& idx) {
  ItemMask m = 0;
  for (std::size_t j : idx) m |= bit(j);
  return m;
}

/// Calls f(sub) for every non-empty subset of m (descending submask order).
template <typename F>
void for_each_nonempty_subset(ItemMask m, F&& f) {
  for (ItemMask sub = m; sub != 0; sub = (sub - 1) & m) f(sub);
}

}  // namespace mcca
