#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mcca/bitmask.hpp"

namespace mcca {

struct Bid {
  ItemMask bundle = 0;
  double value = 0.0;
  std::size_t bidder = 0;
  friend bool operator==(const Bid&, const Bid&) = default;
};

/// Rows of (bundle, value, bidder). Items are channels for the standard
/// auction and base stations for the relaxed one.
struct BidMatrix {
  std::vector<Bid> rows;
  std::size_t item_count = 0;
  std::size_t bidder_count = 0;

  void validate() const {
    if (item_count > kMaxItems) throw std::invalid_argument("BidMatrix: more than 64 items");
    std::set<std::pair<ItemMask, std::size_t>> seen;
    for (const Bid& b : rows) {
      if (b.bundle == 0) throw std::invalid_argument("BidMatrix: empty bundle");
      if ((b.bundle & ~low_bits(item_count)) != 0) throw std::invalid_argument("BidMatrix: item out of range");
      if (!(b.value >= 0.0)) throw std::invalid_argument("BidMatrix: negative bid value");
      if (b.bidder >= bidder_count) throw std::invalid_argument("BidMatrix: bidder index out of range");
      if (!seen.emplace(b.bundle, b.bidder).second) throw std::invalid_argument("BidMatrix: duplicate (bundle, bidder)");
    }
  }

  [[nodiscard]] std::vector<std::size_t> bids_per_bidder() const {
    std::vector<std::size_t> n(bidder_count, 0);
    for (const Bid& b : rows) ++n[b.bidder];
    return n;
  }
};

/// Writes one line per bid: item_count 0/1 columns, value, bidder index
/// (zero-based). Values use 17 significant digits so they round-trip.
inline void write_bid_matrix(std::ostream& os, const BidMatrix& bm) {
  char buf[64];
  for (const Bid& b : bm.rows) {
    for (std::size_t j = 0; j < bm.item_count; ++j) os << (contains(b.bundle, j) ? '1' : '0') << ',';
    std::snprintf(buf, sizeof buf, "%.17g", b.value);
    os << buf << ',' << b.bidder << '\n';
  }
}

/// Inverse of write_bid_matrix. item_count is inferred from the column
/// count; bidder_count is max bidder index + 1 unless given.
inline BidMatrix read_bid_matrix(std::istream& is, std::size_t bidder_count = 0) {
  BidMatrix bm;
  std::string line;
  bool first = true;
  std::size_t max_bidder = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() < 3) throw std::runtime_error("read_bid_matrix: too few columns");
    const std::size_t items = cols.size() - 2;
    if (first) {
      bm.item_count = items;
      first = false;
    } else if (items != bm.item_count) {
      throw std::runtime_error("read_bid_matrix: ragged rows");
    }
    Bid b;
    for (std::size_t j = 0; j < items; ++j) {
      if (cols[j] == "1") {
        b.bundle |= bit(j);
      } else if (cols[j] != "0") {
        throw std::runtime_error("read_bid_matrix: bundle columns must be 0 or 1");
      }
    }
    b.value = std::stod(cols[items]);
    b.bidder = static_cast<std::size_t>(std::stoull(cols[items + 1]));
    max_bidder = std::max(max_bidder, b.bidder);
    bm.rows.push_back(b);
  }
  bm.bidder_count = bidder_count != 0 ? bidder_count : (bm.rows.empty() ? 0 : max_bidder + 1);
  bm.validate();
  return bm;
}

}  // namespace mcca
