#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <set>

#include "test_support.hpp"

using namespace mcca;

namespace {

const LinkModel kLink{};

Preallocation run(Method m, const Scenario& s, std::uint64_t seed, int max_channels = 8) {
  ConnectivityEvaluator eval(s, kLink);
  const Rng streams(seed);
  switch (m) {
    case Method::R: return random_prealloc(s, max_channels, streams);
    case Method::DB: return distance_based(s, max_channels, streams);
    case Method::SCVB: return scvb(eval, max_channels, streams);
    case Method::DBSR: return dbsr(s, kLink, max_channels, streams);
    case Method::SCVBSR: return scvbsr(eval, max_channels, streams);
    default: throw std::logic_error("not a simple method");
  }
}

constexpr Method kSimple[] = {Method::R, Method::DB, Method::SCVB, Method::DBSR, Method::SCVBSR};

ItemMask contributing_bs(const Scenario& s, ItemMask row) {
  ItemMask bs = 0;
  for_each_bit(row, [&](std::size_t j) { bs |= bit(static_cast<std::size_t>(s.owner(j))); });
  return bs;
}

double chi_square_critical(int df, double alpha) {
  return boost::math::quantile(boost::math::complement(boost::math::chi_squared(df), alpha));
}

}  // namespace

TEST(Prealloc, RandomTakesExactlyEightOfFifteen) {
  const Scenario s = test::make_scenario({{10, 10}, {20, 20}, {30, 30}}, {{0, 0}, {100, 0}, {0, 50}, {100, 50}, {50, 0}},
                                         {3, 3, 3, 3, 3});
  ASSERT_EQ(s.n_channels(), 15u);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = run(Method::R, s, seed);
    for (std::size_t k = 0; k < s.n_tenants(); ++k) EXPECT_EQ(p.assign.row_sum(k), 8);
  }
}

TEST(Prealloc, EightChannelsGiveAllOnes) {
  const Scenario s = test::make_scenario({{10, 10}, {70, 20}}, {{0, 0}, {100, 0}, {0, 50}}, {3, 3, 2});
  for (Method m : kSimple) {
    const auto p = run(m, s, 1);
    for (std::size_t k = 0; k < s.n_tenants(); ++k) EXPECT_EQ(p.assign.row(k), s.all_channels()) << to_string(m);
  }
}

TEST(Prealloc, FewerChannelsThanBudgetGiveEverything) {
  const Scenario s = test::make_scenario({{10, 10}}, {{0, 0}, {100, 0}}, {2, 1});
  for (Method m : kSimple) EXPECT_EQ(run(m, s, 3).assign.row(0), s.all_channels()) << to_string(m);
}

TEST(Prealloc, DeterministicGivenSeed) {
  const Scenario s = generate_scenario(SetupClass::MS, 17);
  for (Method m : kSimple) {
    EXPECT_EQ(run(m, s, 5).assign, run(m, s, 5).assign) << to_string(m);
    EXPECT_EQ(run(m, s, 5).method, m);
  }
}

TEST(Prealloc, RowBudgetHoldsEverywhere) {
  for (SetupClass c : {SetupClass::SS, SetupClass::MS, SetupClass::LS})
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Scenario s = generate_scenario(c, seed);
      for (Method m : kSimple) {
        const auto p = run(m, s, seed);
        for (std::size_t k = 0; k < s.n_tenants(); ++k) {
          EXPECT_LE(p.assign.row_sum(k), 8);
          if (m == Method::R || m == Method::DBSR || m == Method::SCVBSR)
            EXPECT_EQ(p.assign.row_sum(k), std::min<int>(8, static_cast<int>(s.n_channels())));
        }
      }
    }
}

TEST(Prealloc, DistanceBasedTakesWholeBsThenPartial) {
  // BS distances 5, 10, 20 and 56 with 3, 3, 5 and 2 channels.
  const Scenario s = test::make_scenario({{50, 25}}, {{50, 20}, {50, 15}, {50, 5}, {0, 0}}, {3, 3, 5, 2});
  std::vector<int> hits(s.n_channels(), 0);
  const int runs = 2000;
  for (int seed = 0; seed < runs; ++seed) {
    const ItemMask row = run(Method::DB, s, static_cast<std::uint64_t>(seed)).assign.row(0);
    EXPECT_EQ(row & 0b111'111, 0b111'111u);
    EXPECT_EQ(popcount(row & s.channels_of_bs(2)), 2);
    EXPECT_EQ(row & s.channels_of_bs(3), 0u);
    for_each_bit(row, [&](std::size_t j) { ++hits[j]; });
  }
  for (std::size_t j = 6; j < 11; ++j) EXPECT_NEAR(hits[j] / double(runs), 0.4, 0.05);
}

TEST(Prealloc, DistanceTiesUseBothOrders) {
  const Scenario s = test::make_scenario({{50, 25}}, {{40, 25}, {60, 25}}, {5, 5});
  int first = 0;
  const int runs = 400;
  for (int seed = 0; seed < runs; ++seed) {
    const ItemMask row = run(Method::DB, s, static_cast<std::uint64_t>(seed), 5).assign.row(0);
    ASSERT_TRUE(row == s.channels_of_bs(0) || row == s.channels_of_bs(1));
    first += row == s.channels_of_bs(0) ? 1 : 0;
  }
  EXPECT_GT(first, runs / 4);
  EXPECT_LT(first, 3 * runs / 4);
}

TEST(Prealloc, ScvbMatchesDistanceWithoutObstacles) {
  ScenarioConfig cfg;
  cfg.obstacle_fraction = 0.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Scenario s = generate_scenario(SetupClass::MS, seed, cfg);
    const auto db = run(Method::DB, s, seed);
    const auto sc = run(Method::SCVB, s, seed);
    for (std::size_t k = 0; k < s.n_tenants(); ++k) {
      bool clamped = false;
      for (std::size_t i = 0; i < s.n_bs(); ++i) clamped |= distance(s, k, i) <= kLink.min_distance_m;
      if (clamped) continue;
      EXPECT_EQ(contributing_bs(s, db.assign.row(k)), contributing_bs(s, sc.assign.row(k)));
    }
  }
}

TEST(Prealloc, ScvbPrefersClearFartherBs) {
  // BS0 at 10 m behind an obstacle (K at 20%), BS1 clear at 20 m.
  Scenario s = test::make_scenario({{10, 25}}, {{0, 25}, {10, 45}, {100, 0}}, {2, 2, 2});
  s.fading_db[0] = 0.2 * kReferenceK_dB;
  ConnectivityEvaluator eval(s, kLink);
  ASSERT_GT(eval.bs_scv(0, 1), eval.bs_scv(0, 0));
  EXPECT_EQ(run(Method::SCVB, s, 1, 2).assign.row(0), s.channels_of_bs(1));
  EXPECT_EQ(run(Method::DB, s, 1, 2).assign.row(0), s.channels_of_bs(0));
}

TEST(Prealloc, OrderedMethodsTakeAPrefixOfBss) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Scenario s = generate_scenario(SetupClass::LS, seed);
    ConnectivityEvaluator eval(s, kLink);
    for (Method m : {Method::DB, Method::SCVB}) {
      const auto p = run(m, s, seed);
      for (std::size_t k = 0; k < s.n_tenants(); ++k) {
        const auto key = [&](std::size_t i) { return m == Method::DB ? distance(s, k, i) : -eval.bs_scv(k, i); };
        const ItemMask row = p.assign.row(k);
        double worst_in = -std::numeric_limits<double>::infinity();
        double best_out = std::numeric_limits<double>::infinity();
        int partial = 0;
        for (std::size_t i = 0; i < s.n_bs(); ++i) {
          const ItemMask chans = s.channels_of_bs(i);
          if ((row & chans) == 0) {
            best_out = std::min(best_out, key(i));
          } else {
            worst_in = std::max(worst_in, key(i));
            if ((row & chans) != chans) ++partial;
          }
        }
        EXPECT_LE(worst_in, best_out) << to_string(m);
        EXPECT_LE(partial, 1);
      }
    }
  }
}

TEST(Prealloc, DbsrUniformWhenEquidistant) {
  const Scenario s = test::make_scenario({{50, 25}}, {{0, 25}, {100, 25}, {50, -25}, {50, 75}}, {2, 2, 2, 2});
  std::vector<int> counts(s.n_channels(), 0);
  const int runs = 10000;
  for (int seed = 0; seed < runs; ++seed) {
    const ItemMask row = run(Method::DBSR, s, static_cast<std::uint64_t>(seed), 1).assign.row(0);
    ASSERT_EQ(popcount(row), 1);
    ++counts[static_cast<std::size_t>(std::countr_zero(row))];
  }
  const double expected = runs / 8.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, chi_square_critical(7, 0.001));
}

TEST(Prealloc, DbsrInverseDistanceWeights) {
  const Scenario s = test::make_scenario({{50, 25}}, {{50, 15}, {50, 65}}, {1, 1});
  int near = 0;
  const int runs = 10000;
  for (int seed = 0; seed < runs; ++seed)
    near += run(Method::DBSR, s, static_cast<std::uint64_t>(seed), 1).assign.row(0) == 1u ? 1 : 0;
  EXPECT_NEAR(near / double(runs), 0.8, 4 * std::sqrt(0.8 * 0.2 / runs));
}

TEST(Prealloc, ScvbsrUniformForEqualScv) {
  const Scenario s = test::make_scenario({{50, 25}}, {{0, 25}, {100, 25}, {50, -25}}, {1, 2, 3});
  std::vector<int> counts(s.n_channels(), 0);
  const int runs = 6000;
  for (int seed = 0; seed < runs; ++seed)
    ++counts[static_cast<std::size_t>(std::countr_zero(run(Method::SCVBSR, s, static_cast<std::uint64_t>(seed), 1).assign.row(0)))];
  const double expected = runs / 6.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, chi_square_critical(5, 0.001));
}

TEST(Prealloc, WeightedDrawIsProportional) {
  int second = 0;
  const int runs = 30000;
  Rng rng(77);
  for (int i = 0; i < runs; ++i) second += detail::sequential_weighted_draw({1.0, 2.0}, 1, rng) == 2u ? 1 : 0;
  EXPECT_NEAR(second / double(runs), 2.0 / 3.0, 4 * std::sqrt((2.0 / 9.0) / runs));
}

TEST(Prealloc, ZeroWeightsDrawnOnlyWhenNothingElseRemains) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(detail::sequential_weighted_draw({0.0, 1.0, 3.0}, 2, rng), 0b110u);
    EXPECT_EQ(detail::sequential_weighted_draw({0.0, 1.0, 3.0}, 3, rng), 0b111u);
  }
}
