#include <gtest/gtest.h>

#include <numeric>

#include "test_support.hpp"

using namespace mcca;

namespace {

PreferenceProfile random_profile(Rng& rng, std::size_t nt, std::size_t nc) {
  PreferenceProfile p;
  std::vector<std::size_t> chans(nc), tenants(nt);
  std::iota(chans.begin(), chans.end(), std::size_t{0});
  std::iota(tenants.begin(), tenants.end(), std::size_t{0});
  for (std::size_t k = 0; k < nt; ++k) {
    rng.shuffle(chans);
    p.tenant_prefs.push_back(chans);
  }
  for (std::size_t j = 0; j < nc; ++j) {
    rng.shuffle(tenants);
    p.channel_prefs.push_back(tenants);
  }
  return p;
}

// Three channels, two tenants, every channel ranks tenant 0 first.
PreferenceProfile three_channel_profile() {
  PreferenceProfile p;
  p.tenant_prefs = {{0, 1, 2}, {0, 1, 2}};
  p.channel_prefs = {{0, 1}, {0, 1}, {0, 1}};
  return p;
}

}  // namespace

TEST(Preferences, PermutationsConsistentWithScv) {
  const LinkModel m;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scenario s = generate_scenario(SetupClass::MS, seed);
    ConnectivityEvaluator eval(s, m);
    const PreferenceProfile p = build_preferences(eval, Rng(seed));
    EXPECT_NO_THROW(detail::check_profile(p));
    for (std::size_t k = 0; k < s.n_tenants(); ++k)
      for (std::size_t a = 0; a + 1 < s.n_channels(); ++a)
        EXPECT_GE(eval.scv(k, p.tenant_prefs[k][a]), eval.scv(k, p.tenant_prefs[k][a + 1]));
    for (std::size_t j = 0; j < s.n_channels(); ++j)
      for (std::size_t a = 0; a + 1 < s.n_tenants(); ++a)
        EXPECT_GE(eval.scv(p.channel_prefs[j][a], j), eval.scv(p.channel_prefs[j][a + 1], j));
  }
}

TEST(Preferences, EqualScvTiesBrokenBothWays) {
  const LinkModel m;
  const Scenario s = test::make_scenario({{30, 20}}, {{0, 0}}, {2});
  ConnectivityEvaluator eval(s, m);
  int first = 0;
  const int runs = 1000;
  for (int seed = 0; seed < runs; ++seed)
    first += build_preferences(eval, Rng(static_cast<std::uint64_t>(seed))).tenant_prefs[0][0] == 0 ? 1 : 0;
  EXPECT_GE(first, 400);
  EXPECT_LE(first, 600);
}

TEST(Matching, SinglePair) {
  PreferenceProfile p;
  p.tenant_prefs = {{0}};
  p.channel_prefs = {{0}};
  const auto out = m2m_gale_shapley(p, {1, 1});
  EXPECT_TRUE(out.assign.get(0, 0));
  EXPECT_EQ(out.method, Method::M2MGS);
}

TEST(Matching, ThreeChannelsTwoTenantsLeavesOneUnmatched) {
  const PreferenceProfile p = three_channel_profile();
  const Quotas q{1, 1};
  const auto out = m2m_gale_shapley(p, q);
  int unmatched = 0;
  for (int c : out.assign.column_sums()) unmatched += c == 0 ? 1 : 0;
  EXPECT_EQ(unmatched, 1);
  EXPECT_TRUE(out.assign.get(0, 0));
  EXPECT_TRUE(out.assign.get(1, 1));

  // Brute force over all 2^6 matchings: the stable ones are exactly the output.
  int stable = 0;
  for (unsigned bits = 0; bits < 64; ++bits) {
    AssignmentMatrix a(2, 3);
    for (std::size_t e = 0; e < 6; ++e)
      if (bits >> e & 1U) a.set(e / 3, e % 3);
    const auto rep = verify_pairwise_stability(p, q, a);
    if (!rep.error.empty() || !rep.stable) continue;
    ++stable;
    EXPECT_EQ(a, out.assign);
  }
  EXPECT_EQ(stable, 1);
}

TEST(Matching, HandBuiltUnstableMatchingReported) {
  const PreferenceProfile p = three_channel_profile();
  AssignmentMatrix a(2, 3);
  a.set(0, 1);
  a.set(1, 0);
  const auto rep = verify_pairwise_stability(p, {1, 1}, a);
  EXPECT_FALSE(rep.stable);
  ASSERT_EQ(rep.violations.size(), 1u);
  EXPECT_EQ(rep.violations[0], (BlockingPair{0, 0}));
}

TEST(Matching, EmptyMatchingIsUnstable) {
  Rng rng(1);
  const PreferenceProfile p = random_profile(rng, 3, 4);
  const auto rep = verify_pairwise_stability(p, {2, 2}, AssignmentMatrix(3, 4));
  EXPECT_FALSE(rep.stable);
  EXPECT_EQ(rep.violations.size(), 12u);
}

TEST(Matching, QuotaViolationReported) {
  const PreferenceProfile p = three_channel_profile();
  AssignmentMatrix a(2, 3);
  a.set(0, 0);
  a.set(0, 1);
  EXPECT_FALSE(verify_pairwise_stability(p, {1, 1}, a).error.empty());
}

TEST(Matching, RandomProfilesStableAndOrderIndependent) {
  Rng rng(2718);
  for (int it = 0; it < 300; ++it) {
    const std::size_t nt = 1 + rng.below(8);
    const std::size_t nc = 1 + rng.below(20);
    const PreferenceProfile p = random_profile(rng, nt, nc);
    const Quotas q{1 + static_cast<int>(rng.below(8)), 1 + static_cast<int>(rng.below(5))};
    MatchingStats stats;
    const auto fifo = m2m_gale_shapley(p, q, ProposalOrder::Fifo, &stats);
    const auto lifo = m2m_gale_shapley(p, q, ProposalOrder::Lifo);
    const auto rep = verify_pairwise_stability(p, q, fifo.assign);
    EXPECT_TRUE(rep.stable) << rep.error;
    EXPECT_EQ(fifo.assign, lifo.assign);
    EXPECT_LE(stats.proposals, nt * nc);
    for (std::size_t k = 0; k < nt; ++k) EXPECT_LE(fifo.assign.row_sum(k), q.q_tenant);
    for (int c : fifo.assign.column_sums()) EXPECT_LE(c, q.q_channel);
  }
}

TEST(Matching, ScenarioProfilesStable) {
  const LinkModel m;
  for (SetupClass c : {SetupClass::SS, SetupClass::MS, SetupClass::LS})
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const Scenario s = generate_scenario(c, seed);
      ConnectivityEvaluator eval(s, m);
      const PreferenceProfile p = build_preferences(eval, Rng(seed));
      for (int qt : {2, 4, 8})
        for (int qc : {2, 4, 8}) {
          const auto out = m2m_gale_shapley(p, {qt, qc});
          EXPECT_TRUE(verify_pairwise_stability(p, {qt, qc}, out.assign).stable);
        }
    }
}

TEST(Matching, AmpleTenantSlotsLeaveNoChannelUnmatched) {
  const LinkModel m;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scenario s = generate_scenario(SetupClass::SS, seed);
    ConnectivityEvaluator eval(s, m);
    const auto out = m2m_gale_shapley(build_preferences(eval, Rng(seed)), {8, 2});
    ASSERT_GE(s.n_tenants() * 8, s.n_channels() * 2);
    for (int col : out.assign.column_sums()) EXPECT_EQ(col, 2);
  }
}

TEST(Matching, RejectsBadInput) {
  PreferenceProfile p;
  p.tenant_prefs = {{0, 0}};
  p.channel_prefs = {{0}, {0}};
  EXPECT_THROW(m2m_gale_shapley(p, {1, 1}), std::invalid_argument);
  EXPECT_THROW(Quotas({9, 2}).validate(), std::invalid_argument);
  EXPECT_THROW(Quotas({2, 0}).validate(), std::invalid_argument);
}
