#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace mcca;

namespace {

const LinkModel kLink{};

std::vector<MethodSpec> all_methods(int max_channels = 8) {
  std::vector<MethodSpec> out;
  for (Method m : {Method::R, Method::DB, Method::SCVB, Method::DBSR, Method::SCVBSR}) {
    MethodSpec spec = make_simple(m);
    spec.max_channels = max_channels;
    out.push_back(spec);
  }
  MethodSpec mg = make_m2mgs(std::min(3, max_channels), 2);
  mg.max_channels = max_channels;
  out.push_back(mg);
  MethodSpec rca = make_rca(3, 2);
  rca.max_channels = rca.rca.max_channels = std::max(2, max_channels);
  out.push_back(rca);
  return out;
}

}  // namespace

TEST(Pipeline, SingleTenantGetsEverything) {
  const Scenario s = test::make_scenario({{50, 25}}, {{40, 0}, {60, 50}}, {2, 1});
  const double expected = utility(connectivity(s, kLink, 0, s.all_channels()), s.utility_bounds[0]);
  for (const MethodSpec& m : all_methods()) {
    const AllocationResult r = allocate(s, kLink, m, 7);
    EXPECT_EQ(r.final_assign.row(0), s.all_channels()) << m.label();
    EXPECT_EQ(r.total_utility(), expected) << m.label();
  }
}

TEST(Pipeline, MatchesExhaustiveSearchWithinPreallocation) {
  Rng rng(2025);
  int checked = 0;
  for (int it = 0; it < 60; ++it) {
    const Scenario s = test::tiny_scenario(rng, 3, 6);
    for (const MethodSpec& m : all_methods(1 + static_cast<int>(rng.below(4)))) {
      const AllocationResult r = allocate(s, kLink, m, static_cast<std::uint64_t>(it));
      if (r.status == RunStatus::RcaInfeasible) continue;
      ASSERT_TRUE(r.solver_optimal);
      EXPECT_EQ(test::sorted_sum(r.per_tenant_utility), test::brute_force_assignment(s, kLink, r.prealloc_used.assign))
          << m.label() << " instance " << it;
      ++checked;
    }
  }
  EXPECT_GT(checked, 300);
}

TEST(Pipeline, UnrestrictedOptimumWhenPreallocationIsFull) {
  Rng rng(77);
  for (int it = 0; it < 40; ++it) {
    const Scenario s = test::tiny_scenario(rng, 4, 7);
    const AllocationResult r = allocate(s, kLink, make_simple(Method::R), static_cast<std::uint64_t>(it));
    AssignmentMatrix full(s.n_tenants(), s.n_channels());
    for (std::size_t k = 0; k < s.n_tenants(); ++k) full.set_row(k, s.all_channels());
    ASSERT_EQ(r.prealloc_used.assign, full);
    EXPECT_EQ(test::sorted_sum(r.per_tenant_utility), test::brute_force_assignment(s, kLink, full));
  }
}

TEST(Pipeline, StarvedTenantAndMetrics) {
  const Scenario s = test::make_scenario({{10, 10}, {20, 10}, {30, 10}}, {{20, 0}}, {2});
  const MethodSpec m = make_m2mgs(1, 1);
  const AllocationResult r = allocate(s, kLink, m, 3);
  const Metrics met = compute_metrics(r, m.tenant_quota());
  EXPECT_EQ(met.n_starved_tenants, 1);
  EXPECT_EQ(met.n_unpreallocated_channels, 0);
  EXPECT_EQ(met.n_free_tenant_slots, 1);
  EXPECT_EQ(met.total_utility, r.total_utility());
  EXPECT_EQ(verify_allocation(s, kLink, r), "");
}

TEST(Pipeline, MetricsCountUnpreallocatedChannels) {
  AllocationResult r;
  r.prealloc_used.assign = AssignmentMatrix(2, 4);
  r.prealloc_used.assign.set_row(0, 0b0011);
  r.per_tenant_utility = {0.25, 0.0};
  const Metrics met = compute_metrics(r, 8);
  EXPECT_EQ(met.n_unpreallocated_channels, 2);
  EXPECT_EQ(met.n_free_tenant_slots, 6 + 8);
  EXPECT_EQ(met.n_starved_tenants, 1);
  EXPECT_EQ(met.total_utility, 0.25);
}

TEST(Pipeline, RcaInfeasibleIsReportedNotThrown) {
  const Scenario s = test::make_scenario({{10, 10}, {20, 10}, {30, 10}}, {{20, 0}}, {2});
  const AllocationResult r = allocate(s, kLink, make_rca(2, 3), 1);
  EXPECT_EQ(r.status, RunStatus::RcaInfeasible);
  ASSERT_TRUE(r.infeasible_tenant.has_value());
  EXPECT_EQ(r.total_utility(), 0.0);
  for (std::size_t k = 0; k < s.n_tenants(); ++k) EXPECT_EQ(r.final_assign.row(k), 0u);
}

TEST(Pipeline, VerifierAcceptsGeneratedRunsAndCatchesTampering) {
  for (SetupClass c : {SetupClass::SS, SetupClass::MS})
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const Scenario s = generate_scenario(c, seed);
      for (const MethodSpec& m : all_methods()) {
        AllocationResult r = allocate(s, kLink, m, seed);
        if (r.status == RunStatus::RcaInfeasible) continue;
        EXPECT_EQ(verify_allocation(s, kLink, r), "") << m.label();
        for (std::size_t n : r.bids_per_tenant) EXPECT_LE(n, 255u);
        r.per_tenant_utility[0] += 1e-12;
        EXPECT_EQ(verify_allocation(s, kLink, r), "utility mismatch");
      }
    }
  const Scenario s = generate_scenario(SetupClass::SS, 1);
  AllocationResult r = allocate(s, kLink, make_simple(Method::DB), 1);
  r.final_assign.set_row(0, r.final_assign.row(0) | (~r.prealloc_used.assign.row(0) & s.all_channels()));
  EXPECT_NE(verify_allocation(s, kLink, r), "");
}

TEST(Pipeline, DeterministicGivenSeed) {
  const Scenario s = generate_scenario(SetupClass::MS, 5);
  for (const MethodSpec& m : all_methods()) {
    const AllocationResult a = allocate(s, kLink, m, 11);
    const AllocationResult b = allocate(s, kLink, m, 11);
    EXPECT_EQ(a.final_assign, b.final_assign) << m.label();
    EXPECT_EQ(a.per_tenant_utility, b.per_tenant_utility) << m.label();
  }
}

TEST(Pipeline, PruningDoesNotChangeTheOptimum) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Scenario s = generate_scenario(SetupClass::SS, seed);
    AllocateOptions pruned;
    pruned.prune_dominated = true;
    const MethodSpec m = make_m2mgs(8, 3);
    EXPECT_EQ(allocate(s, kLink, m, seed).total_utility(), allocate(s, kLink, m, seed, pruned).total_utility());
  }
}

TEST(Pipeline, FrozenSmallSetupResults) {
  const Scenario s = generate_scenario(SetupClass::SS, 42);
  struct Case {
    MethodSpec spec;
    double total;
    ItemMask row1;
  };
  const Case cases[] = {{make_simple(Method::R), 4.8238000202774654, 0x18},
                        {make_simple(Method::SCVB), 4.8205060986352404, 0xc010},
                        {make_m2mgs(8, 3), 5.2774594123656815, 0x8088},
                        {make_rca(3, 3), 5.2962158519712652, 0x70}};
  for (const Case& c : cases) {
    const AllocationResult r = allocate(s, kLink, c.spec, 42);
    EXPECT_DOUBLE_EQ(r.total_utility(), c.total) << c.spec.label();
    EXPECT_EQ(r.final_assign.row(1), c.row1) << c.spec.label();
  }
}

TEST(Pipeline, RejectsInvalidSpecs) {
  const Scenario s = generate_scenario(SetupClass::SS, 1);
  EXPECT_THROW(allocate(s, kLink, make_m2mgs(9, 2), 1), std::invalid_argument);
  MethodSpec m = make_simple(Method::R);
  m.max_channels = 0;
  EXPECT_THROW(allocate(s, kLink, m, 1), std::invalid_argument);
  EXPECT_THROW(parse_method("XYZ"), std::invalid_argument);
}
