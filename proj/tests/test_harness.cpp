#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_support.hpp"

using namespace mcca;
namespace fs = std::filesystem;

namespace {

// O(n^2) type-7 quantile: rank h = (n - 1) p between order statistics.
double naive_quantile(const std::vector<double>& xs, double p) {
  const double h = (static_cast<double>(xs.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  auto order_stat = [&](std::size_t r) {
    for (double x : xs) {
      std::size_t below = 0, equal = 0;
      for (double y : xs) {
        below += y < x ? 1 : 0;
        equal += y == x ? 1 : 0;
      }
      if (below <= r && r < below + equal) return x;
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  return order_stat(lo) + (h - static_cast<double>(lo)) * (order_stat(hi) - order_stat(lo));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("mcca_test_" + name);
  fs::remove_all(d);
  return d;
}

ExperimentSpec small_spec(int runs) {
  ExperimentSpec spec;
  spec.setup = SetupClass::SS;
  spec.n_runs = runs;
  spec.base_seed = 100;
  spec.threads = 1;
  return spec;
}

}  // namespace

TEST(Stats, OneToFive) {
  const SummaryStats s = summarize({5, 3, 1, 4, 2});
  EXPECT_EQ(s.n, 5u);
  EXPECT_EQ(s.mean, 3.0);
  EXPECT_EQ(s.median, 3.0);
  EXPECT_EQ(s.q25, 2.0);
  EXPECT_EQ(s.q75, 4.0);
  EXPECT_EQ(s.whisker_lo, 1.0);
  EXPECT_EQ(s.whisker_hi, 5.0);
  EXPECT_TRUE(s.outliers.empty());
}

TEST(Stats, ConstantSample) {
  const SummaryStats s = summarize(std::vector<double>(7, 2.5));
  EXPECT_EQ(s.q25, 2.5);
  EXPECT_EQ(s.q75, 2.5);
  EXPECT_EQ(s.whisker_lo, 2.5);
  EXPECT_EQ(s.whisker_hi, 2.5);
  EXPECT_TRUE(s.outliers.empty());
}

TEST(Stats, SingleOutlier) {
  const SummaryStats s = summarize({1, 2, 3, 4, 5, 6, 7, 8, 9, 100});
  EXPECT_DOUBLE_EQ(s.q25, 3.25);
  EXPECT_DOUBLE_EQ(s.median, 5.5);
  EXPECT_DOUBLE_EQ(s.q75, 7.75);
  EXPECT_EQ(s.whisker_lo, 1.0);
  EXPECT_EQ(s.whisker_hi, 9.0);
  EXPECT_EQ(s.outliers, (std::vector<double>{100.0}));
}

TEST(Stats, SingleSample) {
  const SummaryStats s = summarize({0.7});
  EXPECT_EQ(s.mean, s.median);
  EXPECT_EQ(s.q25, 0.7);
}

TEST(Stats, QuartilesMatchNaiveReference) {
  Rng rng(6);
  for (int it = 0; it < 200; ++it) {
    std::vector<double> xs(1 + rng.below(40));
    for (double& x : xs) x = std::round(rng.uniform(0.0, 20.0));
    const SummaryStats s = summarize(xs);
    EXPECT_NEAR(s.q25, naive_quantile(xs, 0.25), 1e-12);
    EXPECT_NEAR(s.median, naive_quantile(xs, 0.5), 1e-12);
    EXPECT_NEAR(s.q75, naive_quantile(xs, 0.75), 1e-12);
    for (double o : s.outliers) EXPECT_TRUE(o < s.q25 - 1.5 * (s.q75 - s.q25) || o > s.q75 + 1.5 * (s.q75 - s.q25));
  }
}

TEST(Stats, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(summarize({}), std::invalid_argument);
  EXPECT_THROW(summarize({1.0, std::numeric_limits<double>::quiet_NaN()}), std::invalid_argument);
}

TEST(Stats, PairedTTestFrozen) {
  // Reference values from an independent statistics package.
  const PairedTest t = paired_t_test({1, 2, 3, 4, 5.5}, {0.5, 2.2, 2.1, 3, 4});
  EXPECT_EQ(t.n, 5u);
  EXPECT_NEAR(t.mean_diff, 0.74, 1e-12);
  EXPECT_NEAR(t.t, 2.606538828602483, 1e-9);
  EXPECT_NEAR(t.p_greater, 0.02981827012396369, 1e-9);
}

TEST(Stats, PairedTTestDegenerate) {
  EXPECT_EQ(paired_t_test({2, 3}, {1, 2}).p_greater, 0.0);
  EXPECT_EQ(paired_t_test({1, 2}, {1, 2}).p_greater, 1.0);
  EXPECT_THROW(paired_t_test({1}, {1}), std::invalid_argument);
  EXPECT_THROW(paired_t_test({1, 2}, {1}), std::invalid_argument);
}

TEST(Csv, RealFormatting) {
  EXPECT_EQ(fmt_real(3.14159265), "3.14159");
  EXPECT_EQ(fmt_real(0.0), "0");
  EXPECT_EQ(fmt_real(1e-7), "1e-07");
}

TEST(Sweep, GridShapes) {
  const SweepGrid m = m2mgs_grid();
  EXPECT_EQ(grid_methods(m, SetupClass::SS).size(), 49u);
  EXPECT_EQ(grid_cell(m, 0), (std::pair<int, int>{2, 2}));
  EXPECT_EQ(grid_cell(m, 48), (std::pair<int, int>{8, 8}));
  EXPECT_EQ(grid_cell(m, 9), (std::pair<int, int>{3, 4}));
  const SweepGrid r = rca_grid(SetupClass::SS);
  EXPECT_EQ(r.first.back(), 6);
  EXPECT_EQ(r.second.back(), setup_params(SetupClass::SS).max_channels_per_bs);
  EXPECT_EQ(rca_grid(SetupClass::LS).first.back(), 8);
}

TEST(Sweep, RejectsOutOfRangeGrids) {
  SweepGrid g = m2mgs_grid();
  g.first.push_back(9);
  EXPECT_THROW(grid_methods(g, SetupClass::SS), std::invalid_argument);
  SweepGrid r = rca_grid(SetupClass::SS);
  r.first = {7};
  EXPECT_THROW(grid_methods(r, SetupClass::SS), std::invalid_argument);
  r = rca_grid(SetupClass::SS);
  r.second = {setup_params(SetupClass::SS).max_channels_per_bs + 1};
  EXPECT_THROW(grid_methods(r, SetupClass::SS), std::invalid_argument);
  r.second.clear();
  EXPECT_THROW(grid_methods(r, SetupClass::SS), std::invalid_argument);
}

TEST(Sweep, WritesPerMetricFiles) {
  ExperimentSpec spec = small_spec(2);
  spec.out_dir = fresh_dir("sweep").string();
  SweepGrid g{Method::M2MGS, {2, 8}, {3}, 2};
  const SweepResult sw = run_sweep(spec, g);
  EXPECT_EQ(sw.result.records.size(), 4u);
  for (const char* f : {"sweep_m2mgs_ss_total_utility.csv", "sweep_m2mgs_ss_starved_tenants.csv",
                        "sweep_m2mgs_ss_runs.csv", "sweep_m2mgs_ss_timing.csv", "sweep_m2mgs_ss_timing_runs.csv"})
    EXPECT_TRUE(fs::exists(fs::path(spec.out_dir) / f)) << f;
  const std::string head = slurp(fs::path(spec.out_dir) / "sweep_m2mgs_ss_total_utility.csv");
  EXPECT_EQ(head.substr(0, head.find('\n')),
            "setup,n_runs,q_t,q_ch,metric,n,mean,median,q25,q75,whisker_lo,whisker_hi,n_outliers,outliers,n_failed,n_nonoptimal");
}

TEST(Comparison, PairedSeedsAndRecordLayout) {
  ExperimentSpec spec = small_spec(3);
  spec.methods = {make_simple(Method::R), make_m2mgs(8, 3)};
  const ExperimentResult res = run_comparison(spec);
  ASSERT_EQ(res.records.size(), 6u);
  for (int r = 0; r < 3; ++r) {
    EXPECT_EQ(res.at(0, r).seed, 100u + static_cast<unsigned>(r));
    EXPECT_EQ(res.at(0, r).seed, res.at(1, r).seed);
    EXPECT_EQ(res.at(1, r).method, 1u);
  }
  EXPECT_TRUE(res.audit_failures().empty());
  EXPECT_LE(res.max_bids(), 255u);
  EXPECT_EQ(res.samples(0, Metric::TotalUtility).size(), 3u);
}

TEST(Comparison, RecordsMatchDirectAllocation) {
  ExperimentSpec spec = small_spec(2);
  spec.methods = {make_simple(Method::SCVB)};
  const ExperimentResult res = run_comparison(spec);
  const Scenario s = generate_scenario(SetupClass::SS, 101, spec.scenario);
  const AllocationResult direct = allocate(s, spec.scenario.link, spec.methods[0], 101);
  EXPECT_EQ(res.at(0, 1).metrics.total_utility, direct.total_utility());
}

TEST(Comparison, FailedRunsExcludedFromStats) {
  ExperimentResult res;
  res.spec = small_spec(2);
  res.spec.methods = {make_rca(2, 3)};
  RunRecord ok;
  ok.optimal = true;
  ok.metrics.total_utility = 1.5;
  RunRecord bad;
  bad.run = 1;
  bad.status = RunStatus::RcaInfeasible;
  res.records = {ok, bad};
  EXPECT_EQ(res.samples(0, Metric::TotalUtility), (std::vector<double>{1.5}));
  EXPECT_EQ(res.n_failed(0), 1u);
}

TEST(Comparison, CsvIsDeterministicAcrossThreadCounts) {
  ExperimentSpec spec = small_spec(4);
  spec.methods = {make_simple(Method::R), make_simple(Method::DB), make_rca(3, 3)};
  const fs::path single = fresh_dir("cmp1");
  spec.out_dir = single.string();
  run_comparison(spec);
  spec.out_dir = fresh_dir("cmp3").string();
  spec.threads = 3;
  run_comparison(spec);
  for (const char* f : {"compare_ss_runs.csv", "compare_ss_summary.csv", "compare_ss_paired.csv"}) {
    const std::string a = slurp(single / f);
    const std::string b = slurp(fs::path(spec.out_dir) / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, b) << f;
    EXPECT_EQ(a.find('\r'), std::string::npos);
  }
}

TEST(Experiment, SpecValidation) {
  ExperimentSpec spec = small_spec(0);
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = small_spec(1);
  spec.timeout_s = 0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(Experiment, MethodKeys) {
  EXPECT_EQ(method_key(make_m2mgs(8, 3)), "M2MGS_qT8_qch3");
  EXPECT_EQ(method_key(make_rca(3, 3)), "RCA_qBS3_nchpBS3");
  EXPECT_EQ(method_key(make_simple(Method::DBSR)), "DBSR");
  EXPECT_EQ(comparison_methods(SetupClass::LS).size(), 7u);
  EXPECT_EQ(optimal_rca(SetupClass::LS).rca.n_chpbs, 6);
}
