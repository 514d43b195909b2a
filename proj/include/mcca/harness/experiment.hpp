#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "mcca/harness/stats.hpp"
#include "mcca/io.hpp"
#include "mcca/pipeline.hpp"
#include "mcca/scenario.hpp"

namespace mcca {

inline MethodSpec optimal_m2mgs(SetupClass c) {
  switch (c) {
    case SetupClass::SS: return make_m2mgs(8, 3);
    case SetupClass::MS: return make_m2mgs(6, 2);
    case SetupClass::LS: return make_m2mgs(6, 2);
  }
  throw std::logic_error("optimal_m2mgs: unknown setup");
}

inline MethodSpec optimal_rca(SetupClass c) {
  switch (c) {
    case SetupClass::SS: return make_rca(3, 3);
    case SetupClass::MS: return make_rca(2, 5);
    case SetupClass::LS: return make_rca(2, 6);
  }
  throw std::logic_error("optimal_rca: unknown setup");
}

/// The five simple methods followed by M2MGS and RCA at their tuned values.
inline std::vector<MethodSpec> comparison_methods(SetupClass c) {
  std::vector<MethodSpec> out;
  for (Method m : {Method::R, Method::DB, Method::SCVB, Method::DBSR, Method::SCVBSR}) out.push_back(make_simple(m));
  out.push_back(optimal_m2mgs(c));
  out.push_back(optimal_rca(c));
  return out;
}

/// Identifier of a method with its parameters, safe inside a CSV field.
inline std::string method_key(const MethodSpec& m) {
  std::string s(to_string(m.method));
  if (m.method == Method::M2MGS) s += "_qT" + std::to_string(m.quotas.q_tenant) + "_qch" + std::to_string(m.quotas.q_channel);
  if (m.method == Method::RCA) s += "_qBS" + std::to_string(m.rca.q_bs) + "_nchpBS" + std::to_string(m.rca.n_chpbs);
  return s;
}

struct ExperimentSpec {
  SetupClass setup = SetupClass::SS;
  std::vector<MethodSpec> methods;
  int n_runs = 200;
  std::uint64_t base_seed = 1;
  ScenarioConfig scenario{};  // link model overrides live in scenario.link
  double timeout_s = 10.0;
  unsigned threads = 0;  // 0: hardware concurrency
  std::string out_dir;   // empty: no files written

  void validate() const {
    if (n_runs < 1) throw std::invalid_argument("ExperimentSpec: n_runs must be >= 1");
    if (!(timeout_s > 0.0)) throw std::invalid_argument("ExperimentSpec: timeout_s must be positive");
    scenario.link.validate();
    for (const MethodSpec& m : methods) m.validate();
  }
};

inline void to_json(Json& j, const ExperimentSpec& e) {
  j = Json::object();
  j["setup"] = std::string(to_string(e.setup));
  j["methods"] = e.methods;
  j["n_runs"] = e.n_runs;
  j["base_seed"] = e.base_seed;
  j["link"] = e.scenario.link;
  j["timeout_s"] = e.timeout_s;
  j["threads"] = e.threads;
  j["out_dir"] = e.out_dir;
}

inline void from_json(const Json& j, ExperimentSpec& e) {
  e = ExperimentSpec{};
  e.setup = parse_setup(j.at("setup").get<std::string>());
  if (j.contains("methods")) e.methods = j.at("methods").get<std::vector<MethodSpec>>();
  e.n_runs = j.value("n_runs", e.n_runs);
  e.base_seed = j.value("base_seed", e.base_seed);
  if (j.contains("link")) e.scenario.link = j.at("link").get<LinkModel>();
  e.timeout_s = j.value("timeout_s", e.timeout_s);
  e.threads = j.value("threads", e.threads);
  e.out_dir = j.value("out_dir", e.out_dir);
  e.validate();
}

enum class Metric { TotalUtility, UnpreallocChannels, FreeTenantSlots, StarvedTenants, TPrealloc, TBidgen, TSolve };

inline constexpr Metric kOutcomeMetrics[] = {Metric::TotalUtility, Metric::UnpreallocChannels, Metric::FreeTenantSlots,
                                             Metric::StarvedTenants};
inline constexpr Metric kTimingMetrics[] = {Metric::TPrealloc, Metric::TBidgen, Metric::TSolve};

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::TotalUtility: return "total_utility";
    case Metric::UnpreallocChannels: return "unprealloc_channels";
    case Metric::FreeTenantSlots: return "free_tenant_slots";
    case Metric::StarvedTenants: return "starved_tenants";
    case Metric::TPrealloc: return "t_prealloc_s";
    case Metric::TBidgen: return "t_bidgen_s";
    case Metric::TSolve: return "t_solve_s";
  }
  return "?";
}

inline double metric_value(const Metrics& m, Metric which) {
  switch (which) {
    case Metric::TotalUtility: return m.total_utility;
    case Metric::UnpreallocChannels: return m.n_unpreallocated_channels;
    case Metric::FreeTenantSlots: return m.n_free_tenant_slots;
    case Metric::StarvedTenants: return m.n_starved_tenants;
    case Metric::TPrealloc: return m.t_prealloc;
    case Metric::TBidgen: return m.t_bidgen;
    case Metric::TSolve: return m.t_solve;
  }
  return 0.0;
}

struct RunRecord {
  std::size_t method = 0;
  int run = 0;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::Ok;
  bool optimal = false;
  Metrics metrics;
  std::size_t max_bids = 0;
  std::string audit;  // empty when the post-hoc verifier accepted the run

  [[nodiscard]] bool failed() const { return status == RunStatus::RcaInfeasible; }
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<RunRecord> records;  // method-major, run-minor

  [[nodiscard]] const RunRecord& at(std::size_t method, int run) const {
    return records.at(method * static_cast<std::size_t>(spec.n_runs) + static_cast<std::size_t>(run));
  }

  /// Whether a run enters the statistics of `metric`. Failed runs never do;
  /// utility additionally requires a proven optimal auction.
  [[nodiscard]] static bool counts(const RunRecord& r, Metric metric) {
    if (r.failed()) return false;
    return metric != Metric::TotalUtility || r.optimal;
  }

  [[nodiscard]] std::vector<double> samples(std::size_t method, Metric metric) const {
    std::vector<double> out;
    for (int r = 0; r < spec.n_runs; ++r) {
      const RunRecord& rec = at(method, r);
      if (counts(rec, metric)) out.push_back(metric_value(rec.metrics, metric));
    }
    return out;
  }

  /// Runs valid for both methods, as aligned sample pairs.
  [[nodiscard]] std::pair<std::vector<double>, std::vector<double>> paired(std::size_t a, std::size_t b,
                                                                           Metric metric) const {
    std::pair<std::vector<double>, std::vector<double>> out;
    for (int r = 0; r < spec.n_runs; ++r) {
      const RunRecord& ra = at(a, r);
      const RunRecord& rb = at(b, r);
      if (!counts(ra, metric) || !counts(rb, metric)) continue;
      out.first.push_back(metric_value(ra.metrics, metric));
      out.second.push_back(metric_value(rb.metrics, metric));
    }
    return out;
  }

  [[nodiscard]] std::size_t n_failed(std::size_t method) const {
    std::size_t n = 0;
    for (int r = 0; r < spec.n_runs; ++r) n += at(method, r).failed() ? 1 : 0;
    return n;
  }

  [[nodiscard]] std::size_t n_nonoptimal(std::size_t method) const {
    std::size_t n = 0;
    for (int r = 0; r < spec.n_runs; ++r) {
      const RunRecord& rec = at(method, r);
      n += (!rec.failed() && !rec.optimal) ? 1 : 0;
    }
    return n;
  }

  /// Every run the verifier rejected, as "method/run: reason".
  [[nodiscard]] std::vector<std::string> audit_failures() const {
    std::vector<std::string> out;
    for (const RunRecord& r : records)
      if (!r.audit.empty())
        out.push_back(method_key(spec.methods[r.method]) + "/" + std::to_string(r.run) + ": " + r.audit);
    return out;
  }

  [[nodiscard]] std::size_t max_bids() const {
    std::size_t m = 0;
    for (const RunRecord& r : records) m = std::max(m, r.max_bids);
    return m;
  }
};

namespace detail {

/// Calls fn(i) for i in [0, n) on a pool of worker threads. The first
/// exception thrown by any call is rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !stop; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          stop = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Scenario of replication r: seed base_seed + r. Every method sees the same
/// sequence, so comparisons are paired.
inline std::vector<Scenario> generate_scenarios(const ExperimentSpec& spec) {
  std::vector<Scenario> out(static_cast<std::size_t>(spec.n_runs));
  detail::parallel_for(out.size(), spec.threads, [&](std::size_t r) {
    out[r] = generate_scenario(spec.setup, spec.base_seed + r, spec.scenario);
  });
  return out;
}

inline RunRecord run_one(const Scenario& s, const ExperimentSpec& spec, std::size_t method, int run) {
  const MethodSpec& m = spec.methods.at(method);
  AllocateOptions opt;
  opt.wdp.time_budget_s = spec.timeout_s;
  RunRecord rec;
  rec.method = method;
  rec.run = run;
  rec.seed = spec.base_seed + static_cast<std::uint64_t>(run);
  const AllocationResult res = allocate(s, spec.scenario.link, m, rec.seed, opt);
  rec.status = res.status;
  rec.optimal = res.solver_optimal;
  rec.metrics = compute_metrics(res, m.tenant_quota());
  for (std::size_t b : res.bids_per_tenant) rec.max_bids = std::max(rec.max_bids, b);
  if (!rec.failed()) rec.audit = verify_allocation(s, spec.scenario.link, res);
  return rec;
}

/// All (method, run) allocations of `spec`, gathered in deterministic order.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.methods.empty()) throw std::invalid_argument("run_experiment: no methods");
  const std::vector<Scenario> scenarios = generate_scenarios(spec);
  ExperimentResult res;
  res.spec = spec;
  const std::size_t n_runs = static_cast<std::size_t>(spec.n_runs);
  res.records.resize(spec.methods.size() * n_runs);
  detail::parallel_for(res.records.size(), spec.threads, [&](std::size_t i) {
    const std::size_t m = i / n_runs;
    const std::size_t r = i % n_runs;
    res.records[i] = run_one(scenarios[r], spec, m, static_cast<int>(r));
  });
  return res;
}

// ---------------------------------------------------------------------------
// CSV

/// Real formatted with 6 significant digits.
inline std::string fmt_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

class CsvFile {
 public:
  explicit CsvFile(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
  }

  template <class... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((put(fields, first)), ...);
    out_ << '\n';
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
    out_ << '\n';
  }

 private:
  void sep(bool& first) {
    if (!first) out_ << ',';
    first = false;
  }
  void put(const std::string& s, bool& first) { sep(first), out_ << s; }
  void put(std::string_view s, bool& first) { sep(first), out_ << s; }
  void put(const char* s, bool& first) { sep(first), out_ << s; }
  void put(double x, bool& first) { sep(first), out_ << fmt_real(x); }
  template <class I, class = std::enable_if_t<std::is_integral_v<I>>>
  void put(I x, bool& first) {
    sep(first), out_ << x;
  }

  std::ofstream out_;
};

inline std::string setup_slug(SetupClass c) {
  std::string s(to_string(c));
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

inline std::string join_outliers(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ";" : "") + fmt_real(xs[i]);
  return s;
}

inline const std::vector<std::string>& summary_header() {
  static const std::vector<std::string> h = {"n", "mean", "median", "q25", "q75", "whisker_lo", "whisker_hi",
                                             "n_outliers", "outliers"};
  return h;
}

inline std::vector<std::string> summary_fields(const std::vector<double>& samples) {
  if (samples.empty()) return {"0", "", "", "", "", "", "", "0", ""};
  const SummaryStats s = summarize(samples);
  return {std::to_string(s.n),        fmt_real(s.mean),       fmt_real(s.median),
          fmt_real(s.q25),            fmt_real(s.q75),        fmt_real(s.whisker_lo),
          fmt_real(s.whisker_hi),     std::to_string(s.outliers.size()), join_outliers(s.outliers)};
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepGrid {
  Method method = Method::M2MGS;
  std::vector<int> first;   // q_T or q_BS
  std::vector<int> second;  // q_ch or n_chpBS
  int min_channels = 2;     // RCA only

  [[nodiscard]] std::string first_name() const { return method == Method::M2MGS ? "q_t" : "q_bs"; }
  [[nodiscard]] std::string second_name() const { return method == Method::M2MGS ? "q_ch" : "n_chpbs"; }
};

inline int max_channels_per_bs(SetupClass c) { return setup_params(c).max_channels_per_bs; }

/// q_T x q_ch over [2, 8]^2.
inline SweepGrid m2mgs_grid() { return {Method::M2MGS, {2, 3, 4, 5, 6, 7, 8}, {2, 3, 4, 5, 6, 7, 8}, 2}; }

/// q_BS in [2, min(8, n_T)] x n_chpBS in [2, channels per BS cap].
inline SweepGrid rca_grid(SetupClass c, int min_channels = 2) {
  SweepGrid g{Method::RCA, {}, {}, min_channels};
  for (int q = 2; q <= std::min(8, setup_params(c).n_tenants); ++q) g.first.push_back(q);
  for (int n = 2; n <= max_channels_per_bs(c); ++n) g.second.push_back(n);
  return g;
}

/// Methods of the grid in row-major (first, second) order.
inline std::vector<MethodSpec> grid_methods(const SweepGrid& g, SetupClass c) {
  if (g.first.empty() || g.second.empty()) throw std::invalid_argument("sweep grid: empty axis");
  std::vector<MethodSpec> out;
  for (int a : g.first) {
    for (int b : g.second) {
      if (g.method == Method::M2MGS) {
        if (a < 1 || a > kDefaultMaxChannels || b < 1)
          throw std::invalid_argument("sweep grid: q_T must be in [1, 8] and q_ch >= 1");
        out.push_back(make_m2mgs(a, b));
      } else if (g.method == Method::RCA) {
        if (a < 2 || a > setup_params(c).n_tenants)
          throw std::invalid_argument("sweep grid: q_BS must be in [2, n_T]");
        if (b < 1 || b > max_channels_per_bs(c))
          throw std::invalid_argument("sweep grid: n_chpBS exceeds the setup's channels per BS");
        out.push_back(make_rca(a, b, g.min_channels));
      } else {
        throw std::invalid_argument("sweep grid: method has no parameters");
      }
    }
  }
  for (const MethodSpec& m : out) m.validate();
  return out;
}

inline std::pair<int, int> grid_cell(const SweepGrid& g, std::size_t method) {
  return {g.first.at(method / g.second.size()), g.second.at(method % g.second.size())};
}

struct SweepResult {
  SweepGrid grid;
  ExperimentResult result;
};

/// Files: <prefix>_<metric>.csv per outcome metric, <prefix>_runs.csv, and
/// the timing pair <prefix>_timing.csv / <prefix>_timing_runs.csv.
inline void write_sweep_csv(const SweepResult& sw, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const ExperimentResult& res = sw.result;
  const SweepGrid& g = sw.grid;
  const std::string prefix = std::string("sweep_") + (g.method == Method::M2MGS ? "m2mgs" : "rca") + "_" +
                             setup_slug(res.spec.setup);
  const std::string setup(to_string(res.spec.setup));

  auto summary_file = [&](const std::string& name, auto metrics) {
    CsvFile f(dir / name);
    std::vector<std::string> head = {"setup", "n_runs", g.first_name(), g.second_name(), "metric"};
    for (const auto& h : summary_header()) head.push_back(h);
    head.push_back("n_failed");
    head.push_back("n_nonoptimal");
    f.row(head);
    for (Metric metric : metrics) {
      for (std::size_t m = 0; m < res.spec.methods.size(); ++m) {
        const auto [a, b] = grid_cell(g, m);
        std::vector<std::string> row = {setup, std::to_string(res.spec.n_runs), std::to_string(a), std::to_string(b),
                                        std::string(to_string(metric))};
        for (auto& x : summary_fields(res.samples(m, metric))) row.push_back(std::move(x));
        row.push_back(std::to_string(res.n_failed(m)));
        row.push_back(std::to_string(res.n_nonoptimal(m)));
        f.row(row);
      }
    }
  };
  for (Metric metric : kOutcomeMetrics)
    summary_file(prefix + "_" + std::string(to_string(metric)) + ".csv", std::vector<Metric>{metric});
  summary_file(prefix + "_timing.csv", std::vector<Metric>(std::begin(kTimingMetrics), std::end(kTimingMetrics)));

  CsvFile runs(dir / (prefix + "_runs.csv"));
  std::vector<std::string> head = {g.first_name(), g.second_name(), "run", "seed", "status", "optimal", "max_bids"};
  for (Metric metric : kOutcomeMetrics) head.emplace_back(to_string(metric));
  runs.row(head);
  CsvFile timing(dir / (prefix + "_timing_runs.csv"));
  std::vector<std::string> thead = {g.first_name(), g.second_name(), "run"};
  for (Metric metric : kTimingMetrics) thead.emplace_back(to_string(metric));
  timing.row(thead);
  for (const RunRecord& r : res.records) {
    const auto [a, b] = grid_cell(g, r.method);
    runs.row(a, b, r.run, r.seed, to_string(r.status), int{r.optimal}, r.max_bids,
             metric_value(r.metrics, Metric::TotalUtility), metric_value(r.metrics, Metric::UnpreallocChannels),
             metric_value(r.metrics, Metric::FreeTenantSlots), metric_value(r.metrics, Metric::StarvedTenants));
    timing.row(a, b, r.run, r.metrics.t_prealloc, r.metrics.t_bidgen, r.metrics.t_solve);
  }
}

/// Runs every grid cell of `grid`; spec.methods is replaced by the grid.
inline SweepResult run_sweep(ExperimentSpec spec, const SweepGrid& grid) {
  if (grid.method != Method::M2MGS && grid.method != Method::RCA)
    throw std::invalid_argument("run_sweep: grid method must be M2MGS or RCA");
  spec.methods = grid_methods(grid, spec.setup);
  SweepResult sw{grid, run_experiment(spec)};
  if (!spec.out_dir.empty()) write_sweep_csv(sw, spec.out_dir);
  return sw;
}

// ---------------------------------------------------------------------------
// Comparisons

/// Files: compare_<setup>_runs.csv (method, run, metric, value),
/// compare_<setup>_summary.csv, compare_<setup>_paired.csv (each method
/// against R when R is present), and the timing pair
/// compare_<setup>_timing_runs.csv / compare_<setup>_timing_summary.csv.
inline void write_comparison_csv(const ExperimentResult& res, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string prefix = "compare_" + setup_slug(res.spec.setup);
  const std::string setup(to_string(res.spec.setup));
  const auto& methods = res.spec.methods;

  CsvFile runs(dir / (prefix + "_runs.csv"));
  runs.row("method", "run", "metric", "value");
  CsvFile truns(dir / (prefix + "_timing_runs.csv"));
  truns.row("method", "run", "metric", "value");
  for (const RunRecord& r : res.records) {
    const std::string key = method_key(methods[r.method]);
    runs.row(key, r.run, "failed", int{r.failed()});
    runs.row(key, r.run, "optimal", int{r.optimal});
    runs.row(key, r.run, "max_bids", r.max_bids);
    for (Metric metric : kOutcomeMetrics) runs.row(key, r.run, to_string(metric), metric_value(r.metrics, metric));
    for (Metric metric : kTimingMetrics) truns.row(key, r.run, to_string(metric), metric_value(r.metrics, metric));
  }

  auto summary_file = [&](const std::string& name, auto metrics) {
    CsvFile f(dir / name);
    std::vector<std::string> head = {"setup", "n_runs", "method", "metric"};
    for (const auto& h : summary_header()) head.push_back(h);
    head.push_back("n_failed");
    head.push_back("n_nonoptimal");
    f.row(head);
    for (Metric metric : metrics) {
      for (std::size_t m = 0; m < methods.size(); ++m) {
        std::vector<std::string> row = {setup, std::to_string(res.spec.n_runs), method_key(methods[m]),
                                        std::string(to_string(metric))};
        for (auto& x : summary_fields(res.samples(m, metric))) row.push_back(std::move(x));
        row.push_back(std::to_string(res.n_failed(m)));
        row.push_back(std::to_string(res.n_nonoptimal(m)));
        f.row(row);
      }
    }
  };
  summary_file(prefix + "_summary.csv", std::vector<Metric>(std::begin(kOutcomeMetrics), std::end(kOutcomeMetrics)));
  summary_file(prefix + "_timing_summary.csv",
               std::vector<Metric>(std::begin(kTimingMetrics), std::end(kTimingMetrics)));

  const auto base = std::find_if(methods.begin(), methods.end(), [](const MethodSpec& m) { return m.method == Method::R; });
  if (base == methods.end()) return;
  const auto b = static_cast<std::size_t>(base - methods.begin());
  CsvFile paired(dir / (prefix + "_paired.csv"));
  paired.row("setup", "metric", "method", "baseline", "n_pairs", "mean_diff", "t", "p_greater");
  for (std::size_t m = 0; m < methods.size(); ++m) {
    if (m == b) continue;
    const auto [x, y] = res.paired(m, b, Metric::TotalUtility);
    if (x.size() < 2) continue;
    const PairedTest t = paired_t_test(x, y);
    paired.row(setup, to_string(Metric::TotalUtility), method_key(methods[m]), method_key(methods[b]), t.n,
               t.mean_diff, t.t, t.p_greater);
  }
}

/// Comparison over spec.methods, or over comparison_methods(setup) when the
/// list is empty.
inline ExperimentResult run_comparison(ExperimentSpec spec) {
  if (spec.methods.empty()) spec.methods = comparison_methods(spec.setup);
  ExperimentResult res = run_experiment(spec);
  if (!spec.out_dir.empty()) write_comparison_csv(res, spec.out_dir);
  return res;
}

}  // namespace mcca
