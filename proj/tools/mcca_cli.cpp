// mcca: scenario generation, single allocations, sweeps and comparisons.

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mcca/mcca.hpp"

namespace {

struct Common {
  std::string setup = "ss";
  std::optional<int> runs;
  std::uint64_t seed = 1;
  std::string out;
  double timeout_s = 10.0;
  std::string link_config;
  std::string config;
  unsigned threads = 0;
};

struct Params {
  std::optional<int> q_t, q_ch, q_bs, n_chpbs;
  int min_ch = 2;
};

void add_common(CLI::App* cmd, Common& c, bool with_runs) {
  cmd->add_option("--setup", c.setup, "setup class")->check(CLI::IsMember({"ss", "ms", "ls"}, CLI::ignore_case));
  if (with_runs) {
    cmd->add_option("--runs", c.runs, "replications per cell")->check(CLI::PositiveNumber);
    cmd->add_option("--config", c.config, "experiment spec (JSON); flags override it")->check(CLI::ExistingFile);
    cmd->add_option("--threads", c.threads, "worker threads, 0 = all cores");
  }
  cmd->add_option("--seed", c.seed, "base seed");
  cmd->add_option("--timeout-s", c.timeout_s, "solver budget per instance")->check(CLI::PositiveNumber);
  cmd->add_option("--link-config", c.link_config, "link model overrides (JSON)")->check(CLI::ExistingFile);
}

void add_params(CLI::App* cmd, Params& p) {
  cmd->add_option("--q-t", p.q_t, "M2MGS tenant quota");
  cmd->add_option("--q-ch", p.q_ch, "M2MGS channel quota");
  cmd->add_option("--q-bs", p.q_bs, "RCA BS quota");
  cmd->add_option("--n-chpbs", p.n_chpbs, "RCA channels considered per BS");
  cmd->add_option("--min-ch", p.min_ch, "RCA minimum channels per tenant");
}

mcca::LinkModel load_link(const Common& c, mcca::LinkModel base = {}) {
  if (!c.link_config.empty()) mcca::from_json(mcca::read_json_file(c.link_config), base);
  return base;
}

mcca::ExperimentSpec make_spec(const Common& c, int default_runs, bool setup_given) {
  mcca::ExperimentSpec spec;
  if (!c.config.empty()) spec = mcca::read_json_file(c.config).get<mcca::ExperimentSpec>();
  else spec.n_runs = default_runs;
  if (setup_given || c.config.empty()) spec.setup = mcca::parse_setup(c.setup);
  if (c.runs) spec.n_runs = *c.runs;
  spec.base_seed = c.seed;
  spec.timeout_s = c.timeout_s;
  spec.scenario.link = load_link(c, spec.scenario.link);
  if (c.threads) spec.threads = c.threads;
  if (!c.out.empty()) spec.out_dir = c.out;
  spec.validate();
  return spec;
}

mcca::MethodSpec method_from(const std::string& name, const Params& p, mcca::SetupClass setup) {
  std::string upper = name;
  for (char& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  const mcca::Method m = mcca::parse_method(upper);
  if (m == mcca::Method::M2MGS) {
    mcca::MethodSpec s = mcca::optimal_m2mgs(setup);
    if (p.q_t) s.quotas.q_tenant = *p.q_t;
    if (p.q_ch) s.quotas.q_channel = *p.q_ch;
    return s;
  }
  if (m == mcca::Method::RCA) {
    mcca::MethodSpec s = mcca::optimal_rca(setup);
    if (p.q_bs) s.rca.q_bs = *p.q_bs;
    if (p.n_chpbs) s.rca.n_chpbs = *p.n_chpbs;
    s.rca.min_channels = p.min_ch;
    return s;
  }
  return mcca::make_simple(m);
}

void print_audit(const mcca::ExperimentResult& res) {
  const auto bad = res.audit_failures();
  std::printf("max bids per tenant: %zu, verifier rejections: %zu\n", res.max_bids(), bad.size());
  for (const auto& b : bad) std::printf("  %s\n", b.c_str());
}

int report_sweep(const mcca::SweepResult& sw) {
  const auto& res = sw.result;
  const auto& g = sw.grid;
  std::printf("%s sweep, %s, %d runs: mean total utility (rows %s, columns %s)\n",
              std::string(mcca::to_string(g.method)).c_str(), std::string(mcca::to_string(res.spec.setup)).c_str(),
              res.spec.n_runs, g.first_name().c_str(), g.second_name().c_str());
  std::printf("%6s", "");
  for (int b : g.second) std::printf("%9d", b);
  std::printf("\n");
  for (std::size_t i = 0; i < g.first.size(); ++i) {
    std::printf("%6d", g.first[i]);
    for (std::size_t j = 0; j < g.second.size(); ++j) {
      const auto xs = res.samples(i * g.second.size() + j, mcca::Metric::TotalUtility);
      if (xs.empty()) std::printf("%9s", "-");
      else std::printf("%9.3f", mcca::summarize(xs).mean);
    }
    std::printf("\n");
  }
  print_audit(res);
  return res.audit_failures().empty() ? 0 : 3;
}

int report_comparison(const mcca::ExperimentResult& res) {
  std::printf("comparison, %s, %d runs\n", std::string(mcca::to_string(res.spec.setup)).c_str(), res.spec.n_runs);
  std::printf("%-22s %9s %9s %9s %11s %7s %7s\n", "method", "U mean", "U median", "unalloc", "t_pre [s]", "failed",
              "nonopt");
  for (std::size_t m = 0; m < res.spec.methods.size(); ++m) {
    const auto u = res.samples(m, mcca::Metric::TotalUtility);
    const auto c = res.samples(m, mcca::Metric::UnpreallocChannels);
    const auto t = res.samples(m, mcca::Metric::TPrealloc);
    const auto mean = [](const std::vector<double>& xs) { return xs.empty() ? 0.0 : mcca::summarize(xs).mean; };
    const auto median = [](const std::vector<double>& xs) { return xs.empty() ? 0.0 : mcca::summarize(xs).median; };
    std::printf("%-22s %9.4f %9.4f %9.3f %11.3g %7zu %7zu\n", mcca::method_key(res.spec.methods[m]).c_str(), mean(u),
                median(u), mean(c), mean(t), res.n_failed(m), res.n_nonoptimal(m));
  }
  print_audit(res);
  return res.audit_failures().empty() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preallocation-based combinatorial auction channel assignment"};
  app.require_subcommand(1);

  Common gen_c;
  auto* gen = app.add_subcommand("generate", "write a random scenario as JSON");
  add_common(gen, gen_c, false);
  gen->add_option("--out", gen_c.out, "output file (stdout when omitted)");

  Common alloc_c;
  Params alloc_p;
  std::string alloc_method = "M2MGS";
  std::string alloc_scenario;
  auto* alloc = app.add_subcommand("allocate", "run one allocation");
  add_common(alloc, alloc_c, false);
  add_params(alloc, alloc_p);
  alloc->add_option("--method", alloc_method, "R, DB, SCVB, DBSR, SCVBSR, M2MGS or RCA");
  alloc->add_option("--scenario", alloc_scenario, "scenario JSON (generated from --setup/--seed when omitted)")
      ->check(CLI::ExistingFile);
  alloc->add_option("--out", alloc_c.out, "result JSON file");

  Common swm_c;
  auto* swm = app.add_subcommand("sweep-m2mgs", "M2MGS q_T x q_ch grid");
  add_common(swm, swm_c, true);
  swm->add_option("--out", swm_c.out, "output directory for CSV files");

  Common swr_c;
  Params swr_p;
  auto* swr = app.add_subcommand("sweep-rca", "RCA q_BS x n_chpBS grid");
  add_common(swr, swr_c, true);
  swr->add_option("--min-ch", swr_p.min_ch, "minimum channels per tenant");
  swr->add_option("--out", swr_c.out, "output directory for CSV files");

  Common cmp_c;
  Params cmp_p;
  std::vector<std::string> cmp_methods;
  auto* cmp = app.add_subcommand("compare", "all methods on paired scenarios");
  add_common(cmp, cmp_c, true);
  add_params(cmp, cmp_p);
  cmp->add_option("--methods", cmp_methods, "subset of methods (default: all seven)");
  cmp->add_option("--out", cmp_c.out, "output directory for CSV files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      mcca::ScenarioConfig cfg;
      cfg.link = load_link(gen_c);
      const mcca::Scenario s = mcca::generate_scenario(mcca::parse_setup(gen_c.setup), gen_c.seed, cfg);
      const mcca::Json j = s;
      if (gen_c.out.empty()) std::cout << j.dump(2) << '\n';
      else mcca::write_json_file(gen_c.out, j);
      return 0;
    }
    if (*alloc) {
      const mcca::LinkModel link = load_link(alloc_c);
      mcca::Scenario s;
      if (alloc_scenario.empty()) {
        mcca::ScenarioConfig cfg;
        cfg.link = link;
        s = mcca::generate_scenario(mcca::parse_setup(alloc_c.setup), alloc_c.seed, cfg);
      } else {
        s = mcca::read_json_file(alloc_scenario).get<mcca::Scenario>();
      }
      const mcca::SetupClass cls = s.setup.value_or(mcca::parse_setup(alloc_c.setup));
      const mcca::MethodSpec m = method_from(alloc_method, alloc_p, cls);
      mcca::AllocateOptions opt;
      opt.wdp.time_budget_s = alloc_c.timeout_s;
      const mcca::AllocationResult res = mcca::allocate(s, link, m, alloc_c.seed, opt);
      const std::string audit = res.status == mcca::RunStatus::RcaInfeasible ? "" : mcca::verify_allocation(s, link, res);
      mcca::Json j = res;
      j["method"] = m;
      if (!alloc_c.out.empty()) mcca::write_json_file(alloc_c.out, j);
      std::printf("%s: status %s, total utility %.6g, optimal %s, prealloc %.3g s, solve %.3g s\n",
                  m.label().c_str(), std::string(mcca::to_string(res.status)).c_str(), res.total_utility(),
                  res.solver_optimal ? "yes" : "no", res.timings.prealloc_s, res.timings.solve_s);
      if (res.infeasible_tenant) std::printf("infeasible at tenant %zu\n", *res.infeasible_tenant);
      if (!audit.empty()) {
        std::fprintf(stderr, "verifier: %s\n", audit.c_str());
        return 3;
      }
      return 0;
    }
    if (*swm) {
      const auto spec = make_spec(swm_c, 200, swm->count("--setup") > 0);
      return report_sweep(mcca::run_sweep(spec, mcca::m2mgs_grid()));
    }
    if (*swr) {
      const auto spec = make_spec(swr_c, 200, swr->count("--setup") > 0);
      return report_sweep(mcca::run_sweep(spec, mcca::rca_grid(spec.setup, swr_p.min_ch)));
    }
    if (*cmp) {
      auto spec = make_spec(cmp_c, 500, cmp->count("--setup") > 0);
      if (!cmp_methods.empty() || spec.methods.empty()) {
        spec.methods.clear();
        if (cmp_methods.empty())
          for (mcca::Method m : mcca::kAllMethods) cmp_methods.emplace_back(mcca::to_string(m));
        for (const auto& name : cmp_methods) spec.methods.push_back(method_from(name, cmp_p, spec.setup));
      }
      return report_comparison(mcca::run_comparison(spec));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
