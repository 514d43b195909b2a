#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcca/assignment.hpp"
#include "mcca/auction/channel_bids.hpp"
#include "mcca/auction/rca.hpp"
#include "mcca/auction/wdp.hpp"
#include "mcca/connectivity.hpp"
#include "mcca/matching.hpp"
#include "mcca/prealloc.hpp"
#include "mcca/scenario.hpp"

namespace mcca {

/// A preallocation method together with its parameters.
struct MethodSpec {
  Method method = Method::R;
  Quotas quotas{};     // M2MGS
  RcaConfig rca{};     // RCA
  int max_channels = kDefaultMaxChannels;

  void validate() const {
    if (max_channels < 1 || max_channels > 16) throw std::invalid_argument("MethodSpec: max_channels must be in [1, 16]");
    if (method == Method::M2MGS) quotas.validate(max_channels);
    if (method == Method::RCA) {
      rca.validate();
      if (rca.max_channels != max_channels) throw std::invalid_argument("MethodSpec: RCA max_channels mismatch");
    }
  }

  /// Per-tenant slot count used for the free-slot metric.
  [[nodiscard]] int tenant_quota() const { return method == Method::M2MGS ? quotas.q_tenant : max_channels; }

  /// Short label, e.g. "M2MGS(qT=8,qch=3)".
  [[nodiscard]] std::string label() const {
    std::string s(to_string(method));
    if (method == Method::M2MGS)
      s += "(qT=" + std::to_string(quotas.q_tenant) + ",qch=" + std::to_string(quotas.q_channel) + ")";
    if (method == Method::RCA)
      s += "(qBS=" + std::to_string(rca.q_bs) + ",nchpBS=" + std::to_string(rca.n_chpbs) + ")";
    return s;
  }
};

inline MethodSpec make_m2mgs(int q_tenant, int q_channel) {
  MethodSpec m;
  m.method = Method::M2MGS;
  m.quotas = {q_tenant, q_channel};
  return m;
}

inline MethodSpec make_rca(int q_bs, int n_chpbs, int min_channels = 2) {
  MethodSpec m;
  m.method = Method::RCA;
  m.rca.q_bs = q_bs;
  m.rca.n_chpbs = n_chpbs;
  m.rca.min_channels = min_channels;
  return m;
}

inline MethodSpec make_simple(Method method) {
  MethodSpec m;
  m.method = method;
  return m;
}

struct StageTimings {
  double prealloc_s = 0.0;
  double bidgen_s = 0.0;
  double solve_s = 0.0;
};

enum class RunStatus { Ok, SolverTimeout, RcaInfeasible };

inline std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::SolverTimeout: return "solver_timeout";
    case RunStatus::RcaInfeasible: return "rca_infeasible";
  }
  return "?";
}

struct AllocationResult {
  AssignmentMatrix final_assign;
  std::vector<double> per_tenant_capacity;
  std::vector<double> per_tenant_utility;
  Preallocation prealloc_used;
  StageTimings timings;
  bool solver_optimal = false;
  RunStatus status = RunStatus::Ok;
  std::optional<std::size_t> infeasible_tenant;
  std::vector<std::size_t> bids_per_tenant;

  [[nodiscard]] double total_utility() const {
    double u = 0.0;
    for (double x : per_tenant_utility) u += x;
    return u;
  }
};

struct AllocateOptions {
  WdpOptions wdp{};
  bool prune_dominated = false;
};

/// Runs the preallocation of `spec` alone.
///
/// For RCA an infeasible relaxed auction leaves `infeasible` set and returns
/// an empty preallocation.
inline Preallocation preallocate(ConnectivityEvaluator& eval, const LinkModel& model, const MethodSpec& spec,
                                 const Rng& streams,
                                 const WdpOptions& wdp, std::optional<std::size_t>* infeasible = nullptr,
                                 bool* rca_optimal = nullptr) {
  const Scenario& s = eval.scenario();
  switch (spec.method) {
    case Method::R: return random_prealloc(s, spec.max_channels, streams);
    case Method::DB: return distance_based(s, spec.max_channels, streams);
    case Method::SCVB: return scvb(eval, spec.max_channels, streams);
    case Method::DBSR: return dbsr(s, model, spec.max_channels, streams);
    case Method::SCVBSR: return scvbsr(eval, spec.max_channels, streams);
    case Method::M2MGS: return m2m_gale_shapley(build_preferences(eval, streams), spec.quotas);
    case Method::RCA: {
      const BidMatrix bs_bids = generate_bs_bids(eval, spec.rca, streams);
      const WdpSolution sol = solve_rca(bs_bids, spec.rca, capped_channel_counts(s, spec.rca), wdp);
      if (rca_optimal) *rca_optimal = sol.proven_optimal;
      if (sol.status == WdpStatus::Infeasible) {
        if (infeasible) *infeasible = sol.infeasible_bidder.value_or(0);
        return Preallocation{AssignmentMatrix(s.n_tenants(), s.n_channels()), Method::RCA};
      }
      return rca_to_preallocation(s, bs_bids, sol, spec.rca, streams);
    }
  }
  throw std::logic_error("preallocate: unknown method");
}

/// Two-step allocation: preallocation, channel bids, exact auction.
inline AllocationResult allocate(const Scenario& s, const LinkModel& model, const MethodSpec& spec,
                                 std::uint64_t seed, const AllocateOptions& opt = {}) {
  using clock = std::chrono::steady_clock;
  spec.validate();
  s.validate();
  const Rng streams(seed);
  ConnectivityEvaluator eval(s, model);
  AllocationResult res;
  res.final_assign = AssignmentMatrix(s.n_tenants(), s.n_channels());
  res.per_tenant_capacity.assign(s.n_tenants(), 0.0);
  res.per_tenant_utility.assign(s.n_tenants(), 0.0);

  const auto t0 = clock::now();
  std::optional<std::size_t> infeasible;
  bool rca_optimal = true;
  res.prealloc_used = preallocate(eval, model, spec, streams, opt.wdp, &infeasible, &rca_optimal);
  const auto t1 = clock::now();
  res.timings.prealloc_s = std::chrono::duration<double>(t1 - t0).count();
  if (infeasible) {
    res.status = RunStatus::RcaInfeasible;
    res.infeasible_tenant = infeasible;
    return res;
  }

  BidMatrix bids = generate_channel_bids(eval, res.prealloc_used.assign, spec.max_channels);
  if (opt.prune_dominated) bids = prune_dominated_bids(bids);
  res.bids_per_tenant = bids.bids_per_bidder();
  const auto t2 = clock::now();
  res.timings.bidgen_s = std::chrono::duration<double>(t2 - t1).count();

  const WdpSolution sol = solve_ca(bids, opt.wdp);
  const auto t3 = clock::now();
  res.timings.solve_s = std::chrono::duration<double>(t3 - t2).count();
  res.solver_optimal = sol.proven_optimal && rca_optimal;
  if (!res.solver_optimal) res.status = RunStatus::SolverTimeout;

  for (std::size_t r : sol.accepted) {
    const Bid& b = bids.rows[r];
    res.final_assign.set_row(b.bidder, b.bundle);
  }
  for (std::size_t k = 0; k < s.n_tenants(); ++k) {
    res.per_tenant_capacity[k] = eval.capacity(k, res.final_assign.row(k));
    res.per_tenant_utility[k] = utility(res.per_tenant_capacity[k], s.utility_bounds[k]);
  }
  return res;
}

struct Metrics {
  double total_utility = 0.0;
  int n_unpreallocated_channels = 0;
  int n_free_tenant_slots = 0;
  int n_starved_tenants = 0;
  double t_prealloc = 0.0;
  double t_bidgen = 0.0;
  double t_solve = 0.0;
};

/// tenant_quota: q_T for M2MGS, max_channels otherwise.
inline Metrics compute_metrics(const AllocationResult& res, int tenant_quota) {
  const AssignmentMatrix& pre = res.prealloc_used.assign;
  if (pre.n_tenants() != res.per_tenant_utility.size())
    throw std::invalid_argument("compute_metrics: dimension mismatch");
  Metrics m;
  m.total_utility = res.total_utility();
  for (int c : pre.column_sums())
    if (c == 0) ++m.n_unpreallocated_channels;
  for (std::size_t k = 0; k < pre.n_tenants(); ++k) {
    const int rs = pre.row_sum(k);
    m.n_free_tenant_slots += std::max(0, tenant_quota - rs);
    if (rs == 0) ++m.n_starved_tenants;
  }
  m.t_prealloc = res.timings.prealloc_s;
  m.t_bidgen = res.timings.bidgen_s;
  m.t_solve = res.timings.solve_s;
  return m;
}

/// Independent audit of an allocation result. Returns an empty string when
/// the final assignment is univalent, lies within the preallocation, no
/// tenant exceeded the bid ceiling, and stored utilities match a fresh
/// recomputation exactly.
inline std::string verify_allocation(const Scenario& s, const LinkModel& model, const AllocationResult& res,
                                     std::size_t max_bids_per_tenant = 255) {
  const AssignmentMatrix& a = res.final_assign;
  for (int c : a.column_sums())
    if (c > 1) return "channel assigned to more than one tenant";
  for (std::size_t k = 0; k < a.n_tenants(); ++k) {
    if (!is_subset(a.row(k), res.prealloc_used.assign.row(k))) return "assignment outside the preallocation";
  }
  for (std::size_t n : res.bids_per_tenant)
    if (n > max_bids_per_tenant) return "bid ceiling exceeded";
  RayleighSelectionModel fresh(s, model);
  for (std::size_t k = 0; k < a.n_tenants(); ++k) {
    const double c = fresh.capacity(k, a.row(k));
    if (c != res.per_tenant_capacity[k]) return "capacity mismatch";
    if (utility(c, s.utility_bounds[k]) != res.per_tenant_utility[k]) return "utility mismatch";
  }
  return {};
}

}  // namespace mcca
