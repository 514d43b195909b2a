#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "mcca/assignment.hpp"
#include "mcca/link_model.hpp"
#include "mcca/pipeline.hpp"
#include "mcca/scenario.hpp"

// JSON forms of the public types. Reals are written with round-trip
// precision, so a scenario read back is identical to the one written.

namespace mcca {

using Json = nlohmann::json;

inline void to_json(Json& j, const Point& p) { j = Json::array({p.x, p.y}); }
inline void from_json(const Json& j, Point& p) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("point must be [x, y]");
  p.x = j.at(0).get<double>();
  p.y = j.at(1).get<double>();
}

inline void to_json(Json& j, const UtilityBounds& u) { j = Json{{"c_min", u.c_min}, {"c_max", u.c_max}}; }
inline void from_json(const Json& j, UtilityBounds& u) {
  u.c_min = j.at("c_min").get<double>();
  u.c_max = j.at("c_max").get<double>();
}

inline void to_json(Json& j, const LinkModel& m) {
  j = Json{{"tx_power_dbm", m.tx_power_dbm},     {"noise_dbm", m.noise_dbm},
           {"path_loss_exponent", m.path_loss_exponent}, {"ref_distance_m", m.ref_distance_m},
           {"bandwidth_hz", m.bandwidth_hz},     {"outage_target", m.outage_target},
           {"min_distance_m", m.min_distance_m}};
}

/// Keys absent from `j` keep their default; unknown keys are rejected.
inline void from_json(const Json& j, LinkModel& m) {
  if (!j.is_object()) throw std::invalid_argument("link model must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const double v = value.get<double>();
    if (key == "tx_power_dbm") m.tx_power_dbm = v;
    else if (key == "noise_dbm") m.noise_dbm = v;
    else if (key == "path_loss_exponent") m.path_loss_exponent = v;
    else if (key == "ref_distance_m") m.ref_distance_m = v;
    else if (key == "bandwidth_hz") m.bandwidth_hz = v;
    else if (key == "outage_target") m.outage_target = v;
    else if (key == "min_distance_m") m.min_distance_m = v;
    else throw std::invalid_argument("unknown link model key: " + key);
  }
  m.validate();
}

inline void to_json(Json& j, const Scenario& s) {
  j = Json::object();
  j["setup"] = s.setup ? Json(std::string(to_string(*s.setup))) : Json(nullptr);
  j["seed"] = s.seed;
  j["width_m"] = s.width_m;
  j["height_m"] = s.height_m;
  j["tenant_positions"] = s.tenant_positions;
  j["bs_positions"] = s.bs_positions;
  j["channels_per_bs"] = s.channels_per_bs;
  j["channel_owner"] = s.channel_owner;
  Json fading = Json::array();
  for (std::size_t k = 0; k < s.n_tenants(); ++k) {
    Json row = Json::array();
    for (std::size_t i = 0; i < s.n_bs(); ++i) row.push_back(s.k_db(k, i));
    fading.push_back(std::move(row));
  }
  j["fading_db"] = std::move(fading);
  j["utility_bounds"] = s.utility_bounds;
}

inline void from_json(const Json& j, Scenario& s) {
  s = Scenario{};
  if (j.contains("setup") && !j.at("setup").is_null()) s.setup = parse_setup(j.at("setup").get<std::string>());
  s.seed = j.value("seed", std::uint64_t{0});
  s.width_m = j.at("width_m").get<double>();
  s.height_m = j.at("height_m").get<double>();
  s.tenant_positions = j.at("tenant_positions").get<std::vector<Point>>();
  s.bs_positions = j.at("bs_positions").get<std::vector<Point>>();
  s.channels_per_bs = j.at("channels_per_bs").get<std::vector<int>>();
  s.channel_owner = j.at("channel_owner").get<std::vector<int>>();
  const auto& fading = j.at("fading_db");
  if (fading.size() != s.n_tenants()) throw std::invalid_argument("fading_db must have one row per tenant");
  for (const auto& row : fading) {
    if (row.size() != s.n_bs()) throw std::invalid_argument("fading_db rows must have one entry per BS");
    for (const auto& v : row) s.fading_db.push_back(v.get<double>());
  }
  s.utility_bounds = j.at("utility_bounds").get<std::vector<UtilityBounds>>();
  s.validate();
}

inline void to_json(Json& j, const AssignmentMatrix& a) {
  Json rows = Json::array();
  for (std::size_t k = 0; k < a.n_tenants(); ++k) rows.push_back(to_indices(a.row(k)));
  j = Json{{"n_channels", a.n_channels()}, {"rows", std::move(rows)}};
}

inline void from_json(const Json& j, AssignmentMatrix& a) {
  const auto& rows = j.at("rows");
  a = AssignmentMatrix(rows.size(), j.at("n_channels").get<std::size_t>());
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (const auto& c : rows[k]) a.set(k, c.get<std::size_t>());
}

inline void to_json(Json& j, const MethodSpec& m) {
  j = Json{{"method", std::string(to_string(m.method))}, {"max_channels", m.max_channels}};
  if (m.method == Method::M2MGS) {
    j["q_t"] = m.quotas.q_tenant;
    j["q_ch"] = m.quotas.q_channel;
  }
  if (m.method == Method::RCA) {
    j["q_bs"] = m.rca.q_bs;
    j["n_chpbs"] = m.rca.n_chpbs;
    j["min_ch"] = m.rca.min_channels;
  }
}

inline void from_json(const Json& j, MethodSpec& m) {
  m = MethodSpec{};
  m.method = parse_method(j.at("method").get<std::string>());
  m.max_channels = j.value("max_channels", kDefaultMaxChannels);
  m.quotas.q_tenant = j.value("q_t", m.quotas.q_tenant);
  m.quotas.q_channel = j.value("q_ch", m.quotas.q_channel);
  m.rca.q_bs = j.value("q_bs", m.rca.q_bs);
  m.rca.n_chpbs = j.value("n_chpbs", m.rca.n_chpbs);
  m.rca.min_channels = j.value("min_ch", m.rca.min_channels);
  m.rca.max_channels = m.max_channels;
  m.rca.max_bs_considered = m.max_channels;
  m.validate();
}

inline void to_json(Json& j, const AllocationResult& r) {
  j = Json::object();
  j["status"] = std::string(to_string(r.status));
  j["solver_optimal"] = r.solver_optimal;
  j["infeasible_tenant"] = r.infeasible_tenant ? Json(*r.infeasible_tenant) : Json(nullptr);
  j["prealloc_method"] = std::string(to_string(r.prealloc_used.method));
  j["prealloc"] = r.prealloc_used.assign;
  j["final_assign"] = r.final_assign;
  j["per_tenant_capacity"] = r.per_tenant_capacity;
  j["per_tenant_utility"] = r.per_tenant_utility;
  j["total_utility"] = r.total_utility();
  j["bids_per_tenant"] = r.bids_per_tenant;
  j["timings_s"] = Json{{"prealloc", r.timings.prealloc_s}, {"bidgen", r.timings.bidgen_s}, {"solve", r.timings.solve_s}};
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace mcca
