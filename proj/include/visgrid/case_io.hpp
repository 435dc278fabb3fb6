#pragma once

// JSON case files -> GridCase. Schema documented in docs/case-schema.md.
// Parse errors and invariant violations both surface as visgrid::Error with
// the offending section/field named.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "visgrid/grid.hpp"

namespace visgrid {

namespace detail {

using json = nlohmann::json;

template <typename T>
T field(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw Error(ctx + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ctx + ": field '" + key + "': " + e.what());
  }
}

template <typename T>
T field_or(const json& j, const std::string& key, T def, const std::string& ctx) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ctx + ": field '" + key + "': " + e.what());
  }
}

}  // namespace detail

inline GridCase parse_case(const nlohmann::json& j) {
  using detail::field;
  using detail::field_or;
  using nlohmann::json;

  GridCase c;
  if (!j.contains("system")) throw Error("case: missing 'system' section");
  const json& sys = j.at("system");
  c.name = field_or<std::string>(sys, "name", "unnamed", "system");
  c.base_power = field_or<double>(sys, "base_mva", 100.0, "system");
  c.nominal_freq = field_or<double>(sys, "nominal_freq_hz", 60.0, "system");
  c.fault_conductance = field_or<double>(sys, "fault_conductance_pu", 1e6, "system");
  if (sys.contains("slack_bus")) c.slack_bus = field<int>(sys, "slack_bus", "system");

  if (!j.contains("buses")) throw Error("case: missing 'buses' section");
  for (const auto& b : j.at("buses")) {
    if (!b.is_number_integer()) throw Error("buses: entries must be integers");
    c.buses.push_back(b.get<int>());
  }
  for (std::size_t i = 0; i < c.buses.size(); ++i)
    for (std::size_t k = i + 1; k < c.buses.size(); ++k)
      if (c.buses[i] == c.buses[k])
        throw Error("buses: duplicate bus id " + std::to_string(c.buses[i]));

  for (const auto& lj : j.value("lines", json::array())) {
    Line l;
    const std::string ctx = "lines[" + std::to_string(c.lines.size()) + "]";
    l.id = field<int>(lj, "id", ctx);
    l.from_bus = field<int>(lj, "from", ctx);
    l.to_bus = field<int>(lj, "to", ctx);
    l.reactance = field<double>(lj, "x_pu", ctx);
    if (lj.contains("rate_pu")) {
      const double r = field<double>(lj, "rate_pu", ctx);
      l.flow_min = -r;
      l.flow_max = r;
    }
    l.flow_min = field_or<double>(lj, "flow_min_pu", l.flow_min, ctx);
    l.flow_max = field_or<double>(lj, "flow_max_pu", l.flow_max, ctx);
    l.annual_fault_rate = field_or<double>(lj, "fault_rate_per_year", 0.0, ctx);
    l.in_service = field_or<int>(lj, "status", 1, ctx);
    c.lines.push_back(l);
  }
  for (std::size_t i = 0; i < c.lines.size(); ++i)
    for (std::size_t k = i + 1; k < c.lines.size(); ++k)
      if (c.lines[i].id == c.lines[k].id)
        throw Error("lines: duplicate line id " + std::to_string(c.lines[i].id));

  for (const auto& gj : j.value("sgs", json::array())) {
    SgParams g;
    const std::string ctx = "sgs[" + std::to_string(c.sgs.size()) + "]";
    g.id = field<std::string>(gj, "id", ctx);
    g.bus = field<int>(gj, "bus", ctx);
    g.inertia_h = field<double>(gj, "h_s", ctx);
    g.damping = field_or<double>(gj, "d_pu", 0.0, ctx);
    g.xd_transient = field<double>(gj, "xd_t_pu", ctx);
    g.p_min = field_or<double>(gj, "p_min_pu", 0.0, ctx);
    g.p_max = field<double>(gj, "p_max_pu", ctx);
    g.ramp_up = field_or<double>(gj, "ramp_up_pu", 1e9, ctx);
    g.ramp_down = field_or<double>(gj, "ramp_down_pu", 1e9, ctx);
    g.c0 = field_or<double>(gj, "c0", 0.0, ctx);
    g.c1 = field_or<double>(gj, "c1", 0.0, ctx);
    g.c2 = field_or<double>(gj, "c2", 0.0, ctx);
    g.c_res_up = field_or<double>(gj, "c_res_up", 0.0, ctx);
    g.c_res_down = field_or<double>(gj, "c_res_down", 0.0, ctx);
    g.prev_output = field_or<double>(gj, "prev_output_pu", 0.0, ctx);
    g.mvar_rating = field_or<double>(gj, "mvar_rating", 0.0, ctx);
    g.v_set = field_or<double>(gj, "v_set_pu", 1.0, ctx);
    c.sgs.push_back(g);
  }

  for (const auto& rj : j.value("ibrs", json::array())) {
    IbrParams r;
    const std::string ctx = "ibrs[" + std::to_string(c.ibrs.size()) + "]";
    r.id = field<std::string>(rj, "id", ctx);
    r.bus = field<int>(rj, "bus", ctx);
    r.p_max = field<double>(rj, "p_max_pu", ctx);
    r.m_max = field<double>(rj, "m_max_pu_s", ctx);
    r.d_max = field<double>(rj, "d_max_pu", ctx);
    r.coupling_x = field_or<double>(rj, "coupling_x_pu", 0.1, ctx);
    r.c3 = field_or<double>(rj, "c3", 0.0, ctx);
    r.c4 = field_or<double>(rj, "c4", 0.0, ctx);
    r.c5 = field_or<double>(rj, "c5", 0.0, ctx);
    r.c6_m = field_or<double>(rj, "c6_m", 0.0, ctx);
    r.c7_d = field_or<double>(rj, "c7_d", 0.0, ctx);
    r.v_set = field_or<double>(rj, "v_set_pu", 1.0, ctx);
    c.ibrs.push_back(r);
  }

  for (const auto& ej : j.value("evs", json::array())) {
    EvFleetParams e;
    const std::string ctx = "evs[" + std::to_string(c.ev_fleets.size()) + "]";
    e.id = field<std::string>(ej, "id", ctx);
    e.bus = field<int>(ej, "bus", ctx);
    e.reg_up_max = field<double>(ej, "reg_up_max_pu", ctx);
    e.reg_down_max = field<double>(ej, "reg_down_max_pu", ctx);
    e.price_up = field_or<double>(ej, "price_up", 0.0, ctx);
    e.price_down = field_or<double>(ej, "price_down", 0.0, ctx);
    c.ev_fleets.push_back(e);
  }

  const json loads_obj = j.value("loads", json::object());
  for (const auto& [key, val] : loads_obj.items()) {
    int bus = 0;
    try {
      bus = std::stoi(key);
    } catch (...) {
      throw Error("loads: key '" + key + "' is not a bus id");
    }
    if (!val.is_number()) throw Error("loads: value at bus " + key + " must be a number");
    c.loads[bus] = val.get<double>();
  }

  if (j.contains("requirements")) {
    const json& rq = j.at("requirements");
    c.imbalance_up = field_or<double>(rq, "imbalance_up_pu", 0.0, "requirements");
    c.imbalance_down = field_or<double>(rq, "imbalance_down_pu", 0.0, "requirements");
    c.inertia_requirement = field_or<double>(rq, "m_req_pu_s", 0.0, "requirements");
    c.damping_requirement = field_or<double>(rq, "d_req_pu", 0.0, "requirements");
  }

  validate(c);
  return c;
}

inline GridCase load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open case file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("case file " + path + ": " + e.what());
  }
  try {
    return parse_case(j);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

// FNV-1a over a canonical rendering of the case, for run manifests.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string case_fingerprint(const GridCase& c) {
  std::ostringstream os;
  os.precision(17);
  os << c.name << '|' << c.base_power << '|' << c.nominal_freq << '|'
     << c.fault_conductance << '|';
  if (c.slack_bus) os << *c.slack_bus;
  os << '|';
  for (BusId b : c.buses) os << b << ',';
  os << '|';
  for (const auto& l : c.lines)
    os << l.id << ':' << l.from_bus << '>' << l.to_bus << ':' << l.reactance << ':'
       << l.flow_min << ':' << l.flow_max << ':' << l.annual_fault_rate << ':'
       << l.in_service << ';';
  os << '|';
  for (const auto& g : c.sgs)
    os << g.id << ':' << g.bus << ':' << g.inertia_h << ':' << g.damping << ':'
       << g.xd_transient << ':' << g.p_min << ':' << g.p_max << ':' << g.ramp_up << ':'
       << g.ramp_down << ':' << g.c0 << ':' << g.c1 << ':' << g.c2 << ':' << g.c_res_up
       << ':' << g.c_res_down << ':' << g.prev_output << ':' << g.v_set << ';';
  os << '|';
  for (const auto& r : c.ibrs)
    os << r.id << ':' << r.bus << ':' << r.p_max << ':' << r.m_max << ':' << r.d_max
       << ':' << r.coupling_x << ':' << r.c3 << ':' << r.c4 << ':' << r.c5 << ':'
       << r.c6_m << ':' << r.c7_d << ':' << r.v_set << ';';
  os << '|';
  for (const auto& e : c.ev_fleets)
    os << e.id << ':' << e.bus << ':' << e.reg_up_max << ':' << e.reg_down_max << ':'
       << e.price_up << ':' << e.price_down << ';';
  os << '|';
  for (const auto& [b, p] : c.loads) os << b << '=' << p << ';';
  os << '|' << c.imbalance_up << ':' << c.imbalance_down << ':'
     << c.inertia_requirement << ':' << c.damping_requirement;
  return os.str();
}

inline std::string case_hash(const GridCase& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(case_fingerprint(c))));
  return std::string(buf);
}

}  // namespace visgrid
