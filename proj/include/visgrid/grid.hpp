#pragma once

// Static grid description: buses, lines, synchronous generators, inverter-based
// resources modelled as virtual synchronous machines, EV regulation fleets,
// per-bus demand and the zonal reserve/inertia/damping requirements.
// All electrical quantities are per-unit on base_power; money is unscaled $.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace visgrid {

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

using BusId = int;

struct Line {
  int id = 0;
  BusId from_bus = 0;
  BusId to_bus = 0;
  double reactance = 0.0;      // pu, > 0
  double flow_min = -1e9;      // pu
  double flow_max = 1e9;       // pu
  double annual_fault_rate = 0.0;  // faults/year
  int in_service = 1;          // 0/1
};

struct SgParams {
  std::string id;
  BusId bus = 0;
  double inertia_h = 0.0;      // s
  double damping = 0.0;        // pu torque per pu speed deviation
  double xd_transient = 0.0;   // pu
  double p_min = 0.0;
  double p_max = 0.0;
  double ramp_up = 1e9;        // pu / 10 min
  double ramp_down = 1e9;
  double c0 = 0.0;             // $
  double c1 = 0.0;             // $/pu h
  double c2 = 0.0;             // $/pu^2 h
  double c_res_up = 0.0;       // $/pu
  double c_res_down = 0.0;     // $/pu
  double prev_output = 0.0;    // pu
  double mvar_rating = 0.0;    // MVar, informational
  double v_set = 1.0;          // terminal voltage setpoint, pu
};

struct IbrParams {
  std::string id;
  BusId bus = 0;
  double p_max = 0.0;
  double m_max = 0.0;          // virtual inertia cap, pu s
  double d_max = 0.0;          // virtual damping cap, pu
  double coupling_x = 0.1;     // reactance between internal node and bus, pu
  double c3 = 0.0;             // $
  double c4 = 0.0;             // $/pu h
  double c5 = 0.0;             // $/pu^2 h
  double c6_m = 0.0;           // inertia price, $/pu s
  double c7_d = 0.0;           // damping price, $/pu
  double v_set = 1.0;
};

struct EvFleetParams {
  std::string id;
  BusId bus = 0;
  double reg_up_max = 0.0;     // pu
  double reg_down_max = 0.0;   // pu
  double price_up = 0.0;       // $/pu
  double price_down = 0.0;     // $/pu
};

struct GridCase {
  std::string name;
  std::vector<BusId> buses;
  double base_power = 100.0;   // MVA
  double nominal_freq = 60.0;  // Hz
  double fault_conductance = 1e6;  // shunt applied at the fault point, pu
  std::optional<BusId> slack_bus;  // case override; default largest SG by p_max
  std::vector<Line> lines;
  std::vector<SgParams> sgs;
  std::vector<IbrParams> ibrs;
  std::vector<EvFleetParams> ev_fleets;
  std::map<BusId, double> loads;   // pu demand per bus, >= 0
  double imbalance_up = 0.0;       // zonal up imbalance to cover, pu
  double imbalance_down = 0.0;
  double inertia_requirement = 0.0;   // pu s
  double damping_requirement = 0.0;   // pu

  int bus_index(BusId b) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
      if (buses[i] == b) return static_cast<int>(i);
    throw Error("unknown bus id " + std::to_string(b));
  }

  bool has_bus(BusId b) const {
    for (BusId x : buses)
      if (x == b) return true;
    return false;
  }

  int n_buses() const { return static_cast<int>(buses.size()); }
  int n_lines() const { return static_cast<int>(lines.size()); }
  int n_machines() const { return static_cast<int>(sgs.size() + ibrs.size()); }

  double total_load() const {
    double s = 0.0;
    for (const auto& [b, p] : loads) s += p;
    return s;
  }

  // Reference bus for GSF and power flow.
  BusId resolve_slack() const {
    if (slack_bus) return *slack_bus;
    if (sgs.empty()) throw Error("case has no SG to act as slack bus");
    const SgParams* best = &sgs.front();
    for (const auto& g : sgs)
      if (g.p_max > best->p_max) best = &g;
    return best->bus;
  }
};

// Structural and range invariants. Throws Error naming the offending field.
inline void validate(const GridCase& c) {
  if (c.base_power <= 0.0) throw Error("system.base_mva must be > 0");
  if (c.nominal_freq <= 0.0) throw Error("system.nominal_freq_hz must be > 0");
  if (c.buses.empty()) throw Error("case declares no buses");
  for (const auto& l : c.lines) {
    const std::string tag = "line " + std::to_string(l.id);
    if (!c.has_bus(l.from_bus) || !c.has_bus(l.to_bus))
      throw Error(tag + ": endpoint is not a declared bus");
    if (l.reactance <= 0.0) throw Error(tag + ": reactance must be > 0");
    if (l.flow_min > l.flow_max) throw Error(tag + ": flow_min > flow_max");
    if (l.annual_fault_rate < 0.0) throw Error(tag + ": fault_rate must be >= 0");
    if (l.in_service != 0 && l.in_service != 1)
      throw Error(tag + ": status must be 0 or 1");
  }
  for (const auto& g : c.sgs) {
    const std::string tag = "sg " + g.id;
    if (!c.has_bus(g.bus)) throw Error(tag + ": bus is not declared");
    if (g.inertia_h <= 0.0) throw Error(tag + ": inertia H must be > 0");
    if (g.xd_transient <= 0.0) throw Error(tag + ": transient reactance must be > 0");
    if (g.p_min > g.p_max) throw Error(tag + ": p_min > p_max");
    if (g.c2 < 0.0) throw Error(tag + ": c2 must be >= 0 (convexity)");
  }
  for (const auto& r : c.ibrs) {
    const std::string tag = "ibr " + r.id;
    if (!c.has_bus(r.bus)) throw Error(tag + ": bus is not declared");
    if (r.p_max < 0.0 || r.m_max < 0.0 || r.d_max < 0.0)
      throw Error(tag + ": device maxima must be >= 0");
    if (r.coupling_x <= 0.0) throw Error(tag + ": coupling reactance must be > 0");
    if (r.c5 < 0.0) throw Error(tag + ": c5 must be >= 0 (convexity)");
  }
  for (const auto& e : c.ev_fleets) {
    const std::string tag = "ev " + e.id;
    if (!c.has_bus(e.bus)) throw Error(tag + ": bus is not declared");
    if (e.reg_up_max < 0.0 || e.reg_down_max < 0.0)
      throw Error(tag + ": regulation maxima must be >= 0");
    if (e.price_up < 0.0 || e.price_down < 0.0)
      throw Error(tag + ": prices must be >= 0");
  }
  for (const auto& [b, p] : c.loads) {
    if (!c.has_bus(b)) throw Error("load bus " + std::to_string(b) + " is not declared");
    if (p < 0.0) throw Error("load at bus " + std::to_string(b) + " must be >= 0");
  }
  double m_cap = 0.0, d_cap = 0.0;
  for (const auto& r : c.ibrs) {
    m_cap += r.m_max;
    d_cap += r.d_max;
  }
  if (c.inertia_requirement > m_cap + 1e-12)
    throw Error("requirements.m_req exceeds total IBR virtual inertia capability");
  if (c.damping_requirement > d_cap + 1e-12)
    throw Error("requirements.d_req exceeds total IBR virtual damping capability");
  if (c.slack_bus && !c.has_bus(*c.slack_bus))
    throw Error("system.slack_bus is not a declared bus");
}

// Machine view used by the dynamics and feature code: SGs first, then IBRs,
// both in case-file order. IBR inertia/damping come from the dispatch.
struct MachineRef {
  enum class Kind { Sg, Ibr };
  Kind kind;
  int index;        // index within case.sgs or case.ibrs
  std::string id;
  BusId bus;
  double xd;        // coupling reactance to the network
};

inline std::vector<MachineRef> machine_list(const GridCase& c) {
  std::vector<MachineRef> out;
  out.reserve(c.sgs.size() + c.ibrs.size());
  for (std::size_t i = 0; i < c.sgs.size(); ++i)
    out.push_back({MachineRef::Kind::Sg, static_cast<int>(i), c.sgs[i].id,
                   c.sgs[i].bus, c.sgs[i].xd_transient});
  for (std::size_t i = 0; i < c.ibrs.size(); ++i)
    out.push_back({MachineRef::Kind::Ibr, static_cast<int>(i), c.ibrs[i].id,
                   c.ibrs[i].bus, c.ibrs[i].coupling_x});
  return out;
}

}  // namespace visgrid
