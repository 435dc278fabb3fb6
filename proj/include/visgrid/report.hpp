#pragma once

// Artifact writers: trajectory/COI/event CSVs, sweep manifests, dispatch and
// robustness reports, risk tables, eigenvalue output, run manifests, and the
// minimal SVG renderings. All numeric formatting is deterministic so a rerun
// with the same flags produces byte-identical files.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visgrid/case_io.hpp"
#include "visgrid/dispatch.hpp"
#include "visgrid/grid.hpp"
#include "visgrid/igdt.hpp"
#include "visgrid/risk.hpp"
#include "visgrid/sim.hpp"

namespace visgrid {

namespace detail {

inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path);
  return os;
}

}  // namespace detail

inline void write_trajectory_csv(const TrajectoryRecord& traj,
                                 const std::string& path) {
  auto os = detail::open_out(path);
  os << "t,machine,delta_deg,omega_pu,id,iq,vd,vq,te,pg,qg\n";
  for (int s = 0; s < traj.n_samples(); ++s)
    for (int m = 0; m < traj.n_machines(); ++m) {
      os << detail::fmt_g17(traj.t[static_cast<std::size_t>(s)]) << ','
         << traj.machine_ids[static_cast<std::size_t>(m)] << ','
         << detail::fmt_g17(traj.delta_deg(m, s)) << ','
         << detail::fmt_g17(traj.omega(m, s)) << ','
         << detail::fmt_g17(traj.i_d(m, s)) << ','
         << detail::fmt_g17(traj.i_q(m, s)) << ','
         << detail::fmt_g17(traj.v_d(m, s)) << ','
         << detail::fmt_g17(traj.v_q(m, s)) << ','
         << detail::fmt_g17(traj.t_e(m, s)) << ','
         << detail::fmt_g17(traj.p_g(m, s)) << ','
         << detail::fmt_g17(traj.q_g(m, s)) << '\n';
    }
}

inline void write_events_csv(const TrajectoryRecord& traj,
                             const std::string& path) {
  auto os = detail::open_out(path);
  os << "t,event\n";
  for (const auto& ev : traj.events)
    os << detail::fmt_g17(ev.t) << ',' << ev.what << '\n';
}

inline void write_coi_csv(const TrajectoryRecord& traj, const std::string& path) {
  auto os = detail::open_out(path);
  os << "t,coi_pu\n";
  for (int s = 0; s < traj.n_samples(); ++s)
    os << detail::fmt_g17(traj.t[static_cast<std::size_t>(s)]) << ','
       << detail::fmt_g17(traj.coi[static_cast<std::size_t>(s)]) << '\n';
}

inline void write_sweep_manifest(const std::vector<SweepResult>& results,
                                 std::uint64_t seed, const std::string& path) {
  auto os = detail::open_out(path);
  int i = 0;
  for (const auto& res : results) {
    nlohmann::ordered_json j;
    j["scenario"] = i++;
    j["seed"] = seed;
    j["line_id"] = res.scenario.line_id;
    j["duration"] = res.scenario.duration;
    j["location"] = res.scenario.location;
    j["load_scale"] = res.scenario.load_scale;
    j["t_start"] = res.scenario.t_start;
    if (res.failed) {
      j["failed"] = true;
      j["error"] = res.error;
    } else {
      j["failed"] = false;
      j["label"] = res.label.tis_class;
      j["lambda_max"] = res.label.lambda_max;
      j["margin"] = res.label.margin;
    }
    os << j.dump() << '\n';
  }
}

inline void write_dispatch_report(const GridCase& gcase, const DispatchInput& in,
                                  const DispatchSolution& sol,
                                  const std::vector<ConstraintViolation>& viol,
                                  const std::string& path) {
  nlohmann::ordered_json j;
  j["kind"] = "visgrid-dispatch";
  j["input"] = {{"demand", in.demand},
                {"imbalance_up", in.imbalance_up},
                {"imbalance_down", in.imbalance_down},
                {"inertia_requirement", in.m_req},
                {"damping_requirement", in.d_req}};
  nlohmann::ordered_json sgs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < gcase.sgs.size(); ++i)
    sgs.push_back({{"id", gcase.sgs[i].id},
                   {"p", sol.sg_p[i]},
                   {"reserve_up", sol.sg_ru[i]},
                   {"reserve_down", sol.sg_rd[i]}});
  j["sgs"] = sgs;
  nlohmann::ordered_json ibrs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < gcase.ibrs.size(); ++i)
    ibrs.push_back({{"id", gcase.ibrs[i].id},
                    {"p", sol.ibr_p[i]},
                    {"m", sol.ibr_m[i]},
                    {"d", sol.ibr_d[i]}});
  j["ibrs"] = ibrs;
  nlohmann::ordered_json evs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < gcase.ev_fleets.size(); ++i)
    evs.push_back({{"id", gcase.ev_fleets[i].id},
                   {"regulation_up", sol.ev_up[i]},
                   {"regulation_down", sol.ev_down[i]}});
  j["evs"] = evs;
  j["total_cost"] = sol.total_cost;
  j["kkt_residual"] = sol.kkt_residual;
  nlohmann::ordered_json vj = nlohmann::ordered_json::array();
  for (const auto& v : viol)
    vj.push_back({{"constraint", v.name}, {"violation", v.violation}});
  j["violations"] = vj;
  detail::open_out(path) << j.dump(2) << '\n';
}

inline void write_robust_report(const RobustnessResult& res,
                                const std::string& path) {
  nlohmann::ordered_json j;
  j["kind"] = "visgrid-robust";
  j["sigma_star"] = res.sigma_star;
  j["worst_case_cost"] = res.worst_case_cost;
  j["budget"] = res.budget;
  j["binding"] = res.binding;
  j["capped_by_feasibility"] = res.capped_by_feasibility;
  j["dispatch_cost"] = res.robust_dispatch.total_cost;
  nlohmann::ordered_json tr = nlohmann::ordered_json::array();
  for (const auto& step : res.trace)
    tr.push_back({{"sigma", step.sigma},
                  {"cost", step.cost},
                  {"feasible", step.feasible}});
  j["trace"] = tr;
  detail::open_out(path) << j.dump(2) << '\n';
}

inline void write_risk_csv(const GridCase& gcase, const RiskResult& res,
                           const std::string& path) {
  auto os = detail::open_out(path);
  os << "line_id,annual_fault_rate,fault_probability,cct,tail_mass,contribution\n";
  for (std::size_t i = 0; i < gcase.lines.size(); ++i)
    os << gcase.lines[i].id << ','
       << detail::fmt_g17(gcase.lines[i].annual_fault_rate) << ','
       << detail::fmt_g17(res.line_probability[i]) << ','
       << detail::fmt_g17(res.cct[i]) << ','
       << detail::fmt_g17(res.tail_mass[i]) << ','
       << detail::fmt_g17(res.contribution[i]) << '\n';
  os << "theta,,,,," << detail::fmt_g17(res.theta) << '\n';
}

inline void write_eigen_csv(const std::vector<std::complex<double>>& eigs,
                            const std::string& path) {
  auto os = detail::open_out(path);
  os << "re,im\n";
  for (const auto& e : eigs)
    os << detail::fmt_g17(e.real()) << ',' << detail::fmt_g17(e.imag()) << '\n';
}

// Run manifest: enough to reproduce the command byte-for-byte on one
// platform. Deliberately no timestamps.
inline void write_run_manifest(const std::string& command,
                               const std::string& case_path,
                               const GridCase& gcase, std::uint64_t seed,
                               const std::map<std::string, std::string>& flags,
                               const std::vector<std::string>& artifacts,
                               const std::string& path) {
  nlohmann::ordered_json j;
  j["kind"] = "visgrid-run";
  j["command"] = command;
  j["case"] = case_path;
  j["case_hash"] = case_hash(gcase);
  j["seed"] = seed;
  nlohmann::ordered_json fj;
  for (const auto& [k, v] : flags) fj[k] = v;
  j["flags"] = fj;
  j["artifacts"] = artifacts;
  detail::open_out(path) << j.dump(2) << '\n';
}

// ---- minimal SVG renderings ----

namespace detail {

struct SvgFrame {
  double x0, x1, y0, y1;  // data ranges
  static constexpr int w = 640, h = 400, ml = 60, mr = 15, mt = 30, mb = 40;
  double px(double x) const {
    return ml + (x - x0) / (x1 - x0 > 0 ? x1 - x0 : 1.0) * (w - ml - mr);
  }
  double py(double y) const {
    return h - mb - (y - y0) / (y1 - y0 > 0 ? y1 - y0 : 1.0) * (h - mt - mb);
  }
};

inline void svg_header(std::ofstream& os, const SvgFrame& f,
                       const std::string& title, const std::string& xlabel,
                       const std::string& ylabel) {
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << f.w
     << "' height='" << f.h << "' viewBox='0 0 " << f.w << ' ' << f.h
     << "'>\n";
  os << "<rect width='" << f.w << "' height='" << f.h
     << "' fill='white'/>\n";
  os << "<text x='" << f.w / 2 << "' y='18' text-anchor='middle' "
     << "font-family='monospace' font-size='13'>" << title << "</text>\n";
  os << "<line x1='" << f.ml << "' y1='" << f.h - f.mb << "' x2='"
     << f.w - f.mr << "' y2='" << f.h - f.mb
     << "' stroke='black' stroke-width='1'/>\n";
  os << "<line x1='" << f.ml << "' y1='" << f.mt << "' x2='" << f.ml
     << "' y2='" << f.h - f.mb << "' stroke='black' stroke-width='1'/>\n";
  os << "<text x='" << (f.ml + f.w - f.mr) / 2 << "' y='" << f.h - 10
     << "' text-anchor='middle' font-family='monospace' font-size='11'>"
     << xlabel << "</text>\n";
  os << "<text x='14' y='" << (f.mt + f.h - f.mb) / 2
     << "' text-anchor='middle' font-family='monospace' font-size='11' "
     << "transform='rotate(-90 14 " << (f.mt + f.h - f.mb) / 2 << ")'>"
     << ylabel << "</text>\n";
  os << "<text x='" << f.ml << "' y='" << f.h - f.mb + 14
     << "' font-family='monospace' font-size='10'>" << fmt_g6(f.x0)
     << "</text>\n";
  os << "<text x='" << f.w - f.mr << "' y='" << f.h - f.mb + 14
     << "' text-anchor='end' font-family='monospace' font-size='10'>"
     << fmt_g6(f.x1) << "</text>\n";
  os << "<text x='" << f.ml - 4 << "' y='" << f.h - f.mb
     << "' text-anchor='end' font-family='monospace' font-size='10'>"
     << fmt_g6(f.y0) << "</text>\n";
  os << "<text x='" << f.ml - 4 << "' y='" << f.mt + 8
     << "' text-anchor='end' font-family='monospace' font-size='10'>"
     << fmt_g6(f.y1) << "</text>\n";
}

}  // namespace detail

inline void write_svg_series(const std::vector<double>& x,
                             const std::vector<std::vector<double>>& series,
                             const std::vector<std::string>& names,
                             const std::string& title, const std::string& xlabel,
                             const std::string& ylabel, const std::string& path) {
  if (x.empty() || series.empty()) throw Error("svg: empty series");
  detail::SvgFrame f{};
  f.x0 = x.front();
  f.x1 = x.back();
  f.y0 = 1e300;
  f.y1 = -1e300;
  for (const auto& s : series)
    for (const double v : s) {
      f.y0 = std::min(f.y0, v);
      f.y1 = std::max(f.y1, v);
    }
  if (f.y1 - f.y0 < 1e-12) {
    f.y0 -= 1.0;
    f.y1 += 1.0;
  }
  auto os = detail::open_out(path);
  detail::svg_header(os, f, title, xlabel, ylabel);
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};
  for (std::size_t si = 0; si < series.size(); ++si) {
    os << "<polyline fill='none' stroke='" << colors[si % 6]
       << "' stroke-width='1.2' points='";
    for (std::size_t i = 0; i < x.size() && i < series[si].size(); ++i)
      os << detail::fmt_g6(f.px(x[i])) << ',' << detail::fmt_g6(f.py(series[si][i]))
         << ' ';
    os << "'/>\n";
    if (si < names.size())
      os << "<text x='" << f.w - f.mr - 4 << "' y='"
         << f.mt + 14 * static_cast<int>(si + 1)
         << "' text-anchor='end' font-family='monospace' font-size='10' fill='"
         << colors[si % 6] << "'>" << names[si] << "</text>\n";
  }
  os << "</svg>\n";
}

inline void write_svg_scatter(const std::vector<std::complex<double>>& pts,
                              const std::string& title, const std::string& path) {
  if (pts.empty()) throw Error("svg: empty scatter");
  detail::SvgFrame f{};
  f.x0 = f.y0 = 1e300;
  f.x1 = f.y1 = -1e300;
  for (const auto& p : pts) {
    f.x0 = std::min(f.x0, p.real());
    f.x1 = std::max(f.x1, p.real());
    f.y0 = std::min(f.y0, p.imag());
    f.y1 = std::max(f.y1, p.imag());
  }
  const double padx = (f.x1 - f.x0 < 1e-12) ? 1.0 : 0.05 * (f.x1 - f.x0);
  const double pady = (f.y1 - f.y0 < 1e-12) ? 1.0 : 0.05 * (f.y1 - f.y0);
  f.x0 -= padx;
  f.x1 += padx;
  f.y0 -= pady;
  f.y1 += pady;
  auto os = detail::open_out(path);
  detail::svg_header(os, f, title, "Re", "Im");
  if (f.x0 < 0.0 && f.x1 > 0.0)
    os << "<line x1='" << detail::fmt_g6(f.px(0.0)) << "' y1='" << f.mt
       << "' x2='" << detail::fmt_g6(f.px(0.0)) << "' y2='" << f.h - f.mb
       << "' stroke='#999' stroke-dasharray='4 3'/>\n";
  for (const auto& p : pts)
    os << "<circle cx='" << detail::fmt_g6(f.px(p.real())) << "' cy='"
       << detail::fmt_g6(f.py(p.imag())) << "' r='3' fill='#d62728'/>\n";
  os << "</svg>\n";
}

}  // namespace visgrid
