#pragma once

// Virtual-inertia economic dispatch: a single-interval convex QP over SG
// energy and reserves, IBR energy plus virtual inertia/damping, and EV
// regulation, with zonal balance equalities, capacity/ramp boxes, and DC line
// flow limits expressed through generation shift factors.

#include <map>
#include <string>
#include <vector>

#include "visgrid/grid.hpp"
#include "visgrid/network.hpp"
#include "visgrid/qp.hpp"

namespace visgrid {

struct DispatchInput {
  double demand = 0.0;          // total P_d, pu
  double imbalance_up = 0.0;    // zonal up imbalance to cover
  double imbalance_down = 0.0;
  double m_req = 0.0;
  double d_req = 0.0;
  std::vector<double> prev_output;     // per SG, case order
  std::map<BusId, double> bus_demand;  // per-bus demand seen by the flow rows

  static DispatchInput from_case(const GridCase& c) {
    DispatchInput in;
    in.demand = c.total_load();
    in.imbalance_up = c.imbalance_up;
    in.imbalance_down = c.imbalance_down;
    in.m_req = c.inertia_requirement;
    in.d_req = c.damping_requirement;
    in.prev_output.reserve(c.sgs.size());
    for (const auto& g : c.sgs) in.prev_output.push_back(g.prev_output);
    in.bus_demand = c.loads;
    return in;
  }

  // Same case at a different total demand: bus demands scale proportionally.
  DispatchInput with_demand(double new_demand) const {
    DispatchInput in = *this;
    const double ratio = demand > 0.0 ? new_demand / demand : 0.0;
    for (auto& [bus, d] : in.bus_demand) d *= ratio;
    in.demand = new_demand;
    return in;
  }
};

struct DispatchSolution {
  std::vector<double> sg_p, sg_ru, sg_rd;
  std::vector<double> ibr_p, ibr_m, ibr_d;
  std::vector<double> ev_up, ev_down;
  double total_cost = 0.0;
  double kkt_residual = 0.0;

  // Scheduled active output per machine in machine_list order (SGs then IBRs).
  std::vector<double> machine_p() const {
    std::vector<double> p = sg_p;
    p.insert(p.end(), ibr_p.begin(), ibr_p.end());
    return p;
  }
};

// Extra row names ride along for the violation report.
struct VisProblem {
  QpProblem qp;
  std::vector<std::string> row_names_eq;
  std::vector<std::string> row_names_in;
};

namespace detail {

inline void check_inspection_feasible(const GridCase& c, const DispatchInput& in) {
  double lo_sum = 0.0, hi_sum = 0.0, ru_cap = 0.0, rd_cap = 0.0;
  for (std::size_t g = 0; g < c.sgs.size(); ++g) {
    const auto& sg = c.sgs[g];
    const double prev = g < in.prev_output.size() ? in.prev_output[g] : sg.prev_output;
    const double lo = std::max({0.0, sg.p_min, prev - sg.ramp_down});
    const double hi = std::min(sg.p_max, prev + sg.ramp_up);
    if (lo > hi + 1e-12)
      throw Error("dispatch infeasible: sg " + sg.id + " has empty output interval");
    lo_sum += lo;
    hi_sum += hi;
    ru_cap += std::max(0.0, sg.p_max - lo);
    rd_cap += std::max(0.0, hi - sg.p_min);
  }
  double ibr_cap = 0.0;
  for (const auto& r : c.ibrs) ibr_cap += r.p_max;
  double ev_up = 0.0, ev_down = 0.0;
  for (const auto& e : c.ev_fleets) {
    ev_up += e.reg_up_max;
    ev_down += e.reg_down_max;
  }
  if (hi_sum + ibr_cap < in.demand - 1e-9)
    throw Error("dispatch infeasible: demand " + std::to_string(in.demand) +
                " exceeds dispatchable capacity " + std::to_string(hi_sum + ibr_cap));
  if (lo_sum > in.demand + 1e-9)
    throw Error("dispatch infeasible: SG minimum output " + std::to_string(lo_sum) +
                " exceeds demand " + std::to_string(in.demand));
  if (in.imbalance_up > ru_cap + ev_up + 1e-9)
    throw Error("dispatch infeasible: up imbalance exceeds total up-regulation capability");
  if (in.imbalance_down > rd_cap + ev_down + 1e-9)
    throw Error("dispatch infeasible: down imbalance exceeds total down-regulation capability");
  double m_cap = 0.0, d_cap = 0.0;
  for (const auto& r : c.ibrs) {
    m_cap += r.m_max;
    d_cap += r.d_max;
  }
  if (in.m_req > m_cap + 1e-9)
    throw Error("dispatch infeasible: inertia requirement exceeds IBR capability");
  if (in.d_req > d_cap + 1e-9)
    throw Error("dispatch infeasible: damping requirement exceeds IBR capability");
}

}  // namespace detail

// Variable order: per SG (P, RU, RD), per IBR (P, M, D), per EV (up, down).
inline VisProblem build_vis_problem(const GridCase& c, const DispatchInput& in) {
  detail::check_inspection_feasible(c, in);
  const int ng = static_cast<int>(c.sgs.size());
  const int ni = static_cast<int>(c.ibrs.size());
  const int ne = static_cast<int>(c.ev_fleets.size());
  const int n = 3 * ng + 3 * ni + 2 * ne;
  const int off_ibr = 3 * ng;
  const int off_ev = 3 * ng + 3 * ni;

  VisProblem vp;
  QpProblem& qp = vp.qp;
  qp.q = Vec::Zero(n);
  qp.c = Vec::Zero(n);
  qp.c0 = 0.0;
  qp.var_names.resize(static_cast<std::size_t>(n));
  for (int g = 0; g < ng; ++g) {
    const auto& sg = c.sgs[static_cast<std::size_t>(g)];
    qp.var_names[static_cast<std::size_t>(3 * g + 0)] = "P[" + sg.id + "]";
    qp.var_names[static_cast<std::size_t>(3 * g + 1)] = "RU[" + sg.id + "]";
    qp.var_names[static_cast<std::size_t>(3 * g + 2)] = "RD[" + sg.id + "]";
    qp.q(3 * g) = sg.c2;
    qp.c(3 * g) = sg.c1;
    qp.c(3 * g + 1) = sg.c_res_up;
    qp.c(3 * g + 2) = sg.c_res_down;
    qp.c0 += sg.c0;
  }
  for (int r = 0; r < ni; ++r) {
    const auto& ibr = c.ibrs[static_cast<std::size_t>(r)];
    qp.var_names[static_cast<std::size_t>(off_ibr + 3 * r + 0)] = "P[" + ibr.id + "]";
    qp.var_names[static_cast<std::size_t>(off_ibr + 3 * r + 1)] = "M[" + ibr.id + "]";
    qp.var_names[static_cast<std::size_t>(off_ibr + 3 * r + 2)] = "D[" + ibr.id + "]";
    qp.q(off_ibr + 3 * r) = ibr.c5;
    qp.c(off_ibr + 3 * r) = ibr.c4;
    qp.c(off_ibr + 3 * r + 1) = ibr.c6_m;
    qp.c(off_ibr + 3 * r + 2) = ibr.c7_d;
    qp.c0 += ibr.c3;
  }
  for (int e = 0; e < ne; ++e) {
    const auto& ev = c.ev_fleets[static_cast<std::size_t>(e)];
    qp.var_names[static_cast<std::size_t>(off_ev + 2 * e + 0)] = "EVU[" + ev.id + "]";
    qp.var_names[static_cast<std::size_t>(off_ev + 2 * e + 1)] = "EVD[" + ev.id + "]";
    qp.c(off_ev + 2 * e) = ev.price_up;
    qp.c(off_ev + 2 * e + 1) = ev.price_down;
  }

  // Five balance equalities: up reserve, down reserve, energy, inertia, damping.
  qp.a_eq = Mat::Zero(5, n);
  qp.b_eq = Vec(5);
  for (int g = 0; g < ng; ++g) {
    qp.a_eq(0, 3 * g + 1) = 1.0;
    qp.a_eq(1, 3 * g + 2) = 1.0;
    qp.a_eq(2, 3 * g) = 1.0;
  }
  for (int r = 0; r < ni; ++r) {
    qp.a_eq(2, off_ibr + 3 * r) = 1.0;
    qp.a_eq(3, off_ibr + 3 * r + 1) = 1.0;
    qp.a_eq(4, off_ibr + 3 * r + 2) = 1.0;
  }
  for (int e = 0; e < ne; ++e) {
    qp.a_eq(0, off_ev + 2 * e) = 1.0;
    qp.a_eq(1, off_ev + 2 * e + 1) = 1.0;
  }
  qp.b_eq << in.imbalance_up, in.imbalance_down, in.demand, in.m_req, in.d_req;
  vp.row_names_eq = {"up-imbalance balance", "down-imbalance balance", "power balance",
                     "inertia balance", "damping balance"};

  const int m_lines = c.n_lines();
  const int mi = 4 * ng + 2 * m_lines + 2 * ne + 2 * ni + n + ni;
  qp.a_in = Mat::Zero(mi, n);
  qp.b_in = Vec::Zero(mi);
  vp.row_names_in.resize(static_cast<std::size_t>(mi));
  int row = 0;
  auto add_name = [&](int r2, const std::string& s) {
    vp.row_names_in[static_cast<std::size_t>(r2)] = s;
  };
  for (int g = 0; g < ng; ++g) {
    const auto& sg = c.sgs[static_cast<std::size_t>(g)];
    const double prev = static_cast<std::size_t>(g) < in.prev_output.size()
                            ? in.prev_output[static_cast<std::size_t>(g)]
                            : sg.prev_output;
    qp.a_in(row, 3 * g) = 1.0;
    qp.a_in(row, 3 * g + 1) = 1.0;
    qp.b_in(row) = sg.p_max;
    add_name(row++, "capacity+up-reserve " + sg.id);
    qp.a_in(row, 3 * g) = -1.0;
    qp.a_in(row, 3 * g + 2) = 1.0;
    qp.b_in(row) = -sg.p_min;
    add_name(row++, "minimum-output-with-down-reserve " + sg.id);
    qp.a_in(row, 3 * g) = 1.0;
    qp.b_in(row) = prev + sg.ramp_up;
    add_name(row++, "ramp-up " + sg.id);
    qp.a_in(row, 3 * g) = -1.0;
    qp.b_in(row) = sg.ramp_down - prev;
    add_name(row++, "ramp-down " + sg.id);
  }
  if (m_lines) {
    Mat gsf = compute_gsf(c);
    for (int k = 0; k < m_lines; ++k) {
      const Line& l = c.lines[static_cast<std::size_t>(k)];
      double fixed = 0.0;  // flow contribution of the (negative) demand injections
      for (const auto& [bus, d] : in.bus_demand) fixed -= gsf(k, c.bus_index(bus)) * d;
      for (int g = 0; g < ng; ++g)
        qp.a_in(row, 3 * g) = gsf(k, c.bus_index(c.sgs[static_cast<std::size_t>(g)].bus));
      for (int r = 0; r < ni; ++r)
        qp.a_in(row, off_ibr + 3 * r) =
            gsf(k, c.bus_index(c.ibrs[static_cast<std::size_t>(r)].bus));
      qp.b_in(row) = l.flow_max - fixed;
      add_name(row, "flow-max line " + std::to_string(l.id));
      qp.a_in.row(row + 1) = -qp.a_in.row(row);
      qp.b_in(row + 1) = fixed - l.flow_min;
      add_name(row + 1, "flow-min line " + std::to_string(l.id));
      row += 2;
    }
  }
  for (int e = 0; e < ne; ++e) {
    const auto& ev = c.ev_fleets[static_cast<std::size_t>(e)];
    qp.a_in(row, off_ev + 2 * e) = 1.0;
    qp.b_in(row) = ev.reg_up_max;
    add_name(row++, "ev-up-cap " + ev.id);
    qp.a_in(row, off_ev + 2 * e + 1) = 1.0;
    qp.b_in(row) = ev.reg_down_max;
    add_name(row++, "ev-down-cap " + ev.id);
  }
  for (int r = 0; r < ni; ++r) {
    const auto& ibr = c.ibrs[static_cast<std::size_t>(r)];
    qp.a_in(row, off_ibr + 3 * r + 1) = 1.0;
    qp.b_in(row) = ibr.m_max;
    add_name(row++, "inertia-cap " + ibr.id);
    qp.a_in(row, off_ibr + 3 * r + 2) = 1.0;
    qp.b_in(row) = ibr.d_max;
    add_name(row++, "damping-cap " + ibr.id);
  }
  // Variable box: nonnegativity for everything, plus IBR energy capacity.
  for (int j = 0; j < n; ++j) {
    qp.a_in(row, j) = -1.0;
    qp.b_in(row) = 0.0;
    add_name(row++, "nonnegativity " + qp.var_names[static_cast<std::size_t>(j)]);
  }
  for (int r = 0; r < ni; ++r) {
    const auto& ibr = c.ibrs[static_cast<std::size_t>(r)];
    qp.a_in(row, off_ibr + 3 * r) = 1.0;
    qp.b_in(row) = ibr.p_max;
    add_name(row++, "capacity " + ibr.id);
  }
  return vp;
}

inline DispatchSolution unpack_solution(const GridCase& c, const QpSolution& s) {
  const int ng = static_cast<int>(c.sgs.size());
  const int ni = static_cast<int>(c.ibrs.size());
  const int ne = static_cast<int>(c.ev_fleets.size());
  const int off_ibr = 3 * ng;
  const int off_ev = 3 * ng + 3 * ni;
  auto nn = [](double v) { return v < 0.0 ? 0.0 : v; };  // clip roundoff negatives
  DispatchSolution d;
  for (int g = 0; g < ng; ++g) {
    d.sg_p.push_back(nn(s.x(3 * g)));
    d.sg_ru.push_back(nn(s.x(3 * g + 1)));
    d.sg_rd.push_back(nn(s.x(3 * g + 2)));
  }
  for (int r = 0; r < ni; ++r) {
    d.ibr_p.push_back(nn(s.x(off_ibr + 3 * r)));
    d.ibr_m.push_back(nn(s.x(off_ibr + 3 * r + 1)));
    d.ibr_d.push_back(nn(s.x(off_ibr + 3 * r + 2)));
  }
  for (int e = 0; e < ne; ++e) {
    d.ev_up.push_back(nn(s.x(off_ev + 2 * e)));
    d.ev_down.push_back(nn(s.x(off_ev + 2 * e + 1)));
  }
  d.kkt_residual = s.kkt_residual;
  return d;
}

inline Vec pack_solution(const GridCase& c, const DispatchSolution& d) {
  const int ng = static_cast<int>(c.sgs.size());
  const int ni = static_cast<int>(c.ibrs.size());
  const int ne = static_cast<int>(c.ev_fleets.size());
  Vec x = Vec::Zero(3 * ng + 3 * ni + 2 * ne);
  for (int g = 0; g < ng; ++g) {
    x(3 * g) = d.sg_p[static_cast<std::size_t>(g)];
    x(3 * g + 1) = d.sg_ru[static_cast<std::size_t>(g)];
    x(3 * g + 2) = d.sg_rd[static_cast<std::size_t>(g)];
  }
  for (int r = 0; r < ni; ++r) {
    x(3 * ng + 3 * r) = d.ibr_p[static_cast<std::size_t>(r)];
    x(3 * ng + 3 * r + 1) = d.ibr_m[static_cast<std::size_t>(r)];
    x(3 * ng + 3 * r + 2) = d.ibr_d[static_cast<std::size_t>(r)];
  }
  for (int e = 0; e < ne; ++e) {
    x(3 * ng + 3 * ni + 2 * e) = d.ev_up[static_cast<std::size_t>(e)];
    x(3 * ng + 3 * ni + 2 * e + 1) = d.ev_down[static_cast<std::size_t>(e)];
  }
  return x;
}

// Recomputes the cost terms from scratch.
inline double evaluate_cost(const DispatchSolution& d, const GridCase& c) {
  double cost = 0.0;
  for (std::size_t g = 0; g < c.sgs.size(); ++g) {
    const auto& sg = c.sgs[g];
    const double p = d.sg_p[g];
    cost += sg.c2 * p * p + sg.c1 * p + sg.c0 + sg.c_res_up * d.sg_ru[g] +
            sg.c_res_down * d.sg_rd[g];
  }
  for (std::size_t r = 0; r < c.ibrs.size(); ++r) {
    const auto& ibr = c.ibrs[r];
    const double p = d.ibr_p[r];
    cost += ibr.c5 * p * p + ibr.c4 * p + ibr.c3 + ibr.c6_m * d.ibr_m[r] +
            ibr.c7_d * d.ibr_d[r];
  }
  for (std::size_t e = 0; e < c.ev_fleets.size(); ++e) {
    const auto& ev = c.ev_fleets[e];
    cost += ev.price_up * d.ev_up[e] + ev.price_down * d.ev_down[e];
  }
  return cost;
}

struct ConstraintViolation {
  std::string name;
  double violation = 0.0;  // positive amount by which the constraint is broken
};

inline std::vector<ConstraintViolation> check_feasibility(const DispatchSolution& d,
                                                          const DispatchInput& in,
                                                          const GridCase& c,
                                                          double tol = 1e-6) {
  VisProblem vp = build_vis_problem(c, in);
  Vec x = pack_solution(c, d);
  std::vector<ConstraintViolation> out;
  Vec req = vp.qp.a_eq * x - vp.qp.b_eq;
  for (int r = 0; r < req.size(); ++r)
    if (std::abs(req(r)) > tol)
      out.push_back({vp.row_names_eq[static_cast<std::size_t>(r)], std::abs(req(r))});
  Vec rin = vp.qp.a_in * x - vp.qp.b_in;
  for (int r = 0; r < rin.size(); ++r)
    if (rin(r) > tol)
      out.push_back({vp.row_names_in[static_cast<std::size_t>(r)], rin(r)});
  return out;
}

inline DispatchSolution solve_vis(const GridCase& c, const DispatchInput& in,
                                  double tol = 1e-8) {
  VisProblem vp = build_vis_problem(c, in);
  QpSolution qs = solve_qp(vp.qp, tol);
  DispatchSolution d = unpack_solution(c, qs);
  d.total_cost = evaluate_cost(d, c);
  return d;
}

inline DispatchSolution solve_vis(const GridCase& c, double tol = 1e-8) {
  return solve_vis(c, DispatchInput::from_case(c), tol);
}

}  // namespace visgrid
