#pragma once

// Newton power flow on the lossless network (machine buses PV, others PQ,
// slack = largest SG unless overridden) and the pre-fault equilibrium
// construction for the classical dynamic model: internal EMFs behind the
// coupling reactances, constant-admittance load conversion, and mechanical
// powers pinned to the electrical powers at the solved operating point.

#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "visgrid/grid.hpp"
#include "visgrid/network.hpp"

namespace visgrid {

struct PowerFlowResult {
  CVec v;            // complex bus voltages, case bus order
  double slack_p = 0.0;  // net active injection the slack bus settled at
  Vec bus_p;         // achieved net active injection per bus
  Vec bus_q;         // achieved net reactive injection per bus
  int iterations = 0;
  double mismatch = 0.0;  // final max |f|
};

// p_spec/q_spec: net scheduled injection per bus (generation minus load).
// pv[i] true holds |V| at bus i (machine buses); slack holds V and angle.
inline PowerFlowResult solve_power_flow(const GridCase& c, const CMat& ybus,
                                        const Vec& p_spec, const Vec& q_spec,
                                        const std::vector<char>& pv,
                                        const std::vector<double>& v_setpoint,
                                        int slack_index, double tol = 1e-10,
                                        int max_iter = 60) {
  const int n = c.n_buses();
  Mat g = ybus.real(), b = ybus.imag();
  Vec vm = Vec::Ones(n), va = Vec::Zero(n);
  for (int i = 0; i < n; ++i)
    if (pv[static_cast<std::size_t>(i)] || i == slack_index) vm(i) = v_setpoint[static_cast<std::size_t>(i)];

  std::vector<int> ang_idx, mag_idx;
  for (int i = 0; i < n; ++i) {
    if (i == slack_index) continue;
    ang_idx.push_back(i);
    if (!pv[static_cast<std::size_t>(i)]) mag_idx.push_back(i);
  }
  const int na = static_cast<int>(ang_idx.size());
  const int nm = static_cast<int>(mag_idx.size());

  Vec p_calc(n), q_calc(n);
  auto recompute = [&]() {
    for (int i = 0; i < n; ++i) {
      double pi = 0.0, qi = 0.0;
      for (int j = 0; j < n; ++j) {
        const double th = va(i) - va(j);
        const double vv = vm(i) * vm(j);
        pi += vv * (g(i, j) * std::cos(th) + b(i, j) * std::sin(th));
        qi += vv * (g(i, j) * std::sin(th) - b(i, j) * std::cos(th));
      }
      p_calc(i) = pi;
      q_calc(i) = qi;
    }
  };

  PowerFlowResult out;
  for (int iter = 0; iter < max_iter; ++iter) {
    recompute();
    Vec f(na + nm);
    for (int k = 0; k < na; ++k) f(k) = p_spec(ang_idx[k]) - p_calc(ang_idx[k]);
    for (int k = 0; k < nm; ++k) f(na + k) = q_spec(mag_idx[k]) - q_calc(mag_idx[k]);
    const double err = (na + nm) ? f.cwiseAbs().maxCoeff() : 0.0;
    out.iterations = iter;
    out.mismatch = err;
    if (err < tol) break;
    if (iter == max_iter - 1)
      throw Error("power flow did not converge (mismatch " + std::to_string(err) + ")");

    Mat jac = Mat::Zero(na + nm, na + nm);
    for (int r = 0; r < na; ++r) {
      const int i = ang_idx[r];
      for (int col = 0; col < na; ++col) {
        const int j = ang_idx[col];
        if (i == j)
          jac(r, col) = -q_calc(i) - b(i, i) * vm(i) * vm(i);
        else {
          const double th = va(i) - va(j);
          jac(r, col) = vm(i) * vm(j) * (g(i, j) * std::sin(th) - b(i, j) * std::cos(th));
        }
      }
      for (int col = 0; col < nm; ++col) {
        const int j = mag_idx[col];
        if (i == j)
          jac(r, na + col) = p_calc(i) / vm(i) + g(i, i) * vm(i);
        else {
          const double th = va(i) - va(j);
          jac(r, na + col) = vm(i) * (g(i, j) * std::cos(th) + b(i, j) * std::sin(th));
        }
      }
    }
    for (int r = 0; r < nm; ++r) {
      const int i = mag_idx[r];
      for (int col = 0; col < na; ++col) {
        const int j = ang_idx[col];
        if (i == j)
          jac(na + r, col) = p_calc(i) - g(i, i) * vm(i) * vm(i);
        else {
          const double th = va(i) - va(j);
          jac(na + r, col) = -vm(i) * vm(j) * (g(i, j) * std::cos(th) + b(i, j) * std::sin(th));
        }
      }
      for (int col = 0; col < nm; ++col) {
        const int j = mag_idx[col];
        if (i == j)
          jac(na + r, na + col) = q_calc(i) / vm(i) - b(i, i) * vm(i);
        else {
          const double th = va(i) - va(j);
          jac(na + r, na + col) = vm(i) * (g(i, j) * std::sin(th) - b(i, j) * std::cos(th));
        }
      }
    }
    Eigen::PartialPivLU<Mat> lu(jac);
    Vec dx = lu.solve(f);
    if (!dx.allFinite()) throw Error("power flow Newton step is not finite");
    for (int k = 0; k < na; ++k) va(ang_idx[k]) += dx(k);
    for (int k = 0; k < nm; ++k) vm(mag_idx[k]) += dx(na + k);
    if (vm.minCoeff() <= 0.0)
      throw Error("power flow voltage collapsed below zero magnitude");
  }
  recompute();
  out.v = CVec(n);
  for (int i = 0; i < n; ++i) out.v(i) = std::polar(vm(i), va(i));
  out.bus_p = p_calc;
  out.bus_q = q_calc;
  out.slack_p = p_calc(slack_index);
  return out;
}

// Pre-fault operating point for the dynamic model.
struct Equilibrium {
  CVec v_bus;
  std::vector<double> e_mag;    // per machine (machine_list order)
  std::vector<double> delta0;   // rad
  std::vector<double> p_m;      // mechanical power, = P_e at the solved point
  std::vector<double> p_e0;     // electrical power at t=0 (same values)
  std::map<BusId, Complex> load_admittance;
  double pf_mismatch = 0.0;
  double slack_p = 0.0;
  CMat y_red;                   // healthy reduced network over all machines
};

// machine_p: scheduled active output per machine in machine_list order; the
// entry at the slack machine is overridden by whatever the network requires.
// load_scale: Algorithm-style k multiplier on every bus demand.
inline Equilibrium init_equilibrium(const GridCase& c, const std::vector<double>& machine_p,
                                    double load_scale = 1.0) {
  const auto machines = machine_list(c);
  if (machine_p.size() != machines.size())
    throw Error("init_equilibrium: machine_p size mismatch");
  const int n = c.n_buses();
  const BusId slack = c.resolve_slack();
  const int slack_index = c.bus_index(slack);

  std::vector<char> pv(static_cast<std::size_t>(n), 0);
  std::vector<double> vset(static_cast<std::size_t>(n), 1.0);
  Vec p_spec = Vec::Zero(n), q_spec = Vec::Zero(n);
  for (std::size_t m = 0; m < machines.size(); ++m) {
    const int bi = c.bus_index(machines[m].bus);
    pv[static_cast<std::size_t>(bi)] = 1;
    const double vs = machines[m].kind == MachineRef::Kind::Sg
                          ? c.sgs[static_cast<std::size_t>(machines[m].index)].v_set
                          : c.ibrs[static_cast<std::size_t>(machines[m].index)].v_set;
    vset[static_cast<std::size_t>(bi)] = vs;
    p_spec(bi) += machine_p[m];
  }
  for (const auto& [bus, pl] : c.loads) p_spec(c.bus_index(bus)) -= load_scale * pl;

  CMat ybus = build_admittance(c, all_in_service(c));
  PowerFlowResult pf = solve_power_flow(c, ybus, p_spec, q_spec, pv, vset, slack_index);

  Equilibrium eq;
  eq.v_bus = pf.v;
  eq.pf_mismatch = pf.mismatch;
  eq.slack_p = pf.slack_p;
  for (const auto& [bus, pl] : c.loads) {
    const Complex vb = pf.v(c.bus_index(bus));
    const double pscaled = load_scale * pl;
    if (pscaled > 0.0)
      eq.load_admittance[bus] = Complex(pscaled / std::norm(vb), 0.0);
  }

  // Per-bus machine injections: slack bus absorbs the network mismatch, other
  // machine buses deliver exactly their schedule. Multiple machines on one bus
  // share Q (and slack P adjustment) in proportion to coupling susceptance.
  eq.e_mag.resize(machines.size());
  eq.delta0.resize(machines.size());
  eq.p_m.resize(machines.size());
  std::map<int, double> bsum;  // bus index -> sum of 1/xd
  for (const auto& m : machines) bsum[c.bus_index(m.bus)] += 1.0 / m.xd;
  for (std::size_t m = 0; m < machines.size(); ++m) {
    const int bi = c.bus_index(machines[m].bus);
    const double share = (1.0 / machines[m].xd) / bsum[bi];
    double load_here = 0.0;
    auto it = c.loads.find(machines[m].bus);
    if (it != c.loads.end()) load_here = load_scale * it->second;
    double pm = machine_p[m];
    if (bi == slack_index) {
      // Distribute the achieved bus generation over co-located machines.
      pm = (pf.bus_p(bi) + load_here) * share;
    }
    const double qm = (pf.bus_q(bi) /* loads are pure active */) * share;
    const Complex vt = pf.v(bi);
    const Complex s(pm, qm);
    const Complex cur = std::conj(s / vt);
    const Complex e = vt + Complex(0.0, machines[m].xd) * cur;
    eq.e_mag[m] = std::abs(e);
    eq.delta0[m] = std::arg(e);
  }

  // Healthy reduced network and exact mechanical powers.
  std::vector<char> active(machines.size(), 1);
  AugmentedNetwork aug = build_augmented(c, machines, active, eq.load_admittance,
                                         all_in_service(c));
  eq.y_red = reduce_to_machines(aug);
  eq.p_e0.resize(machines.size());
  for (std::size_t i = 0; i < machines.size(); ++i) {
    Complex ii(0.0, 0.0);
    for (std::size_t j = 0; j < machines.size(); ++j)
      ii += eq.y_red(static_cast<int>(i), static_cast<int>(j)) *
            std::polar(eq.e_mag[j], eq.delta0[j]);
    const Complex ei = std::polar(eq.e_mag[i], eq.delta0[i]);
    eq.p_e0[i] = (ei * std::conj(ii)).real();
    eq.p_m[i] = eq.p_e0[i];
  }
  return eq;
}

}  // namespace visgrid
