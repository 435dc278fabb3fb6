#pragma once

// Network matrices: bus admittance with optional mid-line fault, Kron
// reduction onto retained nodes, and DC generation shift factors.
// Lossless convention: every line contributes y = 1/(jx); a fault splits its
// line at fraction x and grounds the split point through a large conductance,
// after which the auxiliary node is eliminated so the matrix keeps bus size.

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "visgrid/grid.hpp"

namespace visgrid {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct FaultSpec {
  int line_id = 0;
  double location = 0.5;  // fraction of line length from the from_bus
};

namespace detail {

inline void stamp_branch(CMat& y, int a, int b, Complex yab) {
  y(a, a) += yab;
  y(b, b) += yab;
  y(a, b) -= yab;
  y(b, a) -= yab;
}

inline const Line& find_line(const GridCase& c, int line_id) {
  for (const auto& l : c.lines)
    if (l.id == line_id) return l;
  throw Error("unknown line id " + std::to_string(line_id));
}

}  // namespace detail

// Kron reduction Y_rr - Y_rn * Y_nn^-1 * Y_nr over the retained node set.
inline CMat kron_reduce(const CMat& y, const std::vector<int>& retained) {
  const int n = static_cast<int>(y.rows());
  std::vector<char> keep(n, 0);
  for (int r : retained) {
    if (r < 0 || r >= n) throw Error("kron_reduce: retained index out of range");
    if (keep[r]) throw Error("kron_reduce: duplicate retained index");
    keep[r] = 1;
  }
  std::vector<int> interior;
  for (int i = 0; i < n; ++i)
    if (!keep[i]) interior.push_back(i);
  const int nr = static_cast<int>(retained.size());
  const int ni = static_cast<int>(interior.size());
  if (ni == 0) {
    CMat out(nr, nr);
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nr; ++j) out(i, j) = y(retained[i], retained[j]);
    return out;
  }
  CMat yrr(nr, nr), yrn(nr, ni), ynr(ni, nr), ynn(ni, ni);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nr; ++j) yrr(i, j) = y(retained[i], retained[j]);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < ni; ++j) yrn(i, j) = y(retained[i], interior[j]);
  for (int i = 0; i < ni; ++i)
    for (int j = 0; j < nr; ++j) ynr(i, j) = y(interior[i], retained[j]);
  for (int i = 0; i < ni; ++i)
    for (int j = 0; j < ni; ++j) ynn(i, j) = y(interior[i], interior[j]);
  Eigen::FullPivLU<CMat> lu(ynn);
  if (!lu.isInvertible())
    throw Error("kron_reduce: interior block is singular (islanded subnetwork "
                "with no retained node)");
  return yrr - yrn * lu.solve(ynr);
}

// Bus admittance over the case buses. line_status overrides Line::in_service
// (one entry per line, case order). A fault splits its line at the given
// fraction, attaches case.fault_conductance at the split point, and
// eliminates the auxiliary node; the faulted line's status entry must be 0.
inline CMat build_admittance(const GridCase& c, const std::vector<int>& line_status,
                             std::optional<FaultSpec> fault = std::nullopt) {
  if (line_status.size() != c.lines.size())
    throw Error("build_admittance: line_status length must equal line count");
  const int n = c.n_buses();
  CMat y = CMat::Zero(n, n);
  const Line* faulted = nullptr;
  if (fault) {
    faulted = &detail::find_line(c, fault->line_id);
    if (fault->location < 0.0 || fault->location > 1.0)
      throw Error("fault location must lie in [0, 1]");
    const int k = static_cast<int>(faulted - c.lines.data());
    if (line_status[static_cast<std::size_t>(k)] != 0)
      throw Error("faulted line must have status 0 in line_status");
  }
  for (std::size_t k = 0; k < c.lines.size(); ++k) {
    if (!line_status[k]) continue;
    const Line& l = c.lines[k];
    detail::stamp_branch(y, c.bus_index(l.from_bus), c.bus_index(l.to_bus),
                         Complex(0.0, -1.0 / l.reactance));
  }
  if (fault) {
    const Line& l = *faulted;
    const int f = c.bus_index(l.from_bus);
    const int t = c.bus_index(l.to_bus);
    const double x = fault->location;
    const Complex g_fault(c.fault_conductance, 0.0);
    if (x <= 0.0) {
      // Fault at the sending end: healthy line in service plus terminal shunt.
      detail::stamp_branch(y, f, t, Complex(0.0, -1.0 / l.reactance));
      y(f, f) += g_fault;
    } else if (x >= 1.0) {
      detail::stamp_branch(y, f, t, Complex(0.0, -1.0 / l.reactance));
      y(t, t) += g_fault;
    } else {
      // Split into segments x*X and (1-x)*X joined at auxiliary node n, then
      // eliminate n so callers keep a bus-sized matrix.
      CMat ya = CMat::Zero(n + 1, n + 1);
      ya.topLeftCorner(n, n) = y;
      detail::stamp_branch(ya, f, n, Complex(0.0, -1.0 / (x * l.reactance)));
      detail::stamp_branch(ya, n, t, Complex(0.0, -1.0 / ((1.0 - x) * l.reactance)));
      ya(n, n) += g_fault;
      std::vector<int> retained(n);
      for (int i = 0; i < n; ++i) retained[i] = i;
      y = kron_reduce(ya, retained);
    }
  }
  return y;
}

inline std::vector<int> all_in_service(const GridCase& c) {
  std::vector<int> s(c.lines.size());
  for (std::size_t k = 0; k < c.lines.size(); ++k) s[k] = c.lines[k].in_service;
  return s;
}

// DC generation shift factors: GSF(k, b) = d(flow on line k)/d(injection at b)
// with the balancing withdrawal at the slack bus. Slack column is zero.
inline Mat compute_gsf(const GridCase& c, std::optional<BusId> slack_override = std::nullopt) {
  const int n = c.n_buses();
  const int m = c.n_lines();
  const BusId slack = slack_override ? *slack_override : c.resolve_slack();
  const int s = c.bus_index(slack);

  Mat b = Mat::Zero(n, n);
  for (const auto& l : c.lines) {
    if (!l.in_service) continue;
    const int f = c.bus_index(l.from_bus);
    const int t = c.bus_index(l.to_bus);
    const double w = 1.0 / l.reactance;
    b(f, f) += w;
    b(t, t) += w;
    b(f, t) -= w;
    b(t, f) -= w;
  }
  // Reduced susceptance matrix without the slack row/column.
  Mat br(n - 1, n - 1);
  std::vector<int> map;  // reduced index -> bus index
  map.reserve(n - 1);
  for (int i = 0; i < n; ++i)
    if (i != s) map.push_back(i);
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j < n - 1; ++j) br(i, j) = b(map[i], map[j]);
  Eigen::FullPivLU<Mat> lu(br);
  if (!lu.isInvertible())
    throw Error("compute_gsf: network is disconnected (reduced susceptance "
                "matrix is singular)");
  // theta columns for unit injections at each non-slack bus.
  Mat theta_red = lu.solve(Mat::Identity(n - 1, n - 1));
  Mat theta = Mat::Zero(n, n);  // theta(node, injection bus)
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j < n - 1; ++j) theta(map[i], map[j]) = theta_red(i, j);
  Mat gsf = Mat::Zero(m, n);
  for (int k = 0; k < m; ++k) {
    const Line& l = c.lines[static_cast<std::size_t>(k)];
    if (!l.in_service) continue;
    const int f = c.bus_index(l.from_bus);
    const int t = c.bus_index(l.to_bus);
    for (int bcol = 0; bcol < n; ++bcol)
      gsf(k, bcol) = (theta(f, bcol) - theta(t, bcol)) / l.reactance;
  }
  return gsf;
}

// Augmented admittance used by the dynamic model: case buses first, then one
// internal node per active machine (coupled through its reactance), with
// constant-admittance loads as bus shunts. Returns the full matrix; callers
// reduce onto the machine nodes.
struct AugmentedNetwork {
  CMat y;                       // (n_buses + n_active) square
  std::vector<int> machine_node;  // per machine in `machines`: node index or -1 if inactive
};

inline AugmentedNetwork build_augmented(const GridCase& c,
                                        const std::vector<MachineRef>& machines,
                                        const std::vector<char>& active,
                                        const std::map<BusId, Complex>& load_admittance,
                                        const std::vector<int>& line_status,
                                        std::optional<FaultSpec> fault = std::nullopt) {
  const int n = c.n_buses();
  CMat ybus = build_admittance(c, line_status, fault);
  int n_active = 0;
  for (char a : active)
    if (a) ++n_active;
  AugmentedNetwork out;
  out.y = CMat::Zero(n + n_active, n + n_active);
  out.y.topLeftCorner(n, n) = ybus;
  for (const auto& [bus, yl] : load_admittance) out.y(c.bus_index(bus), c.bus_index(bus)) += yl;
  out.machine_node.assign(machines.size(), -1);
  int node = n;
  for (std::size_t i = 0; i < machines.size(); ++i) {
    if (!active[i]) continue;
    detail::stamp_branch(out.y, c.bus_index(machines[i].bus), node,
                         Complex(0.0, -1.0 / machines[i].xd));
    out.machine_node[i] = node++;
  }
  return out;
}

// Reduce an augmented network onto its active machine internal nodes.
inline CMat reduce_to_machines(const AugmentedNetwork& aug) {
  std::vector<int> retained;
  for (int nd : aug.machine_node)
    if (nd >= 0) retained.push_back(nd);
  return kron_reduce(aug.y, retained);
}

}  // namespace visgrid
