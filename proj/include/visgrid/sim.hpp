#pragma once

// Classical multi-machine transient simulation with virtual-synchronous IBRs:
// fault scheduling, fixed-step RK4 swing integration over segmented network
// conditions (pre-fault / faulted / restored / post-trip), measurement
// sampling, COI frequency, the 360-degree separation instability rule, CCT
// bisection, scenario sweeps, and small-signal eigenvalues.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "visgrid/dispatch.hpp"
#include "visgrid/grid.hpp"
#include "visgrid/network.hpp"
#include "visgrid/powerflow.hpp"

namespace visgrid {

struct GeneratorTrip {
  std::string machine_id;
  double time = 0.0;  // s
};

struct FaultScenario {
  int line_id = 0;
  double duration = 0.0;   // tau, s (0 = no fault)
  double location = 0.5;   // fraction in [0, 1] from the from_bus
  double load_scale = 1.0; // k multiplier on every bus demand
  double t_start = 2.0;    // s
  std::optional<GeneratorTrip> generator_trip;
};

struct SimConfig {
  double step = 1e-3;          // integration step, s
  double horizon = 7.0;        // s
  double sample_period = 8e-3; // measurement sampling, s
  double omega_abort = 0.5;    // |omega - 1| beyond this aborts with a flag
  double ibr_min_inertia = 0.02;  // effective floor on dispatched M_IBR, pu s
};

struct TrajectoryEvent {
  double t = 0.0;
  std::string what;
};

struct TrajectoryRecord {
  std::vector<std::string> machine_ids;
  std::vector<double> h_eff;   // inertia constant used per machine (H, or M/2)
  std::vector<double> t;       // sample times
  // Channel matrices are (machine x sample).
  Mat delta_deg, omega, i_d, i_q, v_d, v_q, t_e, p_g, q_g;
  std::vector<double> coi;     // COI frequency, pu
  std::vector<int> trip_sample;  // first sample index at which machine is gone
  std::vector<TrajectoryEvent> events;
  bool aborted = false;
  std::string abort_reason;
  double nominal_freq = 60.0;

  int n_machines() const { return static_cast<int>(machine_ids.size()); }
  int n_samples() const { return static_cast<int>(t.size()); }
  bool alive_at(int machine, int sample) const {
    return sample < trip_sample[static_cast<std::size_t>(machine)];
  }
};

struct TisLabel {
  int tis_class = 0;      // 0 stable, 1 unstable
  double lambda_max = 0;  // max pairwise angle separation, deg
  double margin = 1.0;    // (360 - lambda) / (360 + lambda); <= 0 means class 1
};

// Line statuses and fault flag at time t. The faulted line is out and the
// fault flag raised exactly during [t_start, t_start + duration].
inline std::pair<std::vector<int>, int> scenario_schedule(const GridCase& c,
                                                          const FaultScenario& scn,
                                                          double t) {
  std::vector<int> status = all_in_service(c);
  int flag = 0;
  if (scn.duration >= 0.0 && t >= scn.t_start && t <= scn.t_start + scn.duration) {
    detail::find_line(c, scn.line_id);  // validates the id
    for (std::size_t k = 0; k < c.lines.size(); ++k)
      if (c.lines[k].id == scn.line_id) status[k] = 0;
    flag = 1;
  }
  return {status, flag};
}

namespace detail {

struct MachineDyn {
  double m;  // swing coefficient: 2H for SGs, dispatched M (floored) for IBRs
  double d;  // damping
};

inline std::vector<MachineDyn> machine_dynamics(const GridCase& c,
                                                const DispatchSolution& dis,
                                                const SimConfig& cfg) {
  std::vector<MachineDyn> out;
  for (const auto& g : c.sgs) out.push_back({2.0 * g.inertia_h, g.damping});
  for (std::size_t r = 0; r < c.ibrs.size(); ++r) {
    const double m = std::max(r < dis.ibr_m.size() ? dis.ibr_m[r] : 0.0,
                              cfg.ibr_min_inertia);
    const double d = r < dis.ibr_d.size() ? dis.ibr_d[r] : 0.0;
    out.push_back({m, d});
  }
  return out;
}

// One network condition: reduced admittance over the active machines.
struct Segment {
  long first_step, last_step;  // [first, last) in integration steps
  std::vector<int> active;     // machine indices with a network connection
  CMat y_red;
};

}  // namespace detail

inline TisLabel classify_tis(const TrajectoryRecord& traj) {
  TisLabel lab;
  const int n = traj.n_machines();
  double lam = 0.0;
  for (int s = 0; s < traj.n_samples(); ++s)
    for (int i = 0; i < n; ++i) {
      if (!traj.alive_at(i, s)) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!traj.alive_at(j, s)) continue;
        lam = std::max(lam, std::abs(traj.delta_deg(i, s) - traj.delta_deg(j, s)));
      }
    }
  lab.lambda_max = lam;
  lab.margin = (360.0 - lam) / (360.0 + lam);
  lab.tis_class = lab.margin <= 0.0 ? 1 : 0;
  return lab;
}

inline std::vector<double> coi_frequency(const TrajectoryRecord& traj, const GridCase&) {
  std::vector<double> coi(static_cast<std::size_t>(traj.n_samples()), 1.0);
  for (int s = 0; s < traj.n_samples(); ++s) {
    double num = 0.0, den = 0.0;
    for (int m = 0; m < traj.n_machines(); ++m) {
      if (!traj.alive_at(m, s)) continue;
      num += traj.h_eff[static_cast<std::size_t>(m)] * traj.omega(m, s);
      den += traj.h_eff[static_cast<std::size_t>(m)];
    }
    if (den <= 0.0) throw Error("coi_frequency: no surviving machine at sample " +
                                std::to_string(s));
    coi[static_cast<std::size_t>(s)] = num / den;
  }
  return coi;
}

inline TrajectoryRecord simulate(const GridCase& c, const DispatchSolution& dis,
                                 const FaultScenario& scn, const SimConfig& cfg) {
  if (cfg.step <= 0.0 || cfg.sample_period < cfg.step)
    throw Error("simulate: need 0 < step <= sample_period");
  if (scn.location < 0.0 || scn.location > 1.0)
    throw Error("simulate: fault location outside [0, 1]");
  if (scn.duration < 0.0) throw Error("simulate: fault duration must be >= 0");
  if (scn.t_start < 0.0) throw Error("simulate: t_start must be >= 0");
  const auto machines = machine_list(c);
  const int n = static_cast<int>(machines.size());
  if (n == 0) throw Error("simulate: case has no machines");
  const auto dyn = detail::machine_dynamics(c, dis, cfg);
  const double ws = 2.0 * M_PI * c.nominal_freq;

  Equilibrium eq = init_equilibrium(c, dis.machine_p(), scn.load_scale);
  if (eq.pf_mismatch > 1e-6)
    throw Error("simulate: no pre-fault equilibrium (mismatch " +
                std::to_string(eq.pf_mismatch) + ")");

  // Event steps on the integration grid.
  const long n_steps = std::lround(cfg.horizon / cfg.step);
  const long sample_every = std::lround(cfg.sample_period / cfg.step);
  long fault_on = n_steps + 1, fault_off = n_steps + 1, trip_at = n_steps + 1;
  const bool has_fault = scn.duration > 0.0;
  if (has_fault) {
    fault_on = std::min(n_steps, std::lround(scn.t_start / cfg.step));
    fault_off = std::min(n_steps, fault_on + std::lround(scn.duration / cfg.step));
  }
  int trip_machine = -1;
  if (scn.generator_trip) {
    for (int i = 0; i < n; ++i)
      if (machines[static_cast<std::size_t>(i)].id == scn.generator_trip->machine_id)
        trip_machine = i;
    if (trip_machine < 0)
      throw Error("simulate: unknown trip machine '" + scn.generator_trip->machine_id + "'");
    trip_at = std::min(n_steps, std::lround(scn.generator_trip->time / cfg.step));
  }

  // Build the segment list in time order.
  std::vector<long> marks = {0, n_steps};
  if (has_fault) {
    marks.push_back(fault_on);
    marks.push_back(fault_off);
  }
  if (trip_machine >= 0) marks.push_back(trip_at);
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

  std::vector<detail::Segment> segments;
  for (std::size_t k = 0; k + 1 < marks.size(); ++k) {
    detail::Segment seg;
    seg.first_step = marks[k];
    seg.last_step = marks[k + 1];
    const bool fault_active = has_fault && seg.first_step >= fault_on &&
                              seg.first_step < fault_off;
    const bool tripped = trip_machine >= 0 && seg.first_step >= trip_at;
    std::vector<char> active(static_cast<std::size_t>(n), 1);
    if (tripped) active[static_cast<std::size_t>(trip_machine)] = 0;
    for (int i = 0; i < n; ++i)
      if (active[static_cast<std::size_t>(i)]) seg.active.push_back(i);
    auto [status, flag] = scenario_schedule(c, scn, (seg.first_step + 0.5) * cfg.step);
    std::optional<FaultSpec> fs;
    if (fault_active) {
      fs = FaultSpec{scn.line_id, scn.location};
      // scenario_schedule already zeroed the faulted line during the interval.
    } else {
      status = all_in_service(c);
    }
    (void)flag;
    AugmentedNetwork aug = build_augmented(c, machines, active, eq.load_admittance,
                                           status, fs);
    seg.y_red = reduce_to_machines(aug);
    segments.push_back(std::move(seg));
  }

  TrajectoryRecord traj;
  traj.nominal_freq = c.nominal_freq;
  for (const auto& m : machines) traj.machine_ids.push_back(m.id);
  for (int i = 0; i < n; ++i)
    traj.h_eff.push_back(dyn[static_cast<std::size_t>(i)].m / 2.0);
  const long n_samples = n_steps / sample_every + 1;
  traj.t.reserve(static_cast<std::size_t>(n_samples));
  traj.delta_deg = Mat::Zero(n, n_samples);
  traj.omega = Mat::Zero(n, n_samples);
  traj.i_d = Mat::Zero(n, n_samples);
  traj.i_q = Mat::Zero(n, n_samples);
  traj.v_d = Mat::Zero(n, n_samples);
  traj.v_q = Mat::Zero(n, n_samples);
  traj.t_e = Mat::Zero(n, n_samples);
  traj.p_g = Mat::Zero(n, n_samples);
  traj.q_g = Mat::Zero(n, n_samples);
  traj.trip_sample.assign(static_cast<std::size_t>(n),
                          static_cast<int>(n_samples));
  if (has_fault) {
    traj.events.push_back({fault_on * cfg.step, "fault_on line " +
                           std::to_string(scn.line_id) + " x=" +
                           std::to_string(scn.location)});
    traj.events.push_back({fault_off * cfg.step,
                           "fault_off line " + std::to_string(scn.line_id)});
  }
  if (trip_machine >= 0) {
    traj.events.push_back({trip_at * cfg.step,
                           "trip " + machines[static_cast<std::size_t>(trip_machine)].id});
    traj.trip_sample[static_cast<std::size_t>(trip_machine)] =
        static_cast<int>((trip_at + sample_every - 1) / sample_every);
  }

  Vec delta(n), omega(n);
  for (int i = 0; i < n; ++i) {
    delta(i) = eq.delta0[static_cast<std::size_t>(i)];
    omega(i) = 1.0;
  }

  const auto& emag = eq.e_mag;
  int sample_idx = 0;
  auto record_sample = [&](long step_idx, const detail::Segment& seg) {
    traj.t.push_back(step_idx * cfg.step);
    CVec e_act(static_cast<int>(seg.active.size()));
    for (std::size_t a = 0; a < seg.active.size(); ++a)
      e_act(static_cast<int>(a)) =
          std::polar(emag[static_cast<std::size_t>(seg.active[a])], delta(seg.active[a]));
    CVec cur = seg.y_red * e_act;
    for (std::size_t a = 0; a < seg.active.size(); ++a) {
      const int i = seg.active[a];
      const Complex ei = e_act(static_cast<int>(a));
      const Complex ii = cur(static_cast<int>(a));
      const Complex vt = ei - Complex(0.0, machines[static_cast<std::size_t>(i)].xd) * ii;
      const double pe = (ei * std::conj(ii)).real();
      const Complex rot = std::polar(1.0, M_PI / 2.0 - delta(i));
      const Complex vdq = vt * rot;
      const Complex idq = ii * rot;
      traj.delta_deg(i, sample_idx) = delta(i) * 180.0 / M_PI;
      traj.omega(i, sample_idx) = omega(i);
      traj.i_d(i, sample_idx) = idq.real();
      traj.i_q(i, sample_idx) = idq.imag();
      traj.v_d(i, sample_idx) = vdq.real();
      traj.v_q(i, sample_idx) = vdq.imag();
      traj.t_e(i, sample_idx) = pe / std::max(omega(i), 1e-6);
      traj.p_g(i, sample_idx) = (vt * std::conj(ii)).real();
      traj.q_g(i, sample_idx) = (vt * std::conj(ii)).imag();
    }
    // Machines already tripped keep their last recorded angle/speed.
    for (int i = 0; i < n; ++i) {
      if (traj.alive_at(i, sample_idx) ||
          std::find(seg.active.begin(), seg.active.end(), i) != seg.active.end())
        continue;
      traj.delta_deg(i, sample_idx) = delta(i) * 180.0 / M_PI;
      traj.omega(i, sample_idx) = omega(i);
    }
    ++sample_idx;
  };

  // Swing derivative over the active machine set of the current segment.
  std::vector<double> pe_buf(static_cast<std::size_t>(n));
  auto derivative = [&](const detail::Segment& seg, const Vec& d, const Vec& w,
                        Vec& dd, Vec& dw) {
    const int na = static_cast<int>(seg.active.size());
    CVec e_act(na);
    for (int a = 0; a < na; ++a)
      e_act(a) = std::polar(emag[static_cast<std::size_t>(seg.active[static_cast<std::size_t>(a)])],
                            d(seg.active[static_cast<std::size_t>(a)]));
    CVec cur = seg.y_red * e_act;
    dd.setZero();
    dw.setZero();
    for (int a = 0; a < na; ++a) {
      const int i = seg.active[static_cast<std::size_t>(a)];
      const double pe = (e_act(a) * std::conj(cur(a))).real();
      pe_buf[static_cast<std::size_t>(i)] = pe;
      dd(i) = ws * (w(i) - 1.0);
      dw(i) = (eq.p_m[static_cast<std::size_t>(i)] - pe -
               dyn[static_cast<std::size_t>(i)].d * (w(i) - 1.0)) /
              dyn[static_cast<std::size_t>(i)].m;
    }
  };

  Vec k1d(n), k1w(n), k2d(n), k2w(n), k3d(n), k3w(n), k4d(n), k4w(n), td(n), tw(n);
  const double h = cfg.step;
  bool aborted = false;
  for (const auto& seg : segments) {
    if (aborted) break;
    for (long s = seg.first_step; s < seg.last_step && !aborted; ++s) {
      if (s % sample_every == 0) record_sample(s, seg);
      derivative(seg, delta, omega, k1d, k1w);
      td = delta + 0.5 * h * k1d;
      tw = omega + 0.5 * h * k1w;
      derivative(seg, td, tw, k2d, k2w);
      td = delta + 0.5 * h * k2d;
      tw = omega + 0.5 * h * k2w;
      derivative(seg, td, tw, k3d, k3w);
      td = delta + h * k3d;
      tw = omega + h * k3w;
      derivative(seg, td, tw, k4d, k4w);
      delta += (h / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
      omega += (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
      for (int i : seg.active)
        if (std::abs(omega(i) - 1.0) > cfg.omega_abort) {
          aborted = true;
          traj.aborted = true;
          traj.abort_reason = "machine " + machines[static_cast<std::size_t>(i)].id +
                              " speed deviation exceeded " +
                              std::to_string(cfg.omega_abort) + " pu at t=" +
                              std::to_string((s + 1) * cfg.step);
          traj.events.push_back({(s + 1) * cfg.step, "abort " + traj.abort_reason});
        }
    }
    if (!aborted && seg.last_step == n_steps && seg.last_step % sample_every == 0)
      record_sample(seg.last_step, seg);
  }

  // Trim channel matrices to the recorded sample count (aborts end early).
  const int ns = sample_idx;
  auto trim = [ns](Mat& m) { m.conservativeResize(Eigen::NoChange, ns); };
  trim(traj.delta_deg);
  trim(traj.omega);
  trim(traj.i_d);
  trim(traj.i_q);
  trim(traj.v_d);
  trim(traj.v_q);
  trim(traj.t_e);
  trim(traj.p_g);
  trim(traj.q_g);
  for (auto& tsamp : traj.trip_sample) tsamp = std::min(tsamp, ns);
  traj.coi = coi_frequency(traj, c);
  return traj;
}

// Bisection for the critical clearing time of a (line, location) fault.
// Runs on the integration-step grid and returns the stable lower end of the
// final bracket. The scenario template supplies t_start and load scale.
inline double compute_cct(const GridCase& c, const DispatchSolution& dis,
                          int line_id, double location, const SimConfig& cfg,
                          double bracket_lo, double bracket_hi, double tol = -1.0,
                          double t_start = 0.5, double load_scale = 1.0) {
  if (tol <= 0.0) tol = 2.0 * cfg.step;
  auto unstable = [&](double tau) {
    FaultScenario scn;
    scn.line_id = line_id;
    scn.location = location;
    scn.duration = tau;
    scn.load_scale = load_scale;
    scn.t_start = t_start;
    return classify_tis(simulate(c, dis, scn, cfg)).tis_class == 1;
  };
  long lo = std::lround(bracket_lo / cfg.step);
  long hi = std::lround(bracket_hi / cfg.step);
  if (lo >= hi) throw Error("compute_cct: empty bracket");
  if (unstable(lo * cfg.step))
    throw Error("compute_cct: bracket lower end is already unstable");
  if (!unstable(hi * cfg.step))
    throw Error("compute_cct: bracket upper end is stable (no instability found)");
  const long tol_steps = std::max<long>(1, std::lround(tol / cfg.step));
  while (hi - lo > tol_steps) {
    const long mid = (lo + hi) / 2;
    if (unstable(mid * cfg.step))
      hi = mid;
    else
      lo = mid;
  }
  return lo * cfg.step;
}

struct SweepRanges {
  double tau_min = 0.06, tau_max = 0.4;
  double x_min = 0.0, x_max = 1.0;
  double k_min = 1.0, k_max = 1.6;
  double t_start = 2.0;
};

struct SweepResult {
  FaultScenario scenario;
  TrajectoryRecord trajectory;
  TisLabel label;
  bool failed = false;
  std::string error;
};

namespace detail {

// Deterministic uniform double in [0, 1) from a mt19937_64 draw.
inline double unit_uniform(std::uint64_t raw) {
  return static_cast<double>(raw >> 11) * 0x1.0p-53;
}

}  // namespace detail

inline std::vector<FaultScenario> draw_scenarios(const GridCase& c, int count,
                                                 const SweepRanges& r,
                                                 std::uint64_t seed) {
  if (count < 1) throw Error("sweep_scenarios: count must be >= 1");
  if (r.tau_min < 0.06 - 1e-12 || r.tau_max > 0.4 + 1e-12 || r.tau_min > r.tau_max)
    throw Error("sweep_scenarios: tau range must lie within [0.06, 0.4]");
  if (r.x_min < 0.0 || r.x_max > 1.0 || r.x_min > r.x_max)
    throw Error("sweep_scenarios: location range must lie within [0, 1]");
  if (r.k_min < 1.0 - 1e-12 || r.k_max > 1.6 + 1e-12 || r.k_min > r.k_max)
    throw Error("sweep_scenarios: load-scale range must lie within [1, 1.6]");
  if (c.lines.empty()) throw Error("sweep_scenarios: case has no lines");

  std::mt19937_64 rng(seed);
  std::vector<FaultScenario> scns(static_cast<std::size_t>(count));
  for (auto& s : scns) {
    s.line_id = c.lines[static_cast<std::size_t>(rng() % c.lines.size())].id;
    s.duration = r.tau_min + detail::unit_uniform(rng()) * (r.tau_max - r.tau_min);
    s.location = r.x_min + detail::unit_uniform(rng()) * (r.x_max - r.x_min);
    s.load_scale = r.k_min + detail::unit_uniform(rng()) * (r.k_max - r.k_min);
    s.t_start = r.t_start;
  }
  return scns;
}

// Simulates pre-drawn scenarios; results land at their scenario's index no
// matter how workers interleave.
inline std::vector<SweepResult> run_scenarios(const GridCase& c,
                                              const DispatchSolution& dis,
                                              const std::vector<FaultScenario>& scns,
                                              const SimConfig& cfg,
                                              int workers = 1) {
  const int count = static_cast<int>(scns.size());
  std::vector<SweepResult> out(static_cast<std::size_t>(count));
  auto run_one = [&](int i) {
    SweepResult& res = out[static_cast<std::size_t>(i)];
    res.scenario = scns[static_cast<std::size_t>(i)];
    try {
      res.trajectory = simulate(c, dis, res.scenario, cfg);
      res.label = classify_tis(res.trajectory);
    } catch (const std::exception& e) {
      res.failed = true;
      res.error = e.what();
    }
  };
  workers = std::max(1, workers);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&]() {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) run_one(i);
      });
    for (auto& th : pool) th.join();
  }
  return out;
}

inline std::vector<SweepResult> sweep_scenarios(const GridCase& c,
                                                const DispatchSolution& dis,
                                                int count, const SweepRanges& r,
                                                std::uint64_t seed,
                                                const SimConfig& cfg,
                                                int workers = 1) {
  return run_scenarios(c, dis, draw_scenarios(c, count, r, seed), cfg, workers);
}

// Eigenvalues of the swing Jacobian about the healthy equilibrium:
//   d/dt [ddelta; domega] = [0, ws I; -M^-1 K, -M^-1 D] [ddelta; domega]
// where K = dPe/ddelta on the reduced network. One zero eigenvalue (uniform
// angle shift) is structural.
inline std::vector<Complex> linearize_eigenvalues(const GridCase& c,
                                                  const DispatchSolution& dis,
                                                  const SimConfig& cfg = {}) {
  const auto machines = machine_list(c);
  const int n = static_cast<int>(machines.size());
  const auto dyn = detail::machine_dynamics(c, dis, cfg);
  Equilibrium eq = init_equilibrium(c, dis.machine_p(), 1.0);
  if (eq.pf_mismatch > 1e-6) throw Error("linearize_eigenvalues: no equilibrium");
  const double ws = 2.0 * M_PI * c.nominal_freq;

  Mat kmat = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dij = eq.delta0[static_cast<std::size_t>(i)] -
                         eq.delta0[static_cast<std::size_t>(j)];
      const double ee = eq.e_mag[static_cast<std::size_t>(i)] *
                        eq.e_mag[static_cast<std::size_t>(j)];
      const double g = eq.y_red(i, j).real(), b = eq.y_red(i, j).imag();
      const double kij = ee * (g * std::sin(dij) - b * std::cos(dij));
      kmat(i, j) = kij;
      diag -= kij;
    }
    kmat(i, i) = diag;
  }
  Mat jac = Mat::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    jac(i, n + i) = ws;
    for (int j = 0; j < n; ++j)
      jac(n + i, j) = -kmat(i, j) / dyn[static_cast<std::size_t>(i)].m;
    jac(n + i, n + i) = -dyn[static_cast<std::size_t>(i)].d /
                        dyn[static_cast<std::size_t>(i)].m;
  }
  Eigen::EigenSolver<Mat> es(jac, false);
  std::vector<Complex> ev(static_cast<std::size_t>(2 * n));
  for (int i = 0; i < 2 * n; ++i) ev[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  std::sort(ev.begin(), ev.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return ev;
}

}  // namespace visgrid
