#pragma once

// End-to-end case study: branch A dispatches at the nominal demand and rides
// the scripted contingency; branch B takes the early measurement window,
// predicts instability and the first-swing frequency deviation, turns the
// scripted tie-flow change into an interrupted-load estimate, prices the
// instability risk, and redispatches robustly before the same contingency.

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visgrid/dataset.hpp"
#include "visgrid/dispatch.hpp"
#include "visgrid/features.hpp"
#include "visgrid/grid.hpp"
#include "visgrid/igdt.hpp"
#include "visgrid/predictor.hpp"
#include "visgrid/risk.hpp"
#include "visgrid/sim.hpp"

namespace visgrid {

struct StudyConfig {
  FaultScenario contingency;      // includes the generator trip
  double tie_flow_change = 0.0;   // scripted delta P_tie, pu
  double frequency_bias = -0.05;  // B, pu per 0.1 Hz
  double critical_cost = 0.0;     // C_c, $
  double sigma_cap = 2.0;
  double tol_sigma = 1e-5;
  DurationDistribution risk_dist;
  double cct_bracket_hi = 0.5;    // s, upper bracket for the per-line CCT scan
  double cct_location = 0.5;
  double shed_price_per_mwh = 1000.0;
  double restoration_hours = 1.0;
  double horizon = 15.0;          // s, contingency simulation span
  double cct_horizon = 5.0;       // s, per-line CCT scan span
  double step = 1e-3;
  double recovery_band = 0.02;    // pu, COI recovery threshold
  double recovery_deadline = 12.0;  // s after fault inception
};

inline StudyConfig parse_study(const nlohmann::json& j) {
  StudyConfig s;
  try {
    const auto& c = j.at("contingency");
    s.contingency.line_id = c.at("line_id").get<int>();
    s.contingency.location = c.value("location", 0.5);
    s.contingency.duration = c.at("duration").get<double>();
    s.contingency.t_start = c.value("t_start", 2.0);
    s.contingency.load_scale = c.value("load_scale", 1.0);
    if (c.contains("trip_machine"))
      s.contingency.generator_trip =
          GeneratorTrip{c.at("trip_machine").get<std::string>(),
                        c.at("trip_time").get<double>()};
    const auto& p = j.at("prediction");
    s.tie_flow_change = p.at("tie_flow_change").get<double>();
    s.frequency_bias = p.at("frequency_bias").get<double>();
    const auto& g = j.at("igdt");
    s.critical_cost = g.at("critical_cost").get<double>();
    s.sigma_cap = g.value("sigma_cap", 2.0);
    s.tol_sigma = g.value("tol_sigma", 1e-5);
    if (j.contains("risk")) {
      const auto& r = j.at("risk");
      s.risk_dist.mean_a = r.value("mean_a", 3.5);
      s.risk_dist.mean_b = r.value("mean_b", 4.0);
      s.risk_dist.sigma = r.value("sigma", 0.5);
      s.risk_dist.time_unit = r.value("time_unit", std::string("cycles"));
      s.cct_bracket_hi = r.value("cct_bracket_hi", 0.5);
      s.cct_location = r.value("cct_location", 0.5);
    }
    if (j.contains("ufls")) {
      const auto& u = j.at("ufls");
      s.shed_price_per_mwh = u.value("shed_price_per_mwh", 1000.0);
      s.restoration_hours = u.value("restoration_hours", 1.0);
    }
    if (j.contains("sim")) {
      const auto& m = j.at("sim");
      s.horizon = m.value("horizon", 15.0);
      s.cct_horizon = m.value("cct_horizon", 5.0);
      s.step = m.value("step", 1e-3);
      s.recovery_band = m.value("recovery_band", 0.02);
      s.recovery_deadline = m.value("recovery_deadline", 12.0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("study config: ") + e.what());
  }
  return s;
}

inline StudyConfig load_study(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("study config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error("study config: " + path + ": " + e.what());
  }
  return parse_study(j);
}

struct BranchOutcome {
  bool failed = false;
  std::string error;
  DispatchSolution dispatch;
  double dispatch_cost = 0.0;
  TisLabel label;
  bool recovered = false;
  double recovery_time = -1.0;  // s after fault inception; class-0 branches only
  double ufls_cost = 0.0;
  double total_cost = 0.0;
  TrajectoryRecord trajectory;
};

struct CaseStudyReport {
  BranchOutcome branch_a, branch_b;
  // Prediction pipeline intermediates (branch B).
  int predicted_class = 0;
  double confidence = 0.0;
  bool freq_predicted = false;
  double delta_f_hz = 0.0;
  double ace = 0.0;
  double predicted_load = 0.0;  // P_hat, pu
  double theta = 0.0;
  double sigma_star = 0.0;
  bool sigma_binding = false;
  bool sigma_capped = false;
  double budget = 0.0;
  std::vector<double> cct_per_line;  // s, under the branch-A dispatch
  std::vector<std::complex<double>> eigenvalues;  // at the robust equilibrium
};

namespace detail {

// CCT scan entry tolerant of one-sided brackets: a line whose fault is
// unstable even at the shortest clearing gets the bracket floor, a line that
// never destabilizes gets the bracket ceiling.
inline double cct_or_bracket(const GridCase& c, const DispatchSolution& dis,
                             int line_id, double location, const SimConfig& cfg,
                             double hi) {
  try {
    return compute_cct(c, dis, line_id, location, cfg, 0.0, hi);
  } catch (const Error& e) {
    const std::string what = e.what();
    if (what.find("already unstable") != std::string::npos) return 0.0;
    if (what.find("upper end is stable") != std::string::npos) return hi;
    throw;
  }
}

inline double coi_recovery_time(const TrajectoryRecord& traj, double t_start,
                                double band) {
  // Earliest time from which the COI stays inside the band for good.
  int first_bad_after = -1;
  for (int s = traj.n_samples() - 1; s >= 0; --s)
    if (std::abs(traj.coi[static_cast<std::size_t>(s)] - 1.0) > band) {
      first_bad_after = s;
      break;
    }
  if (first_bad_after < 0) return 0.0;  // never left the band
  if (first_bad_after + 1 >= traj.n_samples()) return -1.0;  // never recovered
  return traj.t[static_cast<std::size_t>(first_bad_after + 1)] - t_start;
}

}  // namespace detail

inline CaseStudyReport run_case_study(const GridCase& gcase,
                                      const StudyConfig& study,
                                      const ClassifierModel& cls,
                                      const RegressorModel& reg) {
  CaseStudyReport rep;
  SimConfig sim_cfg;
  sim_cfg.step = study.step;
  sim_cfg.horizon = study.horizon;

  const double demand = gcase.total_load() * study.contingency.load_scale;
  const DispatchInput base_in =
      DispatchInput::from_case(gcase).with_demand(demand);

  // Branch A: conventional VIS at the nominal demand.
  auto& a = rep.branch_a;
  try {
    a.dispatch = solve_vis(gcase, base_in);
    a.dispatch_cost = a.dispatch.total_cost;
    a.trajectory = simulate(gcase, a.dispatch, study.contingency, sim_cfg);
    a.label = classify_tis(a.trajectory);
    if (a.label.tis_class == 0) {
      a.recovery_time = detail::coi_recovery_time(
          a.trajectory, study.contingency.t_start, study.recovery_band);
      a.recovered = a.recovery_time >= 0.0 &&
                    a.recovery_time <= study.recovery_deadline;
    }
  } catch (const Error& e) {
    a.failed = true;
    a.error = e.what();
  }

  // Early window and predictions from the branch-A measurements.
  double delta_f_hz = 0.0;
  if (!a.failed) {
    try {
      const double t_clear =
          study.contingency.t_start + study.contingency.duration;
      const Mat window =
          upsample(extract_features(a.trajectory, t_clear)).values;
      const FreqPrediction fp = gated_frequency_prediction(cls, reg, window);
      rep.predicted_class = fp.tis_class;
      rep.confidence = fp.confidence;
      rep.freq_predicted = fp.predicted;
      delta_f_hz = fp.predicted ? fp.delta_f_hz : 0.0;
      rep.delta_f_hz = delta_f_hz;
    } catch (const Error& e) {
      rep.branch_b.failed = true;
      rep.branch_b.error = std::string("prediction: ") + e.what();
    }
  } else {
    rep.branch_b.failed = true;
    rep.branch_b.error = "prediction skipped: branch A failed";
  }

  // UFLS accounting for an unstable branch: the interrupted-load estimate
  // held for the restoration window at the shed price.
  rep.ace = compute_ace(
      {study.tie_flow_change, study.frequency_bias, delta_f_hz});
  const double ufls_dollars = std::abs(rep.ace) * gcase.base_power *
                              study.restoration_hours *
                              study.shed_price_per_mwh;
  if (!a.failed) {
    a.ufls_cost = a.label.tis_class == 1 ? ufls_dollars : 0.0;
    a.total_cost = a.dispatch_cost + a.ufls_cost;
  }

  // Branch B: interrupted-load estimate, risk pricing, robust redispatch,
  // and the same scripted contingency again.
  auto& b = rep.branch_b;
  if (!b.failed) {
    try {
      rep.predicted_load = estimate_interrupted_load(demand, rep.ace);

      SimConfig cct_cfg = sim_cfg;
      cct_cfg.horizon = study.cct_horizon;
      rep.cct_per_line.reserve(gcase.lines.size());
      std::vector<double> cct_cycles;
      std::vector<double> rates;
      for (const auto& line : gcase.lines) {
        const double cct = detail::cct_or_bracket(gcase, a.dispatch, line.id,
                                                  study.cct_location, cct_cfg,
                                                  study.cct_bracket_hi);
        rep.cct_per_line.push_back(cct);
        cct_cycles.push_back(cct * gcase.nominal_freq);
        rates.push_back(line.annual_fault_rate);
      }
      const RiskResult risk = instability_probability(
          cct_cycles, rates, study.risk_dist, -1.0, study.risk_dist.time_unit);
      rep.theta = risk.theta;

      RobustInput rin;
      rin.predicted_load = rep.predicted_load;
      rin.theta = rep.theta;
      rin.critical_cost = study.critical_cost;
      rin.sigma_cap = study.sigma_cap;
      const RobustnessResult rob =
          solve_robust_vis(gcase, rin, study.tol_sigma, base_in);
      rep.sigma_star = rob.sigma_star;
      rep.sigma_binding = rob.binding;
      rep.sigma_capped = rob.capped_by_feasibility;
      rep.budget = rob.budget;
      b.dispatch = rob.robust_dispatch;
      b.dispatch_cost = b.dispatch.total_cost;

      b.trajectory = simulate(gcase, b.dispatch, study.contingency, sim_cfg);
      b.label = classify_tis(b.trajectory);
      if (b.label.tis_class == 0) {
        b.recovery_time = detail::coi_recovery_time(
            b.trajectory, study.contingency.t_start, study.recovery_band);
        b.recovered = b.recovery_time >= 0.0 &&
                      b.recovery_time <= study.recovery_deadline;
      }
      b.ufls_cost = b.label.tis_class == 1 ? ufls_dollars : 0.0;
      b.total_cost = b.dispatch_cost + b.ufls_cost;

      rep.eigenvalues = linearize_eigenvalues(gcase, b.dispatch);
    } catch (const Error& e) {
      b.failed = true;
      b.error = e.what();
    }
  }
  return rep;
}

inline nlohmann::ordered_json case_study_json(const CaseStudyReport& rep) {
  auto branch = [](const BranchOutcome& br) {
    nlohmann::ordered_json j;
    j["failed"] = br.failed;
    if (br.failed) {
      j["error"] = br.error;
      return j;
    }
    j["dispatch_cost"] = br.dispatch_cost;
    j["tis_class"] = br.label.tis_class;
    j["lambda_max"] = br.label.lambda_max;
    j["margin"] = br.label.margin;
    if (br.label.tis_class == 0) {
      j["recovery_time"] = br.recovery_time;
      j["recovered"] = br.recovered;
    }
    j["ufls_cost"] = br.ufls_cost;
    j["total_cost"] = br.total_cost;
    return j;
  };
  nlohmann::ordered_json j;
  j["kind"] = "visgrid-case-study";
  j["branch_a"] = branch(rep.branch_a);
  j["branch_b"] = branch(rep.branch_b);
  j["prediction"] = {{"tis_class", rep.predicted_class},
                     {"confidence", rep.confidence},
                     {"freq_predicted", rep.freq_predicted},
                     {"delta_f_hz", rep.delta_f_hz}};
  j["ace"] = rep.ace;
  j["predicted_load"] = rep.predicted_load;
  j["theta"] = rep.theta;
  j["sigma_star"] = rep.sigma_star;
  j["sigma_binding"] = rep.sigma_binding;
  j["sigma_capped"] = rep.sigma_capped;
  j["budget"] = rep.budget;
  return j;
}

}  // namespace visgrid
