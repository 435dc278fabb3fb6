// visgrid command-line driver: simulation, CCT search, scenario sweeps,
// dataset construction, model training, dispatch, robust dispatch, risk
// aggregation, eigenvalue analysis, and the two-branch case study.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "visgrid/case_io.hpp"
#include "visgrid/casestudy.hpp"
#include "visgrid/dataset.hpp"
#include "visgrid/dispatch.hpp"
#include "visgrid/grid.hpp"
#include "visgrid/igdt.hpp"
#include "visgrid/predictor.hpp"
#include "visgrid/report.hpp"
#include "visgrid/risk.hpp"
#include "visgrid/sim.hpp"

#ifndef VISGRID_DATA_DIR
#define VISGRID_DATA_DIR "data"
#endif

namespace {

using namespace visgrid;
namespace fs = std::filesystem;

std::string data_dir() {
  if (const char* env = std::getenv("VISGRID_DATA")) return env;
  return VISGRID_DATA_DIR;
}

std::string resolve_case_path(const std::string& name) {
  if (fs::exists(name)) return name;
  const std::string bundled = data_dir() + "/" + name + ".json";
  if (fs::exists(bundled)) return bundled;
  throw Error("case '" + name + "' not found (tried '" + name + "' and '" +
              bundled + "')");
}

int worker_count() {
  if (const char* env = std::getenv("VISGRID_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

struct Ctx {
  std::string case_name = "case39_vis";
  std::uint64_t seed = 1;
  std::string out = "out";
  double tol = 1e-8;

  std::string case_path;
  GridCase gcase;
  std::map<std::string, std::string> flags;

  void load() {
    case_path = resolve_case_path(case_name);
    gcase = load_case(case_path);
    fs::create_directories(out);
  }
  std::string path(const std::string& name) const { return out + "/" + name; }
  void flag(const std::string& k, const std::string& v) { flags[k] = v; }
  void flag(const std::string& k, double v) {
    flags[k] = detail::fmt_g17(v);
  }
  void flag(const std::string& k, std::uint64_t v) { flags[k] = std::to_string(v); }
  void flag(const std::string& k, int v) { flags[k] = std::to_string(v); }
  void manifest(const std::string& command,
                const std::vector<std::string>& artifacts) const {
    write_run_manifest(command, case_path, gcase, seed, flags, artifacts,
                       out + "/" + command + "_manifest.json");
  }
};

FaultScenario scenario_from_flags(const Ctx& ctx, int line_id, double tau,
                                  double location, double k, double t_start,
                                  const std::string& trip_machine,
                                  double trip_time) {
  FaultScenario scn;
  scn.line_id = line_id != 0 ? line_id
                             : (ctx.gcase.lines.empty() ? 0
                                                        : ctx.gcase.lines.front().id);
  scn.duration = tau;
  scn.location = location;
  scn.load_scale = k;
  scn.t_start = t_start;
  if (!trip_machine.empty()) scn.generator_trip = GeneratorTrip{trip_machine, trip_time};
  return scn;
}

int cmd_simulate(Ctx& ctx, const FaultScenario& scn, double step, double horizon) {
  SimConfig cfg;
  cfg.step = step;
  cfg.horizon = horizon;
  const DispatchSolution dis = solve_vis(ctx.gcase, ctx.tol);
  const TrajectoryRecord traj = simulate(ctx.gcase, dis, scn, cfg);
  const TisLabel label = classify_tis(traj);
  write_trajectory_csv(traj, ctx.path("trajectory.csv"));
  write_events_csv(traj, ctx.path("events.csv"));
  write_coi_csv(traj, ctx.path("coi.csv"));
  write_svg_series(traj.t, {traj.coi}, {"COI"}, "COI frequency", "t [s]",
                   "omega [pu]", ctx.path("coi.svg"));
  ctx.manifest("simulate", {"trajectory.csv", "events.csv", "coi.csv", "coi.svg"});
  std::cout << "tis_class " << label.tis_class << " lambda_max "
            << label.lambda_max << " margin " << label.margin
            << (traj.aborted ? " (aborted: " + traj.abort_reason + ")" : "")
            << '\n';
  return 0;
}

int cmd_cct(Ctx& ctx, int line_id, double location, double lo, double hi,
            double step, double horizon, double t_start, double k) {
  SimConfig cfg;
  cfg.step = step;
  cfg.horizon = horizon;
  const DispatchSolution dis = solve_vis(ctx.gcase, ctx.tol);
  const double cct =
      compute_cct(ctx.gcase, dis, line_id, location, cfg, lo, hi, -1.0, t_start, k);
  nlohmann::ordered_json j;
  j["kind"] = "visgrid-cct";
  j["line_id"] = line_id;
  j["location"] = location;
  j["cct"] = cct;
  j["tolerance"] = 2.0 * cfg.step;
  detail::open_out(ctx.path("cct.json")) << j.dump(2) << '\n';
  ctx.manifest("cct", {"cct.json"});
  std::cout << "cct " << detail::fmt_g17(cct) << '\n';
  return 0;
}

std::vector<SweepResult> run_sweep(Ctx& ctx, int count, const SweepRanges& ranges,
                                   double step, double horizon) {
  SimConfig cfg;
  cfg.step = step;
  cfg.horizon = horizon;
  const DispatchSolution dis = solve_vis(ctx.gcase, ctx.tol);
  return sweep_scenarios(ctx.gcase, dis, count, ranges, ctx.seed, cfg,
                         worker_count());
}

int cmd_sweep(Ctx& ctx, int count, const SweepRanges& ranges, double step,
              double horizon) {
  const auto results = run_sweep(ctx, count, ranges, step, horizon);
  write_sweep_manifest(results, ctx.seed, ctx.path("sweep.jsonl"));
  ctx.manifest("sweep", {"sweep.jsonl"});
  int unstable = 0, failed = 0;
  for (const auto& r : results) {
    failed += r.failed ? 1 : 0;
    unstable += (!r.failed && r.label.tis_class == 1) ? 1 : 0;
  }
  std::cout << "scenarios " << results.size() << " unstable " << unstable
            << " failed " << failed << '\n';
  return 0;
}

// Simulates in blocks so trajectories never pile up in memory; only the
// feature windows and the per-scenario manifest rows are kept.
int cmd_dataset(Ctx& ctx, int count, const SweepRanges& ranges, double step,
                double horizon) {
  SimConfig cfg;
  cfg.step = step;
  cfg.horizon = horizon;
  const DispatchSolution dis = solve_vis(ctx.gcase, ctx.tol);
  const auto scns = draw_scenarios(ctx.gcase, count, ranges, ctx.seed);

  Dataset ds;
  std::vector<SweepResult> meta;
  meta.reserve(scns.size());
  constexpr int kBlock = 256;
  std::int64_t id = 0;
  for (std::size_t at = 0; at < scns.size(); at += kBlock) {
    const auto last = std::min(scns.size(), at + kBlock);
    const std::vector<FaultScenario> slice(scns.begin() + static_cast<std::ptrdiff_t>(at),
                                           scns.begin() + static_cast<std::ptrdiff_t>(last));
    auto results = run_scenarios(ctx.gcase, dis, slice, cfg, worker_count());
    for (auto& res : results) {
      if (!res.failed) {
        DatasetRecord rec = make_dataset_record(res, id, ctx.seed);
        if (ds.records.empty()) {
          ds.rows = static_cast<int>(rec.window.rows());
          ds.cols = static_cast<int>(rec.window.cols());
        }
        ds.records.push_back(std::move(rec));
      }
      ++id;
      res.trajectory = TrajectoryRecord{};
      meta.push_back(std::move(res));
    }
  }
  save_dataset(ds, ctx.path("dataset.jsonl"));
  write_sweep_manifest(meta, ctx.seed, ctx.path("sweep.jsonl"));
  ctx.manifest("dataset", {"dataset.jsonl", "dataset.jsonl.f32", "sweep.jsonl"});
  int unstable = 0;
  for (const auto& r : ds.records) unstable += r.label;
  std::cout << "records " << ds.size() << " unstable " << unstable << '\n';
  return 0;
}

int cmd_train(Ctx& ctx, const std::string& dataset_path, const std::string& kind,
              const std::string& model_out, const TrainConfig& cfg,
              bool stable_only) {
  Dataset ds = load_dataset(dataset_path);
  if (stable_only) ds = stable_subset(ds);
  const std::string out_path =
      model_out.empty() ? ctx.path(kind + ".txt") : model_out;
  if (kind == "classifier") {
    const ClassifierModel m = train_classifier(ds, cfg);
    save_classifier(m, out_path);
    std::cout << "holdout_accuracy " << m.holdout_accuracy << '\n';
  } else if (kind == "regressor") {
    const RegressorModel m = train_regressor(ds, cfg);
    save_regressor(m, out_path);
    std::cout << "holdout_rmse " << m.holdout_rmse << '\n';
  } else {
    throw Error("train: unknown model kind '" + kind + "'");
  }
  ctx.manifest("train", {out_path});
  return 0;
}

int cmd_dispatch(Ctx& ctx, std::optional<double> demand) {
  DispatchInput in = DispatchInput::from_case(ctx.gcase);
  if (demand) in = in.with_demand(*demand);
  const DispatchSolution sol = solve_vis(ctx.gcase, in, ctx.tol);
  const auto viol = check_feasibility(sol, in, ctx.gcase);
  write_dispatch_report(ctx.gcase, in, sol, viol, ctx.path("dispatch.json"));
  ctx.manifest("dispatch", {"dispatch.json"});
  std::cout << "total_cost " << detail::fmt_g17(sol.total_cost)
            << " kkt_residual " << sol.kkt_residual << '\n';
  return 0;
}

int cmd_robust(Ctx& ctx, double theta, double cc, std::optional<double> phat,
               double tie, double bias, double deltaf, double sigma_cap,
               double tol_sigma) {
  RobustInput rin;
  if (phat) {
    rin.predicted_load = *phat;
  } else {
    const double ace = compute_ace({tie, bias, deltaf});
    rin.predicted_load = estimate_interrupted_load(ctx.gcase.total_load(), ace);
  }
  rin.theta = theta;
  rin.critical_cost = cc;
  rin.sigma_cap = sigma_cap;
  const RobustnessResult res = solve_robust_vis(ctx.gcase, rin, tol_sigma);
  write_robust_report(res, ctx.path("robust.json"));
  const DispatchInput in = DispatchInput::from_case(ctx.gcase).with_demand(
      worst_case_demand(rin.predicted_load, res.sigma_star));
  const auto viol = check_feasibility(res.robust_dispatch, in, ctx.gcase);
  write_dispatch_report(ctx.gcase, in, res.robust_dispatch, viol,
                        ctx.path("robust_dispatch.json"));
  ctx.manifest("robust", {"robust.json", "robust_dispatch.json"});
  std::cout << "sigma_star " << detail::fmt_g17(res.sigma_star)
            << " worst_case_cost " << detail::fmt_g17(res.worst_case_cost)
            << " budget " << detail::fmt_g17(res.budget) << '\n';
  return 0;
}

int cmd_risk(Ctx& ctx, double mean_a, double mean_b, double sigma_t,
             const std::string& time_unit, double location, double cct_hi,
             double step, double horizon) {
  SimConfig cfg;
  cfg.step = step;
  cfg.horizon = horizon;
  const DispatchSolution dis = solve_vis(ctx.gcase, ctx.tol);
  std::vector<double> cct_cycles, rates, cct_s;
  for (const auto& line : ctx.gcase.lines) {
    const double cct =
        detail::cct_or_bracket(ctx.gcase, dis, line.id, location, cfg, cct_hi);
    cct_s.push_back(cct);
    cct_cycles.push_back(cct * ctx.gcase.nominal_freq);
    rates.push_back(line.annual_fault_rate);
  }
  DurationDistribution dist;
  dist.mean_a = mean_a;
  dist.mean_b = mean_b;
  dist.sigma = sigma_t;
  dist.time_unit = time_unit;
  RiskResult res = instability_probability(cct_cycles, rates, dist, -1.0,
                                           time_unit);
  res.cct = cct_s;  // report CCTs in seconds
  write_risk_csv(ctx.gcase, res, ctx.path("risk.csv"));
  ctx.manifest("risk", {"risk.csv"});
  std::cout << "theta " << detail::fmt_g17(res.theta)
            << (res.clamped ? " (clamped)" : "") << '\n';
  return 0;
}

int cmd_eigen(Ctx& ctx) {
  const DispatchSolution dis = solve_vis(ctx.gcase, ctx.tol);
  const auto eigs = linearize_eigenvalues(ctx.gcase, dis);
  write_eigen_csv(eigs, ctx.path("eigen.csv"));
  write_svg_scatter(eigs, "Swing linearization eigenvalues", ctx.path("eigen.svg"));
  ctx.manifest("eigen", {"eigen.csv", "eigen.svg"});
  double max_re = -1e300;
  for (const auto& e : eigs)
    if (std::abs(e.real()) > 1e-8 || std::abs(e.imag()) > 1e-8)
      max_re = std::max(max_re, e.real());
  std::cout << "modes " << eigs.size() << " max_nonzero_re "
            << detail::fmt_g17(max_re) << '\n';
  return 0;
}

// Deterministic fallback models when no trained artifacts are supplied: a
// small seeded sweep provides the training set.
void quick_models(Ctx& ctx, std::optional<ClassifierModel>& cls,
                  std::optional<RegressorModel>& reg) {
  if (cls && reg) return;
  SweepRanges ranges;
  const auto results = run_sweep(ctx, 120, ranges, 1e-3, 4.5);
  const Dataset ds = make_dataset(results, ctx.seed);
  if (!cls) {
    TrainConfig cfg;
    cfg.seed = ctx.seed;
    cfg.epochs = 16;
    cfg.learning_rate = 0.03;
    cls = train_classifier(ds, cfg);
  }
  if (!reg) {
    TrainConfig cfg;
    cfg.seed = ctx.seed;
    cfg.epochs = 12;
    cfg.learning_rate = 1e-3;
    reg = train_regressor(ds, cfg);
  }
}

int cmd_case_study(Ctx& ctx, const std::string& study_path,
                   const std::string& classifier_path,
                   const std::string& regressor_path) {
  const StudyConfig study = load_study(study_path);
  std::optional<ClassifierModel> cls;
  std::optional<RegressorModel> reg;
  if (!classifier_path.empty()) cls = load_classifier(classifier_path);
  if (!regressor_path.empty()) reg = load_regressor(regressor_path);
  quick_models(ctx, cls, reg);

  const CaseStudyReport rep = run_case_study(ctx.gcase, study, *cls, *reg);
  detail::open_out(ctx.path("case_study.json")) << case_study_json(rep).dump(2)
                                                << '\n';
  std::vector<std::string> artifacts = {"case_study.json"};
  if (!rep.branch_a.failed) {
    write_coi_csv(rep.branch_a.trajectory, ctx.path("coi_a.csv"));
    artifacts.push_back("coi_a.csv");
  }
  if (!rep.branch_b.failed) {
    write_coi_csv(rep.branch_b.trajectory, ctx.path("coi_b.csv"));
    write_svg_series(rep.branch_b.trajectory.t, {rep.branch_b.trajectory.coi},
                     {"COI (robust)"}, "COI frequency, robust dispatch",
                     "t [s]", "omega [pu]", ctx.path("coi_b.svg"));
    write_eigen_csv(rep.eigenvalues, ctx.path("eigen.csv"));
    write_svg_scatter(rep.eigenvalues, "Robust equilibrium eigenvalues",
                      ctx.path("eigen.svg"));
    artifacts.insert(artifacts.end(),
                     {"coi_b.csv", "coi_b.svg", "eigen.csv", "eigen.svg"});
  }
  ctx.manifest("case-study", artifacts);
  std::cout << "branch_a class "
            << (rep.branch_a.failed ? std::string("failed")
                                    : std::to_string(rep.branch_a.label.tis_class))
            << " branch_b class "
            << (rep.branch_b.failed ? std::string("failed")
                                    : std::to_string(rep.branch_b.label.tis_class))
            << " sigma_star " << rep.sigma_star << " theta " << rep.theta
            << '\n';
  if (rep.branch_a.failed || rep.branch_b.failed) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"visgrid: transient-fault simulation, instability prediction, "
               "and robust virtual-inertia dispatch"};
  app.require_subcommand(1);

  Ctx ctx;
  app.add_option("--case", ctx.case_name, "Case file path or bundled case name");
  app.add_option("--seed", ctx.seed, "Random seed");
  app.add_option("--out", ctx.out, "Output directory");
  app.add_option("--tol", ctx.tol, "Solver tolerance");

  // simulate
  auto* c_sim = app.add_subcommand("simulate", "Integrate one fault scenario");
  int line_id = 0;
  double tau = 0.0, location = 0.5, k = 1.0, t_start = 2.0;
  std::string trip_machine;
  double trip_time = 0.0, step = 1e-3, horizon = 7.0;
  c_sim->add_option("--line", line_id, "Faulted line id");
  c_sim->add_option("--tau", tau, "Fault duration, s");
  c_sim->add_option("--location", location, "Fault location fraction");
  c_sim->add_option("--k", k, "Load scale");
  c_sim->add_option("--t-start", t_start, "Fault inception time, s");
  c_sim->add_option("--trip", trip_machine, "Machine id to trip");
  c_sim->add_option("--trip-time", trip_time, "Trip time, s");
  c_sim->add_option("--step", step, "Integration step, s");
  c_sim->add_option("--horizon", horizon, "Simulation span, s");

  // cct
  auto* c_cct = app.add_subcommand("cct", "Critical clearing time bisection");
  int cct_line = 0;
  double cct_loc = 0.5, cct_lo = 0.0, cct_hi = 0.5, cct_step = 1e-3,
         cct_horizon = 5.0, cct_tstart = 0.5, cct_k = 1.0;
  c_cct->add_option("--line", cct_line, "Line id")->required();
  c_cct->add_option("--location", cct_loc, "Fault location fraction");
  c_cct->add_option("--lo", cct_lo, "Bracket lower end, s");
  c_cct->add_option("--hi", cct_hi, "Bracket upper end, s");
  c_cct->add_option("--step", cct_step, "Integration step, s");
  c_cct->add_option("--horizon", cct_horizon, "Simulation span, s");
  c_cct->add_option("--t-start", cct_tstart, "Fault inception time, s");
  c_cct->add_option("--k", cct_k, "Load scale");

  // sweep / dataset
  SweepRanges ranges;
  int count = 100;
  double sw_step = 1e-3, sw_horizon = 7.0;
  auto add_sweep_flags = [&](CLI::App* cmd) {
    cmd->add_option("--count", count, "Scenario count");
    cmd->add_option("--tau-min", ranges.tau_min, "Min fault duration, s");
    cmd->add_option("--tau-max", ranges.tau_max, "Max fault duration, s");
    cmd->add_option("--x-min", ranges.x_min, "Min location fraction");
    cmd->add_option("--x-max", ranges.x_max, "Max location fraction");
    cmd->add_option("--k-min", ranges.k_min, "Min load scale");
    cmd->add_option("--k-max", ranges.k_max, "Max load scale");
    cmd->add_option("--t-start", ranges.t_start, "Fault inception time, s");
    cmd->add_option("--step", sw_step, "Integration step, s");
    cmd->add_option("--horizon", sw_horizon, "Simulation span, s");
  };
  auto* c_sweep = app.add_subcommand("sweep", "Random fault-scenario sweep");
  add_sweep_flags(c_sweep);
  auto* c_dataset =
      app.add_subcommand("dataset", "Sweep and save a labeled window dataset");
  add_sweep_flags(c_dataset);

  // train
  auto* c_train = app.add_subcommand("train", "Train a model from a dataset");
  std::string ds_path, model_kind = "classifier", model_out;
  TrainConfig tcfg;
  c_train->add_option("--dataset", ds_path, "Dataset manifest path")->required();
  c_train->add_option("--model", model_kind, "classifier | regressor");
  c_train->add_option("--model-out", model_out, "Model file path");
  c_train->add_option("--epochs", tcfg.epochs, "Training epochs");
  c_train->add_option("--lr", tcfg.learning_rate, "Learning rate");
  c_train->add_option("--momentum", tcfg.momentum, "SGD momentum");
  c_train->add_option("--batch", tcfg.batch_size, "Mini-batch size");
  c_train->add_option("--holdout", tcfg.holdout_fraction, "Holdout fraction");
  c_train->add_option("--noise", tcfg.noise_std, "Training input jitter stdev");
  c_train->add_option("--wd", tcfg.weight_decay, "Decoupled weight decay");
  bool stable_only = false;
  c_train->add_flag("--stable-only", stable_only,
                    "Train on class-0 records only (regressor view)");
  c_train->add_option("--workers", tcfg.workers,
                      "Batch-gradient threads (0 = hardware)");

  // dispatch
  auto* c_dispatch = app.add_subcommand("dispatch", "Solve the VIS dispatch");
  double demand_flag = -1.0;
  c_dispatch->add_option("--demand", demand_flag,
                         "Demand override, pu (default: case total load)");

  // robust
  auto* c_robust = app.add_subcommand("robust", "IGDT robust dispatch");
  double theta = 0.0, cc = 0.0, phat_flag = -1.0, tie = 0.0, bias = -0.05,
         deltaf = 0.0, sigma_cap = 2.0, tol_sigma = 1e-5;
  c_robust->add_option("--theta", theta, "Collapse probability in [0, 1]");
  c_robust->add_option("--cc", cc, "Critical cost, $")->required();
  c_robust->add_option("--phat", phat_flag, "Predicted load, pu");
  c_robust->add_option("--tie", tie, "Tie flow change, pu");
  c_robust->add_option("--bias", bias, "Frequency bias, pu per 0.1 Hz");
  c_robust->add_option("--deltaf", deltaf, "Frequency deviation, Hz");
  c_robust->add_option("--sigma-cap", sigma_cap, "Upper bracket for sigma");
  c_robust->add_option("--tol-sigma", tol_sigma, "Bisection tolerance");

  // risk
  auto* c_risk = app.add_subcommand("risk", "Instability probability");
  double mean_a = 3.5, mean_b = 4.0, sigma_t = 0.5;
  std::string time_unit = "cycles";
  double risk_loc = 0.5, risk_cct_hi = 0.5, risk_step = 1e-3, risk_horizon = 5.0;
  c_risk->add_option("--mean-a", mean_a, "Duration mixture mean A");
  c_risk->add_option("--mean-b", mean_b, "Duration mixture mean B");
  c_risk->add_option("--sigma-t", sigma_t, "Duration standard deviation");
  c_risk->add_option("--time-unit", time_unit, "Duration time unit");
  c_risk->add_option("--location", risk_loc, "Fault location fraction");
  c_risk->add_option("--cct-hi", risk_cct_hi, "CCT bracket upper end, s");
  c_risk->add_option("--step", risk_step, "Integration step, s");
  c_risk->add_option("--horizon", risk_horizon, "Simulation span, s");

  // eigen
  auto* c_eigen = app.add_subcommand("eigen", "Equilibrium eigenvalues");

  // case-study
  auto* c_study = app.add_subcommand("case-study", "Two-branch case study");
  std::string study_path, classifier_path, regressor_path;
  c_study->add_option("--study", study_path, "Study config path")->required();
  c_study->add_option("--classifier", classifier_path, "Classifier model file");
  c_study->add_option("--regressor", regressor_path, "Regressor model file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    ctx.load();
    ctx.flag("case", ctx.case_name);
    ctx.flag("seed", ctx.seed);
    ctx.flag("tol", ctx.tol);
    if (*c_sim) {
      ctx.flag("line", line_id);
      ctx.flag("tau", tau);
      ctx.flag("location", location);
      ctx.flag("k", k);
      ctx.flag("t_start", t_start);
      if (!trip_machine.empty()) {
        ctx.flag("trip", trip_machine);
        ctx.flag("trip_time", trip_time);
      }
      ctx.flag("step", step);
      ctx.flag("horizon", horizon);
      return cmd_simulate(ctx,
                          scenario_from_flags(ctx, line_id, tau, location, k,
                                              t_start, trip_machine, trip_time),
                          step, horizon);
    }
    if (*c_cct) {
      ctx.flag("line", cct_line);
      ctx.flag("location", cct_loc);
      ctx.flag("lo", cct_lo);
      ctx.flag("hi", cct_hi);
      ctx.flag("step", cct_step);
      ctx.flag("horizon", cct_horizon);
      ctx.flag("t_start", cct_tstart);
      ctx.flag("k", cct_k);
      return cmd_cct(ctx, cct_line, cct_loc, cct_lo, cct_hi, cct_step,
                     cct_horizon, cct_tstart, cct_k);
    }
    if (*c_sweep || *c_dataset) {
      ctx.flag("count", count);
      ctx.flag("tau_min", ranges.tau_min);
      ctx.flag("tau_max", ranges.tau_max);
      ctx.flag("x_min", ranges.x_min);
      ctx.flag("x_max", ranges.x_max);
      ctx.flag("k_min", ranges.k_min);
      ctx.flag("k_max", ranges.k_max);
      ctx.flag("t_start", ranges.t_start);
      ctx.flag("step", sw_step);
      ctx.flag("horizon", sw_horizon);
      return *c_sweep ? cmd_sweep(ctx, count, ranges, sw_step, sw_horizon)
                      : cmd_dataset(ctx, count, ranges, sw_step, sw_horizon);
    }
    if (*c_train) {
      ctx.flag("dataset", ds_path);
      ctx.flag("model", model_kind);
      ctx.flag("epochs", tcfg.epochs);
      ctx.flag("lr", tcfg.learning_rate);
      ctx.flag("momentum", tcfg.momentum);
      ctx.flag("batch", tcfg.batch_size);
      ctx.flag("holdout", tcfg.holdout_fraction);
      tcfg.seed = ctx.seed;
      return cmd_train(ctx, ds_path, model_kind, model_out, tcfg, stable_only);
    }
    if (*c_dispatch) {
      std::optional<double> demand;
      if (c_dispatch->count("--demand")) demand = demand_flag;
      if (demand) ctx.flag("demand", *demand);
      return cmd_dispatch(ctx, demand);
    }
    if (*c_robust) {
      std::optional<double> phat;
      if (c_robust->count("--phat")) phat = phat_flag;
      ctx.flag("theta", theta);
      ctx.flag("cc", cc);
      if (phat) ctx.flag("phat", *phat);
      ctx.flag("tie", tie);
      ctx.flag("bias", bias);
      ctx.flag("deltaf", deltaf);
      ctx.flag("sigma_cap", sigma_cap);
      ctx.flag("tol_sigma", tol_sigma);
      return cmd_robust(ctx, theta, cc, phat, tie, bias, deltaf, sigma_cap,
                        tol_sigma);
    }
    if (*c_risk) {
      ctx.flag("mean_a", mean_a);
      ctx.flag("mean_b", mean_b);
      ctx.flag("sigma_t", sigma_t);
      ctx.flag("time_unit", time_unit);
      ctx.flag("location", risk_loc);
      ctx.flag("cct_hi", risk_cct_hi);
      ctx.flag("step", risk_step);
      ctx.flag("horizon", risk_horizon);
      return cmd_risk(ctx, mean_a, mean_b, sigma_t, time_unit, risk_loc,
                      risk_cct_hi, risk_step, risk_horizon);
    }
    if (*c_eigen) return cmd_eigen(ctx);
    if (*c_study) {
      ctx.flag("study", study_path);
      if (!classifier_path.empty()) ctx.flag("classifier", classifier_path);
      if (!regressor_path.empty()) ctx.flag("regressor", regressor_path);
      return cmd_case_study(ctx, study_path, classifier_path, regressor_path);
    }
    std::cerr << "usage error: no subcommand selected\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
