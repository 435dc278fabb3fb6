#pragma once

// Measurement windows for the predictors: 27 features per machine over the
// 0.5 s of samples ending at fault clearance (62 raw samples at 8 ms), linear
// upsampling to 250 columns, and the blurred per-row intensity normalization.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "visgrid/grid.hpp"
#include "visgrid/network.hpp"
#include "visgrid/sim.hpp"

namespace visgrid {

inline constexpr int kRawWindowSamples = 62;
inline constexpr int kUpsampledWindowSamples = 250;
inline constexpr int kFeaturesPerMachine = 27;
inline constexpr int kTertiaryRows = 9;

struct FeatureWindow {
  Mat values;  // (27 * n_machines) x width
  std::vector<std::pair<int, std::string>> row_map;  // (machine index, feature)
  double t_clear = 0.0;
  int raw_samples = kRawWindowSamples;
};

inline FeatureWindow extract_features(const TrajectoryRecord& traj, double t_clear) {
  const int n = traj.n_machines();
  if (n < 1) throw Error("extract_features: empty trajectory");
  if (traj.n_samples() < kRawWindowSamples)
    throw Error("extract_features: trajectory shorter than one window");
  // Locate the last sample at or before t_clear.
  int end = -1;
  for (int s = 0; s < traj.n_samples(); ++s)
    if (traj.t[static_cast<std::size_t>(s)] <= t_clear + 1e-9) end = s;
  if (end < 0) throw Error("extract_features: t_clear precedes the first sample");
  const int begin = end - (kRawWindowSamples - 1);
  if (begin < 0)
    throw Error("extract_features: window extends before the trajectory start");

  FeatureWindow w;
  w.t_clear = t_clear;
  w.values = Mat::Zero(kFeaturesPerMachine * n, kRawWindowSamples);
  w.row_map.reserve(static_cast<std::size_t>(kFeaturesPerMachine * n));

  const Mat* primary[9] = {&traj.i_d, &traj.i_q, &traj.v_d, &traj.v_q,
                           &traj.delta_deg, &traj.omega, &traj.t_e,
                           &traj.p_g, &traj.q_g};
  const char* names[9] = {"i_d", "i_q", "v_d", "v_q", "delta", "omega",
                          "t_e", "p_g", "q_g"};
  for (int m = 0; m < n; ++m) {
    const int base = kFeaturesPerMachine * m;
    for (int f = 0; f < 9; ++f) {
      for (int k = 0; k < kRawWindowSamples; ++k)
        w.values(base + f, k) = (*primary[f])(m, begin + k);
      w.row_map.emplace_back(m, names[f]);
    }
    for (int f = 0; f < 9; ++f) {
      // First differences of the primary rows; first entry zero.
      for (int k = 1; k < kRawWindowSamples; ++k)
        w.values(base + 9 + f, k) =
            w.values(base + f, k) - w.values(base + f, k - 1);
      w.row_map.emplace_back(m, std::string("d_") + names[f]);
    }
    int slot = 0;
    for (int j = 0; j < n && slot < kTertiaryRows; ++j) {
      if (j == m) continue;
      for (int k = 0; k < kRawWindowSamples; ++k)
        w.values(base + 18 + slot, k) =
            std::abs(traj.delta_deg(m, begin + k) - traj.delta_deg(j, begin + k));
      w.row_map.emplace_back(m, "dd_" + traj.machine_ids[static_cast<std::size_t>(j)]);
      ++slot;
    }
    for (; slot < kTertiaryRows; ++slot)
      w.row_map.emplace_back(m, "dd_pad");  // zero-padded counterpart rows
  }
  return w;
}

// Rowwise linear interpolation from 62 to 250 columns over the same span;
// endpoints map exactly.
inline Mat upsample(const Mat& raw) {
  if (raw.cols() != kRawWindowSamples)
    throw Error("upsample: expected " + std::to_string(kRawWindowSamples) +
                " columns, got " + std::to_string(raw.cols()));
  const int rows = static_cast<int>(raw.rows());
  Mat out(rows, kUpsampledWindowSamples);
  const double scale = static_cast<double>(kRawWindowSamples - 1) /
                       static_cast<double>(kUpsampledWindowSamples - 1);
  for (int k = 0; k < kUpsampledWindowSamples; ++k) {
    const double pos = k * scale;
    const int i0 = std::min(static_cast<int>(pos), kRawWindowSamples - 2);
    const double frac = pos - i0;
    for (int r = 0; r < rows; ++r)
      out(r, k) = (1.0 - frac) * raw(r, i0) + frac * raw(r, i0 + 1);
  }
  return out;
}

inline FeatureWindow upsample(const FeatureWindow& w) {
  FeatureWindow out = w;
  out.values = upsample(w.values);
  return out;
}

// Per-row min-max to [0, 1]; a constant row maps to 0.5 everywhere.
inline Mat normalize_rows(const Mat& m) {
  Mat out(m.rows(), m.cols());
  for (int r = 0; r < m.rows(); ++r) {
    const double lo = m.row(r).minCoeff();
    const double hi = m.row(r).maxCoeff();
    if (hi - lo < 1e-12)
      out.row(r).setConstant(0.5);
    else
      out.row(r) = (m.row(r).array() - lo) / (hi - lo);
  }
  return out;
}

// 3x3 uniform blur with edge replication.
inline Mat blur3x3(const Mat& m) {
  const int rows = static_cast<int>(m.rows()), cols = static_cast<int>(m.cols());
  Mat out(rows, cols);
  auto at = [&](int r, int k) {
    r = std::min(std::max(r, 0), rows - 1);
    k = std::min(std::max(k, 0), cols - 1);
    return m(r, k);
  };
  for (int r = 0; r < rows; ++r)
    for (int k = 0; k < cols; ++k) {
      double acc = 0.0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dk = -1; dk <= 1; ++dk) acc += at(r + dr, k + dk);
      out(r, k) = acc / 9.0;
    }
  return out;
}

inline Mat intensity_map(const Mat& window) {
  if (!window.allFinite()) throw Error("intensity_map: non-finite entries");
  return blur3x3(normalize_rows(window));
}

}  // namespace visgrid
