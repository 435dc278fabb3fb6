#pragma once

// Labeled training datasets built from fault sweeps: per-record metadata in a
// JSON-lines manifest plus a row-major float32 little-endian sidecar holding
// the upsampled feature windows.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visgrid/features.hpp"
#include "visgrid/grid.hpp"
#include "visgrid/sim.hpp"

namespace visgrid {

struct DatasetRecord {
  std::int64_t id = 0;
  std::uint64_t seed = 0;
  FaultScenario scenario;
  int label = 0;
  double lambda_max = 0.0;
  double margin = 0.0;
  double delta_f_hz = 0.0;  // first-swing COI deviation, regression target
  MatX<float> window;       // upsampled feature window, rows x cols
};

struct Dataset {
  int rows = 0, cols = 0;
  std::vector<DatasetRecord> records;
  int size() const { return static_cast<int>(records.size()); }
};

// Regression target: the signed COI frequency deviation at its largest-
// magnitude point within 2 s of fault inception, in Hz. Two seconds covers
// the first swing at these inertia levels; trajectories that abort early on
// loss of synchronism contribute whatever samples they have.
inline constexpr double kFirstSwingHorizon = 2.0;

inline double first_swing_deviation_hz(const TrajectoryRecord& traj,
                                       double t_start) {
  double best = 0.0;
  bool seen = false;
  for (int s = 0; s < traj.n_samples(); ++s) {
    const double t = traj.t[static_cast<std::size_t>(s)];
    if (t <= t_start + 1e-9) continue;
    if (t > t_start + kFirstSwingHorizon + 1e-9) break;
    const double dev = traj.coi[static_cast<std::size_t>(s)] - 1.0;
    if (!seen || std::abs(dev) > std::abs(best)) best = dev;
    seen = true;
  }
  if (!seen) throw Error("first_swing_deviation: no samples after t_start");
  return best * traj.nominal_freq;
}

// The regressor's training view: only windows whose trajectory stayed
// synchronous carry a genuine first-swing deviation, and the confidence gate
// keeps the regressor from speaking on unstable-looking windows anyway.
inline Dataset stable_subset(const Dataset& ds) {
  Dataset out;
  out.rows = ds.rows;
  out.cols = ds.cols;
  for (const auto& rec : ds.records)
    if (rec.label == 0) out.records.push_back(rec);
  return out;
}

inline DatasetRecord make_dataset_record(const SweepResult& res,
                                         std::int64_t id, std::uint64_t seed) {
  if (res.failed) throw Error("dataset: cannot build a record from a failed scenario");
  DatasetRecord rec;
  rec.id = id;
  rec.seed = seed;
  rec.scenario = res.scenario;
  rec.label = res.label.tis_class;
  rec.lambda_max = res.label.lambda_max;
  rec.margin = res.label.margin;
  rec.delta_f_hz = first_swing_deviation_hz(res.trajectory, res.scenario.t_start);
  const double t_clear = res.scenario.t_start + res.scenario.duration;
  rec.window = upsample(extract_features(res.trajectory, t_clear))
                   .values.cast<float>();
  return rec;
}

inline Dataset make_dataset(const std::vector<SweepResult>& results,
                            std::uint64_t seed) {
  Dataset ds;
  std::int64_t id = 0;
  for (const auto& res : results) {
    if (res.failed) {
      ++id;
      continue;  // failed scenarios are reported in the sweep manifest, not here
    }
    DatasetRecord rec = make_dataset_record(res, id++, seed);
    if (ds.records.empty()) {
      ds.rows = static_cast<int>(rec.window.rows());
      ds.cols = static_cast<int>(rec.window.cols());
    } else if (rec.window.rows() != ds.rows || rec.window.cols() != ds.cols) {
      throw Error("dataset: inconsistent window shape at record " +
                  std::to_string(rec.id));
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

namespace detail {

inline void append_f32_le(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  out.push_back(static_cast<char>(bits & 0xff));
  out.push_back(static_cast<char>((bits >> 8) & 0xff));
  out.push_back(static_cast<char>((bits >> 16) & 0xff));
  out.push_back(static_cast<char>((bits >> 24) & 0xff));
}

inline float read_f32_le(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  float v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

inline std::string sidecar_name(const std::string& manifest_path) {
  const auto slash = manifest_path.find_last_of('/');
  const std::string base =
      slash == std::string::npos ? manifest_path : manifest_path.substr(slash + 1);
  return base + ".f32";
}

inline std::string sibling_path(const std::string& manifest_path,
                                const std::string& name) {
  const auto slash = manifest_path.find_last_of('/');
  return slash == std::string::npos ? name
                                    : manifest_path.substr(0, slash + 1) + name;
}

}  // namespace detail

// Manifest: header line, then one JSON record per scenario. Windows go to the
// sidecar as row-major float32, little-endian, one block per record.
inline void save_dataset(const Dataset& ds, const std::string& manifest_path) {
  const std::string sidecar = detail::sidecar_name(manifest_path);
  nlohmann::ordered_json header;
  header["kind"] = "visgrid-dataset";
  header["rows"] = ds.rows;
  header["cols"] = ds.cols;
  header["count"] = ds.size();
  header["sidecar"] = sidecar;

  std::ofstream mf(manifest_path, std::ios::trunc);
  if (!mf) throw Error("dataset: cannot write " + manifest_path);
  mf << header.dump() << '\n';

  std::ofstream sf(detail::sibling_path(manifest_path, sidecar),
                   std::ios::trunc | std::ios::binary);
  if (!sf) throw Error("dataset: cannot write sidecar " + sidecar);
  std::string block;
  std::int64_t offset = 0;
  for (const auto& rec : ds.records) {
    nlohmann::ordered_json j;
    j["id"] = rec.id;
    j["seed"] = rec.seed;
    j["scenario"] = {{"line_id", rec.scenario.line_id},
                     {"duration", rec.scenario.duration},
                     {"location", rec.scenario.location},
                     {"load_scale", rec.scenario.load_scale},
                     {"t_start", rec.scenario.t_start}};
    j["label"] = rec.label;
    j["lambda_max"] = rec.lambda_max;
    j["margin"] = rec.margin;
    j["delta_f_hz"] = rec.delta_f_hz;
    j["offset"] = offset;  // element offset into the sidecar
    mf << j.dump() << '\n';
    block.clear();
    for (int r = 0; r < ds.rows; ++r)
      for (int c = 0; c < ds.cols; ++c)
        detail::append_f32_le(block, rec.window(r, c));
    sf.write(block.data(), static_cast<std::streamsize>(block.size()));
    offset += static_cast<std::int64_t>(ds.rows) * ds.cols;
  }
  if (!sf) throw Error("dataset: short write to sidecar " + sidecar);
}

inline Dataset load_dataset(const std::string& manifest_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw Error("dataset: cannot open " + manifest_path);
  std::string line;
  if (!std::getline(mf, line)) throw Error("dataset: empty manifest");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    throw Error("dataset: bad header: " + std::string(e.what()));
  }
  if (header.value("kind", "") != "visgrid-dataset")
    throw Error("dataset: not a dataset manifest: " + manifest_path);
  Dataset ds;
  ds.rows = header.at("rows").get<int>();
  ds.cols = header.at("cols").get<int>();
  const auto count = header.at("count").get<std::int64_t>();
  const std::string sidecar_path =
      detail::sibling_path(manifest_path, header.at("sidecar").get<std::string>());

  std::ifstream sf(sidecar_path, std::ios::binary);
  if (!sf) throw Error("dataset: cannot open sidecar " + sidecar_path);
  sf.seekg(0, std::ios::end);
  const std::size_t sidecar_bytes = static_cast<std::size_t>(sf.tellg());
  const std::size_t per_record = static_cast<std::size_t>(ds.rows) * ds.cols;
  if (sidecar_bytes != per_record * 4 * static_cast<std::size_t>(count))
    throw Error("dataset: sidecar size mismatch for " + sidecar_path);
  std::vector<unsigned char> block(per_record * 4);

  while (std::getline(mf, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw Error("dataset: bad record line: " + std::string(e.what()));
    }
    DatasetRecord rec;
    rec.id = j.at("id").get<std::int64_t>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    const auto& s = j.at("scenario");
    rec.scenario.line_id = s.at("line_id").get<int>();
    rec.scenario.duration = s.at("duration").get<double>();
    rec.scenario.location = s.at("location").get<double>();
    rec.scenario.load_scale = s.at("load_scale").get<double>();
    rec.scenario.t_start = s.at("t_start").get<double>();
    rec.label = j.at("label").get<int>();
    rec.lambda_max = j.at("lambda_max").get<double>();
    rec.margin = j.at("margin").get<double>();
    rec.delta_f_hz = j.at("delta_f_hz").get<double>();
    // Label consistency: the stored class must reproduce from the stored
    // angle separation.
    const double margin_check =
        (360.0 - rec.lambda_max) / (360.0 + rec.lambda_max);
    const int label_check = margin_check <= 0.0 ? 1 : 0;
    if (std::abs(margin_check - rec.margin) > 1e-9 || label_check != rec.label)
      throw Error("dataset: record " + std::to_string(rec.id) +
                  " label inconsistent with its angle separation");
    const auto off = j.at("offset").get<std::int64_t>();
    if (off < 0 || static_cast<std::size_t>(off) + per_record > sidecar_bytes / 4)
      throw Error("dataset: record " + std::to_string(rec.id) +
                  " offset out of range");
    sf.seekg(static_cast<std::streamoff>(off) * 4, std::ios::beg);
    if (!sf.read(reinterpret_cast<char*>(block.data()),
                 static_cast<std::streamsize>(block.size())))
      throw Error("dataset: short read in sidecar for record " +
                  std::to_string(rec.id));
    rec.window = MatX<float>(ds.rows, ds.cols);
    for (int r = 0; r < ds.rows; ++r)
      for (int c = 0; c < ds.cols; ++c)
        rec.window(r, c) = detail::read_f32_le(
            block.data() + (static_cast<std::size_t>(r) * ds.cols + c) * 4);
    ds.records.push_back(std::move(rec));
  }
  if (ds.size() != count)
    throw Error("dataset: manifest count " + std::to_string(count) +
                " does not match " + std::to_string(ds.size()) + " records");
  return ds;
}

}  // namespace visgrid
