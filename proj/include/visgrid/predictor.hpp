#pragma once

// Training and inference wrappers: the convolutional-attention TIS classifier
// and the convolutional-attention first-swing frequency regressor with its
// dense 400/300/300 head, both on windows standardized rowwise with
// training-set statistics, confidence gating, and structured-text model files
// with bit-exact reload.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "visgrid/dataset.hpp"
#include "visgrid/features.hpp"
#include "visgrid/grid.hpp"
#include "visgrid/nn.hpp"

namespace visgrid {

struct TrainConfig {
  std::uint64_t seed = 1;
  int epochs = 30;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double holdout_fraction = 0.2;
  int batch_size = 32;
  double noise_std = 0.0;     // per-element Gaussian input jitter, training only
  double weight_decay = 0.0;  // decoupled decay per optimizer step
  int workers = 0;            // threads for batch gradients, 0 = hardware default
};

inline constexpr double kConfidenceGate = 0.90;

struct ClassifierModel {
  int rows = 0, cols = 0;
  std::uint64_t seed = 0;
  CnnAttNet<float> net;
  VecX<float> row_mean, row_std;  // training-set normalization statistics
  double holdout_accuracy = 0.0;

  template <typename Derived>
  MatX<float> normalize(const Eigen::MatrixBase<Derived>& window) const {
    if (window.rows() != rows || window.cols() != cols)
      throw Error("classifier: window is " + std::to_string(window.rows()) +
                  "x" + std::to_string(window.cols()) + ", expected " +
                  std::to_string(rows) + "x" + std::to_string(cols));
    MatX<float> x(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        x(r, c) = (static_cast<float>(window(r, c)) - row_mean(r)) / row_std(r);
    return x;
  }
};

struct RegressorModel {
  int rows = 0, cols = 0;
  std::uint64_t seed = 0;
  CnnAttRegNet<float> net;
  VecX<float> row_mean, row_std;      // training-set normalization statistics
  float y_mean = 0.0f, y_std = 1.0f;  // target standardization, Hz
  double holdout_rmse = 0.0;

  template <typename Derived>
  MatX<float> normalize(const Eigen::MatrixBase<Derived>& window) const {
    if (window.rows() != rows || window.cols() != cols)
      throw Error("regressor: window is " + std::to_string(window.rows()) +
                  "x" + std::to_string(window.cols()) + ", expected " +
                  std::to_string(rows) + "x" + std::to_string(cols));
    MatX<float> x(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        x(r, c) = (static_cast<float>(window(r, c)) - row_mean(r)) / row_std(r);
    return x;
  }
};

struct TisPrediction {
  int tis_class = 0;
  double probability = 0.0;  // softmax mass of the returned class
};

struct FreqPrediction {
  bool predicted = false;  // false: below the confidence gate, no prediction
  double delta_f_hz = 0.0;
  int tis_class = 0;
  double confidence = 0.0;
};

namespace detail {

struct Split {
  std::vector<int> train, holdout;
};

inline Split split_dataset(int n, const TrainConfig& cfg) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 gen(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(gen() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  Split sp;
  int n_hold = static_cast<int>(std::lround(cfg.holdout_fraction * n));
  n_hold = std::min(std::max(n_hold, 1), n - 1);
  sp.holdout.assign(idx.begin(), idx.begin() + n_hold);
  sp.train.assign(idx.begin() + n_hold, idx.end());
  return sp;
}

inline void shuffle_indices(std::vector<int>& idx, std::mt19937_64& gen) {
  for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
    const int j = static_cast<int>(gen() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
}

inline void check_dataset_shape(const Dataset& ds) {
  if (ds.records.empty()) throw Error("training: empty dataset");
  for (const auto& rec : ds.records)
    if (rec.window.rows() != ds.rows || rec.window.cols() != ds.cols)
      throw Error("training: record " + std::to_string(rec.id) +
                  " window shape mismatch");
}

// Cosine decay from the base rate down to zero over the training run.
inline double cosine_lr(double base, int epoch, int epochs) {
  if (epochs <= 1) return base;
  const double frac = static_cast<double>(epoch) / static_cast<double>(epochs);
  return base * 0.5 * (1.0 + std::cos(frac * 3.14159265358979323846));
}

inline int resolve_workers(int requested, int count) {
  if (requested > 0) return std::min(requested, std::max(count, 1));
  const unsigned hw = std::thread::hardware_concurrency();
  const int cap = hw == 0 ? 1 : static_cast<int>(hw);
  return std::max(1, std::min(cap, std::max(count, 1)));
}

// Batch gradient summed over fixed contiguous per-worker slices with the
// buffers reduced in worker order, so the floating-point result depends only
// on the worker count, never on scheduling.
template <typename Scalar, typename Ws, typename PerItem>
inline Scalar batch_gradient(int count, int workers, VecX<Scalar>& grad,
                             PerItem&& per_item) {
  grad.setZero();
  if (workers <= 1) {
    Ws ws;
    Scalar loss = 0;
    for (int b = 0; b < count; ++b) loss += per_item(b, ws, grad);
    return loss;
  }
  std::vector<VecX<Scalar>> gbuf(static_cast<std::size_t>(workers));
  std::vector<Scalar> lbuf(static_cast<std::size_t>(workers), Scalar(0));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w]() {
      auto& g = gbuf[static_cast<std::size_t>(w)];
      g = VecX<Scalar>::Zero(grad.size());
      Ws ws;
      const int lo = count * w / workers;
      const int hi = count * (w + 1) / workers;
      for (int b = lo; b < hi; ++b)
        lbuf[static_cast<std::size_t>(w)] += per_item(b, ws, g);
    });
  for (auto& th : pool) th.join();
  Scalar loss = 0;
  for (int w = 0; w < workers; ++w) {
    grad += gbuf[static_cast<std::size_t>(w)];
    loss += lbuf[static_cast<std::size_t>(w)];
  }
  return loss;
}

// Training-only input jitter, seeded per (seed, epoch, record) so the noise a
// record sees is independent of batch order and worker count.
inline void add_input_noise(MatX<float>& x, double noise_std,
                            std::uint64_t seed, int epoch, int record) {
  std::uint64_t s = seed;
  s ^= 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(epoch) +
       (s << 6) + (s >> 2);
  s ^= 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(record) +
       (s << 6) + (s >> 2);
  std::mt19937_64 gen(s);
  std::normal_distribution<float> jitter(0.0f, static_cast<float>(noise_std));
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) += jitter(gen);
}

// Pooled per-row mean and standard deviation over the training windows.
inline void row_statistics(const Dataset& ds, const std::vector<int>& train,
                           VecX<float>& mean, VecX<float>& stdev) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(ds.rows);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(ds.rows);
  for (const int i : train)
    for (int r = 0; r < ds.rows; ++r) {
      const auto row =
          ds.records[static_cast<std::size_t>(i)].window.row(r).cast<double>();
      m(r) += row.mean();
      m2(r) += row.array().square().mean();
    }
  m /= static_cast<double>(train.size());
  m2 /= static_cast<double>(train.size());
  mean = m.cast<float>();
  stdev = (m2.array() - m.array().square())
              .max(0.0)
              .sqrt()
              .cast<float>()
              .matrix()
              .cwiseMax(1e-6f);
}

}  // namespace detail

inline ClassifierModel train_classifier(const Dataset& ds,
                                        const TrainConfig& cfg) {
  detail::check_dataset_shape(ds);
  const int n = ds.size();
  int per_class[2] = {0, 0};
  for (const auto& rec : ds.records) {
    if (rec.label != 0 && rec.label != 1)
      throw Error("training: label out of range at record " +
                  std::to_string(rec.id));
    ++per_class[rec.label];
  }
  if (per_class[0] == 0 || per_class[1] == 0)
    throw Error("training: single-class dataset");
  bool all_identical = true;
  for (const auto& rec : ds.records)
    if (rec.window != ds.records.front().window) {
      all_identical = false;
      break;
    }
  if (all_identical)
    throw Error("training: degenerate dataset, identical windows carry both labels");
  if (n < 100)
    throw Error("training: classifier needs at least 100 records, got " +
                std::to_string(n));

  ClassifierModel model;
  model.rows = ds.rows;
  model.cols = ds.cols;
  model.seed = cfg.seed;
  model.net.configure(ds.rows, ds.cols);
  model.net.init_params(cfg.seed);

  const auto sp = detail::split_dataset(n, cfg);
  detail::row_statistics(ds, sp.train, model.row_mean, model.row_std);

  std::vector<MatX<float>> inputs;
  inputs.reserve(static_cast<std::size_t>(n));
  for (const auto& rec : ds.records) inputs.push_back(model.normalize(rec.window));
  std::mt19937_64 order_gen(cfg.seed + 1);
  std::vector<int> order = sp.train;
  VecX<float> grad = VecX<float>::Zero(model.net.total);
  SgdState<float> sgd;
  sgd.learning_rate = cfg.learning_rate;
  sgd.momentum = cfg.momentum;
  const int workers = detail::resolve_workers(cfg.workers, cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    sgd.learning_rate = detail::cosine_lr(cfg.learning_rate, epoch, cfg.epochs);
    detail::shuffle_indices(order, order_gen);
    const int n_train = static_cast<int>(order.size());
    for (int at = 0, batch = 0; at < n_train; at += cfg.batch_size, ++batch) {
      const int bsz = std::min(cfg.batch_size, n_train - at);
      auto per_item = [&](int b, typename CnnAttNet<float>::Workspace& ws,
                          VecX<float>& g) {
        const int i = order[static_cast<std::size_t>(at + b)];
        if (cfg.noise_std > 0.0) {
          MatX<float> x = inputs[static_cast<std::size_t>(i)];
          detail::add_input_noise(x, cfg.noise_std, cfg.seed, epoch, i);
          model.net.forward(x, ws);
        } else {
          model.net.forward(inputs[static_cast<std::size_t>(i)], ws);
        }
        return model.net.backward(ds.records[static_cast<std::size_t>(i)].label,
                                  ws, g);
      };
      float loss = detail::batch_gradient<float, typename CnnAttNet<float>::Workspace>(
          bsz, workers, grad, per_item);
      grad /= static_cast<float>(bsz);
      loss /= static_cast<float>(bsz);
      if (!std::isfinite(loss))
        throw Error("training: classifier loss diverged at epoch " +
                    std::to_string(epoch) + " batch " + std::to_string(batch));
      sgd.step(model.net.params, grad);
    }
  }

  typename CnnAttNet<float>::Workspace ws;
  int correct = 0;
  for (const int i : sp.holdout) {
    const auto probs = model.net.forward(inputs[static_cast<std::size_t>(i)], ws);
    const int pred = probs(1) > probs(0) ? 1 : 0;
    if (pred == ds.records[static_cast<std::size_t>(i)].label) ++correct;
  }
  model.holdout_accuracy =
      static_cast<double>(correct) / static_cast<double>(sp.holdout.size());
  return model;
}

inline TisPrediction predict_tis(const ClassifierModel& model, const Mat& window) {
  typename CnnAttNet<float>::Workspace ws;
  const auto probs = model.net.forward(model.normalize(window), ws);
  TisPrediction p;
  p.tis_class = probs(1) > probs(0) ? 1 : 0;
  p.probability = static_cast<double>(probs(p.tis_class));
  return p;
}

inline RegressorModel train_regressor(const Dataset& ds, const TrainConfig& cfg) {
  detail::check_dataset_shape(ds);
  const int n = ds.size();
  if (n < 2) throw Error("training: regressor needs at least 2 records");

  RegressorModel model;
  model.rows = ds.rows;
  model.cols = ds.cols;
  model.seed = cfg.seed;
  model.net.configure(ds.rows, ds.cols, {400, 300, 300});
  model.net.init_params(cfg.seed);

  const auto sp = detail::split_dataset(n, cfg);
  detail::row_statistics(ds, sp.train, model.row_mean, model.row_std);

  std::vector<MatX<float>> inputs;
  inputs.reserve(static_cast<std::size_t>(n));
  for (const auto& rec : ds.records) inputs.push_back(model.normalize(rec.window));

  // Standardized targets keep the head's unit-scale initialization and the
  // Adam step sizes well matched regardless of the dataset's Hz range.
  double ym = 0.0, ym2 = 0.0;
  for (const int i : sp.train) {
    const double y = ds.records[static_cast<std::size_t>(i)].delta_f_hz;
    ym += y;
    ym2 += y * y;
  }
  ym /= static_cast<double>(sp.train.size());
  ym2 /= static_cast<double>(sp.train.size());
  model.y_mean = static_cast<float>(ym);
  model.y_std =
      static_cast<float>(std::sqrt(std::max(ym2 - ym * ym, 0.0)));
  if (model.y_std < 1e-6f) model.y_std = 1e-6f;

  std::mt19937_64 order_gen(cfg.seed + 1);
  std::vector<int> order = sp.train;
  VecX<float> grad = VecX<float>::Zero(model.net.total);
  AdamState<float> adam;
  adam.learning_rate = cfg.learning_rate;
  adam.weight_decay = cfg.weight_decay;
  const int workers = detail::resolve_workers(cfg.workers, cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam.learning_rate = detail::cosine_lr(cfg.learning_rate, epoch, cfg.epochs);
    detail::shuffle_indices(order, order_gen);
    const int n_train = static_cast<int>(order.size());
    for (int at = 0, batch = 0; at < n_train; at += cfg.batch_size, ++batch) {
      const int bsz = std::min(cfg.batch_size, n_train - at);
      auto per_item = [&](int b, typename CnnAttRegNet<float>::Workspace& ws,
                          VecX<float>& g) {
        const int i = order[static_cast<std::size_t>(at + b)];
        const float zt =
            (static_cast<float>(
                 ds.records[static_cast<std::size_t>(i)].delta_f_hz) -
             model.y_mean) /
            model.y_std;
        if (cfg.noise_std > 0.0) {
          MatX<float> x = inputs[static_cast<std::size_t>(i)];
          detail::add_input_noise(x, cfg.noise_std, cfg.seed, epoch, i);
          return model.net.loss_and_grad(x, zt, ws, g);
        }
        return model.net.loss_and_grad(inputs[static_cast<std::size_t>(i)], zt,
                                       ws, g);
      };
      float loss =
          detail::batch_gradient<float, typename CnnAttRegNet<float>::Workspace>(
              bsz, workers, grad, per_item);
      grad /= static_cast<float>(bsz);
      loss /= static_cast<float>(bsz);
      if (!std::isfinite(loss))
        throw Error("training: regressor loss diverged at epoch " +
                    std::to_string(epoch) + " batch " + std::to_string(batch));
      adam.step(model.net.params, grad);
    }
  }

  typename CnnAttRegNet<float>::Workspace ws;
  double sq = 0.0;
  for (const int i : sp.holdout) {
    const double pred =
        static_cast<double>(
            model.net.forward(inputs[static_cast<std::size_t>(i)], ws)) *
            model.y_std +
        model.y_mean;
    const double err =
        pred - ds.records[static_cast<std::size_t>(i)].delta_f_hz;
    sq += err * err;
  }
  model.holdout_rmse = std::sqrt(sq / static_cast<double>(sp.holdout.size()));
  return model;
}

inline double predict_frequency_deviation(const RegressorModel& model,
                                          const Mat& window) {
  typename CnnAttRegNet<float>::Workspace ws;
  return static_cast<double>(model.net.forward(model.normalize(window), ws)) *
             model.y_std +
         model.y_mean;
}

// Full gated pipeline: the regressor only speaks when the classifier is
// confident about the window.
inline FreqPrediction gated_frequency_prediction(const ClassifierModel& cls,
                                                 const RegressorModel& reg,
                                                 const Mat& window,
                                                 double gate = kConfidenceGate) {
  const TisPrediction tis = predict_tis(cls, window);
  FreqPrediction out;
  out.tis_class = tis.tis_class;
  out.confidence = tis.probability;
  if (tis.probability < gate) return out;  // no-prediction marker
  out.predicted = true;
  out.delta_f_hz = predict_frequency_deviation(reg, window);
  return out;
}

struct MajorityBaseline {
  int tis_class = 0;
  double accuracy = 0.0;
};

inline MajorityBaseline majority_baseline(const Dataset& ds) {
  if (ds.records.empty()) throw Error("baseline: empty dataset");
  int ones = 0;
  for (const auto& rec : ds.records) ones += rec.label;
  MajorityBaseline mb;
  mb.tis_class = 2 * ones >= ds.size() ? 1 : 0;
  const int hits = mb.tis_class == 1 ? ones : ds.size() - ones;
  mb.accuracy = static_cast<double>(hits) / static_cast<double>(ds.size());
  return mb;
}

// ---- model files: structured text, hexfloat payloads, bit-exact reload ----

inline void save_classifier(const ClassifierModel& m, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("model file: cannot write " + path);
  os << "visgrid-model classifier 1\n";
  os << "rows " << m.rows << " cols " << m.cols << " filters "
     << m.net.trunk.n_filters << " kernel " << m.net.trunk.kernel << " embed "
     << m.net.trunk.d_embed << " classes " << m.net.n_classes << '\n';
  os << "seed " << m.seed << '\n';
  os << "holdout_accuracy " << detail::to_hexfloat(m.holdout_accuracy) << '\n';
  detail::write_param_block(os, "row_mean", m.row_mean);
  detail::write_param_block(os, "row_std", m.row_std);
  detail::write_param_block(os, "params", m.net.params);
}

inline ClassifierModel load_classifier(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("model file: cannot open " + path);
  std::string magic, kind;
  int version = 0;
  is >> magic >> kind >> version;
  if (magic != "visgrid-model" || kind != "classifier" || version != 1)
    throw Error("model file: " + path + " is not a classifier model");
  ClassifierModel m;
  std::string key;
  int filters = 0, kernel = 0, embed = 0, classes = 0;
  auto expect_int = [&](const char* name, int& out) {
    if (!(is >> key >> out) || key != name)
      throw Error("model file: expected '" + std::string(name) + "'");
  };
  expect_int("rows", m.rows);
  expect_int("cols", m.cols);
  expect_int("filters", filters);
  expect_int("kernel", kernel);
  expect_int("embed", embed);
  expect_int("classes", classes);
  if (!(is >> key >> m.seed) || key != "seed")
    throw Error("model file: expected 'seed'");
  std::string acc;
  if (!(is >> key >> acc) || key != "holdout_accuracy")
    throw Error("model file: expected 'holdout_accuracy'");
  m.holdout_accuracy = detail::from_hexfloat(acc);
  m.row_mean = detail::read_param_block<float>(is, "row_mean");
  m.row_std = detail::read_param_block<float>(is, "row_std");
  m.net.trunk.n_filters = filters;
  m.net.trunk.kernel = kernel;
  m.net.trunk.d_embed = embed;
  m.net.n_classes = classes;
  m.net.configure(m.rows, m.cols);
  VecX<float> params = detail::read_param_block<float>(is, "params");
  if (params.size() != m.net.total)
    throw Error("model file: parameter count mismatch in " + path);
  m.net.params = params;
  return m;
}

inline void save_regressor(const RegressorModel& m, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("model file: cannot write " + path);
  os << "visgrid-model regressor 1\n";
  os << "rows " << m.rows << " cols " << m.cols << " filters "
     << m.net.trunk.n_filters << " kernel " << m.net.trunk.kernel << " embed "
     << m.net.trunk.d_embed << '\n';
  os << "dims " << m.net.dims.size();
  for (const int d : m.net.dims) os << ' ' << d;
  os << '\n';
  os << "seed " << m.seed << '\n';
  os << "holdout_rmse " << detail::to_hexfloat(m.holdout_rmse) << '\n';
  os << "target " << detail::to_hexfloat(m.y_mean) << ' '
     << detail::to_hexfloat(m.y_std) << '\n';
  detail::write_param_block(os, "row_mean", m.row_mean);
  detail::write_param_block(os, "row_std", m.row_std);
  detail::write_param_block(os, "params", m.net.params);
}

inline RegressorModel load_regressor(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("model file: cannot open " + path);
  std::string magic, kind;
  int version = 0;
  is >> magic >> kind >> version;
  if (magic != "visgrid-model" || kind != "regressor" || version != 1)
    throw Error("model file: " + path + " is not a regressor model");
  RegressorModel m;
  std::string key;
  int filters = 0, kernel = 0, embed = 0;
  auto expect_int = [&](const char* name, int& out) {
    if (!(is >> key >> out) || key != name)
      throw Error("model file: expected '" + std::string(name) + "'");
  };
  expect_int("rows", m.rows);
  expect_int("cols", m.cols);
  expect_int("filters", filters);
  expect_int("kernel", kernel);
  expect_int("embed", embed);
  std::size_t n_dims = 0;
  if (!(is >> key >> n_dims) || key != "dims")
    throw Error("model file: expected 'dims'");
  if (n_dims < 2) throw Error("model file: regressor needs at least two dims");
  std::vector<int> dims(n_dims);
  for (auto& d : dims)
    if (!(is >> d)) throw Error("model file: truncated dims");
  if (!(is >> key >> m.seed) || key != "seed")
    throw Error("model file: expected 'seed'");
  std::string rmse;
  if (!(is >> key >> rmse) || key != "holdout_rmse")
    throw Error("model file: expected 'holdout_rmse'");
  m.holdout_rmse = detail::from_hexfloat(rmse);
  std::string tmean, tstd;
  if (!(is >> key >> tmean >> tstd) || key != "target")
    throw Error("model file: expected 'target'");
  m.y_mean = static_cast<float>(detail::from_hexfloat(tmean));
  m.y_std = static_cast<float>(detail::from_hexfloat(tstd));
  m.row_mean = detail::read_param_block<float>(is, "row_mean");
  m.row_std = detail::read_param_block<float>(is, "row_std");
  m.net.trunk.n_filters = filters;
  m.net.trunk.kernel = kernel;
  m.net.trunk.d_embed = embed;
  const std::vector<int> hidden(dims.begin() + 1, dims.end() - 1);
  m.net.configure(m.rows, m.cols, hidden);
  VecX<float> params = detail::read_param_block<float>(is, "params");
  if (params.size() != m.net.total)
    throw Error("model file: parameter count mismatch in " + path);
  m.net.params = params;
  return m;
}

}  // namespace visgrid
