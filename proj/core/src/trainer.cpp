#include "wfl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "wfl/error.hpp"

namespace wfl {
namespace {

// ln(1 + exp(t)) without overflow.
double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

// 1 / (1 + exp(t))
double logistic_tail(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

void check_dims(const Eigen::VectorXd& w, const Dataset& data) {
  if (static_cast<std::size_t>(w.size()) != data.dims())
    throw InvalidConfig("weights", "dimension does not match the dataset");
}

Eigen::VectorXd sample_gradient(const Eigen::VectorXd& w, const Dataset& data, std::size_t i) {
  const auto row = static_cast<Eigen::Index>(i);
  const double y = data.labels(row);
  const double margin = y * data.features.row(row).dot(w);
  return -y * logistic_tail(margin) * data.features.row(row).transpose() + data.reg_strength * w;
}

}  // namespace

void validate_dataset(const Dataset& data) {
  if (data.labels.size() != data.features.rows())
    throw InvalidConfig("labels", "one label per sample required");
  for (Eigen::Index i = 0; i < data.labels.size(); ++i) {
    if (data.labels(i) != 1.0 && data.labels(i) != -1.0)
      throw InvalidConfig("labels", "labels must be +1 or -1");
  }
  if (!(data.reg_strength > 0.0)) throw InvalidConfig("reg_strength", "must be > 0");
  std::vector<int> seen(data.samples(), 0);
  for (const auto& shard : data.partition) {
    for (std::size_t i : shard) {
      if (i >= seen.size()) throw InvalidConfig("partition", "sample index out of range");
      ++seen[i];
    }
  }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; }))
    throw InvalidConfig("partition", "shards must cover every sample exactly once");
}

Dataset make_synthetic_dataset(const SyntheticTask& task, std::uint64_t seed) {
  if (task.samples < 2 || task.dims < 1 || task.n_devices < 1)
    throw InvalidConfig("dataset", "need >= 2 samples, >= 1 dim and >= 1 device");
  Rng rng = Rng::substream(seed, 0);
  const auto n = static_cast<Eigen::Index>(task.samples);
  const auto d = static_cast<Eigen::Index>(task.dims);

  Eigen::VectorXd direction(d);
  for (Eigen::Index j = 0; j < d; ++j) direction(j) = rng.normal();
  direction.normalize();

  Dataset data;
  data.reg_strength = task.reg_strength;
  data.features.resize(n, d);
  data.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = (i % 2 == 0) ? 1.0 : -1.0;
    data.labels(i) = y;
    for (Eigen::Index j = 0; j < d; ++j)
      data.features(i, j) = y * task.mean_norm * direction(j) + task.noise * rng.normal();
  }

  std::vector<std::size_t> order(task.samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[rng.below(i + 1)]);
  const auto shards = static_cast<std::size_t>(task.n_devices);
  data.partition.assign(shards, {});
  for (std::size_t i = 0; i < order.size(); ++i) data.partition[i % shards].push_back(order[i]);
  for (auto& shard : data.partition) std::sort(shard.begin(), shard.end());
  return data;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  std::vector<int> owner(data.samples(), 0);
  for (std::size_t s = 0; s < data.partition.size(); ++s)
    for (std::size_t i : data.partition[s]) owner[i] = static_cast<int>(s) + 1;
  for (std::size_t j = 0; j < data.dims(); ++j) out << 'x' << j + 1 << ',';
  out << "label,device\n";
  std::ostringstream line;
  line.precision(17);
  for (std::size_t i = 0; i < data.samples(); ++i) {
    line.str({});
    for (std::size_t j = 0; j < data.dims(); ++j)
      line << data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) << ',';
    line << (data.labels(static_cast<Eigen::Index>(i)) > 0 ? 1 : -1) << ',' << owner[i] << '\n';
    out << line.str();
  }
}

Dataset read_dataset_csv(std::istream& in, double reg_strength) {
  std::string header;
  if (!std::getline(in, header)) throw InvalidConfig("dataset", "empty CSV");
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
  if (columns < 3) throw InvalidConfig("dataset", "expected x1..xd,label,device columns");
  const std::size_t dims = columns - 2;

  std::vector<double> values;
  std::vector<double> labels;
  std::vector<int> owners;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(fields, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != columns) throw InvalidConfig("dataset", "ragged CSV row");
    values.insert(values.end(), row.begin(), row.begin() + static_cast<std::ptrdiff_t>(dims));
    labels.push_back(row[dims]);
    owners.push_back(static_cast<int>(row[dims + 1]));
  }
  Dataset data;
  data.reg_strength = reg_strength;
  const auto n = static_cast<Eigen::Index>(labels.size());
  data.features.resize(n, static_cast<Eigen::Index>(dims));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(dims); ++j)
      data.features(i, j) = values[static_cast<std::size_t>(i) * dims + static_cast<std::size_t>(j)];
  data.labels = Eigen::Map<Eigen::VectorXd>(labels.data(), n);
  const int shards = owners.empty() ? 0 : *std::max_element(owners.begin(), owners.end());
  data.partition.assign(static_cast<std::size_t>(std::max(shards, 0)), {});
  for (std::size_t i = 0; i < owners.size(); ++i) {
    if (owners[i] < 1) throw InvalidConfig("dataset", "device column must be >= 1");
    data.partition[static_cast<std::size_t>(owners[i] - 1)].push_back(i);
  }
  validate_dataset(data);
  return data;
}

double smoothness_bound(const Dataset& data) {
  const Eigen::MatrixXd second =
      data.features.transpose() * data.features / static_cast<double>(data.samples());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(second, Eigen::EigenvaluesOnly);
  return data.reg_strength + eig.eigenvalues().maxCoeff() / 4.0;
}

double sample_loss(const Eigen::VectorXd& w, const Dataset& data, std::size_t i) {
  const auto row = static_cast<Eigen::Index>(i);
  const double margin = data.labels(row) * data.features.row(row).dot(w);
  return softplus(-margin) + 0.5 * data.reg_strength * w.squaredNorm();
}

double global_loss(const ModelState& model, const Dataset& data) {
  check_dims(model.weights, data);
  double total = 0.0;
  for (const auto& shard : data.partition) {
    if (shard.empty()) continue;
    double local = 0.0;
    for (std::size_t i : shard) local += sample_loss(model.weights, data, i);
    total += static_cast<double>(shard.size()) * (local / static_cast<double>(shard.size()));
  }
  return total / static_cast<double>(data.samples());
}

Eigen::VectorXd global_gradient(const Eigen::VectorXd& w, const Dataset& data) {
  check_dims(w, data);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(w.size());
  for (std::size_t i = 0; i < data.samples(); ++i) g += sample_gradient(w, data, i);
  return g / static_cast<double>(data.samples());
}

Eigen::VectorXd batch_gradient(const Eigen::VectorXd& w, const Dataset& data,
                               std::span<const std::size_t> batch) {
  if (batch.empty()) throw EmptyBatch("batch gradient of an empty batch");
  check_dims(w, data);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(w.size());
  for (std::size_t i : batch) g += sample_gradient(w, data, i);
  return g / static_cast<double>(batch.size());
}

std::vector<std::size_t> sample_batch(std::span<const std::size_t> shard, std::size_t size,
                                      Rng& rng) {
  if (size > shard.size()) throw InvalidConfig("batch", "batch larger than the device shard");
  std::vector<std::size_t> pool(shard.begin(), shard.end());
  for (std::size_t i = 0; i < size; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  pool.resize(size);
  return pool;
}

ModelState local_step(const ModelState& model, const Dataset& data,
                      std::span<const std::size_t> batch, double step) {
  if (batch.empty()) throw EmptyBatch("local step with an empty batch");
  ModelState out = model;
  out.weights -= step * batch_gradient(model.weights, data, batch);
  return out;
}

ModelState aggregate(std::span<const ModelState> locals, const BatchAllocation& alloc) {
  if (locals.size() != alloc.sizes().size())
    throw InvalidConfig("locals", "one local model per device required");
  if (alloc.total() <= 0) throw InvalidConfig("allocation", "total batch must be positive");
  ModelState out;
  out.iteration = locals.front().iteration;
  out.weights = Eigen::VectorXd::Zero(locals.front().weights.size());
  const auto total = static_cast<double>(alloc.total());
  for (std::size_t n = 0; n < locals.size(); ++n) {
    if (alloc[n] == 0) continue;
    out.weights += (static_cast<double>(alloc[n]) / total) * locals[n].weights;
  }
  return out;
}

Optimum reference_optimum(const Dataset& data, double tol, int max_iterations) {
  validate_dataset(data);
  const auto d = static_cast<Eigen::Index>(data.dims());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd g = global_gradient(w, data);
    if (g.norm() <= tol) return Optimum{w, global_loss(ModelState{w, 0}, data)};
    Eigen::MatrixXd hess = data.reg_strength * Eigen::MatrixXd::Identity(d, d);
    for (std::size_t i = 0; i < data.samples(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const double margin = data.labels(row) * data.features.row(row).dot(w);
      const double s = logistic_tail(margin);
      hess.noalias() += (s * (1.0 - s) / static_cast<double>(data.samples())) *
                        data.features.row(row).transpose() * data.features.row(row);
    }
    const Eigen::VectorXd step = hess.ldlt().solve(g);
    const double f = global_loss(ModelState{w, 0}, data);
    double t = 1.0;
    Eigen::VectorXd next = w - step;
    while (t > 1e-12 && global_loss(ModelState{next, 0}, data) > f) {
      t *= 0.5;
      next = w - t * step;
    }
    w = next;
  }
  throw NoConvergence("reference optimum did not reach gradient tolerance");
}

LossTrajectory train_federated(const Dataset& data, const SystemConfig& cfg,
                               const BatchAllocation& alloc, const ConvergenceConstants& consts,
                               std::int64_t iterations, std::uint64_t seed,
                               const TrainOptions& options) {
  if (iterations < 1) throw InvalidConfig("iterations", "must be >= 1");
  validate_config(cfg, options.protocol);
  validate_constants(consts);
  validate_dataset(data);
  if (alloc.n_devices() != cfg.n_devices || data.n_devices() != cfg.n_devices)
    throw InvalidConfig("n_devices", "allocation, dataset and config disagree");
  if (alloc.total() != cfg.total_batch)
    throw InvalidConfig("total_batch", "allocation does not sum to the configured total");
  for (std::size_t n = 0; n < alloc.sizes().size(); ++n) {
    if (static_cast<std::size_t>(alloc[n]) > data.partition[n].size())
      throw InvalidConfig("allocation", "device " + std::to_string(n + 1) +
                                            " has fewer samples than its batch");
  }

  const Optimum opt = options.optimum ? *options.optimum : reference_optimum(data);
  ModelState global;
  global.weights = options.initial_weights ? *options.initial_weights
                                           : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.dims()));
  check_dims(global.weights, data);
  global.iteration = 1;

  LossTrajectory traj;
  traj.optimum_loss = opt.loss;
  traj.initial_loss = global_loss(global, data);
  traj.initial_gap = traj.initial_loss - opt.loss;
  traj.nu = compute_nu(consts, cfg.n_devices, cfg.total_batch);

  Rng sampler = Rng::substream(seed, 0);
  Rng channel = Rng::substream(seed, 1);
  const auto n_dev = static_cast<std::size_t>(cfg.n_devices);
  std::vector<ModelState> locals(n_dev);
  Slots slots = 0;

  for (std::int64_t k = 1; k <= iterations; ++k) {
    const double eta = step_size(k, consts);
    for (std::size_t n = 0; n < n_dev; ++n) {
      if (alloc[n] == 0) {
        locals[n] = global;
        continue;
      }
      const auto batch = sample_batch(data.partition[n], static_cast<std::size_t>(alloc[n]), sampler);
      for (std::size_t i : batch)
        traj.max_grad_norm = std::max(traj.max_grad_norm, sample_gradient(global.weights, data, i).norm());
      locals[n] = local_step(global, data, batch, eta);
    }
    global = aggregate(locals, alloc);
    global.iteration = k + 1;
    slots += simulate_completion(options.protocol, alloc, cfg.compute_rate, cfg.p_tr, 1, channel,
                                 options.slot_cap);

    TrajectoryRow row;
    row.iteration = k;
    row.cumulative_slots = slots;
    row.loss = global_loss(global, data);
    row.gap = row.loss - opt.loss;
    row.bound = gap_bound(k, traj.nu, consts.step_shift);
    traj.rows.push_back(row);
  }
  return traj;
}

}  // namespace wfl
