#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "wfl/convergence.hpp"
#include "wfl/core.hpp"
#include "wfl/rng.hpp"
#include "wfl/simulator.hpp"

namespace wfl {

/// Binary classification data split into device shards. Loss per sample is
/// ln(1 + exp(-y w.x)) + reg/2 |w|^2, which is reg-strongly convex.
struct Dataset {
  Eigen::MatrixXd features;  // samples x dims
  Eigen::VectorXd labels;    // +1 / -1
  std::vector<std::vector<std::size_t>> partition;
  double reg_strength = 1.0;

  std::size_t samples() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dims() const { return static_cast<std::size_t>(features.cols()); }
  int n_devices() const { return static_cast<int>(partition.size()); }
};

/// Throws InvalidConfig if labels are not +-1 or the partition is not a
/// disjoint cover of the samples.
void validate_dataset(const Dataset& data);

struct SyntheticTask {
  std::size_t samples = 2000;
  std::size_t dims = 10;
  double mean_norm = 0.8;  // each class centred at +-mean_norm along a fixed unit direction
  double noise = 0.4;      // isotropic per-coordinate stddev
  double reg_strength = 1.0;
  int n_devices = 10;
};

/// Gaussian cluster pair with balanced labels, IID-partitioned into shards.
Dataset make_synthetic_dataset(const SyntheticTask& task, std::uint64_t seed);

/// CSV with header x1..xd,label,device; device is the 1-based shard index.
void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in, double reg_strength);

/// reg + lambda_max(X^T X / n) / 4.
double smoothness_bound(const Dataset& data);

struct ModelState {
  Eigen::VectorXd weights;
  std::int64_t iteration = 1;
};

double sample_loss(const Eigen::VectorXd& w, const Dataset& data, std::size_t i);

/// (1/|D|) sum_n |D_n| f_n(w).
double global_loss(const ModelState& model, const Dataset& data);
Eigen::VectorXd global_gradient(const Eigen::VectorXd& w, const Dataset& data);

/// Mean per-sample gradient over `batch` (sample indices).
Eigen::VectorXd batch_gradient(const Eigen::VectorXd& w, const Dataset& data,
                               std::span<const std::size_t> batch);

/// Uniform draw of `size` indices from `shard` without replacement.
std::vector<std::size_t> sample_batch(std::span<const std::size_t> shard, std::size_t size,
                                      Rng& rng);

/// w - step * batch gradient. Throws EmptyBatch for an empty batch.
ModelState local_step(const ModelState& model, const Dataset& data,
                      std::span<const std::size_t> batch, double step);

/// sum_n (B_n / B) w_n. Zero-batch devices get weight zero.
ModelState aggregate(std::span<const ModelState> locals, const BatchAllocation& alloc);

struct Optimum {
  Eigen::VectorXd weights;
  double loss = 0.0;
};

/// Damped Newton until |grad| <= tol. Throws NoConvergence past the cap.
Optimum reference_optimum(const Dataset& data, double tol = 1e-10, int max_iterations = 200);

struct TrajectoryRow {
  std::int64_t iteration = 0;  // k-th aggregation
  Slots cumulative_slots = 0;
  double loss = 0.0;
  double gap = 0.0;    // loss - f*
  double bound = 0.0;  // nu / (gamma + k)
};

struct LossTrajectory {
  double initial_loss = 0.0;
  double optimum_loss = 0.0;
  double initial_gap = 0.0;  // measured f(w^1) - f*
  double nu = 0.0;           // from the supplied constants
  double max_grad_norm = 0.0;  // largest per-sample gradient norm seen; compare with lambda
  std::vector<TrajectoryRow> rows;
};

struct TrainOptions {
  Protocol protocol = Protocol::tdma;
  std::optional<Eigen::VectorXd> initial_weights;  // zeros when absent
  std::optional<Optimum> optimum;                  // computed when absent
  Slots slot_cap = kDefaultSlotCap;
};

/// Runs `iterations` rounds: every device with a nonzero batch takes one SGD
/// step from the global model with eta^k, the server aggregates, and the slot
/// count of the round comes from the simulator under options.protocol.
/// Batch sampling uses Rng::substream(seed, 0) and channel access
/// Rng::substream(seed, 1), so the learning dynamics do not depend on protocol.
LossTrajectory train_federated(const Dataset& data, const SystemConfig& cfg,
                               const BatchAllocation& alloc, const ConvergenceConstants& consts,
                               std::int64_t iterations, std::uint64_t seed,
                               const TrainOptions& options = {});

}  // namespace wfl
