#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sdkn/network.hpp"

namespace sdkn {

struct Dataset {
  Eigen::MatrixXd inputs;   // N x d_in
  Eigen::MatrixXd targets;  // N x d_out

  Index size() const { return inputs.rows(); }
  void validate() const;
};

/// CSV with a header row, then d_in input columns followed by d_out target
/// columns per row. Errors name the offending line.
Dataset load_dataset(const std::filesystem::path& path, Index d_in, Index d_out);
/// Writes the CSV format read by load_dataset, 17 significant digits.
void write_dataset(const std::filesystem::path& path, const Dataset& data);

/// (1/N) sum_i ||pred_i - target_i||^2.
double mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

/// Per-layer squared RKHS norms (see layer_norms_squared), unweighted.
std::vector<double> rkhs_penalty(const SdknModel& model, const ForwardTrace& trace);

enum class OptimizerKind { SGD, Adam };
enum class CenterRule { FirstM, RandomSeeded };

struct TrainConfig {
  // Loss is mean squared error; it is the only supported loss.
  // One regularization weight per layer, or a single weight broadcast to
  // every layer. Empty means no penalty.
  std::vector<double> reg_weights;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double momentum = 0.0;  // SGD only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  Index batch_size = 32;
  Index epochs = 100;
  Index num_centers = 16;
  CenterRule center_rule = CenterRule::FirstM;
  std::uint64_t seed = 0;
  // When false, EpochRecord::seconds stays 0 so histories are byte-stable.
  bool record_time = true;

  void validate() const;
  /// Resolves reg_weights to exactly `layers` entries.
  std::vector<double> layer_weights(Index layers) const;
};

/// M rows of the inputs: the first M, or M distinct rows drawn by `seed`.
Eigen::MatrixXd select_centers(const Dataset& data, const TrainConfig& cfg);

struct EpochRecord {
  Index epoch = 0;
  double loss = 0.0;       // MSE on the full dataset
  double penalty = 0.0;    // sum_l lambda_l * ||f_l||^2
  double objective = 0.0;  // loss + penalty
  double seconds = 0.0;    // wall time since training started
};

std::string to_json_line(const EpochRecord& record);

struct TrainResult {
  SdknModel model;
  std::vector<EpochRecord> history;
};

/// Objective value loss + sum_l lambda_l ||f_l||^2 on the full dataset.
EpochRecord evaluate_objective(const SdknModel& model, const Dataset& data, std::span<const double> weights);

/// Minibatch gradient descent on MSE plus penalties. Deterministic given
/// cfg.seed. Throws NumericError on a non-finite objective.
TrainResult train(SdknModel model, const Dataset& data, const TrainConfig& cfg);

}  // namespace sdkn
