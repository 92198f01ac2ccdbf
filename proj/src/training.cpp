#include "sdkn/training.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include <json.hpp>

namespace sdkn {

double mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw InvalidArgument("mse_loss: shape mismatch");
  if (pred.rows() == 0) throw InvalidArgument("mse_loss: empty batch");
  return (pred - target).squaredNorm() / static_cast<double>(pred.rows());
}

std::vector<double> rkhs_penalty(const SdknModel& model, const ForwardTrace& trace) {
  return layer_norms_squared(model, trace);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw InvalidArgument("train config: lr must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw InvalidArgument("train config: momentum must lie in [0, 1)");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw InvalidArgument("train config: Adam betas must lie in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw InvalidArgument("train config: adam_eps must be positive");
  if (batch_size < 1) throw InvalidArgument("train config: batch_size must be positive");
  if (epochs < 1) throw InvalidArgument("train config: epochs must be positive");
  if (num_centers < 1) throw InvalidArgument("train config: centers must be at least 1");
  for (double w : reg_weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("train config: reg weights must be nonnegative");
}

std::vector<double> TrainConfig::layer_weights(Index layers) const {
  if (reg_weights.empty()) return std::vector<double>(static_cast<std::size_t>(layers), 0.0);
  if (reg_weights.size() == 1) return std::vector<double>(static_cast<std::size_t>(layers), reg_weights[0]);
  if (static_cast<Index>(reg_weights.size()) != layers)
    throw InvalidArgument("train config: reg needs 1 or " + std::to_string(layers) + " weights, got " +
                          std::to_string(reg_weights.size()));
  return reg_weights;
}

Eigen::MatrixXd select_centers(const Dataset& data, const TrainConfig& cfg) {
  const Index n = data.size();
  const Index m = cfg.num_centers;
  if (m < 1) throw InvalidArgument("select_centers: need at least one center");
  if (m > n)
    throw InvalidArgument("select_centers: " + std::to_string(m) + " centers requested but only " +
                          std::to_string(n) + " data points");
  if (cfg.center_rule == CenterRule::FirstM) return data.inputs.topRows(m);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  // Partial Fisher-Yates; std::shuffle's draw pattern is not pinned down
  // by the standard, this one is.
  std::mt19937_64 rng(cfg.seed);
  for (Index i = 0; i < m; ++i) {
    const auto span = static_cast<std::uint64_t>(n - i);
    const Index j = i + static_cast<Index>(rng() % span);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  Eigen::MatrixXd centers(m, data.inputs.cols());
  for (Index i = 0; i < m; ++i) centers.row(i) = data.inputs.row(idx[static_cast<std::size_t>(i)]);
  return centers;
}

std::string to_json_line(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["loss"] = r.loss;
  j["penalty"] = r.penalty;
  j["objective"] = r.objective;
  j["seconds"] = r.seconds;
  return j.dump();
}

EpochRecord evaluate_objective(const SdknModel& model, const Dataset& data, std::span<const double> weights) {
  const ForwardTrace trace = forward(model, data.inputs);
  EpochRecord rec;
  rec.loss = mse_loss(trace.output(), data.targets);
  if (!weights.empty()) {
    const auto norms = layer_norms_squared(model, trace);
    for (std::size_t l = 0; l < norms.size(); ++l) rec.penalty += weights[l] * norms[l];
  }
  rec.objective = rec.loss + rec.penalty;
  return rec;
}

namespace {

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, Index n) : cfg_(cfg), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    ++t_;
    if (cfg_.optimizer == OptimizerKind::SGD) {
      m_ = cfg_.momentum * m_ + grad;
      params -= cfg_.learning_rate * m_;
      return;
    }
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    params.array() -=
        cfg_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.adam_epsilon);
  }

 private:
  const TrainConfig& cfg_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

}  // namespace

TrainResult train(SdknModel model, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.inputs.cols() != model.input_dim())
    throw InvalidArgument("train: dataset has " + std::to_string(data.inputs.cols()) +
                          " input columns, model expects " + std::to_string(model.input_dim()));
  if (data.targets.cols() != model.output_dim())
    throw InvalidArgument("train: dataset has " + std::to_string(data.targets.cols()) +
                          " target columns, model expects " + std::to_string(model.output_dim()));
  if (model.num_centers() > data.size())
    throw InvalidArgument("train: more centers (" + std::to_string(model.num_centers()) + ") than data points (" +
                          std::to_string(data.size()) + ")");

  const std::vector<double> weights = cfg.layer_weights(model.layer_count());
  const bool penalized = std::any_of(weights.begin(), weights.end(), [](double w) { return w != 0.0; });
  const std::span<const double> pw = penalized ? std::span<const double>(weights) : std::span<const double>();

  const Index n = data.size();
  const Index batch = std::min(cfg.batch_size, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(cfg.seed);

  Eigen::VectorXd params = model.parameters();
  Optimizer opt(cfg, params.size());
  const auto start = std::chrono::steady_clock::now();

  TrainResult result{model, {}};
  Eigen::MatrixXd xb, yb;
  for (Index epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (batch < n) {
      for (Index i = n - 1; i > 0; --i) {
        const Index j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
      }
    }
    for (Index b0 = 0; b0 < n; b0 += batch) {
      const Index bs = std::min(batch, n - b0);
      if (batch < n) {
        xb.resize(bs, data.inputs.cols());
        yb.resize(bs, data.targets.cols());
        for (Index r = 0; r < bs; ++r) {
          const Index src = order[static_cast<std::size_t>(b0 + r)];
          xb.row(r) = data.inputs.row(src);
          yb.row(r) = data.targets.row(src);
        }
      }
      const Eigen::MatrixXd& x = batch < n ? xb : data.inputs;
      const Eigen::MatrixXd& y = batch < n ? yb : data.targets;
      const ForwardTrace trace = forward(model, x);
      const Eigen::MatrixXd cot = (2.0 / static_cast<double>(bs)) * (trace.output() - y);
      const Gradients grads = backward(model, trace, cot, pw);
      const Eigen::VectorXd g = grads.flatten();
      if (!g.allFinite())
        throw NumericError("train: non-finite gradient in epoch " + std::to_string(epoch));
      opt.step(params, g);
      model.set_parameters(params);
    }

    EpochRecord rec = evaluate_objective(model, data, pw);
    rec.epoch = epoch;
    if (!std::isfinite(rec.objective))
      throw NumericError("train: non-finite objective in epoch " + std::to_string(epoch) + " (loss " +
                         std::to_string(rec.loss) + ", penalty " + std::to_string(rec.penalty) +
                         "); lower the learning rate");
    if (cfg.record_time)
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(rec);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace sdkn
