#pragma once

#include <vector>

#include "sdkn/constructions.hpp"

namespace sdkn::detail {

enum class ChannelKind { Identity, Square, Constant };

// One activation coordinate: the flat-limit interpolant of psi(u) at the
// propagated centers, fed by `combo` over the current channels.
struct StageOutput {
  QVec combo;
  ChannelKind kind = ChannelKind::Identity;
  Quad constant = 0;
};

// Assembles a flat-limit SDKN one activation layer at a time. Quantities
// are tracked as linear combinations ("combos") of the current channels;
// linear maps between stages stay pending until the next stage or finish().
class Builder {
 public:
  Builder(const QMat& centers, const ConstructionSettings& s);
  // Continues an existing model: its last linear layer becomes pending.
  Builder(const QuadModel& model, const ConstructionSettings& s);

  Index dim() const { return pending_.rows(); }
  Index depth() const { return static_cast<Index>(activations_.size()); }
  const ConstructionSettings& settings() const { return settings_; }

  QVec unit(Index i) const;
  QVec zero() const { return QVec::Zero(dim()); }
  // Values of `combo` at the three propagated centers.
  QVec centers_of(const QVec& combo) const;

  // Margin a channel would have: separation of its input and output values.
  double channel_margin(const QVec& combo, ChannelKind kind) const;

  // Appends one linear + activation pair. Outputs become the new channels.
  // Throws CenterCollision if a non-constant channel is under-separated.
  void stage(const std::vector<StageOutput>& outputs);

  // Final linear layer: rows of `output_map` are combos.
  QuadModel finish(const std::vector<QVec>& output_map) const;

  double min_margin() const { return min_margin_; }
  Index max_width() const { return max_width_; }

 private:
  ConstructionSettings settings_;
  QMat input_centers_;
  std::vector<BasicLinearLayer<Quad>> linears_;
  std::vector<BasicActivationLayer<Quad>> activations_;
  QMat act_centers_;  // 3 x prev: centers after the last activation
  QMat pending_;      // dim x prev
  double min_margin_ = std::numeric_limits<double>::infinity();
  Index max_width_ = 0;
};

// Picks the first b in {1, 1/2, 1/3, ...} for which `accept(b)` holds.
template <class F>
double select_beta(const ConstructionSettings& s, const char* what, F&& accept) {
  for (int k = 1; k <= s.max_beta_candidates; ++k) {
    const double b = 1.0 / k;
    if (accept(b)) return b;
  }
  throw CenterCollision(std::string(what) + ": no admissible beta among the candidates", 0.0);
}

// Power schedule on a single base: every accumulator ends as
// init * base^exponent (init absent means 1).
struct Accumulator {
  std::optional<QVec> value;
  unsigned exponent = 1;
};

struct PowerGroup {
  QVec base;
  std::vector<Accumulator> accumulators;
};

// Stages needed before every accumulator of the group is complete.
Index group_depth(const PowerGroup& g);

// Runs `stages` stages (at least the depth of every group). Carried combos
// are passed through identity channels and updated in place. Returns the
// gamma values chosen for every product.
std::vector<double> run_power_groups(Builder& b, std::vector<PowerGroup>& groups, std::vector<QVec*> carried,
                                     Index stages);

// One stage forming a * c with the polarization identity; `carried` pass
// through. Returns the chosen gamma.
double multiply_stage(Builder& b, QVec& a, const QVec& c, std::vector<QVec*> carried,
                      std::optional<double> gamma = std::nullopt);

ModuleReport make_report(const Builder& b, const QuadModel& model);

QMat to_quad(const Eigen::MatrixXd& m);

void require_admissible(const ConstructionSettings& s);

// Addition-module stages on state channels `xs` and optional accumulator
// `sum`. On return sum holds S + alpha * prod_j x_j^{n_j} + beta * x_d.
// Returns the output beta used.
double append_addition(Builder& b, std::vector<QVec>& xs, std::optional<QVec>& sum, const std::vector<int>& n,
                       double alpha, std::optional<double> beta, ModuleReport& report);

}  // namespace sdkn::detail
