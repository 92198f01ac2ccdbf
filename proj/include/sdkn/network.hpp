#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sdkn/kernels.hpp"

namespace sdkn {

/// x -> W x, no bias. Weights are d_out x d_in.
template <class T>
struct BasicLinearLayer {
  Mat<T> weights;

  Index in_dim() const { return weights.cols(); }
  Index out_dim() const { return weights.rows(); }
};

/// Optimizable activation: coordinate j maps x to
/// sum_i coefficients(i, j) * kernels[j](x_j, c_ij), where c_ij is the
/// j-th coordinate of the i-th propagated center.
template <class T>
struct BasicActivationLayer {
  Mat<T> coefficients;  // M x d
  std::vector<Kernel1D> kernels;

  Index num_centers() const { return coefficients.rows(); }
  Index dim() const { return coefficients.cols(); }
};

/// Structured deep kernel network: Linear, Activation, Linear, ..., Linear.
/// `depth()` counts activation layers, so there are 2 * depth() + 1 layers.
template <class T>
class BasicModel {
 public:
  BasicModel(std::vector<BasicLinearLayer<T>> linears, std::vector<BasicActivationLayer<T>> activations,
             Mat<T> centers);

  Index depth() const { return static_cast<Index>(activations_.size()); }
  Index layer_count() const { return 2 * depth() + 1; }
  Index input_dim() const { return linears_.front().in_dim(); }
  Index output_dim() const { return linears_.back().out_dim(); }
  Index num_centers() const { return centers_.rows(); }
  /// d_0 .. d_{2L+1}.
  std::vector<Index> dims() const;
  /// Maximal dimension over dims().
  Index width() const;

  const std::vector<BasicLinearLayer<T>>& linears() const { return linears_; }
  const std::vector<BasicActivationLayer<T>>& activations() const { return activations_; }
  const BasicLinearLayer<T>& linear(Index i) const { return linears_[static_cast<std::size_t>(i)]; }
  const BasicActivationLayer<T>& activation(Index i) const {
    return activations_[static_cast<std::size_t>(i)];
  }
  const Mat<T>& centers() const { return centers_; }

  /// Number of trainable scalars (all weights and coefficients).
  Index parameter_count() const;
  /// Flattened in layer order (linear 0, activation 1, linear 1, ...),
  /// column-major within each matrix.
  Vec<T> parameters() const;
  void set_parameters(const Vec<T>& flat);

 private:
  void validate() const;

  std::vector<BasicLinearLayer<T>> linears_;
  std::vector<BasicActivationLayer<T>> activations_;
  Mat<T> centers_;
};

/// Batch and propagated-center values before and after every layer.
/// Index 0 holds the raw inputs/centers; index k the output of layer k.
template <class T>
struct BasicForwardTrace {
  std::vector<Mat<T>> batch;
  std::vector<Mat<T>> centers;

  const Mat<T>& output() const { return batch.back(); }
};

/// Mirrors the model layout: one matrix per linear layer and per activation.
template <class T>
struct BasicGradients {
  std::vector<Mat<T>> linear;
  std::vector<Mat<T>> activation;

  Vec<T> flatten() const;
};

using LinearLayer = BasicLinearLayer<double>;
using ActivationLayer = BasicActivationLayer<double>;
using SdknModel = BasicModel<double>;
using ForwardTrace = BasicForwardTrace<double>;
using Gradients = BasicGradients<double>;
using QuadModel = BasicModel<Quad>;

/// Rows of X are points; Zprop holds the M propagated centers as rows.
template <class T>
Mat<T> activation_forward(const BasicActivationLayer<T>& layer, const Mat<T>& X, const Mat<T>& Zprop);

template <class T>
BasicForwardTrace<T> forward(const BasicModel<T>& model, const Mat<T>& X);

template <class T>
Mat<T> predict(const BasicModel<T>& model, const Mat<T>& X) {
  return forward(model, X).output();
}

/// Reverse-mode gradient of <output_cotangent, output> plus, when
/// `penalty_weights` is non-empty (one weight per layer), of
/// sum_l weights[l] * ||f_l||^2. Gradients flow through the propagated
/// centers into earlier layers; the centers themselves are not parameters.
template <class T>
BasicGradients<T> backward(const BasicModel<T>& model, const BasicForwardTrace<T>& trace,
                           const Mat<T>& output_cotangent, std::span<const double> penalty_weights = {});

/// Squared RKHS norm of every layer: Frobenius norm for linear layers,
/// sum_j alpha_j^T K_j alpha_j for activations (K_j on propagated centers).
template <class T>
std::vector<T> layer_norms_squared(const BasicModel<T>& model, const BasicForwardTrace<T>& trace);

/// Deep kernel K(x, y) = outer(||F(x) - F(y)||), F = all layers but the last.
double deep_kernel_eval(const SdknModel& model, const Kernel1D& outer, std::span<const double> x,
                        std::span<const double> y);

/// Architecture for random initialization. `widths` has one entry per
/// activation layer (the hidden dimension feeding it).
struct ModelShape {
  Index input_dim = 1;
  Index output_dim = 1;
  std::vector<Index> widths;
};

/// Linear weights ~ U[-1/sqrt(d_in), 1/sqrt(d_in)], activation coefficients
/// ~ N(0, 1/M). Every activation coordinate uses `kernel`.
SdknModel init_model(const ModelShape& shape, const Eigen::MatrixXd& centers, const Kernel1D& kernel,
                     std::uint64_t seed);

/// Thrown when the row space of A is not contained in the span of the centers.
class NotInSpanError : public InvalidArgument {
 public:
  NotInSpanError(double residual, double relative);
  double residual() const { return residual_; }
  double relative_residual() const { return relative_; }

 private:
  double residual_;
  double relative_;
};

/// Finds alpha (b x M, column i = alpha_i) with sum_i alpha_i z_i^T = A using
/// the minimum-norm pseudo-inverse. Z holds the centers as rows.
Eigen::MatrixXd realize_linear_from_centers(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Z);

/// Like realize_linear_from_centers, but only requires agreement on the
/// data rows X: the part of A orthogonal to span(Z) must vanish on X.
Eigen::MatrixXd realize_linear_on_data(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Z,
                                       const Eigen::MatrixXd& X);

/// Inverse direction: the matrix sum_i alpha_i z_i^T.
Eigen::MatrixXd linear_from_center_coefficients(const Eigen::MatrixXd& alpha, const Eigen::MatrixXd& Z);

}  // namespace sdkn
