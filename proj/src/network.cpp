#include "sdkn/network.hpp"

#include <cmath>
#include <random>
#include <string>

namespace sdkn {

namespace {

template <class T>
bool all_finite(const Mat<T>& m) {
  using std::isfinite;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (!isfinite(m(i, j))) return false;
  return true;
}

[[noreturn]] void shape_error(const std::string& what) { throw InvalidArgument(what); }

// Runs the first `layer_limit` layers, recording every intermediate value.
template <class T>
BasicForwardTrace<T> run_layers(const BasicModel<T>& model, const Mat<T>& X, Index layer_limit) {
  if (X.cols() != model.input_dim())
    shape_error("forward: input dimension " + std::to_string(X.cols()) + " does not match model input " +
                std::to_string(model.input_dim()));
  BasicForwardTrace<T> trace;
  trace.batch.reserve(static_cast<std::size_t>(layer_limit) + 1);
  trace.centers.reserve(static_cast<std::size_t>(layer_limit) + 1);
  trace.batch.push_back(X);
  trace.centers.push_back(model.centers());
  for (Index layer = 0; layer < layer_limit; ++layer) {
    const Mat<T>& h = trace.batch.back();
    const Mat<T>& c = trace.centers.back();
    if (layer % 2 == 0) {
      const Mat<T>& w = model.linear(layer / 2).weights;
      Mat<T> h_next = h * w.transpose();
      Mat<T> c_next = c * w.transpose();
      trace.batch.push_back(std::move(h_next));
      trace.centers.push_back(std::move(c_next));
    } else {
      const auto& act = model.activation(layer / 2);
      Mat<T> h_next = activation_forward(act, h, c);
      Mat<T> c_next = activation_forward(act, c, c);
      trace.batch.push_back(std::move(h_next));
      trace.centers.push_back(std::move(c_next));
    }
  }
  return trace;
}

}  // namespace

template <class T>
BasicModel<T>::BasicModel(std::vector<BasicLinearLayer<T>> linears,
                          std::vector<BasicActivationLayer<T>> activations, Mat<T> centers)
    : linears_(std::move(linears)), activations_(std::move(activations)), centers_(std::move(centers)) {
  validate();
}

template <class T>
void BasicModel<T>::validate() const {
  if (linears_.size() != activations_.size() + 1)
    shape_error("model: expected one more linear layer than activation layers");
  if (centers_.rows() < 1) shape_error("model: at least one center is required");
  for (const auto& lin : linears_) {
    if (lin.in_dim() < 1 || lin.out_dim() < 1) shape_error("model: linear layer with empty dimension");
    if (!all_finite(lin.weights)) shape_error("model: non-finite linear weight");
  }
  if (centers_.cols() != linears_.front().in_dim())
    shape_error("model: centers live in R^" + std::to_string(centers_.cols()) + " but input dimension is " +
                std::to_string(linears_.front().in_dim()));
  if (!all_finite(centers_)) shape_error("model: non-finite center");
  for (std::size_t k = 0; k < activations_.size(); ++k) {
    const auto& act = activations_[k];
    if (act.dim() != linears_[k].out_dim() || act.dim() != linears_[k + 1].in_dim())
      shape_error("model: activation layer " + std::to_string(k) + " dimension breaks the layer chain");
    if (act.num_centers() != centers_.rows())
      shape_error("model: activation layer " + std::to_string(k) + " has " +
                  std::to_string(act.num_centers()) + " coefficient rows for " +
                  std::to_string(centers_.rows()) + " centers");
    if (static_cast<Index>(act.kernels.size()) != act.dim())
      shape_error("model: activation layer " + std::to_string(k) + " needs one kernel per coordinate");
    for (const auto& kern : act.kernels) {
      if (!kern.radial()) shape_error("model: activation kernels must be radial");
      kern.validate();
    }
    if (!all_finite(act.coefficients)) shape_error("model: non-finite activation coefficient");
  }
}

template <class T>
std::vector<Index> BasicModel<T>::dims() const {
  std::vector<Index> d;
  d.push_back(input_dim());
  for (std::size_t k = 0; k < linears_.size(); ++k) {
    d.push_back(linears_[k].out_dim());
    if (k < activations_.size()) d.push_back(activations_[k].dim());
  }
  return d;
}

template <class T>
Index BasicModel<T>::width() const {
  Index w = 0;
  for (Index d : dims()) w = std::max(w, d);
  return w;
}

template <class T>
Index BasicModel<T>::parameter_count() const {
  Index n = 0;
  for (const auto& l : linears_) n += l.weights.size();
  for (const auto& a : activations_) n += a.coefficients.size();
  return n;
}

template <class T>
Vec<T> BasicModel<T>::parameters() const {
  Vec<T> flat(parameter_count());
  Index pos = 0;
  auto put = [&](const Mat<T>& m) {
    flat.segment(pos, m.size()) = Eigen::Map<const Vec<T>>(m.data(), m.size());
    pos += m.size();
  };
  for (std::size_t k = 0; k < linears_.size(); ++k) {
    put(linears_[k].weights);
    if (k < activations_.size()) put(activations_[k].coefficients);
  }
  return flat;
}

template <class T>
void BasicModel<T>::set_parameters(const Vec<T>& flat) {
  if (flat.size() != parameter_count()) shape_error("set_parameters: wrong parameter count");
  if (!all_finite(Mat<T>(flat))) shape_error("set_parameters: non-finite parameter");
  Index pos = 0;
  auto take = [&](Mat<T>& m) {
    Eigen::Map<Vec<T>>(m.data(), m.size()) = flat.segment(pos, m.size());
    pos += m.size();
  };
  for (std::size_t k = 0; k < linears_.size(); ++k) {
    take(linears_[k].weights);
    if (k < activations_.size()) take(activations_[k].coefficients);
  }
}

template <class T>
Vec<T> BasicGradients<T>::flatten() const {
  Index n = 0;
  for (const auto& m : linear) n += m.size();
  for (const auto& m : activation) n += m.size();
  Vec<T> flat(n);
  Index pos = 0;
  auto put = [&](const Mat<T>& m) {
    flat.segment(pos, m.size()) = Eigen::Map<const Vec<T>>(m.data(), m.size());
    pos += m.size();
  };
  for (std::size_t k = 0; k < linear.size(); ++k) {
    put(linear[k]);
    if (k < activation.size()) put(activation[k]);
  }
  return flat;
}

template <class T>
Mat<T> activation_forward(const BasicActivationLayer<T>& layer, const Mat<T>& X, const Mat<T>& Zprop) {
  const Index d = layer.dim();
  const Index m = layer.num_centers();
  if (X.cols() != d || Zprop.cols() != d || Zprop.rows() != m)
    shape_error("activation_forward: shape mismatch (layer " + std::to_string(m) + "x" + std::to_string(d) +
                ", input cols " + std::to_string(X.cols()) + ", centers " + std::to_string(Zprop.rows()) + "x" +
                std::to_string(Zprop.cols()) + ")");
  Mat<T> out(X.rows(), d);
  for (Index j = 0; j < d; ++j) {
    const Kernel1D& kern = layer.kernels[static_cast<std::size_t>(j)];
    for (Index n = 0; n < X.rows(); ++n) {
      T sum(0);
      for (Index i = 0; i < m; ++i) sum += layer.coefficients(i, j) * eval(kern, X(n, j), Zprop(i, j));
      out(n, j) = sum;
    }
  }
  return out;
}

template <class T>
BasicForwardTrace<T> forward(const BasicModel<T>& model, const Mat<T>& X) {
  return run_layers(model, X, model.layer_count());
}

template <class T>
BasicGradients<T> backward(const BasicModel<T>& model, const BasicForwardTrace<T>& trace,
                           const Mat<T>& output_cotangent, std::span<const double> penalty_weights) {
  const Index layers = model.layer_count();
  if (static_cast<Index>(trace.batch.size()) != layers + 1 ||
      static_cast<Index>(trace.centers.size()) != layers + 1)
    shape_error("backward: trace does not belong to this model");
  if (output_cotangent.rows() != trace.output().rows() || output_cotangent.cols() != model.output_dim())
    shape_error("backward: cotangent shape does not match the forward output");
  if (!penalty_weights.empty() && static_cast<Index>(penalty_weights.size()) != layers)
    shape_error("backward: need one penalty weight per layer");

  BasicGradients<T> grads;
  grads.linear.resize(model.linears().size());
  grads.activation.resize(model.activations().size());

  Mat<T> g_batch = output_cotangent;
  Mat<T> g_centers = Mat<T>::Zero(model.num_centers(), model.output_dim());

  for (Index layer = layers - 1; layer >= 0; --layer) {
    const Mat<T>& h_in = trace.batch[static_cast<std::size_t>(layer)];
    const Mat<T>& c_in = trace.centers[static_cast<std::size_t>(layer)];
    const T lambda = penalty_weights.empty() ? T(0) : T(penalty_weights[static_cast<std::size_t>(layer)]);
    if (h_in.cols() != (layer % 2 == 0 ? model.linear(layer / 2).in_dim() : model.activation(layer / 2).dim()) ||
        c_in.rows() != model.num_centers())
      shape_error("backward: stale trace");

    if (layer % 2 == 0) {
      const Mat<T>& w = model.linear(layer / 2).weights;
      Mat<T> gw = g_batch.transpose() * h_in + g_centers.transpose() * c_in;
      if (lambda != T(0)) gw += T(2) * lambda * w;
      grads.linear[static_cast<std::size_t>(layer / 2)] = std::move(gw);
      g_batch = (g_batch * w).eval();
      g_centers = (g_centers * w).eval();
      continue;
    }

    const auto& act = model.activation(layer / 2);
    const Index d = act.dim();
    const Index m = act.num_centers();
    Mat<T> galpha = Mat<T>::Zero(m, d);
    Mat<T> gh = Mat<T>::Zero(h_in.rows(), d);
    Mat<T> gc = Mat<T>::Zero(m, d);
    for (Index j = 0; j < d; ++j) {
      const Kernel1D& kern = act.kernels[static_cast<std::size_t>(j)];
      const bool radial = kern.radial();
      // Batch path: out(n) = sum_i alpha_i k(h_n, c_i).
      for (Index n = 0; n < h_in.rows(); ++n) {
        const T g = g_batch(n, j);
        if (g == T(0)) continue;
        for (Index i = 0; i < m; ++i) {
          const T a = act.coefficients(i, j);
          const auto [kv, kd] = eval_with_dx(kern, h_in(n, j), c_in(i, j));
          galpha(i, j) += g * kv;
          gh(n, j) += g * a * kd;
          gc(i, j) += g * a * (radial ? -kd : eval_dx(kern, c_in(i, j), h_in(n, j)));
        }
      }
      // Center path: out(p) = sum_i alpha_i k(c_p, c_i).
      for (Index p = 0; p < m; ++p) {
        const T g = g_centers(p, j);
        if (g == T(0)) continue;
        for (Index i = 0; i < m; ++i) {
          const T a = act.coefficients(i, j);
          const auto [kv, kd] = eval_with_dx(kern, c_in(p, j), c_in(i, j));
          galpha(i, j) += g * kv;
          gc(p, j) += g * a * kd;
          gc(i, j) += g * a * (radial ? -kd : eval_dx(kern, c_in(i, j), c_in(p, j)));
        }
      }
      // Penalty lambda * alpha^T K alpha with K on the propagated centers.
      if (lambda != T(0)) {
        for (Index p = 0; p < m; ++p) {
          T kalpha(0);
          T dcenter(0);
          for (Index i = 0; i < m; ++i) {
            kalpha += eval(kern, c_in(p, j), c_in(i, j)) * act.coefficients(i, j);
            dcenter += act.coefficients(i, j) * eval_dx(kern, c_in(p, j), c_in(i, j));
          }
          galpha(p, j) += T(2) * lambda * kalpha;
          gc(p, j) += T(2) * lambda * act.coefficients(p, j) * dcenter;
        }
      }
    }
    grads.activation[static_cast<std::size_t>(layer / 2)] = std::move(galpha);
    g_batch = std::move(gh);
    g_centers = std::move(gc);
  }
  return grads;
}

template <class T>
std::vector<T> layer_norms_squared(const BasicModel<T>& model, const BasicForwardTrace<T>& trace) {
  const Index layers = model.layer_count();
  if (static_cast<Index>(trace.centers.size()) != layers + 1)
    shape_error("layer_norms_squared: trace does not belong to this model");
  std::vector<T> norms(static_cast<std::size_t>(layers), T(0));
  for (Index layer = 0; layer < layers; ++layer) {
    if (layer % 2 == 0) {
      norms[static_cast<std::size_t>(layer)] = model.linear(layer / 2).weights.squaredNorm();
      continue;
    }
    const auto& act = model.activation(layer / 2);
    const Mat<T>& c = trace.centers[static_cast<std::size_t>(layer)];
    T total(0);
    for (Index j = 0; j < act.dim(); ++j) {
      const Kernel1D& kern = act.kernels[static_cast<std::size_t>(j)];
      for (Index p = 0; p < act.num_centers(); ++p)
        for (Index i = 0; i < act.num_centers(); ++i)
          total += act.coefficients(p, j) * eval(kern, c(p, j), c(i, j)) * act.coefficients(i, j);
    }
    norms[static_cast<std::size_t>(layer)] = total;
  }
  return norms;
}

double deep_kernel_eval(const SdknModel& model, const Kernel1D& outer, std::span<const double> x,
                        std::span<const double> y) {
  if (!outer.radial()) throw InvalidArgument("deep_kernel_eval: outer kernel must be radial");
  outer.validate();
  const Index d = model.input_dim();
  if (static_cast<Index>(x.size()) != d || static_cast<Index>(y.size()) != d)
    shape_error("deep_kernel_eval: point dimension does not match model input");
  Eigen::MatrixXd pts(2, d);
  for (Index j = 0; j < d; ++j) {
    pts(0, j) = x[static_cast<std::size_t>(j)];
    pts(1, j) = y[static_cast<std::size_t>(j)];
  }
  const auto trace = run_layers(model, pts, model.layer_count() - 1);
  const Eigen::MatrixXd& f = trace.batch.back();
  const double dist = (f.row(0) - f.row(1)).norm();
  return radial_profile(outer.family, outer.epsilon * dist);
}

SdknModel init_model(const ModelShape& shape, const Eigen::MatrixXd& centers, const Kernel1D& kernel,
                     std::uint64_t seed) {
  if (shape.input_dim < 1 || shape.output_dim < 1) throw InvalidArgument("init_model: empty dimension");
  for (Index w : shape.widths)
    if (w < 1) throw InvalidArgument("init_model: widths must be positive");
  const Index m = centers.rows();
  if (m < 1) throw InvalidArgument("init_model: at least one center is required");
  std::mt19937_64 rng(seed);
  auto uniform_linear = [&](Index rows, Index cols) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd w(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) w(i, j) = dist(rng);
    return w;
  };
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(m)));

  std::vector<LinearLayer> linears;
  std::vector<ActivationLayer> activations;
  Index prev = shape.input_dim;
  for (Index w : shape.widths) {
    linears.push_back({uniform_linear(w, prev)});
    ActivationLayer act;
    act.coefficients.resize(m, w);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < w; ++j) act.coefficients(i, j) = normal(rng);
    act.kernels.assign(static_cast<std::size_t>(w), kernel);
    activations.push_back(std::move(act));
    prev = w;
  }
  linears.push_back({uniform_linear(shape.output_dim, prev)});
  return SdknModel(std::move(linears), std::move(activations), centers);
}

NotInSpanError::NotInSpanError(double residual, double relative)
    : InvalidArgument("linear map is not realizable from the centers: residual " + std::to_string(residual) +
                      " (relative " + std::to_string(relative) + ")"),
      residual_(residual),
      relative_(relative) {}

namespace {

constexpr double kRealizeTolerance = 1e-8;

Eigen::MatrixXd min_norm_coefficients(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Z) {
  if (Z.rows() < 1) throw InvalidArgument("realize_linear: at least one center is required");
  if (A.cols() != Z.cols()) throw InvalidArgument("realize_linear: A and centers disagree on dimension");
  // alpha Z = A  <=>  Z^T alpha^T = A^T; COD yields the minimum-norm solution.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Z.transpose());
  return cod.solve(A.transpose()).transpose();
}

}  // namespace

Eigen::MatrixXd realize_linear_from_centers(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Z) {
  Eigen::MatrixXd alpha = min_norm_coefficients(A, Z);
  const double residual = (alpha * Z - A).norm();
  const double scale = A.norm();
  const double relative = scale > 0.0 ? residual / scale : residual;
  if (relative > kRealizeTolerance) throw NotInSpanError(residual, relative);
  return alpha;
}

Eigen::MatrixXd realize_linear_on_data(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Z,
                                       const Eigen::MatrixXd& X) {
  if (X.cols() != A.cols()) throw InvalidArgument("realize_linear_on_data: data dimension mismatch");
  Eigen::MatrixXd alpha = min_norm_coefficients(A, Z);
  const double residual = ((alpha * Z - A) * X.transpose()).norm();
  const double scale = A.norm() * X.norm();
  const double relative = scale > 0.0 ? residual / scale : residual;
  if (relative > kRealizeTolerance) throw NotInSpanError(residual, relative);
  return alpha;
}

Eigen::MatrixXd linear_from_center_coefficients(const Eigen::MatrixXd& alpha, const Eigen::MatrixXd& Z) {
  if (alpha.cols() != Z.rows()) throw InvalidArgument("linear_from_center_coefficients: one column per center");
  return alpha * Z;
}

#define SDKN_INSTANTIATE(T)                                                                              \
  template class BasicModel<T>;                                                                          \
  template struct BasicGradients<T>;                                                                     \
  template Mat<T> activation_forward(const BasicActivationLayer<T>&, const Mat<T>&, const Mat<T>&);      \
  template BasicForwardTrace<T> forward(const BasicModel<T>&, const Mat<T>&);                            \
  template BasicGradients<T> backward(const BasicModel<T>&, const BasicForwardTrace<T>&, const Mat<T>&, \
                                      std::span<const double>);                                          \
  template std::vector<T> layer_norms_squared(const BasicModel<T>&, const BasicForwardTrace<T>&);

SDKN_INSTANTIATE(double)
SDKN_INSTANTIATE(Quad)

#undef SDKN_INSTANTIATE

}  // namespace sdkn
