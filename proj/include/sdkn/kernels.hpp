#pragma once

#include <utility>

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdkn/error.hpp"
#include "sdkn/scalar.hpp"

namespace sdkn {

enum class KernelFamily { Gaussian, Matern0, MaternQuadratic, Wendland0, Linear };

std::string_view family_name(KernelFamily f);
/// Accepts the names produced by family_name(), case-insensitive.
KernelFamily parse_family(std::string_view name);

/// Univariate kernel k(x, y) = phi(epsilon * |x - y|), or x * y for Linear.
struct Kernel1D {
  KernelFamily family = KernelFamily::Gaussian;
  double epsilon = 1.0;

  static Kernel1D gaussian(double eps = 1.0) { return {KernelFamily::Gaussian, eps}; }
  static Kernel1D matern0(double eps = 1.0) { return {KernelFamily::Matern0, eps}; }
  static Kernel1D matern_quadratic(double eps = 1.0) { return {KernelFamily::MaternQuadratic, eps}; }
  static Kernel1D wendland0(double eps = 1.0) { return {KernelFamily::Wendland0, eps}; }
  static Kernel1D linear() { return {KernelFamily::Linear, 1.0}; }

  bool radial() const { return family != KernelFamily::Linear; }
  void validate() const;

  friend bool operator==(const Kernel1D&, const Kernel1D&) = default;
};

// Radial profiles phi(r) for r >= 0 and their derivatives phi'(r).
template <class T>
T radial_profile(KernelFamily family, const T& r) {
  using std::exp;
  switch (family) {
    case KernelFamily::Gaussian:
      return exp(-r * r);
    case KernelFamily::Matern0:
      return exp(-r);
    case KernelFamily::MaternQuadratic:
      return (T(3) + T(3) * r + r * r) * exp(-r);
    case KernelFamily::Wendland0:
      return r < T(1) ? T(1) - r : T(0);
    case KernelFamily::Linear:
      break;
  }
  throw InvalidArgument("radial_profile: linear kernel has no radial profile");
}

template <class T>
T radial_profile_derivative(KernelFamily family, const T& r) {
  using std::exp;
  switch (family) {
    case KernelFamily::Gaussian:
      return T(-2) * r * exp(-r * r);
    case KernelFamily::Matern0:
      return -exp(-r);
    case KernelFamily::MaternQuadratic:
      return -r * (T(1) + r) * exp(-r);
    case KernelFamily::Wendland0:
      return r < T(1) ? T(-1) : T(0);
    case KernelFamily::Linear:
      break;
  }
  throw InvalidArgument("radial_profile_derivative: linear kernel has no radial profile");
}

template <class T>
T eval(const Kernel1D& k, const T& x, const T& y) {
  using std::abs;
  if (k.family == KernelFamily::Linear) return x * y;
  return radial_profile(k.family, T(k.epsilon) * abs(x - y));
}

/// Partial derivative with respect to the first argument. At x == y the
/// non-smooth profiles (Matern0, Wendland0) use the zero subgradient.
template <class T>
T eval_dx(const Kernel1D& k, const T& x, const T& y) {
  using std::abs;
  if (k.family == KernelFamily::Linear) return y;
  const T diff = x - y;
  if (diff == T(0)) return T(0);
  const T eps(k.epsilon);
  const T sign = diff > T(0) ? T(1) : T(-1);
  return radial_profile_derivative(k.family, eps * abs(diff)) * eps * sign;
}

/// k(x, y) and its partial derivative in x from one profile evaluation.
template <class T>
std::pair<T, T> eval_with_dx(const Kernel1D& k, const T& x, const T& y) {
  using std::abs;
  using std::exp;
  if (k.family == KernelFamily::Linear) return {x * y, y};
  const T eps(k.epsilon);
  const T diff = x - y;
  const T r = eps * abs(diff);
  const T sign = diff > T(0) ? T(1) : (diff < T(0) ? T(-1) : T(0));
  switch (k.family) {
    case KernelFamily::Gaussian: {
      const T e = exp(-r * r);
      return {e, T(-2) * r * e * eps * sign};
    }
    case KernelFamily::Matern0: {
      const T e = exp(-r);
      return {e, -e * eps * sign};
    }
    case KernelFamily::MaternQuadratic: {
      const T e = exp(-r);
      return {(T(3) + T(3) * r + r * r) * e, -r * (T(1) + r) * e * eps * sign};
    }
    default:
      return {radial_profile(k.family, r), radial_profile_derivative(k.family, r) * eps * sign};
  }
}

double eval_kernel(const Kernel1D& kernel, double x, double y);

/// Entry (i, j) = k(X[i], Z[j]).
template <class T>
Mat<T> gram(const Kernel1D& kernel, std::span<const T> xs, std::span<const T> zs) {
  if (xs.empty() || zs.empty()) throw InvalidArgument("gram_matrix: empty point list");
  Mat<T> g(static_cast<Index>(xs.size()), static_cast<Index>(zs.size()));
  for (Index j = 0; j < g.cols(); ++j)
    for (Index i = 0; i < g.rows(); ++i) g(i, j) = eval(kernel, xs[i], zs[j]);
  return g;
}

Eigen::MatrixXd gram_matrix(const Kernel1D& kernel, std::span<const double> xs,
                            std::span<const double> zs);

/// Block-diagonal Gram of the single-dimensional matrix-valued kernel.
/// Points are rows of X and Z; block j uses kernels[j] on coordinate j.
Eigen::MatrixXd single_dim_gram(std::span<const Kernel1D> kernels, const Eigen::MatrixXd& X,
                                const Eigen::MatrixXd& Z);

/// Leading even-power coefficients phi(r) = a0 + a1 r^2 + a2 r^4 + ... and
/// the flat-limit admissibility conditions for two and three nodes.
struct TaylorAdmissibility {
  double a0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  bool admissible_n2 = false;
  bool admissible_n3 = false;
  // Coefficients came from a numerical fit rather than a closed form.
  bool estimated = false;
  // An odd power r or r^3 (or a kink at 0) appears in the expansion.
  bool odd_terms = false;
};

TaylorAdmissibility taylor_admissibility(const Kernel1D& kernel);

/// Least-squares polynomial fit of phi on [0, radius] in binary128;
/// returns coefficients c_0..c_degree of phi(r) ~ sum c_k r^k.
std::vector<double> estimate_profile_expansion(KernelFamily family, int degree = 10,
                                               double radius = 0.02);

/// Solves the symmetric system A x = b with an LDLT factorization. If the
/// factorization breaks down, a diagonal jitter of 1e-12 times the largest
/// entry is added once.
template <class T>
Vec<T> solve_symmetric(const Mat<T>& A, const Vec<T>& b);

/// Kernel interpolant s(x) = sum_i alpha_i k(eps x, eps x_i) on 2 or 3 nodes.
/// Coefficients live in binary128; evaluation returns double.
class FlatLimitInterpolant {
 public:
  FlatLimitInterpolant(Kernel1D kernel, std::vector<double> nodes, QVec coefficients, double eps);

  double operator()(double x) const;
  Quad evaluate(const Quad& x) const;

  const std::vector<double>& nodes() const { return nodes_; }
  const QVec& coefficients() const { return coefficients_; }
  double eps() const { return eps_; }

 private:
  Kernel1D kernel_;
  std::vector<double> nodes_;
  QVec coefficients_;
  double eps_;
};

FlatLimitInterpolant flat_limit_interpolant(const Kernel1D& kernel, std::span<const double> nodes,
                                            std::span<const double> values, double eps);

/// Lagrange interpolating polynomial through (nodes, values), evaluated at x.
double interpolating_polynomial(std::span<const double> nodes, std::span<const double> values,
                                double x);

/// 2-norm condition number of the Gram matrix on `nodes`, computed in
/// binary128. Coincident nodes (or a zero singular value) return +infinity;
/// estimates saturate around 1e34 for matrices singular to working precision.
double conditioning_diagnostic(const Kernel1D& kernel, std::span<const double> nodes);

}  // namespace sdkn
