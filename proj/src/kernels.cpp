#include "sdkn/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <numbers>

namespace sdkn {

std::string_view family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::Gaussian:
      return "gaussian";
    case KernelFamily::Matern0:
      return "matern0";
    case KernelFamily::MaternQuadratic:
      return "matern2";
    case KernelFamily::Wendland0:
      return "wendland0";
    case KernelFamily::Linear:
      return "linear";
  }
  return "unknown";
}

KernelFamily parse_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto f : {KernelFamily::Gaussian, KernelFamily::Matern0, KernelFamily::MaternQuadratic,
                 KernelFamily::Wendland0, KernelFamily::Linear}) {
    if (lower == family_name(f)) return f;
  }
  if (lower == "matern_quadratic") return KernelFamily::MaternQuadratic;
  throw InvalidArgument("unknown kernel family '" + std::string(name) + "'");
}

void Kernel1D::validate() const {
  if (radial() && !(epsilon > 0.0 && std::isfinite(epsilon)))
    throw InvalidArgument("kernel shape parameter must be positive and finite");
}

double eval_kernel(const Kernel1D& kernel, double x, double y) { return eval(kernel, x, y); }

Eigen::MatrixXd gram_matrix(const Kernel1D& kernel, std::span<const double> xs,
                            std::span<const double> zs) {
  return gram<double>(kernel, xs, zs);
}

Eigen::MatrixXd single_dim_gram(std::span<const Kernel1D> kernels, const Eigen::MatrixXd& X,
                                const Eigen::MatrixXd& Z) {
  const Index d = static_cast<Index>(kernels.size());
  if (d == 0 || X.cols() != d || Z.cols() != d)
    throw InvalidArgument("single_dim_gram: dimension mismatch between kernels and points");
  if (X.rows() == 0 || Z.rows() == 0) throw InvalidArgument("single_dim_gram: empty point list");
  const Index n = X.rows();
  const Index m = Z.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d * n, d * m);
  for (Index j = 0; j < d; ++j) {
    const Eigen::VectorXd xj = X.col(j);
    const Eigen::VectorXd zj = Z.col(j);
    out.block(j * n, j * m, n, m) =
        gram_matrix(kernels[j], std::span<const double>(xj.data(), n),
                    std::span<const double>(zj.data(), m));
  }
  return out;
}

std::vector<double> estimate_profile_expansion(KernelFamily family, int degree, double radius) {
  if (family == KernelFamily::Linear)
    throw InvalidArgument("estimate_profile_expansion: linear kernel has no radial profile");
  if (degree < 1 || !(radius > 0.0)) throw InvalidArgument("estimate_profile_expansion: bad fit setup");
  // Fit in the scaled variable t = r / radius on Chebyshev points of [0, 1].
  const int samples = 4 * (degree + 1) + 1;
  QMat vander(samples, degree + 1);
  QVec rhs(samples);
  const Quad pi = boost::multiprecision::acos(Quad(-1));
  const Quad rad(radius);
  for (int i = 0; i < samples; ++i) {
    const Quad t = (Quad(1) - boost::multiprecision::cos(pi * Quad(i) / Quad(samples - 1))) / Quad(2);
    Quad p(1);
    for (int k = 0; k <= degree; ++k) {
      vander(i, k) = p;
      p *= t;
    }
    rhs(i) = radial_profile(family, t * rad);
  }
  const QVec scaled = vander.colPivHouseholderQr().solve(rhs);
  std::vector<double> coeffs(degree + 1);
  Quad scale(1);
  for (int k = 0; k <= degree; ++k) {
    coeffs[k] = static_cast<double>(scaled(k) / scale);
    scale *= rad;
  }
  return coeffs;
}

namespace {

TaylorAdmissibility flags_from(double a0, double a1, double a2) {
  TaylorAdmissibility t;
  t.a0 = a0;
  t.a1 = a1;
  t.a2 = a2;
  t.admissible_n2 = a0 != 0.0 && a1 != 0.0;
  t.admissible_n3 = a1 != 0.0 && 6.0 * a0 * a2 - a1 * a1 != 0.0;
  return t;
}

}  // namespace

TaylorAdmissibility taylor_admissibility(const Kernel1D& kernel) {
  switch (kernel.family) {
    case KernelFamily::Gaussian:
      // exp(-r^2) = 1 - r^2 + r^4 / 2 - ...
      return flags_from(1.0, -1.0, 0.5);
    case KernelFamily::Matern0: {
      // exp(-r) = 1 - r + r^2 / 2 - r^3 / 6 + r^4 / 24: odd powers present.
      TaylorAdmissibility t = flags_from(1.0, 0.5, 1.0 / 24.0);
      t.odd_terms = true;
      t.admissible_n2 = t.admissible_n3 = false;
      return t;
    }
    case KernelFamily::Wendland0: {
      // (1 - r)_+ : linear term at 0 and a kink at r = 1.
      TaylorAdmissibility t = flags_from(1.0, 0.0, 0.0);
      t.odd_terms = true;
      t.admissible_n2 = t.admissible_n3 = false;
      return t;
    }
    case KernelFamily::MaternQuadratic: {
      const auto c = estimate_profile_expansion(kernel.family);
      TaylorAdmissibility t = flags_from(c[0], c[2], c[4]);
      t.estimated = true;
      const double tol = 1e-8 * std::abs(c[0]);
      t.odd_terms = std::abs(c[1]) > tol || std::abs(c[3]) > tol;
      if (t.odd_terms) t.admissible_n2 = t.admissible_n3 = false;
      return t;
    }
    case KernelFamily::Linear:
      break;
  }
  throw InvalidArgument("taylor_admissibility: linear kernel has no radial profile");
}

template <class T>
Vec<T> solve_symmetric(const Mat<T>& A, const Vec<T>& b) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw InvalidArgument("solve_symmetric: shape mismatch");
  using std::abs;
  const T tiny = T(static_cast<double>(A.rows())) * std::numeric_limits<T>::epsilon();
  auto healthy = [&](const Eigen::LDLT<Mat<T>>& f) {
    if (f.info() != Eigen::Success) return false;
    const auto& d = f.vectorD();
    T dmax(0);
    for (Index i = 0; i < d.size(); ++i) dmax = std::max<T>(dmax, abs(d(i)));
    if (!(dmax > T(0))) return false;
    for (Index i = 0; i < d.size(); ++i)
      if (!(abs(d(i)) > tiny * dmax)) return false;
    return true;
  };
  Eigen::LDLT<Mat<T>> ldlt(A);
  if (!healthy(ldlt)) {
    const T scale = A.cwiseAbs().maxCoeff();
    if (!(scale > T(0))) throw SingularSystemError("symmetric solve: matrix is zero");
    Mat<T> jittered = A;
    jittered.diagonal().array() += T(1e-12) * scale;
    ldlt.compute(jittered);
    if (!healthy(ldlt)) throw SingularSystemError("symmetric solve: matrix is singular");
  }
  return ldlt.solve(b);
}

template Vec<double> solve_symmetric(const Mat<double>&, const Vec<double>&);
template Vec<Quad> solve_symmetric(const Mat<Quad>&, const Vec<Quad>&);

FlatLimitInterpolant::FlatLimitInterpolant(Kernel1D kernel, std::vector<double> nodes,
                                           QVec coefficients, double eps)
    : kernel_(kernel), nodes_(std::move(nodes)), coefficients_(std::move(coefficients)), eps_(eps) {}

Quad FlatLimitInterpolant::evaluate(const Quad& x) const {
  const Quad e(eps_);
  Quad sum(0);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    sum += coefficients_(static_cast<Index>(i)) * eval(kernel_, e * x, e * Quad(nodes_[i]));
  return sum;
}

double FlatLimitInterpolant::operator()(double x) const {
  return static_cast<double>(evaluate(Quad(x)));
}

FlatLimitInterpolant flat_limit_interpolant(const Kernel1D& kernel, std::span<const double> nodes,
                                            std::span<const double> values, double eps) {
  kernel.validate();
  if (!kernel.radial()) throw InvalidArgument("flat_limit_interpolant: kernel must be radial");
  if (nodes.size() != 2 && nodes.size() != 3)
    throw InvalidArgument("flat_limit_interpolant: expects 2 or 3 nodes");
  if (values.size() != nodes.size())
    throw InvalidArgument("flat_limit_interpolant: node/value count mismatch");
  if (!(eps > 0.0)) throw InvalidArgument("flat_limit_interpolant: eps must be positive");
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      if (nodes[i] == nodes[j])
        throw SingularSystemError("flat_limit_interpolant: coincident nodes give a singular Gram matrix");
  const auto adm = taylor_admissibility(kernel);
  if (!(nodes.size() == 2 ? adm.admissible_n2 : adm.admissible_n3))
    throw InvalidArgument("flat_limit_interpolant: kernel " + std::string(family_name(kernel.family)) +
                          " is not flat-limit admissible for " + std::to_string(nodes.size()) + " nodes");

  const Index n = static_cast<Index>(nodes.size());
  std::vector<Quad> scaled(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) scaled[i] = Quad(eps) * Quad(nodes[i]);
  const QMat g = gram<Quad>(kernel, scaled, scaled);
  QVec rhs(n);
  for (Index i = 0; i < n; ++i) rhs(i) = Quad(values[i]);
  QVec coeffs = solve_symmetric(g, rhs);
  return FlatLimitInterpolant(kernel, std::vector<double>(nodes.begin(), nodes.end()), std::move(coeffs),
                              eps);
}

double interpolating_polynomial(std::span<const double> nodes, std::span<const double> values,
                                double x) {
  if (nodes.empty() || nodes.size() != values.size())
    throw InvalidArgument("interpolating_polynomial: node/value count mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double basis = 1.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      if (j == i) continue;
      basis *= (x - nodes[j]) / (nodes[i] - nodes[j]);
    }
    sum += values[i] * basis;
  }
  return sum;
}

double conditioning_diagnostic(const Kernel1D& kernel, std::span<const double> nodes) {
  kernel.validate();
  if (nodes.size() < 2) throw InvalidArgument("conditioning_diagnostic: needs at least two nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      if (nodes[i] == nodes[j]) return std::numeric_limits<double>::infinity();
  std::vector<Quad> q(nodes.begin(), nodes.end());
  const QMat g = gram<Quad>(kernel, q, q);
  Eigen::JacobiSVD<QMat> svd(g);
  const QVec& s = svd.singularValues();
  const Quad smax = s(0);
  const Quad smin = s(s.size() - 1);
  if (!(smin > Quad(0))) return std::numeric_limits<double>::infinity();
  return static_cast<double>(smax / smin);
}

}  // namespace sdkn
