#include <algorithm>
#include <cmath>

#include "sdkn/constructions.hpp"

namespace sdkn {

SymmetricDecomposition::SymmetricDecomposition(std::function<double(double)> h, double a, double b, double z1,
                                               double z2)
    : h_(std::move(h)), a_(a), b_(b), z1_(z1), z2_(z2) {
  if (!h_) throw InvalidArgument("decompose_symmetric: empty function");
  if (!(a <= z1 && z1 < z2 && z2 <= b)) throw InvalidArgument("decompose_symmetric: need a <= z1 < z2 <= b");
}

double SymmetricDecomposition::h(double x) const { return h_(std::clamp(x, a_, b_)); }

// On [z1, z2] h1 = h and h2 = 0. Right of z2, h2 mirrors about z2 and
// h1 = h - h2; left of z1, h1 mirrors about z1 and h2 = h - h1. Each
// double reflection moves the argument 2 (z2 - z1) closer, so the
// recursion ends.
double SymmetricDecomposition::h1(double x) const {
  if (x < z1_) return h1(2.0 * z1_ - x);
  if (x <= z2_) return h(x);
  return h(x) - h2(x);
}

double SymmetricDecomposition::h2(double x) const {
  if (x > z2_) return h2(2.0 * z2_ - x);
  if (x >= z1_) return 0.0;
  return h(x) - h1(x);
}

SymmetricSamples decompose_symmetric(const std::function<double(double)>& h, double a, double b, double z1, double z2,
                                     std::span<const double> grid) {
  const SymmetricDecomposition dec(h, a, b, z1, z2);
  SymmetricSamples out;
  out.h1.reserve(grid.size());
  out.h2.reserve(grid.size());
  for (double x : grid) {
    out.h1.push_back(dec.h1(x));
    out.h2.push_back(dec.h2(x));
  }
  return out;
}

EvenProfileFit fit_even_profile(const std::function<double(double)>& target, double radius,
                                std::span<const double> widths, const Kernel1D& kernel, Index samples) {
  kernel.validate();
  if (!kernel.radial()) throw InvalidArgument("fit_even_profile: kernel must be radial");
  if (!(radius > 0.0)) throw InvalidArgument("fit_even_profile: radius must be positive");
  if (widths.empty()) throw InvalidArgument("fit_even_profile: empty dictionary");
  if (samples < 2) throw InvalidArgument("fit_even_profile: need at least two samples");
  std::vector<double> sorted(widths.begin(), widths.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i] >= 0.0) || !std::isfinite(sorted[i])) throw InvalidArgument("fit_even_profile: widths must be >= 0");
    if (i > 0 && sorted[i] == sorted[i - 1]) throw InvalidArgument("fit_even_profile: duplicate width in dictionary");
  }

  const Index m = static_cast<Index>(widths.size());
  QMat A(samples, m);
  QVec y(samples);
  for (Index i = 0; i < samples; ++i) {
    const double x = radius * static_cast<double>(i) / static_cast<double>(samples - 1);
    y(i) = target(x);
    for (Index j = 0; j < m; ++j)
      A(i, j) = radial_profile(kernel.family, Quad(kernel.epsilon) * Quad(widths[static_cast<std::size_t>(j)]) * Quad(x));
  }
  const QVec c = A.completeOrthogonalDecomposition().solve(y);

  EvenProfileFit fit;
  for (Index j = 0; j < m; ++j) fit.coefficients.push_back(to_double(c(j)));
  // Sup error on a grid twice as fine, mirrored to [-radius, radius].
  const Index check = 2 * samples - 1;
  for (Index i = 0; i < check; ++i) {
    const double x = -radius + 2.0 * radius * static_cast<double>(i) / static_cast<double>(check - 1);
    Quad s = 0;
    for (Index j = 0; j < m; ++j)
      s += c(j) * radial_profile(kernel.family, Quad(kernel.epsilon) * Quad(widths[static_cast<std::size_t>(j)]) * Quad(std::abs(x)));
    fit.sup_error = std::max(fit.sup_error, std::abs(to_double(s) - target(x)));
  }
  return fit;
}

ModelShape width_regime_shape(Index d) {
  if (d < 1) throw InvalidArgument("width_regime_shape: dimension must be positive");
  return {d, 1, {(2 * d + 1) * d, 2 * d + 1}};
}

}  // namespace sdkn
