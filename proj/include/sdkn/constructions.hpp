#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sdkn/network.hpp"

namespace sdkn {

/// Raised when propagated centers of a channel get closer than the
/// configured relative margin.
class CenterCollision : public NumericError {
 public:
  CenterCollision(const std::string& where, double margin);
  double margin() const { return margin_; }

 private:
  double margin_;
};

struct ConstructionSettings {
  Kernel1D kernel = Kernel1D::gaussian();
  double sigma = 1e-3;
  // Minimum relative separation of propagated centers in every channel.
  double margin = 1e-8;
  // Number of candidates in the sequence 1, 1/2, 1/3, ... for auto-selected
  // beta values.
  int max_beta_candidates = 64;

  void validate() const;
};

/// Three centers as rows of a 3 x d matrix, pairwise distinct per coordinate.
struct CenterTriple {
  Eigen::MatrixXd points;

  Index dim() const { return points.cols(); }
  void validate(double margin = 1e-8) const;
  /// Coordinate j takes the fractions {0.1, 0.5, 0.9} of [lo_j, hi_j],
  /// rotated by j so that no two coordinates are proportional.
  static CenterTriple defaults(const std::vector<double>& lo, const std::vector<double>& hi);
  static CenterTriple defaults(Index d);
};

/// min_{a<b} |u_a - u_b| / max_i |u_i|; zero when all values vanish.
double relative_margin(const Eigen::VectorXd& values);
double relative_margin(const QVec& values);

/// Smallest relative margin over every column of every propagated center
/// matrix in the model (inputs excluded).
double min_center_margin(const QuadModel& model);

struct ModuleReport {
  Index depth = 0;
  Index width = 0;
  double sigma = 0.0;
  // Smallest margin over every checked channel while building.
  double min_margin = 0.0;
  std::vector<double> product_betas;  // one per product formed
  std::optional<double> carry_beta;   // addition modules
  std::optional<double> output_beta;  // addition modules
  bool degenerate = false;            // all-zero multi-index (constant path)
  bool collinear_fallback = false;    // product module replaced by c * x^2
};

struct Fragment {
  QuadModel model;
  ModuleReport report;
};

/// Evaluates a binary128 model on double inputs (rows are points).
Eigen::MatrixXd evaluate(const QuadModel& model, const Eigen::MatrixXd& X);

enum class ScalarOp { Identity, Squaring };

/// d = 1 fragment approximating x or x^2; exact at the three centers.
Fragment build_identity_or_squaring(ScalarOp op, const CenterTriple& centers, const ConstructionSettings& s);

/// d = 2 fragment approximating xy = ((x + b y)^2 - x^2 - b^2 y^2) / (2b).
/// beta == nullopt selects b automatically. When the input columns over
/// the centers and `data` rows are collinear (rank test, 1e-10), the
/// fragment falls back to c * x^2.
Fragment build_product_module(const CenterTriple& centers, std::optional<double> beta,
                              const ConstructionSettings& s, const Eigen::MatrixXd& data = {});

/// d = 1 fragment approximating x^n with depth max(ceil(log2 n), 1).
Fragment build_univariate_monomial(int n, const CenterTriple& centers, const ConstructionSettings& s);

/// x^a y^b, depth ceil(log2 max(a, b)) + 1 (1 when a = b = 1). With
/// `extension`, the input is (x, y, z) and beta * z is added to the output.
Fragment build_bivariate_monomial(int a, int b, std::optional<double> extension, const CenterTriple& centers,
                                  const ConstructionSettings& s);

/// Input and output state (x_1, .., x_d, S); the output has
/// S' = S + alpha * prod_j x_j^{n_j} + beta * x_d. beta == nullopt selects
/// it so that the propagated S' values stay separated. `centers` has d + 1
/// columns, the last one for S.
Fragment build_addition_module(const std::vector<int>& multiindex, double alpha, std::optional<double> beta,
                               const CenterTriple& centers, const ConstructionSettings& s);

/// Appends identity stages on every output coordinate until the model has
/// `target_depth` activation layers.
Fragment adjust_depth(const QuadModel& fragment, Index target_depth, const ConstructionSettings& s);

struct PolynomialTerm {
  std::vector<int> exponents;
  double coefficient = 0.0;
};

struct PolynomialSpec {
  Index dim = 1;
  std::vector<PolynomialTerm> terms;
  std::vector<double> lo;  // domain box, defaults to [0, 1]^dim
  std::vector<double> hi;

  void validate() const;
  double evaluate(std::span<const double> x) const;
};

/// One term per line, "coeff : n1 n2 ... nd"; '#' starts a comment.
PolynomialSpec parse_polynomial_spec(std::istream& in);
PolynomialSpec parse_polynomial_spec(const std::string& text);

/// Stacks one addition module per nonzero term. The result has width at
/// most d + 8 and three centers. An empty spec yields the zero model.
Fragment compile_polynomial(const PolynomialSpec& spec, const std::optional<CenterTriple>& centers,
                            const ConstructionSettings& s);

/// Sup error of the model against f on a tensor grid with `per_dim` points
/// per coordinate over the box [lo, hi].
double grid_sup_error(const QuadModel& model, const std::function<double(std::span<const double>)>& f,
                      const std::vector<double>& lo, const std::vector<double>& hi, Index per_dim);

struct RefinementStep {
  double sigma = 0.0;
  double error = 0.0;
};

struct RefinedPolynomial {
  Fragment best;
  std::vector<RefinementStep> steps;
};

/// Compiles at s.sigma, then halves sigma while the grid error drops by at
/// least 10% (at most `max_halvings` times). Keeps the best model.
RefinedPolynomial compile_polynomial_refined(const PolynomialSpec& spec, const std::optional<CenterTriple>& centers,
                                             const ConstructionSettings& s, Index grid_per_dim,
                                             int max_halvings = 6);

struct ModuleBlueprint {
  enum class Kind { Identity, Squaring, Product, UnivariateMonomial, BivariateMonomial, Addition, DepthPad };
  Kind kind = Kind::Identity;
  int n = 1;  // univariate exponent
  int a = 1;  // bivariate exponents
  int b = 1;
  std::optional<double> beta;  // product / extension / addition output beta
  std::vector<int> multiindex;
  double alpha = 1.0;
  Index extra_depth = 0;  // DepthPad, applied on top of an identity fragment
  double sigma = 1e-3;
};

Fragment build_module(const ModuleBlueprint& blueprint, const CenterTriple& centers, ConstructionSettings s);

// Width regime utilities.

/// h = h1 + h2 with h1 symmetric about z1 and h2 symmetric about z2.
/// h is extended outside [a, b] by clamping its argument.
class SymmetricDecomposition {
 public:
  SymmetricDecomposition(std::function<double(double)> h, double a, double b, double z1, double z2);

  double h(double x) const;
  double h1(double x) const;
  double h2(double x) const;

  double z1() const { return z1_; }
  double z2() const { return z2_; }

 private:
  std::function<double(double)> h_;
  double a_, b_, z1_, z2_;
};

struct SymmetricSamples {
  std::vector<double> h1;
  std::vector<double> h2;
};

SymmetricSamples decompose_symmetric(const std::function<double(double)>& h, double a, double b, double z1,
                                     double z2, std::span<const double> grid);

struct EvenProfileFit {
  std::vector<double> coefficients;
  double sup_error = 0.0;
};

/// Least-squares fit of sum_j c_j phi(w_j |x|) to an even target on
/// [-radius, radius], solved in binary128 with a minimum-norm complete
/// orthogonal decomposition. `samples` points on [0, radius] are used.
EvenProfileFit fit_even_profile(const std::function<double(double)>& target, double radius,
                                std::span<const double> widths, const Kernel1D& kernel, Index samples = 1001);

/// Architecture of the bounded-depth, unbounded-center network used for the
/// width regime: width (2d + 1) * d and depth 2.
ModelShape width_regime_shape(Index d);

}  // namespace sdkn
