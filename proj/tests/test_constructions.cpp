#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sdkn/constructions.hpp"

using namespace sdkn;

namespace {

ConstructionSettings at(double sigma) {
  ConstructionSettings s;
  s.sigma = sigma;
  return s;
}

CenterTriple triple(std::initializer_list<std::initializer_list<double>> rows) {
  CenterTriple c;
  c.points.resize(3, static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (const auto& r : rows) {
    Index j = 0;
    for (double v : r) c.points(i, j++) = v;
    ++i;
  }
  return c;
}

double at_point(const QuadModel& m, std::initializer_list<double> x) {
  Eigen::MatrixXd X(1, static_cast<Index>(x.size()));
  Index j = 0;
  for (double v : x) X(0, j++) = v;
  return evaluate(m, X)(0, 0);
}

Eigen::MatrixXd grid1(Index n) {
  const auto v = oracle::linspace(0.0, 1.0, n);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), n);
}

Eigen::MatrixXd grid2(Index n) {
  const auto v = oracle::linspace(0.0, 1.0, n);
  Eigen::MatrixXd X(n * n, 2);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) X.row(i * n + j) << v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)];
  return X;
}

template <class F>
double sup_error(const QuadModel& m, const Eigen::MatrixXd& X, F&& f, Index col = 0) {
  const Eigen::MatrixXd Y = evaluate(m, X);
  double e = 0;
  for (Index i = 0; i < X.rows(); ++i) e = std::max(e, std::abs(Y(i, col) - f(X.row(i))));
  return e;
}

Index ceil_log2(int v) {
  Index k = 0;
  while ((1 << k) < v) ++k;
  return k;
}

void check_margins(const Fragment& f) {
  CHECK(min_center_margin(f.model) >= 1e-8);
  CHECK(f.report.min_margin >= 1e-8);
}

}  // namespace

TEST_CASE("relative_margin") {
  Eigen::VectorXd v(3);
  v << 0.1, 0.5, 0.9;
  CHECK(relative_margin(v) == doctest::Approx(0.4 / 0.9));
  v << 1, 1, 2;
  CHECK(relative_margin(v) == 0.0);
  CHECK(relative_margin(Eigen::VectorXd(Eigen::VectorXd::Zero(3))) == 0.0);
}

TEST_CASE("center triples") {
  const CenterTriple c = CenterTriple::defaults(3);
  c.validate();
  for (Index j = 0; j < 3; ++j) {
    std::vector<double> col(c.points.col(j).data(), c.points.col(j).data() + 3);
    std::sort(col.begin(), col.end());
    CHECK(col[0] == doctest::Approx(0.1));
    CHECK(col[1] == doctest::Approx(0.5));
    CHECK(col[2] == doctest::Approx(0.9));
  }
  CHECK(c.points(0, 0) != c.points(0, 1));
  CHECK_THROWS_AS(triple({{0.1}, {0.1}, {0.5}}).validate(), InvalidArgument);
  CHECK_THROWS_AS(triple({{-0.1}, {0.2}, {0.5}}).validate(), InvalidArgument);
  CHECK_THROWS_AS(build_identity_or_squaring(ScalarOp::Squaring, triple({{0.1}, {0.1}, {0.5}}), at(1e-3)),
                  InvalidArgument);
  const CenterTriple box = CenterTriple::defaults({2.0}, {4.0});
  CHECK(box.points(1, 0) == doctest::Approx(3.0));
}

TEST_CASE("identity and squaring fragments") {
  const CenterTriple c = CenterTriple::defaults(1);
  const Eigen::MatrixXd X = grid1(1001);
  const Fragment sq = build_identity_or_squaring(ScalarOp::Squaring, c, at(1e-3));
  CHECK(sq.model.depth() == 1);
  CHECK(sq.model.num_centers() == 3);
  const double e3 = sup_error(sq.model, X, [](const auto& x) { return x(0) * x(0); });
  CHECK(e3 < 1e-4);
  const Fragment sq1 = build_identity_or_squaring(ScalarOp::Squaring, c, at(1e-1));
  CHECK(sup_error(sq1.model, X, [](const auto& x) { return x(0) * x(0); }) > e3);
  check_margins(sq);

  for (double sigma : {1e-3, 1e-2, 1e-1, 1.0}) {
    const Fragment id = build_identity_or_squaring(ScalarOp::Identity, c, at(sigma));
    const Fragment s2 = build_identity_or_squaring(ScalarOp::Squaring, c, at(sigma));
    const Eigen::MatrixXd yi = evaluate(id.model, c.points), ys = evaluate(s2.model, c.points);
    for (Index i = 0; i < 3; ++i) {
      const double z = c.points(i, 0);
      CHECK(std::abs(yi(i, 0) - z) < 1e-14);
      CHECK(std::abs(ys(i, 0) - z * z) < 1e-14);
    }
  }
  const Fragment id = build_identity_or_squaring(ScalarOp::Identity, c, at(1e-3));
  CHECK(sup_error(id.model, X, [](const auto& x) { return x(0); }) < 1e-6);
}

TEST_CASE("inadmissible kernels are rejected") {
  ConstructionSettings s = at(1e-3);
  s.kernel = Kernel1D::matern0();
  CHECK_THROWS_AS(build_identity_or_squaring(ScalarOp::Squaring, CenterTriple::defaults(1), s), InvalidArgument);
  s.kernel = Kernel1D::wendland0();
  CHECK_THROWS_AS(build_univariate_monomial(3, CenterTriple::defaults(1), s), InvalidArgument);
  s.kernel = Kernel1D::matern_quadratic();
  const Fragment m = build_identity_or_squaring(ScalarOp::Squaring, CenterTriple::defaults(1), s);
  CHECK(std::abs(at_point(m.model, {0.3}) - 0.09) < 1e-3);
  CHECK_THROWS_AS(build_identity_or_squaring(ScalarOp::Squaring, CenterTriple::defaults(1), at(0.0)),
                  InvalidArgument);
}

TEST_CASE("product module") {
  const CenterTriple c = CenterTriple::defaults(2);
  const Fragment p = build_product_module(c, std::nullopt, at(1e-3));
  CHECK(std::abs(at_point(p.model, {0.5, 0.25}) - 0.125) < 1e-4);
  CHECK_FALSE(p.report.collinear_fallback);
  REQUIRE(p.report.product_betas.size() == 1);
  check_margins(p);

  const Eigen::MatrixXd X = grid2(50);
  const double e3 = sup_error(p.model, X, [](const auto& x) { return x(0) * x(1); });
  CHECK(e3 < 1e-4);
  const Fragment p1 = build_product_module(c, std::nullopt, at(1e-1));
  CHECK(sup_error(p1.model, X, [](const auto& x) { return x(0) * x(1); }) > e3);

  Eigen::MatrixXd line(101, 2);
  line.col(0) = grid1(101);
  line.col(1).setZero();
  CHECK(sup_error(p.model, line, [](const auto&) { return 0.0; }) < 1e-4);

  for (double beta : {1.0, 0.25, -2.0}) {
    const Fragment pb = build_product_module(c, beta, at(1e-3));
    CHECK(pb.report.product_betas[0] == beta);
    CHECK(sup_error(pb.model, X, [](const auto& x) { return x(0) * x(1); }) < 1e-3);
  }
  CHECK_THROWS_AS(build_product_module(c, 0.0, at(1e-3)), InvalidArgument);
}

TEST_CASE("product identity holds for every beta") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int t = 0; t < 100; ++t) {
    const double x = u(rng), y = u(rng), b = u(rng) + 3.0;
    const double v = ((x + b * y) * (x + b * y) - x * x - b * b * y * y) / (2 * b);
    CHECK(v == doctest::Approx(x * y).epsilon(1e-12));
  }
  const double x = 0.3, y = 0.7;
  CHECK((x + y) * (x + y) - x * x - y * y == doctest::Approx(2 * x * y));
}

TEST_CASE("product beta that collapses centers is rejected") {
  const CenterTriple c = triple({{0.1, 0.9}, {0.5, 0.5}, {0.9, 0.1}});
  CHECK_THROWS_AS(build_product_module(c, 1.0, at(1e-3)), CenterCollision);
  const Fragment p = build_product_module(c, std::nullopt, at(1e-3));
  CHECK(p.report.product_betas[0] != 1.0);
  CHECK(std::abs(at_point(p.model, {0.4, 0.6}) - 0.24) < 1e-4);
}

TEST_CASE("product module falls back to c x^2 for collinear inputs") {
  const CenterTriple c = triple({{0.1, 0.2}, {0.5, 1.0}, {0.9, 1.8}});
  const Fragment p = build_product_module(c, std::nullopt, at(1e-3));
  CHECK(p.report.collinear_fallback);
  for (double x : {0.0, 0.2, 0.45, 0.8, 1.0}) CHECK(std::abs(at_point(p.model, {x, 2 * x}) - 2 * x * x) < 1e-4);

  Eigen::MatrixXd data(2, 2);
  data << 0.3, 0.7, 0.6, 0.2;
  const Fragment q = build_product_module(c, std::nullopt, at(1e-3), data);
  CHECK_FALSE(q.report.collinear_fallback);
  CHECK(std::abs(at_point(q.model, {0.3, 0.7}) - 0.21) < 1e-4);
}

TEST_CASE("univariate monomials") {
  const CenterTriple c = CenterTriple::defaults(1);
  const Fragment one = build_univariate_monomial(1, c, at(1e-3));
  CHECK(one.model.depth() == 1);
  CHECK(std::abs(at_point(one.model, {0.37}) - 0.37) < 1e-6);

  const Fragment m11 = build_univariate_monomial(11, c, at(1e-3));
  CHECK(m11.model.depth() == 4);
  CHECK(std::abs(at_point(m11.model, {0.5}) - 1.0 / 2048) < 1e-5);
  const double e11 = sup_error(m11.model, grid1(100), [](const auto& x) { return std::pow(x(0), 11); });
  CHECK(e11 < 1e-4);
  check_margins(m11);
  const Fragment m11b = build_univariate_monomial(11, c, at(1e-1));
  CHECK(sup_error(m11b.model, grid1(100), [](const auto& x) { return std::pow(x(0), 11); }) > e11);

  const Eigen::MatrixXd X = grid1(257);
  const Fragment m2 = build_univariate_monomial(2, c, at(1e-3));
  const Fragment sq = build_identity_or_squaring(ScalarOp::Squaring, c, at(1e-3));
  CHECK((evaluate(m2.model, X) - evaluate(sq.model, X)).cwiseAbs().maxCoeff() < 1e-10);

  for (int n = 1; n <= 16; ++n) {
    const Fragment f = build_univariate_monomial(n, c, at(1e-3));
    CHECK(f.model.depth() == std::max<Index>(ceil_log2(n), 1));
    CHECK(f.model.width() <= 3);
    CHECK(std::abs(at_point(f.model, {0.8}) - std::pow(0.8, n)) < 1e-3);
    CHECK(min_center_margin(f.model) >= 1e-8);
  }
  CHECK_THROWS_AS(build_univariate_monomial(0, c, at(1e-3)), InvalidArgument);
}

TEST_CASE("high powers need centers away from zero") {
  // 0.1^32 and 0.5^32 are within 1e-8 of each other relative to 0.9^32.
  CHECK_THROWS_AS(build_univariate_monomial(20, CenterTriple::defaults(1), at(1e-3)), CenterCollision);
  const CenterTriple c = triple({{0.6}, {0.8}, {1.0}});
  const Fragment f = build_univariate_monomial(20, c, at(1e-3));
  CHECK(f.model.depth() == 5);
  CHECK(std::abs(at_point(f.model, {0.9}) - std::pow(0.9, 20)) < 1e-3);
  CHECK(min_center_margin(f.model) >= 1e-8);
}

TEST_CASE("bivariate monomials") {
  const CenterTriple c2 = CenterTriple::defaults(2);
  const Eigen::MatrixXd X = grid2(30);
  const Fragment b11 = build_bivariate_monomial(1, 1, std::nullopt, c2, at(1e-3));
  const Fragment p = build_product_module(c2, std::nullopt, at(1e-3));
  CHECK(b11.model.depth() == 1);
  CHECK((evaluate(b11.model, X) - evaluate(p.model, X)).cwiseAbs().maxCoeff() < 1e-10);

  const Fragment b23 = build_bivariate_monomial(2, 3, std::nullopt, c2, at(1e-3));
  CHECK(b23.model.depth() == 3);
  CHECK(std::abs(at_point(b23.model, {0.5, 0.5}) - 0.03125) < 1e-4);
  check_margins(b23);

  for (int a = 1; a <= 6; ++a)
    for (int b = 1; b <= 6; ++b) {
      const Fragment f = build_bivariate_monomial(a, b, std::nullopt, c2, at(1e-3));
      CHECK(f.model.depth() <= ceil_log2(std::max(a, b)) + 1);
      CHECK(std::abs(at_point(f.model, {0.7, 0.6}) - std::pow(0.7, a) * std::pow(0.6, b)) < 1e-3);
    }
  CHECK_THROWS_AS(build_bivariate_monomial(0, 2, std::nullopt, c2, at(1e-3)), InvalidArgument);
}

TEST_CASE("bivariate extension adds beta z") {
  const CenterTriple c3 = CenterTriple::defaults(3);
  REQUIRE((c3.points.col(2).array() == 0.1).any());
  const CenterTriple c2{c3.points.leftCols(2)};
  for (auto [a, b] : {std::pair{1, 1}, std::pair{2, 3}}) {
    const Fragment ext = build_bivariate_monomial(a, b, 2.0, c3, at(1e-3));
    const Fragment base = build_bivariate_monomial(a, b, std::nullopt, c2, at(1e-3));
    for (double x : {0.2, 0.5, 0.9})
      for (double y : {0.1, 0.5, 0.75})
        CHECK(std::abs(at_point(ext.model, {x, y, 0.1}) - at_point(base.model, {x, y}) - 0.2) < 1e-10);
    CHECK(std::abs(at_point(ext.model, {0.5, 0.5, 0.33}) - at_point(base.model, {0.5, 0.5}) - 0.66) < 1e-5);
    check_margins(ext);
  }
}

TEST_CASE("addition module") {
  // d = 1, n = (2): the state is (x, S) with S = 0 among the S centers.
  const CenterTriple c1 = triple({{0.1, 0.5}, {0.5, 0.0}, {0.9, 1.0}});
  const Fragment add = build_addition_module({2}, 1.0, 0.0, c1, at(1e-3));
  const Fragment sq = build_identity_or_squaring(ScalarOp::Squaring, CenterTriple{c1.points.leftCols(1)}, at(1e-3));
  const Eigen::MatrixXd xs = grid1(201);
  Eigen::MatrixXd state(201, 2);
  state << xs, Eigen::VectorXd::Zero(201);
  const Eigen::MatrixXd out = evaluate(add.model, state);
  CHECK((out.col(1) - evaluate(sq.model, xs).col(0)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((out.col(0) - xs).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(add.model.output_dim() == 2);

  const CenterTriple c2 = CenterTriple::defaults(3);
  const Fragment a12 = build_addition_module({1, 2}, 2.0, 0.0, c2, at(1e-3));
  const Eigen::MatrixXd y = evaluate(a12.model, Eigen::RowVector3d(0.5, 0.5, 0.0));
  CHECK(std::abs(y(0, 2) - 0.25) < 1e-4);
  CHECK(std::abs(y(0, 0) - 0.5) < 1e-4);
  CHECK(std::abs(y(0, 1) - 0.5) < 1e-4);
  check_margins(a12);

  // S' = S + alpha prod + beta x_d for a nonzero S and an auto beta.
  const Fragment auto_beta = build_addition_module({1, 2}, -1.5, std::nullopt, c2, at(1e-3));
  REQUIRE(auto_beta.report.output_beta.has_value());
  const double beta = *auto_beta.report.output_beta;
  const Eigen::MatrixXd z = evaluate(auto_beta.model, Eigen::RowVector3d(0.3, 0.8, 0.4));
  CHECK(std::abs(z(0, 2) - (0.4 - 1.5 * 0.3 * 0.64 + beta * 0.8)) < 1e-4);
  check_margins(auto_beta);
}

TEST_CASE("addition module depth bound over random multi-indices") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> dim(1, 3), expo(1, 8);
  for (int t = 0; t < 40; ++t) {
    const int d = dim(rng);
    std::vector<int> n(static_cast<std::size_t>(d));
    for (int& v : n) v = expo(rng);
    const Fragment f = build_addition_module(n, 1.0, std::nullopt, CenterTriple::defaults(d + 1), at(1e-3));
    const int top = *std::max_element(n.begin(), n.end());
    CAPTURE(t);
    CHECK(f.model.depth() <= d * ceil_log2(top + 1));
    CHECK(f.model.width() <= d + 8);
    CHECK(min_center_margin(f.model) >= 1e-8);

    Eigen::RowVectorXd x(d + 1);
    double expect = 0.25;
    for (int j = 0; j < d; ++j) {
      x(j) = 0.9 - 0.1 * j;
      expect *= 1.0;
    }
    x(d) = 0.25;
    double prod = 1.0;
    for (int j = 0; j < d; ++j) prod *= std::pow(x(j), n[static_cast<std::size_t>(j)]);
    expect += prod + *f.report.output_beta * x(d - 1);
    CHECK(std::abs(evaluate(f.model, x)(0, d) - expect) < 1e-3);
  }
}

TEST_CASE("degenerate addition module uses the constant path") {
  const CenterTriple c = CenterTriple::defaults(3);
  const Fragment f = build_addition_module({0, 0}, 0.7, 0.5, c, at(1e-3));
  CHECK(f.report.degenerate);
  const Eigen::MatrixXd y = evaluate(f.model, Eigen::RowVector3d(0.2, 0.6, 0.3));
  CHECK(std::abs(y(0, 2) - (0.3 + 0.7 + 0.5 * 0.6)) < 1e-4);
  CHECK_THROWS_AS(build_addition_module({}, 1.0, 0.0, CenterTriple::defaults(1), at(1e-3)), InvalidArgument);
  CHECK_THROWS_AS(build_addition_module({1, -1}, 1.0, 0.0, c, at(1e-3)), InvalidArgument);
  CHECK_THROWS_AS(build_addition_module({1, 1}, 1.0, 0.0, CenterTriple::defaults(2), at(1e-3)), InvalidArgument);
}

TEST_CASE("adjust_depth") {
  const CenterTriple c = CenterTriple::defaults(1);
  const Fragment sq = build_identity_or_squaring(ScalarOp::Squaring, c, at(1e-3));
  const Fragment same = adjust_depth(sq.model, 1, at(1e-3));
  const Eigen::MatrixXd X = grid1(501);
  CHECK(same.model.depth() == 1);
  CHECK((evaluate(same.model, X) - evaluate(sq.model, X)).cwiseAbs().maxCoeff() == 0.0);

  const Fragment padded = adjust_depth(sq.model, 3, at(1e-3));
  CHECK(padded.model.depth() == 3);
  CHECK((evaluate(padded.model, X) - evaluate(sq.model, X)).cwiseAbs().maxCoeff() < 1e-3);
  check_margins(padded);

  for (double sigma : {1e-3, 1e-1, 1.0}) {
    const Fragment base = build_identity_or_squaring(ScalarOp::Squaring, c, at(sigma));
    const Fragment p = adjust_depth(base.model, 4, at(sigma));
    const Eigen::MatrixXd y = evaluate(p.model, c.points);
    for (Index i = 0; i < 3; ++i) CHECK(std::abs(y(i, 0) - c.points(i, 0) * c.points(i, 0)) < 1e-13);
  }
  CHECK_THROWS_AS(adjust_depth(padded.model, 2, at(1e-3)), InvalidArgument);
}

TEST_CASE("polynomial spec parsing") {
  const PolynomialSpec s = parse_polynomial_spec("# p(x, y) = xy + x^2\n1 : 1 1\n\n1.0 : 2 0  # square\n");
  CHECK(s.dim == 2);
  REQUIRE(s.terms.size() == 2);
  CHECK(s.terms[1].exponents == std::vector<int>{2, 0});
  const std::vector<double> pt{0.5, 0.4};
  CHECK(s.evaluate(pt) == doctest::Approx(0.45));
  CHECK_THROWS_AS(parse_polynomial_spec("1 : 1 1\n2 : 1\n"), DataError);
  CHECK_THROWS_AS(parse_polynomial_spec("x : 1\n"), DataError);
  CHECK_THROWS_AS(parse_polynomial_spec("1 : -1\n"), DataError);
  CHECK_THROWS_AS(parse_polynomial_spec("1 2\n"), DataError);
  PolynomialSpec neg = parse_polynomial_spec("1 : 1\n");
  neg.lo = {-1.0};
  neg.hi = {1.0};
  CHECK_THROWS_AS(neg.validate(), InvalidArgument);
}

TEST_CASE("compile_polynomial") {
  const PolynomialSpec sq = parse_polynomial_spec("1 : 2\n");
  auto f_sq = [](std::span<const double> x) { return x[0] * x[0]; };
  double prev = INFINITY;
  for (double sigma : {4e-3, 2e-3, 1e-3}) {
    const Fragment f = compile_polynomial(sq, std::nullopt, at(sigma));
    const double e = grid_sup_error(f.model, f_sq, {0.0}, {1.0}, 1001);
    CHECK(e < prev);
    prev = e;
    CHECK(f.model.num_centers() == 3);
    CHECK(f.model.width() <= 1 + 8);
    CHECK(f.model.output_dim() == 1);
    check_margins(f);
  }
  CHECK(prev < 1e-3);

  const PolynomialSpec xy = parse_polynomial_spec("1 : 1 1\n1 : 2 0\n");
  auto f_xy = [](std::span<const double> x) { return x[0] * x[1] + x[0] * x[0]; };
  const Fragment a = compile_polynomial(xy, std::nullopt, at(1e-3));
  const Fragment b = compile_polynomial(xy, std::nullopt, at(1e-1));
  const double ea = grid_sup_error(a.model, f_xy, {0.0, 0.0}, {1.0, 1.0}, 41);
  CHECK(ea < 1e-2);
  CHECK(ea < grid_sup_error(b.model, f_xy, {0.0, 0.0}, {1.0, 1.0}, 41));
  CHECK(a.model.width() <= 2 + 8);
  CHECK(min_center_margin(a.model) >= 1e-8);
  const Eigen::MatrixXd X = grid2(41);
  CHECK(sup_error(a.model, X, [&](const auto& x) { return x(0) * x(1) + x(0) * x(0); }) == doctest::Approx(ea));

  const PolynomialSpec cubic = parse_polynomial_spec("0.5 : 0 0 1\n-2 : 1 1 0\n3 : 0 0 0\n0 : 4 4 4\n");
  auto f_cubic = [](std::span<const double> x) { return 0.5 * x[2] - 2 * x[0] * x[1] + 3; };
  const Fragment c = compile_polynomial(cubic, std::nullopt, at(1e-3));
  CHECK(grid_sup_error(c.model, f_cubic, {0, 0, 0}, {1, 1, 1}, 9) < 1e-2);
  CHECK(c.model.width() <= 3 + 8);
}

TEST_CASE("zero polynomial compiles to the zero model") {
  for (const char* text : {"", "0 : 3\n", "# nothing\n"}) {
    PolynomialSpec s = parse_polynomial_spec(text);
    const Fragment f = compile_polynomial(s, std::nullopt, at(1e-3));
    CHECK(evaluate(f.model, grid1(50)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("refinement halves sigma while the error improves") {
  const PolynomialSpec sq = parse_polynomial_spec("1 : 2\n");
  auto f_sq = [](std::span<const double> x) { return x[0] * x[0]; };
  const RefinedPolynomial r = compile_polynomial_refined(sq, std::nullopt, at(1e-1), 201, 3);
  REQUIRE(r.steps.size() >= 2);
  CHECK(r.steps.size() <= 4);
  CHECK(r.steps[1].sigma == doctest::Approx(r.steps[0].sigma / 2));
  double best = INFINITY;
  for (const auto& s : r.steps) best = std::min(best, s.error);
  CHECK(grid_sup_error(r.best.model, f_sq, {0.0}, {1.0}, 201) == doctest::Approx(best));
}

TEST_CASE("build_module dispatch") {
  ModuleBlueprint bp;
  bp.kind = ModuleBlueprint::Kind::UnivariateMonomial;
  bp.n = 5;
  bp.sigma = 2e-3;
  const Fragment a = build_module(bp, CenterTriple::defaults(1), ConstructionSettings{});
  const Fragment b = build_univariate_monomial(5, CenterTriple::defaults(1), at(2e-3));
  CHECK((evaluate(a.model, grid1(33)) - evaluate(b.model, grid1(33))).cwiseAbs().maxCoeff() == 0.0);

  bp.kind = ModuleBlueprint::Kind::DepthPad;
  bp.extra_depth = 2;
  const Fragment pad = build_module(bp, CenterTriple::defaults(1), ConstructionSettings{});
  CHECK(pad.model.depth() == 3);
  CHECK(sup_error(pad.model, grid1(101), [](const auto& x) { return x(0); }) < 1e-4);
}

TEST_CASE("sigma-monotone convergence for every module") {
  const Eigen::MatrixXd X1 = grid1(101), X2 = grid2(21);
  auto pair = [&](auto&& build, const Eigen::MatrixXd& X, auto&& f, Index col = 0) {
    const double fine = sup_error(build(1e-3).model, X, f, col);
    const double coarse = sup_error(build(1e-1).model, X, f, col);
    CHECK(fine <= coarse);
  };
  pair([](double s) { return build_identity_or_squaring(ScalarOp::Identity, CenterTriple::defaults(1), at(s)); }, X1,
       [](const auto& x) { return x(0); });
  pair([](double s) { return build_univariate_monomial(6, CenterTriple::defaults(1), at(s)); }, X1,
       [](const auto& x) { return std::pow(x(0), 6); });
  pair([](double s) { return build_bivariate_monomial(2, 3, std::nullopt, CenterTriple::defaults(2), at(s)); }, X2,
       [](const auto& x) { return x(0) * x(0) * x(1) * x(1) * x(1); });
  pair(
      [](double s) {
        const Fragment id = build_identity_or_squaring(ScalarOp::Squaring, CenterTriple::defaults(1), at(s));
        return adjust_depth(id.model, 3, at(s));
      },
      X1, [](const auto& x) { return x(0) * x(0); });
}

TEST_CASE("symmetric decomposition") {
  const auto grid = oracle::linspace(0.0, 1.0, 1000);
  const SymmetricSamples zero = decompose_symmetric([](double) { return 0.0; }, 0, 1, 0.3, 0.5, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(zero.h1[i] == 0.0);
    CHECK(zero.h2[i] == 0.0);
  }

  auto h = [](double x) { return std::sin(3 * x); };
  const SymmetricSamples s = decompose_symmetric(h, 0, 1, 0.3, 0.5, grid);
  double rec = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) rec = std::max(rec, std::abs(s.h1[i] + s.h2[i] - h(grid[i])));
  CHECK(rec < 1e-12);

  const SymmetricDecomposition dec(h, 0, 1, 0.3, 0.5);
  double sym1 = 0, sym2 = 0;
  for (double x : grid) {
    if (0.3 + x <= 1 && 0.3 - x >= 0) sym1 = std::max(sym1, std::abs(dec.h1(0.3 + x) - dec.h1(0.3 - x)));
    if (0.5 + x <= 1 && 0.5 - x >= 0) sym2 = std::max(sym2, std::abs(dec.h2(0.5 + x) - dec.h2(0.5 - x)));
  }
  CHECK(sym1 < 1e-12);
  CHECK(sym2 < 1e-12);
  // Reflected pairs on the sample grid itself: 0.3 +- k * step.
  const double step = 1.0 / 999;
  for (int k = 1; 0.3 + k * step <= 1 && 0.3 - k * step >= 0; ++k)
    CHECK(std::abs(dec.h1(0.3 + k * step) - dec.h1(0.3 - k * step)) < 1e-12);

  CHECK_THROWS_AS(decompose_symmetric(h, 0, 1, 0.4, 0.4, grid), InvalidArgument);
  CHECK_THROWS_AS(decompose_symmetric(h, 0, 1, 0.6, 0.5, grid), InvalidArgument);
}

TEST_CASE("even profile fits") {
  const Kernel1D g = Kernel1D::gaussian();
  const std::vector<double> widths{0.5, 1.0, 2.0, 3.0};
  const EvenProfileFit member = fit_even_profile([](double x) { return std::exp(-4.0 * x * x); }, 1.0, widths, g);
  CHECK(member.sup_error < 1e-10);
  CHECK(member.coefficients[2] == doctest::Approx(1.0).epsilon(1e-8));

  const EvenProfileFit zero = fit_even_profile([](double) { return 0.0; }, 1.0, widths, g);
  for (double c : zero.coefficients) CHECK(c == 0.0);

  double prev = INFINITY;
  for (int n : {4, 8, 16}) {
    std::vector<double> w;
    for (int k = 1; k <= n; ++k) w.push_back(2.0 * k / n);
    const EvenProfileFit fit = fit_even_profile([](double x) { return std::cos(x); }, 1.0, w, g);
    CAPTURE(n);
    CHECK(fit.sup_error < prev);
    prev = fit.sup_error;
  }
  CHECK_THROWS_AS(fit_even_profile([](double x) { return x * x; }, 1.0, std::vector<double>{1.0, 1.0}, g),
                  InvalidArgument);
}

TEST_CASE("width regime shape") {
  const ModelShape s = width_regime_shape(3);
  CHECK(s.input_dim == 3);
  CHECK(s.output_dim == 1);
  CHECK(s.widths == std::vector<Index>{21, 7});
}
