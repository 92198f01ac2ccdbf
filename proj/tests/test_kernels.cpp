#include <doctest.h>

#include <limits>

#include "oracles.hpp"
#include "sdkn/kernels.hpp"

using namespace sdkn;

namespace {
const KernelFamily radial_families[] = {KernelFamily::Gaussian, KernelFamily::Matern0, KernelFamily::MaternQuadratic,
                                        KernelFamily::Wendland0};
}

TEST_CASE("eval_kernel matches the closed forms") {
  CHECK(eval_kernel(Kernel1D::gaussian(), 0.3, 0.3) == 1.0);
  CHECK(eval_kernel(Kernel1D::wendland0(), 0.0, 0.7) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(eval_kernel(Kernel1D::matern0(), 2.0, 1.0) == doctest::Approx(0.3678794).epsilon(1e-7));
  CHECK(eval_kernel(Kernel1D::matern_quadratic(), 0.0, 0.0) == 3.0);
  CHECK(eval_kernel(Kernel1D::linear(), 2.0, -3.0) == -6.0);
}

TEST_CASE("kernels are symmetric and scale with epsilon") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (KernelFamily f : radial_families) {
    for (int trial = 0; trial < 50; ++trial) {
      const double x = u(rng), y = u(rng), eps = 0.1 + std::abs(u(rng));
      const Kernel1D k{f, eps};
      CHECK(eval_kernel(k, x, y) == eval_kernel(k, y, x));
      CHECK(eval_kernel(k, x, y) == doctest::Approx(eval_kernel(Kernel1D{f, 1.0}, eps * x, eps * y)).epsilon(1e-13));
      CHECK(eval_kernel(k, x, y) == doctest::Approx(oracle::kernel(k, x, y)).epsilon(1e-14));
    }
  }
}

TEST_CASE("invalid kernels are rejected") {
  CHECK_THROWS_AS(Kernel1D::gaussian(0.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(Kernel1D::gaussian(-1.0).validate(), InvalidArgument);
  CHECK_NOTHROW(Kernel1D{KernelFamily::Linear, -5.0}.validate());
  CHECK(parse_family("Gaussian") == KernelFamily::Gaussian);
  CHECK(parse_family("matern2") == KernelFamily::MaternQuadratic);
  CHECK_THROWS_AS(parse_family("cauchy"), InvalidArgument);
}

TEST_CASE("gram_matrix") {
  const std::vector<double> zero{0.0};
  const Eigen::MatrixXd g = gram_matrix(Kernel1D::gaussian(), zero, zero);
  CHECK(g.rows() == 1);
  CHECK(g(0, 0) == 1.0);
  CHECK_THROWS_AS(gram_matrix(Kernel1D::gaussian(), std::vector<double>{}, zero), InvalidArgument);

  std::mt19937_64 rng(11);
  const Eigen::MatrixXd pts = oracle::random_matrix(rng, 5, 1);
  std::vector<double> xs(pts.data(), pts.data() + 5);
  const Eigen::MatrixXd k = gram_matrix(Kernel1D::gaussian(), xs, xs);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j) CHECK(k(i, j) == doctest::Approx(oracle::kernel(Kernel1D::gaussian(), xs[i], xs[j])));
  CHECK(oracle::sorted_eigenvalues(k).front() > 0.0);
}

TEST_CASE("Gram matrices are PSD and strictly PD on distinct points") {
  std::mt19937_64 rng(3);
  for (KernelFamily f : radial_families) {
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd pts = oracle::random_matrix(rng, 8, 1, 0.0, 3.0);
      std::vector<double> xs(pts.data(), pts.data() + 8);
      const auto ev = oracle::sorted_eigenvalues(gram_matrix(Kernel1D{f, 1.5}, xs, xs));
      CHECK(ev.front() >= -1e-10 * ev.back());
      if (f != KernelFamily::Wendland0) CHECK(ev.front() > 0.0);
    }
  }
}

TEST_CASE("single_dim_gram reproduces the two-point example") {
  Eigen::MatrixXd X(2, 2);
  X << 1, -0.2, 1, -0.9;
  const std::vector<Kernel1D> ks(2, Kernel1D::wendland0());
  const Eigen::MatrixXd g = single_dim_gram(ks, X, X);
  Eigen::MatrixXd expected(4, 4);
  expected << 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 0.3, 0, 0, 0.3, 1;
  CHECK((g - expected).cwiseAbs().maxCoeff() < 1e-15);
  const auto ev = oracle::sorted_eigenvalues(g);
  const double want[] = {0.0, 0.7, 1.3, 2.0};
  for (int i = 0; i < 4; ++i) CHECK(std::abs(ev[i] - want[i]) < 1e-12);
}

TEST_CASE("single_dim_gram structure") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd X1 = oracle::random_matrix(rng, 4, 1);
  std::vector<double> xs(X1.data(), X1.data() + 4);
  const std::vector<Kernel1D> one{Kernel1D::matern0(2.0)};
  CHECK((single_dim_gram(one, X1, X1) - gram_matrix(one[0], xs, xs)).norm() == 0.0);

  const Eigen::MatrixXd X = oracle::random_matrix(rng, 3, 2);
  const std::vector<Kernel1D> ks{Kernel1D::gaussian(), Kernel1D::gaussian(2.0)};
  auto ev = oracle::sorted_eigenvalues(single_dim_gram(ks, X, X));
  std::vector<double> blocks;
  for (Index j = 0; j < 2; ++j) {
    std::vector<double> c(X.col(j).data(), X.col(j).data() + 3);
    for (double v : oracle::sorted_eigenvalues(gram_matrix(ks[j], c, c))) blocks.push_back(v);
  }
  std::sort(blocks.begin(), blocks.end());
  for (std::size_t i = 0; i < ev.size(); ++i) CHECK(ev[i] == doctest::Approx(blocks[i]).epsilon(1e-12));

  CHECK_THROWS_AS(single_dim_gram(ks, X, X1), InvalidArgument);
  CHECK_THROWS_AS(single_dim_gram(one, X, X), InvalidArgument);
}

TEST_CASE("taylor_admissibility") {
  const auto g = taylor_admissibility(Kernel1D::gaussian());
  CHECK(g.a0 == 1.0);
  CHECK(g.a1 == -1.0);
  CHECK(g.a2 == 0.5);
  CHECK(g.admissible_n2);
  CHECK(g.admissible_n3);
  CHECK(6 * g.a0 * g.a2 - g.a1 * g.a1 == 2.0);

  for (auto k : {Kernel1D::matern0(), Kernel1D::wendland0()}) {
    const auto t = taylor_admissibility(k);
    CHECK(t.odd_terms);
    CHECK_FALSE(t.admissible_n2);
    CHECK_FALSE(t.admissible_n3);
  }

  // (3 + 3r + r^2) e^{-r} = 3 - r^2/2 + r^4/8 - r^5/15 + ...
  const auto m = taylor_admissibility(Kernel1D::matern_quadratic());
  CHECK(m.estimated);
  CHECK(m.a0 == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(m.a1 == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(m.a2 == doctest::Approx(0.125).epsilon(1e-3));
  CHECK_FALSE(m.odd_terms);
  CHECK(m.admissible_n3);

  CHECK_THROWS_AS(taylor_admissibility(Kernel1D::linear()), InvalidArgument);
}

TEST_CASE("flat-limit interpolant on two nodes tends to the line") {
  const std::vector<double> nodes{0.0, 1.0}, values{0.0, 1.0};
  const auto s = flat_limit_interpolant(Kernel1D::gaussian(), nodes, values, 1e-3);
  CHECK(std::abs(s(0.5) - 0.5) < 1e-4);
}

TEST_CASE("flat-limit interpolant converges monotonically to x^2") {
  const std::vector<double> nodes{0.0, 0.5, 1.0}, values{0.0, 0.25, 1.0};
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1.0, 1e-1, 1e-2, 1e-3}) {
    const auto s = flat_limit_interpolant(Kernel1D::gaussian(), nodes, values, eps);
    double err = 0.0;
    for (double x : oracle::linspace(0.0, 1.0, 1000)) err = std::max(err, std::abs(s(x) - x * x));
    CHECK(err < prev);
    prev = err;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      CHECK(std::abs(s(nodes[i]) - values[i]) <= 1e-9 * std::max(1.0, std::abs(values[i])));
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("flat-limit interpolant errors") {
  const std::vector<double> dup{0.0, 0.0}, v2{1.0, 2.0};
  CHECK_THROWS_AS(flat_limit_interpolant(Kernel1D::gaussian(), dup, v2, 0.1), SingularSystemError);
  const std::vector<double> nodes{0.0, 1.0};
  CHECK_THROWS_AS(flat_limit_interpolant(Kernel1D::wendland0(), nodes, v2, 0.1), InvalidArgument);
  const std::vector<double> four{0, 1, 2, 3}, v4{0, 1, 2, 3};
  CHECK_THROWS_AS(flat_limit_interpolant(Kernel1D::gaussian(), four, v4, 0.1), InvalidArgument);
  CHECK_THROWS_AS(flat_limit_interpolant(Kernel1D::gaussian(), nodes, v2, 0.0), InvalidArgument);
}

TEST_CASE("interpolating polynomial") {
  const std::vector<double> nodes{0.0, 0.5, 1.0}, values{0.0, 0.25, 1.0};
  for (double x : {0.1, 0.3, 0.77, 2.0}) CHECK(interpolating_polynomial(nodes, values, x) == doctest::Approx(x * x));
}

TEST_CASE("conditioning diagnostic") {
  const std::vector<double> dup{0.2, 0.2};
  CHECK(std::isinf(conditioning_diagnostic(Kernel1D::gaussian(), dup)));
  const std::vector<double> two{0.0, 1.0};
  CHECK(conditioning_diagnostic(Kernel1D::wendland0(), two) == doctest::Approx(1.0).epsilon(1e-14));
  const auto nodes = oracle::linspace(0.0, 1.0, 20);
  const double c = conditioning_diagnostic(Kernel1D::gaussian(), nodes);
  CHECK(c > 1e6);
  CHECK(std::isfinite(c));
  const std::vector<double> one{0.5};
  CHECK_THROWS_AS(conditioning_diagnostic(Kernel1D::gaussian(), one), InvalidArgument);
}

TEST_CASE("solve_symmetric") {
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 3;
  Eigen::VectorXd b(2);
  b << 1, 2;
  CHECK((a * solve_symmetric<double>(a, b) - b).norm() < 1e-14);
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(solve_symmetric<double>(zero, b), SingularSystemError);
}
