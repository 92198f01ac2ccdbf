#include <algorithm>
#include <bit>

#include "constructions/builder.hpp"
#include "sdkn/model_io.hpp"

namespace sdkn {

using detail::Builder;
using detail::ChannelKind;
using detail::PowerGroup;

CenterCollision::CenterCollision(const std::string& where, double margin)
    : NumericError("propagated centers collide (" + where + ", relative margin " + format_number(margin) + ")"),
      margin_(margin) {}

void ConstructionSettings::validate() const {
  kernel.validate();
  if (!kernel.radial()) throw InvalidArgument("constructions: the kernel must be radial");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("constructions: sigma must be positive");
  if (!(margin >= 0.0)) throw InvalidArgument("constructions: margin must be nonnegative");
  if (max_beta_candidates < 1) throw InvalidArgument("constructions: need at least one beta candidate");
}

void CenterTriple::validate(double margin) const {
  if (points.rows() != 3 || points.cols() < 1) throw InvalidArgument("center triple: need a 3 x d matrix");
  if (!points.allFinite()) throw InvalidArgument("center triple: non-finite coordinate");
  if ((points.array() < 0.0).any()) throw InvalidArgument("center triple: coordinates must be nonnegative");
  for (Index j = 0; j < points.cols(); ++j)
    if (!(relative_margin(Eigen::VectorXd(points.col(j))) >= margin))
      throw InvalidArgument("center triple: coordinate " + std::to_string(j) + " is not pairwise distinct");
}

CenterTriple CenterTriple::defaults(const std::vector<double>& lo, const std::vector<double>& hi) {
  if (lo.size() != hi.size() || lo.empty()) throw InvalidArgument("center triple: bad domain box");
  static constexpr double fractions[3] = {0.1, 0.5, 0.9};
  CenterTriple c;
  c.points.resize(3, static_cast<Index>(lo.size()));
  for (std::size_t j = 0; j < lo.size(); ++j)
    for (std::size_t i = 0; i < 3; ++i)
      c.points(static_cast<Index>(i), static_cast<Index>(j)) = lo[j] + fractions[(i + j) % 3] * (hi[j] - lo[j]);
  return c;
}

CenterTriple CenterTriple::defaults(Index d) {
  return defaults(std::vector<double>(static_cast<std::size_t>(d), 0.0),
                  std::vector<double>(static_cast<std::size_t>(d), 1.0));
}

template <class V>
static double margin_impl(const V& v) {
  using std::abs;
  double scale = 0.0;
  for (Index i = 0; i < v.size(); ++i) scale = std::max(scale, to_double(abs(v(i))));
  if (scale == 0.0) return 0.0;
  double gap = std::numeric_limits<double>::infinity();
  for (Index a = 0; a < v.size(); ++a)
    for (Index b = a + 1; b < v.size(); ++b) gap = std::min(gap, to_double(abs(v(a) - v(b))));
  return gap / scale;
}

double relative_margin(const Eigen::VectorXd& values) { return margin_impl(values); }
double relative_margin(const QVec& values) { return margin_impl(values); }

double min_center_margin(const QuadModel& model) {
  const auto trace = forward(model, model.centers());
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < trace.centers.size(); ++k)
    for (Index j = 0; j < trace.centers[k].cols(); ++j) m = std::min(m, relative_margin(QVec(trace.centers[k].col(j))));
  return m;
}

Eigen::MatrixXd evaluate(const QuadModel& model, const Eigen::MatrixXd& X) {
  return cast_matrix<double>(predict(model, detail::to_quad(X)));
}

namespace {

Builder start(const CenterTriple& centers, Index d, const ConstructionSettings& s, const char* what) {
  detail::require_admissible(s);
  if (centers.dim() != d)
    throw InvalidArgument(std::string(what) + ": expected centers with " + std::to_string(d) + " coordinates");
  centers.validate(s.margin);
  return Builder(detail::to_quad(centers.points), s);
}

Index ceil_log2(unsigned v) { return v <= 1 ? 0 : std::bit_width(v - 1); }

}  // namespace

Fragment build_identity_or_squaring(ScalarOp op, const CenterTriple& centers, const ConstructionSettings& s) {
  Builder b = start(centers, 1, s, "identity/squaring");
  b.stage({{b.unit(0), op == ScalarOp::Identity ? ChannelKind::Identity : ChannelKind::Square, Quad(0)}});
  QuadModel model = b.finish({b.unit(0)});
  auto report = detail::make_report(b, model);
  return {std::move(model), report};
}

Fragment build_product_module(const CenterTriple& centers, std::optional<double> beta, const ConstructionSettings& s,
                              const Eigen::MatrixXd& data) {
  Builder b = start(centers, 2, s, "product module");
  if (beta && (*beta == 0.0 || !std::isfinite(*beta)))
    throw InvalidArgument("product module: beta must be finite and nonzero");
  if (data.size() > 0 && data.cols() != 2) throw InvalidArgument("product module: data must have two columns");

  Eigen::MatrixXd pts(3 + data.rows(), 2);
  pts.topRows(3) = centers.points;
  if (data.rows() > 0) pts.bottomRows(data.rows()) = data;
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(pts).singularValues();
  if (sv(1) <= 1e-10 * sv(0)) {
    // y = c x (or x = c y) on every point: xy = c x^2.
    const Eigen::VectorXd x = pts.col(0), y = pts.col(1);
    const bool use_x = x.squaredNorm() >= y.squaredNorm();
    const Index src = use_x ? 0 : 1;
    const double c = x.dot(y) / (use_x ? x.squaredNorm() : y.squaredNorm());
    b.stage({{b.unit(src), ChannelKind::Square, Quad(0)}});
    QuadModel model = b.finish({Quad(c) * b.unit(0)});
    auto report = detail::make_report(b, model);
    report.collinear_fallback = true;
    return {std::move(model), report};
  }

  QVec a = b.unit(0);
  const double gamma = detail::multiply_stage(b, a, b.unit(1), {}, beta);
  QuadModel model = b.finish({a});
  auto report = detail::make_report(b, model);
  report.product_betas.push_back(gamma);
  return {std::move(model), report};
}

Fragment build_univariate_monomial(int n, const CenterTriple& centers, const ConstructionSettings& s) {
  if (n < 1) throw InvalidArgument("univariate monomial: exponent must be at least 1");
  Builder b = start(centers, 1, s, "univariate monomial");
  std::vector<PowerGroup> groups{{b.unit(0), {{std::nullopt, static_cast<unsigned>(n)}}}};
  const Index depth = std::max<Index>(detail::group_depth(groups[0]), 1);
  auto gammas = detail::run_power_groups(b, groups, {}, depth);
  QuadModel model = b.finish({*groups[0].accumulators[0].value});
  auto report = detail::make_report(b, model);
  report.product_betas = std::move(gammas);
  return {std::move(model), report};
}

Fragment build_bivariate_monomial(int a, int b_exp, std::optional<double> extension, const CenterTriple& centers,
                                  const ConstructionSettings& s) {
  if (a < 1 || b_exp < 1) throw InvalidArgument("bivariate monomial: exponents must be at least 1");
  if (extension && !std::isfinite(*extension)) throw InvalidArgument("bivariate monomial: beta must be finite");
  const Index d = extension ? 3 : 2;
  Builder b = start(centers, d, s, "bivariate monomial");
  std::optional<QVec> z;
  if (extension) z = b.unit(2);
  std::vector<QVec*> carried;
  if (z) carried.push_back(&*z);

  std::vector<double> gammas;
  QVec left = b.unit(0);
  QVec right = b.unit(1);
  const unsigned top = static_cast<unsigned>(std::max(a, b_exp));
  if (top > 1) {
    std::vector<PowerGroup> groups{{b.unit(0), {{std::nullopt, static_cast<unsigned>(a)}}},
                                   {b.unit(1), {{std::nullopt, static_cast<unsigned>(b_exp)}}}};
    gammas = detail::run_power_groups(b, groups, carried, ceil_log2(top));
    left = *groups[0].accumulators[0].value;
    right = *groups[1].accumulators[0].value;
  }
  gammas.push_back(detail::multiply_stage(b, left, right, carried));
  QVec out = left;
  if (z) out += Quad(*extension) * *z;
  QuadModel model = b.finish({out});
  auto report = detail::make_report(b, model);
  report.product_betas = std::move(gammas);
  return {std::move(model), report};
}

namespace detail {

double append_addition(Builder& b, std::vector<QVec>& xs, std::optional<QVec>& sum, const std::vector<int>& n,
                       double alpha, std::optional<double> beta, ModuleReport& report) {
  const Index d = static_cast<Index>(xs.size());
  if (static_cast<Index>(n.size()) != d)
    throw InvalidArgument("addition module: multi-index has " + std::to_string(n.size()) + " entries, expected " +
                          std::to_string(d));
  std::vector<Index> active;
  for (Index j = 0; j < d; ++j) {
    if (n[static_cast<std::size_t>(j)] < 0) throw InvalidArgument("addition module: negative exponent");
    if (n[static_cast<std::size_t>(j)] > 0) active.push_back(j);
  }
  const auto& s = b.settings();

  auto carried_state = [&]() {
    std::vector<QVec*> c;
    for (auto& x : xs) c.push_back(&x);
    if (sum) c.push_back(&*sum);
    return c;
  };

  QVec prod;
  if (active.empty()) {
    // Degenerate multi-index: the product is the constant 1, realized by a
    // constant channel fed from x_d.
    report.degenerate = true;
    std::vector<StageOutput> outs;
    for (QVec* c : carried_state()) outs.push_back({*c, ChannelKind::Identity, Quad(0)});
    outs.push_back({xs.back(), ChannelKind::Constant, Quad(1)});
    b.stage(outs);
    Index i = 0;
    for (QVec* c : carried_state()) *c = b.unit(i++);
    prod = b.unit(i);
  } else {
    auto attempt = [&](const Quad& carry) {
      const Index k1 = active.front();
      std::vector<PowerGroup> first{{xs[static_cast<std::size_t>(k1)],
                                     {{std::nullopt, static_cast<unsigned>(n[static_cast<std::size_t>(k1)])}}}};
      auto g = run_power_groups(b, first, carried_state(), std::max<Index>(group_depth(first[0]), 1));
      report.product_betas.insert(report.product_betas.end(), g.begin(), g.end());
      QVec acc = *first[0].accumulators[0].value;
      for (std::size_t step = 1; step < active.size(); ++step) {
        const auto k = static_cast<std::size_t>(active[step]);
        const unsigned nk = static_cast<unsigned>(n[k]);
        const QVec r = acc + carry * xs[k];
        std::vector<PowerGroup> mid{{xs[k], {{r, nk}, {std::nullopt, nk + 1}}}};
        g = run_power_groups(b, mid, carried_state(), group_depth(mid[0]));
        report.product_betas.insert(report.product_betas.end(), g.begin(), g.end());
        acc = *mid[0].accumulators[0].value - carry * *mid[0].accumulators[1].value;
      }
      return acc;
    };

    if (active.size() == 1) {
      prod = attempt(Quad(0));
    } else {
      const Builder saved_b = b;
      const auto saved_xs = xs;
      const auto saved_sum = sum;
      const auto saved_betas = report.product_betas;
      std::optional<CenterCollision> last;
      for (int k = 1; k <= s.max_beta_candidates && prod.size() == 0; ++k) {
        const double carry = 1.0 / k;
        try {
          prod = attempt(Quad(carry));
          report.carry_beta = carry;
        } catch (const CenterCollision& e) {
          last = e;
          b = saved_b;
          xs = saved_xs;
          sum = saved_sum;
          report.product_betas = saved_betas;
        }
      }
      if (prod.size() == 0) throw CenterCollision("addition module: no admissible carry beta", last ? last->margin() : 0.0);
    }
  }

  const QVec base = (sum ? *sum : b.zero()) + Quad(alpha) * prod;
  const QVec& xd = xs.back();
  const double out_beta = beta ? *beta : select_beta(s, "addition module output", [&](double v) {
    return relative_margin(b.centers_of(base + Quad(v) * xd)) >= s.margin;
  });
  sum = base + Quad(out_beta) * xd;
  report.output_beta = out_beta;
  return out_beta;
}

}  // namespace detail

Fragment build_addition_module(const std::vector<int>& multiindex, double alpha, std::optional<double> beta,
                               const CenterTriple& centers, const ConstructionSettings& s) {
  if (multiindex.empty()) throw InvalidArgument("addition module: empty multi-index");
  if (!std::isfinite(alpha) || (beta && !std::isfinite(*beta)))
    throw InvalidArgument("addition module: alpha and beta must be finite");
  const Index d = static_cast<Index>(multiindex.size());
  Builder b = start(centers, d + 1, s, "addition module");
  std::vector<QVec> xs;
  for (Index j = 0; j < d; ++j) xs.push_back(b.unit(j));
  std::optional<QVec> sum = b.unit(d);
  ModuleReport report;
  detail::append_addition(b, xs, sum, multiindex, alpha, beta, report);
  std::vector<QVec> outputs = xs;
  outputs.push_back(*sum);
  QuadModel model = b.finish(outputs);
  auto base = detail::make_report(b, model);
  report.depth = base.depth;
  report.width = base.width;
  report.sigma = base.sigma;
  report.min_margin = base.min_margin;
  return {std::move(model), report};
}

Fragment adjust_depth(const QuadModel& fragment, Index target_depth, const ConstructionSettings& s) {
  detail::require_admissible(s);
  if (target_depth < fragment.depth())
    throw InvalidArgument("adjust_depth: target depth " + std::to_string(target_depth) + " is below the current depth " +
                          std::to_string(fragment.depth()));
  Builder b(fragment, s);
  for (Index extra = fragment.depth(); extra < target_depth; ++extra) {
    std::vector<detail::StageOutput> outs;
    for (Index i = 0; i < b.dim(); ++i) outs.push_back({b.unit(i), ChannelKind::Identity, Quad(0)});
    b.stage(outs);
  }
  std::vector<QVec> outputs;
  for (Index i = 0; i < b.dim(); ++i) outputs.push_back(b.unit(i));
  QuadModel model = target_depth == fragment.depth() ? fragment : b.finish(outputs);
  auto report = detail::make_report(b, model);
  return {std::move(model), report};
}

Fragment build_module(const ModuleBlueprint& bp, const CenterTriple& centers, ConstructionSettings s) {
  s.sigma = bp.sigma;
  using Kind = ModuleBlueprint::Kind;
  switch (bp.kind) {
    case Kind::Identity:
      return build_identity_or_squaring(ScalarOp::Identity, centers, s);
    case Kind::Squaring:
      return build_identity_or_squaring(ScalarOp::Squaring, centers, s);
    case Kind::Product:
      return build_product_module(centers, bp.beta, s);
    case Kind::UnivariateMonomial:
      return build_univariate_monomial(bp.n, centers, s);
    case Kind::BivariateMonomial:
      return build_bivariate_monomial(bp.a, bp.b, bp.beta, centers, s);
    case Kind::Addition:
      return build_addition_module(bp.multiindex, bp.alpha, bp.beta, centers, s);
    case Kind::DepthPad: {
      if (bp.extra_depth < 0) throw InvalidArgument("depth pad: extra depth must be nonnegative");
      const Fragment id = build_identity_or_squaring(ScalarOp::Identity, centers, s);
      return adjust_depth(id.model, id.model.depth() + bp.extra_depth, s);
    }
  }
  throw InvalidArgument("build_module: unknown module kind");
}

}  // namespace sdkn
