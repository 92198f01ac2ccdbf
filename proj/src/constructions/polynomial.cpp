#include <cmath>
#include <istream>
#include <sstream>

#include "constructions/builder.hpp"

namespace sdkn {

void PolynomialSpec::validate() const {
  if (dim < 1) throw InvalidArgument("polynomial: dimension must be positive");
  for (const auto& t : terms) {
    if (static_cast<Index>(t.exponents.size()) != dim)
      throw InvalidArgument("polynomial: term with " + std::to_string(t.exponents.size()) + " exponents, expected " +
                            std::to_string(dim));
    for (int e : t.exponents)
      if (e < 0) throw InvalidArgument("polynomial: negative exponent");
    if (!std::isfinite(t.coefficient)) throw InvalidArgument("polynomial: non-finite coefficient");
  }
  if (!lo.empty() || !hi.empty()) {
    if (static_cast<Index>(lo.size()) != dim || static_cast<Index>(hi.size()) != dim)
      throw InvalidArgument("polynomial: domain box has the wrong dimension");
    for (Index j = 0; j < dim; ++j) {
      const auto i = static_cast<std::size_t>(j);
      if (!(lo[i] >= 0.0) || !(hi[i] > lo[i]) || !std::isfinite(hi[i]))
        throw InvalidArgument("polynomial: domain box must satisfy 0 <= lo < hi");
    }
  }
}

double PolynomialSpec::evaluate(std::span<const double> x) const {
  if (static_cast<Index>(x.size()) != dim) throw InvalidArgument("polynomial: point has the wrong dimension");
  double total = 0.0;
  for (const auto& t : terms) {
    double v = t.coefficient;
    for (std::size_t j = 0; j < x.size(); ++j) v *= std::pow(x[j], t.exponents[j]);
    total += v;
  }
  return total;
}

PolynomialSpec parse_polynomial_spec(std::istream& in) {
  PolynomialSpec spec;
  spec.dim = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "polynomial spec line " + std::to_string(line_no);
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw DataError(where + ": expected 'coeff : n1 ... nd'");
    PolynomialTerm term;
    std::istringstream coeff(line.substr(0, colon));
    std::string extra;
    if (!(coeff >> term.coefficient) || (coeff >> extra)) throw DataError(where + ": bad coefficient");
    std::istringstream exps(line.substr(colon + 1));
    std::string tok;
    while (exps >> tok) {
      std::size_t used = 0;
      int e = -1;
      try {
        e = std::stoi(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || e < 0) throw DataError(where + ": bad exponent '" + tok + "'");
      term.exponents.push_back(e);
    }
    if (term.exponents.empty()) throw DataError(where + ": no exponents");
    if (spec.dim == 0) spec.dim = static_cast<Index>(term.exponents.size());
    if (static_cast<Index>(term.exponents.size()) != spec.dim)
      throw DataError(where + ": expected " + std::to_string(spec.dim) + " exponents");
    spec.terms.push_back(std::move(term));
  }
  if (spec.dim == 0) spec.dim = 1;
  return spec;
}

PolynomialSpec parse_polynomial_spec(const std::string& text) {
  std::istringstream in(text);
  return parse_polynomial_spec(in);
}

namespace {

std::vector<double> box_lo(const PolynomialSpec& spec) {
  return spec.lo.empty() ? std::vector<double>(static_cast<std::size_t>(spec.dim), 0.0) : spec.lo;
}
std::vector<double> box_hi(const PolynomialSpec& spec) {
  return spec.hi.empty() ? std::vector<double>(static_cast<std::size_t>(spec.dim), 1.0) : spec.hi;
}

}  // namespace

Fragment compile_polynomial(const PolynomialSpec& spec, const std::optional<CenterTriple>& centers,
                            const ConstructionSettings& s) {
  spec.validate();
  detail::require_admissible(s);
  const CenterTriple z = centers ? *centers : CenterTriple::defaults(box_lo(spec), box_hi(spec));
  if (z.dim() != spec.dim) throw InvalidArgument("compile_polynomial: centers do not match the dimension");
  z.validate(s.margin);

  std::vector<const PolynomialTerm*> terms;
  for (const auto& t : spec.terms)
    if (t.coefficient != 0.0) terms.push_back(&t);
  if (terms.empty()) {
    QuadModel zero({{QMat::Zero(1, spec.dim)}}, {}, detail::to_quad(z.points));
    ModuleReport report;
    report.width = zero.width();
    report.sigma = s.sigma;
    report.min_margin = std::numeric_limits<double>::infinity();
    return {std::move(zero), report};
  }

  detail::Builder b(detail::to_quad(z.points), s);
  std::vector<QVec> xs;
  for (Index j = 0; j < spec.dim; ++j) xs.push_back(b.unit(j));
  std::optional<QVec> sum;
  ModuleReport report;
  Quad total_beta = 0;
  for (const auto* t : terms) total_beta += detail::append_addition(b, xs, sum, t->exponents, t->coefficient, std::nullopt, report);
  QuadModel model = b.finish({*sum - total_beta * xs.back()});
  auto base = detail::make_report(b, model);
  report.depth = base.depth;
  report.width = base.width;
  report.sigma = base.sigma;
  report.min_margin = base.min_margin;
  report.output_beta = to_double(total_beta);
  return {std::move(model), report};
}

double grid_sup_error(const QuadModel& model, const std::function<double(std::span<const double>)>& f,
                      const std::vector<double>& lo, const std::vector<double>& hi, Index per_dim) {
  const Index d = static_cast<Index>(lo.size());
  if (d != model.input_dim() || hi.size() != lo.size()) throw InvalidArgument("grid_sup_error: box dimension mismatch");
  if (per_dim < 2) throw InvalidArgument("grid_sup_error: need at least two points per coordinate");
  Index total = 1;
  for (Index j = 0; j < d; ++j) total *= per_dim;
  Eigen::MatrixXd X(total, d);
  for (Index p = 0; p < total; ++p) {
    Index rest = p;
    for (Index j = 0; j < d; ++j) {
      const Index i = rest % per_dim;
      rest /= per_dim;
      const auto jj = static_cast<std::size_t>(j);
      X(p, j) = lo[jj] + (hi[jj] - lo[jj]) * static_cast<double>(i) / static_cast<double>(per_dim - 1);
    }
  }
  const Eigen::MatrixXd out = evaluate(model, X);
  double err = 0.0;
  std::vector<double> x(static_cast<std::size_t>(d));
  for (Index p = 0; p < total; ++p) {
    for (Index j = 0; j < d; ++j) x[static_cast<std::size_t>(j)] = X(p, j);
    err = std::max(err, std::abs(out(p, 0) - f(x)));
  }
  return err;
}

RefinedPolynomial compile_polynomial_refined(const PolynomialSpec& spec, const std::optional<CenterTriple>& centers,
                                             const ConstructionSettings& s, Index grid_per_dim, int max_halvings) {
  const auto lo = box_lo(spec);
  const auto hi = box_hi(spec);
  auto f = [&](std::span<const double> x) { return spec.evaluate(x); };
  ConstructionSettings cur = s;
  RefinedPolynomial result{compile_polynomial(spec, centers, cur), {}};
  double best = grid_sup_error(result.best.model, f, lo, hi, grid_per_dim);
  result.steps.push_back({cur.sigma, best});
  for (int k = 0; k < max_halvings; ++k) {
    cur.sigma /= 2.0;
    Fragment next = compile_polynomial(spec, centers, cur);
    const double err = grid_sup_error(next.model, f, lo, hi, grid_per_dim);
    result.steps.push_back({cur.sigma, err});
    if (!(err < 0.9 * best)) break;
    best = err;
    result.best = std::move(next);
  }
  return result;
}

}  // namespace sdkn
