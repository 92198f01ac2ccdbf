#include "constructions/builder.hpp"

#include <bit>

namespace sdkn::detail {

namespace {

Quad apply(ChannelKind kind, const Quad& u, const Quad& constant) {
  switch (kind) {
    case ChannelKind::Identity:
      return u;
    case ChannelKind::Square:
      return u * u;
    case ChannelKind::Constant:
      return constant;
  }
  return u;
}

// Sparse combo over the channels of the stage being assembled.
using Terms = std::vector<std::pair<Index, Quad>>;

QVec materialize(const Terms& terms, Index dim) {
  QVec v = QVec::Zero(dim);
  for (const auto& [i, c] : terms) v(i) += c;
  return v;
}

class StagePlan {
 public:
  Index add(const QVec& combo, ChannelKind kind) {
    outputs_.push_back({combo, kind, Quad(0)});
    return static_cast<Index>(outputs_.size()) - 1;
  }
  const std::vector<StageOutput>& outputs() const { return outputs_; }

 private:
  std::vector<StageOutput> outputs_;
};

}  // namespace

QMat to_quad(const Eigen::MatrixXd& m) { return cast_matrix<Quad>(m); }

void require_admissible(const ConstructionSettings& s) {
  s.validate();
  if (!taylor_admissibility(s.kernel).admissible_n3)
    throw InvalidArgument("constructions: kernel " + std::string(family_name(s.kernel.family)) +
                          " is not admissible for three-node flat limits");
}

Builder::Builder(const QMat& centers, const ConstructionSettings& s)
    : settings_(s),
      input_centers_(centers),
      act_centers_(centers),
      pending_(QMat::Identity(centers.cols(), centers.cols())),
      max_width_(centers.cols()) {
  if (centers.rows() != 3) throw InvalidArgument("builder: exactly three centers are required");
}

Builder::Builder(const QuadModel& model, const ConstructionSettings& s)
    : settings_(s), input_centers_(model.centers()), max_width_(model.width()) {
  if (model.num_centers() != 3) throw InvalidArgument("builder: exactly three centers are required");
  const auto trace = forward(model, model.centers());
  linears_.assign(model.linears().begin(), model.linears().end() - 1);
  activations_ = model.activations();
  act_centers_ = trace.centers[static_cast<std::size_t>(model.layer_count() - 1)];
  pending_ = model.linears().back().weights;
}

QVec Builder::unit(Index i) const {
  QVec v = QVec::Zero(dim());
  v(i) = 1;
  return v;
}

QVec Builder::centers_of(const QVec& combo) const {
  return act_centers_ * (pending_.transpose() * combo);
}

double Builder::channel_margin(const QVec& combo, ChannelKind kind) const {
  const QVec u = centers_of(combo);
  if (kind == ChannelKind::Constant) return std::numeric_limits<double>::infinity();
  QVec out = u;
  for (Index i = 0; i < u.size(); ++i) out(i) = apply(kind, u(i), Quad(0));
  return std::min(relative_margin(u), relative_margin(out));
}

void Builder::stage(const std::vector<StageOutput>& outputs) {
  const Index k = static_cast<Index>(outputs.size());
  if (k == 0) throw InvalidArgument("builder: empty stage");
  QMat next(k, pending_.cols());
  for (Index r = 0; r < k; ++r) {
    if (outputs[static_cast<std::size_t>(r)].combo.size() != dim())
      throw InvalidArgument("builder: combo has the wrong length");
    next.row(r) = outputs[static_cast<std::size_t>(r)].combo.transpose() * pending_;
  }
  const QMat u = act_centers_ * next.transpose();  // 3 x k

  for (Index r = 0; r < k; ++r) {
    const auto& out = outputs[static_cast<std::size_t>(r)];
    if (out.kind == ChannelKind::Constant) continue;
    const double m = channel_margin(out.combo, out.kind);
    if (!(m >= settings_.margin))
      throw CenterCollision("stage " + std::to_string(depth() + 1) + ", channel " + std::to_string(r), m);
    min_margin_ = std::min(min_margin_, m);
  }

  const Quad sigma(settings_.sigma);
  const QMat scaled = sigma * u;
  BasicActivationLayer<Quad> act;
  act.coefficients.resize(3, k);
  act.kernels.assign(static_cast<std::size_t>(k), settings_.kernel);
  for (Index r = 0; r < k; ++r) {
    const auto& out = outputs[static_cast<std::size_t>(r)];
    QMat gram(3, 3);
    QVec rhs(3);
    for (Index i = 0; i < 3; ++i) {
      rhs(i) = apply(out.kind, u(i, r), out.constant);
      for (Index l = 0; l < 3; ++l) gram(i, l) = eval(settings_.kernel, scaled(i, r), scaled(l, r));
    }
    act.coefficients.col(r) = solve_symmetric<Quad>(gram, rhs);
  }
  linears_.push_back({sigma * next});
  act_centers_ = activation_forward(act, scaled, scaled);
  activations_.push_back(std::move(act));
  pending_ = QMat::Identity(k, k);
  max_width_ = std::max(max_width_, k);
}

QuadModel Builder::finish(const std::vector<QVec>& output_map) const {
  if (output_map.empty()) throw InvalidArgument("builder: no outputs");
  QMat w(static_cast<Index>(output_map.size()), pending_.cols());
  for (Index r = 0; r < w.rows(); ++r) w.row(r) = output_map[static_cast<std::size_t>(r)].transpose() * pending_;
  auto linears = linears_;
  linears.push_back({w});
  return QuadModel(std::move(linears), activations_, input_centers_);
}

Index group_depth(const PowerGroup& g) {
  Index depth = 0;
  for (const auto& acc : g.accumulators) {
    const unsigned e = acc.exponent;
    if (e < 1) throw InvalidArgument("power schedule: exponents must be positive");
    Index need = std::bit_width(e);
    if (!acc.value && e > 1 && std::has_single_bit(e)) need = std::bit_width(e) - 1;
    depth = std::max(depth, need);
  }
  return depth;
}

std::vector<double> run_power_groups(Builder& b, std::vector<PowerGroup>& groups, std::vector<QVec*> carried,
                                     Index stages) {
  for (const auto& g : groups)
    if (group_depth(g) > stages) throw InvalidArgument("power schedule: not enough stages");
  const auto& s = b.settings();
  std::vector<double> gammas;

  struct State {
    unsigned remaining;  // bits not yet consumed
    bool special;        // empty start, power of two: take base^e directly
    bool done;
  };
  std::vector<std::vector<State>> states;
  for (const auto& g : groups) {
    std::vector<State> st;
    for (const auto& acc : g.accumulators) {
      const bool special = !acc.value && acc.exponent > 1 && std::has_single_bit(acc.exponent);
      st.push_back({acc.exponent, special, false});
    }
    states.push_back(std::move(st));
  }

  for (Index t = 1; t <= stages; ++t) {
    const unsigned bit = 1u << (t - 1);
    StagePlan plan;
    std::vector<Index> carry_idx;
    for (QVec* c : carried) carry_idx.push_back(plan.add(*c, ChannelKind::Identity));

    std::vector<std::vector<Terms>> new_values(groups.size());
    std::vector<std::optional<Index>> new_base(groups.size());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      auto& g = groups[gi];
      auto& st = states[gi];
      enum class Action { None, Carry, CarryBase, Special, Multiply };
      std::vector<Action> actions(g.accumulators.size(), Action::None);
      bool need_square = false;
      for (std::size_t ai = 0; ai < g.accumulators.size(); ++ai) {
        auto& a = st[ai];
        const bool has_value = g.accumulators[ai].value.has_value();
        if (a.done) {
          actions[ai] = has_value ? Action::Carry : Action::None;
        } else if (a.special) {
          if (a.remaining == (1u << t)) {
            actions[ai] = Action::Special;
            need_square = true;
            a.remaining = 0;
            a.done = true;
          }
        } else if (a.remaining & bit) {
          actions[ai] = has_value ? Action::Multiply : Action::CarryBase;
          if (has_value) need_square = true;
          a.remaining &= ~bit;
          a.done = a.remaining == 0;
        } else if (has_value) {
          actions[ai] = Action::Carry;
        }
      }
      bool needed_later = false;
      for (const auto& a : st)
        if (!a.done && (a.remaining >> t) != 0) needed_later = true;
      std::optional<Index> sq;
      if (need_square || needed_later) sq = plan.add(g.base, ChannelKind::Square);
      if (needed_later) new_base[gi] = sq;

      new_values[gi].resize(g.accumulators.size());
      for (std::size_t ai = 0; ai < g.accumulators.size(); ++ai) {
        auto& acc = g.accumulators[ai];
        Terms& out = new_values[gi][ai];
        switch (actions[ai]) {
          case Action::None:
            break;
          case Action::Carry:
            out = {{plan.add(*acc.value, ChannelKind::Identity), Quad(1)}};
            break;
          case Action::CarryBase:
            out = {{plan.add(g.base, ChannelKind::Identity), Quad(1)}};
            break;
          case Action::Special:
            out = {{*sq, Quad(1)}};
            break;
          case Action::Multiply: {
            const QVec& a = *acc.value;
            const double gamma = select_beta(s, "product", [&](double c) {
              return b.channel_margin(a + Quad(c) * g.base, ChannelKind::Square) >= s.margin;
            });
            gammas.push_back(gamma);
            const Quad gq(gamma);
            const Index i_sum = plan.add(a + gq * g.base, ChannelKind::Square);
            const Index i_a = plan.add(a, ChannelKind::Square);
            const Quad scale = Quad(1) / (Quad(2) * gq);
            out = {{i_sum, scale}, {i_a, -scale}, {*sq, -gq * gq * scale}};
            break;
          }
        }
      }
    }

    b.stage(plan.outputs());
    const Index dim = b.dim();
    for (std::size_t ci = 0; ci < carried.size(); ++ci) *carried[ci] = b.unit(carry_idx[ci]);
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      auto& g = groups[gi];
      g.base = new_base[gi] ? b.unit(*new_base[gi]) : QVec::Zero(dim);
      for (std::size_t ai = 0; ai < g.accumulators.size(); ++ai) {
        const Terms& terms = new_values[gi][ai];
        if (terms.empty())
          g.accumulators[ai].value.reset();
        else
          g.accumulators[ai].value = materialize(terms, dim);
      }
    }
  }
  return gammas;
}

double multiply_stage(Builder& b, QVec& a, const QVec& c, std::vector<QVec*> carried, std::optional<double> gamma) {
  const auto& s = b.settings();
  const double g = gamma ? *gamma : select_beta(s, "product", [&](double v) {
    return b.channel_margin(a + Quad(v) * c, ChannelKind::Square) >= s.margin;
  });
  if (g == 0.0 || !std::isfinite(g)) throw InvalidArgument("product module: beta must be finite and nonzero");
  const Quad gq(g);
  StagePlan plan;
  std::vector<Index> carry_idx;
  for (QVec* v : carried) carry_idx.push_back(plan.add(*v, ChannelKind::Identity));
  const Index i_sum = plan.add(a + gq * c, ChannelKind::Square);
  const Index i_a = plan.add(a, ChannelKind::Square);
  const Index i_c = plan.add(c, ChannelKind::Square);
  b.stage(plan.outputs());
  const Quad scale = Quad(1) / (Quad(2) * gq);
  a = scale * (b.unit(i_sum) - b.unit(i_a) - gq * gq * b.unit(i_c));
  for (std::size_t ci = 0; ci < carried.size(); ++ci) *carried[ci] = b.unit(carry_idx[ci]);
  return g;
}

ModuleReport make_report(const Builder& b, const QuadModel& model) {
  ModuleReport r;
  r.depth = model.depth();
  r.width = model.width();
  r.sigma = b.settings().sigma;
  r.min_margin = b.min_margin();
  return r;
}

}  // namespace sdkn::detail
