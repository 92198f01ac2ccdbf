#include <cmath>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli/keys.hpp"
#include "sdkn/constructions.hpp"
#include "sdkn/model_io.hpp"

namespace sdkn::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

void prepare_out(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) throw DataError("cannot create output directory " + cfg.out.string() + ": " + ec.message());
  write_text(cfg.out / "resolved_config.txt", format_config(cfg));
}

std::vector<double> broadcast(const std::vector<double>& v, Index d, const char* key) {
  if (static_cast<Index>(v.size()) == d) return v;
  if (v.size() == 1) return std::vector<double>(static_cast<std::size_t>(d), v[0]);
  throw ConfigError(std::string("config key '") + key + "': expected 1 or " + std::to_string(d) + " values");
}

Index grid_per_dim(const RunConfig& cfg, Index d) {
  if (cfg.grid > 0) return cfg.grid;
  return std::max<Index>(2, static_cast<Index>(std::floor(std::pow(1000.0, 1.0 / static_cast<double>(d)) + 1e-9)));
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const Dataset data = load_dataset(cfg.dataset, cfg.inputs, cfg.outputs);
  const Eigen::MatrixXd centers = select_centers(data, cfg.train);
  ModelShape shape;
  shape.input_dim = cfg.inputs;
  shape.output_dim = cfg.outputs;
  for (Index l = 0; l < cfg.depth; ++l)
    shape.widths.push_back(cfg.width.size() == 1 ? cfg.width[0] : cfg.width[static_cast<std::size_t>(l)]);
  const SdknModel init = init_model(shape, centers, cfg.kernel, cfg.train.seed);
  const TrainResult result = train(init, data, cfg.train);

  save_model(cfg.out / "model.txt", result.model);
  std::string metrics;
  for (const auto& rec : result.history) metrics += to_json_line(rec) + "\n";
  write_text(cfg.out / "metrics.jsonl", metrics);
  const auto& last = result.history.back();
  out << "epochs " << last.epoch << " loss " << format_number(last.loss) << " objective "
      << format_number(last.objective) << "\n";
  return Ok;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  double mse = 0.0;
  if (model_scalar_tag(cfg.model) == "binary128") {
    const QuadModel model = load_model<Quad>(cfg.model);
    const Dataset data = load_dataset(cfg.dataset, model.input_dim(), model.output_dim());
    mse = mse_loss(evaluate(model, data.inputs), data.targets);
  } else {
    const SdknModel model = load_model<double>(cfg.model);
    const Dataset data = load_dataset(cfg.dataset, model.input_dim(), model.output_dim());
    mse = mse_loss(predict(model, data.inputs), data.targets);
  }
  nlohmann::ordered_json j;
  j["model"] = cfg.model.string();
  j["dataset"] = cfg.dataset.string();
  j["mse"] = mse;
  write_text(cfg.out / "eval.json", j.dump() + "\n");
  out << "mse " << format_number(mse) << "\n";
  return Ok;
}

int cmd_compile(const RunConfig& cfg, std::ostream& out) {
  std::ifstream in(cfg.poly);
  if (!in) throw DataError("cannot open polynomial spec " + cfg.poly.string());
  PolynomialSpec spec = parse_polynomial_spec(in);
  spec.lo = broadcast(cfg.domain_lo, spec.dim, "domain_lo");
  spec.hi = broadcast(cfg.domain_hi, spec.dim, "domain_hi");
  spec.validate();
  ConstructionSettings settings;
  settings.kernel = cfg.kernel;
  settings.sigma = cfg.sigma;
  const Index per_dim = grid_per_dim(cfg, spec.dim);
  auto f = [&](std::span<const double> x) { return spec.evaluate(x); };

  nlohmann::ordered_json report;
  std::vector<RefinementStep> steps;
  Fragment frag = [&] {
    if (cfg.refine) {
      auto refined = compile_polynomial_refined(spec, std::nullopt, settings, per_dim);
      steps = std::move(refined.steps);
      return std::move(refined.best);
    }
    Fragment f0 = compile_polynomial(spec, std::nullopt, settings);
    steps.push_back({settings.sigma, grid_sup_error(f0.model, f, spec.lo, spec.hi, per_dim)});
    return f0;
  }();
  const double error = grid_sup_error(frag.model, f, spec.lo, spec.hi, per_dim);
  save_model(cfg.out / "model.txt", frag.model);

  report["sigma"] = frag.report.sigma;
  report["grid_per_dim"] = per_dim;
  report["grid_error"] = error;
  report["depth"] = frag.model.depth();
  report["width"] = frag.model.width();
  report["centers"] = frag.model.num_centers();
  report["center_margin"] = frag.model.depth() > 0 ? min_center_margin(frag.model) : 0.0;
  auto& js = report["steps"] = nlohmann::ordered_json::array();
  for (const auto& s : steps) js.push_back({{"sigma", s.sigma}, {"grid_error", s.error}});
  write_text(cfg.out / "report.json", report.dump(2) + "\n");
  out << "depth " << frag.model.depth() << " width " << frag.model.width() << " sigma "
      << format_number(frag.report.sigma) << " grid_error " << format_number(error) << "\n";
  return Ok;
}

int cmd_flat_limit(const RunConfig& cfg, std::ostream& out) {
  const double lo = cfg.domain_lo.front();
  const double hi = cfg.domain_hi.front();
  if (!(hi > lo)) throw ConfigError("config key 'domain_hi': must exceed domain_lo");
  const Index n = cfg.grid > 0 ? cfg.grid : 1000;
  std::string table;
  for (double eps : cfg.eps_list) {
    const auto s = flat_limit_interpolant(cfg.kernel, cfg.nodes, cfg.values, eps);
    double err = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
      err = std::max(err, std::abs(s(x) - interpolating_polynomial(cfg.nodes, cfg.values, x)));
    }
    table += format_number(eps) + "\t" + format_number(err) + "\n";
  }
  write_text(cfg.out / "study.tsv", table);
  out << table;
  return Ok;
}

std::vector<double> read_nodes(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open node file " + path.string());
  std::vector<double> nodes;
  std::string tok;
  while (in >> tok) {
    if (tok[0] == '#') {
      std::getline(in, tok);
      continue;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || !std::isfinite(v)) throw DataError(path.string() + ": bad node value '" + tok + "'");
    nodes.push_back(v);
  }
  return nodes;
}

int cmd_conditioning(const RunConfig& cfg, std::ostream& out) {
  const std::vector<double> nodes = cfg.nodes_file.empty() ? cfg.nodes : read_nodes(cfg.nodes_file);
  if (nodes.size() < 2) throw DataError("diagnose-conditioning: need at least two nodes");
  std::string table;
  for (double eps : cfg.eps_list) {
    Kernel1D k = cfg.kernel;
    k.epsilon = eps;
    const double cond = conditioning_diagnostic(k, nodes);
    table += format_number(eps) + "\t" + (std::isinf(cond) ? std::string("inf") : format_number(cond)) + "\n";
  }
  write_text(cfg.out / "conditioning.tsv", table);
  out << table;
  return Ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structured deep kernel networks: training, evaluation and constructive compilation"};
  app.name(args.empty() ? "sdkn" : args[0]);
  app.require_subcommand(1);

  struct Sub {
    Command command;
    CLI::App* app;
    std::string config;
    ConfigValues flags;
  };
  std::vector<Sub> subs;
  subs.reserve(5);
  const std::pair<Command, const char*> commands[] = {
      {Command::Train, "train an SDKN on a CSV dataset"},
      {Command::Eval, "print the MSE of a model on a CSV dataset"},
      {Command::CompilePoly, "compile a polynomial spec into an SDKN and report its grid error"},
      {Command::FlatLimitStudy, "sup error of kernel interpolants against the interpolating polynomial"},
      {Command::DiagnoseConditioning, "Gram matrix condition numbers for a node set"}};
  for (const auto& [cmd, help] : commands) {
    subs.push_back({cmd, app.add_subcommand(std::string(command_name(cmd)), help), {}, {}});
    Sub& s = subs.back();
    s.app->add_option("--config", s.config, "key=value config file; flags override its values");
    for (const auto& key : key_specs()) {
      ConfigValues* flags = &s.flags;
      const std::string name = key.name;
      s.app->add_option_function<std::string>(
          "--" + name, [flags, name](const std::string& v) { (*flags)[name] = v; }, key.help);
    }
  }

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? Ok : Usage;
  }

  const Sub* chosen = nullptr;
  for (const auto& s : subs)
    if (s.app->parsed()) chosen = &s;

  try {
    ConfigValues file;
    if (!chosen->config.empty()) {
      std::ifstream in(chosen->config);
      if (!in) throw DataError("cannot open config file " + chosen->config);
      file = read_config_values(in, chosen->config);
    }
    const RunConfig cfg = resolve_config(chosen->command, file, chosen->flags);
    prepare_out(cfg);
    switch (cfg.command) {
      case Command::Train:
        return cmd_train(cfg, out);
      case Command::Eval:
        return cmd_eval(cfg, out);
      case Command::CompilePoly:
        return cmd_compile(cfg, out);
      case Command::FlatLimitStudy:
        return cmd_flat_limit(cfg, out);
      case Command::DiagnoseConditioning:
        return cmd_conditioning(cfg, out);
    }
  } catch (const InvalidArgument& e) {
    err << "sdkn: error: " << e.what() << "\n";
    return Usage;
  } catch (const DataError& e) {
    err << "sdkn: data error: " << e.what() << "\n";
    return Data;
  } catch (const fs::filesystem_error& e) {
    err << "sdkn: data error: " << e.what() << "\n";
    return Data;
  } catch (const NumericError& e) {
    err << "sdkn: numeric error: " << e.what() << "\n";
    return Numeric;
  }
  return Ok;
}

}  // namespace sdkn::cli
