#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "cli/keys.hpp"
#include "sdkn/model_io.hpp"

namespace sdkn::cli {

std::string_view command_name(Command c) {
  switch (c) {
    case Command::Train:
      return "train";
    case Command::Eval:
      return "eval";
    case Command::CompilePoly:
      return "compile-poly";
    case Command::FlatLimitStudy:
      return "flat-limit-study";
    case Command::DiagnoseConditioning:
      return "diagnose-conditioning";
  }
  return "?";
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const char* expected, const std::string& value) {
  throw ConfigError("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

template <class T>
T parse_integral(const std::string& key, const std::string& value) {
  T v{};
  const std::string s = trim(value);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, "an integer", value);
  return v;
}

Index parse_index(const std::string& key, const std::string& value) {
  return static_cast<Index>(parse_integral<long long>(key, value));
}

double parse_real(const std::string& key, const std::string& value) {
  double v = 0.0;
  const std::string s = trim(value);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    bad_value(key, "a real number", value);
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string s = trim(value);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  bad_value(key, "a boolean", value);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream ss(value);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::vector<double> parse_reals(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(parse_real(key, item));
  return out;
}

std::vector<Index> parse_indices(const std::string& key, const std::string& value) {
  std::vector<Index> out;
  for (const auto& item : split_list(value)) out.push_back(parse_index(key, item));
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>)
      s += format_number(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

std::string num(double v) { return format_number(v); }

const std::vector<KeySpec>& table() {
  static const std::vector<KeySpec> keys = [] {
    std::vector<KeySpec> k;
    auto add = [&](std::string name, std::string help, std::function<void(RunConfig&, const std::string&)> set,
                   std::function<std::string(const RunConfig&)> get) {
      k.push_back({std::move(name), std::move(help), std::move(set), std::move(get)});
    };
    add("dataset", "CSV dataset (header row; inputs then targets)",
        [](RunConfig& c, const std::string& v) { c.dataset = trim(v); },
        [](const RunConfig& c) { return c.dataset.string(); });
    add("model", "model file to evaluate",
        [](RunConfig& c, const std::string& v) { c.model = trim(v); },
        [](const RunConfig& c) { return c.model.string(); });
    add("out", "output directory for artifacts",
        [](RunConfig& c, const std::string& v) { c.out = trim(v); },
        [](const RunConfig& c) { return c.out.string(); });
    add("poly", "polynomial spec file, one 'coeff : n1 .. nd' term per line",
        [](RunConfig& c, const std::string& v) { c.poly = trim(v); },
        [](const RunConfig& c) { return c.poly.string(); });
    add("nodes_file", "file of node values (whitespace or newline separated)",
        [](RunConfig& c, const std::string& v) { c.nodes_file = trim(v); },
        [](const RunConfig& c) { return c.nodes_file.string(); });
    add("inputs", "number of input columns in the dataset",
        [](RunConfig& c, const std::string& v) { c.inputs = parse_index("inputs", v); },
        [](const RunConfig& c) { return std::to_string(c.inputs); });
    add("outputs", "number of target columns in the dataset",
        [](RunConfig& c, const std::string& v) { c.outputs = parse_index("outputs", v); },
        [](const RunConfig& c) { return std::to_string(c.outputs); });
    add("depth", "number of activation layers L",
        [](RunConfig& c, const std::string& v) { c.depth = parse_index("depth", v); },
        [](const RunConfig& c) { return std::to_string(c.depth); });
    add("width", "hidden width, one value or one per activation layer",
        [](RunConfig& c, const std::string& v) { c.width = parse_indices("width", v); },
        [](const RunConfig& c) { return join(c.width); });
    add("centers", "number of centers M",
        [](RunConfig& c, const std::string& v) { c.train.num_centers = parse_index("centers", v); },
        [](const RunConfig& c) { return std::to_string(c.train.num_centers); });
    add("kernel", "kernel family: gaussian, matern0, matern2, wendland0",
        [](RunConfig& c, const std::string& v) {
          try {
            c.kernel.family = parse_family(trim(v));
          } catch (const InvalidArgument&) {
            bad_value("kernel", "a kernel family", v);
          }
        },
        [](const RunConfig& c) { return std::string(family_name(c.kernel.family)); });
    add("epsilon", "kernel shape parameter",
        [](RunConfig& c, const std::string& v) { c.kernel.epsilon = parse_real("epsilon", v); },
        [](const RunConfig& c) { return num(c.kernel.epsilon); });
    add("optimizer", "sgd or adam",
        [](RunConfig& c, const std::string& v) {
          const std::string s = trim(v);
          if (s == "sgd")
            c.train.optimizer = OptimizerKind::SGD;
          else if (s == "adam")
            c.train.optimizer = OptimizerKind::Adam;
          else
            bad_value("optimizer", "'sgd' or 'adam'", v);
        },
        [](const RunConfig& c) { return std::string(c.train.optimizer == OptimizerKind::SGD ? "sgd" : "adam"); });
    add("lr", "learning rate",
        [](RunConfig& c, const std::string& v) { c.train.learning_rate = parse_real("lr", v); },
        [](const RunConfig& c) { return num(c.train.learning_rate); });
    add("momentum", "SGD momentum",
        [](RunConfig& c, const std::string& v) { c.train.momentum = parse_real("momentum", v); },
        [](const RunConfig& c) { return num(c.train.momentum); });
    add("beta1", "Adam first-moment decay",
        [](RunConfig& c, const std::string& v) { c.train.beta1 = parse_real("beta1", v); },
        [](const RunConfig& c) { return num(c.train.beta1); });
    add("beta2", "Adam second-moment decay",
        [](RunConfig& c, const std::string& v) { c.train.beta2 = parse_real("beta2", v); },
        [](const RunConfig& c) { return num(c.train.beta2); });
    add("adam_eps", "Adam epsilon",
        [](RunConfig& c, const std::string& v) { c.train.adam_epsilon = parse_real("adam_eps", v); },
        [](const RunConfig& c) { return num(c.train.adam_epsilon); });
    add("batch_size", "minibatch size",
        [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_index("batch_size", v); },
        [](const RunConfig& c) { return std::to_string(c.train.batch_size); });
    add("epochs", "training epochs",
        [](RunConfig& c, const std::string& v) { c.train.epochs = parse_index("epochs", v); },
        [](const RunConfig& c) { return std::to_string(c.train.epochs); });
    add("reg", "per-layer penalty weights (one value or 2L+1 values)",
        [](RunConfig& c, const std::string& v) { c.train.reg_weights = parse_reals("reg", v); },
        [](const RunConfig& c) { return join(c.train.reg_weights); });
    add("center_rule", "first or random",
        [](RunConfig& c, const std::string& v) {
          const std::string s = trim(v);
          if (s == "first")
            c.train.center_rule = CenterRule::FirstM;
          else if (s == "random")
            c.train.center_rule = CenterRule::RandomSeeded;
          else
            bad_value("center_rule", "'first' or 'random'", v);
        },
        [](const RunConfig& c) {
          return std::string(c.train.center_rule == CenterRule::FirstM ? "first" : "random");
        });
    add("seed", "random seed (initialization, centers, shuffling)",
        [](RunConfig& c, const std::string& v) { c.train.seed = parse_integral<std::uint64_t>("seed", v); },
        [](const RunConfig& c) { return std::to_string(c.train.seed); });
    add("timing", "record wall time in metrics (false gives byte-stable output)",
        [](RunConfig& c, const std::string& v) { c.train.record_time = parse_bool("timing", v); },
        [](const RunConfig& c) { return std::string(c.train.record_time ? "true" : "false"); });
    add("sigma", "flat-limit scale for constructions",
        [](RunConfig& c, const std::string& v) { c.sigma = parse_real("sigma", v); },
        [](const RunConfig& c) { return num(c.sigma); });
    add("domain_lo", "lower corner of the domain box (one value broadcasts)",
        [](RunConfig& c, const std::string& v) { c.domain_lo = parse_reals("domain_lo", v); },
        [](const RunConfig& c) { return join(c.domain_lo); });
    add("domain_hi", "upper corner of the domain box (one value broadcasts)",
        [](RunConfig& c, const std::string& v) { c.domain_hi = parse_reals("domain_hi", v); },
        [](const RunConfig& c) { return join(c.domain_hi); });
    add("grid", "grid points per coordinate for error reports, 0 for automatic",
        [](RunConfig& c, const std::string& v) { c.grid = parse_index("grid", v); },
        [](const RunConfig& c) { return std::to_string(c.grid); });
    add("refine", "halve sigma while the grid error improves",
        [](RunConfig& c, const std::string& v) { c.refine = parse_bool("refine", v); },
        [](const RunConfig& c) { return std::string(c.refine ? "true" : "false"); });
    add("nodes", "interpolation nodes, comma separated",
        [](RunConfig& c, const std::string& v) { c.nodes = parse_reals("nodes", v); },
        [](const RunConfig& c) { return join(c.nodes); });
    add("values", "values at the nodes, comma separated",
        [](RunConfig& c, const std::string& v) { c.values = parse_reals("values", v); },
        [](const RunConfig& c) { return join(c.values); });
    add("eps_list", "shape parameters to sweep, comma separated",
        [](RunConfig& c, const std::string& v) { c.eps_list = parse_reals("eps_list", v); },
        [](const RunConfig& c) { return join(c.eps_list); });
    std::sort(k.begin(), k.end(), [](const KeySpec& a, const KeySpec& b) { return a.name < b.name; });
    return k;
  }();
  return keys;
}

const KeySpec& find_key(const std::string& name) {
  for (const auto& k : table())
    if (k.name == name) return k;
  throw ConfigError("unknown config key '" + name + "'");
}

void require(bool ok, const std::string& key, Command c) {
  if (!ok) throw ConfigError("config key '" + key + "' is required for " + std::string(command_name(c)));
}

void check(const RunConfig& cfg) {
  auto fail = [](const std::string& key, const std::string& what) {
    throw ConfigError("config key '" + key + "': " + what);
  };
  if (cfg.inputs < 1) fail("inputs", "must be positive");
  if (cfg.outputs < 1) fail("outputs", "must be positive");
  if (cfg.depth < 0) fail("depth", "must be nonnegative");
  if (cfg.width.empty()) fail("width", "needs at least one value");
  for (Index w : cfg.width)
    if (w < 1) fail("width", "widths must be positive");
  if (cfg.width.size() != 1 && static_cast<Index>(cfg.width.size()) != cfg.depth)
    fail("width", "give one value or one per activation layer");
  if (!(cfg.kernel.epsilon > 0.0)) fail("epsilon", "must be positive");
  if (cfg.kernel.family == KernelFamily::Linear) fail("kernel", "activations need a radial kernel");
  if (!(cfg.train.learning_rate > 0.0)) fail("lr", "must be positive");
  if (cfg.train.momentum < 0.0 || cfg.train.momentum >= 1.0) fail("momentum", "must lie in [0, 1)");
  if (cfg.train.beta1 < 0.0 || cfg.train.beta1 >= 1.0) fail("beta1", "must lie in [0, 1)");
  if (cfg.train.beta2 < 0.0 || cfg.train.beta2 >= 1.0) fail("beta2", "must lie in [0, 1)");
  if (!(cfg.train.adam_epsilon > 0.0)) fail("adam_eps", "must be positive");
  if (cfg.train.batch_size < 1) fail("batch_size", "must be positive");
  if (cfg.train.epochs < 1) fail("epochs", "must be positive");
  if (cfg.train.num_centers < 1) fail("centers", "must be positive");
  for (double r : cfg.train.reg_weights)
    if (r < 0.0) fail("reg", "weights must be nonnegative");
  if (!(cfg.sigma > 0.0)) fail("sigma", "must be positive");
  if (cfg.domain_lo.empty()) fail("domain_lo", "needs at least one value");
  if (cfg.domain_hi.empty()) fail("domain_hi", "needs at least one value");
  if (cfg.grid != 0 && cfg.grid < 2) fail("grid", "must be 0 (automatic) or at least 2");
  for (double e : cfg.eps_list)
    if (!(e > 0.0)) fail("eps_list", "values must be positive");
}

}  // namespace

const std::vector<KeySpec>& key_specs() { return table(); }

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& k : table()) n.push_back(k.name);
    return n;
  }();
  return names;
}

ConfigValues read_config_values(std::istream& in, const std::string& source) {
  ConfigValues values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      find_key(key);
    } catch (const ConfigError&) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": unknown config key '" + key + "'");
    }
    values[key] = value;
  }
  return values;
}

namespace {

void apply_values(RunConfig& cfg, const ConfigValues& values) {
  for (const auto& [key, value] : values) find_key(key).set(cfg, value);
}

}  // namespace

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  RunConfig cfg;
  apply_values(cfg, read_config_values(in, path.string()));
  return cfg;
}

RunConfig resolve_config(Command command, const ConfigValues& file, const ConfigValues& flags) {
  RunConfig cfg;
  cfg.command = command;
  apply_values(cfg, file);
  apply_values(cfg, flags);
  check(cfg);
  switch (command) {
    case Command::Train:
      require(!cfg.dataset.empty(), "dataset", command);
      break;
    case Command::Eval:
      require(!cfg.dataset.empty(), "dataset", command);
      require(!cfg.model.empty(), "model", command);
      break;
    case Command::CompilePoly:
      require(!cfg.poly.empty(), "poly", command);
      break;
    case Command::FlatLimitStudy:
      require(!cfg.values.empty(), "values", command);
      if (cfg.values.size() != cfg.nodes.size())
        throw ConfigError("config key 'values': expected " + std::to_string(cfg.nodes.size()) +
                          " values to match 'nodes'");
      break;
    case Command::DiagnoseConditioning:
      break;
  }
  return cfg;
}

std::string format_config(const RunConfig& cfg) {
  std::string s = "command=" + std::string(command_name(cfg.command)) + "\n";
  for (const auto& k : table()) s += k.name + "=" + k.get(cfg) + "\n";
  return s;
}

}  // namespace sdkn::cli
