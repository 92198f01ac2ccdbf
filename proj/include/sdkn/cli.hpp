#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdkn/kernels.hpp"
#include "sdkn/training.hpp"

namespace sdkn::cli {

enum class Command { Train, Eval, CompilePoly, FlatLimitStudy, DiagnoseConditioning };

std::string_view command_name(Command c);

/// Raw key=value pairs, before typing.
using ConfigValues = std::map<std::string, std::string>;

/// Malformed config: unknown key, bad value, missing required field. The
/// message names the key.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct RunConfig {
  Command command = Command::Train;

  // Paths.
  std::filesystem::path dataset;
  std::filesystem::path model;
  std::filesystem::path out = "sdkn_out";
  std::filesystem::path poly;
  std::filesystem::path nodes_file;

  // Architecture.
  Index inputs = 1;
  Index outputs = 1;
  Index depth = 2;
  std::vector<Index> width{8};
  Kernel1D kernel = Kernel1D::gaussian();

  TrainConfig train;

  // Constructions.
  double sigma = 1e-3;
  std::vector<double> domain_lo{0.0};
  std::vector<double> domain_hi{1.0};
  Index grid = 0;  // 0: about 1000 points in total
  bool refine = false;

  // Studies.
  std::vector<double> nodes{0.0, 0.5, 1.0};
  std::vector<double> values;
  std::vector<double> eps_list{1.0, 0.1, 0.01, 0.001};
};

/// Every recognised key, sorted.
const std::vector<std::string>& config_keys();

/// Reads "key = value" lines; '#' starts a comment. Unknown keys and
/// malformed lines are ConfigErrors naming the line and key.
ConfigValues read_config_values(std::istream& in, const std::string& source = "config");

/// Defaults overridden by the file's values.
RunConfig parse_config(const std::filesystem::path& path);

/// Defaults, then `file`, then `flags`; required keys for the command are
/// checked at the end.
RunConfig resolve_config(Command command, const ConfigValues& file, const ConfigValues& flags);

/// key=value text of every setting, one per line, sorted by key.
std::string format_config(const RunConfig& cfg);

enum ExitCode : int { Ok = 0, Usage = 2, Data = 3, Numeric = 4 };

/// Full command-line entry point. Normal output goes to `out`, diagnostics
/// and usage text to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdkn::cli
