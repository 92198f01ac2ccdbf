#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sdkn/cli.hpp"

namespace sdkn::cli {

struct KeySpec {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Sorted by name.
const std::vector<KeySpec>& key_specs();

}  // namespace sdkn::cli
