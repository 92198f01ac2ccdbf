#include <iostream>

#include "sdkn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return sdkn::cli::run(args, std::cout, std::cerr);
}
