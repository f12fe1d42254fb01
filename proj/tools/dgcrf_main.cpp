#include <iostream>
#include <string>
#include <vector>

#include "dgcrf/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dgcrf::cli::run_cli(args, std::cout, std::cerr);
}
