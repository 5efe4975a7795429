#include <iostream>
#include <string>
#include <vector>

#include "psq/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::ios::sync_with_stdio(false);
  return psq::cli::run_cli(args, std::cout, std::cerr);
}
