#include <iostream>
#include <string>
#include <vector>

#include "chi2r/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return chi2r::run_cli(args, std::cout, std::cerr);
}
