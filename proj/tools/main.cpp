#include <iostream>
#include <string>
#include <vector>

#include "mvg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return mvg::run_cli(args, std::cout, std::cerr);
}
