#include <iostream>
#include <string>
#include <vector>

#include "p2pdrl/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return p2pdrl::run_cli(args, std::cout, std::cerr);
}
