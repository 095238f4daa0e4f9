#include <iostream>

#include "sgnet/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sgnet::run_cli(std::move(args), std::cout, std::cerr);
}
