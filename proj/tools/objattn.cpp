#include <iostream>

#include "objattn/experiments/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return objattn::exp::cli_main(args, std::cout, std::cerr);
}
