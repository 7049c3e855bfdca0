#include <iostream>
#include <string>
#include <vector>

#include "triage/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return triage::run_cli(args, std::cout, std::cerr);
}
