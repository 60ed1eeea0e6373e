#include <iostream>

#include "fairrag/cli.hpp"

int main(int argc, char** argv) {
  return fairrag::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
