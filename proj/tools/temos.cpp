#include <iostream>
#include <string>
#include <vector>

#include "temos/cli/commands.hpp"

int main(int argc, char** argv) {
  return temos::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
