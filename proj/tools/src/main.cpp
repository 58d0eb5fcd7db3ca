#include <iostream>
#include <string>
#include <vector>

#include "gbc_cli/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return gbc::cli::run_command(args, std::cout, std::cerr);
}
