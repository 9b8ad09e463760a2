#include <iostream>
#include <string>
#include <vector>

#include "sdnguard/cli/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return sdnguard::cli::run(args, std::cout, std::cerr);
}
