#include <iostream>
#include <string>
#include <vector>

#include "mplex/cli/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mplex::cli::run(std::move(args), std::cout, std::cerr);
}
