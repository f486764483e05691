#include <iostream>

#include "epilogue/cli/cli.hpp"

int main(int argc, char** argv) {
  return epilogue::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
