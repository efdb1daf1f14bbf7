#include <iostream>

#include "cisp/cli.hpp"

int main(int argc, char** argv) {
  return cisp::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
