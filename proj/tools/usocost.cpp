#include <iostream>
#include <string>
#include <vector>

#include "usocost/cli.hpp"

int main(int argc, char** argv) {
  return usocost::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
