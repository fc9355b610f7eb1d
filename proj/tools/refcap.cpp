#include <iostream>

#include "refcap/cli.hpp"

int main(int argc, char** argv) {
  return refcap::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout,
                          std::cerr);
}
