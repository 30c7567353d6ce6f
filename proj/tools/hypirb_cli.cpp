#include <iostream>

#include "hypirb/harness/cli.hpp"
#include "hypirb/util/alloc.hpp"

int main(int argc, char** argv) {
  hypirb::tune_allocator();
  return hypirb::harness::run_cli(argc, argv, std::cout, std::cerr);
}
