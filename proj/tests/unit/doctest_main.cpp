#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "hypirb/util/alloc.hpp"

int main(int argc, char** argv) {
  hypirb::tune_allocator();
  return doctest::Context(argc, argv).run();
}
