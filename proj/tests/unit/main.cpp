#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "sfb/sparse_lu.hpp"

int main(int argc, char** argv) {
  sfb::ensure_blas_runtime(argv);
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
