#include <doctest.h>

#include <cmath>

#include "rdm/rng.hpp"

using namespace rdm;

TEST_CASE("named streams are deterministic and independent") {
  RngStream a(42, "data");
  RngStream b(42, "data");
  RngStream c(42, "init");

  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    all_equal = all_equal && (va == b.next_u64());
    any_diff = any_diff || (va != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("indexed children differ from each other") {
  RngStream a(7, "blocks", 0);
  RngStream b(7, "blocks", 1);
  CHECK(a.next_u64() != b.next_u64());
}

TEST_CASE("uniform01 stays in [0,1)") {
  RngStream rng(3, "u");
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal draws have the right first two moments") {
  RngStream rng(11, "n");
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("stream seeds depend on every component") {
  CHECK(derive_stream_seed(1, "a") != derive_stream_seed(2, "a"));
  CHECK(derive_stream_seed(1, "a") != derive_stream_seed(1, "b"));
  CHECK(derive_stream_seed(1, "a", 0) != derive_stream_seed(1, "a", 1));
}
