#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "softfin/rng.hpp"
#include "softfin/tensor.hpp"

using namespace softfin;

TEST_CASE("tensor shape bookkeeping") {
  Tensor t({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.rank() == 3);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0);
  t.reshape({6, 4});
  CHECK(t.dim(0) == 6);
  CHECK_THROWS_AS(t.reshape({5, 5}), std::logic_error);
  t.fill(2.5);
  CHECK(t.abs_max() == 2.5);
  CHECK(t.all_finite());
  t[3] = std::nan("");
  CHECK(!t.all_finite());
}

TEST_CASE("rng streams are deterministic and seed-sensitive") {
  Rng a(42), b(42), c(43);
  bool all_eq = true, any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.uniform(), y = b.uniform(), z = c.uniform();
    all_eq = all_eq && (x == y);
    any_diff = any_diff || (x != z);
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(all_eq);
  CHECK(any_diff);
}

TEST_CASE("normal draws have the right first two moments") {
  Rng rng(7);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("uniform_below is unbiased across small ranges") {
  Rng rng(9);
  int counts[5] = {0, 0, 0, 0, 0};
  for (int i = 0; i < 50000; ++i) ++counts[rng.uniform_below(5)];
  for (int c : counts) {
    CHECK(c > 9500);
    CHECK(c < 10500);
  }
}

TEST_CASE("derived seeds differ across tags and indices") {
  const auto a = derive_seed(42, "dataset");
  const auto b = derive_seed(42, "posnet");
  const auto c = derive_seed(43, "dataset");
  CHECK(a != b);
  CHECK(a != c);
  CHECK(derive_seed(42, "dataset") == a);
  CHECK(derive_seed(42, "log", 0) != derive_seed(42, "log", 1));
  CHECK(derive_seed(42, "log", 3) == derive_seed(42, "log", 3));
}

TEST_CASE("shuffle is a seeded permutation") {
  std::vector<int> v1{1, 2, 3, 4, 5, 6, 7, 8}, v2 = v1, v0 = v1;
  Rng a(5), b(5);
  a.shuffle(v1);
  b.shuffle(v2);
  CHECK(v1 == v2);
  std::sort(v1.begin(), v1.end());
  CHECK(v1 == v0);
}
