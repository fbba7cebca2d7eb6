#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "core/rng.hpp"

using gatar::Rng;

TEST_CASE("identical seeds give identical streams") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42);
  Rng d(43);
  bool all_equal = true;
  for (int i = 0; i < 16; ++i) all_equal = all_equal && (c.next_u64() == d.next_u64());
  CHECK_FALSE(all_equal);
}

TEST_CASE("below stays in range and is roughly uniform") {
  Rng rng(7);
  std::vector<int> counts(10, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const int v = rng.below_int(10);
    REQUIRE(v >= 0);
    REQUIRE(v < 10);
    ++counts[static_cast<std::size_t>(v)];
  }
  // 3-sigma binomial bounds around draws/10.
  const double p = 0.1;
  const double mean = draws * p;
  const double sigma = std::sqrt(draws * p * (1.0 - p));
  for (const int c : counts) {
    CHECK(std::abs(c - mean) < 3.0 * sigma);
  }
}

TEST_CASE("next_unit lies in the half-open unit interval") {
  Rng rng(3);
  double lo = 1.0;
  double hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.next_unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("normal draws have standard moments") {
  Rng rng(11);
  const int n = 100000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    REQUIRE(std::isfinite(v));
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("shuffle permutes without loss") {
  Rng rng(5);
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  const std::vector<int> original = v;
  rng.shuffle(v);
  CHECK(v != original);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == original);
}

TEST_CASE("derive separates streams") {
  const std::uint64_t base = 1234;
  std::set<std::uint64_t> seen;
  for (std::uint64_t stream = 0; stream < 100; ++stream) {
    seen.insert(Rng::derive(base, stream));
  }
  CHECK(seen.size() == 100);
  CHECK(Rng::derive(1, 2) != Rng::derive(2, 1));
  CHECK(Rng::derive(base, 7) == Rng::derive(base, 7));
}

TEST_CASE("string hashing matches published FNV-1a vectors") {
  CHECK(Rng::hash_string("") == 0xCBF29CE484222325ull);
  CHECK(Rng::hash_string("a") == 0xAF63DC4C8601EC8Cull);
  CHECK(Rng::hash_string("enc.fc.w") != Rng::hash_string("enc.fc.b"));
}
