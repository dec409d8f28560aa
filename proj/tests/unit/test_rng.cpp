#include <cmath>
#include <set>

#include "doctest.h"
#include "evoglm/parallel.hpp"
#include "evoglm/rng.hpp"

using namespace evoglm;

TEST_SUITE("rng") {
  TEST_CASE("same key gives the same sequence") {
    RandomStream a(42, {1, 2, 3});
    RandomStream b(42, {1, 2, 3});
    for (int k = 0; k < 100; ++k) CHECK(a() == b());
  }

  TEST_CASE("different ids give different streams") {
    RandomStream a(42, {1, 2});
    RandomStream b(42, {2, 1});
    RandomStream c(43, {1, 2});
    const auto x = a();
    CHECK(x != b());
    CHECK(x != c());
  }

  TEST_CASE("uniform stays inside the open unit interval and has the right mean") {
    RandomStream rng(7, {0});
    double sum = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
      const double u = rng.uniform();
      REQUIRE(u > 0.0);
      REQUIRE(u < 1.0);
      sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  }

  TEST_CASE("normal draws have unit variance") {
    RandomStream rng(11, {5});
    double s = 0.0;
    double s2 = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
      const double z = rng.normal();
      s += z;
      s2 += z * z;
    }
    CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  }

  TEST_CASE("label hashes are stable and distinct") {
    CHECK(label_hash("common") == label_hash("common"));
    CHECK(label_hash("common") != label_hash("line"));
    // FNV-1a reference value for the empty string.
    CHECK(label_hash("") == 14695981039346656037ull);
  }

  TEST_CASE("parallel_for covers every index once regardless of worker count") {
    for (unsigned workers : {1u, 2u, 3u, 8u}) {
      std::vector<int> hits(1001, 0);
      parallel_for(hits.size(), workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) hits[k] += 1;
      });
      for (int h : hits) REQUIRE(h == 1);
    }
  }
}
