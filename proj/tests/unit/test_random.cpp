#include <atomic>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "llp/parallel.hpp"
#include "llp/random.hpp"

using namespace llp;

namespace {

// Independent transcription of the documented stream rules.
std::uint64_t splitmix_finalizer(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t documented_key(std::uint64_t seed, std::uint64_t stream) {
  return splitmix_finalizer(seed ^ splitmix_finalizer(stream + 0x632BE59BD9B4E019ULL));
}

std::uint64_t documented_draw(std::uint64_t key, std::uint64_t i) {
  return splitmix_finalizer(key + (i + 1) * 0x9E3779B97F4A7C15ULL);
}

}  // namespace

TEST_CASE("draws follow the documented key and counter rules") {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xFFFFFFFFFFFFFFFFULL}) {
    for (std::uint64_t stream : {0ULL, 3ULL, 1000ULL}) {
      Rng rng(seed, stream);
      const std::uint64_t key = documented_key(seed, stream);
      CHECK(rng.key() == key);
      for (std::uint64_t i = 0; i < 5; ++i) CHECK(rng.next_u64() == documented_draw(key, i));
      Rng child = Rng(seed, stream).derive(7);
      CHECK(child.key() == splitmix_finalizer(key ^ splitmix_finalizer(7 + 0x632BE59BD9B4E019ULL)));
    }
  }
}

TEST_CASE("same seed gives the same sequence, different streams differ") {
  Rng a(9, 1), b(9, 1), c(9, 2);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs |= (x != c.next_u64());
  }
  CHECK(differs);
  CHECK(Rng(9).derive(1).key() != Rng(9).derive(2).key());
}

TEST_CASE("derive does not advance the parent") {
  Rng a(3);
  a.next_u64();
  const auto counter = a.counter();
  (void)a.derive(5);
  CHECK(a.counter() == counter);
}

TEST_CASE("uniform draws stay in range with the right mean") {
  Rng rng(11);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // Standard error of the mean of U(0,1) is sqrt(1/12/n).
  CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  for (int i = 0; i < 1000; ++i) CHECK(rng.uniform_open() > 0.0);
}

TEST_CASE("below is unbiased over small ranges") {
  Rng rng(12);
  const std::uint64_t n = 7;
  std::vector<int> counts(n, 0);
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) {
    const auto k = rng.below(n);
    REQUIRE(k < n);
    ++counts[k];
  }
  const double expected = static_cast<double>(draws) / n;
  const double sd = std::sqrt(expected * (1.0 - 1.0 / n));
  for (int c : counts) CHECK(std::abs(c - expected) < 5.0 * sd);
  CHECK_THROWS(rng.below(0));
  CHECK(rng.below(1) == 0);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  for (unsigned workers : {1u, 2u, 4u}) {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), workers, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 4) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}
