#pragma once

#include <cstdint>
#include <string_view>

namespace llp {

/// Counter-based random source.
///
/// A generator is a (key, counter) pair. Draw i of a stream is
///   mix64(key + (i + 1) * 0x9E3779B97F4A7C15)
/// where mix64 is the SplitMix64 finalizer. The key of Rng(seed, stream) is
///   mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019)),
/// and derive(s) re-keys the same way starting from the current key. Doubles
/// take the top 53 bits; bounded integers use rejection sampling on the
/// largest multiple of n below 2^64. Any implementation following these rules
/// reproduces the datasets recorded with `algorithm` in their metadata.
class Rng {
 public:
  static constexpr std::string_view algorithm = "splitmix64-counter/v1";

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in (0, 1).
  double uniform_open();
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  /// Independent generator for sub-task `stream` (worker, trial block, bag...).
  Rng derive(std::uint64_t stream) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  struct Keyed {};
  Rng(Keyed, std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace llp
