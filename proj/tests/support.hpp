#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "llp/core.hpp"
#include "llp/random.hpp"

namespace llp::testing {

inline std::string data_path(const std::string& name) { return std::string(LLP_TEST_DATA_DIR) + "/" + name; }

inline Instance point(std::vector<Feature> features, Label y) { return Instance(std::move(features), y); }

/// Two-feature instance with label.
inline Instance point2(double x1, double x2, Label y) { return Instance({{1, x1}, {2, x2}}, y); }

/// Linearly separable pool: label = sign(x1 + x2 - 0.2 * margin side), features
/// drawn uniformly in [-1,1]^2 and points within `gap` of the boundary dropped.
inline std::vector<Instance> separable_pool(std::size_t n, double gap, std::uint64_t seed) {
  Rng rng(seed, 99);
  std::vector<Instance> pool;
  while (pool.size() < n) {
    const double a = 2.0 * rng.uniform() - 1.0;
    const double b = 2.0 * rng.uniform() - 1.0;
    const double margin = a + b;
    if (std::abs(margin) < gap) continue;
    pool.push_back(point2(a, b, margin > 0 ? Label::positive : Label::negative));
  }
  return pool;
}

inline std::vector<Label> labels_of(const std::vector<Instance>& xs) {
  std::vector<Label> out;
  for (const auto& x : xs) out.push_back(x.true_label());
  return out;
}

}  // namespace llp::testing
