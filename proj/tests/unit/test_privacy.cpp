#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "llp/baggen.hpp"
#include "llp/privacy.hpp"
#include "llp/random.hpp"
#include "support.hpp"

using namespace llp;
using namespace llp::privacy;

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

BagDataset disjoint_bags(std::size_t bags, std::size_t size, std::uint64_t seed) {
  Rng rng(seed, 40);
  std::vector<Instance> xs;
  std::vector<std::string> groups;
  for (std::size_t k = 0; k < bags; ++k)
    for (std::size_t j = 0; j < size; ++j) {
      xs.emplace_back(std::vector<Feature>{{1, rng.uniform()}}, rng.bernoulli(0.3) ? Label::positive : Label::negative);
      groups.push_back("g" + std::to_string(100 + k));
    }
  return gen_group_bags(xs, groups);
}

}  // namespace

TEST_CASE("budget splits eta evenly and exposes the noise scale") {
  const PrivacyBudget budget(1.0, 10);
  CHECK(budget.per_query_epsilon() * budget.k() == doctest::Approx(budget.eta_total()).epsilon(1e-15));
  CHECK(budget.noise_scale() == 10.0);
  CHECK(PrivacyBudget(2.5, 1).per_query_epsilon() == 2.5);
  CHECK_THROWS(PrivacyBudget(0.0, 3));
  CHECK_THROWS(PrivacyBudget(1.0, 0));
}

TEST_CASE("Laplace inverse CDF and moments") {
  CHECK(laplace_inverse_cdf(0.5, 3.0) == 0.0);
  CHECK(laplace_inverse_cdf(0.75, 2.0) == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(laplace_inverse_cdf(0.25, 2.0) == doctest::Approx(-2.0 * std::log(2.0)));
  Rng rng(1, 2);
  CHECK_THROWS(laplace_sample(0.0, rng));

  const double scale = 3.0;
  const int n = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = laplace_sample(scale, rng);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double variance = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 * scale * std::sqrt(2.0) / 1000.0);
  CHECK(std::abs(variance - 2.0 * scale * scale) < 0.05 * 2.0 * scale * scale);
}

TEST_CASE("perturbed counts") {
  const PrivacyBudget exact(kInfinity, 10);
  const auto c = perturb_counts(600, 400, exact, 5);
  CHECK(c.n_plus_released == 600.0);
  CHECK(c.released_proportion == 0.6);
  CHECK(c.seed == 5);

  const auto empty = perturb_counts(0, 0, PrivacyBudget(1.0, 10), 5);
  CHECK(empty.degenerate);
  CHECK(empty.released_proportion == 0.5);

  const PrivacyBudget budget(1.0, 10);
  const int seeds = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const auto r = perturb_counts(600, 400, budget, static_cast<std::uint64_t>(s));
    CHECK(r.released_proportion >= 0.0);
    CHECK(r.released_proportion <= 1.0);
    sum += r.released_proportion;
    sum_sq += r.released_proportion * r.released_proportion;
  }
  const double mean = sum / seeds;
  const double se = std::sqrt((sum_sq / seeds - mean * mean) / seeds);
  CHECK(std::abs(mean - 0.6) < 3.0 * se);
}

TEST_CASE("release keeps only counts, strips labels and is deterministic") {
  const auto data = disjoint_bags(6, 50, 1);
  const PrivacyBudget budget(1.0, 6);
  const auto released = release_private_proportions(data, budget, 9);
  for (const auto& x : released.instances) CHECK_FALSE(x.labeled());
  CHECK(released.metadata.at("privacy.k") == "6");
  const auto again = release_private_proportions(data, budget, 9);
  for (std::size_t j = 0; j < data.bags.size(); ++j) {
    CHECK(released.bags[j].observed_proportion == again.bags[j].observed_proportion);
    CHECK_FALSE(released.bags[j].sample_proportion.has_value());
  }

  // Relabel within each bag while keeping the counts: output is bit-identical.
  BagDataset relabeled = data;
  for (const Bag& bag : relabeled.bags) {
    std::vector<Label> labels = relabeled.member_labels(bag);
    std::reverse(labels.begin(), labels.end());
    for (std::size_t t = 0; t < bag.size(); ++t) {
      const auto& x = relabeled.instances[bag.members[t]];
      relabeled.instances[bag.members[t]] =
          Instance(std::vector<Feature>(x.features().begin(), x.features().end()), labels[t]);
    }
  }
  const auto relabeled_release = release_private_proportions(relabeled, budget, 9);
  for (std::size_t j = 0; j < data.bags.size(); ++j)
    CHECK(relabeled_release.bags[j].observed_proportion == released.bags[j].observed_proportion);

  const auto exact = release_private_proportions(data, PrivacyBudget(kInfinity, 6), 9, true);
  for (std::size_t j = 0; j < data.bags.size(); ++j) {
    CHECK(exact.bags[j].observed_proportion == data.bags[j].observed_proportion);
    CHECK(*exact.bags[j].sample_proportion == data.bags[j].observed_proportion);
  }
}

TEST_CASE("release rejects overlapping bags and mismatched budgets") {
  auto data = disjoint_bags(3, 5, 2);
  CHECK_THROWS_WITH(release_private_proportions(data, PrivacyBudget(1.0, 2), 1),
                    "privacy budget k must equal the number of released bags");
  data.bags[1].members.push_back(data.bags[0].members.front());
  CHECK_THROWS_WITH(release_private_proportions(data, PrivacyBudget(1.0, 3), 1),
                    "disjointness required for stated budget");
}

TEST_CASE("noise is independent across bags") {
  const auto data = disjoint_bags(2, 200, 3);
  const PrivacyBudget budget(2.0, 2);
  const int seeds = 10000;
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (int s = 0; s < seeds; ++s) {
    const auto r = release_private_proportions(data, budget, static_cast<std::uint64_t>(s));
    const double a = r.bags[0].observed_proportion, b = r.bags[1].observed_proportion;
    sa += a, sb += b, saa += a * a, sbb += b * b, sab += a * b;
  }
  const double n = seeds;
  const double cov = sab / n - (sa / n) * (sb / n);
  const double corr = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  CHECK(std::abs(corr) < 4.0 / std::sqrt(n));
}

TEST_CASE("deviation check") {
  const auto exact = deviation_check(1000, 0.4, PrivacyBudget(kInfinity, 10), 1e-9, 1000, 1);
  CHECK(exact.exceedances == 0);

  const PrivacyBudget budget(1.0, 10);
  const auto large = deviation_check(100000, 0.3, budget, 0.01, 10000, 2);
  CHECK(large.exceedance_rate < 0.05);
  const auto small = deviation_check(10, 0.3, budget, 0.01, 10000, 2);
  CHECK(small.exceedance_rate > 0.5);

  // Non-increasing in n and in eta.
  double previous = 1.0;
  for (long n : {10L, 100L, 1000L, 10000L}) {
    const double rate = deviation_check(n, 0.3, budget, 0.01, 4000, 3).exceedance_rate;
    CHECK(rate <= previous + 1e-12);
    previous = rate;
  }
  previous = 1.0;
  for (double eta : {0.1, 1.0, 10.0, 100.0}) {
    const double rate = deviation_check(1000, 0.3, PrivacyBudget(eta, 10), 0.01, 4000, 3).exceedance_rate;
    CHECK(rate <= previous + 1e-12);
    previous = rate;
  }

  CHECK(deviation_check(500, 0.5, budget, 0.02, 3000, 4, 1).exceedances ==
        deviation_check(500, 0.5, budget, 0.02, 3000, 4, 3).exceedances);
}

TEST_CASE("aggregate deviation claim") {
  const auto report = aggregate_deviation_check(2000, 0.3, PrivacyBudget(1.0, 20), 0.02, 0.2, 2000, 5);
  CHECK(report.bound == doctest::Approx(1.0 - std::exp(-2.0 * 20 * 0.04)));
  CHECK(report.passed);
}
