#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "llp/baggen.hpp"
#include "llp/error.hpp"
#include "llp/random.hpp"
#include "llp/solvers.hpp"
#include "support.hpp"

using namespace llp;
using llp::testing::point2;
using llp::testing::separable_pool;

namespace {

constexpr Label P = Label::positive;
constexpr Label N = Label::negative;

// Bags drawn from a separable pool with proportions from their true labels.
BagDataset separable_bags(std::size_t m, std::size_t r, std::uint64_t seed) {
  return gen_iid_bags(separable_pool(400, 0.2, seed), m, r, seed + 1);
}

void check_trace_monotone(const TrainResult& result) {
  REQUIRE_FALSE(result.objective_trace.empty());
  for (std::size_t t = 1; t < result.objective_trace.size(); ++t)
    CHECK(result.objective_trace[t] <= result.objective_trace[t - 1] + 1e-9);
}

double brute_force_cost(std::span<const double> s, const std::vector<Label>& y, double p, double C,
                        double C_p) {
  std::size_t positives = 0;
  for (Label l : y) positives += l == P;
  return C * hinge_cost(s, y) +
         C_p * std::abs(static_cast<double>(positives) / static_cast<double>(y.size()) - p);
}

}  // namespace

TEST_CASE("label_step top-k beats every assignment with the same count (r <= 10)") {
  Rng rng(1, 1);
  for (std::size_t r = 1; r <= 10; ++r) {
    for (int trial = 0; trial < 6; ++trial) {
      std::vector<double> s(r);
      for (double& v : s) v = 4.0 * rng.uniform() - 2.0;
      const double p = static_cast<double>(rng.below(r + 1)) / static_cast<double>(r);
      const double C = 1.0;
      const double C_p = trial < 3 ? 0.05 : 50.0;
      std::vector<Label> chosen(r);
      const LabelStepChoice choice = label_step(s, p, C, C_p, chosen);
      std::size_t positives = 0;
      for (Label l : chosen) positives += l == P;
      CHECK(positives == choice.positives);
      CHECK(brute_force_cost(s, chosen, p, C, C_p) == doctest::Approx(choice.cost).epsilon(1e-12));

      const long k = round_half_up(p * static_cast<double>(r));
      CHECK(std::labs(static_cast<long>(choice.positives) - k) <= 1);
      double best_same_count = 1e300;
      double best_window = 1e300;
      for (unsigned mask = 0; mask < (1u << r); ++mask) {
        std::vector<Label> y(r);
        std::size_t count = 0;
        for (std::size_t i = 0; i < r; ++i) {
          y[i] = (mask >> i) & 1u ? P : N;
          count += (mask >> i) & 1u;
        }
        const double hinge = hinge_cost(s, y);
        if (count == choice.positives) best_same_count = std::min(best_same_count, hinge);
        if (std::labs(static_cast<long>(count) - k) <= 1)
          best_window = std::min(best_window, brute_force_cost(s, y, p, C, C_p));
      }
      CHECK(hinge_cost(s, chosen) <= best_same_count + 1e-12);
      CHECK(choice.cost <= best_window + 1e-12);
    }
  }
}

TEST_CASE("label_step prefers the rounded count on ties and validates input") {
  std::vector<double> s{0.0, 0.0};
  std::vector<Label> y(2);
  // k = round(0.5 * 2) = 1; all three counts cost the same hinge (2), penalty picks k.
  const auto choice = label_step(s, 0.5, 1.0, 1.0, y);
  CHECK(choice.positives == 1);
  std::vector<double> empty;
  std::vector<Label> none;
  CHECK_THROWS(label_step(empty, 0.5, 1.0, 1.0, none));
}

TEST_CASE("mean-map with pure bags recovers the bag means exactly") {
  BagDataset data;
  data.instances = {point2(1, 2, P), point2(3, 4, P), point2(-1, 0, N), point2(-3, 2, N)};
  data.bags = {make_bag({0, 1}, 1.0), make_bag({2, 3}, 0.0)};
  const ClassMeans means = estimate_class_means(data);
  CHECK(means.positive[1] == doctest::Approx(2.0));
  CHECK(means.positive[2] == doctest::Approx(3.0));
  CHECK(means.negative[1] == doctest::Approx(-2.0));
  CHECK(means.negative[2] == doctest::Approx(1.0));
}

TEST_CASE("mean-map rejects equal proportions") {
  BagDataset data;
  data.instances = {point2(1, 2, P), point2(3, 4, N), point2(-1, 0, P), point2(-3, 2, N)};
  data.bags = {make_bag({0, 1}, 0.5), make_bag({2, 3}, 0.5)};
  CHECK_THROWS_WITH(estimate_class_means(data), "degenerate proportions for mean-map");
  TrainConfig config;
  config.solver = Solver::mean_map;
  CHECK_THROWS_WITH(train(data, config), "degenerate proportions for mean-map");
}

TEST_CASE("mean-map recovers the class-mean difference from mixed bags") {
  Rng rng(4, 2);
  std::vector<Instance> positives, negatives;
  for (int i = 0; i < 2000; ++i) {
    positives.push_back(point2(2.0 + rng.uniform() - 0.5, 1.0 + rng.uniform() - 0.5, P));
    negatives.push_back(point2(-1.0 + rng.uniform() - 0.5, 0.5 + rng.uniform() - 0.5, N));
  }
  double dp1 = 0, dp2 = 0, dn1 = 0, dn2 = 0;
  for (const auto& x : positives) dp1 += x.value_of(1), dp2 += x.value_of(2);
  for (const auto& x : negatives) dn1 += x.value_of(1), dn2 += x.value_of(2);
  const double true_diff1 = (dp1 - dn1) / 2000.0;
  const double true_diff2 = (dp2 - dn2) / 2000.0;

  // Bags of 50 at p = 0.2 or 0.8 built from the two pools.
  BagDataset data;
  data.instances = positives;
  data.instances.insert(data.instances.end(), negatives.begin(), negatives.end());
  for (int k = 0; k < 80; ++k) {
    const int pos = k % 2 == 0 ? 10 : 40;
    std::vector<std::size_t> members;
    for (int j = 0; j < pos; ++j) members.push_back(rng.below(2000));
    for (int j = pos; j < 50; ++j) members.push_back(2000 + rng.below(2000));
    data.bags.push_back(make_bag(members, pos / 50.0));
  }
  const ClassMeans means = estimate_class_means(data);
  const double d1 = means.positive[1] - means.negative[1];
  const double d2 = means.positive[2] - means.negative[2];
  const double norm = std::hypot(true_diff1, true_diff2);
  CHECK(std::hypot(d1 - true_diff1, d2 - true_diff2) < 0.1 * norm);

  // Bag order does not matter.
  BagDataset shuffled = data;
  std::reverse(shuffled.bags.begin(), shuffled.bags.end());
  const ClassMeans again = estimate_class_means(shuffled);
  CHECK(again.positive[1] == doctest::Approx(means.positive[1]).epsilon(1e-12));
  CHECK(again.negative[2] == doctest::Approx(means.negative[2]).epsilon(1e-12));

  // Duplicating every member of a bag leaves its mean unchanged.
  BagDataset doubled = data;
  for (Bag& bag : doubled.bags) {
    const auto copy = bag.members;
    bag.members.insert(bag.members.end(), copy.begin(), copy.end());
  }
  const ClassMeans dup = estimate_class_means(doubled);
  CHECK(dup.positive[1] == doctest::Approx(means.positive[1]).epsilon(1e-12));
  CHECK(dup.negative[1] == doctest::Approx(means.negative[1]).epsilon(1e-12));
}

TEST_CASE("prior-matching bias hits the weighted proportion") {
  BagDataset data;
  for (int i = 0; i < 10; ++i) data.instances.push_back(point2(i, 0, i >= 7 ? P : N));
  data.bags = {make_bag({0, 1, 2, 3, 4}, 0.2), make_bag({5, 6, 7, 8, 9}, 0.4)};
  const std::vector<double> w{0.0, 1.0, 0.0};
  const double b = prior_matching_bias(w, data);
  LinearHypothesis h(w, b);
  int positives = 0;
  for (const auto& x : data.instances) positives += h.predict(x) == P;
  CHECK(positives == 3);
}

TEST_CASE("inv-cal: single positive bag and separable bag means") {
  BagDataset single;
  single.instances = {point2(1.0, 0.5, P), point2(0.5, 1.0, P)};
  single.bags = {make_bag({0, 1}, 1.0)};
  TrainConfig config;
  config.solver = Solver::inv_cal;
  const auto one = train(single, config);
  CHECK(one.hypothesis.predict(point2(0.75, 0.75, P)) == P);

  BagDataset two;
  for (int i = 0; i < 5; ++i) two.instances.push_back(point2(1.0 + 0.1 * i, 1.0, P));
  for (int i = 0; i < 5; ++i) two.instances.push_back(point2(-1.0 - 0.1 * i, -1.0, N));
  two.bags = {make_bag({0, 1, 2, 3, 4}, 1.0), make_bag({5, 6, 7, 8, 9}, 0.0)};
  const auto fit = train(two, config);
  CHECK(fit.final_bag_error < 0.1);
}

TEST_CASE("inv-cal regression: duplicated points equal one point of double weight") {
  Rng rng(8, 3);
  std::vector<RegressionPoint> base, duplicated, weighted;
  for (int k = 0; k < 12; ++k) {
    RegressionPoint pt{{0.0, rng.uniform(), rng.uniform(), rng.uniform()}, 2.0 * rng.uniform() - 1.0, 1.0};
    base.push_back(pt);
    duplicated.push_back(pt);
    weighted.push_back(pt);
    if (k % 3 == 0) {
      duplicated.push_back(pt);
      weighted.back().weight = 2.0;
    }
  }
  const auto a = fit_insensitive_regression(duplicated, 1.0, 0.05, 1e-9, 20000, 1);
  const auto b = fit_insensitive_regression(weighted, 1.0, 0.05, 1e-9, 20000, 2);
  for (std::uint32_t j = 1; j <= 3; ++j) CHECK(a.weight(j) == doctest::Approx(b.weight(j)).epsilon(1e-6));
  CHECK(a.bias() == doctest::Approx(b.bias()).epsilon(1e-6));
}

TEST_CASE("alter-psvm on pure separable bags finds a separator") {
  const auto pool = separable_pool(300, 0.3, 5);
  std::vector<Instance> pos, neg;
  for (const auto& x : pool) (x.true_label() == P ? pos : neg).push_back(x);
  MixtureConfig mix;
  mix.components = {{0.5, pos}, {0.5, neg}};
  mix.bag_size = 10;
  mix.bag_count = 60;
  mix.seed = 6;
  const auto data = gen_mixture_bags(mix);
  TrainConfig config;
  config.C = 10.0;
  config.C_p = 1.0;
  const auto result = train(data, config);
  CHECK(instance_error(result.hypothesis, pool) == 0.0);
  CHECK(result.final_bag_error == 0.0);
  check_trace_monotone(result);
}

TEST_CASE("alter-psvm objective trace is non-increasing on mixed bags") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto data = separable_bags(40, 10, seed);
    for (double C_p : {0.01, 1.0}) {
      TrainConfig config;
      config.C = 1.0;
      config.C_p = C_p;
      config.seed = seed;
      config.restarts = 3;
      const auto result = train(data, config);
      check_trace_monotone(result);
      CHECK(result.latent_labels.size() == 400);
      CHECK(result.outer_iterations >= 1);
    }
  }
}

TEST_CASE("alter-psvm can match symmetric bags with a useless hypothesis") {
  // Every bag is one +1 and one -1 at mirrored points: any hypothesis that
  // predicts one member of each pair positive has zero bag error.
  BagDataset data;
  Rng rng(9, 4);
  for (int k = 0; k < 30; ++k) {
    const double a = rng.uniform() + 0.1, b = rng.uniform();
    data.instances.push_back(point2(a, b, P));
    data.instances.push_back(point2(-a, -b, N));
    data.bags.push_back(make_bag({data.instances.size() - 2, data.instances.size() - 1}, 0.5));
  }
  TrainConfig config;
  config.restarts = 3;
  const auto result = train(data, config);
  CHECK(result.final_bag_error < 0.05);
  check_trace_monotone(result);
}

TEST_CASE("alter-psvm with singleton bags reduces to the supervised SVM") {
  const auto pool = separable_pool(200, 0.05, 12);
  BagDataset data;
  data.instances = pool;
  for (std::size_t i = 0; i < pool.size(); ++i)
    data.bags.push_back(make_bag({i}, pool[i].true_label() == P ? 1.0 : 0.0));
  TrainConfig config;
  config.C = 1.0;
  config.C_p = 1000.0;
  config.restarts = 1;
  config.inner_tolerance = 1e-6;
  config.inner_max_epochs = 5000;
  const auto result = train(data, config);
  CHECK(result.latent_labels == llp::testing::labels_of(pool));
  const auto supervised = train_supervised_svm(pool, 1.0, 1e-6, 5000, 3);
  for (std::uint32_t j = 1; j <= 2; ++j)
    CHECK(result.hypothesis.weight(j) == doctest::Approx(supervised.weight(j)).epsilon(1e-3));
  CHECK(result.hypothesis.bias() == doctest::Approx(supervised.bias()).epsilon(1e-3));
}

TEST_CASE("baseline solver is not a hypothesis solver") {
  const auto data = separable_bags(5, 5, 1);
  TrainConfig config;
  config.solver = Solver::baseline;
  CHECK_THROWS(train(data, config));
}

TEST_CASE("solver names round-trip") {
  for (Solver s : {Solver::alter_psvm, Solver::mean_map, Solver::inv_cal, Solver::baseline})
    CHECK(solver_from_string(to_string(s)) == s);
  for (Init i : {Init::mean_map, Init::inv_cal, Init::random}) CHECK(init_from_string(to_string(i)) == i);
  CHECK_THROWS(solver_from_string("svm"));
}

TEST_CASE("baseline majority rule") {
  std::vector<Instance> xs;
  std::vector<std::string> groups;
  // Group a: 3/5 positive. Group b: 1/2. Group c: 1/4.
  const std::vector<std::pair<std::string, std::vector<Label>>> spec{
      {"a", {P, P, P, N, N}}, {"b", {P, N}}, {"c", {P, N, N, N}}};
  for (const auto& [g, labels] : spec)
    for (Label l : labels) {
      xs.push_back(point2(0, 0, l));
      groups.push_back(g);
    }
  const auto bags = gen_group_bags(xs, groups);
  const auto baseline = train_baseline(bags);
  CHECK(baseline.predict("a") == P);
  CHECK(baseline.predict("b") == N);
  CHECK(baseline.predict("c") == N);
  bool fallback = false;
  CHECK(baseline.predict("zzz", &fallback) == N);
  CHECK(fallback);

  double constant_positive = 0.0;
  for (const Bag& bag : bags.bags) constant_positive += 1.0 - bag.observed_proportion;
  constant_positive /= static_cast<double>(bags.bags.size());
  CHECK(baseline_bag_error(baseline, bags) <= constant_positive);
}

TEST_CASE("cross-validation evaluates the whole grid and returns its argmin") {
  const auto data = separable_bags(30, 10, 21);
  const std::vector<double> Cs{10.0, 0.1, 1.0};
  const std::vector<double> Cps{1.0, 0.01, 0.1};
  TrainConfig base;
  base.restarts = 2;
  const auto cv = cross_validate(data, Cs, Cps, 5, 3, base);
  REQUIRE(cv.scores.size() == 9);
  for (std::size_t g = 1; g < cv.scores.size(); ++g) {
    const auto& a = cv.scores[g - 1];
    const auto& b = cv.scores[g];
    CHECK((a.C < b.C || (a.C == b.C && a.C_p < b.C_p)));
  }
  for (const auto& s : cv.scores) {
    if (s.C == cv.best.C && s.C_p == cv.best.C_p) continue;
    const auto& chosen = *std::find_if(cv.scores.begin(), cv.scores.end(), [&](const GridScore& g) {
      return g.C == cv.best.C && g.C_p == cv.best.C_p;
    });
    CHECK(chosen.mean_heldout_error <= s.mean_heldout_error);
  }

  const std::vector<double> oneC{0.5}, oneCp{0.25};
  const auto single = cross_validate(data, oneC, oneCp, 3, 3, base);
  CHECK(single.best.C == 0.5);
  CHECK(single.best.C_p == 0.25);

  const auto serial = cross_validate(data, Cs, Cps, 5, 3, base, 1);
  const auto threaded = cross_validate(data, Cs, Cps, 5, 3, base, 4);
  for (std::size_t g = 0; g < 9; ++g)
    CHECK(serial.scores[g].mean_heldout_error == threaded.scores[g].mean_heldout_error);

  const auto tiny = separable_bags(3, 5, 2);
  CHECK_THROWS(cross_validate(tiny, Cs, Cps, 5, 3, base));
}
