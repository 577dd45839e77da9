#include <cmath>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "doctest.h"
#include "llp/error.hpp"
#include "llp/random.hpp"
#include "llp/theory.hpp"

using namespace llp;
using namespace llp::theory;

namespace {

using BigFloat = boost::multiprecision::cpp_dec_float_50;

// Every instance is independently a false positive (beta/2), a false negative
// (beta/2) or correct (1 - beta); the proportions match within floor(eps r)
// iff the two error counts differ by at most that slack.
double enumerate_outcomes(int r, double beta, double epsilon) {
  const int slack = proportion_slack(r, epsilon);
  const double probs[3] = {beta / 2.0, beta / 2.0, 1.0 - beta};
  long total_sequences = 1;
  for (int i = 0; i < r; ++i) total_sequences *= 3;
  double total = 0.0;
  for (long code = 0; code < total_sequences; ++code) {
    long c = code;
    int fp = 0, fn = 0;
    double p = 1.0;
    for (int i = 0; i < r; ++i) {
      const int outcome = static_cast<int>(c % 3);
      c /= 3;
      p *= probs[outcome];
      fp += outcome == 0;
      fn += outcome == 1;
    }
    if (std::abs(fp - fn) <= slack) total += p;
  }
  return total;
}

// Same event summed over error-count pairs with exact multinomial weights.
double bivariate_oracle(int r, double beta, double epsilon) {
  const int slack = proportion_slack(r, epsilon);
  const BigFloat half_beta = BigFloat(beta) / 2;
  const BigFloat correct = 1 - BigFloat(beta);
  BigFloat total = 0;
  std::vector<BigFloat> factorial(r + 1);
  factorial[0] = 1;
  for (int i = 1; i <= r; ++i) factorial[i] = factorial[i - 1] * i;
  for (int fp = 0; fp <= r; ++fp)
    for (int fn = 0; fp + fn <= r; ++fn) {
      if (std::abs(fp - fn) > slack) continue;
      total += factorial[r] / (factorial[fp] * factorial[fn] * factorial[r - fp - fn]) *
               pow(half_beta, fp + fn) * pow(correct, r - fp - fn);
    }
  return total.convert_to<double>();
}

long long big_sample_complexity(int vc, double r, double epsilon, double delta) {
  const BigFloat e(epsilon), d(delta), rr(r);
  const BigFloat m = 64 / (e * e) * (2 * BigFloat(vc) * log(12 * rr / e) + log(4 / d));
  return ceil(m).convert_to<long long>();
}

}  // namespace

TEST_CASE("sample complexity matches the high-precision oracle") {
  Rng rng(31, 1);
  for (int t = 0; t < 100; ++t) {
    const int vc = 1 + static_cast<int>(rng.below(200));
    const double r = 1.0 + 999.0 * rng.uniform();
    const double epsilon = 0.01 + 0.98 * rng.uniform();
    const double delta = 0.001 + 0.998 * rng.uniform();
    CHECK(bag_sample_complexity(vc, r, epsilon, delta) == big_sample_complexity(vc, r, epsilon, delta));
  }
}

TEST_CASE("sample complexity at r = 1 is the supervised bound and grows with log r") {
  for (int vc : {1, 10, 124})
    for (double eps : {0.05, 0.1, 0.3})
      CHECK(bag_sample_complexity(vc, 1.0, eps, 0.05) == supervised_sample_complexity(vc, eps, 0.05));

  const int vc = 124;
  const double eps = 0.1;
  const double m1 = bag_sample_complexity_bound(vc, 10, eps, 0.05);
  const double m2 = bag_sample_complexity_bound(vc, 20, eps, 0.05);
  const double m4 = bag_sample_complexity_bound(vc, 40, eps, 0.05);
  const double step = 64.0 / (eps * eps) * 2.0 * vc * std::log(2.0);
  CHECK(m2 - m1 == doctest::Approx(step).epsilon(1e-10));
  // Second difference in ln r vanishes.
  CHECK(std::abs((m4 - m2) - (m2 - m1)) < 1e-6 * m1);
  CHECK(bag_sample_complexity(vc + 1, 10, eps, 0.05) > bag_sample_complexity(vc, 10, eps, 0.05));
  CHECK(bag_sample_complexity(vc, 11, eps, 0.05) > bag_sample_complexity(vc, 10, eps, 0.05));
  CHECK_THROWS(bag_sample_complexity(vc, 10, 0.0, 0.05));
  CHECK_THROWS(bag_sample_complexity(vc, 0.5, 0.1, 0.05));
  CHECK(bag_sample_complexity(7, 3.5, 0.2, 0.1) == bag_sample_complexity(7, 3.5, 0.2, 0.1));
}

TEST_CASE("purity guarantees") {
  const Guarantee single = purity_per_bag(0.1, 0.05, 0.1, 0.05);
  CHECK(single.fraction == doctest::Approx(0.7));
  CHECK(single.confidence == doctest::Approx(0.9));
  CHECK_FALSE(single.vacuous);
  const Guarantee perfect = purity_per_bag(0, 0, 0, 0);
  CHECK(perfect.fraction == 1.0);
  CHECK(perfect.confidence == 1.0);
  CHECK(purity_per_bag(0.1, 0.05, 0.5, 0.05).vacuous);

  PurityQuery q;  // eps 0.1, delta 0.05, eta 0.1, rho 0.05, tau 0.1, n 1000, r 10
  const Guarantee multi = purity_multi_bag(q);
  CHECK(multi.fraction == doctest::Approx(0.9 * 0.9 * 0.7));
  CHECK(multi.confidence == doctest::Approx(1.0 - std::exp(-0.005 * 1000 * 10 * 0.9 * 0.7)));
  q.tau = 1e-9;
  const Guarantee limit = purity_multi_bag(q);
  CHECK(limit.fraction == doctest::Approx(0.63));
  CHECK(limit.confidence < 1e-9);
}

TEST_CASE("per-bag purity checker") {
  using L = Label;
  // 10 labels, 8 positive: 0.8-pure. Two false negatives and two false positives.
  std::vector<L> truth{L::positive, L::positive, L::negative, L::negative, L::positive,
                       L::positive, L::positive, L::positive, L::positive, L::positive};
  std::vector<L> predicted{L::negative, L::negative, L::positive, L::positive, L::positive,
                           L::positive, L::positive, L::positive, L::positive, L::positive};
  const auto check = check_purity_bag(truth, predicted, 0.2, 0.0);
  CHECK(check.pure);
  CHECK(check.proportion_gap == 0.0);
  CHECK(check.correct_fraction == doctest::Approx(0.6));
  CHECK(check.lemma_holds);
  CHECK_FALSE(check_purity_bag(truth, predicted, 0.1, 0.0).pure);
}

TEST_CASE("match probability special cases") {
  CHECK(binom_match_prob(7, 0.0, 0.1) == 1.0);
  for (double beta : {0.1, 0.37, 0.5, 0.9}) CHECK(binom_match_prob(1, beta, 0.0) == doctest::Approx(1.0 - beta).epsilon(1e-14));
  // Slack 9 of 10: only all-false-positive or all-false-negative bags miss.
  CHECK(binom_match_prob(10, 0.4, 0.95) == doctest::Approx(1.0 - 2.0 * std::pow(0.2, 10)).epsilon(1e-14));
  CHECK(binom_match_prob(10, 0.4, 1.0) == 1.0);
  const MatchProbQuery q{10, 0.3, 0.1};
  CHECK(q.theta1() == doctest::Approx(0.85));
  CHECK(q.theta2() == doctest::Approx(0.3 / 1.7));
  CHECK(proportion_slack(10, 0.3) == 3);
  CHECK(binomial_cdf(-1, 5, 0.3) == 0.0);
  CHECK(binomial_cdf(0, 0, 0.3) == 1.0);
  CHECK(binomial_cdf(2, 5, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("match probability equals exhaustive enumeration for small bags") {
  for (int r = 1; r <= 8; ++r)
    for (double beta : {0.05, 0.35, 0.65, 0.95})
      for (double eps : {0.0, 0.1, 0.3})
        CHECK(std::abs(binom_match_prob(r, beta, eps) - enumerate_outcomes(r, beta, eps)) < 1e-10);
}

TEST_CASE("match probability equals the bivariate oracle up to r = 200") {
  for (int r : {20, 50, 120, 200})
    for (double beta : {0.1, 0.5, 0.9})
      for (double eps : {0.0, 0.1})
        CHECK(std::abs(binom_match_prob(r, beta, eps) - bivariate_oracle(r, beta, eps)) < 1e-10);
}

TEST_CASE("match probability is non-decreasing in epsilon") {
  for (int r : {1, 5, 10, 50})
    for (double beta = 0.05; beta < 1.0; beta += 0.1) {
      double previous = 0.0;
      for (double eps = 0.0; eps < 1.0; eps += 0.05) {
        const double p = binom_match_prob(r, beta, eps);
        CHECK(p >= previous - 1e-15);
        previous = p;
      }
    }
}

TEST_CASE("u threshold and inversion") {
  CHECK(u_threshold(1, 0.0) == 0.0);
  CHECK(u_threshold(10, 0.1) <= u_threshold(20, 0.1));
  CHECK(u_threshold(20, 0.1) <= u_threshold(50, 0.1));
  CHECK(u_threshold(50, 0.0) <= u_threshold(50, 0.05));
  CHECK(u_threshold(50, 0.05) <= u_threshold(50, 0.1));

  CHECK(invert_match_prob(1, 0.0, 0.8) == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(invert_match_prob(10, 0.1, 1.0) == 0.0);
  const double beta = invert_match_prob(50, 0.1, 0.99);
  CHECK(std::abs(binom_match_prob(50, beta, 0.1) - 0.99) < 1e-8);
  CHECK_THROWS_WITH(invert_match_prob(50, 0.1, u_threshold(50, 0.1)), "outside invertible region");

  for (int r : {5, 10, 50}) {
    const MonotoneBranch branch = monotone_branch(r, 0.0);
    for (double b = 0.02; b < branch.beta_break; b += 0.05) {
      const double p = binom_match_prob(r, b, 0.0);
      if (p <= branch.u) continue;
      CHECK(invert_match_prob(r, 0.0, p) == doctest::Approx(b).epsilon(1e-8));
    }
  }
}

TEST_CASE("mixture purity bound") {
  const std::vector<double> alphas{0.1, 0.9};
  const MixtureBound b = mixture_purity_bound(100, 0.1, alphas);
  CHECK(b.eta == doctest::Approx(0.2));
  CHECK(b.prob_lower == doctest::Approx(1.0 - std::exp(-2.0)));
  const std::vector<double> pure{0.0, 1.0};
  const MixtureBound tiny = mixture_purity_bound(100, 1e-6, pure);
  CHECK(tiny.eta < 1e-5);
  CHECK(tiny.prob_lower < 1e-9);

  const auto mc = verify_mixture_purity(100, 0.2, alphas, 5000, 4);
  CHECK(mc.passed);
  CHECK(mc.bags == 5000);
}

TEST_CASE("kappa misclassification bound") {
  const std::vector<double> p(1000, 0.01);
  const KappaBound b = kappa_misclassification_bound(0.1, p);
  CHECK(b.q == doctest::Approx(0.01 * 100.0 / (1000.0 * 0.0099)));
  CHECK(b.r_hat == doctest::Approx(10.0));
  // q n = eps^2 r_hat n / (1 - p) under uniform p = r_hat / n.
  CHECK(b.q_times_n == doctest::Approx(b.uniform_constant * 0.01 * b.r_hat * 1000.0));
  CHECK(kappa_misclassification_bound(0.0, p).q == 0.0);
  std::vector<double> mixed{0.1, 0.2};
  CHECK(kappa_misclassification_bound(0.1, mixed).uniform_constant == 0.0);
}

TEST_CASE("kappa trend verifier") {
  const std::size_t n = 1000;
  Rng rng(5, 5);
  std::vector<Label> truth(n), wrong(n);
  for (std::size_t i = 0; i < n; ++i) {
    truth[i] = rng.bernoulli(0.4) ? Label::positive : Label::negative;
    wrong[i] = rng.bernoulli(0.3) ? flip(truth[i]) : truth[i];
  }
  KappaConfig config;
  config.pick_probabilities.assign(n, 0.02);
  config.seed = 6;
  const auto perfect = kappa_trend_verifier(truth, truth, config, 0.01, 2000);
  CHECK(perfect.violation_rate == 0.0);
  const auto bad = kappa_trend_verifier(truth, wrong, config, 0.01, 10000);
  CHECK(bad.violation_rate > 0.1);
  CHECK(bad.implication_holds);
  const auto loose = kappa_trend_verifier(truth, wrong, config, 0.9, 2000);
  CHECK(loose.violation_rate < 0.01);

  KappaTrendOptions serial;
  serial.workers = 1;
  KappaTrendOptions threaded;
  threaded.workers = 4;
  CHECK(kappa_trend_verifier(truth, wrong, config, 0.05, 500, serial).violations ==
        kappa_trend_verifier(truth, wrong, config, 0.05, 500, threaded).violations);
}

TEST_CASE("population size, bag-size bound and Markov conversion") {
  CHECK(population_sample_size(0.05, 0.05) == 738);
  CHECK(population_sample_size(0.025, 0.05) == doctest::Approx(4 * std::log(40.0) / 0.005).epsilon(1e-3));
  CHECK_THROWS(population_sample_size(0.05, 2.0));

  const BagSizeBound b = expected_bag_size_bound(20.0, 1000, 0.5);
  CHECK(b.lower_bound == 19.5);
  CHECK(b.confidence == doctest::Approx(1.0));
  CHECK(expected_bag_size_bound(20.0, 1000, 1e-9).confidence < 1e-6);

  CHECK(markov_epsilon_conversion(0.01, 0.1) == doctest::Approx(0.1));
  CHECK(markov_epsilon_conversion(0.0, 0.3) == 0.0);
  CHECK(markov_epsilon_conversion(0.02, 1.0 - 1e-12) == doctest::Approx(0.02));

  const std::vector<double> p(500, 0.04);
  const auto mc = verify_expected_bag_size(p, 1000, 0.5, 200, 3);
  CHECK(mc.passed);
}

TEST_CASE("purity Monte-Carlo meets the multi-bag guarantee") {
  PurityQuery q;
  const auto report = verify_purity_guarantee(q, 100, 9);
  CHECK(report.lemma_violations == 0);
  CHECK(report.passed);
  CHECK(report.mean_correct_fraction >= report.bound.fraction);
}
