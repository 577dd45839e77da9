#include "llp/theory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <utility>

#include <boost/math/special_functions/beta.hpp>

#include "llp/error.hpp"
#include "llp/parallel.hpp"
#include "llp/random.hpp"

namespace llp::theory {

namespace {

void require_open_unit(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) fail_usage(std::string(name) + " must lie in (0,1)");
}

double log_choose(long n, long k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double binomial_se(double p, std::size_t n) {
  return n == 0 ? 0.0 : std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace

double bag_sample_complexity_bound(int vc, double r, double epsilon, double delta) {
  require_open_unit(epsilon, "epsilon");
  require_open_unit(delta, "delta");
  if (vc < 1) fail_usage("VC dimension must be >= 1");
  if (!(r >= 1.0)) fail_usage("bag size must be >= 1");
  return 64.0 / (epsilon * epsilon) *
         (2.0 * vc * std::log(12.0 * r / epsilon) + std::log(4.0 / delta));
}

long long bag_sample_complexity(int vc, double r, double epsilon, double delta) {
  return static_cast<long long>(std::ceil(bag_sample_complexity_bound(vc, r, epsilon, delta)));
}

long long supervised_sample_complexity(int vc, double epsilon, double delta) {
  require_open_unit(epsilon, "epsilon");
  require_open_unit(delta, "delta");
  if (vc < 1) fail_usage("VC dimension must be >= 1");
  const double m = 64.0 / (epsilon * epsilon) *
                   (2.0 * vc * std::log(12.0 / epsilon) + std::log(4.0 / delta));
  return static_cast<long long>(std::ceil(m));
}

Guarantee purity_per_bag(double epsilon, double delta, double eta, double rho) {
  Guarantee g;
  g.fraction = 1.0 - 2.0 * eta - epsilon;
  g.confidence = 1.0 - delta - rho;
  g.vacuous = g.fraction <= 0.0 || g.confidence <= 0.0;
  return g;
}

Guarantee purity_multi_bag(const PurityQuery& q) {
  const Guarantee single = purity_per_bag(q.epsilon, q.delta, q.eta, q.rho);
  Guarantee g;
  const double product = single.confidence * single.fraction;
  g.fraction = (1.0 - q.tau) * product;
  g.confidence = -std::expm1(-(q.tau * q.tau / 2.0) * static_cast<double>(q.n_bags) * q.r * product);
  g.vacuous = single.vacuous || g.fraction <= 0.0 || g.confidence <= 0.0;
  return g;
}

BagPurityCheck check_purity_bag(std::span<const Label> truth, std::span<const Label> predicted,
                                double eta, double epsilon) {
  if (truth.size() != predicted.size()) fail_usage("label/prediction length mismatch");
  BagPurityCheck c;
  const double r = static_cast<double>(truth.size());
  const double positives = proportion(truth) * r;
  const double majority = std::max(positives, r - positives);
  c.pure = majority >= (1.0 - eta) * r - kProportionTolerance;
  c.proportion_gap = std::abs(proportion(predicted) - proportion(truth));
  c.correct_fraction = 1.0 - instance_error(predicted, truth);
  const bool premise = c.pure && c.proportion_gap <= epsilon + kProportionTolerance;
  c.lemma_holds = !premise || c.correct_fraction >= 1.0 - 2.0 * eta - epsilon - kProportionTolerance;
  return c;
}

int proportion_slack(int r, double epsilon) {
  return static_cast<int>(std::floor(epsilon * static_cast<double>(r) + 1e-9));
}

double binomial_cdf(long k, long n, double theta) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (theta <= 0.0) return 1.0;
  if (theta >= 1.0) return 0.0;
  // P(X <= k) = I_{1-theta}(n-k, k+1) = 1 - I_theta(k+1, n-k).
  return boost::math::ibetac(static_cast<double>(k + 1), static_cast<double>(n - k), theta);
}

double binom_match_prob(const MatchProbQuery& q) {
  if (q.r < 1) fail_usage("bag size must be >= 1");
  if (!(q.beta >= 0.0 && q.beta <= 1.0)) fail_usage("beta must lie in [0,1]");
  if (!(q.epsilon >= 0.0)) fail_usage("epsilon must be >= 0");
  if (q.beta == 0.0) return 1.0;
  const int slack = proportion_slack(q.r, q.epsilon);
  if (slack >= q.r) return 1.0;

  const double theta1 = q.theta1();
  const double theta2 = q.theta2();
  const double log_theta1 = std::log(theta1);
  const double log_theta2 = std::log(theta2);
  double total = 0.0;
  for (long i = 0; i <= q.r; ++i) {
    const long rest = q.r - i;
    const double bracket =
        binomial_cdf(i + slack, rest, theta2) - binomial_cdf(i - slack - 1, rest, theta2);
    if (bracket <= 0.0) continue;
    const double log_weight =
        q.r * log_theta1 + log_choose(q.r, i) + static_cast<double>(i) * log_theta2;
    total += std::exp(log_weight) * bracket;
  }
  return std::clamp(total, 0.0, 1.0);
}

namespace {

constexpr int kScanPoints = 10000;

MonotoneBranch compute_branch(int r, double epsilon) {
  auto p = [&](double beta) { return binom_match_prob(r, beta, epsilon); };
  // Near beta = 0 with eps > 0 the curve is flat to double precision; only a
  // rise beyond rounding noise ends the decreasing branch.
  constexpr double kRise = 1e-12;
  double previous = p(0.0);
  int rise = -1;
  for (int j = 1; j <= kScanPoints; ++j) {
    const double current = p(static_cast<double>(j) / kScanPoints);
    if (current > previous + kRise) {
      rise = j;
      break;
    }
    previous = current;
  }
  if (rise < 0) return MonotoneBranch{1.0, p(1.0)};

  // Minimum lies in [beta_{rise-2}, beta_{rise}]; bisect on the sign of the
  // central finite-difference slope.
  double lo = std::max(0, rise - 2) / static_cast<double>(kScanPoints);
  double hi = rise / static_cast<double>(kScanPoints);
  const double h = 1e-7;
  for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double a = std::max(0.0, mid - h);
    const double b = std::min(1.0, mid + h);
    if (p(b) - p(a) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double beta = 0.5 * (lo + hi);
  return MonotoneBranch{beta, p(beta)};
}

}  // namespace

MonotoneBranch monotone_branch(int r, double epsilon) {
  if (r < 1) fail_usage("bag size must be >= 1");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) fail_usage("epsilon must lie in [0,1)");
  static std::mutex mutex;
  static std::map<std::pair<int, std::uint64_t>, MonotoneBranch> cache;
  const auto key = std::make_pair(r, std::bit_cast<std::uint64_t>(epsilon));
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const MonotoneBranch branch = compute_branch(r, epsilon);
  std::lock_guard lock(mutex);
  cache.emplace(key, branch);
  return branch;
}

double u_threshold(int r, double epsilon) { return monotone_branch(r, epsilon).u; }

double invert_match_prob(int r, double epsilon, double target_prob) {
  if (!(target_prob <= 1.0)) fail_usage("target probability must be <= 1");
  const MonotoneBranch branch = monotone_branch(r, epsilon);
  if (!(target_prob > branch.u)) fail_usage("outside invertible region");
  if (target_prob == 1.0) return 0.0;
  double lo = 0.0;
  double hi = branch.beta_break;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (binom_match_prob(r, mid, epsilon) > target_prob)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

MixtureBound mixture_purity_bound(int r, double c, std::span<const double> alphas) {
  if (!(c > 0.0)) fail_usage("c must be positive");
  if (r < 1) fail_usage("bag size must be >= 1");
  if (alphas.empty()) fail_usage("need at least one component prior");
  double worst = 0.0;
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) fail_usage("component positive rate must lie in [0,1]");
    worst = std::max(worst, std::min(a, 1.0 - a));
  }
  return MixtureBound{worst + c, -std::expm1(-2.0 * r * c * c)};
}

KappaBound kappa_misclassification_bound(double epsilon, std::span<const double> p) {
  if (p.empty()) fail_usage("need at least one pick probability");
  double sum = 0.0;
  double min_var = std::numeric_limits<double>::infinity();
  bool uniform = true;
  for (double pi : p) {
    if (!(pi > 0.0 && pi < 1.0)) fail_usage("pick probability outside (0,1)");
    sum += pi;
    min_var = std::min(min_var, pi * (1.0 - pi));
    uniform = uniform && pi == p.front();
  }
  const double n = static_cast<double>(p.size());
  KappaBound b;
  b.r_hat = sum;
  b.q = epsilon * epsilon * sum * sum / (n * min_var);
  b.q_times_n = b.q * n;
  if (uniform) b.uniform_constant = 1.0 / (1.0 - p.front());
  return b;
}

KappaTrendReport kappa_trend_verifier(std::span<const Label> truth, std::span<const Label> predicted,
                                      const KappaConfig& config, double epsilon, std::size_t trials,
                                      const KappaTrendOptions& options) {
  const auto& p = config.pick_probabilities;
  if (truth.size() != p.size() || predicted.size() != p.size())
    fail_usage("kappa_trend_verifier: pool and probability lengths differ");
  if (trials == 0) fail_usage("kappa_trend_verifier: trials must be positive");
  const KappaBound bound = kappa_misclassification_bound(epsilon, p);

  std::vector<int> diff(p.size());
  std::size_t misclassified = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    diff[i] = (truth[i] == Label::positive) - (predicted[i] == Label::positive);
    misclassified += diff[i] != 0;
  }

  std::vector<unsigned char> violated(trials, 0);
  std::vector<std::size_t> redraws(trials, 0);
  const Rng base(config.seed);
  parallel_for(trials, options.workers, [&](std::size_t t) {
    Rng rng = base.derive(t);
    for (;;) {
      long picked = 0;
      long signed_sum = 0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (rng.bernoulli(p[i])) {
          ++picked;
          signed_sum += diff[i];
        }
      }
      if (picked == 0) {
        ++redraws[t];
        continue;
      }
      violated[t] = std::abs(static_cast<double>(signed_sum)) > epsilon * static_cast<double>(picked);
      return;
    }
  });

  KappaTrendReport rep;
  rep.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    rep.violations += violated[t];
    rep.empty_redraws += redraws[t];
  }
  rep.violation_rate = static_cast<double>(rep.violations) / static_cast<double>(trials);
  rep.misclassified = misclassified;
  rep.q_times_n = bound.q_times_n;
  rep.dominance = bound.q_times_n > 0.0 ? static_cast<double>(misclassified) / bound.q_times_n
                                        : (misclassified > 0 ? std::numeric_limits<double>::infinity() : 0.0);
  rep.implication_holds =
      rep.dominance < options.dominance_factor || rep.violation_rate >= options.min_violation_rate;
  return rep;
}

KappaTrendReport kappa_trend_verifier(const std::vector<Instance>& pool, const KappaConfig& config,
                                      const LinearHypothesis& h, double epsilon, std::size_t trials,
                                      const KappaTrendOptions& options) {
  std::vector<Label> truth;
  std::vector<Label> predicted;
  for (const Instance& x : pool) {
    truth.push_back(x.true_label());
    predicted.push_back(h.predict(x));
  }
  return kappa_trend_verifier(truth, predicted, config, epsilon, trials, options);
}

long long population_sample_size(double epsilon, double delta) {
  require_open_unit(epsilon, "epsilon");
  require_open_unit(delta, "delta");
  return static_cast<long long>(std::ceil(std::log(2.0 / delta) / (2.0 * epsilon * epsilon)));
}

BagSizeBound expected_bag_size_bound(double average_training_size, long m, double t) {
  if (!(t > 0.0)) fail_usage("t must be positive");
  if (m < 1) fail_usage("m must be >= 1");
  return BagSizeBound{average_training_size - t,
                      -std::expm1(-2.0 * static_cast<double>(m) * t * t)};
}

double markov_epsilon_conversion(double er_d, double delta) {
  if (!(er_d >= 0.0)) fail_usage("generalization error must be >= 0");
  require_open_unit(delta, "delta");
  return er_d / delta;
}

PurityMonteCarloReport verify_purity_guarantee(const PurityQuery& q, std::size_t trials,
                                               std::uint64_t seed, unsigned workers) {
  if (trials == 0) fail_usage("trials must be positive");
  const auto r = static_cast<std::size_t>(std::llround(q.r));
  if (r < 1 || std::abs(q.r - static_cast<double>(r)) > 1e-9)
    fail_usage("the purity simulation needs an integral bag size");

  PurityMonteCarloReport rep;
  rep.bound = purity_multi_bag(q);
  rep.trials = trials;

  // Boundary composition of a good bag: |A1| = floor(eta r) negatives predicted
  // positive, |A2| = |A1| + floor(eps r) positives predicted negative.
  const auto false_pos = static_cast<std::size_t>(std::floor(q.eta * r + 1e-9));
  const std::size_t false_neg =
      std::min(r - false_pos, false_pos + static_cast<std::size_t>(proportion_slack(static_cast<int>(r), q.epsilon)));

  std::vector<double> correct_fraction(trials, 0.0);
  std::vector<std::size_t> lemma_failures(trials, 0);
  const Rng base(seed);
  parallel_for(trials, workers, [&](std::size_t t) {
    Rng rng = base.derive(t);
    std::vector<Label> truth(r);
    std::vector<Label> predicted(r);
    std::size_t correct = 0;
    for (long b = 0; b < q.n_bags; ++b) {
      const bool impure = rng.bernoulli(q.rho);
      const bool mismatched = rng.bernoulli(q.delta);
      if (impure || mismatched) {
        for (std::size_t j = 0; j < r; ++j) {
          truth[j] = rng.bernoulli(0.5) ? Label::positive : Label::negative;
          predicted[j] = flip(truth[j]);
        }
      } else {
        for (std::size_t j = 0; j < r; ++j) {
          if (j < false_pos) {
            truth[j] = Label::negative;
            predicted[j] = Label::positive;
          } else if (j < false_pos + false_neg) {
            truth[j] = Label::positive;
            predicted[j] = Label::negative;
          } else {
            truth[j] = Label::positive;
            predicted[j] = Label::positive;
          }
        }
        const BagPurityCheck check = check_purity_bag(truth, predicted, q.eta, q.epsilon);
        if (!check.lemma_holds) ++lemma_failures[t];
      }
      for (std::size_t j = 0; j < r; ++j) correct += truth[j] == predicted[j];
    }
    correct_fraction[t] =
        static_cast<double>(correct) / (static_cast<double>(q.n_bags) * static_cast<double>(r));
  });

  double sum = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    sum += correct_fraction[t];
    rep.meeting += correct_fraction[t] >= rep.bound.fraction;
    rep.lemma_violations += lemma_failures[t];
  }
  rep.mean_correct_fraction = sum / static_cast<double>(trials);
  rep.share_meeting = static_cast<double>(rep.meeting) / static_cast<double>(trials);
  rep.standard_error = binomial_se(rep.share_meeting, trials);
  rep.passed = rep.lemma_violations == 0 &&
               rep.share_meeting >= rep.bound.confidence - 3.0 * rep.standard_error;
  return rep;
}

MixtureMonteCarloReport verify_mixture_purity(int r, double c, std::span<const double> alphas,
                                              std::size_t m, std::uint64_t seed) {
  MixtureMonteCarloReport rep;
  rep.bound = mixture_purity_bound(r, c, alphas);

  // Pools of 1000 instances with round(1000 alpha) positives; sampling with
  // replacement then yields positives with probability alpha (up to 1e-3).
  constexpr std::size_t kPool = 1000;
  MixtureConfig config;
  config.bag_size = static_cast<std::size_t>(r);
  config.bag_count = m;
  config.seed = seed;
  for (double a : alphas) {
    MixtureComponent comp;
    comp.prior = 1.0 / static_cast<double>(alphas.size());
    const auto positives = static_cast<std::size_t>(std::llround(a * kPool));
    for (std::size_t i = 0; i < kPool; ++i)
      comp.pool.emplace_back(std::vector<Feature>{}, i < positives ? Label::positive : Label::negative);
    config.components.push_back(std::move(comp));
  }
  const BagDataset data = gen_mixture_bags(config);

  for (const Bag& bag : data.bags) {
    const double p = bag.observed_proportion;
    rep.pure_bags += std::max(p, 1.0 - p) >= 1.0 - rep.bound.eta - kProportionTolerance;
  }
  rep.bags = data.bags.size();
  rep.pure_fraction = static_cast<double>(rep.pure_bags) / static_cast<double>(rep.bags);
  rep.standard_error = binomial_se(rep.pure_fraction, rep.bags);
  rep.passed = rep.pure_fraction >= rep.bound.prob_lower - 3.0 * rep.standard_error;
  return rep;
}

BagSizeMonteCarloReport verify_expected_bag_size(std::span<const double> pick_probabilities,
                                                 std::size_t m, double t, std::size_t repetitions,
                                                 std::uint64_t seed, unsigned workers) {
  if (repetitions == 0) fail_usage("repetitions must be positive");
  BagSizeMonteCarloReport rep;
  for (double p : pick_probabilities) rep.r_hat += p;
  rep.repetitions = repetitions;
  rep.confidence = expected_bag_size_bound(rep.r_hat, static_cast<long>(m), t).confidence;

  std::vector<Instance> pool(pick_probabilities.size(), Instance({}, Label::negative));
  std::vector<unsigned char> holds(repetitions, 0);
  const Rng base(seed);
  parallel_for(repetitions, workers, [&](std::size_t i) {
    KappaConfig config;
    config.pick_probabilities.assign(pick_probabilities.begin(), pick_probabilities.end());
    config.bag_count = m;
    config.seed = base.derive(i).next_u64();
    const BagDataset data = gen_kappa_bags(pool, config);
    double total = 0.0;
    for (const Bag& bag : data.bags) total += static_cast<double>(bag.size());
    const double r_bar = total / static_cast<double>(m);
    holds[i] = rep.r_hat > expected_bag_size_bound(r_bar, static_cast<long>(m), t).lower_bound;
  });
  for (unsigned char h : holds) rep.holding += h;
  rep.share_holding = static_cast<double>(rep.holding) / static_cast<double>(repetitions);
  rep.standard_error = binomial_se(rep.share_holding, repetitions);
  rep.passed = rep.share_holding >= rep.confidence - 3.0 * rep.standard_error;
  return rep;
}

}  // namespace llp::theory
