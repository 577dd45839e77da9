#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "llp/baggen.hpp"
#include "llp/core.hpp"

namespace llp::theory {

// ---------------------------------------------------------------------------
// Bag sample complexity

/// (64/eps^2) * (2*vc*ln(12r/eps) + ln(4/delta)), before rounding up.
/// r may be the average training bag size when bag sizes vary.
double bag_sample_complexity_bound(int vc, double r, double epsilon, double delta);
/// Smallest sufficient number of training bags.
long long bag_sample_complexity(int vc, double r, double epsilon, double delta);
/// The r = 1 specialization, written out independently.
long long supervised_sample_complexity(int vc, double epsilon, double delta);

// ---------------------------------------------------------------------------
// Purity guarantees

struct Guarantee {
  double fraction = 0.0;
  double confidence = 0.0;
  bool vacuous = false;
};

/// Single bag: correct fraction >= 1-2eta-eps with probability >= 1-delta-rho.
Guarantee purity_per_bag(double epsilon, double delta, double eta, double rho);

struct PurityQuery {
  double epsilon = 0.1;
  double delta = 0.05;
  double eta = 0.1;
  double rho = 0.05;
  double tau = 0.1;
  long n_bags = 1000;
  double r = 10;  // fixed or expected bag size
};

/// Over n bags: fraction (1-tau)(1-delta-rho)(1-2eta-eps) with confidence
/// 1 - exp(-(tau^2/2) n r (1-delta-rho)(1-2eta-eps)).
Guarantee purity_multi_bag(const PurityQuery& q);

struct BagPurityCheck {
  bool pure = false;            // at least (1-eta) of the labels agree
  double proportion_gap = 0.0;  // |predicted proportion - true proportion|
  double correct_fraction = 0.0;
  /// pure && gap <= eps  implies  correct_fraction >= 1-2eta-eps.
  bool lemma_holds = false;
};

/// Deterministic per-bag check of the single-bag purity lemma.
BagPurityCheck check_purity_bag(std::span<const Label> truth, std::span<const Label> predicted,
                                double eta, double epsilon);

// ---------------------------------------------------------------------------
// Matched-prior bag match probability

struct MatchProbQuery {
  int r = 1;
  double beta = 0.0;
  double epsilon = 0.0;

  double theta1() const { return (2.0 - beta) / 2.0; }
  double theta2() const { return beta / (2.0 - beta); }
};

/// floor(eps * r) with 1e-9 slack so that exact products such as 0.3 * 10
/// land on the intended integer.
int proportion_slack(int r, double epsilon);

/// CDF of Binomial(n, theta) at k, with F(k; 0, theta) = 1 for k >= 0 and
/// F = 0 for k < 0. Uses the regularized incomplete beta function.
double binomial_cdf(long k, long n, double theta);

/// P(|phi - f| <= eps) for iid instances, a hypothesis with error rate beta
/// and matched priors.
double binom_match_prob(const MatchProbQuery& q);
inline double binom_match_prob(int r, double beta, double epsilon) {
  return binom_match_prob(MatchProbQuery{r, beta, epsilon});
}

struct MonotoneBranch {
  double beta_break = 1.0;  // end of the strictly decreasing branch starting at beta = 0
  double u = 0.0;           // match probability at beta_break
};

/// Scans beta on a 10^4-point grid, then refines the first slope sign change
/// by bisection. Results are cached per (r, eps).
MonotoneBranch monotone_branch(int r, double epsilon);
double u_threshold(int r, double epsilon);

/// Inverse of binom_match_prob in beta on the monotone branch (bisection to
/// 1e-12 in beta). Throws "outside invertible region" when target <= u.
double invert_match_prob(int r, double epsilon, double target_prob);

// ---------------------------------------------------------------------------
// Mixture purity

struct MixtureBound {
  double eta = 0.0;
  double prob_lower = 0.0;
};

MixtureBound mixture_purity_bound(int r, double c, std::span<const double> alphas);

// ---------------------------------------------------------------------------
// kappa-model

struct KappaBound {
  double q = 0.0;
  double r_hat = 0.0;      // sum of p_i (expected bag size)
  double q_times_n = 0.0;  // the O(qn) misclassification scale
  /// For uniform p = r_hat/n: q*n = uniform_constant * eps^2 * r_hat * n with
  /// uniform_constant = 1/(1-p). Zero when probabilities are not uniform.
  double uniform_constant = 0.0;
};

KappaBound kappa_misclassification_bound(double epsilon, std::span<const double> pick_probabilities);

struct KappaTrendReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double violation_rate = 0.0;
  std::size_t misclassified = 0;
  double q_times_n = 0.0;
  double dominance = 0.0;  // misclassified / (q n)
  std::size_t empty_redraws = 0;
  /// misclassified >= dominance_factor * q n implies violation_rate >= min_violation_rate.
  bool implication_holds = true;
};

struct KappaTrendOptions {
  double dominance_factor = 10.0;
  double min_violation_rate = 0.05;
  unsigned workers = 0;
};

/// Monte-Carlo rate of |sum kappa_i (y_i - h_i)| > eps * sum kappa_i with
/// labels and predictions read as 0/1.
KappaTrendReport kappa_trend_verifier(const std::vector<Instance>& pool, const KappaConfig& config,
                                      const LinearHypothesis& h, double epsilon, std::size_t trials,
                                      const KappaTrendOptions& options = {});
KappaTrendReport kappa_trend_verifier(std::span<const Label> truth, std::span<const Label> predicted,
                                      const KappaConfig& config, double epsilon, std::size_t trials,
                                      const KappaTrendOptions& options = {});

// ---------------------------------------------------------------------------
// Variable bag size, population proportions, Markov conversion

/// ceil(ln(2/delta) / (2 eps^2)).
long long population_sample_size(double epsilon, double delta);

struct BagSizeBound {
  double lower_bound = 0.0;
  double confidence = 0.0;
};

/// r_hat > r_bar - t with probability >= 1 - exp(-2 m t^2).
BagSizeBound expected_bag_size_bound(double average_training_size, long m, double t);

/// eps'' = er_D / delta.
double markov_epsilon_conversion(double er_d, double delta);

// ---------------------------------------------------------------------------
// Monte-Carlo verifiers. Every trial uses its own derived random stream, so
// totals do not depend on the worker count.

struct PurityMonteCarloReport {
  Guarantee bound;
  std::size_t trials = 0;
  std::size_t meeting = 0;         // draws whose correct fraction >= bound.fraction
  double share_meeting = 0.0;
  double standard_error = 0.0;     // binomial SE of share_meeting
  double mean_correct_fraction = 0.0;
  std::size_t lemma_violations = 0;  // per-bag lemma failures (must be 0)
  bool passed = false;             // share >= confidence - 3 SE and no lemma violation
};

/// Simulates datasets of n bags of r instances at the boundary of the lemma
/// hypotheses: a bag is impure with probability rho and badly predicted with
/// probability delta (all members wrong); otherwise it is (1-eta)-pure with
/// exactly floor(eps r) proportion slack and the fewest correct members the
/// lemma allows.
PurityMonteCarloReport verify_purity_guarantee(const PurityQuery& q, std::size_t trials,
                                               std::uint64_t seed, unsigned workers = 0);

struct MixtureMonteCarloReport {
  MixtureBound bound;
  std::size_t bags = 0;
  std::size_t pure_bags = 0;
  double pure_fraction = 0.0;
  double standard_error = 0.0;
  bool passed = false;  // pure_fraction >= prob_lower - 3 SE
};

/// Draws m mixture bags whose component pools have positive rates alphas and
/// counts (1-eta)-pure bags.
MixtureMonteCarloReport verify_mixture_purity(int r, double c, std::span<const double> alphas,
                                              std::size_t m, std::uint64_t seed);

struct BagSizeMonteCarloReport {
  double r_hat = 0.0;
  std::size_t repetitions = 0;
  std::size_t holding = 0;  // draws with r_hat > r_bar - t
  double share_holding = 0.0;
  double confidence = 0.0;
  double standard_error = 0.0;
  bool passed = false;
};

/// Repeats kappa-model dataset draws of m bags and checks r_hat > r_bar - t.
BagSizeMonteCarloReport verify_expected_bag_size(std::span<const double> pick_probabilities,
                                                 std::size_t m, double t, std::size_t repetitions,
                                                 std::uint64_t seed, unsigned workers = 0);

}  // namespace llp::theory
