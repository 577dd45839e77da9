#pragma once

#include <cstdint>

#include "llp/core.hpp"
#include "llp/random.hpp"

namespace llp::privacy {

/// Total privacy parameter eta split evenly over k disjoint count releases.
///
/// The Laplace density (lambda/2) e^{-lambda |x|} is parameterized by a rate
/// lambda; this module works with the scale 1/lambda. Each count has
/// sensitivity 1 and receives rate eta/k, i.e. scale k/eta, so a larger budget
/// means less noise. An infinite eta releases exact counts.
class PrivacyBudget {
 public:
  PrivacyBudget(double eta_total, long k);

  double eta_total() const { return eta_total_; }
  long k() const { return k_; }
  double per_query_epsilon() const { return eta_total_ / static_cast<double>(k_); }
  double noise_scale() const { return static_cast<double>(k_) / eta_total_; }

 private:
  double eta_total_;
  long k_;
};

/// Inverse CDF of Laplace(0, scale) at u in (0,1); exactly 0 at u = 0.5.
double laplace_inverse_cdf(double u, double scale);

/// One Laplace(0, scale) draw; scale must be positive.
double laplace_sample(double scale, Rng& rng);

struct PerturbedCounts {
  long n_plus_true = 0;
  long n_minus_true = 0;
  double n_plus_released = 0.0;
  double n_minus_released = 0.0;
  double unclamped_proportion = 0.5;
  double released_proportion = 0.5;  // clamped to [0,1]
  /// Set when the released total is <= 0 or the true total is 0; the
  /// proportion is then reported as 0.5.
  bool degenerate = false;
  std::uint64_t seed = 0;
};

/// Adds independent Laplace noise of scale k/eta to both counts.
PerturbedCounts perturb_counts(long n_plus, long n_minus, const PrivacyBudget& budget, Rng& rng);
PerturbedCounts perturb_counts(long n_plus, long n_minus, const PrivacyBudget& budget,
                               std::uint64_t seed);

/// Copy of the dataset with every bag proportion replaced by its released
/// value and all true labels stripped. Bags must be pairwise disjoint and
/// budget.k() must equal the bag count. Noise for bag j comes from
/// Rng(seed).derive(j). The exact proportion is kept in Bag::sample_proportion
/// of the *returned* dataset only when keep_exact is set (for evaluation).
BagDataset release_private_proportions(const BagDataset& data, const PrivacyBudget& budget,
                                       std::uint64_t seed, bool keep_exact = false);

struct DeviationReport {
  long n = 0;
  double proportion = 0.0;
  double theta = 0.0;
  std::size_t trials = 0;
  std::size_t exceedances = 0;
  double exceedance_rate = 0.0;  // empirical P(X > theta)
  std::size_t degenerate = 0;
};

/// Simulates X = |(n+ + g1)/(n + g1 + g2) - n+/n| with n+ = round(proportion n).
DeviationReport deviation_check(long n, double proportion, const PrivacyBudget& budget,
                                double theta, std::size_t trials, std::uint64_t seed,
                                unsigned workers = 0);

struct AggregateDeviationReport {
  double delta = 0.0;   // per-set exceedance probability used (empirical)
  double slack = 0.0;   // extra fraction allowed beyond delta
  double bound = 0.0;   // 1 - exp(-2 k slack^2)
  std::size_t trials = 0;
  std::size_t within = 0;  // trials where at most (delta + slack) k sets exceed theta
  double share_within = 0.0;
  double standard_error = 0.0;
  bool passed = false;  // share_within >= bound - 3 SE
};

/// Checks the aggregate claim over k sets of n instances each: with
/// probability >= 1 - exp(-2 k slack^2), all but a fraction delta + slack of
/// the released proportions are within theta of the exact ones.
AggregateDeviationReport aggregate_deviation_check(long n, double proportion,
                                                   const PrivacyBudget& budget, double theta,
                                                   double slack, std::size_t trials,
                                                   std::uint64_t seed, unsigned workers = 0);

}  // namespace llp::privacy
