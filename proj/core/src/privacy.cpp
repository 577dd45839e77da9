#include "llp/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "llp/error.hpp"
#include "llp/parallel.hpp"

namespace llp::privacy {

PrivacyBudget::PrivacyBudget(double eta_total, long k) : eta_total_(eta_total), k_(k) {
  if (!(eta_total > 0.0)) fail_usage("privacy parameter must be positive");
  if (k < 1) fail_usage("number of released sets must be >= 1");
}

double laplace_inverse_cdf(double u, double scale) {
  if (!(u > 0.0 && u < 1.0)) fail_usage("laplace_inverse_cdf needs u in (0,1)");
  const double centered = u - 0.5;
  if (centered == 0.0) return 0.0;
  const double magnitude = -scale * std::log1p(-2.0 * std::abs(centered));
  return centered < 0.0 ? -magnitude : magnitude;
}

double laplace_sample(double scale, Rng& rng) {
  if (!(scale > 0.0)) fail_usage("Laplace scale must be positive");
  return laplace_inverse_cdf(rng.uniform_open(), scale);
}

namespace {

double noise(double scale, Rng& rng) { return scale > 0.0 ? laplace_sample(scale, rng) : 0.0; }

void finish(PerturbedCounts& c) {
  const double total = c.n_plus_released + c.n_minus_released;
  if (c.n_plus_true + c.n_minus_true == 0 || !(total > 0.0)) {
    c.degenerate = true;
    c.unclamped_proportion = 0.5;
    c.released_proportion = 0.5;
    return;
  }
  c.unclamped_proportion = c.n_plus_released / total;
  c.released_proportion = std::clamp(c.unclamped_proportion, 0.0, 1.0);
}

}  // namespace

PerturbedCounts perturb_counts(long n_plus, long n_minus, const PrivacyBudget& budget, Rng& rng) {
  if (n_plus < 0 || n_minus < 0) fail_usage("counts must be non-negative");
  PerturbedCounts c;
  c.n_plus_true = n_plus;
  c.n_minus_true = n_minus;
  const double scale = budget.noise_scale();
  c.n_plus_released = static_cast<double>(n_plus) + noise(scale, rng);
  c.n_minus_released = static_cast<double>(n_minus) + noise(scale, rng);
  finish(c);
  return c;
}

PerturbedCounts perturb_counts(long n_plus, long n_minus, const PrivacyBudget& budget,
                               std::uint64_t seed) {
  Rng rng(seed);
  PerturbedCounts c = perturb_counts(n_plus, n_minus, budget, rng);
  c.seed = seed;
  return c;
}

BagDataset release_private_proportions(const BagDataset& data, const PrivacyBudget& budget,
                                       std::uint64_t seed, bool keep_exact) {
  data.validate();
  if (!data.bags_disjoint()) fail_usage("disjointness required for stated budget");
  if (budget.k() != static_cast<long>(data.bags.size()))
    fail_usage("privacy budget k must equal the number of released bags");

  BagDataset out;
  out.instances.reserve(data.instances.size());
  for (const Instance& x : data.instances) out.instances.push_back(x.without_label());
  out.metadata = data.metadata;
  out.metadata["privacy.eta"] = std::to_string(budget.eta_total());
  out.metadata["privacy.k"] = std::to_string(budget.k());
  out.metadata["privacy.scale"] = std::to_string(budget.noise_scale());
  out.metadata["privacy.seed"] = std::to_string(seed);

  const Rng base(seed);
  for (std::size_t j = 0; j < data.bags.size(); ++j) {
    const Bag& bag = data.bags[j];
    long n_plus = 0;
    for (Label y : data.member_labels(bag)) n_plus += y == Label::positive;
    const long n_minus = static_cast<long>(bag.size()) - n_plus;
    Rng rng = base.derive(j);
    const PerturbedCounts c = perturb_counts(n_plus, n_minus, budget, rng);
    Bag released = bag;
    released.observed_proportion = c.released_proportion;
    released.sample_proportion.reset();
    if (keep_exact) released.sample_proportion = static_cast<double>(n_plus) / bag.size();
    out.bags.push_back(std::move(released));
  }
  return out;
}

namespace {

double deviation(long n_plus, long n, double g1, double g2) {
  return std::abs((static_cast<double>(n_plus) + g1) / (static_cast<double>(n) + g1 + g2) -
                  static_cast<double>(n_plus) / static_cast<double>(n));
}

}  // namespace

DeviationReport deviation_check(long n, double proportion, const PrivacyBudget& budget,
                                double theta, std::size_t trials, std::uint64_t seed,
                                unsigned workers) {
  if (n < 1) fail_usage("n must be >= 1");
  if (!(proportion >= 0.0 && proportion <= 1.0)) fail_usage("proportion out of range");
  if (trials == 0) fail_usage("trials must be positive");
  const long n_plus = round_half_up(proportion * static_cast<double>(n));
  const double scale = budget.noise_scale();

  std::vector<unsigned char> exceeded(trials, 0);
  std::vector<unsigned char> degenerate(trials, 0);
  const Rng base(seed);
  parallel_for(trials, workers, [&](std::size_t t) {
    Rng rng = base.derive(t);
    const double g1 = noise(scale, rng);
    const double g2 = noise(scale, rng);
    if (!(static_cast<double>(n) + g1 + g2 > 0.0)) {
      degenerate[t] = 1;
      exceeded[t] = 1;
      return;
    }
    exceeded[t] = deviation(n_plus, n, g1, g2) > theta;
  });

  DeviationReport rep;
  rep.n = n;
  rep.proportion = proportion;
  rep.theta = theta;
  rep.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    rep.exceedances += exceeded[t];
    rep.degenerate += degenerate[t];
  }
  rep.exceedance_rate = static_cast<double>(rep.exceedances) / static_cast<double>(trials);
  return rep;
}

AggregateDeviationReport aggregate_deviation_check(long n, double proportion,
                                                   const PrivacyBudget& budget, double theta,
                                                   double slack, std::size_t trials,
                                                   std::uint64_t seed, unsigned workers) {
  if (!(slack > 0.0)) fail_usage("slack must be positive");
  const Rng base(seed);
  AggregateDeviationReport rep;
  rep.delta = deviation_check(n, proportion, budget, theta, trials, base.derive(0).next_u64(), workers)
                  .exceedance_rate;
  rep.slack = slack;
  const long k = budget.k();
  rep.bound = -std::expm1(-2.0 * static_cast<double>(k) * slack * slack);
  rep.trials = trials;

  const long n_plus = round_half_up(proportion * static_cast<double>(n));
  const double scale = budget.noise_scale();
  const double allowed = (rep.delta + slack) * static_cast<double>(k);
  const Rng sets = base.derive(1);
  std::vector<unsigned char> within(trials, 0);
  parallel_for(trials, workers, [&](std::size_t t) {
    Rng rng = sets.derive(t);
    long exceed = 0;
    for (long j = 0; j < k; ++j) {
      const double g1 = noise(scale, rng);
      const double g2 = noise(scale, rng);
      const double total = static_cast<double>(n) + g1 + g2;
      exceed += !(total > 0.0) || deviation(n_plus, n, g1, g2) > theta;
    }
    within[t] = static_cast<double>(exceed) <= allowed;
  });
  for (unsigned char w : within) rep.within += w;
  rep.share_within = static_cast<double>(rep.within) / static_cast<double>(trials);
  rep.standard_error = std::sqrt(rep.share_within * (1.0 - rep.share_within) / static_cast<double>(trials));
  rep.passed = rep.share_within >= rep.bound - 3.0 * rep.standard_error;
  return rep;
}

}  // namespace llp::privacy
