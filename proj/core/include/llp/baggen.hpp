#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "llp/core.hpp"

namespace llp {

struct MixtureComponent {
  double prior = 0.0;
  std::vector<Instance> pool;
};

struct MixtureConfig {
  std::vector<MixtureComponent> components;
  std::size_t bag_size = 1;
  std::size_t bag_count = 1;
  std::uint64_t seed = 0;
  bool with_replacement = true;
};

struct KappaConfig {
  std::vector<double> pick_probabilities;
  std::size_t bag_count = 1;
  std::uint64_t seed = 0;
  /// Recorded only; the assumed bound min_i p_i >= R / n.
  double coverage_constant = 1.0;
};

/// m bags of r members drawn uniformly from the pool.
BagDataset gen_iid_bags(const std::vector<Instance>& pool, std::size_t bag_count,
                        std::size_t bag_size, std::uint64_t seed, bool with_replacement = true);

/// Each bag first picks component i with probability prior_i, then draws r
/// members from that component's pool. Bag::origin holds the component.
BagDataset gen_mixture_bags(const MixtureConfig& config);

/// Every bag includes instance i independently with probability p_i. Empty
/// draws are redrawn; metadata["empty_redraws"] counts them.
BagDataset gen_kappa_bags(const std::vector<Instance>& pool, const KappaConfig& config);

/// One bag per distinct group id (ordered by id) holding exactly its members.
/// metadata["group.<k>"] names the group of bag k.
BagDataset gen_group_bags(const std::vector<Instance>& instances,
                          const std::vector<std::string>& group_of);

/// Bags drawn from a uniformly chosen location pool whose observed proportion
/// is the released population proportion of that location. The realized
/// member proportion is kept in Bag::sample_proportion.
BagDataset gen_population_bags(const std::vector<std::vector<Instance>>& location_pools,
                               const std::vector<double>& population_proportions,
                               std::size_t bag_count, std::size_t bag_size, std::uint64_t seed);

struct AdversarialBags {
  BagDataset data;
  /// Fixed prediction per instance, parallel to data.instances.
  std::vector<Label> predictions;
};

/// Bags of size r that are (1-eta)-pure, predicted with zero proportion error
/// while 2*eta*r members of each bag are misclassified. Instance j of a bag
/// carries the single feature j+1, so one_hot_realizer() turns the prediction
/// table into a linear hypothesis.
AdversarialBags gen_adversarial_pure_bags(std::size_t bag_size, double eta, std::size_t bag_count);

/// Linear hypothesis on the one-hot embedding that reproduces the adversarial
/// prediction table.
LinearHypothesis one_hot_realizer(const AdversarialBags& bags);

}  // namespace llp
