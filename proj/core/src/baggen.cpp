#include "llp/baggen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "llp/error.hpp"
#include "llp/random.hpp"

namespace llp {

namespace {

void require_labeled(const std::vector<Instance>& pool, const char* what) {
  for (const Instance& x : pool)
    if (!x.labeled()) fail_data(std::string(what) + ": unlabeled instance in pool");
}

void stamp(BagDataset& out, const std::string& generator, std::uint64_t seed) {
  out.metadata["generator"] = generator;
  out.metadata["seed"] = std::to_string(seed);
  out.metadata["rng"] = std::string(Rng::algorithm);
}

// Draws `count` indices from [offset, offset + pool_size).
void draw_members(Rng& rng, std::size_t offset, std::size_t pool_size, std::size_t count,
                  bool with_replacement, std::vector<std::size_t>& out) {
  out.clear();
  if (with_replacement) {
    for (std::size_t j = 0; j < count; ++j) out.push_back(offset + rng.below(pool_size));
    return;
  }
  if (count > pool_size) fail_usage("bag size exceeds pool size for sampling without replacement");
  std::vector<std::size_t> perm(pool_size);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t pick = j + rng.below(pool_size - j);
    std::swap(perm[j], perm[pick]);
    out.push_back(offset + perm[j]);
  }
}

Bag labeled_bag(const BagDataset& data, std::vector<std::size_t> members, int origin) {
  std::vector<Label> labels;
  labels.reserve(members.size());
  for (std::size_t m : members) labels.push_back(data.instances[m].true_label());
  return make_bag(std::move(members), proportion(labels), origin);
}

}  // namespace

BagDataset gen_iid_bags(const std::vector<Instance>& pool, std::size_t bag_count,
                        std::size_t bag_size, std::uint64_t seed, bool with_replacement) {
  if (pool.empty()) fail_usage("gen_iid_bags: empty pool");
  if (bag_count == 0 || bag_size == 0) fail_usage("gen_iid_bags: m and r must be positive");
  require_labeled(pool, "gen_iid_bags");

  BagDataset out;
  out.instances = pool;
  stamp(out, "iid", seed);
  Rng rng(seed);
  std::vector<std::size_t> members;
  out.bags.reserve(bag_count);
  for (std::size_t k = 0; k < bag_count; ++k) {
    draw_members(rng, 0, pool.size(), bag_size, with_replacement, members);
    out.bags.push_back(labeled_bag(out, members, -1));
  }
  return out;
}

BagDataset gen_mixture_bags(const MixtureConfig& config) {
  const auto& comps = config.components;
  if (comps.empty()) fail_usage("gen_mixture_bags: no components");
  if (config.bag_count == 0 || config.bag_size == 0)
    fail_usage("gen_mixture_bags: m and r must be positive");
  double total = 0.0;
  for (const auto& c : comps) {
    if (!(c.prior >= 0.0)) fail_usage("gen_mixture_bags: invalid priors");
    if (c.pool.empty()) fail_usage("gen_mixture_bags: empty component pool");
    require_labeled(c.pool, "gen_mixture_bags");
    total += c.prior;
  }
  if (std::abs(total - 1.0) > 1e-9) fail_usage("gen_mixture_bags: invalid priors (sum != 1)");

  BagDataset out;
  std::vector<std::size_t> offsets;
  for (const auto& c : comps) {
    offsets.push_back(out.instances.size());
    out.instances.insert(out.instances.end(), c.pool.begin(), c.pool.end());
  }
  stamp(out, "mixture", config.seed);
  out.metadata["components"] = std::to_string(comps.size());

  Rng rng(config.seed);
  std::vector<std::size_t> members;
  out.bags.reserve(config.bag_count);
  for (std::size_t k = 0; k < config.bag_count; ++k) {
    std::size_t c = 0;
    if (comps.size() > 1) {
      const double u = rng.uniform();
      double acc = 0.0;
      c = comps.size() - 1;
      for (std::size_t i = 0; i < comps.size(); ++i) {
        acc += comps[i].prior;
        if (u < acc) {
          c = i;
          break;
        }
      }
      while (comps[c].prior == 0.0 && c > 0) --c;
    }
    draw_members(rng, offsets[c], comps[c].pool.size(), config.bag_size, config.with_replacement,
                 members);
    out.bags.push_back(labeled_bag(out, members, static_cast<int>(c)));
  }
  return out;
}

BagDataset gen_kappa_bags(const std::vector<Instance>& pool, const KappaConfig& config) {
  const auto& p = config.pick_probabilities;
  if (pool.size() != p.size()) fail_usage("gen_kappa_bags: pool and probability lengths differ");
  if (pool.empty()) fail_usage("gen_kappa_bags: empty pool");
  for (double pi : p)
    if (!(pi > 0.0 && pi < 1.0)) fail_usage("gen_kappa_bags: pick probability outside (0,1)");
  require_labeled(pool, "gen_kappa_bags");

  BagDataset out;
  out.instances = pool;
  stamp(out, "kappa", config.seed);
  out.metadata["coverage_constant"] = std::to_string(config.coverage_constant);

  Rng rng(config.seed);
  std::size_t redraws = 0;
  std::vector<std::size_t> members;
  for (std::size_t k = 0; k < config.bag_count; ++k) {
    for (;;) {
      members.clear();
      for (std::size_t i = 0; i < p.size(); ++i)
        if (rng.bernoulli(p[i])) members.push_back(i);
      if (!members.empty()) break;
      ++redraws;
    }
    out.bags.push_back(labeled_bag(out, members, -1));
  }
  out.metadata["empty_redraws"] = std::to_string(redraws);
  return out;
}

BagDataset gen_group_bags(const std::vector<Instance>& instances,
                          const std::vector<std::string>& group_of) {
  if (group_of.empty() || instances.empty()) fail_usage("gen_group_bags: empty group map");
  if (group_of.size() != instances.size())
    fail_usage("gen_group_bags: every instance needs a group");
  require_labeled(instances, "gen_group_bags");

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < group_of.size(); ++i) groups[group_of[i]].push_back(i);

  BagDataset out;
  out.instances = instances;
  out.metadata["generator"] = "group";
  int k = 0;
  for (auto& [name, members] : groups) {
    out.metadata["group." + std::to_string(k)] = name;
    out.bags.push_back(labeled_bag(out, std::move(members), k));
    ++k;
  }
  return out;
}

BagDataset gen_population_bags(const std::vector<std::vector<Instance>>& location_pools,
                               const std::vector<double>& population_proportions,
                               std::size_t bag_count, std::size_t bag_size, std::uint64_t seed) {
  if (location_pools.size() != population_proportions.size())
    fail_usage("gen_population_bags: pool/proportion list lengths differ");
  if (location_pools.empty()) fail_usage("gen_population_bags: no locations");
  if (bag_count == 0 || bag_size == 0) fail_usage("gen_population_bags: m and r must be positive");
  for (std::size_t j = 0; j < location_pools.size(); ++j) {
    if (location_pools[j].empty()) fail_usage("gen_population_bags: empty location pool");
    const double p = population_proportions[j];
    if (!(p >= 0.0 && p <= 1.0)) fail_usage("gen_population_bags: population proportion out of range");
  }

  BagDataset out;
  std::vector<std::size_t> offsets;
  bool all_labeled = true;
  for (const auto& pool : location_pools) {
    offsets.push_back(out.instances.size());
    for (const Instance& x : pool) all_labeled = all_labeled && x.labeled();
    out.instances.insert(out.instances.end(), pool.begin(), pool.end());
  }
  stamp(out, "population", seed);

  Rng rng(seed);
  std::vector<std::size_t> members;
  for (std::size_t k = 0; k < bag_count; ++k) {
    const std::size_t loc = location_pools.size() == 1 ? 0 : rng.below(location_pools.size());
    draw_members(rng, offsets[loc], location_pools[loc].size(), bag_size, true, members);
    Bag bag = make_bag(members, population_proportions[loc], static_cast<int>(loc));
    if (all_labeled) bag.sample_proportion = proportion(out.member_labels(bag));
    out.bags.push_back(std::move(bag));
  }
  return out;
}

AdversarialBags gen_adversarial_pure_bags(std::size_t bag_size, double eta, std::size_t bag_count) {
  if (bag_size == 0 || bag_count == 0) fail_usage("gen_adversarial_pure_bags: r and m must be positive");
  const double scaled = eta * static_cast<double>(bag_size);
  const double nearest = std::round(scaled);
  if (!(eta >= 0.0) || 2.0 * eta >= 1.0 || std::abs(scaled - nearest) > 1e-9)
    fail_usage("infeasible purity");
  const auto flipped = static_cast<std::size_t>(nearest);

  AdversarialBags out;
  out.data.metadata["generator"] = "adversarial-pure";
  out.data.metadata["eta"] = std::to_string(eta);
  for (std::size_t k = 0; k < bag_count; ++k) {
    std::vector<std::size_t> members;
    for (std::size_t j = 0; j < bag_size; ++j) {
      Label truth = Label::positive;
      Label predicted = Label::positive;
      if (j < flipped) {
        predicted = Label::negative;  // false negative
      } else if (j < 2 * flipped) {
        truth = Label::negative;  // false positive
      }
      members.push_back(out.data.instances.size());
      out.data.instances.emplace_back(
          std::vector<Feature>{{static_cast<std::uint32_t>(j + 1), 1.0}}, truth);
      out.predictions.push_back(predicted);
    }
    out.data.bags.push_back(labeled_bag(out.data, std::move(members), -1));
  }
  return out;
}

LinearHypothesis one_hot_realizer(const AdversarialBags& bags) {
  LinearHypothesis h;
  for (std::size_t i = 0; i < bags.data.instances.size(); ++i) {
    const auto features = bags.data.instances[i].features();
    h.set_weight(features.front().index, bags.predictions[i] == Label::positive ? 1.0 : -1.0);
  }
  return h;
}

}  // namespace llp
