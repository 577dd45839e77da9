#include "llp/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "llp/error.hpp"

namespace llp {

Label label_from_int(int value) {
  if (value == 1) return Label::positive;
  if (value == -1) return Label::negative;
  fail_data("label must be -1 or +1, got " + std::to_string(value));
}

Instance::Instance(std::vector<Feature> features, std::optional<Label> label)
    : features_(std::move(features)), label_(label) {
  std::sort(features_.begin(), features_.end(),
            [](const Feature& a, const Feature& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].index == 0) fail_data("feature indices are 1-based");
    if (i > 0 && features_[i].index == features_[i - 1].index)
      fail_data("duplicate feature index " + std::to_string(features_[i].index));
  }
}

Label Instance::true_label() const {
  if (!label_) fail_data("unlabeled instance");
  return *label_;
}

Instance Instance::without_label() const {
  Instance copy = *this;
  copy.label_.reset();
  return copy;
}

double Instance::value_of(std::uint32_t index) const {
  auto it = std::lower_bound(features_.begin(), features_.end(), index,
                             [](const Feature& f, std::uint32_t i) { return f.index < i; });
  return it != features_.end() && it->index == index ? it->value : 0.0;
}

bool operator==(const Instance& a, const Instance& b) {
  if (a.label_ != b.label_ || a.features_.size() != b.features_.size()) return false;
  for (std::size_t i = 0; i < a.features_.size(); ++i) {
    if (a.features_[i].index != b.features_[i].index || a.features_[i].value != b.features_[i].value)
      return false;
  }
  return true;
}

Bag make_bag(std::vector<std::size_t> members, double observed_proportion, int origin) {
  if (members.empty()) fail_data("empty bag");
  if (!(observed_proportion >= 0.0 && observed_proportion <= 1.0))
    fail_data("proportion out of range");
  Bag bag;
  bag.members = std::move(members);
  bag.observed_proportion = observed_proportion;
  bag.origin = origin;
  return bag;
}

void BagDataset::validate() const {
  for (const Bag& bag : bags) {
    if (bag.members.empty()) fail_data("empty bag");
    if (!(bag.observed_proportion >= 0.0 && bag.observed_proportion <= 1.0))
      fail_data("proportion out of range");
    for (std::size_t m : bag.members)
      if (m >= instances.size()) fail_data("dangling bag member");
  }
}

std::vector<Label> BagDataset::member_labels(const Bag& bag) const {
  std::vector<Label> labels;
  labels.reserve(bag.size());
  for (std::size_t m : bag.members) {
    if (m >= instances.size()) fail_data("dangling bag member");
    labels.push_back(instances[m].true_label());
  }
  return labels;
}

bool BagDataset::bags_disjoint() const {
  std::vector<int> owner(instances.size(), -1);
  for (std::size_t k = 0; k < bags.size(); ++k) {
    for (std::size_t m : bags[k].members) {
      if (m >= instances.size()) fail_data("dangling bag member");
      if (owner[m] >= 0 && owner[m] != static_cast<int>(k)) return false;
      owner[m] = static_cast<int>(k);
    }
  }
  return true;
}

LinearHypothesis::LinearHypothesis(std::vector<double> dense, double bias)
    : weights_(std::move(dense)), bias_(bias) {
  if (!weights_.empty()) weights_[0] = 0.0;
}

void LinearHypothesis::set_weight(std::uint32_t index, double value) {
  if (index == 0) fail_data("feature indices are 1-based");
  if (index >= weights_.size()) weights_.resize(index + 1, 0.0);
  weights_[index] = value;
}

double LinearHypothesis::squared_norm() const {
  double s = 0.0;
  for (double w : weights_) s += w * w;
  return s;
}

double LinearHypothesis::decision_value(const Instance& x) const {
  double s = bias_;
  for (const Feature& f : x.features()) {
    if (f.index < weights_.size()) s += weights_[f.index] * f.value;
  }
  return s;
}

LinearHypothesis LinearHypothesis::negated() const {
  std::vector<double> w = weights_;
  for (double& v : w) v = -v;
  return LinearHypothesis(std::move(w), -bias_);
}

double proportion(std::span<const Label> labels) {
  if (labels.empty()) fail_data("empty bag");
  std::size_t positives = 0;
  for (Label y : labels) positives += (y == Label::positive);
  return static_cast<double>(positives) / static_cast<double>(labels.size());
}

double predict_proportion(const LinearHypothesis& h, const Bag& bag, const BagDataset& data) {
  if (bag.members.empty()) fail_data("empty bag");
  std::size_t positives = 0;
  for (std::size_t m : bag.members) {
    if (m >= data.instances.size()) fail_data("dangling bag member");
    positives += (h.predict(data.instances[m]) == Label::positive);
  }
  return static_cast<double>(positives) / static_cast<double>(bag.size());
}

double proportion_loss(double predicted, double observed, LossKind kind) {
  if (!(predicted >= 0.0 && predicted <= 1.0) || !(observed >= 0.0 && observed <= 1.0))
    fail_data("proportion out of range");
  const double xi = predicted - observed;
  switch (kind) {
    case LossKind::absolute:
      return std::abs(xi);
    case LossKind::squared_clamped:
      return 0.5 * xi * xi;
  }
  return std::abs(xi);
}

double empirical_bag_error(const LinearHypothesis& h, const BagDataset& data, LossKind kind) {
  if (data.bags.empty()) fail_data("dataset has no bags");
  double total = 0.0;
  for (const Bag& bag : data.bags)
    total += proportion_loss(predict_proportion(h, bag, data), bag.observed_proportion, kind);
  return total / static_cast<double>(data.bags.size());
}

double instance_error(const LinearHypothesis& h, std::span<const Instance> instances) {
  if (instances.empty()) fail_data("no instances");
  std::size_t wrong = 0;
  for (const Instance& x : instances) wrong += (h.predict(x) != x.true_label());
  return static_cast<double>(wrong) / static_cast<double>(instances.size());
}

double instance_error(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) fail_usage("prediction/label length mismatch");
  if (truth.empty()) fail_data("no instances");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += (predicted[i] != truth[i]);
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

long round_half_up(double x) { return static_cast<long>(std::floor(x + 0.5)); }

}  // namespace llp
