#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace llp {

/// Absolute tolerance used whenever two proportions are compared.
inline constexpr double kProportionTolerance = 1e-9;

enum class Label : std::int8_t { negative = -1, positive = 1 };

inline int to_int(Label y) { return static_cast<int>(y); }
inline Label flip(Label y) { return y == Label::positive ? Label::negative : Label::positive; }
/// Accepts exactly -1 or +1.
Label label_from_int(int value);

struct Feature {
  std::uint32_t index;  // 1-based
  double value;
};

/// Sparse feature vector plus an optional hidden ground-truth label.
/// Features are kept sorted by index; indices are positive and unique.
class Instance {
 public:
  Instance() = default;
  explicit Instance(std::vector<Feature> features, std::optional<Label> label = std::nullopt);

  std::span<const Feature> features() const { return features_; }
  std::optional<Label> label() const { return label_; }
  bool labeled() const { return label_.has_value(); }
  /// Throws "unlabeled instance" when no label is attached.
  Label true_label() const;
  Instance without_label() const;
  std::uint32_t max_index() const { return features_.empty() ? 0 : features_.back().index; }
  double value_of(std::uint32_t index) const;

  friend bool operator==(const Instance& a, const Instance& b);

 private:
  std::vector<Feature> features_;
  std::optional<Label> label_;
};

struct Bag {
  std::vector<std::size_t> members;  // indices into BagDataset::instances, repeats allowed
  double observed_proportion = 0.0;
  /// Component, location or group the bag was drawn from; -1 when not applicable.
  int origin = -1;
  /// Realized proportion of the members when observed_proportion is a released
  /// population value or a privatized one.
  std::optional<double> sample_proportion;

  std::size_t size() const { return members.size(); }
};

/// Validating constructor: non-empty members, proportion in [0,1].
Bag make_bag(std::vector<std::size_t> members, double observed_proportion, int origin = -1);

struct BagDataset {
  std::vector<Instance> instances;
  std::vector<Bag> bags;
  std::map<std::string, std::string> metadata;

  /// Throws "dangling bag member" or a bag-invariant error.
  void validate() const;
  /// True labels of the members of one bag, in member order.
  std::vector<Label> member_labels(const Bag& bag) const;
  bool bags_disjoint() const;
};

/// h(x) = sign(w.x + b) with sign(0) = +1.
class LinearHypothesis {
 public:
  LinearHypothesis() = default;
  /// dense[i] is the weight of feature i; dense[0] is ignored.
  LinearHypothesis(std::vector<double> dense, double bias);

  double weight(std::uint32_t index) const {
    return index < weights_.size() ? weights_[index] : 0.0;
  }
  void set_weight(std::uint32_t index, double value);
  double bias() const { return bias_; }
  void set_bias(double b) { bias_ = b; }
  std::span<const double> dense() const { return weights_; }
  double squared_norm() const;

  double decision_value(const Instance& x) const;
  Label predict(const Instance& x) const {
    return decision_value(x) >= 0.0 ? Label::positive : Label::negative;
  }
  LinearHypothesis negated() const;

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
};

enum class LossKind { absolute, squared_clamped };

/// Fraction of +1 labels. Throws "empty bag" on an empty list.
double proportion(std::span<const Label> labels);

/// Proportion of +1 predictions of h over the bag members.
double predict_proportion(const LinearHypothesis& h, const Bag& bag, const BagDataset& data);

/// |a-b| or (a-b)^2/2; both 1-Lipschitz on [0,1]^2.
double proportion_loss(double predicted, double observed, LossKind kind);

/// Mean proportion loss over all bags of the dataset.
double empirical_bag_error(const LinearHypothesis& h, const BagDataset& data,
                           LossKind kind = LossKind::absolute);

/// Fraction of instances whose prediction differs from the true label.
double instance_error(const LinearHypothesis& h, std::span<const Instance> instances);
double instance_error(std::span<const Label> predicted, std::span<const Label> truth);

/// Half-up rounding to the nearest integer.
long round_half_up(double x);

}  // namespace llp
