#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "llp/core.hpp"

namespace llp {

enum class Solver { alter_psvm, mean_map, inv_cal, baseline };
enum class Init { mean_map, inv_cal, random };

const char* to_string(Solver s);
const char* to_string(Init i);
Solver solver_from_string(const std::string& s);
Init init_from_string(const std::string& s);

struct TrainConfig {
  Solver solver = Solver::alter_psvm;
  double C = 1.0;    // hinge-loss weight
  double C_p = 1.0;  // proportion-penalty weight
  /// Initializer when restarts == 1. With restarts >= 2 the runs are
  /// mean-map, inv-cal, then restarts-2 random starts.
  Init init = Init::mean_map;
  int restarts = 2;
  int max_outer_iters = 50;
  /// Stopping tolerance of the inner dual coordinate-descent solves.
  double inner_tolerance = 0.1;
  int inner_max_epochs = 300;
  /// Half-width of the insensitive zone of the inverse-calibration regression.
  double insensitivity = 0.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  LinearHypothesis hypothesis;
  double final_bag_error = 0.0;
  /// Joint objective after every half-step of the alternating solver.
  std::vector<double> objective_trace;
  /// Latent label of every bag-member slot, bags in order (alter-psvm only).
  std::vector<Label> latent_labels;
  double wall_time = 0.0;  // seconds
  std::vector<std::string> warnings;
  Init initializer = Init::mean_map;  // restart that won (alter-psvm)
  int outer_iterations = 0;
};

// --- building blocks, exposed for testing --------------------------------

struct ClassMeans {
  std::vector<double> positive;  // dense, index = feature index
  std::vector<double> negative;
};

/// Least-squares class means from bag means: mean_k ~ p_k mu+ + (1-p_k) mu-.
/// Throws "degenerate proportions for mean-map" when all p_k coincide.
ClassMeans estimate_class_means(const BagDataset& data);

/// Bias making round(pi * N) of the N training slots positive, where pi is the
/// size-weighted average bag proportion.
double prior_matching_bias(const std::vector<double>& weights, const BagDataset& data);

struct RegressionPoint {
  std::vector<double> x;  // dense, index = feature index
  double target = 0.0;
  double weight = 1.0;
};

/// min 1/2 (|w|^2 + b^2) + C sum_k weight_k max(0, |w.x_k + b - t_k| - insensitivity),
/// solved in the dual by coordinate descent.
LinearHypothesis fit_insensitive_regression(std::span<const RegressionPoint> points, double C,
                                            double insensitivity, double tolerance, int max_epochs,
                                            std::uint64_t seed);

struct LabelStepChoice {
  std::size_t positives = 0;
  double cost = 0.0;
};

/// Label update for one bag at fixed (w,b): the top-k' members by decision
/// value become +1 for the best k' in {k-1, k, k+1} (k = round(p r)),
/// weighing C * hinge cost against C_p * |k'/r - p|. `labels` is written in
/// member order.
LabelStepChoice label_step(std::span<const double> decision_values, double observed_proportion,
                           double C, double C_p, std::span<Label> labels);

/// Hinge cost sum_i max(0, 1 - y_i s_i).
double hinge_cost(std::span<const double> decision_values, std::span<const Label> labels);

/// Standard soft-margin linear SVM on labeled instances (same inner solver).
LinearHypothesis train_supervised_svm(std::span<const Instance> instances, double C,
                                      double tolerance = 0.1, int max_epochs = 300,
                                      std::uint64_t seed = 0);

// --- solvers --------------------------------------------------------------

TrainResult train_mean_map(const BagDataset& data, const TrainConfig& config);
TrainResult train_inv_cal(const BagDataset& data, const TrainConfig& config);
TrainResult train_alter_psvm(const BagDataset& data, const TrainConfig& config);
/// Dispatches on config.solver (baseline is not a LinearHypothesis solver).
TrainResult train(const BagDataset& data, const TrainConfig& config);

/// Per-group majority rule: +1 iff the training group proportion is > 0.5.
struct BaselinePredictor {
  std::map<std::string, Label> group_label;
  Label fallback = Label::negative;  // global majority of the training bags

  /// Unseen groups use the fallback and set *used_fallback when given.
  Label predict(const std::string& group, bool* used_fallback = nullptr) const;
};

/// Expects group bags as produced by gen_group_bags (metadata group.<k>).
BaselinePredictor train_baseline(const BagDataset& group_bags);

/// Training bag error of the baseline (absolute loss).
double baseline_bag_error(const BaselinePredictor& baseline, const BagDataset& group_bags);

struct GridScore {
  double C = 0.0;
  double C_p = 0.0;
  double mean_heldout_error = 0.0;
};

struct CrossValidationResult {
  TrainConfig best;
  std::vector<GridScore> scores;  // grid order: C ascending, then C_p ascending
};

/// k-fold over bags; minimizes mean held-out bag proportion error (absolute
/// loss). Ties go to smaller C, then smaller C_p.
CrossValidationResult cross_validate(const BagDataset& data, std::span<const double> C_grid,
                                     std::span<const double> C_p_grid, int folds,
                                     std::uint64_t seed, const TrainConfig& base,
                                     unsigned workers = 1);

}  // namespace llp
