#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "llp/core.hpp"
#include "llp/io.hpp"
#include "llp/solvers.hpp"

namespace llp {

enum class Experiment { learning_curve, group_table, bound_sweep, privacy_sweep };

const char* to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);

/// The five census grouping attributes, in table order.
const std::vector<std::string>& census_attributes();

/// 7 log-spaced totals from 500 to 50,000, rounded to integers.
std::vector<std::size_t> default_budgets();

struct ExperimentConfig {
  Experiment experiment = Experiment::learning_curve;
  std::string dataset_path;
  std::string groups_path;
  /// Learning curve: mixture component attribute (generator = mixture).
  /// Privacy sweep: the attribute whose groups become the released bags.
  std::optional<std::string> grouping_attribute;
  /// Group table: attributes to tabulate (defaults to census_attributes()).
  std::vector<std::string> attributes;
  std::string generator = "iid";  // iid | mixture
  std::vector<std::size_t> bag_sizes{10, 100, 500};
  /// Total training-instance budgets; bag count = budget / bag size.
  std::vector<std::size_t> budgets = default_budgets();
  /// When non-empty, replaces budgets: the grid is bag_counts x bag_sizes.
  std::vector<std::size_t> bag_counts;
  double split_fraction = 0.8;
  int runs = 5;
  /// New train/test split per run (true) or one split shared by all runs.
  bool vary_split = true;
  std::uint64_t seed = 0;
  TrainConfig train;
  std::vector<double> C_grid{0.1, 1.0, 10.0};
  std::vector<double> C_p_grid{0.01, 0.1, 1.0};
  int folds = 5;
  /// Privacy sweep.
  std::vector<double> privacy_etas{0.1, 1.0, 10.0};
  double privacy_theta = 0.01;
  std::size_t privacy_trials = 10000;
  /// Bound sweep.
  std::vector<int> sweep_r{1, 5, 10, 50};
  std::vector<double> sweep_epsilons{0.0, 0.05, 0.1, 0.2, 0.3};
  double sweep_beta_step = 0.01;
  std::vector<int> sweep_u_r{1, 2, 5, 10, 20, 50, 100};
  std::string output_dir = ".";
  unsigned workers = 1;

  /// Throws a usage error naming the offending key.
  void validate() const;
};

/// Flat "section.key" -> value view; the config file and CLI flags both
/// feed it and it is converted in one place.
using ConfigMap = std::map<std::string, std::string>;

/// INI-style "key = value" with [section] headers.
ConfigMap parse_config_text(const std::string& text, const std::string& source = "<config>");
ConfigMap load_config_file(const std::string& path);
/// Unknown keys are usage errors. Missing keys keep their defaults.
ExperimentConfig config_from_map(const ConfigMap& map, bool validate = true);
/// Canonical text of the config (sorted keys); hashed into the manifest.
std::string canonical_config(const ExperimentConfig& config);
/// FNV-1a 64-bit, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

struct ResultRow {
  std::string experiment;
  std::string generator;   // iid | mixture:<attr> | group:<attr>
  std::size_t budget = 0;  // 0 when not applicable
  std::size_t bag_count = 0;
  std::size_t bag_size = 0;  // 0 when bags have varying sizes
  int run = -1;              // -1 on summary rows
  std::string kind = "run";  // run | mean | std
  double C = 0.0;
  double C_p = 0.0;
  double train_bag_error = 0.0;
  double test_instance_error = 0.0;
  double baseline_error = 0.0;
  double wall_time = 0.0;
};

/// Column order of every result CSV; wall_time is always last.
const std::vector<std::string>& result_columns();
void write_result_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_result_csv(std::istream& in);

/// Appends one mean row and one std row (sample standard deviation) per
/// consecutive block of run rows sharing everything but the run index.
std::vector<ResultRow> with_summaries(const std::vector<ResultRow>& run_rows);

/// Loaded dataset plus grouping map, shared by the data-driven experiments.
struct CensusData {
  std::vector<Instance> instances;
  GroupMapping groups;
};
CensusData load_census(const ExperimentConfig& config);

/// Throws when a bag member maps to an instance outside split.train.
/// `origin[i]` is the dataset index of position i of data.instances.
void audit_split(const BagDataset& data, const std::vector<std::size_t>& origin, const Split& split);

std::vector<ResultRow> run_learning_curve(const ExperimentConfig& config, const CensusData& census);
std::vector<ResultRow> run_group_table(const ExperimentConfig& config, const CensusData& census);

struct BoundRow {
  std::string panel;  // eps0 | eps0.1 | r50 | u
  int r = 0;
  double epsilon = 0.0;
  double beta = 0.0;        // NaN-free: 0 on u rows
  double match_prob = 0.0;  // u on u rows
  double u = 0.0;
  bool invertible = false;  // match_prob > u
  double recovered_beta = 0.0;  // invert_match_prob(match_prob), when invertible
};

std::vector<BoundRow> run_bound_sweep(const ExperimentConfig& config);
void write_bound_csv(std::ostream& out, const std::vector<BoundRow>& rows);

struct PrivacyRow {
  double eta = 0.0;
  int run = 0;
  std::size_t bags = 0;
  double nonprivate_test_error = 0.0;
  double private_test_error = 0.0;
  double utility_loss = 0.0;  // private - nonprivate
  double theta = 0.0;
  std::size_t bags_exceeding_theta = 0;
  double mean_abs_deviation = 0.0;
  /// deviation_check exceedance at the mean bag size and proportion.
  double simulated_exceedance = 0.0;
  double wall_time = 0.0;
};

std::vector<PrivacyRow> run_privacy_sweep(const ExperimentConfig& config, const CensusData& census);
void write_privacy_csv(std::ostream& out, const std::vector<PrivacyRow>& rows);

/// Runs the configured experiment, writes <experiment>.csv (plus panel files
/// for the bound sweep) and manifest.json into config.output_dir. Returns the
/// written paths.
std::vector<std::string> run_experiment(const ExperimentConfig& config);

}  // namespace llp
