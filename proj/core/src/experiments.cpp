#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/version.hpp>
#include <nlohmann/json.hpp>

#include "llp/baggen.hpp"
#include "llp/error.hpp"
#include "llp/harness.hpp"
#include "llp/parallel.hpp"
#include "llp/privacy.hpp"
#include "llp/random.hpp"
#include "llp/theory.hpp"

#ifndef LLP_VERSION
#define LLP_VERSION "0.0.0"
#endif

namespace llp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Streams of the experiment seed; each purpose gets its own stream id.
enum Stream : std::uint64_t { kSplit = 1, kBags = 2, kSolver = 3, kFolds = 4, kNoise = 5, kSim = 6 };

std::uint64_t sub_seed(std::uint64_t seed, Stream stream, std::uint64_t a, std::uint64_t b = 0) {
  return Rng(seed, stream).derive(a).derive(b).next_u64();
}

Split split_for_run(const ExperimentConfig& config, std::size_t n, int run) {
  const auto id = static_cast<std::uint64_t>(config.vary_split ? run : 0);
  return split_indices(n, config.split_fraction, sub_seed(config.seed, kSplit, id));
}

// Constant predictor from the pooled training proportion.
double majority_test_error(const BagDataset& bags, const std::vector<Instance>& test) {
  double positives = 0.0, total = 0.0;
  for (const Bag& b : bags.bags) {
    positives += b.observed_proportion * static_cast<double>(b.size());
    total += static_cast<double>(b.size());
  }
  const Label y = positives / total > 0.5 ? Label::positive : Label::negative;
  std::size_t wrong = 0;
  for (const Instance& x : test) wrong += x.true_label() != y;
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

// (C, C_p) by cross-validation, or the configured values when the bags are
// too few to hold any out.
TrainConfig tuned(const ExperimentConfig& config, const BagDataset& bags, std::uint64_t fold_seed) {
  TrainConfig base = config.train;
  if (config.train.solver != Solver::alter_psvm && config.train.solver != Solver::inv_cal) return base;
  if (config.C_grid.size() * config.C_p_grid.size() == 1) {
    base.C = config.C_grid.front();
    base.C_p = config.C_p_grid.front();
    return base;
  }
  const int folds = static_cast<int>(std::min<std::size_t>(config.folds, bags.bags.size()));
  if (folds < 2) return base;
  return cross_validate(bags, config.C_grid, config.C_p_grid, folds, fold_seed, base, 1).best;
}

struct GroupPools {
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> members;  // positions in the training subset
};

GroupPools group_pools(const std::vector<Instance>& train, const GroupMapping& mapping,
                       const std::string& attribute) {
  const std::vector<std::string> group_of = assign_groups(train, mapping, attribute);
  std::map<std::string, std::vector<std::size_t>> by_name;
  for (std::size_t i = 0; i < group_of.size(); ++i) by_name[group_of[i]].push_back(i);
  GroupPools out;
  for (auto& [name, members] : by_name) {
    out.names.push_back(name);
    out.members.push_back(std::move(members));
  }
  return out;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

CensusData load_census(const ExperimentConfig& config) {
  CensusData out;
  out.instances = load_sparse_dataset(config.dataset_path);
  if (!config.groups_path.empty()) out.groups = load_group_mapping(config.groups_path);
  return out;
}

void audit_split(const BagDataset& data, const std::vector<std::size_t>& origin, const Split& split) {
  if (origin.size() != data.instances.size()) fail_usage("audit_split: origin map has the wrong length");
  const std::set<std::size_t> train(split.train.begin(), split.train.end());
  for (const Bag& b : data.bags)
    for (std::size_t m : b.members)
      if (!train.count(origin[m]))
        fail_data("split audit: instance " + std::to_string(origin[m]) + " is not in the training split");
}

std::vector<ResultRow> run_learning_curve(const ExperimentConfig& config, const CensusData& census) {
  config.validate();
  const bool mixture = config.generator == "mixture";
  struct Cell {
    std::size_t budget, bag_count, bag_size;
  };
  std::vector<Cell> cells;
  if (!config.bag_counts.empty()) {
    for (std::size_t m : config.bag_counts)
      for (std::size_t r : config.bag_sizes) cells.push_back({m * r, m, r});
  } else {
    for (std::size_t budget : config.budgets)
      for (std::size_t r : config.bag_sizes) {
        if (budget < r)
          fail_usage("budget " + std::to_string(budget) + " is smaller than one bag of " + std::to_string(r));
        cells.push_back({budget, budget / r, r});
      }
  }
  const std::string generator = mixture ? "mixture:" + *config.grouping_attribute : "iid";
  const std::size_t n = census.instances.size();

  std::vector<std::vector<ResultRow>> per_cell(cells.size());
  parallel_for(cells.size(), config.workers, [&](std::size_t c) {
    const Cell cell = cells[c];
    TrainConfig chosen;
    for (int run = 0; run < config.runs; ++run) {
      const auto start = Clock::now();
      const Split split = split_for_run(config, n, run);
      const std::vector<Instance> train = select(census.instances, split.train);
      const std::vector<Instance> test = select(census.instances, split.test);
      const std::uint64_t bag_seed = sub_seed(config.seed, kBags, c, static_cast<std::uint64_t>(run));

      BagDataset bags;
      std::vector<std::size_t> origin;
      if (mixture) {
        const GroupPools pools = group_pools(train, census.groups, *config.grouping_attribute);
        MixtureConfig mc;
        mc.bag_size = cell.bag_size;
        mc.bag_count = cell.bag_count;
        mc.seed = bag_seed;
        for (const auto& members : pools.members) {
          MixtureComponent comp;
          comp.prior = 1.0 / static_cast<double>(pools.members.size());
          for (std::size_t i : members) {
            comp.pool.push_back(train[i]);
            origin.push_back(split.train[i]);
          }
          mc.components.push_back(std::move(comp));
        }
        bags = gen_mixture_bags(mc);
      } else {
        bags = gen_iid_bags(train, cell.bag_count, cell.bag_size, bag_seed);
        origin = split.train;
      }
      audit_split(bags, origin, split);

      if (run == 0) chosen = tuned(config, bags, sub_seed(config.seed, kFolds, c));
      TrainConfig tc = chosen;
      tc.seed = sub_seed(config.seed, kSolver, c, static_cast<std::uint64_t>(run));
      const TrainResult result = llp::train(bags, tc);

      ResultRow row;
      row.experiment = to_string(Experiment::learning_curve);
      row.generator = generator;
      row.budget = cell.budget;
      row.bag_count = cell.bag_count;
      row.bag_size = cell.bag_size;
      row.run = run;
      row.C = tc.C;
      row.C_p = tc.C_p;
      row.train_bag_error = result.final_bag_error;
      row.test_instance_error = instance_error(result.hypothesis, test);
      row.baseline_error = majority_test_error(bags, test);
      row.wall_time = seconds_since(start);
      per_cell[c].push_back(row);
    }
  });

  std::vector<ResultRow> rows;
  for (auto& block : per_cell) {
    const auto summarized = with_summaries(block);
    rows.insert(rows.end(), summarized.begin(), summarized.end());
  }
  return rows;
}

std::vector<ResultRow> run_group_table(const ExperimentConfig& config, const CensusData& census) {
  config.validate();
  const std::vector<std::string> attributes =
      config.attributes.empty() ? census_attributes() : config.attributes;
  for (const std::string& a : attributes) (void)assign_groups({}, census.groups, a);  // name check

  const std::size_t n = census.instances.size();
  const auto runs = static_cast<std::size_t>(config.runs);
  std::vector<ResultRow> run_rows(attributes.size() * runs);
  parallel_for(run_rows.size(), config.workers, [&](std::size_t cell) {
    const std::size_t a = cell / runs;
    const int run = static_cast<int>(cell % runs);
    const auto start = Clock::now();
    const Split split = split_for_run(config, n, run);
    const std::vector<Instance> train = select(census.instances, split.train);
    const std::vector<Instance> test = select(census.instances, split.test);
    const BagDataset bags = gen_group_bags(train, assign_groups(train, census.groups, attributes[a]));
    audit_split(bags, split.train, split);

    const BaselinePredictor baseline = train_baseline(bags);
    const std::vector<std::string> test_groups = assign_groups(test, census.groups, attributes[a]);
    std::size_t baseline_wrong = 0;
    for (std::size_t i = 0; i < test.size(); ++i)
      baseline_wrong += baseline.predict(test_groups[i]) != test[i].true_label();

    TrainConfig tc = tuned(config, bags, sub_seed(config.seed, kFolds, a, static_cast<std::uint64_t>(run)));
    tc.seed = sub_seed(config.seed, kSolver, a, static_cast<std::uint64_t>(run));
    const TrainResult result = llp::train(bags, tc);

    ResultRow& row = run_rows[cell];
    row.experiment = to_string(Experiment::group_table);
    row.generator = "group:" + attributes[a];
    row.bag_count = bags.bags.size();
    row.run = run;
    row.C = tc.C;
    row.C_p = tc.C_p;
    row.train_bag_error = result.final_bag_error;
    row.test_instance_error = instance_error(result.hypothesis, test);
    row.baseline_error = static_cast<double>(baseline_wrong) / static_cast<double>(test.size());
    row.wall_time = seconds_since(start);
  });
  // Bag counts can differ across splits (a rare group may miss the training
  // side); summaries group by attribute, so pin the block key to run 0's count.
  std::vector<ResultRow> rows;
  for (std::size_t a = 0; a < attributes.size(); ++a) {
    std::vector<ResultRow> block(run_rows.begin() + static_cast<std::ptrdiff_t>(a * runs),
                                 run_rows.begin() + static_cast<std::ptrdiff_t>((a + 1) * runs));
    const auto summarized = with_summaries(block);
    rows.insert(rows.end(), summarized.begin(), summarized.end());
  }
  return rows;
}

const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols{
      "experiment", "generator", "budget", "bag_count", "bag_size", "run", "kind", "C", "C_p",
      "train_bag_error", "test_instance_error", "baseline_error", "wall_time"};
  return cols;
}

void write_result_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  const auto& cols = result_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const ResultRow& r : rows) {
    out << r.experiment << ',' << r.generator << ',' << r.budget << ',' << r.bag_count << ','
        << r.bag_size << ',' << r.run << ',' << r.kind << ',' << format_double(r.C) << ','
        << format_double(r.C_p) << ',' << format_double(r.train_bag_error) << ','
        << format_double(r.test_instance_error) << ',' << format_double(r.baseline_error) << ','
        << format_double(r.wall_time) << '\n';
  }
}

std::vector<ResultRow> read_result_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail_data("result csv: missing header");
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != result_columns().size())
      fail_data("result csv line " + std::to_string(line_no) + ": expected " +
                std::to_string(result_columns().size()) + " fields");
    try {
      ResultRow r;
      r.experiment = f[0];
      r.generator = f[1];
      r.budget = std::stoull(f[2]);
      r.bag_count = std::stoull(f[3]);
      r.bag_size = std::stoull(f[4]);
      r.run = std::stoi(f[5]);
      r.kind = f[6];
      r.C = std::stod(f[7]);
      r.C_p = std::stod(f[8]);
      r.train_bag_error = std::stod(f[9]);
      r.test_instance_error = std::stod(f[10]);
      r.baseline_error = std::stod(f[11]);
      r.wall_time = std::stod(f[12]);
      rows.push_back(r);
    } catch (const std::exception&) {
      fail_data("result csv line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

std::vector<ResultRow> with_summaries(const std::vector<ResultRow>& run_rows) {
  std::vector<ResultRow> out;
  std::size_t i = 0;
  while (i < run_rows.size()) {
    std::size_t j = i;
    const ResultRow& head = run_rows[i];
    while (j < run_rows.size() && run_rows[j].experiment == head.experiment &&
           run_rows[j].generator == head.generator && run_rows[j].budget == head.budget &&
           run_rows[j].bag_size == head.bag_size && run_rows[j].kind == "run")
      ++j;
    if (j == i) fail_usage("with_summaries expects run rows only");
    std::vector<double> train, test, base, wall, count;
    bool same_c = true;
    for (std::size_t t = i; t < j; ++t) {
      const ResultRow& r = run_rows[t];
      out.push_back(r);
      train.push_back(r.train_bag_error);
      test.push_back(r.test_instance_error);
      base.push_back(r.baseline_error);
      wall.push_back(r.wall_time);
      count.push_back(static_cast<double>(r.bag_count));
      same_c = same_c && r.C == head.C && r.C_p == head.C_p;
    }
    ResultRow m = head;
    m.run = -1;
    m.kind = "mean";
    m.C = same_c ? head.C : 0.0;
    m.C_p = same_c ? head.C_p : 0.0;
    m.bag_count = static_cast<std::size_t>(round_half_up(mean(count)));
    ResultRow s = m;
    s.kind = "std";
    m.train_bag_error = mean(train);
    m.test_instance_error = mean(test);
    m.baseline_error = mean(base);
    m.wall_time = mean(wall);
    s.train_bag_error = sample_std(train);
    s.test_instance_error = sample_std(test);
    s.baseline_error = sample_std(base);
    s.wall_time = sample_std(wall);
    out.push_back(m);
    out.push_back(s);
    i = j;
  }
  return out;
}

std::vector<BoundRow> run_bound_sweep(const ExperimentConfig& config) {
  std::vector<double> betas;
  const auto steps = static_cast<long>(std::llround(1.0 / config.sweep_beta_step));
  for (long i = 0; i <= steps; ++i) betas.push_back(std::min(1.0, static_cast<double>(i) * config.sweep_beta_step));

  struct Curve {
    std::string panel;
    int r;
    double epsilon;
  };
  std::vector<Curve> curves;
  for (int r : config.sweep_r) curves.push_back({"eps0", r, 0.0});
  for (int r : config.sweep_r) curves.push_back({"eps0.1", r, 0.1});
  for (double e : config.sweep_epsilons) curves.push_back({"r50", 50, e});

  std::vector<std::vector<BoundRow>> blocks(curves.size());
  parallel_for(curves.size(), config.workers, [&](std::size_t c) {
    const Curve& curve = curves[c];
    const double u = theory::u_threshold(curve.r, curve.epsilon);
    for (double beta : betas) {
      BoundRow row;
      row.panel = curve.panel;
      row.r = curve.r;
      row.epsilon = curve.epsilon;
      row.beta = beta;
      row.match_prob = theory::binom_match_prob(curve.r, beta, curve.epsilon);
      row.u = u;
      row.invertible = row.match_prob > u;
      if (row.invertible) row.recovered_beta = theory::invert_match_prob(curve.r, curve.epsilon, row.match_prob);
      blocks[c].push_back(row);
    }
  });
  std::vector<BoundRow> rows;
  for (auto& b : blocks) rows.insert(rows.end(), b.begin(), b.end());

  std::vector<BoundRow> u_rows(config.sweep_u_r.size() * config.sweep_epsilons.size());
  parallel_for(u_rows.size(), config.workers, [&](std::size_t k) {
    BoundRow& row = u_rows[k];
    row.panel = "u";
    row.r = config.sweep_u_r[k / config.sweep_epsilons.size()];
    row.epsilon = config.sweep_epsilons[k % config.sweep_epsilons.size()];
    const theory::MonotoneBranch branch = theory::monotone_branch(row.r, row.epsilon);
    row.beta = branch.beta_break;
    row.match_prob = branch.u;
    row.u = branch.u;
  });
  rows.insert(rows.end(), u_rows.begin(), u_rows.end());
  return rows;
}

void write_bound_csv(std::ostream& out, const std::vector<BoundRow>& rows) {
  out << "panel,r,epsilon,beta,match_prob,u,invertible,recovered_beta\n";
  for (const BoundRow& r : rows)
    out << r.panel << ',' << r.r << ',' << format_double(r.epsilon) << ',' << format_double(r.beta) << ','
        << format_double(r.match_prob) << ',' << format_double(r.u) << ',' << (r.invertible ? 1 : 0) << ','
        << format_double(r.recovered_beta) << '\n';
}

std::vector<PrivacyRow> run_privacy_sweep(const ExperimentConfig& config, const CensusData& census) {
  config.validate();
  const std::string attribute = config.grouping_attribute.value_or("occupation");
  const std::size_t n = census.instances.size();
  const auto runs = static_cast<std::size_t>(config.runs);
  const std::size_t etas = config.privacy_etas.size();
  std::vector<PrivacyRow> rows(runs * etas);

  parallel_for(runs, config.workers, [&](std::size_t run_index) {
    const int run = static_cast<int>(run_index);
    const Split split = split_for_run(config, n, run);
    const std::vector<Instance> train = select(census.instances, split.train);
    const std::vector<Instance> test = select(census.instances, split.test);
    const BagDataset bags = gen_group_bags(train, assign_groups(train, census.groups, attribute));
    audit_split(bags, split.train, split);

    TrainConfig tc = tuned(config, bags, sub_seed(config.seed, kFolds, 0, run_index));
    tc.seed = sub_seed(config.seed, kSolver, 0, run_index);
    const double exact_error = instance_error(llp::train(bags, tc).hypothesis, test);

    double n_mean = 0.0, positives = 0.0;
    for (const Bag& b : bags.bags) {
      n_mean += static_cast<double>(b.size());
      positives += b.observed_proportion * static_cast<double>(b.size());
    }
    const double pooled = positives / n_mean;
    n_mean /= static_cast<double>(bags.bags.size());

    for (std::size_t e = 0; e < etas; ++e) {
      const auto start = Clock::now();
      const privacy::PrivacyBudget budget(config.privacy_etas[e], static_cast<long>(bags.bags.size()));
      const BagDataset released =
          privacy::release_private_proportions(bags, budget, sub_seed(config.seed, kNoise, run_index, e), true);
      PrivacyRow& row = rows[run_index * etas + e];
      row.eta = config.privacy_etas[e];
      row.run = run;
      row.bags = bags.bags.size();
      row.theta = config.privacy_theta;
      double dev = 0.0;
      for (const Bag& b : released.bags) {
        const double d = std::abs(b.observed_proportion - *b.sample_proportion);
        dev += d;
        row.bags_exceeding_theta += d > config.privacy_theta;
      }
      row.mean_abs_deviation = dev / static_cast<double>(released.bags.size());
      // Training only sees the released values; the hidden labels are kept
      // in `bags` for evaluation and never reach the solver.
      row.nonprivate_test_error = exact_error;
      row.private_test_error = instance_error(llp::train(released, tc).hypothesis, test);
      row.utility_loss = row.private_test_error - row.nonprivate_test_error;
      row.simulated_exceedance =
          privacy::deviation_check(std::max(1L, round_half_up(n_mean)), pooled, budget, config.privacy_theta,
                                   config.privacy_trials, sub_seed(config.seed, kSim, run_index, e), 1)
              .exceedance_rate;
      row.wall_time = seconds_since(start);
    }
  });
  return rows;
}

void write_privacy_csv(std::ostream& out, const std::vector<PrivacyRow>& rows) {
  out << "eta,run,bags,nonprivate_test_error,private_test_error,utility_loss,theta,bags_exceeding_theta,"
         "mean_abs_deviation,simulated_exceedance,wall_time\n";
  for (const PrivacyRow& r : rows)
    out << format_double(r.eta) << ',' << r.run << ',' << r.bags << ',' << format_double(r.nonprivate_test_error)
        << ',' << format_double(r.private_test_error) << ',' << format_double(r.utility_loss) << ','
        << format_double(r.theta) << ',' << r.bags_exceeding_theta << ',' << format_double(r.mean_abs_deviation)
        << ',' << format_double(r.simulated_exceedance) << ',' << format_double(r.wall_time) << '\n';
}

namespace {

std::string write_file(const std::filesystem::path& dir, const std::string& name,
                       const std::function<void(std::ostream&)>& body) {
  const std::filesystem::path path = dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_usage("cannot write " + path.string());
  body(out);
  if (!out) fail_usage("failed writing " + path.string());
  return path.string();
}

}  // namespace

std::vector<std::string> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  const std::string name = to_string(config.experiment);

  switch (config.experiment) {
    case Experiment::learning_curve:
    case Experiment::group_table: {
      const CensusData census = load_census(config);
      const auto rows = config.experiment == Experiment::learning_curve ? run_learning_curve(config, census)
                                                                        : run_group_table(config, census);
      written.push_back(write_file(dir, name + ".csv", [&](std::ostream& o) { write_result_csv(o, rows); }));
      break;
    }
    case Experiment::bound_sweep: {
      const auto rows = run_bound_sweep(config);
      written.push_back(write_file(dir, name + ".csv", [&](std::ostream& o) { write_bound_csv(o, rows); }));
      for (const char* panel : {"eps0", "eps0.1", "r50", "u"}) {
        std::vector<BoundRow> subset;
        for (const BoundRow& r : rows)
          if (r.panel == panel) subset.push_back(r);
        written.push_back(write_file(dir, "bound-" + std::string(panel) + ".csv",
                                     [&](std::ostream& o) { write_bound_csv(o, subset); }));
      }
      break;
    }
    case Experiment::privacy_sweep: {
      const CensusData census = load_census(config);
      const auto rows = run_privacy_sweep(config, census);
      written.push_back(write_file(dir, name + ".csv", [&](std::ostream& o) { write_privacy_csv(o, rows); }));
      break;
    }
  }

  const std::string canonical = canonical_config(config);
  nlohmann::ordered_json manifest;
  manifest["experiment"] = name;
  manifest["version"] = LLP_VERSION;
  manifest["seed"] = config.seed;
  manifest["config_hash"] = fnv1a_hex(canonical);
  manifest["config"] = canonical;
  manifest["rng"] = Rng::algorithm;
  manifest["compiler"] = __VERSION__;
  manifest["boost"] = BOOST_LIB_VERSION;
  manifest["outputs"] = nlohmann::json::array();
  for (const std::string& p : written) manifest["outputs"].push_back(std::filesystem::path(p).filename().string());
  written.push_back(write_file(dir, "manifest.json", [&](std::ostream& o) { o << manifest.dump(2) << '\n'; }));
  return written;
}

}  // namespace llp
