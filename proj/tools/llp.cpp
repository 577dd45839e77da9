// Command-line front end. Exit codes: 0 success, 1 usage, 2 data, 3 numerical.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "llp/baggen.hpp"
#include "llp/error.hpp"
#include "llp/harness.hpp"
#include "llp/io.hpp"
#include "llp/privacy.hpp"
#include "llp/solvers.hpp"
#include "llp/theory.hpp"

namespace {

using namespace llp;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
};

ConfigMap base_map(const Globals& g) {
  ConfigMap m = g.config.empty() ? ConfigMap{} : load_config_file(g.config);
  if (g.seed) m["experiment.seed"] = std::to_string(*g.seed);
  return m;
}

void with_output(const std::string& path, const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_usage("cannot write " + path);
  body(out);
}

template <class T>
T read_file(const std::string& path, T (*reader)(std::istream&, const std::string&)) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open " + path);
  return reader(in, path);
}

// --- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::string generator = "iid";
  std::string data;
  std::string groups;
  std::string attribute;
  std::size_t bags = 10;
  std::size_t size = 10;
  bool without_replacement = false;
  double pick_probability = 0.01;
  double eta = 0.1;
};

BagDataset generate(const GenerateArgs& a, std::uint64_t seed) {
  if (a.generator == "adversarial") return gen_adversarial_pure_bags(a.size, a.eta, a.bags).data;
  if (a.data.empty()) fail_usage("--data is required for generator " + a.generator);
  const std::vector<Instance> pool = load_sparse_dataset(a.data);
  if (a.generator == "iid") return gen_iid_bags(pool, a.bags, a.size, seed, !a.without_replacement);
  if (a.generator == "kappa") {
    KappaConfig k;
    k.pick_probabilities.assign(pool.size(), a.pick_probability);
    k.bag_count = a.bags;
    k.seed = seed;
    return gen_kappa_bags(pool, k);
  }
  if (a.groups.empty() || a.attribute.empty())
    fail_usage("--groups and --attribute are required for generator " + a.generator);
  const std::vector<std::string> group_of = assign_groups(pool, load_group_mapping(a.groups), a.attribute);
  if (a.generator == "group") return gen_group_bags(pool, group_of);

  std::map<std::string, std::vector<Instance>> by_group;
  for (std::size_t i = 0; i < pool.size(); ++i) by_group[group_of[i]].push_back(pool[i]);
  if (a.generator == "mixture") {
    MixtureConfig m;
    m.bag_count = a.bags;
    m.bag_size = a.size;
    m.seed = seed;
    m.with_replacement = !a.without_replacement;
    for (auto& [name, members] : by_group)
      m.components.push_back({1.0 / static_cast<double>(by_group.size()), std::move(members)});
    return gen_mixture_bags(m);
  }
  if (a.generator == "population") {
    std::vector<std::vector<Instance>> pools;
    std::vector<double> proportions;
    for (auto& [name, members] : by_group) {
      std::size_t positives = 0;
      for (const Instance& x : members) positives += x.true_label() == Label::positive;
      proportions.push_back(static_cast<double>(positives) / static_cast<double>(members.size()));
      pools.push_back(std::move(members));
    }
    return gen_population_bags(pools, proportions, a.bags, a.size, seed);
  }
  fail_usage("unknown generator '" + a.generator + "' (iid, mixture, group, kappa, population, adversarial)");
}

// --- theory -----------------------------------------------------------------

void print_guarantee(const char* name, const theory::Guarantee& g) {
  fmt::print("{}: fraction {:.6g} with probability {:.6g}{}\n", name, g.fraction, g.confidence,
             g.vacuous ? " (vacuous)" : "");
}

void add_theory(CLI::App& app, std::vector<std::function<void()>>& actions) {
  auto* theory_cmd = app.add_subcommand("theory", "Closed-form bound calculators");
  theory_cmd->require_subcommand(1);

  struct Params {
    int vc = 1;
    double r = 10, epsilon = 0.1, delta = 0.05, eta = 0.1, rho = 0.05, tau = 0.1, beta = 0.1;
    double prob = 0.9, c = 0.1, error = 0.01, mean = 10, t = 0.1;
    long n = 1000, m = 100;
    std::vector<double> list;
  };
  std::shared_ptr<Params> p;

  p = std::make_shared<Params>();
  auto* sc = theory_cmd->add_subcommand("sample-complexity", "Bags sufficient for eps-accurate bag error");
  sc->add_option("--vc", p->vc, "VC dimension")->required();
  sc->add_option("--r", p->r, "bag size (or average bag size)")->required();
  sc->add_option("--epsilon", p->epsilon)->required();
  sc->add_option("--delta", p->delta)->required();
  sc->callback([&actions, p] {
    actions.push_back([p] {
      fmt::print("bags {}\n", theory::bag_sample_complexity(p->vc, p->r, p->epsilon, p->delta));
      fmt::print("supervised_instances {}\n", theory::supervised_sample_complexity(p->vc, p->epsilon, p->delta));
    });
  });

  p = std::make_shared<Params>();
  auto* purity = theory_cmd->add_subcommand("purity", "Correctly classified fraction from pure bags");
  purity->add_option("--epsilon", p->epsilon);
  purity->add_option("--delta", p->delta);
  purity->add_option("--eta", p->eta);
  purity->add_option("--rho", p->rho);
  purity->add_option("--tau", p->tau);
  purity->add_option("--n", p->n, "number of bags");
  purity->add_option("--r", p->r, "bag size");
  purity->callback([&actions, p] {
    actions.push_back([p] {
      print_guarantee("per_bag", theory::purity_per_bag(p->epsilon, p->delta, p->eta, p->rho));
      print_guarantee("all_bags", theory::purity_multi_bag({p->epsilon, p->delta, p->eta, p->rho, p->tau, p->n, p->r}));
    });
  });

  p = std::make_shared<Params>();
  p->epsilon = 0.0;
  auto* match = theory_cmd->add_subcommand("match-prob", "P(bag proportion matched | instance error beta)");
  match->add_option("--r", p->r)->required();
  match->add_option("--beta", p->beta)->required();
  match->add_option("--epsilon", p->epsilon);
  match->callback([&actions, p] {
    actions.push_back([p] {
      fmt::print("{:.17g}\n", theory::binom_match_prob(static_cast<int>(p->r), p->beta, p->epsilon));
    });
  });

  p = std::make_shared<Params>();
  p->epsilon = 0.0;
  auto* u = theory_cmd->add_subcommand("u-threshold", "Match probability above which beta is recoverable");
  u->add_option("--r", p->r)->required();
  u->add_option("--epsilon", p->epsilon);
  u->callback([&actions, p] {
    actions.push_back([p] {
      const auto b = theory::monotone_branch(static_cast<int>(p->r), p->epsilon);
      fmt::print("u {:.17g}\nbeta_break {:.17g}\n", b.u, b.beta_break);
    });
  });

  p = std::make_shared<Params>();
  p->epsilon = 0.0;
  auto* inv = theory_cmd->add_subcommand("invert", "Instance error implied by a match probability");
  inv->add_option("--r", p->r)->required();
  inv->add_option("--epsilon", p->epsilon);
  inv->add_option("--prob", p->prob)->required();
  inv->callback([&actions, p] {
    actions.push_back([p] {
      fmt::print("{:.17g}\n", theory::invert_match_prob(static_cast<int>(p->r), p->epsilon, p->prob));
    });
  });

  p = std::make_shared<Params>();
  auto* mix = theory_cmd->add_subcommand("mixture-bound", "Purity of bags from a mixture of pure-ish components");
  mix->add_option("--r", p->r)->required();
  mix->add_option("--c", p->c)->required();
  mix->add_option("--alphas", p->list, "positive rate of each component")->required()->delimiter(',');
  mix->callback([&actions, p] {
    actions.push_back([p] {
      const auto b = theory::mixture_purity_bound(static_cast<int>(p->r), p->c, p->list);
      fmt::print("eta {:.17g}\nprobability {:.17g}\n", b.eta, b.prob_lower);
    });
  });

  p = std::make_shared<Params>();
  auto* kappa = theory_cmd->add_subcommand("kappa-bound", "Misclassification scale under independent inclusion");
  kappa->add_option("--epsilon", p->epsilon)->required();
  kappa->add_option("--p", p->list, "inclusion probabilities")->required()->delimiter(',');
  kappa->callback([&actions, p] {
    actions.push_back([p] {
      const auto b = theory::kappa_misclassification_bound(p->epsilon, p->list);
      fmt::print("q {:.17g}\nq_times_n {:.17g}\nexpected_bag_size {:.17g}\n", b.q, b.q_times_n, b.r_hat);
    });
  });

  p = std::make_shared<Params>();
  auto* pop = theory_cmd->add_subcommand("population-size", "Sample size for an eps-accurate released proportion");
  pop->add_option("--epsilon", p->epsilon)->required();
  pop->add_option("--delta", p->delta)->required();
  pop->callback([&actions, p] {
    actions.push_back([p] { fmt::print("{}\n", theory::population_sample_size(p->epsilon, p->delta)); });
  });

  p = std::make_shared<Params>();
  auto* bag_size = theory_cmd->add_subcommand("bag-size-bound", "Lower bound on the expected bag size");
  bag_size->add_option("--mean", p->mean, "average training bag size")->required();
  bag_size->add_option("--m", p->m, "number of bags")->required();
  bag_size->add_option("--t", p->t)->required();
  bag_size->callback([&actions, p] {
    actions.push_back([p] {
      const auto b = theory::expected_bag_size_bound(p->mean, p->m, p->t);
      fmt::print("lower_bound {:.17g}\nprobability {:.17g}\n", b.lower_bound, b.confidence);
    });
  });

  p = std::make_shared<Params>();
  auto* markov = theory_cmd->add_subcommand("markov", "Per-bag error level from a generalization error");
  markov->add_option("--error", p->error)->required();
  markov->add_option("--delta", p->delta)->required();
  markov->callback([&actions, p] {
    actions.push_back([p] { fmt::print("{:.17g}\n", theory::markov_epsilon_conversion(p->error, p->delta)); });
  });
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::usage: return 1;
    case ErrorKind::data: return 2;
    case ErrorKind::numerical: return 3;
  }
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning from label proportions: bag generation, solvers, bounds and experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--config", g.config, "key = value config file with [sections]");
  app.add_option("--out", g.out, "output file (directory for experiment)");

  std::vector<std::function<void()>> actions;

  GenerateArgs gen;
  auto* generate_cmd = app.add_subcommand("generate", "Generate a bag dataset");
  generate_cmd->add_option("--generator", gen.generator, "iid, mixture, group, kappa, population, adversarial");
  generate_cmd->add_option("--data", gen.data, "sparse labeled instance file");
  generate_cmd->add_option("--groups", gen.groups, "group mapping file");
  generate_cmd->add_option("--attribute", gen.attribute, "grouping attribute");
  generate_cmd->add_option("--bags", gen.bags, "number of bags");
  generate_cmd->add_option("--size", gen.size, "bag size");
  generate_cmd->add_flag("--without-replacement", gen.without_replacement);
  generate_cmd->add_option("--pick-probability", gen.pick_probability, "kappa: inclusion probability");
  generate_cmd->add_option("--eta", gen.eta, "adversarial: impurity");
  generate_cmd->callback([&] {
    actions.push_back([&] {
      const BagDataset data = generate(gen, g.seed.value_or(0));
      with_output(g.out, [&](std::ostream& o) { write_bags(o, data); });
    });
  });

  std::string bags_path, model_path, data_path;
  std::vector<std::string> overrides;
  auto* train_cmd = app.add_subcommand("train", "Train a linear hypothesis on a bag dataset");
  train_cmd->add_option("--bags", bags_path, "bag file from generate")->required();
  std::string solver, init;
  std::optional<double> C, C_p;
  std::optional<int> restarts;
  train_cmd->add_option("--solver", solver, "alter-psvm, mean-map, inv-cal");
  train_cmd->add_option("--C", C);
  train_cmd->add_option("--C_p", C_p);
  train_cmd->add_option("--init", init, "mean-map, inv-cal, random");
  train_cmd->add_option("--restarts", restarts);
  train_cmd->callback([&] {
    actions.push_back([&] {
      ConfigMap m = base_map(g);
      if (!solver.empty()) m["train.solver"] = solver;
      if (C) m["train.C"] = format_double(*C);
      if (C_p) m["train.C_p"] = format_double(*C_p);
      if (!init.empty()) m["train.init"] = init;
      if (restarts) m["train.restarts"] = std::to_string(*restarts);
      const ExperimentConfig ec = config_from_map(m, false);
      TrainConfig tc = ec.train;
      tc.seed = ec.seed;
      const BagDataset data = read_file<BagDataset>(bags_path, read_bags);
      const TrainResult r = train(data, tc);
      with_output(g.out, [&](std::ostream& o) { write_model(o, r.hypothesis); });
      fmt::print(stderr, "solver {} initializer {} bag_error {:.6g} outer_iterations {} wall_time {:.3f}s\n",
                 to_string(tc.solver), to_string(r.initializer), r.final_bag_error, r.outer_iterations, r.wall_time);
      for (const auto& w : r.warnings) fmt::print(stderr, "warning: {}\n", w);
    });
  });

  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a model on bags and/or labeled instances");
  eval_cmd->add_option("--model", model_path)->required();
  eval_cmd->add_option("--bags", bags_path, "bag file: bag proportion error");
  eval_cmd->add_option("--data", data_path, "sparse labeled file: instance error");
  eval_cmd->callback([&] {
    actions.push_back([&] {
      if (bags_path.empty() && data_path.empty()) fail_usage("evaluate needs --bags and/or --data");
      const LinearHypothesis h = read_file<LinearHypothesis>(model_path, read_model);
      if (!bags_path.empty()) {
        const BagDataset data = read_file<BagDataset>(bags_path, read_bags);
        fmt::print("bag_error {:.17g}\n", empirical_bag_error(h, data));
        bool labeled = true;
        for (const Instance& x : data.instances) labeled = labeled && x.labeled();
        if (labeled) fmt::print("bag_instance_error {:.17g}\n", instance_error(h, data.instances));
      }
      if (!data_path.empty()) fmt::print("instance_error {:.17g}\n", instance_error(h, load_sparse_dataset(data_path)));
    });
  });

  add_theory(app, actions);

  double eta = 1.0, theta = 0.01, proportion_value = 0.5;
  long n = 100000, k = 10;
  std::size_t trials = 10000;
  bool keep_exact = false;
  auto* privacy_cmd = app.add_subcommand("privacy", "Differentially private proportion release");
  privacy_cmd->require_subcommand(1);
  auto* release = privacy_cmd->add_subcommand("release", "Replace bag proportions by private releases");
  release->add_option("--bags", bags_path)->required();
  release->add_option("--eta", eta, "total privacy parameter")->required();
  release->add_flag("--keep-exact", keep_exact, "keep exact proportions for evaluation");
  release->callback([&] {
    actions.push_back([&] {
      const BagDataset data = read_file<BagDataset>(bags_path, read_bags);
      const privacy::PrivacyBudget budget(eta, static_cast<long>(data.bags.size()));
      const BagDataset out = privacy::release_private_proportions(data, budget, g.seed.value_or(0), keep_exact);
      with_output(g.out, [&](std::ostream& o) { write_bags(o, out); });
    });
  });
  auto* deviation = privacy_cmd->add_subcommand("deviation", "Simulate the released-proportion deviation");
  deviation->add_option("--n", n, "instances per set");
  deviation->add_option("--proportion", proportion_value);
  deviation->add_option("--eta", eta);
  deviation->add_option("--k", k, "number of released sets");
  deviation->add_option("--theta", theta);
  deviation->add_option("--trials", trials);
  deviation->callback([&] {
    actions.push_back([&] {
      const privacy::PrivacyBudget budget(eta, k);
      const auto rep = privacy::deviation_check(n, proportion_value, budget, theta, trials, g.seed.value_or(0));
      fmt::print("noise_scale {:.17g}\nexceedance_rate {:.17g}\nexceedances {}\ndegenerate {}\n",
                 budget.noise_scale(), rep.exceedance_rate, rep.exceedances, rep.degenerate);
    });
  });

  std::string experiment_name;
  auto* experiment_cmd = app.add_subcommand("experiment", "Run an experiment and write CSV + manifest");
  experiment_cmd->add_option("name", experiment_name, "learning-curve, group-table, bound-sweep, privacy-sweep")
      ->required();
  std::map<std::string, std::string> flag_values;
  const std::vector<std::pair<std::string, std::string>> mirrored{
      {"dataset", "data.dataset"},   {"groups", "data.groups"},        {"attribute", "data.attribute"},
      {"attributes", "data.attributes"}, {"generator", "bags.generator"}, {"sizes", "bags.sizes"},
      {"budgets", "bags.budgets"},   {"counts", "bags.counts"},        {"runs", "experiment.runs"},
      {"workers", "experiment.workers"}, {"split-fraction", "experiment.split_fraction"},
      {"vary-split", "experiment.vary_split"}, {"folds", "train.folds"}, {"C-grid", "train.C_grid"},
      {"C_p-grid", "train.C_p_grid"}, {"etas", "privacy.etas"},       {"theta", "privacy.theta"}};
  for (const auto& [flag, key] : mirrored)
    experiment_cmd->add_option("--" + flag, flag_values[key], "config key " + key);
  experiment_cmd->add_option("--set", overrides, "any config key: section.key=value");
  experiment_cmd->callback([&] {
    actions.push_back([&] {
      ConfigMap m = base_map(g);
      m["experiment.name"] = experiment_name;
      for (const auto& [key, value] : flag_values)
        if (!value.empty()) m[key] = value;
      for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) fail_usage("--set expects section.key=value, got '" + kv + "'");
        m[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      if (!g.out.empty()) m["experiment.output_dir"] = g.out;
      const ExperimentConfig config = config_from_map(m);
      for (const std::string& path : run_experiment(config)) fmt::print("wrote {}\n", path);
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    for (auto& action : actions) action();
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
