#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "llp/error.hpp"
#include "llp/harness.hpp"

namespace llp {

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::learning_curve: return "learning-curve";
    case Experiment::group_table: return "group-table";
    case Experiment::bound_sweep: return "bound-sweep";
    case Experiment::privacy_sweep: return "privacy-sweep";
  }
  return "?";
}

Experiment experiment_from_string(const std::string& s) {
  for (Experiment e : {Experiment::learning_curve, Experiment::group_table, Experiment::bound_sweep,
                       Experiment::privacy_sweep})
    if (s == to_string(e)) return e;
  fail_usage("unknown experiment '" + s +
             "' (learning-curve, group-table, bound-sweep, privacy-sweep)");
}

const std::vector<std::string>& census_attributes() {
  static const std::vector<std::string> names{"native-country", "education", "occupation",
                                              "relationship", "race"};
  return names;
}

std::vector<std::size_t> default_budgets() {
  std::vector<std::size_t> out;
  for (int i = 0; i <= 6; ++i)
    out.push_back(static_cast<std::size_t>(round_half_up(500.0 * std::pow(100.0, i / 6.0))));
  return out;
}

void ExperimentConfig::validate() const {
  if (runs < 1) fail_usage("experiment.runs must be >= 1");
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    fail_usage("experiment.split_fraction must lie in (0,1)");
  if (generator != "iid" && generator != "mixture")
    fail_usage("bags.generator must be iid or mixture");
  if (generator == "mixture" && experiment == Experiment::learning_curve && !grouping_attribute)
    fail_usage("bags.generator = mixture needs data.attribute");
  if (bag_sizes.empty()) fail_usage("bags.sizes must not be empty");
  for (std::size_t r : bag_sizes)
    if (r == 0) fail_usage("bags.sizes entries must be positive");
  if (bag_counts.empty() && budgets.empty()) fail_usage("bags.budgets must not be empty");
  if (!(train.C > 0.0) || !(train.C_p > 0.0)) fail_usage("train.C and train.C_p must be positive");
  if (C_grid.empty() || C_p_grid.empty()) fail_usage("train.C_grid and train.C_p_grid must not be empty");
  for (double c : C_grid)
    if (!(c > 0.0)) fail_usage("train.C_grid entries must be positive");
  for (double c : C_p_grid)
    if (!(c > 0.0)) fail_usage("train.C_p_grid entries must be positive");
  if (folds < 2) fail_usage("train.folds must be >= 2");
  if (train.restarts < 1) fail_usage("train.restarts must be >= 1");
  if (train.max_outer_iters < 1) fail_usage("train.max_outer_iters must be >= 1");
  for (double eta : privacy_etas)
    if (!(eta > 0.0)) fail_usage("privacy.etas entries must be positive");
  if (!(sweep_beta_step > 0.0 && sweep_beta_step <= 1.0)) fail_usage("bounds.beta_step must lie in (0,1]");
  if (dataset_path.empty() && experiment != Experiment::bound_sweep)
    fail_usage("data.dataset is required for " + std::string(to_string(experiment)));
}

ConfigMap parse_config_text(const std::string& text, const std::string& source) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail_usage(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  ConfigMap out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      out[section] = body.data();
      continue;
    }
    for (const auto& [key, value] : body) out[section + "." + key] = value.data();
  }
  return out;
}

ConfigMap load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_usage("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  fail_usage("bad value for " + key + ": '" + value + "'");
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    bad_value(key, v);
  }
  if (used != v.size()) bad_value(key, v);
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    bad_value(key, v);
  }
  if (used != v.size()) bad_value(key, v);
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    bad_value(key, v);
  }
  if (used != v.size() || v.front() == '-') bad_value(key, v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v);
}

template <class T, class F>
std::vector<T> to_list(const std::string& key, const std::string& v, F convert) {
  std::vector<T> out;
  for (const std::string& item : split_list(v)) out.push_back(static_cast<T>(convert(key, item)));
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"experiment.name", [](auto& c, auto&, auto& v) { c.experiment = experiment_from_string(v); }},
      {"experiment.seed", [](auto& c, auto& k, auto& v) { c.seed = to_u64(k, v); }},
      {"experiment.runs", [](auto& c, auto& k, auto& v) { c.runs = static_cast<int>(to_integer(k, v)); }},
      {"experiment.split_fraction", [](auto& c, auto& k, auto& v) { c.split_fraction = to_double(k, v); }},
      {"experiment.vary_split", [](auto& c, auto& k, auto& v) { c.vary_split = to_bool(k, v); }},
      {"experiment.output_dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
      {"experiment.workers", [](auto& c, auto& k, auto& v) { c.workers = static_cast<unsigned>(to_integer(k, v)); }},
      {"data.dataset", [](auto& c, auto&, auto& v) { c.dataset_path = v; }},
      {"data.groups", [](auto& c, auto&, auto& v) { c.groups_path = v; }},
      {"data.attribute", [](auto& c, auto&, auto& v) {
         if (v.empty()) c.grouping_attribute.reset(); else c.grouping_attribute = v;
       }},
      {"data.attributes", [](auto& c, auto&, auto& v) { c.attributes = split_list(v); }},
      {"bags.generator", [](auto& c, auto&, auto& v) { c.generator = v; }},
      {"bags.sizes", [](auto& c, auto& k, auto& v) { c.bag_sizes = to_list<std::size_t>(k, v, to_integer); }},
      {"bags.budgets", [](auto& c, auto& k, auto& v) { c.budgets = to_list<std::size_t>(k, v, to_integer); }},
      {"bags.counts", [](auto& c, auto& k, auto& v) { c.bag_counts = to_list<std::size_t>(k, v, to_integer); }},
      {"train.solver", [](auto& c, auto&, auto& v) { c.train.solver = solver_from_string(v); }},
      {"train.C", [](auto& c, auto& k, auto& v) { c.train.C = to_double(k, v); }},
      {"train.C_p", [](auto& c, auto& k, auto& v) { c.train.C_p = to_double(k, v); }},
      {"train.init", [](auto& c, auto&, auto& v) { c.train.init = init_from_string(v); }},
      {"train.restarts", [](auto& c, auto& k, auto& v) { c.train.restarts = static_cast<int>(to_integer(k, v)); }},
      {"train.max_outer_iters", [](auto& c, auto& k, auto& v) { c.train.max_outer_iters = static_cast<int>(to_integer(k, v)); }},
      {"train.inner_tolerance", [](auto& c, auto& k, auto& v) { c.train.inner_tolerance = to_double(k, v); }},
      {"train.inner_max_epochs", [](auto& c, auto& k, auto& v) { c.train.inner_max_epochs = static_cast<int>(to_integer(k, v)); }},
      {"train.insensitivity", [](auto& c, auto& k, auto& v) { c.train.insensitivity = to_double(k, v); }},
      {"train.C_grid", [](auto& c, auto& k, auto& v) { c.C_grid = to_list<double>(k, v, to_double); }},
      {"train.C_p_grid", [](auto& c, auto& k, auto& v) { c.C_p_grid = to_list<double>(k, v, to_double); }},
      {"train.folds", [](auto& c, auto& k, auto& v) { c.folds = static_cast<int>(to_integer(k, v)); }},
      {"privacy.etas", [](auto& c, auto& k, auto& v) { c.privacy_etas = to_list<double>(k, v, to_double); }},
      {"privacy.theta", [](auto& c, auto& k, auto& v) { c.privacy_theta = to_double(k, v); }},
      {"privacy.trials", [](auto& c, auto& k, auto& v) { c.privacy_trials = static_cast<std::size_t>(to_integer(k, v)); }},
      {"bounds.r", [](auto& c, auto& k, auto& v) { c.sweep_r = to_list<int>(k, v, to_integer); }},
      {"bounds.epsilons", [](auto& c, auto& k, auto& v) { c.sweep_epsilons = to_list<double>(k, v, to_double); }},
      {"bounds.beta_step", [](auto& c, auto& k, auto& v) { c.sweep_beta_step = to_double(k, v); }},
      {"bounds.u_r", [](auto& c, auto& k, auto& v) { c.sweep_u_r = to_list<int>(k, v, to_integer); }},
  };
  return table;
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (const T& v : values) {
    if (!out.empty()) out += ",";
    if constexpr (std::is_same_v<T, double>)
      out += format_double(v);
    else if constexpr (std::is_same_v<T, std::string>)
      out += v;
    else
      out += std::to_string(v);
  }
  return out;
}

}  // namespace

ExperimentConfig config_from_map(const ConfigMap& map, bool validate) {
  ExperimentConfig config;
  const auto& table = setters();
  for (const auto& [key, raw] : map) {
    const auto it = table.find(key);
    if (it == table.end()) fail_usage("unknown config key '" + key + "'");
    it->second(config, key, trim(raw));
  }
  if (validate) config.validate();
  return config;
}

std::string canonical_config(const ExperimentConfig& c) {
  const ConfigMap m{
      {"experiment.name", to_string(c.experiment)},
      {"experiment.seed", std::to_string(c.seed)},
      {"experiment.runs", std::to_string(c.runs)},
      {"experiment.split_fraction", format_double(c.split_fraction)},
      {"experiment.vary_split", c.vary_split ? "true" : "false"},
      {"data.dataset", c.dataset_path},
      {"data.groups", c.groups_path},
      {"data.attribute", c.grouping_attribute.value_or("")},
      {"data.attributes", join(c.attributes)},
      {"bags.generator", c.generator},
      {"bags.sizes", join(c.bag_sizes)},
      {"bags.budgets", join(c.budgets)},
      {"bags.counts", join(c.bag_counts)},
      {"train.solver", to_string(c.train.solver)},
      {"train.C", format_double(c.train.C)},
      {"train.C_p", format_double(c.train.C_p)},
      {"train.init", to_string(c.train.init)},
      {"train.restarts", std::to_string(c.train.restarts)},
      {"train.max_outer_iters", std::to_string(c.train.max_outer_iters)},
      {"train.inner_tolerance", format_double(c.train.inner_tolerance)},
      {"train.inner_max_epochs", std::to_string(c.train.inner_max_epochs)},
      {"train.insensitivity", format_double(c.train.insensitivity)},
      {"train.C_grid", join(c.C_grid)},
      {"train.C_p_grid", join(c.C_p_grid)},
      {"train.folds", std::to_string(c.folds)},
      {"privacy.etas", join(c.privacy_etas)},
      {"privacy.theta", format_double(c.privacy_theta)},
      {"privacy.trials", std::to_string(c.privacy_trials)},
      {"bounds.r", join(c.sweep_r)},
      {"bounds.epsilons", join(c.sweep_epsilons)},
      {"bounds.beta_step", format_double(c.sweep_beta_step)},
      {"bounds.u_r", join(c.sweep_u_r)},
  };
  // output_dir and workers do not affect results and are left out.
  std::string out;
  for (const auto& [k, v] : m) out += k + " = " + v + "\n";
  return out;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace llp
