#include "llp/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "llp/error.hpp"
#include "llp/random.hpp"

namespace llp {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

[[noreturn]] void fail_at(const std::string& source, std::size_t line, std::size_t column,
                          const std::string& what) {
  fail_data(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open " + path);
  return in;
}

bool skippable(std::string_view line) {
  const auto tokens = split_ws(line);
  return tokens.empty() || tokens.front().front() == '#';
}

// Parses "idx:val" tokens [first, end) into features with strictly increasing indices.
std::vector<Feature> parse_features(const std::vector<std::string_view>& tokens, std::size_t first,
                                    std::string_view line, const std::string& source,
                                    std::size_t line_no) {
  std::vector<Feature> features;
  for (std::size_t t = first; t < tokens.size(); ++t) {
    const std::string_view tok = tokens[t];
    const std::size_t column = static_cast<std::size_t>(tok.data() - line.data()) + 1;
    const std::size_t colon = tok.find(':');
    std::uint32_t index = 0;
    double value = 0.0;
    if (colon == std::string_view::npos || !parse_number(tok.substr(0, colon), index) ||
        !parse_number(tok.substr(colon + 1), value))
      fail_at(source, line_no, column, "expected <index>:<value>, got '" + std::string(tok) + "'");
    if (index == 0) fail_at(source, line_no, column, "feature index must be >= 1");
    if (!features.empty() && index == features.back().index)
      fail_at(source, line_no, column, "duplicate feature index " + std::to_string(index));
    if (!features.empty() && index < features.back().index)
      fail_at(source, line_no, column, "feature indices must increase");
    features.push_back(Feature{index, value});
  }
  return features;
}

}  // namespace

std::vector<Instance> parse_sparse_dataset(std::istream& in, const std::string& source) {
  std::vector<Instance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const auto tokens = split_ws(line);
    int label = 0;
    if (!parse_number(tokens[0], label) || (label != -1 && label != 0 && label != 1))
      fail_at(source, line_no, 1, "label must be one of -1, +1, 0, 1");
    const Label y = label == 1 ? Label::positive : Label::negative;
    out.emplace_back(parse_features(tokens, 1, line, source, line_no), y);
  }
  if (out.empty()) fail_data(source + ": no instances");
  return out;
}

std::vector<Instance> load_sparse_dataset(const std::string& path) {
  std::ifstream in = open_input(path);
  return parse_sparse_dataset(in, path);
}

namespace {

void write_features(std::ostream& out, const Instance& x) {
  for (const Feature& f : x.features()) out << ' ' << f.index << ':' << format_double(f.value);
}

}  // namespace

void write_sparse_dataset(std::ostream& out, const std::vector<Instance>& instances) {
  for (const Instance& x : instances) {
    out << (x.true_label() == Label::positive ? "+1" : "-1");
    write_features(out, x);
    out << '\n';
  }
}

GroupMapping parse_group_mapping(std::istream& in, const std::string& source) {
  GroupMapping mapping;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const auto tokens = split_ws(line);
    if (tokens.size() < 2) fail_at(source, line_no, 1, "expected: attribute group-id feature-index...");
    GroupSpec spec;
    spec.name = std::string(tokens[1]);
    for (std::size_t t = 2; t < tokens.size(); ++t) {
      std::uint32_t index = 0;
      if (!parse_number(tokens[t], index) || index == 0)
        fail_at(source, line_no, static_cast<std::size_t>(tokens[t].data() - line.data()) + 1,
                "bad feature index '" + std::string(tokens[t]) + "'");
      spec.features.push_back(index);
    }
    auto& groups = mapping[std::string(tokens[0])];
    for (const GroupSpec& g : groups)
      if (g.name == spec.name) fail_at(source, line_no, 1, "duplicate group '" + spec.name + "'");
    groups.push_back(std::move(spec));
  }
  if (mapping.empty()) fail_data(source + ": no groups");
  return mapping;
}

GroupMapping load_group_mapping(const std::string& path) {
  std::ifstream in = open_input(path);
  return parse_group_mapping(in, path);
}

std::vector<std::string> assign_groups(const std::vector<Instance>& instances,
                                       const GroupMapping& mapping, const std::string& attribute) {
  const auto it = mapping.find(attribute);
  if (it == mapping.end()) {
    std::string names;
    for (const auto& [name, groups] : mapping) names += (names.empty() ? "" : ", ") + name;
    fail_usage("unknown grouping attribute '" + attribute + "' (available: " + names + ")");
  }
  std::map<std::uint32_t, const std::string*> by_feature;
  const std::string* missing = nullptr;
  for (const GroupSpec& g : it->second) {
    if (g.features.empty()) missing = &g.name;
    for (std::uint32_t f : g.features) by_feature.emplace(f, &g.name);
  }
  static const std::string unknown = "?";
  std::vector<std::string> out;
  out.reserve(instances.size());
  for (const Instance& x : instances) {
    const std::string* group = missing ? missing : &unknown;
    for (const Feature& f : x.features()) {
      if (f.value == 0.0) continue;
      if (auto g = by_feature.find(f.index); g != by_feature.end()) {
        group = g->second;
        break;
      }
    }
    out.push_back(*group);
  }
  return out;
}

Split split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail_usage("split fraction must lie in (0,1)");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed, 3);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  const auto n_train = static_cast<std::size_t>(round_half_up(train_fraction * static_cast<double>(n)));
  Split s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::vector<Instance> select(const std::vector<Instance>& instances, const std::vector<std::size_t>& idx) {
  std::vector<Instance> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(instances.at(i));
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_bags(std::ostream& out, const BagDataset& data) {
  out << "llp-bags 1\n";
  for (const auto& [key, value] : data.metadata) out << "meta " << key << ' ' << value << '\n';
  out << "instances " << data.instances.size() << '\n';
  for (const Instance& x : data.instances) {
    out << (!x.labeled() ? "?" : x.true_label() == Label::positive ? "+1" : "-1");
    write_features(out, x);
    out << '\n';
  }
  out << "bags " << data.bags.size() << '\n';
  for (const Bag& b : data.bags) {
    out << format_double(b.observed_proportion) << ' ' << b.origin << ' '
        << (b.sample_proportion ? format_double(*b.sample_proportion) : "-");
    for (std::size_t m : b.members) out << ' ' << m;
    out << '\n';
  }
}

namespace {

struct LineReader {
  std::istream& in;
  const std::string& source;
  std::size_t line_no = 0;
  std::string line;

  std::vector<std::string_view> next(const char* expecting) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!skippable(line)) return split_ws(line);
    }
    fail_data(source + ": unexpected end of file, expected " + expecting);
  }

  template <class T>
  T number(std::string_view tok, const char* what) {
    T v{};
    if (!parse_number(tok, v))
      fail_at(source, line_no, static_cast<std::size_t>(tok.data() - line.data()) + 1,
              std::string("bad ") + what + " '" + std::string(tok) + "'");
    return v;
  }
};

}  // namespace

BagDataset read_bags(std::istream& in, const std::string& source) {
  LineReader r{in, source, 0, {}};
  auto tokens = r.next("header");
  if (tokens.size() != 2 || tokens[0] != "llp-bags" || tokens[1] != "1")
    fail_at(source, r.line_no, 1, "not an llp-bags v1 file");
  BagDataset data;
  tokens = r.next("instances");
  while (tokens[0] == "meta") {
    if (tokens.size() < 2) fail_at(source, r.line_no, 1, "meta needs a key");
    std::string value;
    for (std::size_t t = 2; t < tokens.size(); ++t) value += (t > 2 ? " " : "") + std::string(tokens[t]);
    data.metadata[std::string(tokens[1])] = value;
    tokens = r.next("instances");
  }
  if (tokens.size() != 2 || tokens[0] != "instances") fail_at(source, r.line_no, 1, "expected 'instances <n>'");
  const auto n = r.number<std::size_t>(tokens[1], "count");
  data.instances.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    tokens = r.next("instance");
    std::optional<Label> y;
    if (tokens[0] != "?") y = label_from_int(r.number<int>(tokens[0], "label"));
    data.instances.emplace_back(parse_features(tokens, 1, r.line, source, r.line_no), y);
  }
  tokens = r.next("bags");
  if (tokens.size() != 2 || tokens[0] != "bags") fail_at(source, r.line_no, 1, "expected 'bags <m>'");
  const auto m = r.number<std::size_t>(tokens[1], "count");
  for (std::size_t k = 0; k < m; ++k) {
    tokens = r.next("bag");
    if (tokens.size() < 4) fail_at(source, r.line_no, 1, "bag needs proportion, origin, sample proportion and members");
    std::vector<std::size_t> members;
    for (std::size_t t = 3; t < tokens.size(); ++t) members.push_back(r.number<std::size_t>(tokens[t], "member"));
    Bag b = make_bag(std::move(members), r.number<double>(tokens[0], "proportion"), r.number<int>(tokens[1], "origin"));
    if (tokens[2] != "-") b.sample_proportion = r.number<double>(tokens[2], "sample proportion");
    data.bags.push_back(std::move(b));
  }
  data.validate();
  return data;
}

void write_model(std::ostream& out, const LinearHypothesis& h) {
  out << "llp-model 1\n";
  out << "bias " << format_double(h.bias()) << '\n';
  const auto w = h.dense();
  for (std::size_t j = 1; j < w.size(); ++j)
    if (w[j] != 0.0) out << "w " << j << ' ' << format_double(w[j]) << '\n';
}

LinearHypothesis read_model(std::istream& in, const std::string& source) {
  LineReader r{in, source, 0, {}};
  auto tokens = r.next("header");
  if (tokens.size() != 2 || tokens[0] != "llp-model" || tokens[1] != "1")
    fail_at(source, r.line_no, 1, "not an llp-model v1 file");
  LinearHypothesis h;
  std::string line;
  while (std::getline(in, r.line)) {
    ++r.line_no;
    if (skippable(r.line)) continue;
    tokens = split_ws(r.line);
    if (tokens[0] == "bias" && tokens.size() == 2) {
      h.set_bias(r.number<double>(tokens[1], "bias"));
    } else if (tokens[0] == "w" && tokens.size() == 3) {
      const auto j = r.number<std::uint32_t>(tokens[1], "index");
      if (j == 0) fail_at(source, r.line_no, 3, "weight index must be >= 1");
      h.set_weight(j, r.number<double>(tokens[2], "weight"));
    } else {
      fail_at(source, r.line_no, 1, "expected 'bias <b>' or 'w <index> <value>'");
    }
  }
  return h;
}

}  // namespace llp
