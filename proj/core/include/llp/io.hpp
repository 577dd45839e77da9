#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "llp/core.hpp"

namespace llp {

/// Sparse labeled text: "<label> <idx>:<val> ...", label in {-1,+1,0,1} with
/// 0/1 mapped to -1/+1. Blank lines and lines starting with '#' are skipped.
/// Errors name the source and line.
std::vector<Instance> parse_sparse_dataset(std::istream& in, const std::string& source = "<input>");
std::vector<Instance> load_sparse_dataset(const std::string& path);
void write_sparse_dataset(std::ostream& out, const std::vector<Instance>& instances);

struct GroupSpec {
  std::string name;
  std::vector<std::uint32_t> features;  // empty: collects instances with none of the attribute's features
};

/// attribute -> groups in file order.
using GroupMapping = std::map<std::string, std::vector<GroupSpec>>;

/// Lines "attribute group-id feature-index..."; '#' starts a comment line.
GroupMapping parse_group_mapping(std::istream& in, const std::string& source = "<input>");
GroupMapping load_group_mapping(const std::string& path);

/// Group name of every instance under `attribute`: the first group with an
/// active feature, else the group with an empty feature list, else "?".
/// Throws a usage error listing the available attributes when unknown.
std::vector<std::string> assign_groups(const std::vector<Instance>& instances,
                                       const GroupMapping& mapping, const std::string& attribute);

struct Split {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Random split fixed by seed; round(train_fraction * n) instances train.
Split split_indices(std::size_t n, double train_fraction, std::uint64_t seed);

std::vector<Instance> select(const std::vector<Instance>& instances, const std::vector<std::size_t>& idx);

/// Self-contained text form of a BagDataset ("llp-bags 1").
void write_bags(std::ostream& out, const BagDataset& data);
BagDataset read_bags(std::istream& in, const std::string& source = "<input>");

/// Text form of a LinearHypothesis ("llp-model 1"); values round-trip exactly.
void write_model(std::ostream& out, const LinearHypothesis& h);
LinearHypothesis read_model(std::istream& in, const std::string& source = "<input>");

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace llp
