#pragma once

#include <string>
#include <vector>

#include "inducer/families.hpp"
#include "inducer/partition.hpp"
#include "inducer/scheme.hpp"

namespace inducer {

// Live pair of the current family; node < 0 is the seed element -1 - node.
struct LivePair {
  int node = 0;
  std::vector<double> f;  // unnormalized density, box-local on the domain
  unsigned tag = 0;
};

struct StopOutcome {
  double stopped = 0;
  double remaining = 0;
  int groups = 0;
  int regular = 0;
};

// Tagged lineages for the recurrent builder: bit 0 marks mass from the Z seed until `hold_until`,
// bit 1 + j marks mass that has followed itineraries[j] so far.
struct LineageSpec {
  int hold_until = 0;
  std::vector<std::vector<int>> itineraries;
};

// Pushes seed densities forward one step at a time, chopping and merging identical domains,
// and records every node and stop in a DAG.
class History {
 public:
  History(const PiecewiseMap& map, const PartitionR& part);

  std::vector<Node> nodes;
  std::vector<StopGroup> groups;
  std::vector<LivePair> live;
  int time = 0;
  LineageSpec lineage;

  void seed(const std::vector<int>& elements, unsigned tag_for_first = 0);
  const Region& domain_of(int node) const;
  double live_mass() const;
  StandardFamily family() const;

  void step(const Region* Vstar = nullptr);
  // Generic stopping; pairs whose tag intersects `skip` are left alone.
  StopOutcome stop(const std::string& policy, double delta, unsigned skip = 0);
  // Stops `element` from every live pair whose domain contains `container` (and carries `need` tag bits).
  StopOutcome stop_element(int element, const Region& container, unsigned need, int group_tag);

 private:
  const PiecewiseMap& map_;
  const PartitionR& part_;
  double eps0_;
  int remainder_node(int node, const Region& rest, double mass);
};

}  // namespace inducer
