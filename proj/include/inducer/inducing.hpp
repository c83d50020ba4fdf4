#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "inducer/families.hpp"
#include "inducer/history.hpp"
#include "inducer/partition.hpp"
#include "inducer/scheme.hpp"

namespace inducer {

struct BuildOptions {
  std::string map_source;  // recorded in the manifest
  double halt_mass = -1;   // < 0: 1e-4 Leb(X)
  int rounds = 200;
  std::string stop_policy = "interior";
  std::uint64_t seed = 1;
  double audit_fraction = 0.05;
  std::size_t node_budget = 3'000'000;
  double time_budget = 0;  // seconds, 0 = unlimited
  double delta = 0;        // 0: delta0
  int extension_cap = 20;
  RecoveryOptions recovery;
  bool fit_growth = false;
};

// Spot-audited inequality from a run.
struct AuditEntry {
  int round = 0;
  std::string kind;  // growth | regular-weight | selection
  double lhs = 0, rhs = 0, slack = 0;
  bool ok = true;
};

struct Built {
  InducingScheme scheme;
  PartitionR partition;
  GrowthConstants gc;
  std::vector<AuditEntry> audit;
};

// Hash of the map constants and branch ids, stored in the manifest.
std::string map_fingerprint(const PiecewiseMap& map);

Built build_scheme_GM(const PiecewiseMap& map, const BuildOptions& opt = {});

struct UpgradeOptions {
  int samples = 2000;
  long long depth_cap = 0;  // 0: max(100000, 50 N)
  int keep = 8;             // composites stored with full paths
  std::uint64_t seed = 1;
  int z = -1;  // -1: smallest image
};
// First return of G to a minimal image Z, sampled by walking the stop DAG.
void upgrade_full_branch(InducingScheme& s, const PiecewiseMap& map, const PartitionR& part,
                         const UpgradeOptions& opt = {});

struct RecurrenceSpec {
  Region Z;
  std::vector<int> times;
  std::vector<std::vector<int>> itineraries;  // one per time
};
// Left-endpoint spec for 1D maps whose branch 0 fixes the left end: Z = (lo, lo + cells eta),
// itineraries 0^{n-1} 1 for the given times (default {L - 2, L - 1} with eta = 2^-L).
RecurrenceSpec left_end_spec(const PiecewiseMap& map, int cells = 8, std::vector<int> times = {});
RecurrenceSpec left_end_spec(const PiecewiseMap& map, const Region& Z, std::vector<int> times);

struct CoverReport {
  bool covered = true;
  bool disjoint = true;
  double deficit = 0;  // Leb of Z cells that fail to pull back
  std::string detail;
};
// Pulls every cell centre of Z back through each itinerary (block by block), requiring
// the point to be inside Z at each block boundary in `blocks` (empty: only at the end).
CoverReport verify_covering(const PiecewiseMap& map, const Region& Z, const std::vector<std::vector<int>>& itineraries,
                            const std::vector<std::vector<int>>& blocks = {});

struct AdjustedTimes {
  std::vector<int> times;
  std::vector<long long> m;
  int L = 0;
  std::vector<std::vector<int>> itineraries;  // composed, when the spec carries itineraries
  std::vector<std::vector<int>> blocks;       // block lengths of each composed itinerary
};
AdjustedTimes adjust_times(const std::vector<int>& times, double C1, double C2);
AdjustedTimes adjust_times(const RecurrenceSpec& spec, double C1, double C2);

Built build_scheme_full_recurrent(const PiecewiseMap& map, const RecurrenceSpec& spec, const BuildOptions& opt = {});
Built build_scheme_gcd_one(const PiecewiseMap& map, const Region& Z, const Region& Zp, int branch,
                           const BuildOptions& opt = {});

struct GMReport {
  int groups = 0;
  int paths = 0;
  int images = 0;
  int snapped = 0;  // paths that moved by one cell at a raster edge (no expansion sample)
  double max_expansion = 0;   // max |x1 - x2| / (Lambda^tau |y1 - y2|)
  double max_distortion = 0;  // max |ln J(y1) - ln J(y2)| / d^alpha
  double max_image_deficit = 0;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};
GMReport verify_gibbs_markov(const InducingScheme& s, const PiecewiseMap& map, const PartitionR& part, int paths = 400,
                             std::uint64_t seed = 1);

// Partition used by a stored scheme (delta, Z and C_Z from the manifest).
PartitionR rebuild_partition(const InducingScheme& s, const PiecewiseMap& map);

}  // namespace inducer
