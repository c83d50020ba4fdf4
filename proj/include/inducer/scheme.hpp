#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "inducer/geometry.hpp"

namespace inducer {

// parent < 0 names seed element -1 - parent; branch -1 is a restriction (no time step).
struct Edge {
  int parent = 0;
  int branch = 0;
  double mass = 0;
};

struct Node {
  int time = 0;
  Region domain;
  std::vector<Edge> parents;
  double mass = 0;
};

// Mass on `element` (inside the node's domain) stopped with return time tau.
struct StopGroup {
  int node = 0;
  int element = 0;
  int tau = 0;
  double mass = 0;
  int tag = 0;  // 1 + j for the recurrent stops A_j, 0 otherwise
};

struct RoundLog {
  int round = 0;
  int time = 0;
  int extension = 0;
  int live_pairs = 0;
  double properness = 0;
  double stopped = 0;
  double remainder = 0;
  double ratio = 0;
  double remainder_properness = 0;
  double regular_fraction = 0;
};

struct TailFit {
  double kappa = 0;
  double constant = 0;
  double r2 = 0;
  int points = 0;
  int n_min = 0, n_max = 0;
};

struct PathStep {
  int node = 0;
  int branch = 0;
};

// One application of G: from a point of seed element `seed`, along `path`, stopped in `group`.
struct GStep {
  int seed = 0;
  int group = 0;
  std::vector<PathStep> path;
};

// A cell of the first-return map: consecutive G-steps from Z back to Z.
struct Composite {
  int tau_tilde = 0;
  std::vector<GStep> steps;
};

struct UpgradeRecord {
  int z = -1;
  int samples = 0;
  int lost = 0;
  double mean_steps = 0;
  std::vector<std::pair<int, double>> tail;  // (n, Leb(tau~ > n))
  TailFit fit;
  std::vector<int> realized;  // distinct tau~ values with positive mass
  std::vector<Composite> composites;
  double tau1_mass = 0;  // Leb(O_h ∩ {tau~ = 1}) for gcd1 runs
};

struct Manifest {
  std::string map;  // catalog id or spec path
  std::string map_hash;
  std::string mode;
  double eta = 0;
  std::uint64_t seed = 1;
  double delta = 0;
  double a0 = 0, eps0 = 0, P = 0, delta0 = 0;
  int n0 = 1;
  double Lambda = 0, D = 0, alpha = 1, sigma = 0;
  double t = 0;
  int nrec_first = 0, nrec_later = 0;
  double Ca = 1, Cbar_R = 0, CZ = 0;
  double zeta1 = 0, zeta2 = 0, zeta4 = 0, theta2 = 0;
  double halt_mass = 0;
  int rounds = 0;
  std::string halted;
  int N = 0;
  double min_measure = 0;
  double base_measure = 0;
  double unresolved = 0;
  std::string stop_policy;
  Runs Z;   // empty when no Z
  Runs Zp;  // collar for gcd1
  std::vector<int> times;
  std::vector<std::vector<int>> itineraries;
};

struct InducingScheme {
  Manifest manifest;
  std::vector<Node> nodes;
  std::vector<StopGroup> groups;
  std::vector<std::pair<int, double>> tail;  // (n, Leb(tau > n))
  TailFit fit;
  std::vector<RoundLog> rounds;
  UpgradeRecord upgrade;
};

// Leb(tau > n) for n = 0 .. max tau from the stop groups.
std::vector<std::pair<int, double>> tail_table(const std::vector<StopGroup>& groups, double base_measure);
// Least squares of ln Leb(tau > n) against n >= 1 where the tail exceeds `floor`.
TailFit fit_tail(const std::vector<std::pair<int, double>>& tail, double floor);

void write_scheme(std::ostream& os, const InducingScheme& s);
InducingScheme read_scheme(std::istream& is, GridPtr grid);
void save_scheme(const std::string& path, const InducingScheme& s);
InducingScheme load_scheme(const std::string& path, GridPtr grid);
// Reads only the manifest section (used to rebuild the map before the full read).
Manifest read_manifest(const std::string& path);

}  // namespace inducer
