#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "inducer/dynamics.hpp"

namespace inducer {

struct StandardPair {
  Region domain;
  std::vector<double> rho;  // box-local on domain; integrates to 1
  double weight = 1;

  static StandardPair uniform(const Region& I, double weight = 1);
  // Splits an unnormalized density f into weight = integral and rho = f / weight.
  static StandardPair from_density(const Region& I, const std::vector<double>& f);
  std::vector<double> scaled() const;  // weight * rho
};

struct StandardFamily {
  std::vector<StandardPair> pairs;
  double total() const;
  RasterDensity induced() const;
};

struct GrowthConstants {
  double Ca = 1, ca = 1;
  double Ceps0 = 0;
  double zeta1 = 0;
  double zeta2 = 0, zeta3 = 1, zeta4 = 0;
  double theta1 = 0, theta2 = 0;
  double P = 0;
  double delta0 = 0;
  bool fitted = false;

  static GrowthConstants make(const PiecewiseMap& map, double P);
};

// Sampled sup of |ln rho(x) - ln rho(y)| / d(x,y)^alpha over cell-centre pairs.
double holder_seminorm(const StandardPair& p, double alpha, std::size_t exhaustive_limit = 3000, std::uint64_t seed = 1);

struct ComparabilityReport {
  double inf_I = 0, sup_I = 0, avg_J = 0, avg_Jp = 0;
  double factor = 1;  // e^{a eps0^alpha}
  bool ok = false;
};
ComparabilityReport comparability_check(const StandardPair& p, const Region& J, const Region& Jp, double a, double alpha,
                                        double eps0);

struct ChopResult {
  std::vector<Region> pieces;
  int star = -1;  // piece containing V*
  int side = 0;   // cube side in cells
  Cell offset{0, 0, 0};
  bool sub_average = true;  // every axis found an offset at or below the average crossing count
};
// Pieces of diameter <= eps0 covering V. Returns {V} when V is already small enough.
ChopResult chop(const Region& V, const Region* Vstar, double eps0);

struct ChopCost {
  double cost = 0;
  double slack = 0;
};
// sum over pieces of Leb(h(∂_ε U \ ∂_ε V)) / Leb(h(V)) with `jac` the Jacobian of h on V.
ChopCost chop_cost(const Region& V, const std::vector<Region>& pieces, const std::function<double(const Vec&)>& jac,
                   double eps);

// One application of the n-step iteration with chopping at the end.
StandardFamily iterate(const PiecewiseMap& map, const StandardFamily& fam, int n, const Region* Vstar = nullptr);
// n single steps, each followed by chopping, merging pairs on equal domains.
StandardFamily iterate_stepwise(const PiecewiseMap& map, const StandardFamily& fam, int n, const Region* Vstar = nullptr);
// Sums pairs with identical domains.
StandardFamily consolidate(const StandardFamily& fam);

double boundary_weight(const StandardFamily& fam, double eps);
std::vector<double> boundary_weights(const StandardFamily& fam, const std::vector<double>& eps);
// One raster layer of boundary, weighted by the largest density on each pair.
double family_slack(const StandardFamily& fam);
std::vector<double> proper_grid(double eps0, double eta);
bool is_proper(const StandardFamily& fam, double B, const std::vector<double>& eps_grid);
// Smallest B passing is_proper on the grid.
double properness(const StandardFamily& fam, const std::vector<double>& eps_grid);

struct GrowthResult {
  double lhs = 0, rhs = 0, slack = 0;
};
GrowthResult growth_check(const PiecewiseMap& map, const StandardFamily& fam, double eps, const GrowthConstants& gc);

// Families with measured properness at most B (pairs of side about 2d/B, uniform densities).
std::vector<StandardFamily> calibration_suite(const PiecewiseMap& map, double B, int count, std::uint64_t seed);

// Fits zeta2, zeta4 (zeta3 = 1) over step-wise iterates of the suite, inflated by 1.5.
void fit_growth(const PiecewiseMap& map, const std::vector<StandardFamily>& suite, int max_steps, GrowthConstants& gc);

struct RecoveryOptions {
  int cap = 60;
  int window = 2;        // extra steps that must stay proper
  bool analytic = false;  // also enforce B zeta3 theta2^n + zeta4 <= P
  int suite_size = 4;
  std::uint64_t seed = 1;
};
int recovery_time(const PiecewiseMap& map, double B, const GrowthConstants& gc, const RecoveryOptions& opt = {});
int analytic_recovery_time(double B, const GrowthConstants& gc);

// Removes the selected region from each pair (empty region = keep the pair).
StandardFamily remainder(const StandardFamily& fam, const std::vector<Region>& selection);

struct ZRemainder {
  StandardFamily family;
  double Bprime = 0;
};
ZRemainder remainder_with_Z(const StandardFamily& fam, const Region& Z, const Region& Zp, const std::vector<double>& eps_grid);

struct RegularWeight {
  double regular_fraction = 0;   // weight on delta-regular pairs / total
  double interior_fraction = 0;  // sum w int_{I \ ∂_δ I} rho / total
};
RegularWeight regular_weight(const StandardFamily& fam, double delta);

}  // namespace inducer
