#pragma once

#include <cstdint>
#include <vector>

#include "inducer/families.hpp"

namespace inducer {

double unit_ball_volume(int d);
double ball_volume(int d, double r);
// c = 1 / (2^{d+2} V^d sqrt(d)), V the unit-ball volume.
double partition_c(int d);
// Smallest cube side in cells: a power of two with at least 8 cells per cube.
int min_cube_cells(int d);

struct PartitionR {
  GridPtr grid;
  std::vector<Region> elements;
  int z = -1;  // index of Z, when given (always 0)
  double delta = 0;
  double c = 0;
  double nominal_side = 0;  // c * delta
  int side_cells = 0;       // cube side actually used
  double min_measure = 0;   // Leb(R) = min_k Leb(R_k)
  double CZ = 0;
  std::vector<int> owner;  // element of every grid cell (-1 outside X)

  int N() const { return int(elements.size()); }
  int element_at(const Cell& c) const { return owner[grid->linear(c)]; }
  double c_R() const { return 0.5; }
  double C_R() const;
  double Cbar_R(double Ca) const { return (Ca * C_R() + 1) * Ca / c_R(); }
  double max_element_diameter() const;
};

// Cubes of side max(round(c delta / eta), min_cube_cells) anchored at the grid corner, Z as element 0.
PartitionR build_partition(const AmbientSpace& space, double delta, const Region* Z = nullptr, double CZ = 0);

struct Selection {
  int element = -1;
  Cell witness{0, 0, 0};
  double kept_fraction = 0;  // Leb(I \ R) / Leb(I)
  bool ball_checked = false;
  bool in_ball = false;      // R within B(x, delta)
  double collar_excess = 0;  // max over eps of lhs - rhs - slack (<= 0 passes)
  bool ok_kept = false;
  bool ok_collar = false;
};
// Partition element holding the deepest cell of I. Throws unless I is delta-regular and R lies in I.
Selection select_contained_element(const Region& I, double delta, const PartitionR& part,
                                   const std::vector<double>& eps_grid);

double fixed_ratio_constant(double eps0, const PartitionR& part, const GrowthConstants& gc);

struct NiceBoundaryCertificate {
  double CZ = 0;              // 1.5 x the larger measured ratio
  double boundary_ratio = 0;  // max Leb(∂_ε Z) / ε
  double collar_ratio = 0;    // max Leb(∂_ε(I \ Z) \ ∂_ε I) / Leb(∂_ε I)
  std::vector<double> eps;
};
NiceBoundaryCertificate certify_nice_boundary(const Region& Z, int suite = 16, std::uint64_t seed = 1);

}  // namespace inducer
