#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "inducer/error.hpp"

namespace inducer {

constexpr int kMaxDim = 3;
using Vec = std::array<double, kMaxDim>;
using Cell = std::array<int, kMaxDim>;

double dist(const Vec& a, const Vec& b, int d);

class Grid {
 public:
  int d = 1;
  Vec lo{0, 0, 0};
  Vec hi{0, 0, 0};
  double eta = 0;
  Cell n{1, 1, 1};
  double cell_volume = 0;

  // Throws config error unless eta divides every side of [lo, hi).
  static std::shared_ptr<const Grid> make(int d, const Vec& lo, const Vec& hi, double eta);

  Vec center(const Cell& c) const;
  bool locate(const Vec& p, Cell& c) const;
  long long linear(const Cell& c) const { return c[0] + (long long)n[0] * (c[1] + (long long)n[1] * c[2]); }
  Cell unlinear(long long k) const;
  long long total() const { return (long long)n[0] * n[1] * n[2]; }
};
using GridPtr = std::shared_ptr<const Grid>;

struct Box {
  Cell lo{0, 0, 0};
  Cell size{0, 0, 0};
  long long volume() const { return (long long)size[0] * size[1] * size[2]; }
  bool contains(const Cell& c) const {
    for (int i = 0; i < kMaxDim; ++i)
      if (c[i] < lo[i] || c[i] >= lo[i] + size[i]) return false;
    return true;
  }
  long long local(const Cell& c) const {
    return (c[0] - lo[0]) + (long long)size[0] * ((c[1] - lo[1]) + (long long)size[1] * (c[2] - lo[2]));
  }
  Cell cell(long long k) const {
    Cell c;
    c[0] = lo[0] + int(k % size[0]);
    k /= size[0];
    c[1] = lo[1] + int(k % size[1]);
    c[2] = lo[2] + int(k / size[1]);
    return c;
  }
  static Box hull(const Box& a, const Box& b);
  static Box overlap(const Box& a, const Box& b);
  bool operator==(const Box& o) const { return lo == o.lo && size == o.size; }
};

using Runs = std::vector<std::pair<long long, long long>>;  // (first linear index, length)

// Open set mod 0 on a raster: a cell belongs iff its centre does.
class Region {
 public:
  Region() = default;
  explicit Region(GridPtr g);

  static Region from_mask(GridPtr g, const Box& box, std::vector<uint8_t> mask);
  static Region from_predicate(GridPtr g, const std::function<bool(const Vec&)>& inside);
  static Region from_predicate(GridPtr g, const Box& within, const std::function<bool(const Vec&)>& inside);
  static Region full(GridPtr g);
  // Cells whose centres lie in the open box (lo, hi).
  static Region box_region(GridPtr g, const Vec& lo, const Vec& hi);
  static Region from_cells(GridPtr g, const std::vector<Cell>& cells);
  static Region from_runs(GridPtr g, const Runs& runs);

  const GridPtr& grid() const { return grid_; }
  const Box& box() const { return box_; }
  const std::vector<uint8_t>& mask() const { return mask_; }
  long long count() const { return count_; }
  bool empty() const { return count_ == 0; }
  double measure() const;

  bool contains(const Cell& c) const { return box_.contains(c) && mask_[box_.local(c)]; }
  bool contains_point(const Vec& p) const;

  // Distance from each cell centre to the boundary, in length units; indexed box-locally.
  const std::vector<float>& distance() const;
  double distance_at(const Cell& c) const { return distance()[box_.local(c)]; }

  Region intersect(const Region& o) const;
  Region subtract(const Region& o) const;
  Region unite(const Region& o) const;
  bool subset_of(const Region& o) const;
  bool operator==(const Region& o) const;
  bool operator!=(const Region& o) const { return !(*this == o); }
  std::size_t hash() const;

  template <class F>
  void for_each(F&& f) const {
    const long long v = box_.volume();
    for (long long k = 0; k < v; ++k)
      if (mask_[k]) f(box_.cell(k), k);
  }

  Runs runs() const;
  long long boundary_cell_count() const;
  std::vector<Cell> cells() const;

 private:
  struct Cache {
    std::once_flag once;
    std::vector<float> dist;
  };
  GridPtr grid_;
  Box box_;
  std::vector<uint8_t> mask_;
  long long count_ = 0;
  std::shared_ptr<Cache> cache_;

  void trim();
};

struct AmbientSpace {
  GridPtr grid;
  Region space;
  int d() const { return grid->d; }
  // sup over the grid of Leb(∂_ε X)/ε (finiteness check of the boundary condition).
  double boundary_ratio_sup(const std::vector<double>& eps_grid) const;
};

// Exact Euclidean distance transform kernels. Output: squared distance (cell units)
// from every cell of the box to the nearest cell centre outside the mask.
void edt_squared(const Box& box, const std::vector<uint8_t>& mask, int d, std::vector<float>& out);
void edt_squared_serial(const Box& box, const std::vector<uint8_t>& mask, int d, std::vector<float>& out);
void edt_squared_bruteforce(const Box& box, const std::vector<uint8_t>& mask, int d, std::vector<float>& out);

double measure(const Region& r);
Region eps_boundary(const Region& r, double eps);
double eps_boundary_measure(const Region& r, double eps);
double diameter(const Region& r);

struct Regularity {
  bool regular = false;
  Cell witness{0, 0, 0};
  double depth = 0;
};
// Witness is the deepest cell; ties go to the smallest linear index.
Regularity is_delta_regular(const Region& r, double delta);
// Distance to the boundary of r relative to X: faces of X are not boundary. The region is
// mirrored across every face of X its box touches, out to `reach`. Same layout as distance().
std::vector<float> distance_in_X(const Region& r, double reach);
Regularity is_delta_regular_in_X(const Region& r, double delta);

// Slack for lemma inequalities on the raster: kappa_geo * boundary cells * cell volume.
constexpr double kGeoSlack = 4.0;
double raster_slack(const Region& r);

struct Hyperplane {
  Vec normal{1, 0, 0};
  double offset = 0;
  static Hyperplane make(const Vec& normal, double offset, int d);
  double signed_distance(const Vec& p, int d) const;
};

struct BtResult {
  double lhs = 0;
  double rhs = 0;
  double slack = 0;
};
BtResult bt_check(const Region& I, const Hyperplane& E, double eps, double xi);

// Dyadic grid eps_max / 2^k, k = 0..K, stopping above eps_min.
std::vector<double> dyadic_grid(double eps_max, double eps_min, int kmax = 40);

}  // namespace inducer
