#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "inducer/geometry.hpp"

namespace inducer {

// T x = A x + c, A row-major 3x3 (only the leading d x d block is used).
struct Affine {
  std::array<double, 9> A{1, 0, 0, 0, 1, 0, 0, 0, 1};
  Vec c{0, 0, 0};

  Vec apply(const Vec& x, int d) const;
  Affine inverse(int d) const;
  Affine then(const Affine& next, int d) const;  // next o this
  double det(int d) const;
};

struct Branch {
  std::string id;
  std::vector<int> itinerary;                 // base branch indices, first step first
  std::function<bool(const Vec&)> in_domain;  // x in O_h
  std::function<Vec(const Vec&)> forward;     // T on O_h
  // y -> (x = h(y), Jh(y)); false when y is not in T(O_h).
  std::function<bool(const Vec&, Vec&, double&)> pull;
  double lambda = 0;
  std::optional<Affine> affine;  // forward map when affine
};

struct MapConstants {
  double Lambda = 0.5;
  double alpha = 1.0;
  double Dtilde = 0.0;
  int n0 = 1;
  double sigma = 0.0;
  double Cbar = 0.0;
  double eps_exp = 1.0;
  double eps_cplx = 1.0;
  double a0 = 0.1;
  double P = 0.0;  // properness target

  double D() const;
  double eps0() const;
  // Throws a config error on Lambda, alpha, sigma or a0 out of range.
  void validate() const;
};

class PiecewiseMap {
 public:
  std::string name;
  AmbientSpace ambient;
  std::vector<Branch> branches;
  MapConstants k;
  std::function<int(const Vec&)> branch_at;  // -1 outside every domain
  double unresolved_mass = 0;                // truncated branch mass

  int d() const { return ambient.grid->d; }
  const GridPtr& grid() const { return ambient.grid; }
  // Branch of each grid cell centre, computed once.
  const std::vector<int>& labels() const;
  // Cell bounding box of each branch domain.
  const std::vector<Box>& domain_boxes() const;
  Region domain(int b) const;

 private:
  mutable std::once_flag labels_once_;
  mutable std::vector<int> labels_;
  mutable std::vector<Box> boxes_;
};
using MapPtr = std::shared_ptr<const PiecewiseMap>;

struct RasterDensity {
  Region support;
  std::vector<double> values;  // indexed box-locally on support

  static RasterDensity uniform(const Region& r, double value);
  double at(const Cell& c) const;
  double integral() const;
};

// Branches of T^n. Domains are n-cylinders of positive raster measure.
std::vector<Branch> compose_branches(const PiecewiseMap& map, int n, std::size_t cap = 1 << 16);
// Same, restricted to cylinders that meet `support` (cells and their neighbours).
std::vector<Branch> compose_branches_meeting(const PiecewiseMap& map, int n, const Region& support,
                                             std::size_t cap = 1 << 16);
Branch compose_itinerary(const PiecewiseMap& map, const std::vector<int>& itinerary);
// Base branch indices whose domains may meet the region (labels of cells and neighbours).
std::vector<int> branches_meeting(const PiecewiseMap& map, const Region& r);

struct ExpansionReport {
  std::vector<double> measured;
  std::vector<int> flagged;
  std::vector<std::string> warnings;
  double max_measured = 0;
};
ExpansionReport verify_expansion(const PiecewiseMap& map, std::size_t samples = 100000, std::uint64_t seed = 1);

struct DistortionReport {
  double measured = 0;
  double alpha = 1;
  bool flagged = false;
};
DistortionReport verify_distortion(const PiecewiseMap& map, std::size_t samples = 100000, std::uint64_t seed = 1);

struct ComplexityEstimate {
  double sigma_hat = 0;
  std::vector<double> cbar_hat;  // r = 1 .. n0-1
};
ComplexityEstimate estimate_complexity(const PiecewiseMap& map, const Region& I, double eps);
// One term family of the complexity expression at iterate r.
double complexity_sum(const PiecewiseMap& map, const Region& I, double eps, int r);

struct ComplexitySweep {
  double sigma_max = 0;
  double cbar_max = 0;
  int boxes = 0;
};
// Random boxes plus boxes straddling cut points, all of diameter <= eps_cplx.
ComplexitySweep complexity_sweep(const PiecewiseMap& map, int count, std::uint64_t seed);

// Image of (I, f) under one branch by pull-back sampling; f indexed box-locally on I.
struct BranchImage {
  Region domain;
  std::vector<double> f;
};
BranchImage branch_image(const Branch& b, const GridPtr& g, const Region& I, const std::vector<double>& f);
// Cell box covering T_b(I) (with a margin).
Box image_box(const Branch& b, const GridPtr& g, const Region& I);

RasterDensity transfer_apply(const PiecewiseMap& map, const RasterDensity& f, int n);
RasterDensity transfer_apply_serial(const PiecewiseMap& map, const RasterDensity& f, int n);

}  // namespace inducer
