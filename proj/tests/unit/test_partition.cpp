#include <doctest.h>

#include <cmath>
#include <random>

#include "inducer/partition.hpp"

using namespace inducer;

namespace {

AmbientSpace unit(int d, double eta) {
  AmbientSpace a;
  a.grid = Grid::make(d, {0, 0, 0}, {1, d >= 2 ? 1.0 : 0.0, 0}, eta);
  a.space = Region::full(a.grid);
  return a;
}

// Union of 1-3 random axis boxes.
Region random_union(const GridPtr& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0, 1);
  Region r(g);
  const int k = 1 + int(rng() % 3);
  for (int t = 0; t < k; ++t) {
    const double w = 0.15 + 0.45 * U(rng), h = 0.15 + 0.45 * U(rng);
    const double x = U(rng) * (1 - w), y = U(rng) * (1 - h);
    r = r.unite(Region::box_region(g, {x, y, 0}, {x + w, y + h, 0}));
  }
  return r;
}

}  // namespace

TEST_CASE("partition constant") {
  // 1 / (2^{d+2} V_d^d sqrt d)
  CHECK(partition_c(1) == doctest::Approx(1.0 / 16));
  CHECK(partition_c(2) == doctest::Approx(1 / (16 * M_PI * M_PI * std::sqrt(2.0))));
  CHECK(partition_c(2) == doctest::Approx(4.478e-3).epsilon(1e-3));
  CHECK(partition_c(2) * 0.5 == doctest::Approx(2.239e-3).epsilon(1e-3));
  CHECK(ball_volume(2, 0.1) == doctest::Approx(M_PI * 0.01));
  CHECK(ball_volume(3, 1) == doctest::Approx(4 * M_PI / 3));
}

TEST_CASE("partition of the unit interval") {
  auto X = unit(1, std::ldexp(1.0, -8));
  PartitionR p = build_partition(X, 0.5);
  CHECK(p.side_cells == 8);
  CHECK(p.N() == 32);
  CHECK(p.min_measure == doctest::Approx(1.0 / 32));
  long long cells = 0;
  for (const auto& e : p.elements) cells += e.count();
  CHECK(cells == X.grid->total());
  CHECK_THROWS_AS(build_partition(X, 0), Error);
}

TEST_CASE("partition with a distinguished element") {
  const double eta = 1.0 / 128;
  auto X = unit(2, eta);
  Region Z = Region::box_region(X.grid, {0.25, 0.25, 0}, {0.25 + 4 * eta, 0.25 + 4 * eta, 0});
  PartitionR p = build_partition(X, 0.5, &Z, 4);
  CHECK(p.z == 0);
  CHECK(p.elements[0] == Z);
  for (int e = 1; e < p.N(); ++e) CHECK(p.elements[e].intersect(Z).empty());
  Region big = Region::box_region(X.grid, {0.1, 0.1, 0}, {0.9, 0.9, 0});
  CHECK_THROWS_AS(build_partition(X, 0.5, &big, 4), Error);
}

TEST_CASE("contained elements on random regular regions") {
  const double eta = 1.0 / 256;
  auto X = unit(2, eta);
  const double delta = 0.05;
  PartitionR p = build_partition(X, delta);
  const auto grid = dyadic_grid(0.25, eta);
  std::mt19937_64 rng(8);
  int tried = 0, pass_kept = 0, pass_collar = 0;
  while (tried < 100) {
    Region I = random_union(X.grid, rng);
    if (!is_delta_regular(I, delta).regular) continue;
    ++tried;
    Selection s = select_contained_element(I, delta, p, grid);
    const Region& R = p.elements[s.element];
    CHECK(R.subset_of(I));
    // Direct evaluation of both inequalities.
    const bool a = measure(I.subtract(R)) >= 0.5 * measure(I) - raster_slack(I);
    bool b = true;
    const Region rest = I.subtract(R);
    for (double e : grid) {
      const double lhs = measure(eps_boundary(rest, e).subtract(eps_boundary(I, e)));
      if (lhs > 4 * eps_boundary_measure(I, e) + raster_slack(rest) + raster_slack(I)) b = false;
    }
    CHECK(a == s.ok_kept);
    CHECK(b == s.ok_collar);
    pass_kept += a;
    pass_collar += b;
  }
  CHECK(pass_kept == 100);
  CHECK(pass_collar == 100);
  CHECK_THROWS_AS(select_contained_element(Region::box_region(X.grid, {0, 0.4, 0}, {1, 0.42, 0}), delta, p, grid), Error);
}

TEST_CASE("fixed ratio constant") {
  auto X = unit(1, 1.0 / 256);
  PartitionR p;
  p.grid = X.grid;
  p.min_measure = 1.0 / 32;
  GrowthConstants gc;
  gc.Ca = gc.ca = 1;
  // (2/3)(1/0.2)(1/32)^2 / (1/96 + 0.2)
  CHECK(fixed_ratio_constant(0.1, p, gc) == doctest::Approx(1.5468e-2).epsilon(1e-3));
}

TEST_CASE("nice boundary certificate of a disk") {
  auto g = Grid::make(2, {0, 0, 0}, {1, 1, 0}, 1.0 / 512);
  const double r = 0.1;
  Region Z = Region::from_predicate(g, [&](const Vec& x) {
    return (x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.5) * (x[1] - 0.5) < r * r;
  });
  NiceBoundaryCertificate c = certify_nice_boundary(Z);
  // Leb(∂_ε Z) = 2 pi r ε - pi ε^2 <= perimeter * ε.
  CHECK(c.boundary_ratio <= 2 * M_PI * r * 1.1);
  CHECK(c.boundary_ratio >= 2 * M_PI * r * 0.8);
  CHECK(c.CZ >= c.boundary_ratio);
}
