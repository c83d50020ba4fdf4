#include <doctest.h>

#include <cmath>
#include <random>

#include "inducer/geometry.hpp"

using namespace inducer;

namespace {

GridPtr square(double eta) { return Grid::make(2, {0, 0, 0}, {1, 1, 0}, eta); }

bool in_L(const Vec& p) { return !(p[0] > 0.5 && p[1] > 0.5); }

}  // namespace

TEST_CASE("measure of full, empty and disk regions") {
  auto g = square(0.01);
  CHECK(measure(Region::full(g)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(measure(Region(g)) == 0.0);

  const double eta = 1.0 / 2048;
  auto h = square(eta);
  Region disk = Region::from_predicate(h, [](const Vec& p) {
    return (p[0] - 0.5) * (p[0] - 0.5) + (p[1] - 0.5) * (p[1] - 0.5) < 1.0 / 16;
  });
  const double perimeter = 2 * M_PI * 0.25;
  CHECK(std::abs(measure(disk) - M_PI / 16) <= 4 * perimeter * eta);
}

TEST_CASE("eps boundary of the unit square") {
  auto g = square(1.0 / 200);
  Region sq = Region::full(g);
  Region b = eps_boundary(sq, 0.1);
  CHECK(std::abs(measure(b) - 0.36) <= raster_slack(sq));
  CHECK(measure(eps_boundary(sq, 0)) == 0.0);
  CHECK(eps_boundary(sq, 2.0).count() == sq.count());
}

TEST_CASE("eps boundary of an L-shape against a 16x finer raster") {
  auto coarse = square(1.0 / 128);
  auto fine = square(1.0 / 2048);
  Region Lc = Region::from_predicate(coarse, in_L);
  Region Lf = Region::from_predicate(fine, in_L);
  const double mc = eps_boundary_measure(Lc, 0.05);
  const double mf = eps_boundary_measure(Lf, 0.05);
  CHECK(std::abs(mc - mf) <= raster_slack(Lc));
  CHECK(std::abs(measure(Lc) - 0.75) <= raster_slack(Lc));
}

TEST_CASE("eps boundaries are nested") {
  auto g = square(1.0 / 64);
  Region L = Region::from_predicate(g, in_L);
  Region a = eps_boundary(L, 0.03), b = eps_boundary(L, 0.07);
  CHECK(a.subset_of(b));
}

TEST_CASE("diameter bounds") {
  const double eta = 1.0 / 100;
  auto g = square(eta);
  CHECK(diameter(Region::from_cells(g, {Cell{3, 4, 0}})) == doctest::Approx(eta * std::sqrt(2.0)));
  CHECK(std::abs(diameter(Region::full(g)) - std::sqrt(2.0)) <= eta * std::sqrt(2.0) + 1e-12);
  Region corners = Region::from_cells(g, {Cell{0, 0, 0}, Cell{99, 99, 0}});
  CHECK(std::abs(diameter(corners) - std::sqrt(2.0)) <= 2 * eta * std::sqrt(2.0));
  CHECK_THROWS_AS(diameter(Region(g)), Error);
}

TEST_CASE("delta regularity and the witness ball") {
  auto g = square(1.0 / 100);
  Region sq = Region::full(g);
  Regularity r = is_delta_regular(sq, 0.4);
  CHECK(r.regular);
  CHECK_FALSE(is_delta_regular(sq, 0.5).regular);
  Region strip = Region::box_region(g, {0, 0.4, 0}, {1, 0.41, 0});
  CHECK_FALSE(is_delta_regular(strip, 0.4).regular);
  // Every cell whose centre is within delta of the witness lies in the region.
  Region L = Region::from_predicate(g, in_L);
  Regularity w = is_delta_regular(L, 0.2);
  REQUIRE(w.regular);
  const Vec x = g->center(w.witness);
  long long outside = 0;
  for (long long k = 0; k < g->total(); ++k) {
    Cell c = g->unlinear(k);
    if (dist(g->center(c), x, 2) < 0.2 && !L.contains(c)) ++outside;
  }
  CHECK(outside == 0);
}

TEST_CASE("distance relative to X ignores the faces of X") {
  const double eta = 1.0 / 256;
  auto g = Grid::make(1, {0, 0, 0}, {1, 0, 0}, eta);
  Region left = Region::box_region(g, {0, 0, 0}, {16 * eta, 0, 0});
  const auto rel = distance_in_X(left, 0.1);
  CHECK(rel[0] == doctest::Approx(15.5 * eta));
  CHECK(left.distance()[0] == doctest::Approx(0.5 * eta));
  CHECK(is_delta_regular_in_X(left, 10 * eta).regular);
  CHECK_FALSE(is_delta_regular(left, 10 * eta).regular);
  Region mid = Region::box_region(g, {0.25, 0, 0}, {0.5, 0, 0});
  CHECK(distance_in_X(mid, 0.1) == mid.distance());
}

TEST_CASE("distance transform kernels agree with brute force") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> side(1, 24);
  std::bernoulli_distribution bit(0.7);
  for (int t = 0; t < 30; ++t) {
    const int d = 1 + t % 3;
    Box b;
    b.size = {side(rng), d >= 2 ? side(rng) : 1, d >= 3 ? side(rng) % 8 + 1 : 1};
    std::vector<uint8_t> m(b.volume());
    for (auto& v : m) v = bit(rng);
    std::vector<float> a, s, o;
    edt_squared(b, m, d, a);
    edt_squared_serial(b, m, d, s);
    edt_squared_bruteforce(b, m, d, o);
    CHECK(a == o);
    CHECK(s == o);
  }
}

TEST_CASE("boundary transversality on the unit square with the vertical midline") {
  auto g = square(1.0 / 200);
  Region sq = Region::full(g);
  BtResult r = bt_check(sq, Hyperplane::make({1, 0, 0}, 0.5, 2), 0.1, 1.0);
  CHECK(r.lhs <= r.rhs + r.slack);
  BtResult z = bt_check(sq, Hyperplane::make({1, 0, 0}, 0.5, 2), 0.1, 0.0);
  CHECK(z.lhs == 0.0);
  BtResult away = bt_check(Region::box_region(g, {0.6, 0.1, 0}, {0.9, 0.9, 0}), Hyperplane::make({1, 0, 0}, 0.5, 2),
                           0.1, 1.0);
  CHECK(away.lhs == 0.0);
  CHECK_THROWS_AS(Hyperplane::make({0, 0, 0}, 0.5, 2), Error);
}

TEST_CASE("run-length round trip") {
  auto g = square(1.0 / 64);
  Region L = Region::from_predicate(g, in_L);
  CHECK(Region::from_runs(g, L.runs()) == L);
}
