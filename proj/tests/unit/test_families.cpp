#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "inducer/catalog.hpp"
#include "inducer/families.hpp"
#include "inducer/partition.hpp"

using namespace inducer;

namespace {

GridPtr square(double eta) { return Grid::make(2, {0, 0, 0}, {1, 1, 0}, eta); }

// rho = exp(L u . x) on I, normalized.
StandardPair planted(const Region& I, double L, const Vec& u) {
  const auto& g = *I.grid();
  std::vector<double> f(I.box().volume(), 0.0);
  I.for_each([&](const Cell& c, long long k) {
    const Vec x = g.center(c);
    f[k] = std::exp(L * (u[0] * x[0] + u[1] * x[1]));
  });
  return StandardPair::from_density(I, f);
}

Region random_box(const GridPtr& g, std::mt19937_64& rng, int min_side, int max_side) {
  std::uniform_int_distribution<int> side(min_side, max_side);
  Box b;
  b.size = {side(rng), g->d >= 2 ? side(rng) : 1, 1};
  for (int i = 0; i < g->d; ++i) b.lo[i] = std::uniform_int_distribution<int>(0, g->n[i] - b.size[i])(rng);
  return Region::from_mask(g, b, std::vector<uint8_t>(b.volume(), 1));
}

Region sub_box(const Region& I, std::mt19937_64& rng) {
  const Box& ib = I.box();
  Box b;
  b.size = {1, 1, 1};
  for (int i = 0; i < I.grid()->d; ++i) {
    b.size[i] = std::uniform_int_distribution<int>(1, ib.size[i])(rng);
    b.lo[i] = ib.lo[i] + std::uniform_int_distribution<int>(0, ib.size[i] - b.size[i])(rng);
  }
  return Region::from_mask(I.grid(), b, std::vector<uint8_t>(b.volume(), 1));
}

}  // namespace

TEST_CASE("Holder seminorm") {
  auto g1 = Grid::make(1, {0, 0, 0}, {1, 0, 0}, 1.0 / 512);
  Region unit = Region::full(g1);
  CHECK(holder_seminorm(StandardPair::uniform(unit), 1.0) == 0.0);
  CHECK(holder_seminorm(planted(unit, 1.0, {1, 0, 0}), 1.0) == doctest::Approx(1.0).epsilon(1e-6));
  // Planted constants on a coarse 2D raster, exhaustive pairs.
  auto g = square(1.0 / 40);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0, 1);
  for (int t = 0; t < 10; ++t) {
    const double L = 0.2 + 3 * U(rng), th = 2 * M_PI * U(rng);
    Region I = random_box(g, rng, 20, 40);
    CHECK(holder_seminorm(planted(I, L, {std::cos(th), std::sin(th), 0}), 1.0) == doctest::Approx(L).epsilon(0.05));
  }
}

TEST_CASE("Comparability Lemma") {
  auto g1 = Grid::make(1, {0, 0, 0}, {1, 0, 0}, 1.0 / 1000);
  Region I = Region::box_region(g1, {0, 0, 0}, {0.5, 0, 0});
  Region J = Region::box_region(g1, {0, 0, 0}, {0.1, 0, 0});
  Region Jp = Region::box_region(g1, {0.4, 0, 0}, {0.5, 0, 0});
  auto flat = comparability_check(StandardPair::uniform(I), J, Jp, 0.0, 1.0, 0.5);
  CHECK(flat.ok);
  CHECK(flat.inf_I == doctest::Approx(flat.sup_I));
  CHECK(flat.avg_J == doctest::Approx(flat.avg_Jp));
  auto ex = comparability_check(planted(I, 1.0, {1, 0, 0}), J, Jp, 1.0, 1.0, 0.5);
  CHECK(ex.ok);
  CHECK(ex.avg_Jp / ex.avg_J == doctest::Approx(std::exp(0.4)).epsilon(1e-3));

  auto g = square(1.0 / 64);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0, 1);
  int pass = 0;
  for (int t = 0; t < 100; ++t) {
    Region box = random_box(g, rng, 4, 24);
    const double L = 4 * U(rng), th = 2 * M_PI * U(rng);
    auto p = planted(box, L, {std::cos(th), std::sin(th), 0});
    pass += comparability_check(p, sub_box(box, rng), sub_box(box, rng), L, 1.0, diameter(box)).ok;
  }
  CHECK(pass == 100);
  CHECK_THROWS_AS(comparability_check(StandardPair::uniform(I), Region(g1), Jp, 0.0, 1.0, 0.5), Error);
}

TEST_CASE("chopping a square of side 2 eps0") {
  const double eta = 1.0 / 256, eps0 = 0.25;
  auto g = square(eta);
  Region V = Region::box_region(g, {0.25, 0.25, 0}, {0.75, 0.75, 0});
  ChopResult r = chop(V, nullptr, eps0);
  const int s = int(std::floor(eps0 / (3 * std::sqrt(2.0)) / eta));
  CHECK(r.side == s);
  const int per_axis = (int(V.box().size[0]) + s - 1) / s;
  CHECK(int(r.pieces.size()) >= per_axis * per_axis);
  CHECK(int(r.pieces.size()) <= (per_axis + 1) * (per_axis + 1));
  long long cells = 0;
  for (std::size_t i = 0; i < r.pieces.size(); ++i) {
    CHECK(diameter(r.pieces[i]) <= eps0);
    CHECK(r.pieces[i].subset_of(V));
    cells += r.pieces[i].count();
    for (std::size_t j = i + 1; j < r.pieces.size(); ++j) CHECK(r.pieces[i].intersect(r.pieces[j]).empty());
  }
  CHECK(cells == V.count());
  // Chopping cost with h = identity, against direct evaluation.
  const double Ceps0 = 6 * std::pow(2.0, 1.5) / eps0;
  for (double eps : {2 * eta, 4 * eta, 0.02, 0.05}) {
    ChopCost c = chop_cost(V, r.pieces, [](const Vec&) { return 1.0; }, eps);
    double direct = 0;
    for (const auto& U : r.pieces) direct += measure(eps_boundary(U, eps).subtract(eps_boundary(V, eps)));
    direct /= measure(V);
    CHECK(c.cost == doctest::Approx(direct).epsilon(1e-9));
    CHECK(c.cost <= Ceps0 * eps + c.slack);
  }
  Region small = Region::box_region(g, {0.1, 0.1, 0}, {0.2, 0.2, 0});
  CHECK(chop(small, nullptr, eps0).pieces.size() == 1);
}

TEST_CASE("chopping keeps a small set in one piece") {
  const double eta = 1.0 / 256, eps0 = 0.25;
  auto g = square(eta);
  Region V = Region::box_region(g, {0.25, 0.25, 0}, {0.75, 0.75, 0});
  Region star = Region::from_predicate(g, [](const Vec& p) {
    return (p[0] - 0.5) * (p[0] - 0.5) + (p[1] - 0.5) * (p[1] - 0.5) < 0.01 * 0.01;
  });
  ChopResult r = chop(V, &star, eps0);
  int holders = 0;
  for (const auto& U : r.pieces) holders += star.subset_of(U);
  CHECK(holders == 1);
  REQUIRE(r.star >= 0);
  CHECK(star.subset_of(r.pieces[r.star]));
  CHECK(diameter(r.pieces[r.star]) <= eps0);
  Region big = Region::box_region(g, {0.4, 0.4, 0}, {0.6, 0.6, 0});
  CHECK_THROWS_AS(chop(V, &big, eps0), Error);
}

TEST_CASE("iteration of the doubling map") {
  auto map = make_catalog("m0", 1.0 / 1024);
  StandardFamily fam;
  fam.pairs.push_back(StandardPair::uniform(map->ambient.space));
  auto next = iterate(*map, fam, 1);
  double w = 0;
  for (const auto& p : next.pairs) {
    w += p.weight;
    for (double v : p.rho) CHECK(v == doctest::Approx(p.rho.front()));
  }
  CHECK(w == doctest::Approx(1.0));
  // Weight conservation and the transfer correspondence on every catalog map.
  for (const std::string id : {"m0", "m1", "m2", "m3"}) {
    CAPTURE(id);
    auto m = make_catalog(id, id == "m0" || id == "m3" ? 1.0 / 4096 : 1.0 / 128);
    auto suite = calibration_suite(*m, m->k.P, 1, 9);
    const StandardFamily& f0 = suite.front();
    for (int n = 1; n <= 3; ++n) {
      auto fn = iterate_stepwise(*m, f0, n);
      CHECK(std::abs(fn.total() - f0.total()) <= 1e-9 * f0.total() + family_slack(f0));
      const double bound = m->k.a0 * (std::pow(m->k.Lambda, m->k.alpha * n) + m->k.D() / m->k.a0);
      for (const auto& p : fn.pairs)
        if (p.domain.count() > 1) CHECK(holder_seminorm(p, m->k.alpha) <= bound * (1 + 1e-6) + 1e-9);
    }
  }
}

TEST_CASE("iterated family density equals the transfer operator") {
  for (const std::string id : {"m0", "m1"}) {
    CAPTURE(id);
    auto map = make_catalog(id, id == "m0" ? std::ldexp(1.0, -12) : std::ldexp(1.0, -8));
    auto fam = calibration_suite(*map, map->k.P, 1, 3).front();
    const RasterDensity rho = fam.induced();
    for (int n = 1; n <= 4; ++n) {
      const RasterDensity a = transfer_apply(*map, rho, n);
      const RasterDensity b = iterate(*map, fam, n).induced();
      double err = 0, top = 0;
      a.support.for_each([&](const Cell& c, long long k) {
        err = std::max(err, std::abs(a.values[k] - b.at(c)));
        top = std::max(top, a.values[k]);
      });
      b.support.for_each([&](const Cell& c, long long k) {
        if (!a.support.contains(c)) err = std::max(err, std::abs(b.values[k]));
      });
      CHECK(err <= 1e-3 * top);
    }
  }
}

TEST_CASE("boundary weight and properness") {
  auto g = square(1.0 / 256);
  StandardFamily one;
  one.pairs.push_back(StandardPair::uniform(Region::full(g)));
  CHECK(std::abs(boundary_weight(one, 0.1) - 0.36) <= raster_slack(Region::full(g)));
  CHECK(boundary_weight(one, 1e-9) == 0.0);
  StandardFamily two = one;
  two.pairs.push_back(StandardPair::uniform(Region::box_region(g, {0.1, 0.1, 0}, {0.4, 0.3, 0}), 0.5));
  StandardFamily other;
  other.pairs.push_back(two.pairs[1]);
  CHECK(boundary_weight(two, 0.05) == doctest::Approx(boundary_weight(one, 0.05) + boundary_weight(other, 0.05)));
  const auto grid = proper_grid(0.5, 1.0 / 256);
  CHECK(is_proper(one, 4.0, grid));
  CHECK_FALSE(is_proper(one, 3.5, grid));
}

TEST_CASE("growth lemma on the doubling map") {
  auto map = make_catalog("m0", std::ldexp(1.0, -12));
  auto gc = GrowthConstants::make(*map, map->k.P);
  StandardFamily cut;
  cut.pairs.push_back(StandardPair::uniform(Region::box_region(map->grid(), {0.42, 0, 0}, {0.58, 0, 0})));
  for (double eps : {1e-3, 4e-3, 1e-2}) {
    auto r = growth_check(*map, cut, eps, gc);
    CHECK(r.lhs <= r.rhs + r.slack);
  }
  // Near eps0 the n0-step image exceeds eps0 and is chopped.
  const double eps0 = map->k.eps0();
  StandardFamily wide;
  wide.pairs.push_back(StandardPair::uniform(Region::box_region(map->grid(), {0.3, 0, 0}, {0.3 + 0.95 * eps0, 0, 0})));
  const double eps = 0.9 * eps0;
  auto r = growth_check(*map, wide, eps, gc);
  CHECK(r.lhs <= r.rhs + r.slack);
  const double grow = 1 + gc.Ca * map->k.sigma;
  const double chopping = r.lhs - grow * boundary_weight(wide, std::pow(map->k.Lambda, map->k.n0) * eps);
  CHECK(chopping <= gc.zeta1 * wide.total() * eps + r.slack);
}

TEST_CASE("recovery time on the doubling map") {
  auto map = make_catalog("m0", std::ldexp(1.0, -12));
  const double P = map->k.P;
  auto gc = GrowthConstants::make(*map, P);
  CHECK(recovery_time(*map, P, gc) >= 1);
  int prev = 0;
  for (double B : {P, 2 * P, 5 * P, 10 * P}) {
    const int n = recovery_time(*map, B, gc);
    CHECK(n >= prev);
    prev = n;
  }
  // Every calibration family is P-proper after n_rec(B) steps.
  const double B = 10 * P;
  const int n = recovery_time(*map, B, gc);
  const auto grid = proper_grid(map->k.eps0(), map->grid()->eta);
  for (const auto& f : calibration_suite(*map, B, 4, 21)) CHECK(is_proper(iterate_stepwise(*map, f, n), P, grid));
  GrowthConstants bad = gc;
  bad.theta2 = 1.5;
  bad.zeta3 = 1;
  bad.zeta4 = 2 * P;
  RecoveryOptions strict;
  strict.analytic = true;
  strict.cap = 10;
  CHECK_THROWS_AS(recovery_time(*map, B, bad, strict), Error);
}

TEST_CASE("remainder families") {
  auto map = make_catalog("m0", std::ldexp(1.0, -12));
  const double P = map->k.P;
  auto gc = GrowthConstants::make(*map, P);
  const auto grid = proper_grid(map->k.eps0(), map->grid()->eta);
  const auto part = build_partition(map->ambient, gc.delta0);
  auto f = calibration_suite(*map, 10 * P, 1, 5).front();
  f = iterate_stepwise(*map, f, recovery_time(*map, 10 * P, gc));
  REQUIRE(is_proper(f, P, grid));
  CHECK(remainder(f, std::vector<Region>(f.pairs.size())).total() == doctest::Approx(f.total()));
  std::vector<Region> sel(f.pairs.size());
  int selected = 0;
  for (std::size_t i = 0; i < f.pairs.size(); ++i) {
    const Region& I = f.pairs[i].domain;
    if (!is_delta_regular(I, gc.delta0).regular) continue;
    try {
      Selection s = select_contained_element(I, gc.delta0, part, grid);
      if (part.elements[s.element].count() < I.count()) {
        sel[i] = part.elements[s.element];
        ++selected;
      }
    } catch (const Error&) {
    }
  }
  CHECK(selected > 0);
  auto rest = remainder(f, sel);
  CHECK(properness(rest, grid) <= part.Cbar_R(gc.Ca) * P);
  // Uniform pair on a regular square with a contained cube: weight >= w / 2.
  auto g = square(1.0 / 128);
  Region I = Region::box_region(g, {0.2, 0.2, 0}, {0.6, 0.6, 0});
  Region R = Region::box_region(g, {0.3, 0.3, 0}, {0.4, 0.4, 0});
  StandardFamily sq;
  sq.pairs.push_back(StandardPair::uniform(I, 2.0));
  auto out = remainder(sq, {R});
  CHECK(out.total() == doctest::Approx(2.0 * (1 - measure(R) / measure(I))));
  CHECK(out.total() >= 1.0);
  CHECK_THROWS_AS(remainder(sq, {Region::box_region(g, {0.5, 0.5, 0}, {0.7, 0.7, 0})}), Error);
}

TEST_CASE("remainder with a collar") {
  auto g = square(1.0 / 128);
  Region I = Region::box_region(g, {0.1, 0.1, 0}, {0.6, 0.6, 0});
  Region Z = Region::box_region(g, {0.3, 0.3, 0}, {0.35, 0.35, 0});
  Region Zp = Region::box_region(g, {0.28, 0.28, 0}, {0.37, 0.37, 0});
  StandardFamily fam;
  fam.pairs.push_back(StandardPair::uniform(I));
  const auto grid = proper_grid(0.25, 1.0 / 128);
  auto r = remainder_with_Z(fam, Z, Zp, grid);
  const double ca = 1 / std::exp(0.1 * std::pow(0.25, 1.0));
  CHECK(r.family.total() >= (1 - measure(Z) / measure(I)) * ca);
  CHECK(std::isfinite(r.Bprime));
  CHECK_THROWS_AS(remainder_with_Z(fam, Z, Z, grid), Error);
}

TEST_CASE("two thirds of a proper family is regular") {
  auto map = make_catalog("m1", 1.0 / 256);
  const double P = map->k.P;
  auto gc = GrowthConstants::make(*map, P);
  const auto grid = proper_grid(map->k.eps0(), map->grid()->eta);
  for (const auto& f : calibration_suite(*map, P, 4, 13)) {
    if (!is_proper(f, P, grid)) continue;
    CHECK(regular_weight(f, gc.delta0).regular_fraction >= 2.0 / 3.0);
  }
}
