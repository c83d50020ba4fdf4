#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "inducer/catalog.hpp"
#include "inducer/dynamics.hpp"

using namespace inducer;

namespace {

struct Iv {
  double lo, hi;
};

double length(const std::vector<Iv>& v) {
  double s = 0;
  for (const auto& i : v) s += std::max(0.0, i.hi - i.lo);
  return s;
}

std::vector<Iv> minus(const std::vector<Iv>& a, const Iv& b) {
  std::vector<Iv> out;
  for (const auto& i : a) {
    if (b.hi <= i.lo || b.lo >= i.hi) {
      out.push_back(i);
      continue;
    }
    if (i.lo < b.lo) out.push_back({i.lo, b.lo});
    if (b.hi < i.hi) out.push_back({b.hi, i.hi});
  }
  return out;
}

// Complexity expression of the doubling map at iterate r on I = (a, b), by interval arithmetic.
// Each cylinder piece of I maps affinely onto an interval whose eps-collar pulls back to the
// w = 2^-r eps collars at both ends of the piece.
double doubling_complexity(double a, double b, double eps, int r) {
  const double w = std::ldexp(eps, -r);
  const double q = std::ldexp(1.0, -r);
  double num = 0;
  for (int k = 0; k < (1 << r); ++k) {
    const double lo = std::max(a, k * q), hi = std::min(b, (k + 1) * q);
    if (!(lo < hi)) continue;
    std::vector<Iv> collar;
    if (hi - lo <= 2 * w) collar = {{lo, hi}};
    else collar = {{lo, lo + w}, {hi - w, hi}};
    collar = minus(collar, {a, a + w});
    collar = minus(collar, {b - w, b});
    num += length(collar);
  }
  return num / std::min(b - a, 2 * w);
}

}  // namespace

TEST_CASE("two-step cylinders of M2 match forward simulation") {
  auto map = make_catalog("m2", 1.0 / 128);
  const auto& g = *map->grid();
  std::map<std::pair<int, int>, long long> oracle;
  for (long long k = 0; k < g.total(); ++k) {
    const Vec x = g.center(g.unlinear(k));
    const int b1 = map->branch_at(x);
    if (b1 < 0) continue;
    const int b2 = map->branch_at(map->branches[b1].forward(x));
    if (b2 < 0) continue;
    ++oracle[{b1, b2}];
  }
  const auto comp = compose_branches(*map, 2);
  CHECK(comp.size() == oracle.size());
  for (const auto& br : comp) {
    REQUIRE(br.itinerary.size() == 2);
    auto it = oracle.find({br.itinerary[0], br.itinerary[1]});
    REQUIRE(it != oracle.end());
    long long cells = 0;
    for (long long k = 0; k < g.total(); ++k) cells += br.in_domain(g.center(g.unlinear(k)));
    CHECK(cells == it->second);
  }
}

TEST_CASE("M3 expansion and distortion against analytic values") {
  auto map = make_catalog("m3", std::ldexp(1.0, -14));
  const double b = kM3Bend;
  const auto ex = verify_expansion(*map);
  CHECK(ex.flagged.empty());
  CHECK(std::abs(ex.max_measured - 1 / (2 * (1 - b))) <= 1e-3);
  const auto di = verify_distortion(*map);
  const double analytic = 2 * b / ((1 - b) * (1 - b));
  CHECK(std::abs(di.measured - analytic) <= 0.05 * analytic);
  CHECK_FALSE(di.flagged);
}

TEST_CASE("doubling map constants") {
  auto map = make_catalog("m0", std::ldexp(1.0, -14));
  CHECK(verify_expansion(*map).max_measured == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(verify_distortion(*map).measured == 0.0);
}

TEST_CASE("doubling complexity against interval arithmetic") {
  const double eta = std::ldexp(1.0, -14);
  auto map = make_catalog("m0", eta);
  auto g = map->grid();
  const double eps = 0.02;
  // Inside one branch: the image boundary pulls back into the collar of I.
  Region inside = Region::box_region(g, {0.1, 0, 0}, {0.3, 0, 0});
  CHECK(complexity_sum(*map, inside, eps, 1) <= 4 * eta / eps);
  // Across the cut at 1/2, one step: sigma = 1, so n0 = 1 fails.
  const double exact1 = doubling_complexity(0.4, 0.6, eps, 1);
  CHECK(exact1 == doctest::Approx(1.0));
  Region across = Region::box_region(g, {0.4, 0, 0}, {0.6, 0, 0});
  CHECK(std::abs(complexity_sum(*map, across, eps, 1) - exact1) <= 8 * eta / eps);
  CHECK_FALSE(exact1 < 1 / map->k.Lambda - 1);
  // Two steps, diam I <= 0.2: at most one cut of T^2 inside I.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  double worst = 0;
  for (int t = 0; t < 40; ++t) {
    const double len = 0.05 + 0.15 * U(rng);
    const double a = std::floor(U(rng) * (1 - len) / eta) * eta, bb = a + std::floor(len / eta) * eta;
    const double exact = doubling_complexity(a, bb, eps, 2);
    worst = std::max(worst, exact);
    Region I = Region::box_region(g, {a, 0, 0}, {bb, 0, 0});
    const double w = eps / 4;
    CHECK(std::abs(complexity_sum(*map, I, eps, 2) - exact) <= 8 * eta / (2 * w));
  }
  CHECK(worst <= 1.0 + 1e-12);
  CHECK(worst < std::pow(map->k.Lambda, -2) - 1);
}

TEST_CASE("transfer operator on the doubling map") {
  auto map = make_catalog("m0", 1.0 / 1024);
  auto g = map->grid();
  auto one = RasterDensity::uniform(map->ambient.space, 1.0);
  for (int n = 1; n <= 3; ++n) {
    auto f = transfer_apply(*map, one, n);
    for (double v : f.values) CHECK(v == doctest::Approx(1.0));
  }
  auto half = RasterDensity::uniform(Region::box_region(g, {0, 0, 0}, {0.5, 0, 0}), 1.0);
  auto h = transfer_apply(*map, half, 1);
  CHECK(h.support.count() == g->total());
  for (double v : h.values) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("transfer operator mass, composition and serial agreement") {
  for (const std::string id : {"m0", "m1", "m2", "m3"}) {
    CAPTURE(id);
    // Dyadic affine maps are exact on the raster; the others lose mass at cut and image edges.
    const bool exact = id == "m0" || id == "m1";
    auto map = make_catalog(id, id == "m0" || id == "m3" ? 1.0 / 1024 : 1.0 / 64);
    auto f0 = RasterDensity::uniform(Region::box_region(map->grid(), {0.125, 0.25, 0}, {0.5, 0.75, 0}), 1.0);
    RasterDensity step = f0;
    double acc = 0;
    for (int n = 1; n <= 6; ++n) {
      const double before = step.integral();
      step = transfer_apply(*map, step, 1);
      double top = 0;
      for (double v : step.values) top = std::max(top, v);
      const double tol = exact ? 1e-9 * before : raster_slack(step.support) * top;
      CHECK(std::abs(step.integral() - before) <= tol);
      if (n <= 3) acc += tol;
    }
    auto direct = transfer_apply(*map, f0, 3);
    auto serial = transfer_apply_serial(*map, f0, 3);
    CHECK(direct.values == serial.values);
    RasterDensity three = f0;
    for (int n = 0; n < 3; ++n) three = transfer_apply(*map, three, 1);
    double l1 = 0;
    direct.support.for_each([&](const Cell& c, long long k) { l1 += std::abs(direct.values[k] - three.at(c)); });
    three.support.for_each([&](const Cell& c, long long k) {
      if (!direct.support.contains(c)) l1 += std::abs(three.values[k]);
    });
    l1 *= map->grid()->cell_volume;
    CHECK(l1 <= (exact ? 1e-9 * f0.integral() : acc));
  }
}

TEST_CASE("M2 transfer against a Monte Carlo pushforward") {
  // Fine raster averaged onto 64 x 64 histogram bins.
  auto map = make_catalog("m2", 1.0 / 512);
  const auto& g = *map->grid();
  const int B = 8, nb = g.n[0] / B;
  auto f = transfer_apply(*map, RasterDensity::uniform(map->ambient.space, 1.0), 3);
  std::vector<double> mass(nb * nb, 0.0);
  f.support.for_each([&](const Cell& c, long long k) { mass[c[0] / B + nb * (c[1] / B)] += f.values[k] * g.cell_volume; });
  const long long samples = 10'000'000;
  std::vector<long long> hist(nb * nb, 0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0, 1);
  for (long long s = 0; s < samples; ++s) {
    Vec x{U(rng), U(rng), 0};
    bool ok = true;
    for (int n = 0; n < 3 && ok; ++n) {
      const int b = map->branch_at(x);
      if (b < 0) ok = false;
      else x = map->branches[b].forward(x);
    }
    if (ok) ++hist[std::min(nb - 1, int(x[0] * nb)) + nb * std::min(nb - 1, int(x[1] * nb))];
  }
  long long beyond = 0;
  double worst = 0;
  for (int k = 0; k < nb * nb; ++k) {
    const double expect = mass[k] * samples;
    const double z = std::abs(hist[k] - expect) / std::sqrt(std::max(expect, 1.0));
    worst = std::max(worst, z);
    beyond += z > 3;
  }
  // Sampling noise alone puts p = 0.0027 of the bins beyond 3 sd.
  const double p = 0.0027, mean = p * nb * nb;
  MESSAGE("bins beyond 3 sd: " << beyond << " of " << nb * nb << " (noise mean " << mean << "), worst " << worst);
  CHECK(beyond <= mean + 4 * std::sqrt(mean));
  CHECK(worst <= 5.0);
}
