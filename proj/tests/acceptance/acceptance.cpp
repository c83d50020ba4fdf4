// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "inducer/catalog.hpp"
#include "inducer/inducing.hpp"

using namespace inducer;

namespace {

// Tolerances and budgets.
constexpr double kM0KappaMax = 0.95;
constexpr double kM0R2Min = 0.9;
constexpr double kM0Seconds = 60;
constexpr double kM2R2Min = 0.85;
constexpr double kM2Seconds = 600;
constexpr double kM2Halt = 1e-5;
constexpr double kImageTol = 1e-3;  // times Leb(Z)
constexpr int kTau1Cells = 8;
constexpr double kConnectionRel = 1e-3;
constexpr double kMassRel = 1e-6;
constexpr double kTwoThirds = 2.0 / 3.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Detail {
 public:
  template <class T>
  Detail& operator<<(const T& v) {
    os_ << v;
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

struct Run {
  std::string id;
  MapPtr map;
  Built built;
  double seconds = 0;
};

Run gm_run(const std::string& id, double eta, double halt = -1) {
  Run r;
  r.id = id;
  r.map = make_catalog(id, eta);
  BuildOptions o;
  o.map_source = id;
  o.halt_mass = halt;
  const auto t0 = Clock::now();
  r.built = build_scheme_GM(*r.map, o);
  r.seconds = seconds_since(t0);
  return r;
}

int gcd_of(const std::vector<int>& v) {
  int g = 0;
  for (int x : v) g = std::gcd(g, x);
  return g;
}

GridPtr square(double eta) { return Grid::make(2, {0, 0, 0}, {1, 1, 0}, eta); }

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

Region random_union(const GridPtr& g, std::mt19937_64& rng, double min_side, double max_side) {
  std::uniform_real_distribution<double> U(0, 1);
  Region r(g);
  const int k = 1 + int(rng() % 3);
  for (int t = 0; t < k; ++t) {
    const double w = min_side + (max_side - min_side) * U(rng);
    const double h = min_side + (max_side - min_side) * U(rng);
    const double x = U(rng) * (1 - w), y = U(rng) * (1 - h);
    r = r.unite(Region::box_region(g, {x, y, 0}, {x + w, y + h, 0}));
  }
  return r;
}

// Shared builds, made on first use.
struct Shared {
  std::optional<Run> m0, m1, m2, m3;
  Run& get(const std::string& id) {
    std::optional<Run>& slot = id == "m0" ? m0 : id == "m1" ? m1 : id == "m2" ? m2 : m3;
    if (!slot) slot = gm_run(id, default_eta(id), id == "m2" ? kM2Halt : -1);
    return *slot;
  }
};

Shared runs;

Outcome exponential_tails() {
  Outcome o;
  Detail d;
  Run& a = runs.get("m0");
  const TailFit& fa = a.built.scheme.fit;
  const bool ok0 = fa.kappa <= kM0KappaMax && fa.r2 >= kM0R2Min && a.seconds <= kM0Seconds;
  d << "m0 kappa " << fa.kappa << " r2 " << fa.r2 << " (" << fa.points << " pts) " << a.seconds << "s; ";
  Run& b = runs.get("m2");
  const TailFit& fb = b.built.scheme.fit;
  const bool ok2 = fb.kappa < 1 && fb.kappa > 0 && fb.r2 >= kM2R2Min && b.seconds <= kM2Seconds;
  d << "m2 kappa " << fb.kappa << " r2 " << fb.r2 << " (" << fb.points << " pts) " << b.seconds << "s";
  o.pass = ok0 && ok2;
  o.detail = d.str();
  return o;
}

Outcome gibbs_markov() {
  Outcome o;
  Detail d;
  for (const std::string id : {"m0", "m1", "m2", "m3"}) {
    Run& r = runs.get(id);
    const GMReport rep = verify_gibbs_markov(r.built.scheme, *r.map, r.built.partition);
    const bool ok = rep.ok() && rep.images <= r.built.partition.N();
    o.pass = o.pass && ok;
    d << id << " " << rep.violations.size() << " violations, " << rep.images << "/" << r.built.partition.N()
      << " images, exp " << rep.max_expansion << "; ";
    if (!rep.ok()) d << "[" << rep.violations.front() << "] ";
  }
  o.detail = d.str();
  return o;
}

Outcome full_branch() {
  Outcome o;
  Detail d;
  for (const std::string id : {"m0", "m1"}) {
    Run& r = runs.get(id);
    InducingScheme s = r.built.scheme;
    UpgradeOptions uo;
    uo.keep = 32;
    upgrade_full_branch(s, *r.map, r.built.partition, uo);
    const GMReport rep = verify_gibbs_markov(s, *r.map, r.built.partition);
    const double lebZ = r.built.partition.elements[s.upgrade.z].measure();
    bool sums = true;
    for (const auto& c : s.upgrade.composites) {
      int t = 0;
      for (const auto& st : c.steps) t += s.groups[st.group].tau;
      sums = sums && t == c.tau_tilde;
    }
    const bool ok = rep.ok() && !s.upgrade.composites.empty() && sums && rep.max_image_deficit <= kImageTol * lebZ;
    o.pass = o.pass && ok;
    d << id << " " << s.upgrade.composites.size() << " composites, deficit " << rep.max_image_deficit / lebZ
      << " Leb(Z), tau sums " << (sums ? "exact" : "wrong") << ", lost " << s.upgrade.lost << "/" << s.upgrade.samples
      << "; ";
  }
  o.detail = d.str();
  return o;
}

Outcome gcd_one() {
  Outcome o;
  Detail d;
  {
    auto map = make_catalog("m0", std::ldexp(1.0, -14));
    RecurrenceSpec spec = left_end_spec(*map, 8);
    BuildOptions bo;
    bo.map_source = "m0";
    Built b = build_scheme_full_recurrent(*map, spec, bo);
    upgrade_full_branch(b.scheme, *map, b.partition);
    const GMReport rep = verify_gibbs_markov(b.scheme, *map, b.partition);
    const int g = gcd_of(b.scheme.upgrade.realized);
    o.pass = o.pass && g == 1 && rep.ok();
    d << "recurrent gcd " << g << " over " << b.scheme.upgrade.realized.size() << " values, " << rep.violations.size()
      << " violations; ";
  }
  {
    const double eta = std::ldexp(1.0, -16);
    auto map = make_catalog("m0", eta);
    const GridPtr& g = map->grid();
    Region Z = Region::box_region(g, {0, 0, 0}, {16 * eta, 0, 0});
    Region Zp = Region::box_region(g, {0, 0, 0}, {24 * eta, 0, 0});
    BuildOptions bo;
    bo.map_source = "m0";
    Built b = build_scheme_gcd_one(*map, Z, Zp, 0, bo);
    upgrade_full_branch(b.scheme, *map, b.partition);
    const GMReport rep = verify_gibbs_markov(b.scheme, *map, b.partition);
    const double cells = b.scheme.upgrade.tau1_mass / g->cell_volume;
    o.pass = o.pass && cells >= kTau1Cells - 1e-9 && rep.ok();
    d << "gcd1 Leb(O_h, tau~ = 1) = " << cells << " cells, " << rep.violations.size() << " violations";
  }
  o.detail = d.str();
  return o;
}

Outcome growth_suite() {
  Outcome o;
  int n = 0, bad = 0;
  double worst = -1e300;
  std::mt19937_64 rng(21);
  for (const std::string id : {"m0", "m2"}) {
    auto map = make_catalog(id, id == "m0" ? std::ldexp(1.0, -12) : std::ldexp(1.0, -7));
    const GrowthConstants gc = GrowthConstants::make(*map, map->k.P);
    const auto grid = proper_grid(map->k.eps0(), map->grid()->eta);
    for (int t = 0; t < 50; ++t) {
      const double B = map->k.P * (1 + 9 * std::uniform_real_distribution<double>(0, 1)(rng));
      const StandardFamily f = calibration_suite(*map, B, 1, rng()).front();
      const double eps = grid[rng() % grid.size()];
      const GrowthResult r = growth_check(*map, f, eps, gc);
      ++n;
      bad += !(r.lhs <= r.rhs + r.slack);
      worst = std::max(worst, (r.lhs - r.rhs - r.slack) / std::max(r.rhs, 1e-300));
    }
  }
  o.pass = bad == 0 && n == 100;
  o.detail = (Detail() << n << " instances, " << bad << " violations, worst (lhs - rhs - slack)/rhs " << worst).str();
  return o;
}

Outcome comparability_suite() {
  Outcome o;
  auto g = square(1.0 / 64);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(0, 1);
  int bad = 0;
  for (int t = 0; t < 100; ++t) {
    Region I = random_box(g, rng, 4, 24);
    const double L = 4 * U(rng), th = 2 * M_PI * U(rng);
    std::vector<double> f(I.box().volume(), 0.0);
    I.for_each([&](const Cell& c, long long k) {
      const Vec x = g->center(c);
      f[k] = std::exp(L * (std::cos(th) * x[0] + std::sin(th) * x[1]));
    });
    const StandardPair p = StandardPair::from_density(I, f);
    bad += !comparability_check(p, sub_box(I, rng), sub_box(I, rng), L, 1.0, diameter(I)).ok;
  }
  o.pass = bad == 0;
  o.detail = (Detail() << "100 planted densities, " << bad << " violations").str();
  return o;
}

Outcome bt_suite() {
  Outcome o;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0, 1);
  auto g = square(1.0 / 200);
  int bad = 0;
  double worst = -1e300;
  for (int t = 0; t < 200; ++t) {
    Region I = random_box(g, rng, 20, 160);
    const double th = 2 * M_PI * U(rng);
    const Hyperplane E = Hyperplane::make({std::cos(th), std::sin(th), 0}, U(rng) * 1.4 - 0.2, 2);
    const double eps = 0.005 + 0.2 * U(rng), xi = U(rng);
    const BtResult r = bt_check(I, E, eps, xi);
    bad += !(r.lhs <= r.rhs + r.slack);
    worst = std::max(worst, r.lhs - r.rhs - r.slack);
  }
  o.pass = bad == 0;
  o.detail = (Detail() << "200 draws, " << bad << " violations, worst excess " << worst).str();
  return o;
}

Outcome partition_suite() {
  Outcome o;
  const double eta = 1.0 / 256, delta = 0.05;
  AmbientSpace X;
  X.grid = square(eta);
  X.space = Region::full(X.grid);
  const PartitionR part = build_partition(X, delta);
  const auto grid = dyadic_grid(0.25, eta);
  std::mt19937_64 rng(9);
  int tried = 0, bad_kept = 0, bad_collar = 0, disagree = 0;
  while (tried < 100) {
    Region I = random_union(X.grid, rng, 0.15, 0.6);
    if (!is_delta_regular(I, delta).regular) continue;
    ++tried;
    const Selection s = select_contained_element(I, delta, part, grid);
    const Region& R = part.elements[s.element];
    const Region rest = I.subtract(R);
    const bool a = R.subset_of(I) && measure(rest) >= 0.5 * measure(I) - raster_slack(I);
    bool b = true;
    for (double e : grid) {
      const double lhs = measure(eps_boundary(rest, e).subtract(eps_boundary(I, e)));
      if (lhs > std::max(2.0 * 2, part.CZ) * eps_boundary_measure(I, e) + raster_slack(rest) + raster_slack(I)) b = false;
    }
    bad_kept += !a;
    bad_collar += !b;
    disagree += (a != s.ok_kept) || (b != s.ok_collar);
  }
  o.pass = bad_kept == 0 && bad_collar == 0 && disagree == 0;
  o.detail = (Detail() << tried << " regular sets, " << bad_kept << " + " << bad_collar << " violations, " << disagree
                      << " disagreements with the builder check").str();
  return o;
}

Outcome chopping_suite() {
  Outcome o;
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> U(0, 1);
  int bad_cost = 0, bad_star = 0, bad_diam = 0, starred = 0;
  auto m2 = make_catalog("m2", 1.0 / 256);
  auto m3 = make_catalog("m3", 1.0 / 4096);
  for (int t = 0; t < 50; ++t) {
    const bool plane = t % 2 == 0;
    const PiecewiseMap& map = plane ? *m2 : *m3;
    const GridPtr& g = map.grid();
    const double eps0 = map.k.eps0() * (0.5 + 0.5 * U(rng));
    Region V = plane ? random_union(g, rng, 0.2, 0.7) : [&] {
      const double len = 0.2 + 0.7 * U(rng), a = U(rng) * (1 - len);
      return Region::box_region(g, {a, 0, 0}, {a + len, 0, 0});
    }();
    std::optional<Region> star;
    if (t % 4 < 2) {
      // Small ball around the deepest cell of V.
      const auto& depth = V.distance();
      long long best = 0;
      V.for_each([&](const Cell&, long long k) {
        if (depth[k] > depth[best]) best = k;
      });
      const Vec x = g->center(V.box().cell(best));
      const double r =
          std::min(double(depth[best]), eps0 / (8 * std::sqrt(double(g->d))) - g->eta * std::sqrt(double(g->d))) *
          (0.3 + 0.6 * U(rng));
      star = Region::from_predicate(g, [&](const Vec& p) { return dist(p, x, g->d) < r; });
      if (star->empty()) star.reset();
    }
    const ChopResult c = chop(V, star ? &*star : nullptr, eps0);
    for (const auto& p : c.pieces) bad_diam += diameter(p) > eps0;
    if (star) {
      ++starred;
      int holders = 0;
      for (const auto& p : c.pieces) holders += star->subset_of(p);
      bad_star += holders != 1 || c.star < 0 || !star->subset_of(c.pieces[c.star]);
    }
    const GrowthConstants gc = GrowthConstants::make(map, map.k.P);
    const double Ceps0 = gc.Ceps0 * map.k.eps0() / eps0;
    const Branch& h = map.branches[rng() % map.branches.size()];
    auto jac = [&](const Vec& y) {
      Vec x;
      double J = 0;
      return h.pull(y, x, J) ? J : 1.0;
    };
    for (double e : dyadic_grid(eps0, g->eta)) {
      const ChopCost cc = chop_cost(V, c.pieces, jac, e);
      bad_cost += !(cc.cost <= Ceps0 * e + cc.slack);
    }
  }
  o.pass = bad_cost == 0 && bad_star == 0 && bad_diam == 0;
  o.detail = (Detail() << "50 sets (" << starred << " with V*), cost " << bad_cost << ", containment " << bad_star
                      << ", diameter " << bad_diam << " violations").str();
  return o;
}

Outcome connection() {
  Outcome o;
  Detail d;
  for (const std::string id : {"m0", "m1"}) {
    auto map = make_catalog(id, std::ldexp(1.0, -12));
    const StandardFamily fam = calibration_suite(*map, map->k.P, 1, 3).front();
    const RasterDensity rho = fam.induced();
    double worst = 0, worst_mass = 0;
    StandardFamily step = fam;
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
      worst = std::max(worst, err / top);
      const double before = step.total();
      step = iterate(*map, step, 1);
      worst_mass = std::max(worst_mass, std::abs(step.total() - before) / before);
    }
    o.pass = o.pass && worst <= kConnectionRel && worst_mass <= kMassRel;
    d << id << " sup rel " << worst << ", mass rel " << worst_mass << "; ";
  }
  o.detail = d.str();
  return o;
}

Outcome recovery_and_ratio() {
  Outcome o;
  Detail d;
  int unproper = 0, families = 0, below_two_thirds = 0, audited = 0, below_t = 0, rounds = 0;
  double min_regular = 1;
  for (const std::string id : {"m0", "m1"}) {
    auto map = make_catalog(id, id == "m0" ? std::ldexp(1.0, -12) : std::ldexp(1.0, -8));
    const double P = map->k.P;
    const GrowthConstants gc = GrowthConstants::make(*map, P);
    const auto grid = proper_grid(map->k.eps0(), map->grid()->eta);
    for (double B : {2 * P, 10 * P}) {
      const int n = recovery_time(*map, B, gc);
      for (const auto& f : calibration_suite(*map, B, 8, 31)) {
        const StandardFamily g = iterate_stepwise(*map, f, n);
        ++families;
        if (!is_proper(g, P, grid)) {
          ++unproper;
          continue;
        }
        ++audited;
        const double w = regular_weight(g, gc.delta0).regular_fraction;
        min_regular = std::min(min_regular, w);
        below_two_thirds += w < kTwoThirds;
      }
    }
  }
  for (const std::string id : {"m0", "m1", "m2", "m3"}) {
    Run& r = runs.get(id);
    const double t = r.built.scheme.manifest.t;
    for (const auto& log : r.built.scheme.rounds) {
      if (!(log.remainder > 0)) continue;
      ++rounds;
      below_t += log.stopped / log.remainder < t;
    }
    for (const auto& a : r.built.audit)
      if (a.kind == "regular-weight") {
        ++audited;
        below_two_thirds += !a.ok;
      }
  }
  o.pass = unproper == 0 && below_t == 0 && below_two_thirds == 0;
  d << families << " recovered families, " << unproper << " not P-proper; " << rounds << " stop rounds, " << below_t
    << " below t; " << audited << " regular-weight audits, " << below_two_thirds << " below 2/3 (min measured "
    << min_regular << ")";
  o.detail = d.str();
  return o;
}

Outcome time_adjustment() {
  Outcome o;
  const double eta = std::ldexp(1.0, -12);
  auto map = make_catalog("m0", eta);
  std::mt19937_64 rng(13);
  int bad = 0;
  for (int t = 0; t < 50; ++t) {
    const int k = 2 + int(rng() % 4);  // Z = 2^k cells
    const int first = 12 - k + 1;
    const int K = 2 + int(rng() % 2);
    std::vector<int> times;
    int x = first + int(rng() % 3);
    for (int j = 0; j < K; ++j) times.push_back(x += (j == 0 ? 0 : 1 + int(rng() % 3)));
    const RecurrenceSpec spec = left_end_spec(*map, 1 << k, times);
    const double C1 = double(rng() % 60), C2 = double(rng() % 30);
    const AdjustedTimes a = adjust_times(spec, C1, C2);
    bool ok = gcd_of(a.times) == gcd_of(times) && a.times.front() >= C1;
    for (std::size_t j = 1; j < a.times.size(); ++j) ok = ok && a.times[j] - a.times[j - 1] >= std::max(C2, 1.0);
    for (std::size_t j = 0; j < a.times.size(); ++j) ok = ok && int(a.itineraries[j].size()) == a.times[j];
    const CoverReport c = verify_covering(*map, spec.Z, a.itineraries, a.blocks);
    ok = ok && c.covered && c.disjoint;
    bad += !ok;
  }
  o.pass = bad == 0;
  o.detail = (Detail() << "50 specs, " << bad << " failures").str();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"exponential tails", exponential_tails},
      {"Gibbs-Markov structure", gibbs_markov},
      {"full-branch upgrade", full_branch},
      {"gcd-1 schemes", gcd_one},
      {"growth lemma suite", growth_suite},
      {"comparability suite", comparability_suite},
      {"boundary transversality suite", bt_suite},
      {"partition lemma suite", partition_suite},
      {"chopping suite", chopping_suite},
      {"transfer correspondence", connection},
      {"recovery and ratio constants", recovery_and_ratio},
      {"time adjustment", time_adjustment},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), int(i + 1)) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const Error& e) {
      o.pass = false;
      o.detail = std::string("error ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failed;
}
