#include "inducer/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace inducer {

double unit_ball_volume(int d) { return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1); }

double ball_volume(int d, double r) { return unit_ball_volume(d) * std::pow(r, d); }

double partition_c(int d) {
  const double V = unit_ball_volume(d);
  return 1 / (std::pow(2.0, d + 2) * std::pow(V, d) * std::sqrt(double(d)));
}

int min_cube_cells(int d) { return d == 1 ? 8 : (d == 2 ? 4 : 2); }

double PartitionR::C_R() const { return 2 * std::max(2.0 * grid->d, CZ); }

double PartitionR::max_element_diameter() const {
  double m = 0;
  for (const auto& e : elements) m = std::max(m, diameter(e));
  return m;
}

PartitionR build_partition(const AmbientSpace& space, double delta, const Region* Z, double CZ) {
  if (!(delta > 0)) throw Error(ErrorClass::config, "bad-delta");
  const GridPtr& gp = space.grid;
  const Grid& g = *gp;
  const int d = g.d;
  PartitionR p;
  p.grid = gp;
  p.delta = delta;
  p.c = partition_c(d);
  p.nominal_side = p.c * delta;
  const int s = std::max(int(std::lround(p.nominal_side / g.eta)), min_cube_cells(d));
  p.side_cells = s;
  const bool hasZ = Z && !Z->empty();
  if (Z && Z->empty()) throw Error(ErrorClass::config, "empty-Z");
  if (hasZ) {
    if (!Z->subset_of(space.space)) throw Error(ErrorClass::config, "Z-outside-space");
    for (int i = 0; i < d; ++i)
      if (Z->box().size[i] > s)
        throw Error(ErrorClass::config, "Z-too-large",
                    "extent " + std::to_string(Z->box().size[i]) + " cells, cube " + std::to_string(s));
    p.CZ = CZ;
  }
  Cell nq{1, 1, 1};
  for (int i = 0; i < d; ++i) nq[i] = (g.n[i] + s - 1) / s;
  const long long total = g.total();
  const long long ncubes = (long long)nq[0] * nq[1] * nq[2];
  // Cube label of every cell of X \ Z; Z cells get -2.
  std::vector<long long> cube(total, -1);
  std::vector<long long> cube_count(ncubes, 0);
  space.space.for_each([&](const Cell& c, long long) {
    long long k = g.linear(c);
    if (hasZ && Z->contains(c)) {
      cube[k] = -2;
      return;
    }
    long long q = c[0] / s + (long long)nq[0] * (c[1] / s + (long long)nq[1] * (c[2] / s));
    cube[k] = q;
    ++cube_count[q];
  });
  std::vector<int> elem_of_cube(ncubes, -1);
  int next = hasZ ? 1 : 0;
  for (long long q = 0; q < ncubes; ++q)
    if (cube_count[q] > 0) elem_of_cube[q] = next++;
  std::vector<int> owner(total, -1);
  std::vector<long long> count(next, 0);
  for (long long k = 0; k < total; ++k) {
    if (cube[k] == -2) owner[k] = 0;
    else if (cube[k] >= 0) owner[k] = elem_of_cube[cube[k]];
    if (owner[k] >= 0) ++count[owner[k]];
  }
  // Slivers below 8 cells join the neighbour sharing the most faces (never Z).
  std::vector<std::vector<long long>> sliver_cells(next);
  for (long long k = 0; k < total; ++k) {
    int e = owner[k];
    if (e >= 0 && !(hasZ && e == 0) && count[e] < 8) sliver_cells[e].push_back(k);
  }
  for (int e = 0; e < next; ++e) {
    if (sliver_cells[e].empty() || count[e] == 0 || count[e] >= 8) continue;
    std::vector<std::pair<int, long long>> shared;
    for (long long k : sliver_cells[e]) {
      Cell c = g.unlinear(k);
      for (int i = 0; i < d; ++i)
        for (int sg = -1; sg <= 1; sg += 2) {
          Cell q = c;
          q[i] += sg;
          if (q[i] < 0 || q[i] >= g.n[i]) continue;
          int o = owner[g.linear(q)];
          if (o < 0 || o == e || (hasZ && o == 0)) continue;
          auto it = std::find_if(shared.begin(), shared.end(), [&](const auto& pr) { return pr.first == o; });
          if (it == shared.end()) shared.push_back({o, 1});
          else ++it->second;
        }
    }
    if (shared.empty()) continue;
    std::stable_sort(shared.begin(), shared.end(), [](const auto& a, const auto& b) {
      return a.second > b.second || (a.second == b.second && a.first < b.first);
    });
    int to = shared[0].first;
    for (long long k : sliver_cells[e]) owner[k] = to;
    count[to] += count[e];
    if (count[to] < 8) sliver_cells[to].insert(sliver_cells[to].end(), sliver_cells[e].begin(), sliver_cells[e].end());
    count[e] = 0;
  }
  // Compact and build regions.
  std::vector<int> remap(next, -1);
  int N = 0;
  for (int e = 0; e < next; ++e)
    if (count[e] > 0) remap[e] = N++;
  std::vector<Cell> lo(N, Cell{1 << 30, 1 << 30, 1 << 30}), hi(N, Cell{-1, -1, -1});
  for (long long k = 0; k < total; ++k) {
    if (owner[k] < 0) continue;
    int e = owner[k] = remap[owner[k]];
    Cell c = g.unlinear(k);
    for (int i = 0; i < kMaxDim; ++i) {
      lo[e][i] = std::min(lo[e][i], c[i]);
      hi[e][i] = std::max(hi[e][i], c[i]);
    }
  }
  std::vector<Box> boxes(N);
  std::vector<std::vector<uint8_t>> masks(N);
  for (int e = 0; e < N; ++e) {
    for (int i = 0; i < kMaxDim; ++i) {
      boxes[e].lo[i] = lo[e][i];
      boxes[e].size[i] = hi[e][i] - lo[e][i] + 1;
    }
    masks[e].assign(boxes[e].volume(), 0);
  }
  for (long long k = 0; k < total; ++k) {
    int e = owner[k];
    if (e >= 0) masks[e][boxes[e].local(g.unlinear(k))] = 1;
  }
  p.elements.resize(N);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < N; ++e) p.elements[e] = Region::from_mask(gp, boxes[e], std::move(masks[e]));
  if (hasZ) p.z = 0;
  p.owner = std::move(owner);
  p.min_measure = 1e300;
  for (const auto& e : p.elements) p.min_measure = std::min(p.min_measure, e.measure());
  return p;
}

Selection select_contained_element(const Region& I, double delta, const PartitionR& part,
                                   const std::vector<double>& eps_grid) {
  Regularity reg = is_delta_regular(I, delta);
  if (!reg.regular) throw Error(ErrorClass::builder, "not-regular");
  const auto& g = *I.grid();
  Selection s;
  s.witness = reg.witness;
  s.element = part.element_at(reg.witness);
  const Region& R = part.elements[s.element];
  if (!R.subset_of(I)) throw Error(ErrorClass::builder, "element-not-contained", "element " + std::to_string(s.element));
  s.kept_fraction = double(I.count() - R.count()) / double(I.count());
  s.ok_kept = I.measure() - R.measure() >= 0.5 * I.measure() - raster_slack(I);
  // The ball containment is only meaningful when a cube fits in the ball.
  const double cube_diam = part.side_cells * g.eta * std::sqrt(double(g.d));
  if (cube_diam <= delta) {
    s.ball_checked = true;
    s.in_ball = true;
    const Vec x = g.center(reg.witness);
    const double half = 0.5 * g.eta * std::sqrt(double(g.d));
    R.for_each([&](const Cell& c, long long) {
      if (dist(g.center(c), x, g.d) + half > delta) s.in_ball = false;
    });
  }
  const Region rest = I.subtract(R);
  const double K = std::max(2.0 * g.d, s.element == part.z ? part.CZ : 0.0);
  const double slack = raster_slack(rest) + raster_slack(I);
  s.collar_excess = -1e300;
  if (!rest.empty()) {
    const auto& dr = rest.distance();
    const Box& ib = I.box();
    const auto& di = I.distance();
    for (double eps : eps_grid) {
      long long n = 0;
      rest.for_each([&](const Cell& c, long long k) {
        if (dr[k] < eps && di[ib.local(c)] >= eps) ++n;
      });
      double lhs = n * g.cell_volume;
      double rhs = K * eps_boundary_measure(I, eps);
      s.collar_excess = std::max(s.collar_excess, lhs - rhs - slack);
    }
  }
  s.ok_collar = s.collar_excess <= 0;
  return s;
}

double fixed_ratio_constant(double eps0, const PartitionR& part, const GrowthConstants& gc) {
  const double V = ball_volume(part.grid->d, eps0);
  const double L = part.min_measure;
  return (2.0 / 3.0) * gc.ca / V * L * L / (L / 3 + gc.Ca * V);
}

NiceBoundaryCertificate certify_nice_boundary(const Region& Z, int suite, std::uint64_t seed) {
  if (Z.empty()) throw Error(ErrorClass::config, "empty-Z");
  const GridPtr& gp = Z.grid();
  const Grid& g = *gp;
  NiceBoundaryCertificate cert;
  cert.eps = dyadic_grid(diameter(Z), g.eta);
  // A boundary collar that swallows everything at the smallest scale has no linear bound.
  if (eps_boundary_measure(Z, 2 * g.eta) >= 0.95 * eps_boundary_measure(Z, 4 * g.eta))
    throw Error(ErrorClass::hypothesis, "not-nice", "collar saturates at 2 eta");
  for (double e : cert.eps) cert.boundary_ratio = std::max(cert.boundary_ratio, eps_boundary_measure(Z, e) / e);
  std::mt19937_64 rng(seed);
  const Box& zb = Z.box();
  for (int t = 0; t < suite; ++t) {
    Box b;
    b.size = {1, 1, 1};
    for (int i = 0; i < g.d; ++i) {
      std::uniform_int_distribution<int> M(1, std::max(1, 2 * zb.size[i]));
      int lo = std::max(0, zb.lo[i] - M(rng));
      int hi = std::min(g.n[i] - 1, zb.lo[i] + zb.size[i] - 1 + M(rng));
      b.lo[i] = lo;
      b.size[i] = hi - lo + 1;
    }
    Region I = Region::from_mask(gp, b, std::vector<uint8_t>(b.volume(), 1));
    Region rest = I.subtract(Z);
    if (rest.empty()) continue;
    const auto& dr = rest.distance();
    const auto& di = I.distance();
    for (double e : cert.eps) {
      double denom = eps_boundary_measure(I, e);
      if (!(denom > 0)) continue;
      long long n = 0;
      rest.for_each([&](const Cell& c, long long k) {
        if (dr[k] < e && di[b.local(c)] >= e) ++n;
      });
      cert.collar_ratio = std::max(cert.collar_ratio, n * g.cell_volume / denom);
    }
  }
  cert.CZ = 1.5 * std::max(cert.boundary_ratio, cert.collar_ratio);
  return cert;
}

}  // namespace inducer
