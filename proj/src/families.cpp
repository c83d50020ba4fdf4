#include "inducer/families.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

namespace inducer {

StandardPair StandardPair::uniform(const Region& I, double weight) {
  StandardPair p;
  p.domain = I;
  p.weight = weight;
  p.rho.assign(I.box().volume(), 0.0);
  const double v = 1.0 / I.measure();
  I.for_each([&](const Cell&, long long k) { p.rho[k] = v; });
  return p;
}

StandardPair StandardPair::from_density(const Region& I, const std::vector<double>& f) {
  StandardPair p;
  p.domain = I;
  double s = 0;
  I.for_each([&](const Cell&, long long k) { s += f[k]; });
  s *= I.grid()->cell_volume;
  p.weight = s;
  p.rho.assign(f.size(), 0.0);
  if (s > 0)
    for (std::size_t k = 0; k < f.size(); ++k) p.rho[k] = f[k] / s;
  return p;
}

std::vector<double> StandardPair::scaled() const {
  std::vector<double> f(rho.size());
  for (std::size_t k = 0; k < rho.size(); ++k) f[k] = weight * rho[k];
  return f;
}

double StandardFamily::total() const {
  double s = 0;
  for (const auto& p : pairs) s += p.weight;
  return s;
}

RasterDensity StandardFamily::induced() const {
  RasterDensity out;
  if (pairs.empty()) return out;
  const GridPtr& g = pairs[0].domain.grid();
  Box hull;
  for (const auto& p : pairs) hull = Box::hull(hull, p.domain.box());
  std::vector<double> acc(hull.volume(), 0.0);
  for (const auto& p : pairs)
    p.domain.for_each([&](const Cell& c, long long k) { acc[hull.local(c)] += p.weight * p.rho[k]; });
  std::vector<uint8_t> mask(acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k) mask[k] = acc[k] > 0;
  out.support = Region::from_mask(g, hull, std::move(mask));
  const Box& b = out.support.box();
  out.values.assign(b.volume(), 0.0);
  for (long long k = 0; k < b.volume(); ++k) {
    Cell c = b.cell(k);
    out.values[k] = acc[hull.local(c)];
  }
  return out;
}

GrowthConstants GrowthConstants::make(const PiecewiseMap& map, double P) {
  GrowthConstants gc;
  const auto& k = map.k;
  const int d = map.d();
  const double eps0 = k.eps0();
  const auto& g = *map.grid();
  double diamX = 0;
  for (int i = 0; i < d; ++i) diamX += (g.hi[i] - g.lo[i]) * (g.hi[i] - g.lo[i]);
  diamX = std::sqrt(diamX);
  gc.Ca = std::exp(k.a0 * std::pow(eps0, k.alpha));
  gc.ca = 1 / gc.Ca;
  gc.Ceps0 = std::exp(k.D() * std::pow(diamX, k.alpha)) * 6 * std::pow(double(d), 1.5) / eps0;
  gc.zeta1 = gc.Ca * gc.Ceps0;
  gc.theta1 = std::pow(k.Lambda, k.n0) * (1 + gc.Ca * k.sigma);
  gc.theta2 = std::pow(gc.theta1, 1.0 / k.n0);
  gc.P = P;
  gc.delta0 = 1 / (3 * P);
  return gc;
}

double holder_seminorm(const StandardPair& p, double alpha, std::size_t exhaustive_limit, std::uint64_t seed) {
  const auto& g = *p.domain.grid();
  std::vector<Vec> pos;
  std::vector<double> lr;
  p.domain.for_each([&](const Cell& c, long long k) {
    if (!(p.rho[k] > 0)) throw Error(ErrorClass::config, "nonpositive-density");
    pos.push_back(g.center(c));
    lr.push_back(std::log(p.rho[k]));
  });
  const std::size_t n = pos.size();
  double best = 0;
  auto pair = [&](std::size_t i, std::size_t j) {
    double dd = dist(pos[i], pos[j], g.d);
    if (dd > 0) best = std::max(best, std::abs(lr[i] - lr[j]) / std::pow(dd, alpha));
  };
  if (n <= exhaustive_limit) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) pair(i, j);
    return best;
  }
  // Local pairs within a few cells plus random long-range partners.
  const Box& b = p.domain.box();
  std::vector<long long> index(b.volume(), -1);
  {
    std::size_t i = 0;
    p.domain.for_each([&](const Cell&, long long k) { index[k] = (long long)i++; });
  }
  const int r = 3;
  std::size_t i = 0;
  p.domain.for_each([&](const Cell& c, long long) {
    for (int dz = (g.d > 2 ? -r : 0); dz <= (g.d > 2 ? r : 0); ++dz)
      for (int dy = (g.d > 1 ? -r : 0); dy <= (g.d > 1 ? r : 0); ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          Cell q{c[0] + dx, c[1] + dy, c[2] + dz};
          if (!b.contains(q)) continue;
          long long j = index[b.local(q)];
          if (j > (long long)i) pair(i, std::size_t(j));
        }
    ++i;
  });
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> U(0, n - 1);
  for (std::size_t s = 0; s < 8 * n; ++s) pair(U(rng), U(rng));
  return best;
}

ComparabilityReport comparability_check(const StandardPair& p, const Region& J, const Region& Jp, double a, double alpha,
                                        double eps0) {
  if (J.empty() || Jp.empty()) throw Error(ErrorClass::config, "null-subset");
  if (!J.subset_of(p.domain) || !Jp.subset_of(p.domain)) throw Error(ErrorClass::config, "not-subset");
  ComparabilityReport r;
  const Box& b = p.domain.box();
  auto avg = [&](const Region& S) {
    double s = 0;
    S.for_each([&](const Cell& c, long long) { s += p.rho[b.local(c)]; });
    return s / double(S.count());
  };
  r.inf_I = 1e300;
  r.sup_I = 0;
  p.domain.for_each([&](const Cell&, long long k) {
    r.inf_I = std::min(r.inf_I, p.rho[k]);
    r.sup_I = std::max(r.sup_I, p.rho[k]);
  });
  r.avg_J = avg(J);
  r.avg_Jp = avg(Jp);
  r.factor = std::exp(a * std::pow(eps0, alpha));
  const double up = r.factor * (1 + 1e-12), lo = (1 - 1e-12) / r.factor;
  r.ok = r.avg_Jp <= up * r.avg_J && r.avg_Jp >= lo * r.avg_J && r.inf_I >= lo * r.avg_J && r.sup_I <= up * r.avg_J;
  return r;
}

namespace {

int floordiv(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

}  // namespace

ChopResult chop(const Region& V, const Region* Vstar, double eps0) {
  ChopResult r;
  if (V.empty()) return r;
  const auto& g = *V.grid();
  const int d = g.d;
  bool star_inside = Vstar && !Vstar->empty() && Vstar->subset_of(V);
  if (star_inside && diameter(*Vstar) > eps0 / (4 * std::sqrt(double(d))))
    throw Error(ErrorClass::config, "avoid-set-too-large");
  if (diameter(V) <= eps0) {
    r.pieces = {V};
    if (star_inside) r.star = 0;
    return r;
  }
  const int s = std::max(1, int(std::floor(eps0 / (3 * std::sqrt(double(d))) / g.eta + 1e-9)));
  r.side = s;
  const Box& b = V.box();
  const auto& mask = V.mask();
  const double budget = double(V.count()) / s;
  // Crossings per residue class: interior faces of V cut by a grid plane at that offset.
  for (int i = 0; i < d; ++i) {
    std::vector<long long> cnt(s, 0);
    V.for_each([&](const Cell& c, long long k) {
      if (c[i] == b.lo[i]) return;
      Cell q = c;
      --q[i];
      (void)k;
      if (mask[b.local(q)]) ++cnt[((c[i] % s) + s) % s];
    });
    int pick = -1, best = 0;
    for (int t = 0; t < 32; ++t) {
      int o = int((long long)t * s / 32);
      if (pick < 0 || cnt[o] < cnt[best]) best = o;
      if (pick < 0 && cnt[o] <= budget) pick = o;
    }
    if (pick < 0) {
      pick = best;
      r.sub_average = false;
    }
    r.offset[i] = pick;
  }
  // Cube index ranges covering V's box.
  Cell qlo{0, 0, 0}, qn{1, 1, 1};
  for (int i = 0; i < d; ++i) {
    qlo[i] = floordiv(b.lo[i] - r.offset[i], s);
    qn[i] = floordiv(b.lo[i] + b.size[i] - 1 - r.offset[i], s) - qlo[i] + 1;
  }
  auto cube_of = [&](const Cell& c) {
    Cell q{0, 0, 0};
    for (int i = 0; i < d; ++i) q[i] = floordiv(c[i] - r.offset[i], s) - qlo[i];
    return q;
  };
  auto cube_id = [&](const Cell& q) { return q[0] + (long long)qn[0] * (q[1] + (long long)qn[1] * q[2]); };
  const long long ncubes = (long long)qn[0] * qn[1] * qn[2];
  std::vector<int> cube_label(ncubes, -1);
  // Merged block around V*.
  Cell qstar{-100, -100, -100};
  if (star_inside) {
    const Box& sb = Vstar->box();
    Cell cc{0, 0, 0};
    for (int i = 0; i < d; ++i) cc[i] = sb.lo[i] + sb.size[i] / 2;
    qstar = cube_of(cc);
  }
  auto in_star_block = [&](const Cell& q) {
    if (!star_inside) return false;
    for (int i = 0; i < d; ++i)
      if (std::abs(q[i] - qstar[i]) > 1) return false;
    return true;
  };
  std::vector<int> label(b.volume(), -1);
  int next = 0;
  int star_label = -1;
  for (long long k = 0; k < b.volume(); ++k) {
    if (!mask[k]) continue;
    Cell q = cube_of(b.cell(k));
    if (in_star_block(q)) {
      if (star_label < 0) star_label = next++;
      label[k] = star_label;
      continue;
    }
    long long id = cube_id(q);
    if (cube_label[id] < 0) cube_label[id] = next++;
    label[k] = cube_label[id];
  }
  // Piece statistics.
  std::vector<long long> count(next, 0);
  for (long long k = 0; k < b.volume(); ++k)
    if (label[k] >= 0) ++count[label[k]];
  auto piece_region = [&](const std::vector<int>& labs) {
    std::vector<uint8_t> m(b.volume(), 0);
    for (long long k = 0; k < b.volume(); ++k)
      if (label[k] >= 0 && std::find(labs.begin(), labs.end(), label[k]) != labs.end()) m[k] = 1;
    return Region::from_mask(V.grid(), b, std::move(m));
  };
  // Slivers below 8 cells join the face-neighbour with the largest shared face, if the union stays small.
  for (int p = 0; p < next; ++p) {
    if (count[p] == 0 || count[p] >= 8 || p == star_label) continue;
    std::vector<long long> shared(next, 0);
    for (long long k = 0; k < b.volume(); ++k) {
      if (label[k] != p) continue;
      Cell c = b.cell(k);
      for (int i = 0; i < d; ++i)
        for (int sgn = -1; sgn <= 1; sgn += 2) {
          Cell q = c;
          q[i] += sgn;
          if (!b.contains(q)) continue;
          int l = label[b.local(q)];
          if (l >= 0 && l != p) ++shared[l];
        }
    }
    std::vector<int> order;
    for (int l = 0; l < next; ++l)
      if (shared[l] > 0) order.push_back(l);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return shared[x] > shared[y]; });
    for (int l : order) {
      if (diameter(piece_region({p, l})) > eps0) continue;
      for (long long k = 0; k < b.volume(); ++k)
        if (label[k] == p) label[k] = l;
      count[l] += count[p];
      count[p] = 0;
      break;
    }
  }
  // Build the surviving pieces in label order.
  std::vector<Cell> lo(next, Cell{1 << 30, 1 << 30, 1 << 30}), hi(next, Cell{-(1 << 30), -(1 << 30), -(1 << 30)});
  for (long long k = 0; k < b.volume(); ++k) {
    int l = label[k];
    if (l < 0) continue;
    Cell c = b.cell(k);
    for (int i = 0; i < kMaxDim; ++i) {
      lo[l][i] = std::min(lo[l][i], c[i]);
      hi[l][i] = std::max(hi[l][i], c[i]);
    }
  }
  for (int l = 0; l < next; ++l) {
    if (count[l] == 0) continue;
    Box pb;
    for (int i = 0; i < kMaxDim; ++i) {
      pb.lo[i] = lo[l][i];
      pb.size[i] = hi[l][i] - lo[l][i] + 1;
    }
    std::vector<uint8_t> m(pb.volume(), 0);
    for (long long k = 0; k < pb.volume(); ++k) m[k] = label[b.local(pb.cell(k))] == l;
    if (l == star_label) r.star = int(r.pieces.size());
    r.pieces.push_back(Region::from_mask(V.grid(), pb, std::move(m)));
  }
  return r;
}

ChopCost chop_cost(const Region& V, const std::vector<Region>& pieces, const std::function<double(const Vec&)>& jac,
                   double eps) {
  ChopCost out;
  const auto& g = *V.grid();
  double den = 0, supJ = 0;
  V.for_each([&](const Cell& c, long long) {
    double j = jac(g.center(c));
    den += j;
    supJ = std::max(supJ, j);
  });
  if (!(den > 0)) return out;
  const auto& dV = V.distance();
  const Box& vb = V.box();
  double num = 0;
  long long cut_cells = 0;
  for (const auto& U : pieces) {
    const auto& dU = U.distance();
    U.for_each([&](const Cell& c, long long k) {
      if (dU[k] < eps && dV[vb.local(c)] >= eps) num += jac(g.center(c));
      for (int i = 0; i < g.d; ++i)
        for (int sgn = -1; sgn <= 1; sgn += 2) {
          Cell q = c;
          q[i] += sgn;
          if (V.contains(q) && !U.contains(q)) {
            ++cut_cells;
            return;
          }
        }
    });
  }
  out.cost = num / den;
  out.slack = 2.0 * double(cut_cells) * supJ / den;
  return out;
}

namespace {

std::vector<StandardPair> iterate_pair(const PiecewiseMap& map, const StandardPair& p, int n, const Region* Vstar) {
  std::vector<StandardPair> out;
  const GridPtr& g = map.grid();
  const double eps0 = map.k.eps0();
  std::vector<Branch> brs;
  if (n == 1) {
    for (int b : branches_meeting(map, p.domain)) brs.push_back(compose_itinerary(map, {b}));
  } else {
    brs = compose_branches_meeting(map, n, p.domain);
  }
  const std::vector<double> f = p.scaled();
  for (const auto& br : brs) {
    BranchImage img = branch_image(br, g, p.domain, f);
    if (img.domain.empty()) continue;
    ChopResult cr = chop(img.domain, Vstar, eps0);
    const Box& ib = img.domain.box();
    for (const auto& U : cr.pieces) {
      const Box& ub = U.box();
      std::vector<double> fu(ub.volume(), 0.0);
      U.for_each([&](const Cell& c, long long k) { fu[k] = img.f[ib.local(c)]; });
      StandardPair q = StandardPair::from_density(U, fu);
      if (q.weight > 0) out.push_back(std::move(q));
    }
  }
  return out;
}

}  // namespace

StandardFamily iterate(const PiecewiseMap& map, const StandardFamily& fam, int n, const Region* Vstar) {
  if (n < 1) throw Error(ErrorClass::config, "bad-n");
  std::vector<std::vector<StandardPair>> parts(fam.pairs.size());
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < fam.pairs.size(); ++i) {
    try {
      parts[i] = iterate_pair(map, fam.pairs[i], n, Vstar);
    } catch (...) {
#pragma omp critical
      err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  StandardFamily out;
  for (auto& v : parts)
    for (auto& p : v) out.pairs.push_back(std::move(p));
  return out;
}

StandardFamily consolidate(const StandardFamily& fam) {
  StandardFamily out;
  std::unordered_map<std::size_t, std::vector<std::size_t>> seen;
  std::vector<std::vector<double>> fs;
  for (const auto& p : fam.pairs) {
    std::size_t h = p.domain.hash();
    auto& bucket = seen[h];
    bool merged = false;
    for (std::size_t j : bucket)
      if (out.pairs[j].domain == p.domain) {
        auto f = p.scaled();
        for (std::size_t k = 0; k < f.size(); ++k) fs[j][k] += f[k];
        merged = true;
        break;
      }
    if (merged) continue;
    bucket.push_back(out.pairs.size());
    out.pairs.push_back(p);
    fs.push_back(p.scaled());
  }
  for (std::size_t j = 0; j < out.pairs.size(); ++j) out.pairs[j] = StandardPair::from_density(out.pairs[j].domain, fs[j]);
  return out;
}

StandardFamily iterate_stepwise(const PiecewiseMap& map, const StandardFamily& fam, int n, const Region* Vstar) {
  StandardFamily cur = fam;
  for (int s = 0; s < n; ++s) cur = consolidate(iterate(map, cur, 1, Vstar));
  return cur;
}

std::vector<double> boundary_weights(const StandardFamily& fam, const std::vector<double>& eps) {
  std::vector<std::size_t> order(eps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return eps[a] < eps[b]; });
  std::vector<double> sorted(eps.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = eps[order[i]];
  std::vector<std::vector<double>> per(fam.pairs.size(), std::vector<double>(eps.size() + 1, 0.0));
#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < fam.pairs.size(); ++j) {
    const auto& p = fam.pairs[j];
    const auto& dist = p.domain.distance();
    p.domain.for_each([&](const Cell&, long long k) {
      // First grid value strictly above the distance: the cell counts for that eps and all larger.
      std::size_t at = std::upper_bound(sorted.begin(), sorted.end(), double(dist[k])) - sorted.begin();
      per[j][at] += p.rho[k];
    });
    for (auto& v : per[j]) v *= p.weight;
  }
  std::vector<double> bucket(eps.size() + 1, 0.0);
  for (const auto& v : per)
    for (std::size_t i = 0; i < v.size(); ++i) bucket[i] += v[i];
  std::vector<double> out(eps.size(), 0.0);
  double run = 0;
  const double cv = fam.pairs.empty() ? 0 : fam.pairs[0].domain.grid()->cell_volume;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    run += bucket[i];
    out[order[i]] = run * cv;
  }
  return out;
}

double boundary_weight(const StandardFamily& fam, double eps) { return boundary_weights(fam, {eps})[0]; }

double family_slack(const StandardFamily& fam) {
  double s = 0;
  for (const auto& p : fam.pairs) {
    double mx = 0;
    p.domain.for_each([&](const Cell&, long long k) { mx = std::max(mx, p.rho[k]); });
    s += p.weight * double(p.domain.boundary_cell_count()) * p.domain.grid()->cell_volume * mx;
  }
  return s;
}

std::vector<double> proper_grid(double eps0, double eta) { return dyadic_grid(eps0 / 2, 2 * eta); }

double properness(const StandardFamily& fam, const std::vector<double>& eps_grid) {
  const double tot = fam.total();
  if (!(tot > 0)) return 0;
  auto bw = boundary_weights(fam, eps_grid);
  const double slack = family_slack(fam);
  double B = 0;
  for (std::size_t i = 0; i < eps_grid.size(); ++i) B = std::max(B, (bw[i] - slack) / (tot * eps_grid[i]));
  return B;
}

bool is_proper(const StandardFamily& fam, double B, const std::vector<double>& eps_grid) {
  return properness(fam, eps_grid) <= B;
}

GrowthResult growth_check(const PiecewiseMap& map, const StandardFamily& fam, double eps, const GrowthConstants& gc) {
  GrowthResult r;
  StandardFamily next = iterate(map, fam, map.k.n0);
  const double grow = 1 + gc.Ca * map.k.sigma;
  r.lhs = boundary_weight(next, eps);
  r.rhs = grow * boundary_weight(fam, std::pow(map.k.Lambda, map.k.n0) * eps) + gc.zeta1 * fam.total() * eps;
  r.slack = kGeoSlack * (family_slack(next) + grow * family_slack(fam));
  return r;
}

std::vector<StandardFamily> calibration_suite(const PiecewiseMap& map, double B, int count, std::uint64_t seed) {
  std::vector<StandardFamily> out;
  const GridPtr& gp = map.grid();
  const auto& g = *gp;
  const int d = g.d;
  const double eps0 = map.k.eps0();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int side = std::max(2, int(std::ceil(2.0 * d / B / g.eta)));
  int cap = std::max(2, int(std::floor(0.9 * eps0 / std::sqrt(double(d)) / g.eta)));
  side = std::min(side, cap);
  for (int f = 0; f < count; ++f) {
    StandardFamily fam;
    for (int p = 0; p < 4; ++p) {
      Box bx;
      bx.size = {1, 1, 1};
      for (int i = 0; i < d; ++i) {
        int s = std::min(cap, side + int(U(rng) * side));
        s = std::min(s, g.n[i]);
        bx.size[i] = s;
        bx.lo[i] = int(U(rng) * (g.n[i] - s + 1));
      }
      Region I = Region::from_mask(gp, bx, std::vector<uint8_t>(bx.volume(), 1)).intersect(map.ambient.space);
      if (I.empty()) continue;
      fam.pairs.push_back(StandardPair::uniform(I, 0.5 + U(rng)));
    }
    out.push_back(std::move(fam));
  }
  return out;
}

void fit_growth(const PiecewiseMap& map, const std::vector<StandardFamily>& suite, int max_steps, GrowthConstants& gc) {
  const double eps0 = map.k.eps0();
  const auto grid = proper_grid(eps0, map.grid()->eta);
  const double grow = 1 + gc.Ca * map.k.sigma;
  double z2 = 0, z4 = 0;
  for (const auto& F0 : suite) {
    const double tot = F0.total();
    if (!(tot > 0)) continue;
    StandardFamily F = F0;
    for (int m = 1; m <= max_steps; ++m) {
      F = consolidate(iterate(map, F, 1));
      auto lhs = boundary_weights(F, grid);
      std::vector<double> shrunk(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) shrunk[i] = std::pow(map.k.Lambda, m) * grid[i];
      auto base = boundary_weights(F0, shrunk);
      const double coef = gc.zeta3 * std::pow(grow, double(m) / map.k.n0);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        double v = (lhs[i] - coef * base[i]) / (tot * grid[i]);
        z4 = std::max(z4, v);
        if (m % map.k.n0 == 0) z2 = std::max(z2, v);
      }
    }
  }
  gc.zeta2 = 1.5 * z2;
  gc.zeta4 = 1.5 * z4;
  gc.fitted = true;
}

int analytic_recovery_time(double B, const GrowthConstants& gc) {
  if (!(gc.theta2 < 1)) throw Error(ErrorClass::hypothesis, "no-recovery", "theta2 >= 1");
  if (!(gc.zeta4 < gc.P)) throw Error(ErrorClass::hypothesis, "no-recovery", "P must exceed zeta4");
  double room = gc.P - gc.zeta4;
  if (B * gc.zeta3 <= room) return 1;
  return std::max(1, int(std::ceil(std::log(room / (B * gc.zeta3)) / std::log(gc.theta2) - 1e-12)));
}

int recovery_time(const PiecewiseMap& map, double B, const GrowthConstants& gc, const RecoveryOptions& opt) {
  if (!(gc.theta2 < 1)) throw Error(ErrorClass::hypothesis, "no-recovery", "theta2 >= 1");
  if (B < gc.P) B = gc.P;
  const auto grid = proper_grid(map.k.eps0(), map.grid()->eta);
  // Ladder P 2^k up to the first level >= B; each level contributes its own families so that
  // the result is monotone in B.
  std::vector<double> levels;
  for (double L = gc.P;; L *= 2) {
    levels.push_back(L);
    if (L >= B) break;
  }
  int worst = 1;
  for (std::size_t lv = 0; lv < levels.size(); ++lv) {
    auto suite = calibration_suite(map, levels[lv], std::max(1, opt.suite_size / 2), opt.seed * 1000003ULL + lv);
    for (const auto& F0 : suite) {
      StandardFamily F = F0;
      int first = -1, streak = 0;
      for (int m = 1; m <= opt.cap + opt.window; ++m) {
        F = consolidate(iterate(map, F, 1));
        if (properness(F, grid) <= gc.P) {
          if (streak == 0) first = m;
          if (++streak > opt.window) break;
        } else {
          streak = 0;
          first = -1;
        }
      }
      if (first < 0 || streak <= opt.window || first > opt.cap)
        throw Error(ErrorClass::hypothesis, "no-recovery", "B=" + std::to_string(levels[lv]));
      worst = std::max(worst, first);
    }
  }
  if (opt.analytic) worst = std::max(worst, analytic_recovery_time(B, gc));
  return worst;
}

StandardFamily remainder(const StandardFamily& fam, const std::vector<Region>& selection) {
  if (selection.size() != fam.pairs.size()) throw Error(ErrorClass::config, "selection-size");
  StandardFamily out;
  for (std::size_t j = 0; j < fam.pairs.size(); ++j) {
    const auto& p = fam.pairs[j];
    const Region& R = selection[j];
    if (R.empty()) {
      out.pairs.push_back(p);
      continue;
    }
    if (!R.subset_of(p.domain)) throw Error(ErrorClass::builder, "selection-not-contained");
    Region rest = p.domain.subtract(R);
    if (rest.empty()) continue;
    const Box& pb = p.domain.box();
    std::vector<double> f(rest.box().volume(), 0.0);
    rest.for_each([&](const Cell& c, long long k) { f[k] = p.weight * p.rho[pb.local(c)]; });
    StandardPair q = StandardPair::from_density(rest, f);
    if (q.weight > 0) out.pairs.push_back(std::move(q));
  }
  return out;
}

ZRemainder remainder_with_Z(const StandardFamily& fam, const Region& Z, const Region& Zp, const std::vector<double>& eps_grid) {
  if (!Z.subset_of(Zp)) throw Error(ErrorClass::config, "collar-not-nested");
  if (Zp.subtract(Z).empty()) throw Error(ErrorClass::config, "degenerate-collar");
  std::vector<Region> sel(fam.pairs.size(), Region(Z.grid()));
  for (std::size_t j = 0; j < fam.pairs.size(); ++j) {
    const auto& I = fam.pairs[j].domain;
    if (I.intersect(Z).empty()) continue;
    if (!Zp.subset_of(I)) throw Error(ErrorClass::builder, "collar-not-contained", "pair " + std::to_string(j));
    sel[j] = Z;
  }
  ZRemainder r;
  r.family = remainder(fam, sel);
  r.Bprime = properness(r.family, eps_grid);
  return r;
}

RegularWeight regular_weight(const StandardFamily& fam, double delta) {
  RegularWeight r;
  const double tot = fam.total();
  if (!(tot > 0)) return r;
  for (const auto& p : fam.pairs) {
    const auto& dist = p.domain.distance();
    double inner = 0;
    p.domain.for_each([&](const Cell&, long long k) {
      if (dist[k] >= delta) inner += p.rho[k];
    });
    inner *= p.domain.grid()->cell_volume;
    r.interior_fraction += p.weight * inner;
    if (inner > 0) r.regular_fraction += p.weight;
  }
  r.regular_fraction /= tot;
  r.interior_fraction /= tot;
  return r;
}

}  // namespace inducer
