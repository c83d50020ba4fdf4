#include "inducer/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

namespace inducer {

Vec Affine::apply(const Vec& x, int d) const {
  Vec y{0, 0, 0};
  for (int i = 0; i < d; ++i) {
    double s = c[i];
    for (int j = 0; j < d; ++j) s += A[3 * i + j] * x[j];
    y[i] = s;
  }
  return y;
}

double Affine::det(int d) const {
  if (d == 1) return A[0];
  if (d == 2) return A[0] * A[4] - A[1] * A[3];
  return A[0] * (A[4] * A[8] - A[5] * A[7]) - A[1] * (A[3] * A[8] - A[5] * A[6]) + A[2] * (A[3] * A[7] - A[4] * A[6]);
}

Affine Affine::inverse(int d) const {
  double dt = det(d);
  if (dt == 0) throw Error(ErrorClass::config, "singular-branch", "affine branch is not invertible");
  Affine r;
  r.A = {0, 0, 0, 0, 0, 0, 0, 0, 0};
  if (d == 1) {
    r.A[0] = 1 / A[0];
  } else if (d == 2) {
    r.A[0] = A[4] / dt;
    r.A[1] = -A[1] / dt;
    r.A[3] = -A[3] / dt;
    r.A[4] = A[0] / dt;
  } else {
    r.A[0] = (A[4] * A[8] - A[5] * A[7]) / dt;
    r.A[1] = (A[2] * A[7] - A[1] * A[8]) / dt;
    r.A[2] = (A[1] * A[5] - A[2] * A[4]) / dt;
    r.A[3] = (A[5] * A[6] - A[3] * A[8]) / dt;
    r.A[4] = (A[0] * A[8] - A[2] * A[6]) / dt;
    r.A[5] = (A[2] * A[3] - A[0] * A[5]) / dt;
    r.A[6] = (A[3] * A[7] - A[4] * A[6]) / dt;
    r.A[7] = (A[1] * A[6] - A[0] * A[7]) / dt;
    r.A[8] = (A[0] * A[4] - A[1] * A[3]) / dt;
  }
  for (int i = 0; i < d; ++i) {
    double s = 0;
    for (int j = 0; j < d; ++j) s -= r.A[3 * i + j] * c[j];
    r.c[i] = s;
  }
  return r;
}

Affine Affine::then(const Affine& next, int d) const {
  Affine r;
  r.A = {0, 0, 0, 0, 0, 0, 0, 0, 0};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0;
      for (int k = 0; k < d; ++k) s += next.A[3 * i + k] * A[3 * k + j];
      r.A[3 * i + j] = s;
    }
  r.c = next.apply(c, d);
  return r;
}

double MapConstants::D() const { return Dtilde / (1 - std::pow(Lambda, alpha)); }
double MapConstants::eps0() const { return std::min(eps_exp, eps_cplx); }

void MapConstants::validate() const {
  if (!(Lambda > 0 && Lambda < 1)) throw Error(ErrorClass::config, "bad-lambda", "need 0 < Lambda < 1");
  if (!(alpha > 0 && alpha <= 1)) throw Error(ErrorClass::config, "bad-alpha", "need 0 < alpha <= 1");
  if (Dtilde < 0) throw Error(ErrorClass::config, "bad-distortion", "need Dtilde >= 0");
  if (n0 < 1) throw Error(ErrorClass::config, "bad-n0", "need n0 >= 1");
  if (!(eps_exp > 0 && eps_cplx > 0)) throw Error(ErrorClass::config, "bad-epsilon", "need positive epsilons");
  double bound = std::pow(Lambda, -n0) - 1;
  if (!(sigma >= 0 && sigma < bound))
    throw Error(ErrorClass::config, "complexity-bound",
                "sigma=" + std::to_string(sigma) + " must be below Lambda^-n0 - 1 = " + std::to_string(bound));
  double need = D() / (1 - std::pow(Lambda, alpha));
  if (!(a0 > need)) throw Error(ErrorClass::config, "a0-bound", "a0 must exceed " + std::to_string(need));
  if (P < 0) throw Error(ErrorClass::config, "bad-P", "need P >= 0");
}

const std::vector<int>& PiecewiseMap::labels() const {
  std::call_once(labels_once_, [this] {
    const auto& g = *ambient.grid;
    const long long n = g.total();
    labels_.assign(n, -1);
#pragma omp parallel for schedule(static)
    for (long long k = 0; k < n; ++k) {
      Cell c = g.unlinear(k);
      if (ambient.space.contains(c)) labels_[k] = branch_at(g.center(c));
    }
    std::vector<Cell> lo(branches.size(), Cell{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(),
                                               std::numeric_limits<int>::max()});
    std::vector<Cell> hi(branches.size(), Cell{-1, -1, -1});
    for (long long k = 0; k < n; ++k) {
      int b = labels_[k];
      if (b < 0) continue;
      Cell c = g.unlinear(k);
      for (int i = 0; i < kMaxDim; ++i) {
        lo[b][i] = std::min(lo[b][i], c[i]);
        hi[b][i] = std::max(hi[b][i], c[i]);
      }
    }
    boxes_.assign(branches.size(), Box{});
    for (std::size_t b = 0; b < branches.size(); ++b) {
      if (hi[b][0] < 0) continue;
      for (int i = 0; i < kMaxDim; ++i) {
        boxes_[b].lo[i] = lo[b][i];
        boxes_[b].size[i] = hi[b][i] - lo[b][i] + 1;
      }
    }
  });
  return labels_;
}

const std::vector<Box>& PiecewiseMap::domain_boxes() const {
  labels();
  return boxes_;
}

Region PiecewiseMap::domain(int b) const {
  const auto& lab = labels();
  const Box& bx = domain_boxes()[b];
  std::vector<uint8_t> m(bx.volume(), 0);
  for (long long k = 0; k < bx.volume(); ++k) m[k] = lab[grid()->linear(bx.cell(k))] == b;
  return Region::from_mask(grid(), bx, std::move(m));
}

RasterDensity RasterDensity::uniform(const Region& r, double value) {
  RasterDensity f;
  f.support = r;
  f.values.assign(r.box().volume(), 0.0);
  for (std::size_t k = 0; k < f.values.size(); ++k)
    if (r.mask()[k]) f.values[k] = value;
  return f;
}

double RasterDensity::at(const Cell& c) const { return support.contains(c) ? values[support.box().local(c)] : 0.0; }

double RasterDensity::integral() const {
  if (support.empty()) return 0;
  double s = 0;
  support.for_each([&](const Cell&, long long k) { s += values[k]; });
  return s * support.grid()->cell_volume;
}

Branch compose_itinerary(const PiecewiseMap& map, const std::vector<int>& it) {
  if (it.empty()) throw Error(ErrorClass::config, "empty-itinerary");
  for (int b : it)
    if (b < 0 || b >= int(map.branches.size())) throw Error(ErrorClass::config, "bad-itinerary", "unknown branch");
  if (it.size() == 1) {
    Branch b = map.branches[it[0]];
    b.itinerary = it;
    return b;
  }
  auto base = std::make_shared<std::vector<Branch>>();
  for (int b : it) base->push_back(map.branches[b]);
  Branch out;
  out.itinerary = it;
  const int d = map.d();
  for (std::size_t i = 0; i < it.size(); ++i) out.id += (i ? "." : "") + map.branches[it[i]].id;
  out.in_domain = [base](const Vec& x0) {
    Vec x = x0;
    for (const auto& b : *base) {
      if (!b.in_domain(x)) return false;
      x = b.forward(x);
    }
    return true;
  };
  out.forward = [base](const Vec& x0) {
    Vec x = x0;
    for (const auto& b : *base) x = b.forward(x);
    return x;
  };
  out.pull = [base](const Vec& y0, Vec& x, double& J) {
    Vec y = y0;
    J = 1;
    for (auto it = base->rbegin(); it != base->rend(); ++it) {
      double j;
      if (!it->pull(y, x, j)) return false;
      J *= j;
      y = x;
    }
    x = y;
    return true;
  };
  out.lambda = 1;
  bool affine = true;
  Affine acc;
  for (std::size_t i = 0; i < base->size(); ++i) {
    const auto& b = (*base)[i];
    out.lambda *= b.lambda;
    if (!b.affine) {
      affine = false;
      continue;
    }
    acc = i == 0 ? *b.affine : acc.then(*b.affine, d);
  }
  if (affine) out.affine = acc;
  return out;
}

namespace {

std::vector<int> forward_itinerary(const PiecewiseMap& map, Vec x, int n) {
  std::vector<int> it;
  it.reserve(n);
  for (int s = 0; s < n; ++s) {
    int b = map.branch_at(x);
    if (b < 0) return {};
    it.push_back(b);
    x = map.branches[b].forward(x);
  }
  return it;
}

void collect_itineraries(const PiecewiseMap& map, int n, const std::vector<Cell>& cells, std::size_t cap,
                         std::map<std::vector<int>, Box>& out) {
  const auto& g = *map.grid();
  for (const auto& c : cells) {
    auto it = forward_itinerary(map, g.center(c), n);
    if (it.empty()) continue;
    auto [pos, fresh] = out.try_emplace(it, Box{c, {1, 1, 1}});
    if (!fresh) pos->second = Box::hull(pos->second, Box{c, {1, 1, 1}});
    if (out.size() > cap) throw Error(ErrorClass::builder, "branch-explosion", "n=" + std::to_string(n));
  }
}

std::vector<Cell> dilate_cells(const Region& r) {
  const auto& g = *r.grid();
  std::set<long long> seen;
  std::vector<Cell> out;
  r.for_each([&](const Cell& c, long long) {
    Cell lo{0, 0, 0}, hi{0, 0, 0};
    for (int i = 0; i < g.d; ++i) {
      lo[i] = -1;
      hi[i] = 1;
    }
    for (int dz = lo[2]; dz <= hi[2]; ++dz)
      for (int dy = lo[1]; dy <= hi[1]; ++dy)
        for (int dx = lo[0]; dx <= hi[0]; ++dx) {
          Cell q{c[0] + dx, c[1] + dy, c[2] + dz};
          bool ok = true;
          for (int i = 0; i < g.d; ++i) ok = ok && q[i] >= 0 && q[i] < g.n[i];
          if (ok && seen.insert(g.linear(q)).second) out.push_back(q);
        }
  });
  return out;
}

}  // namespace

std::vector<Branch> compose_branches(const PiecewiseMap& map, int n, std::size_t cap) {
  if (n < 1) throw Error(ErrorClass::config, "bad-n", "n must be >= 1");
  if (n == 1) {
    std::vector<Branch> out = map.branches;
    for (std::size_t b = 0; b < out.size(); ++b) out[b].itinerary = {int(b)};
    return out;
  }
  std::map<std::vector<int>, Box> its;
  collect_itineraries(map, n, map.ambient.space.cells(), cap, its);
  std::vector<Branch> out;
  for (const auto& [it, box] : its) out.push_back(compose_itinerary(map, it));
  return out;
}

std::vector<Branch> compose_branches_meeting(const PiecewiseMap& map, int n, const Region& support, std::size_t cap) {
  std::map<std::vector<int>, Box> its;
  collect_itineraries(map, n, dilate_cells(support), cap, its);
  std::vector<Branch> out;
  for (const auto& [it, box] : its) out.push_back(compose_itinerary(map, it));
  return out;
}

std::vector<int> branches_meeting(const PiecewiseMap& map, const Region& r) {
  if (r.empty()) return {};
  const auto& lab = map.labels();
  const auto& g = *map.grid();
  std::vector<uint8_t> hit(map.branches.size(), 0);
  const Box& b = r.box();
  Cell lo{0, 0, 0}, hi{1, 1, 1};
  for (int i = 0; i < g.d; ++i) {
    lo[i] = std::max(0, b.lo[i] - 1);
    hi[i] = std::min(g.n[i], b.lo[i] + b.size[i] + 1);
  }
  // Only cells within one step of r matter; scan the padded box and test adjacency.
  for (int z = lo[2]; z < hi[2]; ++z)
    for (int y = lo[1]; y < hi[1]; ++y)
      for (int x = lo[0]; x < hi[0]; ++x) {
        Cell c{x, y, z};
        int l = lab[g.linear(c)];
        if (l < 0 || hit[l]) continue;
        bool near = r.contains(c);
        for (int dz = (g.d > 2 ? -1 : 0); !near && dz <= (g.d > 2 ? 1 : 0); ++dz)
          for (int dy = (g.d > 1 ? -1 : 0); !near && dy <= (g.d > 1 ? 1 : 0); ++dy)
            for (int dx = -1; !near && dx <= 1; ++dx) near = r.contains({x + dx, y + dy, z + dz});
        if (near) hit[l] = 1;
      }
  std::vector<int> out;
  for (std::size_t i = 0; i < hit.size(); ++i)
    if (hit[i]) out.push_back(int(i));
  return out;
}

Box image_box(const Branch& b, const GridPtr& gp, const Region& I) {
  const auto& g = *gp;
  const int d = g.d;
  Vec lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  auto take = [&](const Vec& y) {
    for (int i = 0; i < d; ++i) {
      lo[i] = std::min(lo[i], y[i]);
      hi[i] = std::max(hi[i], y[i]);
    }
  };
  const Box& src = I.box();
  if (b.affine) {
    for (int corner = 0; corner < (1 << d); ++corner) {
      Vec p{0, 0, 0};
      for (int i = 0; i < d; ++i) {
        int cell = (corner >> i & 1) ? src.lo[i] + src.size[i] : src.lo[i];
        p[i] = g.lo[i] + cell * g.eta;
      }
      take(b.affine->apply(p, d));
    }
  } else {
    bool any = false;
    I.for_each([&](const Cell& c, long long) {
      Vec x = g.center(c);
      if (!b.in_domain(x)) return;
      any = true;
      for (int corner = 0; corner < (1 << d); ++corner) {
        Vec p = x;
        for (int i = 0; i < d; ++i) p[i] += ((corner >> i & 1) ? 0.5 : -0.5) * g.eta;
        take(b.forward(p));
      }
    });
    // Cells straddling the domain edge can pull back even when their centre is outside.
    if (!any) {
      I.for_each([&](const Cell& c, long long) {
        for (int corner = 0; corner < (1 << d); ++corner) {
          Vec p = g.center(c);
          for (int i = 0; i < d; ++i) p[i] += ((corner >> i & 1) ? 0.5 : -0.5) * g.eta;
          if (b.in_domain(p)) {
            take(b.forward(p));
            any = true;
          }
        }
      });
      if (!any) return Box{};
    }
  }
  Box out;
  out.size = {1, 1, 1};
  for (int i = 0; i < d; ++i) {
    int a = int(std::floor((lo[i] - g.lo[i]) / g.eta)) - 1;
    int c = int(std::ceil((hi[i] - g.lo[i]) / g.eta)) + 1;
    a = std::max(a, 0);
    c = std::min(c, g.n[i]);
    if (c <= a) return Box{};
    out.lo[i] = a;
    out.size[i] = c - a;
  }
  return out;
}

namespace {

// Density at x (inside cell cx of I). Non-affine 1D branches interpolate ln f linearly
// between neighbouring centres so that pulled-back densities keep their Lipschitz constant.
double sample(const Region& I, const std::vector<double>& f, const Vec& x, long long lk, bool smooth) {
  if (!smooth) return f[lk];
  const auto& g = *I.grid();
  const Box& ib = I.box();
  double u = (x[0] - g.lo[0]) / g.eta - 0.5;
  int i0 = int(std::floor(u));
  double t = u - i0;
  Cell a{i0, 0, 0}, b{i0 + 1, 0, 0};
  if (!I.contains(a) || !I.contains(b)) return f[lk];
  double fa = f[ib.local(a)], fb = f[ib.local(b)];
  if (!(fa > 0 && fb > 0)) return f[lk];
  return std::exp((1 - t) * std::log(fa) + t * std::log(fb));
}

std::vector<double> remap(const std::vector<double>& v, const Box& from, const Box& to) {
  std::vector<double> out(to.volume(), 0.0);
  for (long long k = 0; k < to.volume(); ++k) {
    Cell c = to.cell(k);
    if (from.contains(c)) out[k] = v[from.local(c)];
  }
  return out;
}

}  // namespace

BranchImage branch_image(const Branch& b, const GridPtr& gp, const Region& I, const std::vector<double>& f) {
  BranchImage out{Region(gp), {}};
  if (I.empty()) return out;
  Box ob = image_box(b, gp, I);
  if (ob.volume() == 0) return out;
  const auto& g = *gp;
  std::vector<uint8_t> mask(ob.volume(), 0);
  std::vector<double> val(ob.volume(), 0.0);
  const Box& ib = I.box();
  const bool smooth = !b.affine && g.d == 1;
  const long long v = ob.volume();
  for (long long k = 0; k < v; ++k) {
    Vec x;
    double J;
    if (!b.pull(g.center(ob.cell(k)), x, J)) continue;
    Cell cx;
    if (!g.locate(x, cx) || !ib.contains(cx)) continue;
    long long lk = ib.local(cx);
    if (!I.mask()[lk]) continue;
    double val_k = sample(I, f, x, lk, smooth) * J;
    if (!(val_k > 0)) continue;
    mask[k] = 1;
    val[k] = val_k;
  }
  out.domain = Region::from_mask(gp, ob, std::move(mask));
  if (!out.domain.empty()) out.f = remap(val, ob, out.domain.box());
  return out;
}

namespace {

RasterDensity transfer_impl(const PiecewiseMap& map, const RasterDensity& f, int n, bool parallel) {
  const GridPtr& gp = map.grid();
  const auto& g = *gp;
  RasterDensity out;
  out.support = Region(gp);
  if (f.support.empty()) return out;
  auto branches = n == 1 ? [&] {
    std::vector<Branch> bs;
    for (int b : branches_meeting(map, f.support)) bs.push_back(compose_itinerary(map, {b}));
    return bs;
  }()
                         : compose_branches_meeting(map, n, f.support);
  std::vector<Box> boxes;
  Box hull;
  for (const auto& b : branches) {
    boxes.push_back(image_box(b, gp, f.support));
    hull = Box::hull(hull, boxes.back());
  }
  if (hull.volume() == 0) return out;
  std::vector<double> acc(hull.volume(), 0.0);
  const Box& sb = f.support.box();
  const auto& smask = f.support.mask();
  for (std::size_t bi = 0; bi < branches.size(); ++bi) {
    const Branch& br = branches[bi];
    const Box& ob = boxes[bi];
    const bool smooth = !br.affine && g.d == 1;
    const long long v = ob.volume();
    auto body = [&](long long k) {
      Cell y = ob.cell(k);
      Vec x;
      double J;
      if (!br.pull(g.center(y), x, J)) return;
      Cell cx;
      if (!g.locate(x, cx) || !sb.contains(cx)) return;
      long long lk = sb.local(cx);
      if (!smask[lk]) return;
      acc[hull.local(y)] += sample(f.support, f.values, x, lk, smooth) * J;
    };
    if (parallel) {
#pragma omp parallel for schedule(static)
      for (long long k = 0; k < v; ++k) body(k);
    } else {
      for (long long k = 0; k < v; ++k) body(k);
    }
  }
  std::vector<uint8_t> mask(hull.volume(), 0);
  for (long long k = 0; k < hull.volume(); ++k) mask[k] = acc[k] > 0;
  out.support = Region::from_mask(gp, hull, std::move(mask));
  out.values = remap(acc, hull, out.support.box());
  return out;
}

}  // namespace

RasterDensity transfer_apply(const PiecewiseMap& map, const RasterDensity& f, int n) {
  return transfer_impl(map, f, n, true);
}

RasterDensity transfer_apply_serial(const PiecewiseMap& map, const RasterDensity& f, int n) {
  return transfer_impl(map, f, n, false);
}

namespace {

double halton(std::uint64_t i, int base) {
  double f = 1, r = 0;
  while (i > 0) {
    f /= base;
    r += f * double(i % base);
    i /= base;
  }
  return r;
}

struct PairSample {
  Vec y1, y2, x1, x2;
  double J1, J2;
};

// Quasi-random pairs inside T(O_b): first point by Halton over the domain box, second by a
// log-uniform offset of length up to `reach`.
std::vector<PairSample> sample_pairs(const PiecewiseMap& map, int b, std::size_t count, double reach,
                                     std::uint64_t seed) {
  std::vector<PairSample> out;
  const auto& g = *map.grid();
  const int d = g.d;
  const Box& box = map.domain_boxes()[b];
  if (box.volume() == 0) return out;
  const Branch& br = map.branches[b];
  std::mt19937_64 rng(seed * 7919 + b);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int bases[3] = {2, 3, 5};
  Vec shift{U(rng), U(rng), U(rng)};
  const double rmin = std::max(1e-6 * reach, g.eta * 1e-4);
  std::size_t tries = 0;
  for (std::uint64_t i = 1; out.size() < count && tries < 8 * count; ++i, ++tries) {
    Vec x{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      double u = std::fmod(halton(i, bases[a]) + shift[a], 1.0);
      x[a] = g.lo[a] + (box.lo[a] + u * box.size[a]) * g.eta;
    }
    if (!br.in_domain(x)) continue;
    PairSample s;
    s.y1 = br.forward(x);
    if (!br.pull(s.y1, s.x1, s.J1)) continue;
    double r = rmin * std::pow(reach / rmin, U(rng));
    Vec dir{0, 0, 0};
    double nn = 0;
    for (int a = 0; a < d; ++a) {
      dir[a] = U(rng) * 2 - 1;
      nn += dir[a] * dir[a];
    }
    nn = std::sqrt(nn);
    if (nn < 1e-12) continue;
    s.y2 = s.y1;
    for (int a = 0; a < d; ++a) s.y2[a] += r * dir[a] / nn;
    if (!br.pull(s.y2, s.x2, s.J2)) continue;
    if (dist(s.y1, s.y2, d) <= 0) continue;
    out.push_back(s);
  }
  return out;
}

}  // namespace

ExpansionReport verify_expansion(const PiecewiseMap& map, std::size_t samples, std::uint64_t seed) {
  ExpansionReport rep;
  const int nb = int(map.branches.size());
  rep.measured.assign(nb, 0.0);
  std::vector<int> skipped(nb, 0);
  const int d = map.d();
  const double reach = map.k.eps_exp;
  map.labels();
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < nb; ++b) {
    auto pairs = sample_pairs(map, b, samples, reach, seed);
    if (pairs.size() < 2) {
      skipped[b] = 1;
      continue;
    }
    double m = 0;
    for (const auto& p : pairs) {
      double dy = dist(p.y1, p.y2, d);
      if (dy > reach) continue;
      m = std::max(m, dist(p.x1, p.x2, d) / dy);
    }
    rep.measured[b] = m;
  }
  for (int b = 0; b < nb; ++b) {
    if (skipped[b]) rep.warnings.push_back("branch " + map.branches[b].id + " skipped: image below two cells");
    if (rep.measured[b] > map.k.Lambda * (1 + 1e-9)) rep.flagged.push_back(b);
    rep.max_measured = std::max(rep.max_measured, rep.measured[b]);
  }
  return rep;
}

DistortionReport verify_distortion(const PiecewiseMap& map, std::size_t samples, std::uint64_t seed) {
  DistortionReport rep;
  rep.alpha = map.k.alpha;
  const int nb = int(map.branches.size());
  const int d = map.d();
  double reach = 0;
  for (int i = 0; i < d; ++i) reach += std::pow(map.grid()->hi[i] - map.grid()->lo[i], 2);
  reach = std::sqrt(reach);
  std::vector<double> per(nb, 0.0);
  std::vector<int> bad(nb, 0);
  map.labels();
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < nb; ++b) {
    auto pairs = sample_pairs(map, b, samples, reach, seed + 17);
    double m = 0;
    for (const auto& p : pairs) {
      if (!(p.J1 > 0) || !(p.J2 > 0)) {
        bad[b] = 1;
        break;
      }
      double dy = dist(p.y1, p.y2, d);
      m = std::max(m, std::abs(std::log(p.J1) - std::log(p.J2)) / std::pow(dy, rep.alpha));
    }
    per[b] = m;
  }
  for (int b = 0; b < nb; ++b) {
    if (bad[b]) throw Error(ErrorClass::hypothesis, "nonsingular-violation", "branch " + map.branches[b].id);
    rep.measured = std::max(rep.measured, per[b]);
  }
  rep.flagged = rep.measured > map.k.Dtilde * (1 + 1e-6) + 1e-9;
  return rep;
}

double complexity_sum(const PiecewiseMap& map, const Region& I, double eps, int r) {
  const GridPtr& gp = map.grid();
  const double inner = std::pow(map.k.Lambda, r) * eps;
  const double denom = eps_boundary_measure(I, inner);
  if (!(denom > 0)) throw Error(ErrorClass::config, "epsilon-below-resolution", "empty collar at Lambda^r eps");
  const auto& dI = I.distance();
  const Box& ib = I.box();
  std::vector<Branch> branches = r == 1 ? [&] {
    std::vector<Branch> bs;
    for (int b : branches_meeting(map, I)) bs.push_back(compose_itinerary(map, {b}));
    return bs;
  }()
                                        : compose_branches_meeting(map, r, I);
  std::vector<double> ones(ib.volume(), 1.0);
  double num = 0;
  const auto& g = *gp;
  for (const auto& b : branches) {
    BranchImage V = branch_image(b, gp, I, ones);
    if (V.domain.empty()) continue;
    const auto& dV = V.domain.distance();
    V.domain.for_each([&](const Cell& y, long long k) {
      if (!(dV[k] < eps)) return;
      Vec x;
      double J;
      if (!b.pull(g.center(y), x, J)) return;
      Cell cx;
      if (!g.locate(x, cx) || !I.contains(cx)) return;
      if (dI[ib.local(cx)] >= inner) num += J * g.cell_volume;
    });
  }
  return num / denom;
}

ComplexityEstimate estimate_complexity(const PiecewiseMap& map, const Region& I, double eps) {
  if (I.empty()) throw Error(ErrorClass::config, "empty-region");
  if (!(eps > 0 && eps < map.k.eps_cplx)) throw Error(ErrorClass::config, "bad-epsilon", "need 0 < eps < eps_cplx");
  if (diameter(I) > map.k.eps_cplx + I.grid()->eta * std::sqrt(double(map.d())))
    throw Error(ErrorClass::config, "region-too-large", "diam I exceeds eps_cplx");
  ComplexityEstimate est;
  est.sigma_hat = complexity_sum(map, I, eps, map.k.n0);
  for (int r = 1; r < map.k.n0; ++r) est.cbar_hat.push_back(complexity_sum(map, I, eps, r));
  return est;
}

ComplexitySweep complexity_sweep(const PiecewiseMap& map, int count, std::uint64_t seed) {
  ComplexitySweep sw;
  const GridPtr& gp = map.grid();
  const auto& g = *gp;
  const int d = g.d;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto& lab = map.labels();
  // Cells next to a branch cut, for adversarial centres.
  std::vector<long long> cut_cells;
  for (long long k = 0; k < g.total(); ++k) {
    if (lab[k] < 0) continue;
    Cell c = g.unlinear(k);
    for (int i = 0; i < d; ++i) {
      Cell q = c;
      ++q[i];
      if (q[i] < g.n[i] && lab[g.linear(q)] >= 0 && lab[g.linear(q)] != lab[k]) {
        cut_cells.push_back(k);
        break;
      }
    }
  }
  const double eps_c = map.k.eps_cplx;
  const double lam_n0 = std::pow(map.k.Lambda, map.k.n0);
  for (int s = 0; s < count; ++s) {
    Vec centre{0, 0, 0};
    if (s % 2 == 1 && !cut_cells.empty()) {
      Cell c = g.unlinear(cut_cells[std::size_t(U(rng) * cut_cells.size()) % cut_cells.size()]);
      centre = g.center(c);
      for (int i = 0; i < d; ++i) centre[i] += 0.5 * g.eta;
    } else {
      for (int i = 0; i < d; ++i) centre[i] = g.lo[i] + U(rng) * (g.hi[i] - g.lo[i]);
    }
    // Box with diameter at most 0.95 eps_cplx.
    Vec half{0, 0, 0};
    double n2 = 0;
    for (int i = 0; i < d; ++i) {
      half[i] = 0.2 + 0.8 * U(rng);
      n2 += 4 * half[i] * half[i];
    }
    double scale = 0.95 * eps_c / std::sqrt(n2) * (0.3 + 0.7 * U(rng));
    Vec lo{0, 0, 0}, hi{0, 0, 0};
    for (int i = 0; i < d; ++i) {
      lo[i] = std::max(g.lo[i], centre[i] - half[i] * scale);
      hi[i] = std::min(g.hi[i], centre[i] + half[i] * scale);
    }
    Region I = Region::box_region(gp, lo, hi).intersect(map.ambient.space);
    if (I.count() < 16) continue;
    double maxeps = std::min(0.5 * eps_c, 0.5 * diameter(I));
    double eps = maxeps * std::pow(0.5, std::floor(U(rng) * 4));
    if (lam_n0 * eps < 4 * g.eta) eps = 4 * g.eta / lam_n0;
    if (eps >= eps_c) continue;
    try {
      auto est = estimate_complexity(map, I, eps);
      sw.sigma_max = std::max(sw.sigma_max, est.sigma_hat);
      for (double c : est.cbar_hat) sw.cbar_max = std::max(sw.cbar_max, c);
      ++sw.boxes;
    } catch (const Error&) {
    }
  }
  return sw;
}

}  // namespace inducer
