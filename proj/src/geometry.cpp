#include "inducer/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace inducer {

double dist(const Vec& a, const Vec& b, int d) {
  double s = 0;
  for (int i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::shared_ptr<const Grid> Grid::make(int d, const Vec& lo, const Vec& hi, double eta) {
  if (d < 1 || d > kMaxDim) throw Error(ErrorClass::config, "bad-dimension", std::to_string(d));
  if (!(eta > 0)) throw Error(ErrorClass::config, "bad-resolution", "eta must be positive");
  auto g = std::make_shared<Grid>();
  g->d = d;
  g->eta = eta;
  g->cell_volume = std::pow(eta, d);
  for (int i = 0; i < kMaxDim; ++i) {
    if (i >= d) {
      g->lo[i] = g->hi[i] = 0;
      g->n[i] = 1;
      continue;
    }
    double side = hi[i] - lo[i];
    if (!(side > 0)) throw Error(ErrorClass::config, "bad-box", "empty side");
    double q = side / eta;
    long long k = std::llround(q);
    if (k < 1 || std::abs(k * eta - side) > 1e-9 * side)
      throw Error(ErrorClass::config, "bad-resolution", "eta does not divide the box");
    if (k > (1LL << 30)) throw Error(ErrorClass::config, "bad-resolution", "grid too large");
    g->lo[i] = lo[i];
    g->hi[i] = hi[i];
    g->n[i] = int(k);
  }
  return g;
}

Vec Grid::center(const Cell& c) const {
  Vec v{0, 0, 0};
  for (int i = 0; i < d; ++i) v[i] = lo[i] + (c[i] + 0.5) * eta;
  return v;
}

bool Grid::locate(const Vec& p, Cell& c) const {
  c = {0, 0, 0};
  for (int i = 0; i < d; ++i) {
    double q = (p[i] - lo[i]) / eta;
    if (!(q >= 0) || q >= n[i]) return false;
    c[i] = int(q);
    if (c[i] >= n[i]) c[i] = n[i] - 1;
  }
  return true;
}

Cell Grid::unlinear(long long k) const {
  Cell c;
  c[0] = int(k % n[0]);
  k /= n[0];
  c[1] = int(k % n[1]);
  c[2] = int(k / n[1]);
  return c;
}

Box Box::hull(const Box& a, const Box& b) {
  if (a.volume() == 0) return b;
  if (b.volume() == 0) return a;
  Box h;
  for (int i = 0; i < kMaxDim; ++i) {
    int lo = std::min(a.lo[i], b.lo[i]);
    int hi = std::max(a.lo[i] + a.size[i], b.lo[i] + b.size[i]);
    h.lo[i] = lo;
    h.size[i] = hi - lo;
  }
  return h;
}

Box Box::overlap(const Box& a, const Box& b) {
  Box h;
  for (int i = 0; i < kMaxDim; ++i) {
    int lo = std::max(a.lo[i], b.lo[i]);
    int hi = std::min(a.lo[i] + a.size[i], b.lo[i] + b.size[i]);
    if (hi <= lo) return Box{};
    h.lo[i] = lo;
    h.size[i] = hi - lo;
  }
  return h;
}

Region::Region(GridPtr g) : grid_(std::move(g)), cache_(std::make_shared<Cache>()) {}

Region Region::from_mask(GridPtr g, const Box& box, std::vector<uint8_t> mask) {
  Region r(std::move(g));
  r.box_ = box;
  r.mask_ = std::move(mask);
  r.trim();
  return r;
}

void Region::trim() {
  count_ = 0;
  const long long v = box_.volume();
  Cell mn{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), std::numeric_limits<int>::max()};
  Cell mx{std::numeric_limits<int>::min(), std::numeric_limits<int>::min(), std::numeric_limits<int>::min()};
  for (long long k = 0; k < v; ++k) {
    if (!mask_[k]) continue;
    ++count_;
    Cell c = box_.cell(k);
    for (int i = 0; i < kMaxDim; ++i) {
      mn[i] = std::min(mn[i], c[i]);
      mx[i] = std::max(mx[i], c[i]);
    }
  }
  if (count_ == 0) {
    box_ = Box{};
    mask_.clear();
    return;
  }
  Box t;
  for (int i = 0; i < kMaxDim; ++i) {
    t.lo[i] = mn[i];
    t.size[i] = mx[i] - mn[i] + 1;
  }
  if (t == box_) return;
  std::vector<uint8_t> m(t.volume(), 0);
  for (long long k = 0; k < v; ++k)
    if (mask_[k]) m[t.local(box_.cell(k))] = 1;
  box_ = t;
  mask_ = std::move(m);
}

Region Region::from_predicate(GridPtr g, const std::function<bool(const Vec&)>& inside) {
  Box all;
  all.size = g->n;
  return from_predicate(g, all, inside);
}

Region Region::from_predicate(GridPtr g, const Box& within, const std::function<bool(const Vec&)>& inside) {
  Box all;
  all.size = g->n;
  Box b = Box::overlap(all, within);
  std::vector<uint8_t> m(b.volume(), 0);
  const long long v = b.volume();
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < v; ++k) m[k] = inside(g->center(b.cell(k))) ? 1 : 0;
  return from_mask(std::move(g), b, std::move(m));
}

Region Region::full(GridPtr g) {
  Box all;
  all.size = g->n;
  return from_mask(g, all, std::vector<uint8_t>(all.volume(), 1));
}

Region Region::box_region(GridPtr g, const Vec& lo, const Vec& hi) {
  const int d = g->d;
  Box b;
  b.size = {1, 1, 1};
  for (int i = 0; i < d; ++i) {
    // centres lo_g + (k + 1/2) eta strictly inside (lo, hi)
    double a = (lo[i] - g->lo[i]) / g->eta - 0.5;
    double c = (hi[i] - g->lo[i]) / g->eta - 0.5;
    int k0 = int(std::floor(a)) + 1;
    int k1 = int(std::ceil(c)) - 1;
    k0 = std::max(k0, 0);
    k1 = std::min(k1, g->n[i] - 1);
    if (k1 < k0) return Region(g);
    b.lo[i] = k0;
    b.size[i] = k1 - k0 + 1;
  }
  return from_mask(g, b, std::vector<uint8_t>(b.volume(), 1));
}

Region Region::from_cells(GridPtr g, const std::vector<Cell>& cells) {
  if (cells.empty()) return Region(g);
  Box b;
  Cell mn = cells[0], mx = cells[0];
  for (const auto& c : cells)
    for (int i = 0; i < kMaxDim; ++i) {
      mn[i] = std::min(mn[i], c[i]);
      mx[i] = std::max(mx[i], c[i]);
    }
  for (int i = 0; i < kMaxDim; ++i) {
    b.lo[i] = mn[i];
    b.size[i] = mx[i] - mn[i] + 1;
  }
  std::vector<uint8_t> m(b.volume(), 0);
  for (const auto& c : cells) m[b.local(c)] = 1;
  return from_mask(std::move(g), b, std::move(m));
}

Region Region::from_runs(GridPtr g, const Runs& runs) {
  if (runs.empty()) return Region(g);
  Cell mn{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), std::numeric_limits<int>::max()};
  Cell mx{-1, -1, -1};
  const long long total = g->total();
  for (auto [s, l] : runs) {
    if (s < 0 || l <= 0 || s + l > total) throw Error(ErrorClass::audit, "schema", "run outside grid");
    for (long long k : {s, s + l - 1}) {
      Cell c = g->unlinear(k);
      for (int i = 0; i < kMaxDim; ++i) {
        mn[i] = std::min(mn[i], c[i]);
        mx[i] = std::max(mx[i], c[i]);
      }
    }
    if (l > 1 && g->unlinear(s)[1] != g->unlinear(s + l - 1)[1]) {
      mn[0] = 0;
      mx[0] = g->n[0] - 1;
    }
  }
  Box b;
  for (int i = 0; i < kMaxDim; ++i) {
    b.lo[i] = mn[i];
    b.size[i] = mx[i] - mn[i] + 1;
  }
  std::vector<uint8_t> m(b.volume(), 0);
  for (auto [s, l] : runs)
    for (long long k = s; k < s + l; ++k) {
      Cell c = g->unlinear(k);
      if (!b.contains(c)) {
        // rows spanning z-planes; widen lazily
        throw Error(ErrorClass::audit, "schema", "run crosses region bounds");
      }
      m[b.local(c)] = 1;
    }
  return from_mask(std::move(g), b, std::move(m));
}

double Region::measure() const { return grid_ ? count_ * grid_->cell_volume : 0.0; }

bool Region::contains_point(const Vec& p) const {
  Cell c;
  if (!grid_ || !grid_->locate(p, c)) return false;
  return contains(c);
}

const std::vector<float>& Region::distance() const {
  std::call_once(cache_->once, [this] {
    std::vector<float> sq;
    edt_squared(box_, mask_, grid_ ? grid_->d : 1, sq);
    const double eta = grid_ ? grid_->eta : 1.0;
    cache_->dist.resize(sq.size());
    for (std::size_t k = 0; k < sq.size(); ++k)
      cache_->dist[k] = mask_[k] ? float((std::sqrt(double(sq[k])) - 0.5) * eta) : 0.0f;
  });
  return cache_->dist;
}

Region Region::intersect(const Region& o) const {
  if (empty() || o.empty()) return Region(grid_);
  Box b = Box::overlap(box_, o.box_);
  if (b.volume() == 0) return Region(grid_);
  std::vector<uint8_t> m(b.volume(), 0);
  for (long long k = 0; k < b.volume(); ++k) {
    Cell c = b.cell(k);
    m[k] = mask_[box_.local(c)] && o.mask_[o.box_.local(c)];
  }
  return from_mask(grid_, b, std::move(m));
}

Region Region::subtract(const Region& o) const {
  if (empty() || o.empty()) return *this;
  std::vector<uint8_t> m = mask_;
  Box b = Box::overlap(box_, o.box_);
  for (long long k = 0; k < b.volume(); ++k) {
    Cell c = b.cell(k);
    if (o.mask_[o.box_.local(c)]) m[box_.local(c)] = 0;
  }
  return from_mask(grid_, box_, std::move(m));
}

Region Region::unite(const Region& o) const {
  if (o.empty()) return *this;
  if (empty()) return o;
  Box b = Box::hull(box_, o.box_);
  std::vector<uint8_t> m(b.volume(), 0);
  for (long long k = 0; k < box_.volume(); ++k)
    if (mask_[k]) m[b.local(box_.cell(k))] = 1;
  for (long long k = 0; k < o.box_.volume(); ++k)
    if (o.mask_[k]) m[b.local(o.box_.cell(k))] = 1;
  return from_mask(grid_, b, std::move(m));
}

bool Region::subset_of(const Region& o) const {
  if (empty()) return true;
  for (long long k = 0; k < box_.volume(); ++k)
    if (mask_[k] && !o.contains(box_.cell(k))) return false;
  return true;
}

bool Region::operator==(const Region& o) const {
  if (count_ != o.count_) return false;
  if (count_ == 0) return true;
  return box_ == o.box_ && mask_ == o.mask_;
}

std::size_t Region::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t x) {
    h ^= x;
    h *= 1099511628211ULL;
  };
  for (int i = 0; i < kMaxDim; ++i) {
    mix(std::uint64_t(box_.lo[i]) + 0x9e37);
    mix(std::uint64_t(box_.size[i]));
  }
  const long long v = box_.volume();
  std::uint64_t word = 0;
  int bits = 0;
  for (long long k = 0; k < v; ++k) {
    word = (word << 1) | mask_[k];
    if (++bits == 64) {
      mix(word);
      word = 0;
      bits = 0;
    }
  }
  mix(word);
  return std::size_t(h);
}

Runs Region::runs() const {
  Runs out;
  if (empty()) return out;
  const long long v = box_.volume();
  for (long long k = 0; k < v; ++k) {
    if (!mask_[k]) continue;
    long long g = grid_->linear(box_.cell(k));
    if (!out.empty() && out.back().first + out.back().second == g)
      ++out.back().second;
    else
      out.push_back({g, 1});
  }
  return out;
}

long long Region::boundary_cell_count() const {
  if (empty()) return 0;
  const int d = grid_->d;
  long long cnt = 0;
  for_each([&](const Cell& c, long long) {
    for (int i = 0; i < d; ++i)
      for (int s : {-1, 1}) {
        Cell q = c;
        q[i] += s;
        if (!contains(q)) {
          ++cnt;
          return;
        }
      }
  });
  return cnt;
}

std::vector<Cell> Region::cells() const {
  std::vector<Cell> out;
  out.reserve(count_);
  for_each([&](const Cell& c, long long) { out.push_back(c); });
  return out;
}

double AmbientSpace::boundary_ratio_sup(const std::vector<double>& eps_grid) const {
  double s = 0;
  for (double e : eps_grid)
    if (e > 0) s = std::max(s, eps_boundary_measure(space, e) / e);
  return s;
}

double measure(const Region& r) { return r.measure(); }

Region eps_boundary(const Region& r, double eps) {
  if (r.empty()) return r;
  const auto& dst = r.distance();
  std::vector<uint8_t> m(r.mask().size(), 0);
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = r.mask()[k] && dst[k] < eps;
  return Region::from_mask(r.grid(), r.box(), std::move(m));
}

double eps_boundary_measure(const Region& r, double eps) {
  if (r.empty()) return 0;
  const auto& dst = r.distance();
  long long c = 0;
  for (std::size_t k = 0; k < dst.size(); ++k) c += (r.mask()[k] && dst[k] < eps);
  return c * r.grid()->cell_volume;
}

namespace {

struct P2 {
  double x, y;
};

double cross(const P2& o, const P2& a, const P2& b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

std::vector<P2> convex_hull(std::vector<P2> p) {
  std::sort(p.begin(), p.end(), [](const P2& a, const P2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  p.erase(std::unique(p.begin(), p.end(), [](const P2& a, const P2& b) { return a.x == b.x && a.y == b.y; }), p.end());
  if (p.size() < 3) return p;
  std::vector<P2> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i - 1]) <= 0) --k;
    h[k++] = p[i - 1];
  }
  h.resize(k - 1);
  return h;
}

double d2(const P2& a, const P2& b) { return (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y); }

// Rotating calipers over a convex polygon in counter-clockwise order.
double hull_diameter2(const std::vector<P2>& h) {
  const std::size_t n = h.size();
  if (n == 1) return 0;
  if (n == 2) return d2(h[0], h[1]);
  double best = 0;
  std::size_t j = 1;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t ni = (i + 1) % n;
    while (std::abs(cross(h[i], h[ni], h[(j + 1) % n])) > std::abs(cross(h[i], h[ni], h[j]))) j = (j + 1) % n;
    best = std::max({best, d2(h[i], h[j]), d2(h[ni], h[j])});
  }
  return best;
}

}  // namespace

double diameter(const Region& r) {
  if (r.empty()) throw Error(ErrorClass::builder, "empty-region");
  const auto& g = *r.grid();
  const double eta = g.eta;
  const Box& b = r.box();
  if (g.d == 1) {
    return (b.size[0] - 1) * eta + eta;
  }
  if (g.d == 2) {
    std::vector<P2> pts;
    for (int y = 0; y < b.size[1]; ++y) {
      int first = -1, last = -1;
      for (int x = 0; x < b.size[0]; ++x)
        if (r.mask()[x + (long long)b.size[0] * y]) {
          if (first < 0) first = x;
          last = x;
        }
      if (first < 0) continue;
      pts.push_back({double(first), double(y)});
      pts.push_back({double(last), double(y)});
    }
    double dm = std::sqrt(hull_diameter2(convex_hull(pts)));
    return dm * eta + eta * std::sqrt(2.0);
  }
  // exhaustive over row extremes
  std::vector<Vec> pts;
  for (int z = 0; z < b.size[2]; ++z)
    for (int y = 0; y < b.size[1]; ++y) {
      int first = -1, last = -1;
      for (int x = 0; x < b.size[0]; ++x)
        if (r.mask()[x + (long long)b.size[0] * (y + (long long)b.size[1] * z)]) {
          if (first < 0) first = x;
          last = x;
        }
      if (first < 0) continue;
      pts.push_back({double(first), double(y), double(z)});
      pts.push_back({double(last), double(y), double(z)});
    }
  double best = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, dist(pts[i], pts[j], 3));
  return best * eta + eta * std::sqrt(double(g.d));
}

namespace {

Regularity deepest(const Region& r, const std::vector<float>& dst, double delta) {
  Regularity out;
  double best = -1;
  Cell bc{0, 0, 0};
  r.for_each([&](const Cell& c, long long k) {
    double v = dst[k];
    bool better = v > best;
    if (!better && v == best) {
      for (int i = 0; i < kMaxDim; ++i) {
        if (c[i] != bc[i]) {
          better = c[i] < bc[i];
          break;
        }
      }
    }
    if (better) {
      best = v;
      bc = c;
    }
  });
  out.depth = best;
  out.witness = bc;
  out.regular = best >= delta;
  return out;
}

}  // namespace

Regularity is_delta_regular(const Region& r, double delta) {
  if (r.empty()) return {};
  return deepest(r, r.distance(), delta);
}

std::vector<float> distance_in_X(const Region& r, double reach) {
  if (r.empty()) return {};
  const Grid& g = *r.grid();
  const Box& b = r.box();
  Box e = b;
  const int pad = int(std::ceil(reach / g.eta)) + 1;
  bool touches = false;
  for (int i = 0; i < g.d; ++i) {
    int lo = 0, hi = 0;
    if (b.lo[i] == 0) lo = std::min(pad, g.n[i]);
    if (b.lo[i] + b.size[i] == g.n[i]) hi = std::min(pad, g.n[i]);
    touches = touches || lo || hi;
    e.lo[i] -= lo;
    e.size[i] += lo + hi;
  }
  if (!touches) return r.distance();
  std::vector<uint8_t> m(e.volume(), 0);
  for (long long k = 0; k < e.volume(); ++k) {
    Cell c = e.cell(k);
    for (int i = 0; i < g.d; ++i) {
      if (c[i] < 0) c[i] = -1 - c[i];
      else if (c[i] >= g.n[i]) c[i] = 2 * g.n[i] - 1 - c[i];
    }
    m[k] = r.contains(c);
  }
  std::vector<float> sq;
  edt_squared(e, m, g.d, sq);
  std::vector<float> out(b.volume(), 0.0f);
  r.for_each([&](const Cell& c, long long k) { out[k] = float((std::sqrt(double(sq[e.local(c)])) - 0.5) * g.eta); });
  return out;
}

Regularity is_delta_regular_in_X(const Region& r, double delta) {
  if (r.empty()) return {};
  return deepest(r, distance_in_X(r, delta), delta);
}

double raster_slack(const Region& r) {
  if (r.empty()) return 0;
  return kGeoSlack * r.boundary_cell_count() * r.grid()->cell_volume;
}

Hyperplane Hyperplane::make(const Vec& normal, double offset, int d) {
  double n = 0;
  for (int i = 0; i < d; ++i) n += normal[i] * normal[i];
  n = std::sqrt(n);
  if (!(n > 0)) throw Error(ErrorClass::config, "degenerate-hyperplane", "zero normal");
  Hyperplane h;
  h.normal = {0, 0, 0};
  for (int i = 0; i < d; ++i) h.normal[i] = normal[i] / n;
  h.offset = offset / n;
  return h;
}

double Hyperplane::signed_distance(const Vec& p, int d) const {
  double s = -offset;
  for (int i = 0; i < d; ++i) s += normal[i] * p[i];
  return s;
}

BtResult bt_check(const Region& I, const Hyperplane& E, double eps, double xi) {
  if (xi < 0 || xi > 1 || eps < 0) throw Error(ErrorClass::config, "bt-range", "need 0<=xi<=1, eps>=0");
  double nn = 0;
  for (double v : E.normal) nn += v * v;
  if (!(nn > 0)) throw Error(ErrorClass::config, "degenerate-hyperplane", "zero normal");
  BtResult out;
  if (I.empty()) return out;
  const auto& g = *I.grid();
  const auto& dst = I.distance();
  long long left = 0, right = 0;
  I.for_each([&](const Cell& c, long long k) {
    double s = E.signed_distance(g.center(c), g.d);
    bool near_bd = dst[k] <= eps;
    if (s < 0) {
      if (-s <= xi * eps && !near_bd) ++left;
    } else if (near_bd) {
      ++right;
    }
  });
  out.lhs = left * g.cell_volume;
  out.rhs = xi * right * g.cell_volume;
  out.slack = raster_slack(I);
  return out;
}

std::vector<double> dyadic_grid(double eps_max, double eps_min, int kmax) {
  std::vector<double> out;
  double e = eps_max;
  for (int k = 0; k <= kmax && e >= eps_min; ++k, e *= 0.5) out.push_back(e);
  return out;
}

}  // namespace inducer
