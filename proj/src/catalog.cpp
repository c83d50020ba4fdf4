#include "inducer/catalog.hpp"

#include <cmath>

namespace inducer {

namespace {

bool in_half_open(const Vec& x, const Vec& lo, const Vec& hi, int d) {
  for (int i = 0; i < d; ++i)
    if (!(x[i] >= lo[i] && x[i] < hi[i])) return false;
  return true;
}

AmbientSpace unit_space(int d, double eta) {
  Vec lo{0, 0, 0}, hi{0, 0, 0};
  for (int i = 0; i < d; ++i) hi[i] = 1;
  AmbientSpace a;
  a.grid = Grid::make(d, lo, hi, eta);
  a.space = Region::full(a.grid);
  return a;
}

}  // namespace

Branch make_affine_branch(std::string id, const Affine& fwd, int d, const Vec& lo, const Vec& hi, const Vec& amb_lo,
                          const Vec& amb_hi, std::function<bool(const Vec&)> extra) {
  Branch b;
  b.id = std::move(id);
  b.affine = fwd;
  Affine inv = fwd.inverse(d);
  double J = 1 / std::abs(fwd.det(d));
  auto dom = [lo, hi, d, extra](const Vec& x) { return in_half_open(x, lo, hi, d) && (!extra || extra(x)); };
  b.in_domain = dom;
  b.forward = [fwd, d](const Vec& x) { return fwd.apply(x, d); };
  b.pull = [inv, dom, J, d, amb_lo, amb_hi](const Vec& y, Vec& x, double& jac) {
    if (!in_half_open(y, amb_lo, amb_hi, d)) return false;
    x = inv.apply(y, d);
    if (!dom(x)) return false;
    jac = J;
    return true;
  };
  // Operator norm of the inverse linear part.
  double s = 0;
  if (d == 1) {
    s = std::abs(inv.A[0]);
  } else {
    // Largest singular value via power iteration on A^T A.
    Vec v{1, 0.7, 0.3};
    for (int it = 0; it < 200; ++it) {
      Vec w{0, 0, 0}, u{0, 0, 0};
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) w[i] += inv.A[3 * i + j] * v[j];
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) u[i] += inv.A[3 * j + i] * w[j];
      double n = 0;
      for (int i = 0; i < d; ++i) n += u[i] * u[i];
      n = std::sqrt(n);
      for (int i = 0; i < d; ++i) v[i] = u[i] / n;
      s = std::sqrt(n);
    }
  }
  b.lambda = s;
  return b;
}

MapPtr make_m0(double eta) {
  auto m = std::make_shared<PiecewiseMap>();
  m->name = "m0";
  m->ambient = unit_space(1, eta);
  Vec alo{0, 0, 0}, ahi{1, 0, 0};
  for (int k = 0; k < 2; ++k) {
    Affine a;
    a.A[0] = 2;
    a.c[0] = -k;
    m->branches.push_back(make_affine_branch(std::to_string(k), a, 1, {0.5 * k, 0, 0}, {0.5 * (k + 1), 0, 0}, alo, ahi));
  }
  m->branch_at = [](const Vec& x) { return (x[0] < 0 || x[0] >= 1) ? -1 : (x[0] < 0.5 ? 0 : 1); };
  m->k.Lambda = 0.5;
  m->k.alpha = 1;
  m->k.Dtilde = 0;
  m->k.n0 = 2;
  m->k.sigma = 1.1;
  m->k.Cbar = 1.1;
  m->k.eps_exp = 1;
  m->k.eps_cplx = 0.2;
  m->k.a0 = 0.1;
  m->k.P = 64;
  return m;
}

MapPtr make_m1(double eta) {
  auto m = std::make_shared<PiecewiseMap>();
  m->name = "m1";
  m->ambient = unit_space(2, eta);
  Vec alo{0, 0, 0}, ahi{1, 1, 0};
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) {
      Affine a;
      a.A = {0, 0, 0, 0, 2, 0, 0, 0, 1};
      if (j == 0) {
        a.A[0] = 2;
        a.c[0] = -i;
      } else {
        a.A[0] = -2;
        a.c[0] = i + 1;
      }
      a.c[1] = -j;
      m->branches.push_back(make_affine_branch(std::to_string(i) + std::to_string(j), a, 2, {0.5 * i, 0.5 * j, 0},
                                               {0.5 * (i + 1), 0.5 * (j + 1), 0}, alo, ahi));
    }
  m->branch_at = [](const Vec& x) {
    if (x[0] < 0 || x[0] >= 1 || x[1] < 0 || x[1] >= 1) return -1;
    return int(x[0] >= 0.5) + 2 * int(x[1] >= 0.5);
  };
  m->k.Lambda = 0.5;
  m->k.alpha = 1;
  m->k.Dtilde = 0;
  m->k.n0 = 2;
  m->k.sigma = 1.5;
  m->k.Cbar = 1.5;
  m->k.eps_exp = 1;
  m->k.eps_cplx = 0.24;
  m->k.a0 = 0.1;
  m->k.P = 200;
  return m;
}

namespace {

const double kTheta = std::sqrt(2.0) - 1;

int m2_strip(const Vec& p) {
  double u = (p[1] - kTheta * p[0] + kTheta) / (1 + kTheta);
  return u < 0.5 ? 0 : 1;
}

const Vec kShift[2] = {{0, 0, 0}, {0.5, 0.25, 0}};

}  // namespace

MapPtr make_m2(double eta) {
  auto m = std::make_shared<PiecewiseMap>();
  m->name = "m2";
  m->ambient = unit_space(2, eta);
  Vec alo{0, 0, 0}, ahi{1, 1, 0};
  // Branch (k, jx, jy): strip k, floor(3 p + v_k) = (jx, jy).
  std::vector<int> index(2 * 16, -1);
  for (int k = 0; k < 2; ++k)
    for (int jy = 0; jy < 4; ++jy)
      for (int jx = 0; jx < 4; ++jx) {
        Vec v = kShift[k];
        // Domain slab in x: j <= 3x + v < j+1, intersected with [0,1).
        Vec lo{std::max(0.0, (jx - v[0]) / 3), std::max(0.0, (jy - v[1]) / 3), 0};
        Vec hi{std::min(1.0, (jx + 1 - v[0]) / 3), std::min(1.0, (jy + 1 - v[1]) / 3), 0};
        if (!(lo[0] < hi[0] && lo[1] < hi[1])) continue;
        Affine a;
        a.A = {3, 0, 0, 0, 3, 0, 0, 0, 1};
        a.c = {v[0] - jx, v[1] - jy, 0};
        auto strip = [k](const Vec& p) { return m2_strip(p) == k; };
        // Strip k meets the slab iff some corner lies on its side of the cut line.
        bool any = false;
        for (int c = 0; c < 4; ++c) {
          double px = (c & 1) ? hi[0] : lo[0], py = (c & 2) ? hi[1] : lo[1];
          double g = py - kTheta * px - (1 - kTheta) / 2;
          any = any || (k == 0 ? g < 0 : g > 0);
        }
        if (!any) continue;
        index[k * 16 + jy * 4 + jx] = int(m->branches.size());
        m->branches.push_back(make_affine_branch(std::to_string(k) + ":" + std::to_string(jx) + std::to_string(jy), a,
                                                 2, lo, hi, alo, ahi, strip));
      }
  m->branch_at = [index](const Vec& p) {
    if (p[0] < 0 || p[0] >= 1 || p[1] < 0 || p[1] >= 1) return -1;
    int k = m2_strip(p);
    int jx = int(std::floor(3 * p[0] + kShift[k][0]));
    int jy = int(std::floor(3 * p[1] + kShift[k][1]));
    return index[k * 16 + jy * 4 + jx];
  };
  m->k.Lambda = 1.0 / 3;
  m->k.alpha = 1;
  m->k.Dtilde = 0;
  m->k.n0 = 2;
  m->k.sigma = 2;
  m->k.Cbar = 1.5;
  m->k.eps_exp = 1;
  m->k.eps_cplx = 0.1;
  m->k.a0 = 0.1;
  m->k.P = 400;
  return m;
}

MapPtr make_m3(double eta) {
  auto m = std::make_shared<PiecewiseMap>();
  m->name = "m3";
  m->ambient = unit_space(1, eta);
  const double b = kM3Bend;
  auto f = [b](double u) { return u + b * u * (1 - u); };
  auto fp = [b](double u) { return 1 + b - 2 * b * u; };
  auto finv = [b](double v) { return ((1 + b) - std::sqrt((1 + b) * (1 + b) - 4 * b * v)) / (2 * b); };
  for (int k = 0; k < 2; ++k) {
    Branch br;
    br.id = std::to_string(k);
    double lo = 0.5 * k, hi = 0.5 * (k + 1);
    br.in_domain = [lo, hi](const Vec& x) { return x[0] >= lo && x[0] < hi; };
    br.forward = [f, k](const Vec& x) { return Vec{f(2 * x[0] - k), 0, 0}; };
    br.pull = [finv, fp, k](const Vec& y, Vec& x, double& J) {
      if (!(y[0] >= 0 && y[0] < 1)) return false;
      double u = finv(y[0]);
      x = {(u + k) / 2, 0, 0};
      J = 1 / (2 * fp(u));
      return true;
    };
    br.lambda = 1 / (2 * (1 - b));
    m->branches.push_back(br);
  }
  m->branch_at = [](const Vec& x) { return (x[0] < 0 || x[0] >= 1) ? -1 : (x[0] < 0.5 ? 0 : 1); };
  m->k.Lambda = 1 / (2 * (1 - b));
  m->k.alpha = 1;
  m->k.Dtilde = 2 * b / ((1 - b) * (1 - b));
  m->k.n0 = 2;
  m->k.sigma = 1.1;
  m->k.Cbar = 1.1;
  m->k.eps_exp = 1;
  m->k.eps_cplx = 0.15;
  m->k.a0 = 1.5;
  m->k.P = 96;
  return m;
}

MapPtr make_catalog(const std::string& id, double eta) {
  MapPtr m;
  if (id == "m0") m = make_m0(eta);
  else if (id == "m1") m = make_m1(eta);
  else if (id == "m2") m = make_m2(eta);
  else if (id == "m3") m = make_m3(eta);
  else throw Error(ErrorClass::config, "unknown-map", id);
  m->k.validate();
  return m;
}

std::vector<std::string> catalog_ids() { return {"m0", "m1", "m2", "m3"}; }

double default_eta(const std::string& id) {
  if (id == "m0" || id == "m3") return std::ldexp(1.0, -14);
  if (id == "m1") return std::ldexp(1.0, -8);
  if (id == "m2") return std::ldexp(1.0, -10);
  throw Error(ErrorClass::config, "unknown-map", id);
}

}  // namespace inducer
