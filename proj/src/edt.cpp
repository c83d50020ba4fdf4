#include <algorithm>
#include <cmath>
#include <limits>

#include "inducer/geometry.hpp"

namespace inducer {

namespace {

constexpr double kFar = 1e30;

// Lower envelope of parabolas (Felzenszwalb-Huttenlocher), in place on one line.
void envelope(const double* f, int n, double* out, int* v, double* z) {
  const double inf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  auto cross = [f](int q, int p) { return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p)); };
  for (int q = 1; q < n; ++q) {
    double s = cross(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = cross(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    double dq = q - v[k];
    out[q] = dq * dq + f[v[k]];
  }
}

struct Padded {
  Cell size{1, 1, 1};
  std::vector<double> g;
  long long at(int x, int y, int z) const { return x + (long long)size[0] * (y + (long long)size[1] * z); }
};

Padded pad(const Box& box, const std::vector<uint8_t>& mask, int d) {
  Padded p;
  for (int i = 0; i < d; ++i) p.size[i] = box.size[i] + 2;
  p.g.assign((long long)p.size[0] * p.size[1] * p.size[2], 0.0);
  const int o = 1;
  for (int z = 0; z < box.size[2]; ++z)
    for (int y = 0; y < box.size[1]; ++y)
      for (int x = 0; x < box.size[0]; ++x) {
        long long k = x + (long long)box.size[0] * (y + (long long)box.size[1] * z);
        if (mask[k]) p.g[p.at(x + o, d > 1 ? y + o : y, d > 2 ? z + o : z)] = kFar;
      }
  return p;
}

void unpad(const Padded& p, const Box& box, int d, std::vector<float>& out) {
  out.assign(box.volume(), 0.0f);
  for (int z = 0; z < box.size[2]; ++z)
    for (int y = 0; y < box.size[1]; ++y)
      for (int x = 0; x < box.size[0]; ++x) {
        long long k = x + (long long)box.size[0] * (y + (long long)box.size[1] * z);
        out[k] = float(p.g[p.at(x + 1, d > 1 ? y + 1 : y, d > 2 ? z + 1 : z)]);
      }
}

// One separable pass along `axis`; lines indexed by the other two coordinates.
void pass(Padded& p, int axis, bool parallel) {
  const int n = p.size[axis];
  const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
  const long long lines = (long long)p.size[a1] * p.size[a2];
  long long stride = 1;
  for (int i = 0; i < axis; ++i) stride *= p.size[i];
  auto run = [&](long long l, std::vector<double>& f, std::vector<double>& o, std::vector<int>& v, std::vector<double>& z) {
    Cell c{0, 0, 0};
    c[a1] = int(l % p.size[a1]);
    c[a2] = int(l / p.size[a1]);
    long long base = p.at(c[0], c[1], c[2]);
    for (int q = 0; q < n; ++q) f[q] = p.g[base + q * stride];
    envelope(f.data(), n, o.data(), v.data(), z.data());
    for (int q = 0; q < n; ++q) p.g[base + q * stride] = o[q];
  };
  if (parallel) {
#pragma omp parallel
    {
      std::vector<double> f(n), o(n), z(n + 1);
      std::vector<int> v(n);
#pragma omp for schedule(static)
      for (long long l = 0; l < lines; ++l) run(l, f, o, v, z);
    }
  } else {
    std::vector<double> f(n), o(n), z(n + 1);
    std::vector<int> v(n);
    for (long long l = 0; l < lines; ++l) run(l, f, o, v, z);
  }
}

void edt_impl(const Box& box, const std::vector<uint8_t>& mask, int d, std::vector<float>& out, bool parallel) {
  if (box.volume() == 0) {
    out.clear();
    return;
  }
  Padded p = pad(box, mask, d);
  for (int a = 0; a < d; ++a) pass(p, a, parallel);
  unpad(p, box, d, out);
}

}  // namespace

void edt_squared(const Box& box, const std::vector<uint8_t>& mask, int d, std::vector<float>& out) {
  edt_impl(box, mask, d, out, box.volume() > 4096);
}

void edt_squared_serial(const Box& box, const std::vector<uint8_t>& mask, int d, std::vector<float>& out) {
  edt_impl(box, mask, d, out, false);
}

void edt_squared_bruteforce(const Box& box, const std::vector<uint8_t>& mask, int d, std::vector<float>& out) {
  // Out-cells: everything not in the mask, including the one-cell frame around the box.
  std::vector<Cell> outside;
  Cell lo{0, 0, 0}, hi{1, 1, 1};
  for (int i = 0; i < d; ++i) {
    lo[i] = -1;
    hi[i] = box.size[i] + 1;
  }
  for (int z = lo[2]; z < hi[2]; ++z)
    for (int y = lo[1]; y < hi[1]; ++y)
      for (int x = lo[0]; x < hi[0]; ++x) {
        bool inside = x >= 0 && y >= 0 && z >= 0 && x < box.size[0] && y < box.size[1] && z < box.size[2];
        if (!inside || !mask[x + (long long)box.size[0] * (y + (long long)box.size[1] * z)]) outside.push_back({x, y, z});
      }
  out.assign(box.volume(), 0.0f);
  for (long long k = 0; k < box.volume(); ++k) {
    if (!mask[k]) continue;
    Cell c{int(k % box.size[0]), int((k / box.size[0]) % box.size[1]), int(k / ((long long)box.size[0] * box.size[1]))};
    double best = kFar;
    for (const auto& o : outside) {
      double s = 0;
      for (int i = 0; i < 3; ++i) s += double(c[i] - o[i]) * (c[i] - o[i]);
      best = std::min(best, s);
    }
    out[k] = float(best);
  }
}

}  // namespace inducer
