#include <algorithm>
#include <cmath>
#include <map>

#include "inducer/error.hpp"
#include "inducer/scheme.hpp"

namespace inducer {

std::vector<std::pair<int, double>> tail_table(const std::vector<StopGroup>& groups, double base_measure) {
  std::map<int, double> by_tau;
  for (const auto& g : groups) by_tau[g.tau] += g.mass;
  std::vector<std::pair<int, double>> t;
  const int nmax = by_tau.empty() ? 0 : by_tau.rbegin()->first;
  double left = base_measure;
  for (int n = 0; n <= nmax; ++n) {
    auto it = by_tau.find(n);
    if (it != by_tau.end()) left -= it->second;
    t.push_back({n, std::max(0.0, left)});
  }
  return t;
}

TailFit fit_tail(const std::vector<std::pair<int, double>>& tail, double floor) {
  std::vector<double> xs, ys;
  // tau >= 1, so Leb(tau > 0) is the base measure rather than a tail sample.
  for (const auto& [n, v] : tail)
    if (n >= 1 && v > floor && v > 0) {
      xs.push_back(n);
      ys.push_back(std::log(v));
    }
  if (xs.size() < 5)
    throw Error(ErrorClass::builder, "insufficient-tail",
                std::to_string(xs.size()) + " points above " + std::to_string(floor));
  const double m = double(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  TailFit f;
  const double b = sxy / sxx;
  f.kappa = std::exp(b);
  f.constant = std::exp(my - b * mx);
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  f.points = int(xs.size());
  f.n_min = int(xs.front());
  f.n_max = int(xs.back());
  return f;
}

}  // namespace inducer
