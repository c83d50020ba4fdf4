#include <algorithm>
#include <cmath>
#include <numeric>

#include "inducer/inducing.hpp"

namespace inducer {

namespace {

std::vector<int> left_itinerary(int n) {
  std::vector<int> it(n, 0);
  it.back() = 1;
  return it;
}

void check_times(const std::vector<int>& times) {
  if (times.size() < 2) throw Error(ErrorClass::config, "bad-times", "need at least two times");
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (times[j] < 1) throw Error(ErrorClass::config, "bad-times", "times must be positive");
    if (j > 0 && times[j] <= times[j - 1]) throw Error(ErrorClass::config, "bad-times", "times must increase");
  }
}

}  // namespace

RecurrenceSpec left_end_spec(const PiecewiseMap& map, const Region& Z, std::vector<int> times) {
  if (map.d() != 1) throw Error(ErrorClass::config, "spec-needs-1d");
  if (map.branches.size() < 2) throw Error(ErrorClass::config, "spec-needs-two-branches");
  check_times(times);
  RecurrenceSpec s;
  s.Z = Z;
  s.times = std::move(times);
  for (int n : s.times) s.itineraries.push_back(left_itinerary(n));
  return s;
}

RecurrenceSpec left_end_spec(const PiecewiseMap& map, int cells, std::vector<int> times) {
  const GridPtr& g = map.grid();
  if (map.d() != 1) throw Error(ErrorClass::config, "spec-needs-1d");
  if (cells < 1 || cells > g->n[0]) throw Error(ErrorClass::config, "bad-Z");
  Box b;
  b.size = {cells, 1, 1};
  Region Z = Region::from_mask(g, b, std::vector<uint8_t>(cells, 1));
  if (times.empty()) {
    // The cylinder 0^{n-1}1 lies inside Z = (0, 2^k eta) once n >= L - k + 1.
    const int L = int(std::lround(-std::log2(g->eta)));
    const int k = int(std::floor(std::log2(double(cells))));
    times = {L - k + 1, L - k + 2};
  }
  return left_end_spec(map, Z, std::move(times));
}

CoverReport verify_covering(const PiecewiseMap& map, const Region& Z, const std::vector<std::vector<int>>& itineraries,
                            const std::vector<std::vector<int>>& blocks) {
  CoverReport r;
  const GridPtr& g = map.grid();
  const std::vector<Cell> cells = Z.cells();
  for (std::size_t i = 0; i < itineraries.size(); ++i) {
    const auto& it = itineraries[i];
    for (int b : it)
      if (b < 0 || b >= int(map.branches.size()))
        throw Error(ErrorClass::config, "bad-itinerary", "branch " + std::to_string(b));
    // Positions (from the start) where the orbit must be back in Z.
    std::vector<int> marks{0};
    if (i < blocks.size()) {
      int acc = 0;
      for (int len : blocks[i]) marks.push_back(acc += len);
      if (acc != int(it.size())) throw Error(ErrorClass::config, "bad-blocks");
    } else {
      marks.push_back(int(it.size()));
    }
    long long failed = 0;
#pragma omp parallel for reduction(+ : failed)
    for (std::size_t c = 0; c < cells.size(); ++c) {
      Vec y = g->center(cells[c]);
      bool ok = true;
      std::size_t m = marks.size() - 1;
      for (int t = int(it.size()) - 1; t >= 0 && ok; --t) {
        Vec x;
        double J = 0;
        if (!map.branches[it[t]].pull(y, x, J)) ok = false;
        y = x;
        if (ok && m > 0 && marks[m - 1] == t) {
          --m;
          if (!Z.contains_point(y)) ok = false;
        }
      }
      if (!ok) ++failed;
    }
    const double deficit = failed * g->cell_volume;
    r.deficit = std::max(r.deficit, deficit);
    if (deficit > 1e-3 * Z.measure()) {
      r.covered = false;
      if (r.detail.empty()) r.detail = "itinerary " + std::to_string(i) + " misses " + std::to_string(failed) + " cells";
    }
  }
  for (std::size_t i = 0; i < itineraries.size(); ++i)
    for (std::size_t j = 0; j < itineraries.size(); ++j) {
      if (i == j) continue;
      const auto& a = itineraries[i];
      const auto& b = itineraries[j];
      if (a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin())) {
        r.disjoint = false;
        if (r.detail.empty()) r.detail = "itinerary " + std::to_string(i) + " is a prefix of " + std::to_string(j);
      }
    }
  return r;
}

AdjustedTimes adjust_times(const std::vector<int>& nt, double C1, double C2) {
  check_times(nt);
  const int K = int(nt.size());
  AdjustedTimes a;
  a.m.assign(K - 1, 0);
  a.m[0] = C1 > 0 ? (long long)std::ceil(C1 / nt[K - 1] - 1e-12) : 0;
  const long long step = C2 > 0 ? (long long)std::ceil(C2 / nt[0] - 1e-12) : 0;
  for (int j = 1; j < K - 1; ++j) a.m[j] = a.m[j - 1] + step;
  a.times.resize(K);
  long long sum = 0;
  for (int j = 0; j < K - 1; ++j) {
    long long n = nt[j] + a.m[j] * nt[K - 1];
    if (n > (1 << 30)) throw Error(ErrorClass::config, "times-overflow");
    a.times[j] = int(n);
    sum += n;
  }
  // The last gap is not controlled by the m's; extend n_K by whole multiples of the other times.
  const double need = std::max(C2, 1.0);
  for (a.L = a.m[0] > 0 ? 1 : 0;; ++a.L) {
    long long nK = nt[K - 1] + a.L * sum;
    if (nK > (1 << 30)) throw Error(ErrorClass::config, "times-overflow");
    if (nK - a.times[K - 2] >= need) {
      a.times[K - 1] = int(nK);
      break;
    }
  }
  return a;
}

AdjustedTimes adjust_times(const RecurrenceSpec& spec, double C1, double C2) {
  AdjustedTimes a = adjust_times(spec.times, C1, C2);
  if (spec.itineraries.empty()) return a;
  const int K = int(spec.times.size());
  if (int(spec.itineraries.size()) != K) throw Error(ErrorClass::config, "bad-itineraries");
  for (int j = 0; j < K; ++j)
    if (int(spec.itineraries[j].size()) != spec.times[j]) throw Error(ErrorClass::config, "bad-itineraries");
  const auto& last = spec.itineraries[K - 1];
  a.itineraries.resize(K);
  a.blocks.resize(K);
  for (int j = 0; j < K - 1; ++j) {
    for (long long r = 0; r < a.m[j]; ++r) {
      a.itineraries[j].insert(a.itineraries[j].end(), last.begin(), last.end());
      a.blocks[j].push_back(spec.times[K - 1]);
    }
    a.itineraries[j].insert(a.itineraries[j].end(), spec.itineraries[j].begin(), spec.itineraries[j].end());
    a.blocks[j].push_back(spec.times[j]);
  }
  a.itineraries[K - 1] = last;
  a.blocks[K - 1] = {spec.times[K - 1]};
  for (int r = 0; r < a.L; ++r)
    for (int j = 0; j < K - 1; ++j) {
      a.itineraries[K - 1].insert(a.itineraries[K - 1].end(), a.itineraries[j].begin(), a.itineraries[j].end());
      a.blocks[K - 1].insert(a.blocks[K - 1].end(), a.blocks[j].begin(), a.blocks[j].end());
    }
  return a;
}

}  // namespace inducer
