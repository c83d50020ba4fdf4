#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "inducer/inducing.hpp"

namespace inducer {

namespace {

struct DagIndex {
  std::vector<std::vector<std::pair<int, int>>> seed_children;  // (node, branch) per seed element
  std::vector<std::vector<std::pair<int, int>>> children;
  std::vector<int> rem_child;
  std::vector<std::vector<int>> groups_at;

  DagIndex(const InducingScheme& s, int N)
      : seed_children(N), children(s.nodes.size()), rem_child(s.nodes.size(), -1), groups_at(s.nodes.size()) {
    for (std::size_t v = 0; v < s.nodes.size(); ++v)
      for (const auto& e : s.nodes[v].parents) {
        if (e.branch < 0) {
          if (e.parent >= 0) rem_child[e.parent] = int(v);
          continue;
        }
        if (e.parent < 0) seed_children[-1 - e.parent].push_back({int(v), e.branch});
        else children[e.parent].push_back({int(v), e.branch});
      }
    for (std::size_t i = 0; i < s.groups.size(); ++i) groups_at[s.groups[i].node].push_back(int(i));
  }
};

}  // namespace

void upgrade_full_branch(InducingScheme& s, const PiecewiseMap& map, const PartitionR& part, const UpgradeOptions& opt) {
  const Grid& g = *map.grid();
  const int N = part.N();
  if (s.groups.empty()) throw Error(ErrorClass::builder, "empty-scheme");
  UpgradeRecord& u = s.upgrade;
  const double tau1 = u.tau1_mass;
  u = UpgradeRecord{};
  u.tau1_mass = tau1;
  // Minimal image: element 0 when Z was prescribed, else the smallest image (ties by index).
  int z = opt.z;
  if (z < 0 && part.z >= 0) z = part.z;
  if (z < 0) {
    double best = 1e300;
    for (const auto& gr : s.groups) {
      const double m = part.elements[gr.element].measure();
      if (m < best || (m == best && gr.element < z)) {
        best = m;
        z = gr.element;
      }
    }
  }
  if (z < 0 || z >= N) throw Error(ErrorClass::config, "bad-Z-index");
  u.z = z;
  const DagIndex idx(s, N);
  const long long cap = opt.depth_cap > 0 ? opt.depth_cap : std::max<long long>(100000, 50LL * N);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> U(0, 1);
  auto uniform_in = [&](int e) {
    const Region& R = part.elements[e];
    const Box& b = R.box();
    for (;;) {
      Cell c = b.lo;
      for (int i = 0; i < g.d; ++i) c[i] += int(U(rng) * b.size[i]) % b.size[i];
      if (!R.contains(c)) continue;
      Vec p = g.center(c);
      for (int i = 0; i < g.d; ++i) p[i] += (U(rng) - 0.5) * g.eta;
      return p;
    }
  };
  std::vector<Cell> offsets;
  for (int a = -1; a <= 1; ++a)
    for (int b = -(g.d >= 2); b <= (g.d >= 2); ++b)
      for (int c = -(g.d >= 3); c <= (g.d >= 3); ++c)
        if (a || b || c) offsets.push_back(Cell{a, b, c});
  auto clamp_cell = [&](const Vec& p) {
    Cell c{0, 0, 0};
    for (int i = 0; i < g.d; ++i) c[i] = std::clamp(int(std::floor((p[i] - g.lo[i]) / g.eta)), 0, g.n[i] - 1);
    return c;
  };
  // One application of G from seed element k at x: the stopping group and the path, or -1.
  auto walk = [&](int k, Vec x, std::vector<PathStep>* path) {
    int v = -1 - k;
    for (;;) {
      Cell c;
      if (!g.locate(x, c)) c = clamp_cell(x);
      if (v >= 0) {
        for (int gi : idx.groups_at[v])
          if (part.element_at(c) == s.groups[gi].element) return gi;
        const int r = idx.rem_child[v];
        if (r >= 0 && s.nodes[r].domain.contains(c)) {
          v = r;
          if (path) path->push_back({v, -1});
          continue;
        }
      }
      const int b = map.branch_at(x);
      if (b < 0) return -1;
      Vec y = map.branches[b].forward(x);
      Cell cy;
      if (!g.locate(y, cy)) cy = clamp_cell(y);
      const auto& kids = v < 0 ? idx.seed_children[-1 - v] : idx.children[v];
      int next = -1;
      for (const auto& [w, wb] : kids)
        if (wb == b && s.nodes[w].domain.contains(cy)) {
          next = w;
          break;
        }
      // Raster images of curved branches can differ from the true image by a cell.
      for (std::size_t q = 0; next < 0 && q < offsets.size(); ++q) {
        Cell c2 = cy;
        for (int i = 0; i < kMaxDim; ++i) c2[i] += offsets[q][i];
        for (const auto& [w, wb] : kids)
          if (wb == b && s.nodes[w].domain.contains(c2)) {
            next = w;
            y = g.center(c2);
            break;
          }
      }
      if (next < 0) return -1;
      v = next;
      x = y;
      if (path) path->push_back({v, b});
    }
  };
  std::vector<int> taus;
  long long total_steps = 0;
  for (int smp = 0; smp < opt.samples; ++smp) {
    const bool keep = int(u.composites.size()) < opt.keep;
    Composite comp;
    int tt = 0;
    int e = z;
    bool lost = false;
    for (long long step = 0;; ++step) {
      if (step >= cap) throw Error(ErrorClass::builder, "return-depth-cap", "sample " + std::to_string(smp));
      GStep gs;
      gs.seed = e;
      const int gi = walk(e, uniform_in(e), keep ? &gs.path : nullptr);
      if (gi < 0) {
        lost = true;
        break;
      }
      gs.group = gi;
      tt += s.groups[gi].tau;
      ++total_steps;
      if (keep) comp.steps.push_back(std::move(gs));
      e = s.groups[gi].element;
      if (e == z) break;
    }
    if (lost) {
      ++u.lost;
      continue;
    }
    taus.push_back(tt);
    if (keep) {
      comp.tau_tilde = tt;
      u.composites.push_back(std::move(comp));
    }
  }
  u.samples = opt.samples;
  const int ok = int(taus.size());
  if (ok == 0) throw Error(ErrorClass::builder, "upgrade-lost-all-samples");
  u.mean_steps = double(total_steps) / ok;
  std::sort(taus.begin(), taus.end());
  const int nmax = taus.back();
  for (int n = 0; n <= nmax; ++n) {
    const auto above = taus.end() - std::upper_bound(taus.begin(), taus.end(), n);
    u.tail.push_back({n, double(above) / ok});
  }
  try {
    u.fit = fit_tail(u.tail, 5.0 / ok);
  } catch (const Error&) {
    u.fit = TailFit{};
  }
  // Realized values: sampled tau~ plus direct returns from Z (seed Z stopped on Z).
  std::set<int> realized(taus.begin(), taus.end());
  std::vector<char> from_z(s.nodes.size(), 0);
  std::vector<int> stack;
  for (const auto& [w, b] : idx.seed_children[z]) stack.push_back(w);
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (from_z[v]) continue;
    from_z[v] = 1;
    for (const auto& [w, b] : idx.children[v]) stack.push_back(w);
    if (idx.rem_child[v] >= 0) stack.push_back(idx.rem_child[v]);
  }
  for (const auto& gr : s.groups)
    if (gr.element == z && from_z[gr.node] && gr.mass > 0) realized.insert(gr.tau);
  u.realized.assign(realized.begin(), realized.end());
}

}  // namespace inducer
