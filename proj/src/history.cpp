#include "inducer/history.hpp"

#include <algorithm>
#include <unordered_map>

namespace inducer {

History::History(const PiecewiseMap& map, const PartitionR& part) : map_(map), part_(part), eps0_(map.k.eps0()) {}

void History::seed(const std::vector<int>& elements, unsigned tag_for_first) {
  live.clear();
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const Region& R = part_.elements[elements[i]];
    LivePair p;
    p.node = -1 - elements[i];
    p.f.assign(R.box().volume(), 0.0);
    R.for_each([&](const Cell&, long long k) { p.f[k] = 1.0; });
    p.tag = i == 0 ? tag_for_first : 0;
    live.push_back(std::move(p));
  }
}

const Region& History::domain_of(int node) const {
  return node < 0 ? part_.elements[-1 - node] : nodes[node].domain;
}

double History::live_mass() const {
  double s = 0;
  const double cv = map_.grid()->cell_volume;
  for (const auto& p : live) {
    const Region& I = domain_of(p.node);
    I.for_each([&](const Cell&, long long k) { s += p.f[k]; });
  }
  return s * cv;
}

StandardFamily History::family() const {
  StandardFamily fam;
  for (const auto& p : live) {
    StandardPair q = StandardPair::from_density(domain_of(p.node), p.f);
    if (q.weight > 0) fam.pairs.push_back(std::move(q));
  }
  return fam;
}

namespace {

struct Child {
  Region domain;
  std::vector<double> f;
  int parent = 0;
  int branch = 0;
  double mass = 0;
  unsigned tag = 0;
};

}  // namespace

void History::step(const Region* Vstar) {
  const GridPtr& g = map_.grid();
  const double cv = g->cell_volume;
  auto child_tag = [&](unsigned tag, int b) {
    unsigned t = 0;
    if ((tag & 1u) && time + 1 <= lineage.hold_until) t |= 1u;
    for (std::size_t j = 0; j < lineage.itineraries.size(); ++j) {
      unsigned bit = 1u << (1 + j);
      const auto& it = lineage.itineraries[j];
      if ((tag & bit) && time < int(it.size()) && it[time] == b) t |= bit;
    }
    return t;
  };
  std::vector<std::vector<Child>> per(live.size());
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < live.size(); ++i) {
    try {
      const LivePair& p = live[i];
      const Region& I = domain_of(p.node);
      for (int b : branches_meeting(map_, I)) {
        BranchImage img = branch_image(map_.branches[b], g, I, p.f);
        if (img.domain.empty()) continue;
        ChopResult cr = chop(img.domain, Vstar, eps0_);
        const Box& ib = img.domain.box();
        for (auto& U : cr.pieces) {
          Child c;
          const Box& ub = U.box();
          c.f.assign(ub.volume(), 0.0);
          double m = 0;
          U.for_each([&](const Cell& cell, long long k) {
            c.f[k] = img.f[ib.local(cell)];
            m += c.f[k];
          });
          c.mass = m * cv;
          if (!(c.mass > 0)) continue;
          c.domain = std::move(U);
          c.parent = p.node;
          c.branch = b;
          c.tag = child_tag(p.tag, b);
          per[i].push_back(std::move(c));
        }
      }
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  // Deterministic merge of identical domains with identical tags.
  std::unordered_map<std::size_t, std::vector<std::size_t>> index;
  std::vector<LivePair> next;
  for (auto& v : per)
    for (auto& c : v) {
      std::size_t h = c.domain.hash() ^ (std::size_t(c.tag) * 0x9e3779b97f4a7c15ULL);
      auto& bucket = index[h];
      bool merged = false;
      for (std::size_t j : bucket) {
        LivePair& q = next[j];
        Node& n = nodes[q.node];
        if (q.tag != c.tag || n.domain != c.domain) continue;
        for (std::size_t k = 0; k < c.f.size(); ++k) q.f[k] += c.f[k];
        n.parents.push_back({c.parent, c.branch, c.mass});
        n.mass += c.mass;
        merged = true;
        break;
      }
      if (merged) continue;
      Node n;
      n.time = time + 1;
      n.domain = std::move(c.domain);
      n.parents.push_back({c.parent, c.branch, c.mass});
      n.mass = c.mass;
      nodes.push_back(std::move(n));
      LivePair q;
      q.node = int(nodes.size()) - 1;
      q.f = std::move(c.f);
      q.tag = c.tag;
      bucket.push_back(next.size());
      next.push_back(std::move(q));
    }
  live = std::move(next);
  ++time;
}

int History::remainder_node(int node, const Region& rest, double mass) {
  Node n;
  n.time = time;
  n.domain = rest;
  n.parents.push_back({node, -1, mass});
  n.mass = mass;
  nodes.push_back(std::move(n));
  return int(nodes.size()) - 1;
}

StopOutcome History::stop(const std::string& policy, double delta, unsigned skip) {
  if (policy != "interior" && policy != "single") throw Error(ErrorClass::config, "unknown-stop-policy", policy);
  const double cv = map_.grid()->cell_volume;
  std::vector<std::vector<int>> sel(live.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < live.size(); ++i) {
    const LivePair& p = live[i];
    if (p.tag & skip) continue;
    const Region& I = domain_of(p.node);
    if (policy == "single") {
      Regularity reg = is_delta_regular_in_X(I, delta);
      if (!reg.regular) continue;
      int e = part_.element_at(reg.witness);
      const Region& R = part_.elements[e];
      if (R.count() < I.count() && R.subset_of(I)) sel[i].push_back(e);
      continue;
    }
    const std::vector<float> dist = distance_in_X(I, delta);
    std::vector<std::pair<int, int>> seen;  // (element, cells of I in it), sorted by element
    std::vector<int> deep;
    I.for_each([&](const Cell& c, long long k) {
      int e = part_.element_at(c);
      if (e < 0) return;
      auto it = std::lower_bound(seen.begin(), seen.end(), std::make_pair(e, -1));
      if (it == seen.end() || it->first != e) it = seen.insert(it, {e, 0});
      ++it->second;
      if (dist[k] >= delta) deep.push_back(e);
    });
    std::sort(deep.begin(), deep.end());
    deep.erase(std::unique(deep.begin(), deep.end()), deep.end());
    for (int e : deep) {
      auto it = std::lower_bound(seen.begin(), seen.end(), std::make_pair(e, -1));
      if (it->second == part_.elements[e].count()) sel[i].push_back(e);
    }
  }
  StopOutcome out;
  std::vector<LivePair> kept;
  for (std::size_t i = 0; i < live.size(); ++i) {
    LivePair& p = live[i];
    if (sel[i].empty()) {
      if (!(p.tag & skip)) {
        const Region& I = domain_of(p.node);
        double m = 0;
        I.for_each([&](const Cell&, long long k) { m += p.f[k]; });
        out.remaining += m * cv;
      }
      kept.push_back(std::move(p));
      continue;
    }
    if (p.node < 0) throw Error(ErrorClass::builder, "stop-at-seed");
    ++out.regular;
    const Region& I = domain_of(p.node);
    const Box& ib = I.box();
    std::vector<uint8_t> mask = I.mask();
    for (int e : sel[i]) {
      const Region& R = part_.elements[e];
      double m = 0;
      R.for_each([&](const Cell& c, long long) {
        long long k = ib.local(c);
        m += p.f[k];
        mask[k] = 0;
      });
      groups.push_back({p.node, e, time, m * cv, 0});
      out.stopped += m * cv;
      ++out.groups;
    }
    Region rest = Region::from_mask(map_.grid(), ib, std::move(mask));
    if (rest.empty()) continue;
    const Box& rb = rest.box();
    std::vector<double> f(rb.volume(), 0.0);
    double m = 0;
    rest.for_each([&](const Cell& c, long long k) {
      f[k] = p.f[ib.local(c)];
      m += f[k];
    });
    if (!(m > 0)) continue;
    out.remaining += m * cv;
    LivePair q;
    q.node = remainder_node(p.node, rest, m * cv);
    q.f = std::move(f);
    q.tag = p.tag;
    kept.push_back(std::move(q));
  }
  live = std::move(kept);
  return out;
}

StopOutcome History::stop_element(int element, const Region& container, unsigned need, int group_tag) {
  const double cv = map_.grid()->cell_volume;
  const Region& R = part_.elements[element];
  StopOutcome out;
  std::vector<LivePair> kept;
  for (auto& p : live) {
    const Region& I = domain_of(p.node);
    bool hit = (p.tag & need) == need && container.subset_of(I) && R.subset_of(I);
    double total = 0;
    I.for_each([&](const Cell&, long long k) { total += p.f[k]; });
    if (!hit) {
      out.remaining += total * cv;
      kept.push_back(std::move(p));
      continue;
    }
    if (p.node < 0) throw Error(ErrorClass::builder, "stop-at-seed");
    const Box& ib = I.box();
    std::vector<uint8_t> mask = I.mask();
    double m = 0;
    R.for_each([&](const Cell& c, long long) {
      long long k = ib.local(c);
      m += p.f[k];
      mask[k] = 0;
    });
    groups.push_back({p.node, element, time, m * cv, group_tag});
    out.stopped += m * cv;
    ++out.groups;
    ++out.regular;
    Region rest = Region::from_mask(map_.grid(), ib, std::move(mask));
    double rm = (total - m) * cv;
    if (rest.empty() || !(rm > 0)) continue;
    const Box& rb = rest.box();
    std::vector<double> f(rb.volume(), 0.0);
    rest.for_each([&](const Cell& c, long long k) { f[k] = p.f[ib.local(c)]; });
    out.remaining += rm;
    LivePair q;
    q.node = remainder_node(p.node, rest, rm);
    q.f = std::move(f);
    q.tag = p.tag;
    kept.push_back(std::move(q));
  }
  live = std::move(kept);
  return out;
}

}  // namespace inducer
