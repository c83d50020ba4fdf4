#include "inducer/inducing.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <functional>
#include <random>
#include <set>

namespace inducer {

std::string map_fingerprint(const PiecewiseMap& map) {
  const auto& k = map.k;
  const auto& g = *map.grid();
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s|%d|%.17g|%.17g|%.17g|%.17g|%d|%.17g|%.17g|%.17g|%.17g|%.17g|%zu", map.name.c_str(),
                g.d, g.eta, k.Lambda, k.alpha, k.Dtilde, k.n0, k.sigma, k.Cbar, k.eps_exp, k.eps_cplx, k.a0,
                map.branches.size());
  std::string s = buf;
  for (const auto& b : map.branches) s += "|" + b.id;
  // FNV-1a, 64 bit.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Run {
  const PiecewiseMap& map;
  const BuildOptions& opt;
  PartitionR part;
  GrowthConstants gc;
  std::vector<double> grid;
  double delta = 0;
  double t = 0;
  int nrec_later = 0;
  double halt_mass = 0;
  double base = 0;
  std::mt19937_64 rng;
  Clock::time_point start = Clock::now();
  std::vector<AuditEntry> audit;
  std::vector<RoundLog> rounds;
  std::string halted;

  Run(const PiecewiseMap& m, const BuildOptions& o) : map(m), opt(o), rng(o.seed) {
    map.k.validate();
    gc = GrowthConstants::make(map, map.k.P);
    if (opt.fit_growth) fit_growth(map, calibration_suite(map, gc.P, 4, opt.seed), 4, gc);
    grid = proper_grid(map.k.eps0(), map.grid()->eta);
    delta = opt.delta > 0 ? opt.delta : gc.delta0;
  }

  void finish_partition() {
    t = fixed_ratio_constant(map.k.eps0(), part, gc);
    base = 0;
    for (const auto& e : part.elements) base += e.measure();
    halt_mass = opt.halt_mass >= 0 ? opt.halt_mass : 1e-4 * map.ambient.space.measure();
    nrec_later = recovery_time(map, part.Cbar_R(gc.Ca) * gc.P, gc, opt.recovery);
  }

  int nrec(double B) const { return recovery_time(map, B, gc, opt.recovery); }

  bool over_budget(const History& h) {
    if (h.nodes.size() > opt.node_budget) {
      halted = "node-budget";
      return true;
    }
    if (opt.time_budget > 0 && std::chrono::duration<double>(Clock::now() - start).count() > opt.time_budget) {
      halted = "time-budget";
      return true;
    }
    return false;
  }

  void audit_round(int round, const History& h, const StandardFamily& fam, double B, unsigned skip) {
    std::uniform_real_distribution<double> U(0, 1);
    if (round > 0 && U(rng) >= opt.audit_fraction) return;
    // Growth inequality at a random grid scale on a random subfamily (itself a standard family).
    if (!fam.pairs.empty()) {
      const double eps = grid[std::size_t(U(rng) * grid.size()) % grid.size()];
      StandardFamily sub;
      std::vector<std::size_t> idx(fam.pairs.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(std::min<std::size_t>(idx.size(), 64));
      std::sort(idx.begin(), idx.end());
      for (std::size_t i : idx) sub.pairs.push_back(fam.pairs[i]);
      GrowthResult g = growth_check(map, sub, eps, gc);
      audit.push_back({round, "growth", g.lhs, g.rhs, g.slack, g.lhs <= g.rhs + g.slack});
    }
    // A proper family carries at least 2/3 of its weight on delta0-regular pairs.
    if (B <= gc.P) {
      RegularWeight w = regular_weight(fam, gc.delta0);
      audit.push_back({round, "regular-weight", w.regular_fraction, 2.0 / 3.0, 0, w.regular_fraction >= 2.0 / 3.0});
    }
    // Selection lemma on a few regular pairs, when a partition cube fits inside a delta-ball.
    const double cube_diam = part.side_cells * map.grid()->eta * std::sqrt(double(map.d()));
    if (cube_diam > delta) return;
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < h.live.size(); ++i)
      if (!(h.live[i].tag & skip)) cand.push_back(i);
    std::shuffle(cand.begin(), cand.end(), rng);
    int done = 0;
    for (std::size_t i : cand) {
      if (done == 3) break;
      const Region& I = h.domain_of(h.live[i].node);
      if (!is_delta_regular(I, delta).regular) continue;
      ++done;
      try {
        Selection s = select_contained_element(I, delta, part, dyadic_grid(delta, 2 * map.grid()->eta));
        audit.push_back({round, "selection-kept", I.measure() - part.elements[s.element].measure(), 0.5 * I.measure(),
                         raster_slack(I), s.ok_kept});
        audit.push_back({round, "selection-collar", s.collar_excess, 0, 0, s.ok_collar});
      } catch (const Error& e) {
        audit.push_back({round, "selection-" + e.code(), 0, 0, 0, false});
      }
    }
  }

  // Recovery, extension and stopping rounds until the live mass drops below halt_mass.
  void loop(History& h, int first_steps, unsigned skip, const std::function<const Region*()>& avoid,
            const std::function<void()>& after_step) {
    auto one_step = [&] {
      h.step(avoid ? avoid() : nullptr);
      if (after_step) after_step();
    };
    for (int round = 0;; ++round) {
      if (round >= opt.rounds) {
        halted = "round-cap";
        break;
      }
      const int steps = round == 0 ? first_steps : nrec_later;
      bool stop = false;
      for (int i = 0; i < steps && !stop; ++i) {
        one_step();
        stop = over_budget(h) || h.live.empty();
      }
      if (stop) break;
      StandardFamily fam = h.family();
      double B = properness(fam, grid);
      int ext = 0;
      while (B > gc.P && ext < opt.extension_cap) {
        one_step();
        ++ext;
        if (over_budget(h) || h.live.empty()) {
          stop = true;
          break;
        }
        fam = h.family();
        B = properness(fam, grid);
      }
      if (stop) break;
      RoundLog log;
      log.round = round;
      log.time = h.time;
      log.extension = ext;
      log.live_pairs = int(h.live.size());
      log.properness = B;
      log.regular_fraction = regular_weight(fam, gc.delta0).regular_fraction;
      audit_round(round, h, fam, B, skip);
      StopOutcome out = h.stop(opt.stop_policy, delta, skip);
      log.stopped = out.stopped;
      log.remainder = out.remaining;
      log.ratio = out.remaining > 0 ? out.stopped / out.remaining : std::numeric_limits<double>::infinity();
      log.remainder_properness = h.live.empty() ? 0 : properness(h.family(), grid);
      rounds.push_back(log);
      if (out.remaining > 0 && log.ratio < t)
        throw Error(ErrorClass::builder, "stop-ratio-violated",
                    "round " + std::to_string(round) + " ratio " + std::to_string(log.ratio) + " < t " +
                        std::to_string(t) + " (properness " + std::to_string(B) + ")");
      if (h.live_mass() <= halt_mass || h.live.empty()) {
        halted = "halt-mass";
        break;
      }
    }
  }

  Built finish(History& h, const std::string& mode) {
    Built b;
    auto& s = b.scheme;
    auto& m = s.manifest;
    const auto& k = map.k;
    m.map = opt.map_source.empty() ? map.name : opt.map_source;
    m.map_hash = map_fingerprint(map);
    m.mode = mode;
    m.eta = map.grid()->eta;
    m.seed = opt.seed;
    m.delta = delta;
    m.stop_policy = opt.stop_policy;
    m.a0 = k.a0;
    m.eps0 = k.eps0();
    m.P = gc.P;
    m.delta0 = gc.delta0;
    m.n0 = k.n0;
    m.Lambda = k.Lambda;
    m.D = k.D();
    m.alpha = k.alpha;
    m.sigma = k.sigma;
    m.t = t;
    m.nrec_later = nrec_later;
    m.Ca = gc.Ca;
    m.Cbar_R = part.Cbar_R(gc.Ca);
    m.CZ = part.CZ;
    m.zeta1 = gc.zeta1;
    m.zeta2 = gc.zeta2;
    m.zeta4 = gc.zeta4;
    m.theta2 = gc.theta2;
    m.halt_mass = halt_mass;
    m.rounds = int(rounds.size());
    m.halted = halted;
    m.N = part.N();
    m.min_measure = part.min_measure;
    m.base_measure = base;
    m.unresolved = h.live_mass();
    if (part.z >= 0) m.Z = part.elements[part.z].runs();
    s.nodes = std::move(h.nodes);
    s.groups = std::move(h.groups);
    s.rounds = std::move(rounds);
    s.tail = tail_table(s.groups, base);
    const double floor = 10 * map.grid()->cell_volume;
    try {
      s.fit = fit_tail(s.tail, floor);
    } catch (const Error&) {
      s.fit = TailFit{};
    }
    b.partition = std::move(part);
    b.gc = gc;
    b.audit = std::move(audit);
    return b;
  }
};

std::vector<int> all_elements(const PartitionR& part) {
  std::vector<int> v(part.N());
  for (int i = 0; i < part.N(); ++i) v[i] = i;
  return v;
}

double seed_properness(const PartitionR& part, const std::vector<int>& elems, const std::vector<double>& grid) {
  StandardFamily f;
  for (int e : elems) f.pairs.push_back(StandardPair::uniform(part.elements[e], part.elements[e].measure()));
  return properness(f, grid);
}

}  // namespace

Built build_scheme_GM(const PiecewiseMap& map, const BuildOptions& opt) {
  Run run(map, opt);
  run.part = build_partition(map.ambient, run.delta);
  run.finish_partition();
  History h(map, run.part);
  const auto elems = all_elements(run.part);
  h.seed(elems);
  const int first = run.nrec(seed_properness(run.part, elems, run.grid));
  run.loop(h, first, 0, nullptr, nullptr);
  Built b = run.finish(h, "gm");
  b.scheme.manifest.nrec_first = first;
  return b;
}

Built build_scheme_full_recurrent(const PiecewiseMap& map, const RecurrenceSpec& spec, const BuildOptions& opt) {
  if (spec.Z.empty()) throw Error(ErrorClass::config, "empty-Z");
  if (spec.itineraries.size() != spec.times.size()) throw Error(ErrorClass::config, "bad-itineraries");
  if (spec.times.size() > 30) throw Error(ErrorClass::config, "too-many-times");
  Run run(map, opt);
  NiceBoundaryCertificate cert = certify_nice_boundary(spec.Z, 16, opt.seed);
  run.part = build_partition(map.ambient, run.delta, &spec.Z, cert.CZ);
  run.finish_partition();
  const int C1 = run.nrec(seed_properness(run.part, {0}, run.grid));
  AdjustedTimes adj = adjust_times(spec, C1, run.nrec_later);
  CoverReport cov = verify_covering(map, spec.Z, adj.itineraries, adj.blocks);
  if (!cov.covered || !cov.disjoint) throw Error(ErrorClass::builder, "recurrence-cover-failed", cov.detail);
  const int K = int(adj.times.size());
  const int nK = adj.times[K - 1];
  History h(map, run.part);
  h.lineage.hold_until = nK;
  h.lineage.itineraries = adj.itineraries;
  unsigned tag = 1;
  for (int j = 0; j < K; ++j) tag |= 1u << (1 + j);
  const auto elems = all_elements(run.part);
  h.seed(elems, tag);
  const Region& Z = run.part.elements[0];
  auto after = [&] {
    for (int j = 0; j < K; ++j)
      if (h.time == adj.times[j]) {
        StopOutcome out = h.stop_element(0, Z, 1u | (1u << (1 + j)), 1 + j);
        if (out.groups == 0)
          throw Error(ErrorClass::builder, "recurrence-cover-failed",
                      "no lineage pair contains Z at time " + std::to_string(adj.times[j]));
      }
  };
  auto avoid = [&]() -> const Region* { return h.time < nK ? &Z : nullptr; };
  const int first = run.nrec(seed_properness(run.part, elems, run.grid));
  run.loop(h, first, 1u, avoid, after);
  if (h.time < nK) throw Error(ErrorClass::builder, "recurrence-incomplete", "halted before the last return time");
  Built b = run.finish(h, "recurrent");
  auto& m = b.scheme.manifest;
  m.nrec_first = first;
  m.times = adj.times;
  m.itineraries = adj.itineraries;
  return b;
}

Built build_scheme_gcd_one(const PiecewiseMap& map, const Region& Z, const Region& Zp, int branch,
                           const BuildOptions& opt) {
  if (Z.empty() || Zp.empty()) throw Error(ErrorClass::config, "empty-Z");
  if (!Z.subset_of(Zp)) throw Error(ErrorClass::config, "collar-not-nested");
  if (!(Zp.measure() > Z.measure())) throw Error(ErrorClass::config, "degenerate-collar");
  if (branch < 0 || branch >= int(map.branches.size())) throw Error(ErrorClass::config, "bad-branch");
  const Branch& hb = map.branches[branch];
  const GridPtr& g = map.grid();
  // T(O_h) covers Z' and h(Z) lies in Z.
  double tau1 = 0;
  for (const Cell& c : Zp.cells()) {
    Vec x;
    double J = 0;
    const Vec y = g->center(c);
    if (!hb.pull(y, x, J)) throw Error(ErrorClass::config, "gcd1-precondition", "T(O_h) does not cover Z'");
    if (Z.contains(c)) {
      if (!Z.contains_point(x)) throw Error(ErrorClass::config, "gcd1-precondition", "h(Z) leaves Z");
      tau1 += J * g->cell_volume;
    }
  }
  Run run(map, opt);
  NiceBoundaryCertificate cert = certify_nice_boundary(Z, 16, opt.seed);
  run.part = build_partition(map.ambient, run.delta, &Z, cert.CZ);
  run.finish_partition();
  History h(map, run.part);
  const auto elems = all_elements(run.part);
  h.seed(elems);
  h.step(&Zp);
  const std::size_t g0 = h.groups.size();
  StopOutcome out = h.stop_element(0, Zp, 0, 1);
  if (out.groups == 0) throw Error(ErrorClass::builder, "collar-not-contained", "no pair contains Z'");
  bool direct = false;
  for (std::size_t i = g0; i < h.groups.size(); ++i)
    for (const auto& e : h.nodes[h.groups[i].node].parents)
      if (e.parent == -1 && e.branch == branch) direct = true;
  const double Bp = properness(h.family(), run.grid);
  const int first = run.nrec(Bp);
  run.loop(h, first, 0, nullptr, nullptr);
  Built b = run.finish(h, "gcd1");
  auto& m = b.scheme.manifest;
  m.nrec_first = first;
  m.Zp = Zp.runs();
  m.times = {1};
  m.itineraries = {{branch}};
  b.scheme.upgrade.tau1_mass = direct ? tau1 : 0;
  return b;
}

PartitionR rebuild_partition(const InducingScheme& s, const PiecewiseMap& map) {
  const auto& m = s.manifest;
  if (m.Z.empty()) return build_partition(map.ambient, m.delta);
  Region Z = Region::from_runs(map.grid(), m.Z);
  return build_partition(map.ambient, m.delta, &Z, m.CZ);
}

namespace {

// Cell of p, or a neighbour, inside r.
bool near_inside(const Region& r, const Grid& g, const Vec& p) {
  if (r.contains_point(p)) return true;
  Cell c;
  if (!g.locate(p, c)) {
    for (int i = 0; i < g.d; ++i) {
      int v = int(std::floor((p[i] - g.lo[i]) / g.eta));
      c[i] = std::clamp(v, 0, g.n[i] - 1);
    }
  }
  const int span = g.d >= 2 ? 1 : 0;
  for (int a = -1; a <= 1; ++a)
    for (int b = -span; b <= span; ++b)
      for (int e = -(g.d >= 3 ? 1 : 0); e <= (g.d >= 3 ? 1 : 0); ++e) {
        Cell q = c;
        q[0] += a;
        q[1] += b;
        q[2] += e;
        if (r.contains(q)) return true;
      }
  return false;
}

}  // namespace

GMReport verify_gibbs_markov(const InducingScheme& s, const PiecewiseMap& map, const PartitionR& part, int paths,
                             std::uint64_t seed) {
  GMReport rep;
  const Grid& g = *map.grid();
  const int d = g.d;
  const double Lambda = map.k.Lambda, D = map.k.D(), alpha = map.k.alpha;
  const int N = part.N();
  rep.groups = int(s.groups.size());
  auto domain_of = [&](int v) -> const Region& { return v < 0 ? part.elements[-1 - v] : s.nodes[v].domain; };
  std::set<int> images;
  for (std::size_t i = 0; i < s.groups.size(); ++i) {
    const auto& gr = s.groups[i];
    const std::string id = "group " + std::to_string(i);
    if (gr.node < 0 || gr.node >= int(s.nodes.size())) {
      rep.violations.push_back(id + ": bad node");
      continue;
    }
    if (gr.element < 0 || gr.element >= N) {
      rep.violations.push_back(id + ": image outside the partition");
      continue;
    }
    images.insert(gr.element);
    if (gr.tau != s.nodes[gr.node].time)
      rep.violations.push_back(id + ": tau " + std::to_string(gr.tau) + " but image reached at time " +
                               std::to_string(s.nodes[gr.node].time));
    if (!part.elements[gr.element].subset_of(s.nodes[gr.node].domain))
      rep.violations.push_back(id + ": image not inside the node domain");
  }
  rep.images = int(images.size());
  if (rep.images > N) rep.violations.push_back("image count exceeds N");
  // Pull-back through b, moving to a neighbouring cell centre of `here` when the point sits
  // one cell outside the raster image.
  auto pull = [&](int b, int here, Vec& x, double& J, bool& snapped) {
    Vec nx;
    if (map.branches[b].pull(x, nx, J)) {
      x = nx;
      return true;
    }
    Cell c;
    if (!g.locate(x, c)) return false;
    const Region& dom = domain_of(here);
    for (int a = -1; a <= 1; ++a)
      for (int e = -(d >= 2); e <= (d >= 2); ++e)
        for (int f = -(d >= 3); f <= (d >= 3); ++f) {
          Cell q = c;
          q[0] += a;
          q[1] += e;
          q[2] += f;
          if (!dom.contains(q)) continue;
          if (map.branches[b].pull(g.center(q), nx, J)) {
            x = nx;
            snapped = true;
            return true;
          }
        }
    return false;
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0, 1);
  // Sampled backward paths: expansion and distortion of the composed inverse branch.
  std::vector<std::size_t> pick(s.groups.size());
  for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
  std::shuffle(pick.begin(), pick.end(), rng);
  if (int(pick.size()) > paths) pick.resize(paths);
  std::sort(pick.begin(), pick.end());
  for (std::size_t gi : pick) {
    const auto& gr = s.groups[gi];
    if (gr.node < 0 || gr.node >= int(s.nodes.size()) || gr.element < 0 || gr.element >= N) continue;
    const std::string id = "group " + std::to_string(gi);
    std::vector<std::pair<int, int>> steps;  // (child node, branch) from the image backwards
    int v = gr.node;
    while (v >= 0) {
      const auto& ps = s.nodes[v].parents;
      double tot = 0;
      for (const auto& e : ps) tot += e.mass;
      double r = U(rng) * tot;
      std::size_t k = 0;
      while (k + 1 < ps.size() && r >= ps[k].mass) r -= ps[k++].mass;
      steps.push_back({v, ps[k].branch});
      v = ps[k].parent;
    }
    const int seed_elem = -1 - v;
    int tau = 0;
    for (const auto& st : steps) tau += st.second >= 0;
    ++rep.paths;
    if (tau != gr.tau) {
      rep.violations.push_back(id + ": path has " + std::to_string(tau) + " steps, tau " + std::to_string(gr.tau));
      continue;
    }
    const auto cells = part.elements[gr.element].cells();
    const Cell c1 = cells[std::size_t(U(rng) * cells.size()) % cells.size()];
    const Cell c2 = cells[std::size_t(U(rng) * cells.size()) % cells.size()];
    Vec y1 = g.center(c1), y2 = g.center(c2);
    const double dy = dist(y1, y2, d);
    Vec x1 = y1, x2 = y2;
    double lj1 = 0, lj2 = 0;
    bool ok = true, snapped = false;
    for (std::size_t k = 0; k < steps.size() && ok; ++k) {
      const int b = steps[k].second;
      const int parent = k + 1 < steps.size() ? steps[k + 1].first : v;
      if (b < 0) continue;
      Vec n1 = x1, n2 = x2;
      double J1 = 0, J2 = 0;
      if (!pull(b, steps[k].first, n1, J1, snapped) || !pull(b, steps[k].first, n2, J2, snapped)) {
        rep.violations.push_back(id + ": inverse branch undefined along the path");
        ok = false;
        break;
      }
      x1 = n1;
      x2 = n2;
      lj1 += std::log(J1);
      lj2 += std::log(J2);
      if (!near_inside(domain_of(parent), g, x1) || !near_inside(domain_of(parent), g, x2)) {
        rep.violations.push_back(id + ": pull-back leaves node " + std::to_string(parent));
        ok = false;
      }
    }
    if (!ok) continue;
    if (!near_inside(part.elements[seed_elem], g, x1))
      rep.violations.push_back(id + ": pull-back misses seed element " + std::to_string(seed_elem));
    if (snapped) ++rep.snapped;
    if (dy > 0 && !snapped) {
      const double ex = dist(x1, x2, d) / (std::pow(Lambda, gr.tau) * dy);
      rep.max_expansion = std::max(rep.max_expansion, ex);
      if (dist(x1, x2, d) > std::pow(Lambda, gr.tau) * dy * (1 + 1e-9) + 1e-12)
        rep.violations.push_back(id + ": expansion " + std::to_string(ex) + " > 1");
      const double dd = std::abs(lj1 - lj2) / std::pow(dy, alpha);
      rep.max_distortion = std::max(rep.max_distortion, dd);
      if (std::abs(lj1 - lj2) > D * std::pow(dy, alpha) * (1 + 1e-6) + 1e-9)
        rep.violations.push_back(id + ": distortion " + std::to_string(dd) + " > D " + std::to_string(D));
    }
  }
  // Stored composites of the first-return map: full image and the tau~ identity.
  const auto& u = s.upgrade;
  if (!u.composites.empty()) {
    if (u.z < 0 || u.z >= N) {
      rep.violations.push_back("upgrade: bad Z index");
      return rep;
    }
    const Region& Z = part.elements[u.z];
    const auto zc = Z.cells();
    for (std::size_t ci = 0; ci < u.composites.size(); ++ci) {
      const auto& c = u.composites[ci];
      const std::string id = "composite " + std::to_string(ci);
      int sum = 0;
      bool shape = !c.steps.empty() && c.steps.front().seed == u.z;
      for (std::size_t k = 0; k < c.steps.size() && shape; ++k) {
        const auto& st = c.steps[k];
        if (st.group < 0 || st.group >= int(s.groups.size())) {
          shape = false;
          break;
        }
        const auto& gr = s.groups[st.group];
        int n = 0;
        for (const auto& p : st.path) n += p.branch >= 0;
        if (n != gr.tau) rep.violations.push_back(id + ": step length differs from tau");
        sum += gr.tau;
        const bool last = k + 1 == c.steps.size();
        if ((gr.element == u.z) != last) shape = false;
        if (!last && c.steps[k + 1].seed != gr.element) shape = false;
      }
      if (!shape) {
        rep.violations.push_back(id + ": not a first-return chain");
        continue;
      }
      if (sum != c.tau_tilde) rep.violations.push_back(id + ": tau~ is not the sum of tau");
      long long miss = 0;
      for (const Cell& zcell : zc) {
        Vec y = g.center(zcell);
        bool ok = true;
        for (std::size_t k = c.steps.size(); k-- > 0 && ok;) {
          const auto& st = c.steps[k];
          for (std::size_t p = st.path.size(); p-- > 0 && ok;) {
            const int b = st.path[p].branch;
            if (b < 0) continue;
            double J = 0;
            bool snapped = false;
            if (!pull(b, st.path[p].node, y, J, snapped)) ok = false;
            const int parent = p > 0 ? st.path[p - 1].node : -1 - st.seed;
            if (ok && !near_inside(domain_of(parent), g, y)) ok = false;
          }
        }
        if (!ok) ++miss;
      }
      const double deficit = miss * g.cell_volume;
      rep.max_image_deficit = std::max(rep.max_image_deficit, deficit);
      if (deficit > 1e-3 * Z.measure())
        rep.violations.push_back(id + ": image misses " + std::to_string(miss) + " cells of Z");
    }
  }
  return rep;
}

}  // namespace inducer
