#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "inducer/catalog.hpp"
#include "inducer/dynamics.hpp"
#include "inducer/inducing.hpp"
#include "inducer/parallel.hpp"
#include "inducer/scheme.hpp"

using namespace inducer;
namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string map = "m0";
  std::string mode = "gm";
  double eta = 0;
  std::uint64_t seed = 1;
  double halt_mass = -1;
  int rounds = 200;
  std::string out = ".";
  double audit_fraction = 0.05;
  std::string Z, Zp;
  std::string times;
  double delta = 0;
  int branch = 0;
  int samples = 2000;
  double time_budget = 0;
  std::string stop_policy = "interior";
  int sweep = 64;
  std::string scheme_path;
};

bool is_catalog(const std::string& id) {
  const auto ids = catalog_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

std::string lower(std::string s) {
  for (auto& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

MapPtr load_map(const std::string& source, double eta) {
  const std::string id = lower(source);
  if (is_catalog(id)) return make_catalog(id, eta > 0 ? eta : default_eta(id));
  if (!fs::exists(source)) throw Error(ErrorClass::config, "unknown-map", source);
  return load_map_spec(source, eta);
}

std::string map_label(const std::string& source) {
  const std::string id = lower(source);
  return is_catalog(id) ? id : source;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    char* end = nullptr;
    const double x = std::strtod(tok.c_str(), &end);
    if (tok.empty() || *end != '\0') throw Error(ErrorClass::config, "bad-list", std::string(what) + ": " + s);
    v.push_back(x);
  }
  return v;
}

// "lo0,hi0[,lo1,hi1[,lo2,hi2]]": cells whose centres lie in the open box.
Region parse_box(const PiecewiseMap& map, const std::string& s, const char* what) {
  const auto v = parse_list(s, what);
  const int d = map.d();
  if (int(v.size()) != 2 * d) throw Error(ErrorClass::config, "bad-region", std::string(what) + " needs 2d numbers");
  Vec lo{0, 0, 0}, hi{0, 0, 0};
  for (int i = 0; i < d; ++i) {
    lo[i] = v[2 * i];
    hi[i] = v[2 * i + 1];
  }
  Region r = Region::box_region(map.grid(), lo, hi);
  if (r.empty()) throw Error(ErrorClass::config, "bad-region", std::string(what) + " holds no cell");
  return r;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error(ErrorClass::config, "cannot-write", p.string());
  return os;
}

void write_tail_csv(const fs::path& p, const std::vector<std::pair<int, double>>& tail) {
  auto os = open_out(p);
  os << "n,measure_tau_gt_n\n";
  char buf[64];
  for (const auto& [n, v] : tail) {
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", n, v);
    os << buf;
  }
}

void write_audit_log(const fs::path& p, const Built& b) {
  auto os = open_out(p);
  os << "round,kind,lhs,rhs,slack,ok\n";
  char buf[256];
  for (const auto& a : b.audit) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%.17g,%.17g,%d\n", a.round, a.kind.c_str(), a.lhs, a.rhs, a.slack,
                  int(a.ok));
    os << buf;
  }
}

// The [manifest] block of the scheme file plus run results.
void write_manifest(const fs::path& p, const InducingScheme& s, const GMReport& rep, double seconds, int exit_code) {
  std::ostringstream ss;
  write_scheme(ss, s);
  std::istringstream is(ss.str());
  auto os = open_out(p);
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line) && line.rfind("[nodes]", 0) != 0) os << line << "\n";
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "[results]\nkappa = %.17g\nr2 = %.17g\nfit_points = %d\ngroups = %zu\nnodes = %zu\n"
                "gm_violations = %zu\ngm_paths = %d\ngm_snapped = %d\nseconds = %.3f\nexit = %d\n",
                s.fit.kappa, s.fit.r2, s.fit.points, s.groups.size(), s.nodes.size(), rep.violations.size(), rep.paths,
                rep.snapped, seconds, exit_code);
  os << buf;
  if (s.upgrade.z >= 0) {
    int gg = 0;
    for (int v : s.upgrade.realized) gg = std::gcd(gg, v);
    std::snprintf(buf, sizeof buf,
                  "upgrade_z = %d\nupgrade_lost = %d\nupgrade_kappa = %.17g\nrealized_gcd = %d\ntau1_mass = %.17g\n",
                  s.upgrade.z, s.upgrade.lost, s.upgrade.fit.kappa, gg, s.upgrade.tau1_mass);
    os << buf;
  }
}

int cmd_verify(const RunConfig& c) {
  MapPtr map = load_map(c.map, c.eta);
  const auto ex = verify_expansion(*map, 100000, c.seed);
  const auto di = verify_distortion(*map, 100000, c.seed);
  const auto sw = complexity_sweep(*map, c.sweep, c.seed);
  const auto& k = map->k;
  const bool ok_ex = ex.flagged.empty();
  const bool ok_di = !di.flagged;
  const bool ok_sw = sw.sigma_max <= k.sigma + 1e-9;
  fs::create_directories(c.out);
  auto os = open_out(fs::path(c.out) / "verify_report.txt");
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "map = %s\neta = %.17g\nLambda = %.17g\nexpansion_max = %.17g\nexpansion_ok = %d\n"
                "Dtilde = %.17g\ndistortion_measured = %.17g\ndistortion_ok = %d\nn0 = %d\nsigma = %.17g\n"
                "sigma_hat = %.17g\ncbar_hat = %.17g\nsweep_boxes = %d\ncomplexity_ok = %d\n",
                map_label(c.map).c_str(), map->grid()->eta, k.Lambda, ex.max_measured, int(ok_ex), k.Dtilde,
                di.measured, int(ok_di), k.n0, k.sigma, sw.sigma_max, sw.cbar_max, sw.boxes, int(ok_sw));
  os << buf;
  for (const auto& w : ex.warnings) os << "warning = " << w << "\n";
  for (int b : ex.flagged) os << "flagged_branch = " << map->branches[b].id << "\n";
  std::cout << buf;
  return ok_ex && ok_di && ok_sw ? 0 : int(ErrorClass::hypothesis);
}

int cmd_induce(const RunConfig& c) {
  if (c.mode != "gm" && c.mode != "full" && c.mode != "recurrent" && c.mode != "gcd1")
    throw Error(ErrorClass::config, "unknown-mode", c.mode);
  if ((c.mode == "recurrent" || c.mode == "gcd1") && c.Z.empty())
    throw Error(ErrorClass::config, "usage", "--mode " + c.mode + " needs --Z");
  if (c.mode == "gcd1" && c.Zp.empty()) throw Error(ErrorClass::config, "usage", "--mode gcd1 needs --Zp");
  const auto t0 = std::chrono::steady_clock::now();
  MapPtr map = load_map(c.map, c.eta);
  BuildOptions o;
  o.map_source = map_label(c.map);
  o.halt_mass = c.halt_mass;
  o.rounds = c.rounds;
  o.seed = c.seed;
  o.audit_fraction = c.audit_fraction;
  o.delta = c.delta;
  o.time_budget = c.time_budget;
  o.stop_policy = c.stop_policy;
  UpgradeOptions uo;
  uo.samples = c.samples;
  uo.seed = c.seed;
  Built b;
  if (c.mode == "gm" || c.mode == "full") {
    b = build_scheme_GM(*map, o);
    if (c.mode == "full") {
      upgrade_full_branch(b.scheme, *map, b.partition, uo);
      b.scheme.manifest.mode = "full";
    }
  } else if (c.mode == "recurrent") {
    std::vector<int> times;
    for (double t : parse_list(c.times.empty() ? "" : c.times, "--times")) times.push_back(int(t));
    const Region Z = parse_box(*map, c.Z, "--Z");
    RecurrenceSpec spec = times.empty() ? left_end_spec(*map, int(Z.count())) : left_end_spec(*map, Z, times);
    if (spec.Z != Z) throw Error(ErrorClass::config, "bad-Z", "recurrent Z must start at the left end");
    b = build_scheme_full_recurrent(*map, spec, o);
    upgrade_full_branch(b.scheme, *map, b.partition, uo);
  } else {
    const Region Z = parse_box(*map, c.Z, "--Z");
    const Region Zp = parse_box(*map, c.Zp, "--Zp");
    b = build_scheme_gcd_one(*map, Z, Zp, c.branch, o);
    upgrade_full_branch(b.scheme, *map, b.partition, uo);
  }
  InducingScheme& s = b.scheme;
  const GMReport rep = verify_gibbs_markov(s, *map, b.partition, 400, c.seed);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  int code = 0;
  const double leb_x = map->ambient.grid->total() * map->grid()->cell_volume;
  if (s.manifest.halted != "halt-mass" && s.manifest.unresolved > 1e-2 * leb_x) code = int(ErrorClass::builder);
  const bool audits_ok = std::all_of(b.audit.begin(), b.audit.end(), [](const AuditEntry& a) { return a.ok; });
  if (code == 0 && (!rep.ok() || !audits_ok)) code = int(ErrorClass::audit);

  const fs::path dir(c.out);
  fs::create_directories(dir);
  save_scheme((dir / "scheme.txt").string(), s);
  write_tail_csv(dir / "tail.csv", s.tail);
  if (!s.upgrade.tail.empty()) write_tail_csv(dir / "tail_return.csv", s.upgrade.tail);
  write_audit_log(dir / "audit.csv", b);
  write_manifest(dir / "manifest.txt", s, rep, seconds, code);

  std::printf("map %s mode %s N %d rounds %zu halted %s unresolved %.3g\n", s.manifest.map.c_str(),
              s.manifest.mode.c_str(), s.manifest.N, s.rounds.size(), s.manifest.halted.c_str(), s.manifest.unresolved);
  std::printf("kappa %.4f r2 %.4f points %d\n", s.fit.kappa, s.fit.r2, s.fit.points);
  if (s.upgrade.z >= 0) {
    int gg = 0;
    for (int v : s.upgrade.realized) gg = std::gcd(gg, v);
    std::printf("return kappa %.4f lost %d/%d realized gcd %d tau1 %.3g\n", s.upgrade.fit.kappa, s.upgrade.lost,
                s.upgrade.samples, gg, s.upgrade.tau1_mass);
  }
  std::printf("gibbs-markov violations %zu\n", rep.violations.size());
  for (const auto& v : rep.violations) std::printf("  %s\n", v.c_str());
  for (const auto& a : b.audit)
    if (!a.ok) std::printf("  audit %s round %d: %.6g > %.6g + %.3g\n", a.kind.c_str(), a.round, a.lhs, a.rhs, a.slack);
  return code;
}

// Re-derives the tail and the Gibbs-Markov checks from the file alone.
int cmd_audit(const RunConfig& c) {
  const Manifest m = read_manifest(c.scheme_path);
  MapPtr map = load_map(m.map, m.eta);
  if (map_fingerprint(*map) != m.map_hash) throw Error(ErrorClass::config, "map-mismatch", m.map);
  const InducingScheme s = load_scheme(c.scheme_path, map->grid());
  const PartitionR part = rebuild_partition(s, *map);
  std::vector<std::string> bad;
  if (part.N() != m.N) bad.push_back("partition has " + std::to_string(part.N()) + " elements, manifest " +
                                     std::to_string(m.N));
  const auto tail = tail_table(s.groups, m.base_measure);
  if (tail.size() != s.tail.size()) bad.push_back("tail length differs from the stop groups");
  for (std::size_t n = 0; n < std::min(tail.size(), s.tail.size()); ++n)
    if (std::abs(tail[n].second - s.tail[n].second) > 1e-12 * std::max(1.0, m.base_measure))
      bad.push_back("tail at n = " + std::to_string(n) + " differs from the stop groups");
  double stopped = 0;
  for (const auto& g : s.groups) stopped += g.mass;
  if (stopped > m.base_measure * (1 + 1e-9)) bad.push_back("stopped mass exceeds the base measure");
  const GMReport rep = verify_gibbs_markov(s, *map, part, 400, c.seed);
  for (const auto& v : rep.violations) bad.push_back(v);
  std::printf("scheme %s map %s mode %s groups %zu nodes %zu\n", c.scheme_path.c_str(), m.map.c_str(), m.mode.c_str(),
              s.groups.size(), s.nodes.size());
  std::printf("paths %d snapped %d max expansion %.6g max distortion %.6g image deficit %.3g\n", rep.paths,
              rep.snapped, rep.max_expansion, rep.max_distortion, rep.max_image_deficit);
  const fs::path log = fs::path(c.scheme_path).parent_path() / "audit.csv";
  if (fs::exists(log)) {
    std::ifstream is(log);
    std::string line;
    std::getline(is, line);
    int n = 0;
    while (std::getline(is, line)) {
      ++n;
      if (!line.empty() && line.back() == '0') bad.push_back("logged audit failed: " + line);
    }
    std::printf("logged audits %d\n", n);
  }
  for (const auto& v : bad) std::printf("VIOLATION %s\n", v.c_str());
  std::printf("%s\n", bad.empty() ? "all checks pass" : "audit failed");
  return bad.empty() ? 0 : int(ErrorClass::audit);
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig c;
  CLI::App app{"inducing schemes for piecewise expanding maps"};
  app.require_subcommand(1);
  auto common = [&](CLI::App* s) {
    s->add_option("--map", c.map, "catalog id (m0..m3) or map-spec file");
    s->add_option("--eta", c.eta, "grid resolution")->check(CLI::PositiveNumber);
    s->add_option("--seed", c.seed, "random seed");
    s->add_option("--out", c.out, "output directory");
  };
  auto* verify = app.add_subcommand("verify", "check the expansion, distortion and complexity hypotheses");
  common(verify);
  verify->add_option("--sweep", c.sweep, "boxes in the complexity sweep")->check(CLI::PositiveNumber);
  auto* induce = app.add_subcommand("induce", "build an inducing scheme");
  common(induce);
  induce->add_option("--mode", c.mode, "gm | full | recurrent | gcd1");
  induce->add_option("--halt-mass", c.halt_mass, "stop when the live mass drops below this")
      ->check(CLI::PositiveNumber);
  induce->add_option("--rounds", c.rounds, "round cap")->check(CLI::PositiveNumber);
  induce->add_option("--audit-fraction", c.audit_fraction, "share of rounds spot-audited")->check(CLI::Range(0.0, 1.0));
  induce->add_option("--Z", c.Z, "base set box: lo0,hi0[,lo1,hi1]");
  induce->add_option("--Zp", c.Zp, "collar box for gcd1");
  induce->add_option("--times", c.times, "recurrence times, comma list");
  induce->add_option("--delta", c.delta, "regularity radius (default delta0)")->check(CLI::PositiveNumber);
  induce->add_option("--branch", c.branch, "branch index h for gcd1")->check(CLI::NonNegativeNumber);
  induce->add_option("--samples", c.samples, "first-return samples")->check(CLI::PositiveNumber);
  induce->add_option("--time-budget", c.time_budget, "seconds, 0 = none")->check(CLI::NonNegativeNumber);
  induce->add_option("--stop-policy", c.stop_policy, "interior | single");
  auto* audit = app.add_subcommand("audit", "re-verify a stored scheme");
  audit->add_option("scheme", c.scheme_path, "scheme file")->required();
  audit->add_option("--seed", c.seed, "random seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int r = app.exit(e);
    return r == 0 ? 0 : int(ErrorClass::config);
  }
  try {
    configure_threads();
    if (*verify) return cmd_verify(c);
    if (*induce) return cmd_induce(c);
    return cmd_audit(c);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return int(e.cls());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return int(ErrorClass::builder);
  }
}
