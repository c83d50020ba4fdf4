#include <cstdio>
#include <fstream>
#include <sstream>

#include "inducer/error.hpp"
#include "inducer/scheme.hpp"

namespace inducer {

namespace {

constexpr const char* kMagic = "inducer-scheme 1";

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void schema(const std::string& what, int line) {
  throw Error(ErrorClass::config, "schema-mismatch", what + " at line " + std::to_string(line));
}

std::string runs_text(const Runs& r) {
  std::string s = std::to_string(r.size());
  for (const auto& [a, n] : r) s += " " + std::to_string(a) + " " + std::to_string(n);
  return s;
}

std::string ints_text(const std::vector<int>& v) {
  std::string s = std::to_string(v.size());
  for (int x : v) s += " " + std::to_string(x);
  return s;
}

void write_fit(std::ostream& os, const TailFit& f) {
  os << "fit " << num(f.kappa) << ' ' << num(f.constant) << ' ' << num(f.r2) << ' ' << f.points << ' ' << f.n_min
     << ' ' << f.n_max << '\n';
}

void write_tail(std::ostream& os, const std::vector<std::pair<int, double>>& t) {
  os << "tail " << t.size() << '\n';
  for (const auto& [n, v] : t) os << n << ' ' << num(v) << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::string line() {
    std::string s;
    if (!std::getline(is_, s)) schema("unexpected end of file", no_ + 1);
    ++no_;
    return s;
  }
  std::istringstream tokens(const std::string& head) {
    std::string s = line();
    std::istringstream ss(s);
    std::string w;
    if (!head.empty() && (!(ss >> w) || w != head)) schema("expected '" + head + "'", no_);
    return ss;
  }
  void expect(const std::string& exact) {
    if (line() != exact) schema("expected '" + exact + "'", no_);
  }
  template <class T>
  T get(std::istringstream& ss) {
    T v{};
    if (!(ss >> v)) schema("bad field", no_);
    return v;
  }
  double real(std::istringstream& ss) {
    std::string w;
    if (!(ss >> w)) schema("bad number", no_);
    char* end = nullptr;
    double v = std::strtod(w.c_str(), &end);
    if (*end) schema("bad number '" + w + "'", no_);
    return v;
  }
  Runs runs(std::istringstream& ss) {
    Runs r(get<std::size_t>(ss));
    for (auto& [a, n] : r) {
      a = get<long long>(ss);
      n = get<long long>(ss);
    }
    return r;
  }
  std::vector<int> ints(std::istringstream& ss) {
    std::vector<int> v(get<std::size_t>(ss));
    for (auto& x : v) x = get<int>(ss);
    return v;
  }
  TailFit fit() {
    auto ss = tokens("fit");
    TailFit f;
    f.kappa = real(ss);
    f.constant = real(ss);
    f.r2 = real(ss);
    f.points = get<int>(ss);
    f.n_min = get<int>(ss);
    f.n_max = get<int>(ss);
    return f;
  }
  std::vector<std::pair<int, double>> tail() {
    auto ss = tokens("tail");
    std::vector<std::pair<int, double>> t(get<std::size_t>(ss));
    for (auto& [n, v] : t) {
      auto ls = tokens("");
      n = get<int>(ls);
      v = real(ls);
    }
    return t;
  }
  int no() const { return no_; }

 private:
  std::istream& is_;
  int no_ = 0;
};

// Manifest as ordered key = value lines.
std::vector<std::pair<std::string, std::string>> manifest_lines(const Manifest& m) {
  std::vector<std::pair<std::string, std::string>> kv = {
      {"map", m.map},
      {"map_hash", m.map_hash},
      {"mode", m.mode},
      {"eta", num(m.eta)},
      {"seed", std::to_string(m.seed)},
      {"delta", num(m.delta)},
      {"stop_policy", m.stop_policy},
      {"a0", num(m.a0)},
      {"eps0", num(m.eps0)},
      {"P", num(m.P)},
      {"delta0", num(m.delta0)},
      {"n0", std::to_string(m.n0)},
      {"Lambda", num(m.Lambda)},
      {"D", num(m.D)},
      {"alpha", num(m.alpha)},
      {"sigma", num(m.sigma)},
      {"t", num(m.t)},
      {"nrec_first", std::to_string(m.nrec_first)},
      {"nrec_later", std::to_string(m.nrec_later)},
      {"Ca", num(m.Ca)},
      {"Cbar_R", num(m.Cbar_R)},
      {"CZ", num(m.CZ)},
      {"zeta1", num(m.zeta1)},
      {"zeta2", num(m.zeta2)},
      {"zeta4", num(m.zeta4)},
      {"theta2", num(m.theta2)},
      {"halt_mass", num(m.halt_mass)},
      {"rounds", std::to_string(m.rounds)},
      {"halted", m.halted},
      {"N", std::to_string(m.N)},
      {"min_measure", num(m.min_measure)},
      {"base_measure", num(m.base_measure)},
      {"unresolved", num(m.unresolved)},
      {"Z", runs_text(m.Z)},
      {"Zp", runs_text(m.Zp)},
      {"times", ints_text(m.times)},
      {"itineraries", std::to_string(m.itineraries.size())},
  };
  for (std::size_t j = 0; j < m.itineraries.size(); ++j) kv.push_back({"itinerary" + std::to_string(j), ints_text(m.itineraries[j])});
  return kv;
}

Manifest parse_manifest(Reader& r) {
  r.expect("[manifest]");
  Manifest m;
  auto kv = [&](const std::string& key) {
    std::string s = r.line();
    const std::string pre = key + " =";
    if (s.compare(0, pre.size(), pre) != 0) schema("expected key '" + key + "'", r.no());
    return s.size() > pre.size() ? s.substr(pre.size() + 1) : std::string();
  };
  auto real = [&](const std::string& key) {
    std::istringstream ss(kv(key));
    return r.real(ss);
  };
  auto integer = [&](const std::string& key) {
    std::istringstream ss(kv(key));
    return r.get<long long>(ss);
  };
  m.map = kv("map");
  m.map_hash = kv("map_hash");
  m.mode = kv("mode");
  m.eta = real("eta");
  {
    std::istringstream ss(kv("seed"));
    m.seed = r.get<std::uint64_t>(ss);
  }
  m.delta = real("delta");
  m.stop_policy = kv("stop_policy");
  m.a0 = real("a0");
  m.eps0 = real("eps0");
  m.P = real("P");
  m.delta0 = real("delta0");
  m.n0 = int(integer("n0"));
  m.Lambda = real("Lambda");
  m.D = real("D");
  m.alpha = real("alpha");
  m.sigma = real("sigma");
  m.t = real("t");
  m.nrec_first = int(integer("nrec_first"));
  m.nrec_later = int(integer("nrec_later"));
  m.Ca = real("Ca");
  m.Cbar_R = real("Cbar_R");
  m.CZ = real("CZ");
  m.zeta1 = real("zeta1");
  m.zeta2 = real("zeta2");
  m.zeta4 = real("zeta4");
  m.theta2 = real("theta2");
  m.halt_mass = real("halt_mass");
  m.rounds = int(integer("rounds"));
  m.halted = kv("halted");
  m.N = int(integer("N"));
  m.min_measure = real("min_measure");
  m.base_measure = real("base_measure");
  m.unresolved = real("unresolved");
  {
    std::istringstream ss(kv("Z"));
    m.Z = r.runs(ss);
  }
  {
    std::istringstream ss(kv("Zp"));
    m.Zp = r.runs(ss);
  }
  {
    std::istringstream ss(kv("times"));
    m.times = r.ints(ss);
  }
  const long long K = integer("itineraries");
  for (long long j = 0; j < K; ++j) {
    std::istringstream ss(kv("itinerary" + std::to_string(j)));
    m.itineraries.push_back(r.ints(ss));
  }
  return m;
}

}  // namespace

void write_scheme(std::ostream& os, const InducingScheme& s) {
  os << kMagic << '\n' << "[manifest]\n";
  for (const auto& [k, v] : manifest_lines(s.manifest)) os << k << " = " << v << '\n';
  os << "[nodes] " << s.nodes.size() << '\n';
  for (const auto& n : s.nodes) {
    os << n.time << ' ' << num(n.mass) << ' ' << n.parents.size();
    for (const auto& e : n.parents) os << ' ' << e.parent << ' ' << e.branch << ' ' << num(e.mass);
    os << ' ' << runs_text(n.domain.runs()) << '\n';
  }
  os << "[groups] " << s.groups.size() << '\n';
  for (const auto& g : s.groups)
    os << g.node << ' ' << g.element << ' ' << g.tau << ' ' << num(g.mass) << ' ' << g.tag << '\n';
  os << "[rounds] " << s.rounds.size() << '\n';
  for (const auto& r : s.rounds)
    os << r.round << ' ' << r.time << ' ' << r.extension << ' ' << r.live_pairs << ' ' << num(r.properness) << ' '
       << num(r.stopped) << ' ' << num(r.remainder) << ' ' << num(r.ratio) << ' ' << num(r.remainder_properness) << ' '
       << num(r.regular_fraction) << '\n';
  os << "[tail]\n";
  write_tail(os, s.tail);
  write_fit(os, s.fit);
  const auto& u = s.upgrade;
  os << "[upgrade]\n";
  os << "upgrade " << u.z << ' ' << u.samples << ' ' << u.lost << ' ' << num(u.mean_steps) << ' ' << num(u.tau1_mass)
     << '\n';
  write_tail(os, u.tail);
  write_fit(os, u.fit);
  os << "realized " << ints_text(u.realized) << '\n';
  os << "composites " << u.composites.size() << '\n';
  for (const auto& c : u.composites) {
    os << "composite " << c.tau_tilde << ' ' << c.steps.size() << '\n';
    for (const auto& st : c.steps) {
      os << "step " << st.seed << ' ' << st.group << ' ' << st.path.size();
      for (const auto& p : st.path) os << ' ' << p.node << ' ' << p.branch;
      os << '\n';
    }
  }
  os << "[end]\n";
}

InducingScheme read_scheme(std::istream& is, GridPtr grid) {
  Reader r(is);
  r.expect(kMagic);
  InducingScheme s;
  s.manifest = parse_manifest(r);
  auto section = [&](const std::string& name) {
    auto ss = r.tokens(name);
    return r.get<std::size_t>(ss);
  };
  s.nodes.resize(section("[nodes]"));
  for (auto& n : s.nodes) {
    auto ss = r.tokens("");
    n.time = r.get<int>(ss);
    n.mass = r.real(ss);
    n.parents.resize(r.get<std::size_t>(ss));
    for (auto& e : n.parents) {
      e.parent = r.get<int>(ss);
      e.branch = r.get<int>(ss);
      e.mass = r.real(ss);
    }
    n.domain = Region::from_runs(grid, r.runs(ss));
  }
  s.groups.resize(section("[groups]"));
  for (auto& g : s.groups) {
    auto ss = r.tokens("");
    g.node = r.get<int>(ss);
    g.element = r.get<int>(ss);
    g.tau = r.get<int>(ss);
    g.mass = r.real(ss);
    g.tag = r.get<int>(ss);
  }
  s.rounds.resize(section("[rounds]"));
  for (auto& x : s.rounds) {
    auto ss = r.tokens("");
    x.round = r.get<int>(ss);
    x.time = r.get<int>(ss);
    x.extension = r.get<int>(ss);
    x.live_pairs = r.get<int>(ss);
    x.properness = r.real(ss);
    x.stopped = r.real(ss);
    x.remainder = r.real(ss);
    x.ratio = r.real(ss);
    x.remainder_properness = r.real(ss);
    x.regular_fraction = r.real(ss);
  }
  r.expect("[tail]");
  s.tail = r.tail();
  s.fit = r.fit();
  r.expect("[upgrade]");
  auto& u = s.upgrade;
  {
    auto ss = r.tokens("upgrade");
    u.z = r.get<int>(ss);
    u.samples = r.get<int>(ss);
    u.lost = r.get<int>(ss);
    u.mean_steps = r.real(ss);
    u.tau1_mass = r.real(ss);
  }
  u.tail = r.tail();
  u.fit = r.fit();
  {
    auto ss = r.tokens("realized");
    u.realized = r.ints(ss);
  }
  {
    auto ss = r.tokens("composites");
    u.composites.resize(r.get<std::size_t>(ss));
  }
  for (auto& c : u.composites) {
    auto ss = r.tokens("composite");
    c.tau_tilde = r.get<int>(ss);
    c.steps.resize(r.get<std::size_t>(ss));
    for (auto& st : c.steps) {
      auto ls = r.tokens("step");
      st.seed = r.get<int>(ls);
      st.group = r.get<int>(ls);
      st.path.resize(r.get<std::size_t>(ls));
      for (auto& p : st.path) {
        p.node = r.get<int>(ls);
        p.branch = r.get<int>(ls);
      }
    }
  }
  r.expect("[end]");
  return s;
}

void save_scheme(const std::string& path, const InducingScheme& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorClass::config, "cannot-write", path);
  write_scheme(os, s);
  if (!os) throw Error(ErrorClass::config, "cannot-write", path);
}

InducingScheme load_scheme(const std::string& path, GridPtr grid) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorClass::config, "cannot-read", path);
  return read_scheme(is, std::move(grid));
}

Manifest read_manifest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorClass::config, "cannot-read", path);
  Reader r(is);
  r.expect(kMagic);
  return parse_manifest(r);
}

}  // namespace inducer
