#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "inducer/catalog.hpp"

namespace inducer {

namespace {

[[noreturn]] void fail(int line, int col, const std::string& msg) {
  throw Error(ErrorClass::config, "parse-error", "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
}

struct Expr {
  enum Kind { num, var, add, sub, mul, div, pow, neg } kind = num;
  double value = 0;
  int index = 0;
  std::shared_ptr<Expr> a, b;

  double eval(const Vec& x) const {
    switch (kind) {
      case num: return value;
      case var: return x[index];
      case add: return a->eval(x) + b->eval(x);
      case sub: return a->eval(x) - b->eval(x);
      case mul: return a->eval(x) * b->eval(x);
      case div: return a->eval(x) / b->eval(x);
      case pow: return std::pow(a->eval(x), value);
      case neg: return -a->eval(x);
    }
    return 0;
  }
  // Polynomial degree; -1 when not a polynomial.
  int degree() const {
    switch (kind) {
      case num: return 0;
      case var: return 1;
      case add:
      case sub: {
        int p = a->degree(), q = b->degree();
        return (p < 0 || q < 0) ? -1 : std::max(p, q);
      }
      case mul: {
        int p = a->degree(), q = b->degree();
        return (p < 0 || q < 0) ? -1 : p + q;
      }
      case div: return b->degree() == 0 ? a->degree() : -1;
      case pow: return a->degree() < 0 ? -1 : a->degree() * int(value);
      case neg: return a->degree();
    }
    return -1;
  }
};
using ExprPtr = std::shared_ptr<Expr>;

class Parser {
 public:
  Parser(const std::string& s, int line, int col0, int d) : s_(s), line_(line), col0_(col0), d_(d) {}

  std::vector<ExprPtr> list() {
    std::vector<ExprPtr> out{sum()};
    while (peek() == ',') {
      ++p_;
      out.push_back(sum());
    }
    if (peek() != 0) fail(line_, col(), std::string("unexpected '") + s_[p_] + "'");
    return out;
  }

 private:
  const std::string& s_;
  std::size_t p_ = 0;
  int line_, col0_, d_;

  int col() const { return col0_ + int(p_); }
  char peek() {
    while (p_ < s_.size() && std::isspace((unsigned char)s_[p_])) ++p_;
    return p_ < s_.size() ? s_[p_] : 0;
  }
  ExprPtr node(Expr::Kind k, ExprPtr a, ExprPtr b = nullptr) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->a = a;
    e->b = b;
    return e;
  }
  ExprPtr sum() {
    ExprPtr l = product();
    for (char c = peek(); c == '+' || c == '-'; c = peek()) {
      ++p_;
      l = node(c == '+' ? Expr::add : Expr::sub, l, product());
    }
    return l;
  }
  ExprPtr product() {
    ExprPtr l = unary();
    for (char c = peek(); c == '*' || c == '/'; c = peek()) {
      ++p_;
      int at = col();
      ExprPtr r = unary();
      if (c == '/' && r->degree() != 0) fail(line_, at, "division by a non-constant");
      l = node(c == '*' ? Expr::mul : Expr::div, l, r);
    }
    return l;
  }
  ExprPtr unary() {
    if (peek() == '-') {
      ++p_;
      return node(Expr::neg, unary());
    }
    if (peek() == '+') {
      ++p_;
      return unary();
    }
    return power();
  }
  ExprPtr power() {
    ExprPtr base = atom();
    if (peek() == '^') {
      ++p_;
      peek();
      int at = col();
      std::size_t used = 0;
      int k = -1;
      try {
        k = std::stoi(s_.substr(p_), &used);
      } catch (...) {
        fail(line_, at, "exponent must be a non-negative integer");
      }
      if (k < 0) fail(line_, at, "exponent must be a non-negative integer");
      p_ += used;
      auto e = node(Expr::pow, base);
      e->value = k;
      return e;
    }
    return base;
  }
  ExprPtr atom() {
    char c = peek();
    int at = col();
    if (c == '(') {
      ++p_;
      ExprPtr e = sum();
      if (peek() != ')') fail(line_, col(), "expected ')'");
      ++p_;
      return e;
    }
    if (std::isdigit((unsigned char)c) || c == '.') {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(s_.substr(p_), &used);
      } catch (...) {
        fail(line_, at, "bad number");
      }
      p_ += used;
      auto e = std::make_shared<Expr>();
      e->value = v;
      return e;
    }
    if (c == 'x' || c == 'y' || c == 'z') {
      int idx = c == 'x' ? 0 : (c == 'y' ? 1 : 2);
      if (idx >= d_) fail(line_, at, std::string("variable '") + c + "' exceeds the dimension");
      ++p_;
      if (p_ < s_.size() && std::isalnum((unsigned char)s_[p_])) fail(line_, col(), "unknown identifier");
      auto e = std::make_shared<Expr>();
      e->kind = Expr::var;
      e->index = idx;
      return e;
    }
    if (c == 0) fail(line_, at, "unexpected end of expression");
    fail(line_, at, std::string("unexpected '") + c + "'");
  }
};

struct Value {
  std::string text;
  int line = 0;
  int col = 0;
};

std::vector<double> numbers(const Value& v) {
  std::istringstream in(v.text);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw 0;
    } catch (...) {
      fail(v.line, v.col, "expected a number, got '" + tok + "'");
    }
  }
  return out;
}

double number(const Value& v) {
  auto n = numbers(v);
  if (n.size() != 1) fail(v.line, v.col, "expected one number");
  return n[0];
}

}  // namespace

MapPtr parse_map_spec(const std::string& text, double eta_override) {
  std::map<std::string, Value> top;
  std::vector<std::pair<Value, std::map<std::string, Value>>> branch_sections;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  std::map<std::string, Value>* cur = &top;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw.substr(0, raw.find('#'));
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    std::size_t b = s.find_last_not_of(" \t\r");
    std::string t = s.substr(a, b - a + 1);
    if (t.front() == '[') {
      if (t.back() != ']') fail(line, int(a + t.size()), "expected ']'");
      std::string inner = t.substr(1, t.size() - 2);
      if (inner.rfind("branch", 0) != 0) fail(line, int(a + 2), "unknown section '" + inner + "'");
      std::string id = inner.substr(6);
      id.erase(0, id.find_first_not_of(' '));
      if (id.empty()) id = std::to_string(branch_sections.size());
      branch_sections.push_back({Value{id, line, int(a + 1)}, {}});
      cur = &branch_sections.back().second;
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) fail(line, int(a + 1), "expected 'key = value'");
    std::string key = s.substr(a, eq - a);
    key.erase(key.find_last_not_of(" \t") + 1);
    std::size_t v0 = s.find_first_not_of(" \t", eq + 1);
    if (v0 == std::string::npos) fail(line, int(eq + 2), "missing value");
    std::string val = s.substr(v0);
    val.erase(val.find_last_not_of(" \t\r") + 1);
    if (cur->count(key)) fail(line, int(a + 1), "duplicate key '" + key + "'");
    (*cur)[key] = Value{val, line, int(v0 + 1)};
  }

  auto need = [&](const std::map<std::string, Value>& m, const std::string& k, int l) -> const Value& {
    auto it = m.find(k);
    if (it == m.end()) fail(l, 1, "missing key '" + k + "'");
    return it->second;
  };
  static const std::vector<std::string> known = {"name", "dimension", "box", "eta", "alpha", "Lambda", "Dtilde",
                                                 "n0", "sigma", "Cbar", "eps_exp", "eps_cplx", "a0", "P"};
  for (const auto& [k, v] : top)
    if (std::find(known.begin(), known.end(), k) == known.end()) fail(v.line, v.col, "unknown key '" + k + "'");

  auto m = std::make_shared<PiecewiseMap>();
  m->name = top.count("name") ? top["name"].text : "spec";
  const Value& dv = need(top, "dimension", line);
  int d = int(number(dv));
  if (d < 1 || d > 3) fail(dv.line, dv.col, "dimension must be 1, 2 or 3");
  const Value& bv = need(top, "box", line);
  auto box = numbers(bv);
  if (int(box.size()) != 2 * d) fail(bv.line, bv.col, "box needs lo hi per axis");
  Vec lo{0, 0, 0}, hi{0, 0, 0};
  for (int i = 0; i < d; ++i) {
    lo[i] = box[2 * i];
    hi[i] = box[2 * i + 1];
    if (!(hi[i] > lo[i])) fail(bv.line, bv.col, "empty box");
  }
  double eta = eta_override > 0 ? eta_override : number(need(top, "eta", line));
  m->ambient.grid = Grid::make(d, lo, hi, eta);
  m->ambient.space = Region::full(m->ambient.grid);
  auto opt = [&](const std::string& k, double def) { return top.count(k) ? number(top[k]) : def; };
  m->k.alpha = opt("alpha", 1);
  m->k.Lambda = number(need(top, "Lambda", line));
  m->k.Dtilde = opt("Dtilde", 0);
  m->k.n0 = int(opt("n0", 1));
  m->k.sigma = opt("sigma", 0);
  m->k.Cbar = opt("Cbar", 0);
  m->k.eps_exp = number(need(top, "eps_exp", line));
  m->k.eps_cplx = number(need(top, "eps_cplx", line));
  m->k.a0 = opt("a0", 0.1);
  m->k.P = opt("P", 64);
  // Static checks come before any branch is built.
  m->k.validate();

  if (branch_sections.empty()) fail(line, 1, "no [branch] sections");
  std::vector<Box> dom_lo_hi;
  std::vector<std::pair<Vec, Vec>> domains;
  for (auto& [idv, kv] : branch_sections) {
    static const std::vector<std::string> bk = {"domain", "forward", "inverse", "jacobian", "lambda"};
    for (const auto& [k, v] : kv)
      if (std::find(bk.begin(), bk.end(), k) == bk.end()) fail(v.line, v.col, "unknown key '" + k + "'");
    const Value& dom = need(kv, "domain", idv.line);
    auto dn = numbers(dom);
    if (int(dn.size()) != 2 * d) fail(dom.line, dom.col, "domain needs lo hi per axis");
    Vec dlo{0, 0, 0}, dhi{0, 0, 0};
    for (int i = 0; i < d; ++i) {
      dlo[i] = dn[2 * i];
      dhi[i] = dn[2 * i + 1];
    }
    auto parse = [&](const Value& v, std::size_t count) {
      auto e = Parser(v.text, v.line, v.col, d).list();
      if (e.size() != count)
        fail(v.line, v.col, "expected " + std::to_string(count) + " component(s), got " + std::to_string(e.size()));
      for (const auto& x : e)
        if (x->degree() < 0) fail(v.line, v.col, "expression is not a polynomial");
      return e;
    };
    auto fwd = parse(need(kv, "forward", idv.line), d);
    auto inv = parse(need(kv, "inverse", idv.line), d);
    auto jac = parse(need(kv, "jacobian", idv.line), 1)[0];
    double lam = kv.count("lambda") ? number(kv["lambda"]) : m->k.Lambda;

    Branch br;
    br.id = idv.text;
    br.lambda = lam;
    auto in_dom = [dlo, dhi, d](const Vec& x) {
      for (int i = 0; i < d; ++i)
        if (!(x[i] >= dlo[i] && x[i] < dhi[i])) return false;
      return true;
    };
    br.in_domain = in_dom;
    br.forward = [fwd, d](const Vec& x) {
      Vec y{0, 0, 0};
      for (int i = 0; i < d; ++i) y[i] = fwd[i]->eval(x);
      return y;
    };
    auto forward = br.forward;
    br.pull = [inv, jac, in_dom, forward, lo, hi, d](const Vec& y, Vec& x, double& J) {
      for (int i = 0; i < d; ++i)
        if (!(y[i] >= lo[i] && y[i] < hi[i])) return false;
      x = {0, 0, 0};
      for (int i = 0; i < d; ++i) x[i] = inv[i]->eval(y);
      if (!in_dom(x)) return false;
      Vec back = forward(x);
      for (int i = 0; i < d; ++i)
        if (std::abs(back[i] - y[i]) > 1e-9 * (1 + std::abs(y[i]))) return false;
      J = jac->eval(y);
      return true;
    };
    bool affine = true;
    for (const auto& e : fwd) affine = affine && e->degree() <= 1;
    if (affine) {
      Affine a;
      Vec z{0, 0, 0};
      for (int i = 0; i < d; ++i) a.c[i] = fwd[i]->eval(z);
      a.A = {0, 0, 0, 0, 0, 0, 0, 0, 0};
      for (int j = 0; j < d; ++j) {
        Vec ej{0, 0, 0};
        ej[j] = 1;
        for (int i = 0; i < d; ++i) a.A[3 * i + j] = fwd[i]->eval(ej) - a.c[i];
      }
      br.affine = a;
    }
    m->branches.push_back(br);
    domains.push_back({dlo, dhi});
  }
  m->branch_at = [domains, d, lo, hi](const Vec& x) {
    for (int i = 0; i < d; ++i)
      if (!(x[i] >= lo[i] && x[i] < hi[i])) return -1;
    for (std::size_t b = 0; b < domains.size(); ++b) {
      bool in = true;
      for (int i = 0; i < d; ++i) in = in && x[i] >= domains[b].first[i] && x[i] < domains[b].second[i];
      if (in) return int(b);
    }
    return -1;
  };
  // Branch domains must cover X up to the truncation tolerance.
  const auto& lab = m->labels();
  long long covered = 0;
  for (int l : lab) covered += l >= 0;
  m->unresolved_mass = double(m->ambient.space.count() - covered) * m->ambient.grid->cell_volume;
  if (m->unresolved_mass > 1e-6 * m->ambient.space.measure())
    throw Error(ErrorClass::config, "domains-incomplete",
                "branch domains leave " + std::to_string(m->unresolved_mass) + " of X uncovered");
  return m;
}

MapPtr load_map_spec(const std::string& path, double eta_override) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorClass::config, "unreadable", path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_map_spec(ss.str(), eta_override);
}

}  // namespace inducer
