#include "minlp/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "minlp/propagation.hpp"

namespace minlp {

ParseError::ParseError(const std::string& msg, int l, int c)
    : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " + msg), line(l), col(c) {}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "1e300" : "-1e300";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------- lexer

enum class Tok { Ident, Number, Sym, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double value = 0.0;
  int line = 1, col = 1;
};

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto adv = [&](size_t k) {
    for (size_t j = 0; j < k; ++j) {
      if (s[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      adv(1);
      continue;
    }
    if (c == '#') {
      while (i < s.size() && s[i] != '\n') adv(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_' || s[j] == '.')) ++j;
      t.kind = Tok::Ident;
      t.text = s.substr(i, j - i);
      out.push_back(t);
      adv(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      size_t j = i;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          j = k;
          while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        }
      }
      t.kind = Tok::Number;
      t.text = s.substr(i, j - i);
      auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.value);
      if (r.ec != std::errc() || r.ptr != t.text.data() + t.text.size())
        throw ParseError("malformed number '" + t.text + "'", line, col);
      out.push_back(t);
      adv(j - i);
      continue;
    }
    if ((c == '<' || c == '>') && i + 1 < s.size() && s[i + 1] == '=') {
      t.kind = Tok::Sym;
      t.text = s.substr(i, 2);
      out.push_back(t);
      adv(2);
      continue;
    }
    if (std::string("+-*/^(),;:").find(c) != std::string::npos) {
      t.kind = Tok::Sym;
      t.text = std::string(1, c);
      out.push_back(t);
      adv(1);
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
  }
  Token e;
  e.line = line;
  e.col = col;
  out.push_back(e);
  return out;
}

// ---------------------------------------------------------------- parser

// a0 + sum c_i * node_i
struct Lin {
  double a0 = 0.0;
  std::vector<std::pair<double, NodeId>> t;
  bool is_const() const { return t.empty(); }
};

class Parser {
 public:
  explicit Parser(const std::string& text) : toks_(lex(text)) {}
  Problem run();

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;
  Problem p_;
  std::map<std::string, int> names_;
  bool have_obj_ = false;
  bool obj_max_ = false;
  std::optional<Lin> obj_;
  Token obj_tok_;

  const Token& peek() const { return toks_[pos_]; }
  Token next() { return toks_[pos_++]; }
  bool is_sym(const char* s) const { return peek().kind == Tok::Sym && peek().text == s; }
  bool is_word(const char* s) const { return peek().kind == Tok::Ident && peek().text == s; }
  [[noreturn]] void fail(const std::string& msg, const Token& t) const { throw ParseError(msg, t.line, t.col); }
  void expect(const char* s) {
    if (!is_sym(s)) fail(std::string("expected '") + s + "'", peek());
    ++pos_;
  }
  std::string ident() {
    if (peek().kind != Tok::Ident) fail("expected a name", peek());
    return next().text;
  }
  double signed_number() {
    bool neg = false;
    if (is_sym("-")) {
      neg = true;
      ++pos_;
    } else if (is_sym("+")) {
      ++pos_;
    }
    if (peek().kind != Tok::Number) fail("expected a number", peek());
    double v = next().value;
    return neg ? -v : v;
  }

  void var_stmt();
  void obj_stmt(bool max);
  void con_stmt();

  NodeId node(const Lin& a);
  Lin leaf(NodeId n) { return Lin{0.0, {{1.0, n}}}; }
  Lin add(Lin a, const Lin& b, double s);
  Lin scale(Lin a, double s);
  Lin mul(const Lin& a, const Lin& b);
  Lin power(const Lin& base, double p, const Token& at);
  Lin call(const std::string& f, std::vector<Lin> args, const Token& at);

  Lin expr();
  Lin term();
  Lin unary();
  Lin pow_expr();
  Lin primary();
};

NodeId Parser::node(const Lin& a) {
  auto& d = p_.dag;
  if (a.t.empty()) return d.val(a.a0);
  if (a.a0 == 0.0 && a.t.size() == 1 && a.t[0].first == 1.0) return a.t[0].second;
  return d.sum(a.a0, a.t);
}

Lin Parser::add(Lin a, const Lin& b, double s) {
  a.a0 += s * b.a0;
  for (auto& [c, n] : b.t) {
    bool merged = false;
    for (auto& [c2, n2] : a.t)
      if (n2 == n) {
        c2 += s * c;
        merged = true;
        break;
      }
    if (!merged) a.t.push_back({s * c, n});
  }
  std::erase_if(a.t, [](auto& x) { return x.first == 0.0; });
  return a;
}

Lin Parser::scale(Lin a, double s) {
  if (s == 0.0) return Lin{};
  a.a0 *= s;
  for (auto& [c, n] : a.t) c *= s;
  return a;
}

Lin Parser::mul(const Lin& a, const Lin& b) {
  if (a.is_const()) return scale(b, a.a0);
  if (b.is_const()) return scale(a, b.a0);
  auto& d = p_.dag;
  auto flat = [&](NodeId n, std::vector<NodeId>& out) {
    if (d[n].op == Op::Prod && d[n].constant == 1.0)
      out.insert(out.end(), d[n].children.begin(), d[n].children.end());
    else
      out.push_back(n);
  };
  double c = 1.0;
  std::vector<NodeId> f;
  if (a.a0 == 0.0 && a.t.size() == 1) {
    c *= a.t[0].first;
    flat(a.t[0].second, f);
  } else {
    flat(node(a), f);
  }
  if (b.a0 == 0.0 && b.t.size() == 1) {
    c *= b.t[0].first;
    flat(b.t[0].second, f);
  } else {
    flat(node(b), f);
  }
  return scale(leaf(d.prod(1.0, std::move(f))), c);
}

Lin Parser::power(const Lin& base, double p, const Token& at) {
  bool fractional = p != std::floor(p);
  if (base.is_const()) {
    if (fractional && base.a0 < 0) fail("fractional power of a negative number", at);
    if (p < 0 && base.a0 == 0) fail("division by zero", at);
    return Lin{std::pow(base.a0, p), {}};
  }
  if (p == 0.0) return Lin{1.0, {}};
  if (p == 1.0) return base;
  NodeId b = node(base);
  if (fractional) {
    Interval r = ieval(p_.dag, b, p_.box());
    if (!(r.lo >= -1e-100)) fail("fractional power of a possibly negative expression", at);
  }
  return leaf(p_.dag.pow(b, p));
}

Lin Parser::call(const std::string& f, std::vector<Lin> args, const Token& at) {
  auto& d = p_.dag;
  auto arity = [&](size_t n) {
    if (args.size() != n) fail(f + " takes " + std::to_string(n) + " argument(s)", at);
  };
  if (f == "sqrt") {
    arity(1);
    return power(args[0], 0.5, at);
  }
  if (f == "signpower") {
    arity(2);
    if (!args[1].is_const()) fail("signpower exponent must be a number", at);
    double q = args[1].a0;
    if (!(q > 0)) fail("signpower exponent must be positive", at);
    if (args[0].is_const()) {
      double v = args[0].a0;
      return Lin{(v < 0 ? -1.0 : 1.0) * std::pow(std::fabs(v), q), {}};
    }
    return leaf(d.signpower(node(args[0]), q));
  }
  static const std::map<std::string, Op> unary_ops{{"exp", Op::Exp}, {"log", Op::Log},     {"abs", Op::Abs},
                                                   {"sin", Op::Sin}, {"cos", Op::Cos},     {"entropy", Op::Entropy}};
  auto it = unary_ops.find(f);
  if (it == unary_ops.end()) fail("unknown function '" + f + "'", at);
  arity(1);
  if (args[0].is_const()) {
    ExprNode n;
    n.op = it->second;
    try {
      return Lin{apply_unary(n, args[0].a0), {}};
    } catch (const DomainError&) {
      fail(f + " outside its domain", at);
    }
  }
  return leaf(d.unary(it->second, node(args[0])));
}

Lin Parser::expr() {
  Lin a = term();
  while (is_sym("+") || is_sym("-")) {
    double s = next().text == "+" ? 1.0 : -1.0;
    a = add(std::move(a), term(), s);
  }
  return a;
}

Lin Parser::term() {
  Lin a = unary();
  while (is_sym("*") || is_sym("/")) {
    Token op = next();
    Lin b = unary();
    if (op.text == "*") {
      a = mul(a, b);
    } else {
      if (b.is_const() && b.a0 == 0.0) fail("division by zero", op);
      a = b.is_const() ? scale(a, 1.0 / b.a0) : mul(a, power(b, -1.0, op));
    }
  }
  return a;
}

Lin Parser::unary() {
  if (is_sym("-")) {
    ++pos_;
    return scale(unary(), -1.0);
  }
  if (is_sym("+")) {
    ++pos_;
    return unary();
  }
  return pow_expr();
}

Lin Parser::pow_expr() {
  Lin base = primary();
  if (!is_sym("^")) return base;
  Token at = next();
  Lin e = unary();  // right associative, allows x^-1
  if (!e.is_const()) fail("exponent must be a number", at);
  return power(base, e.a0, at);
}

Lin Parser::primary() {
  const Token& t = peek();
  if (t.kind == Tok::Number) return Lin{next().value, {}};
  if (is_sym("(")) {
    ++pos_;
    Lin e = expr();
    expect(")");
    return e;
  }
  if (t.kind == Tok::Ident) {
    Token id = next();
    if (is_sym("(")) {
      ++pos_;
      std::vector<Lin> args;
      if (!is_sym(")")) {
        args.push_back(expr());
        while (is_sym(",")) {
          ++pos_;
          args.push_back(expr());
        }
      }
      expect(")");
      return call(id.text, std::move(args), id);
    }
    auto it = names_.find(id.text);
    if (it == names_.end()) fail("unknown variable '" + id.text + "'", id);
    return leaf(p_.dag.var(it->second));
  }
  fail("expected an expression", t);
}

void Parser::var_stmt() {
  Token at = peek();
  std::string name = ident();
  if (names_.count(name)) fail("duplicate variable '" + name + "'", at);
  double lb = -kInf, ub = kInf;
  VarType type = VarType::Continuous;
  while (!is_sym(";")) {
    if (is_sym(">=")) {
      ++pos_;
      lb = signed_number();
    } else if (is_sym("<=")) {
      ++pos_;
      ub = signed_number();
    } else if (is_word("int")) {
      ++pos_;
      type = VarType::Integer;
    } else if (is_word("bin")) {
      ++pos_;
      type = VarType::Binary;
    } else {
      fail("unexpected token in variable declaration", peek());
    }
  }
  expect(";");
  if (type == VarType::Binary) {
    lb = std::max(lb, 0.0);
    ub = std::min(ub, 1.0);
  }
  if (lb > ub) fail("empty bounds for '" + name + "'", at);
  names_[name] = p_.add_var(name, lb, ub, type);
}

void Parser::obj_stmt(bool max) {
  if (have_obj_) fail("second objective", peek());
  have_obj_ = true;
  obj_max_ = max;
  obj_tok_ = peek();
  obj_ = expr();
  expect(";");
}

void Parser::con_stmt() {
  Token at = peek();
  std::string name = ident();
  expect(":");
  Lin e1 = expr();
  Lin body;
  double lo = -kInf, hi = kInf;
  if (is_sym("<=")) {
    Token op = next();
    Lin e2 = expr();
    if (is_sym("<=")) {
      Token op2 = next();
      Lin e3 = expr();
      if (!e1.is_const()) fail("left bound must be a number", at);
      if (!e3.is_const()) fail("right bound must be a number", op2);
      lo = e1.a0;
      body = e2;
      hi = e3.a0;
    } else if (e1.is_const() && !e2.is_const()) {
      lo = e1.a0;
      body = e2;
    } else if (e2.is_const()) {
      body = e1;
      hi = e2.a0;
    } else {
      fail("bound must be a number", op);
    }
  } else {
    body = e1;
  }
  expect(";");
  auto& d = p_.dag;
  NodeId root = simplify(d, node(body));
  if (auto aff = as_affine(d, root)) {
    p_.add_linear(name, aff->second, lo - aff->first, hi - aff->first);
  } else {
    p_.add_nonlinear(name, root, lo, hi);
  }
}

Problem Parser::run() {
  while (peek().kind != Tok::End) {
    Token kw = peek();
    if (kw.kind != Tok::Ident) fail("expected var, min, max or con", kw);
    ++pos_;
    if (kw.text == "var")
      var_stmt();
    else if (kw.text == "min" || kw.text == "max")
      obj_stmt(kw.text == "max");
    else if (kw.text == "con")
      con_stmt();
    else
      fail("expected var, min, max or con", kw);
  }
  p_.obj.assign(p_.vars.size(), 0.0);
  p_.maximize = obj_max_;
  if (obj_) {
    auto& d = p_.dag;
    NodeId f = simplify(d, node(*obj_));
    if (auto aff = as_affine(d, f)) {
      p_.obj_offset = aff->first;
      for (auto& t : aff->second) p_.obj[static_cast<size_t>(t.var)] += t.coef;
    } else {
      p_.set_objective_expr(f, obj_max_);
    }
  }
  return std::move(p_);
}

// ---------------------------------------------------------------- printer

int prec(const ExprNode& n) {
  switch (n.op) {
    case Op::Sum: return 1;
    case Op::Prod: return 2;
    case Op::Pow: return 3;
    case Op::Val: return n.constant < 0 ? 0 : 4;
    default: return 4;
  }
}

struct Printer {
  const Problem& p;
  std::string operator()(NodeId id) const {
    const auto& n = p.dag[id];
    auto wrap = [&](NodeId c, int need) {
      std::string s = (*this)(c);
      return prec(p.dag[c]) < need ? "(" + s + ")" : s;
    };
    switch (n.op) {
      case Op::Val: return num(n.constant);
      case Op::Var: return p.vars[static_cast<size_t>(n.var)].name;
      case Op::Sum: {
        std::string s;
        if (n.constant != 0.0) s = num(n.constant);
        for (size_t i = 0; i < n.children.size(); ++i) {
          double c = n.coefs[i];
          std::string body = wrap(n.children[i], 2);
          double m = std::fabs(c);
          std::string t = m == 1.0 ? body : num(m) + "*" + body;
          if (s.empty())
            s = c < 0 ? "-" + t : t;
          else
            s += (c < 0 ? " - " : " + ") + t;
        }
        return s.empty() ? "0" : s;
      }
      case Op::Prod: {
        std::string s;
        for (NodeId c : n.children) s += (s.empty() ? "" : "*") + wrap(c, 3);
        if (n.constant == 1.0) return s;
        if (n.constant == -1.0) return "-" + s;
        return n.constant < 0 ? "-" + num(-n.constant) + "*" + s : num(n.constant) + "*" + s;
      }
      case Op::Pow: {
        std::string e = n.exponent < 0 ? "(" + num(n.exponent) + ")" : num(n.exponent);
        return wrap(n.children[0], 4) + "^" + e;
      }
      case Op::SignPower: return "signpower(" + (*this)(n.children[0]) + ", " + num(n.exponent) + ")";
      default: return std::string(op_name(n.op)) + "(" + (*this)(n.children[0]) + ")";
    }
  }
};

std::string sides(double lo, double hi, const std::string& body) {
  std::string s;
  if (std::isfinite(lo)) s += num(lo) + " <= ";
  s += body;
  if (std::isfinite(hi)) s += " <= " + num(hi);
  return s;
}

std::string linear_body(const Problem& p, const std::vector<LinearTerm>& terms, double offset) {
  std::string s;
  if (offset != 0.0) s = num(offset);
  for (auto& t : terms) {
    if (t.coef == 0.0) continue;
    double m = std::fabs(t.coef);
    std::string v = p.vars[static_cast<size_t>(t.var)].name;
    std::string body = m == 1.0 ? v : num(m) + "*" + v;
    if (s.empty())
      s = t.coef < 0 ? "-" + body : body;
    else
      s += (t.coef < 0 ? " - " : " + ") + body;
  }
  return s.empty() ? "0" : s;
}

}  // namespace

Problem parse_model(const std::string& text) { return Parser(text).run(); }

std::string print_model(const Problem& p) {
  std::ostringstream o;
  Printer pr{p};
  for (size_t j = 0; j < p.vars.size(); ++j) {
    if (static_cast<int>(j) == p.objective_var) continue;
    const auto& v = p.vars[j];
    o << "var " << v.name;
    bool bin = v.type == VarType::Binary;
    if (std::isfinite(v.lb) && !(bin && v.lb == 0.0)) o << " >= " << num(v.lb);
    if (std::isfinite(v.ub) && !(bin && v.ub == 1.0)) o << " <= " << num(v.ub);
    if (bin)
      o << " bin";
    else if (v.type == VarType::Integer)
      o << " int";
    o << ";\n";
  }
  o << (p.maximize ? "max " : "min ");
  if (p.objective_var >= 0 && p.objective_expr >= 0) {
    o << pr(p.objective_expr);
  } else {
    std::vector<LinearTerm> t;
    for (size_t j = 0; j < p.obj.size(); ++j)
      if (p.obj[j] != 0.0) t.push_back({static_cast<int>(j), p.obj[j]});
    o << linear_body(p, t, p.obj_offset);
  }
  o << ";\n";
  for (auto& r : p.linear) o << "con " << r.name << ": " << sides(r.lo, r.hi, linear_body(p, r.terms, 0.0)) << ";\n";
  for (auto& r : p.nonlinear) {
    if (p.objective_var >= 0 && r.name == "_objcons") continue;
    o << "con " << r.name << ": " << sides(r.lo, r.hi, pr(r.root)) << ";\n";
  }
  return o.str();
}

std::vector<double> parse_solution(const Problem& p, const std::string& text) {
  std::vector<double> x(p.vars.size(), 0.0);
  std::istringstream in(text);
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    auto h = line.find('#');
    if (h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string name, value;
    if (!(ls >> name)) continue;
    if (!(ls >> value)) throw ParseError("missing value for '" + name + "'", ln, 1);
    int j = p.find_var(name);
    if (j < 0) throw ParseError("unknown variable '" + name + "'", ln, 1);
    double v;
    auto r = std::from_chars(value.data(), value.data() + value.size(), v);
    if (r.ec != std::errc() || r.ptr != value.data() + value.size()) {
      if (value == "inf" || value == "-inf")
        v = value[0] == '-' ? -kInf : kInf;
      else
        throw ParseError("malformed value '" + value + "'", ln, static_cast<int>(line.find(value)) + 1);
    }
    x[static_cast<size_t>(j)] = v;
  }
  return x;
}

std::string print_solution(const Problem& p, std::span<const double> x) {
  std::string s;
  for (size_t j = 0; j < p.vars.size() && j < x.size(); ++j) {
    if (static_cast<int>(j) == p.objective_var) continue;
    s += p.vars[j].name + " " + num(x[j]) + "\n";
  }
  return s;
}

CheckReport check_solution(const Problem& p, std::span<const double> x, double feastol) {
  std::vector<double> y(x.begin(), x.end());
  y.resize(p.vars.size(), 0.0);
  CheckReport r;
  if (p.objective_var >= 0 && p.objective_expr >= 0) {
    try {
      y[static_cast<size_t>(p.objective_var)] = eval(p.dag, p.objective_expr, y);
    } catch (const DomainError&) {
      r.violation.nonlinear = kInf;
      return r;
    }
  }
  r.violation = violations(p, y);
  r.pass = r.violation.max() <= feastol;
  return r;
}

}  // namespace minlp
