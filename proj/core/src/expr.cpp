#include "minlp/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numbers>

#include "minlp/lp.hpp"
#include "minlp/propagation.hpp"

namespace minlp {

const char* op_name(Op op) {
  switch (op) {
    case Op::Val: return "val";
    case Op::Var: return "var";
    case Op::Sum: return "sum";
    case Op::Prod: return "prod";
    case Op::Pow: return "pow";
    case Op::SignPower: return "signpower";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Entropy: return "entropy";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Abs: return "abs";
  }
  return "?";
}

const char* curvature_name(Curvature c) {
  switch (c) {
    case Curvature::Linear: return "linear";
    case Curvature::Convex: return "convex";
    case Curvature::Concave: return "concave";
    case Curvature::Unknown: return "unknown";
  }
  return "?";
}

namespace {

template <class T>
void put(std::string& s, const T& v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  s.append(buf, sizeof(T));
}

std::string fingerprint(const ExprNode& n) {
  std::string s;
  s.reserve(16 + n.children.size() * 12);
  s.push_back(static_cast<char>(n.op));
  put(s, n.var);
  // canonicalize -0.0 so that structurally equal constants share a node
  double c = n.constant == 0.0 ? 0.0 : n.constant;
  put(s, c);
  put(s, n.exponent);
  for (size_t i = 0; i < n.children.size(); ++i) {
    put(s, n.children[i]);
    if (!n.coefs.empty()) put(s, n.coefs[i]);
  }
  return s;
}

bool is_int(double v) { return is_integer_value(v) && std::fabs(v) < 1e9; }

}  // namespace

NodeId ExprDag::intern(ExprNode&& n) {
  std::string key = fingerprint(n);
  auto it = cse_index_.find(key);
  if (it != cse_index_.end()) return it->second;
  NodeId id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(std::move(n));
  cse_index_.emplace(std::move(key), id);
  return id;
}

NodeId ExprDag::val(double v) {
  ExprNode n;
  n.op = Op::Val;
  n.constant = v == 0.0 ? 0.0 : v;
  return intern(std::move(n));
}

NodeId ExprDag::var(int index) {
  ExprNode n;
  n.op = Op::Var;
  n.var = index;
  return intern(std::move(n));
}

NodeId ExprDag::sum(double a0, std::vector<std::pair<double, NodeId>> terms) {
  if (terms.empty()) return val(a0);
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  ExprNode n;
  n.op = Op::Sum;
  n.constant = a0;
  for (auto& [c, id] : terms) {
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size()) throw std::out_of_range("sum: bad child id");
    n.coefs.push_back(c);
    n.children.push_back(id);
  }
  return intern(std::move(n));
}

NodeId ExprDag::prod(double c, std::vector<NodeId> factors) {
  if (factors.empty()) return val(c);
  std::sort(factors.begin(), factors.end());
  for (NodeId id : factors)
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size()) throw std::out_of_range("prod: bad child id");
  ExprNode n;
  n.op = Op::Prod;
  n.constant = c;
  n.children = std::move(factors);
  return intern(std::move(n));
}

NodeId ExprDag::pow(NodeId base, double p) {
  if (base < 0 || static_cast<size_t>(base) >= nodes_.size()) throw std::out_of_range("pow: bad child id");
  ExprNode n;
  n.op = Op::Pow;
  n.children = {base};
  n.exponent = p;
  return intern(std::move(n));
}

NodeId ExprDag::signpower(NodeId base, double p) {
  if (!(p > 1.0)) throw ModelError("signpower exponent must exceed 1");
  if (base < 0 || static_cast<size_t>(base) >= nodes_.size()) throw std::out_of_range("signpower: bad child id");
  ExprNode n;
  n.op = Op::SignPower;
  n.children = {base};
  n.exponent = p;
  return intern(std::move(n));
}

NodeId ExprDag::unary(Op op, NodeId child) {
  switch (op) {
    case Op::Exp: case Op::Log: case Op::Entropy: case Op::Sin: case Op::Cos: case Op::Abs: break;
    default: throw std::invalid_argument("unary: not a unary operator");
  }
  if (child < 0 || static_cast<size_t>(child) >= nodes_.size()) throw std::out_of_range("unary: bad child id");
  ExprNode n;
  n.op = op;
  n.children = {child};
  return intern(std::move(n));
}

std::vector<NodeId> reachable(const ExprDag& dag, NodeId root, const std::vector<int>* stop) {
  std::vector<char> seen(static_cast<size_t>(root) + 1, 0);
  std::vector<NodeId> stack{root}, out;
  seen[static_cast<size_t>(root)] = 1;
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    out.push_back(id);
    if (id != root && stop && static_cast<size_t>(id) < stop->size() && (*stop)[static_cast<size_t>(id)] >= 0)
      continue;
    for (NodeId c : dag[id].children) {
      if (!seen[static_cast<size_t>(c)]) {
        seen[static_cast<size_t>(c)] = 1;
        stack.push_back(c);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> variables_of(const ExprDag& dag, NodeId root) {
  std::vector<int> vars;
  for (NodeId id : reachable(dag, root))
    if (dag[id].op == Op::Var) vars.push_back(dag[id].var);
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

double apply_unary(const ExprNode& n, double y) {
  switch (n.op) {
    case Op::Pow: {
      double p = n.exponent;
      if (!is_int(p) && y < 0) throw DomainError("fractional power of a negative number");
      if (p < 0 && y == 0.0) throw DomainError("negative power of zero");
      return std::pow(y, p);
    }
    case Op::SignPower: return y >= 0 ? std::pow(y, n.exponent) : -std::pow(-y, n.exponent);
    case Op::Exp: return std::exp(y);
    case Op::Log:
      if (!(y > 0)) throw DomainError("log of a non-positive number");
      return std::log(y);
    case Op::Entropy:
      if (y < 0) throw DomainError("entropy of a negative number");
      return y == 0.0 ? 0.0 : -y * std::log(y);
    case Op::Sin: return std::sin(y);
    case Op::Cos: return std::cos(y);
    case Op::Abs: return std::fabs(y);
    default: throw std::logic_error("apply_unary: not unary");
  }
}

double apply_unary_deriv(const ExprNode& n, double y) {
  switch (n.op) {
    case Op::Pow: {
      double p = n.exponent;
      if (p == 0.0) return 0.0;
      if (p == 1.0) return 1.0;
      return p * std::pow(y, p - 1.0);
    }
    case Op::SignPower: return n.exponent * std::pow(std::fabs(y), n.exponent - 1.0);
    case Op::Exp: return std::exp(y);
    case Op::Log: return 1.0 / y;
    case Op::Entropy: return y == 0.0 ? 0.0 : -std::log(y) - 1.0;
    case Op::Sin: return std::cos(y);
    case Op::Cos: return -std::sin(y);
    case Op::Abs: return y > 0 ? 1.0 : (y < 0 ? -1.0 : 0.0);
    default: throw std::logic_error("apply_unary_deriv: not unary");
  }
}

namespace {

double eval_node(const ExprNode& n, const std::vector<double>& v) {
  switch (n.op) {
    case Op::Val: return n.constant;
    case Op::Sum: {
      double s = n.constant;
      for (size_t j = 0; j < n.children.size(); ++j) s += n.coefs[j] * v[static_cast<size_t>(n.children[j])];
      return s;
    }
    case Op::Prod: {
      double p = n.constant;
      for (NodeId c : n.children) p *= v[static_cast<size_t>(c)];
      return p;
    }
    default: return apply_unary(n, v[static_cast<size_t>(n.children[0])]);
  }
}

}  // namespace

double eval(const ExprDag& dag, NodeId root, std::span<const double> point, Substitution sub) {
  auto order = reachable(dag, root, sub.aux_of_node);
  std::vector<double> v(static_cast<size_t>(root) + 1, 0.0);
  for (NodeId id : order) {
    const ExprNode& n = dag[id];
    int s = id != root ? sub.index(id) : -1;
    if (s >= 0) {
      v[static_cast<size_t>(id)] = point[static_cast<size_t>(s)];
    } else if (n.op == Op::Var) {
      v[static_cast<size_t>(id)] = point[static_cast<size_t>(n.var)];
    } else {
      v[static_cast<size_t>(id)] = eval_node(n, v);
    }
  }
  return v[static_cast<size_t>(root)];
}

GradResult grad(const ExprDag& dag, NodeId root, std::span<const double> point, Substitution sub) {
  auto order = reachable(dag, root, sub.aux_of_node);
  // leaf slots
  std::vector<int> leaf(static_cast<size_t>(root) + 1, -1);
  std::vector<int> index_of_slot;
  for (NodeId id : order) {
    int s = id != root ? sub.index(id) : -1;
    if (s < 0 && dag[id].op == Op::Var) s = dag[id].var;
    if (s >= 0) leaf[static_cast<size_t>(id)] = s;
  }
  for (NodeId id : order)
    if (leaf[static_cast<size_t>(id)] >= 0) index_of_slot.push_back(leaf[static_cast<size_t>(id)]);
  std::sort(index_of_slot.begin(), index_of_slot.end());
  index_of_slot.erase(std::unique(index_of_slot.begin(), index_of_slot.end()), index_of_slot.end());
  const size_t k = index_of_slot.size();
  auto slot_of = [&](int idx) {
    return static_cast<size_t>(std::lower_bound(index_of_slot.begin(), index_of_slot.end(), idx) - index_of_slot.begin());
  };

  std::vector<double> v(static_cast<size_t>(root) + 1, 0.0);
  std::vector<std::vector<double>> d(static_cast<size_t>(root) + 1);
  for (NodeId id : order) {
    const ExprNode& n = dag[id];
    auto& dv = d[static_cast<size_t>(id)];
    dv.assign(k, 0.0);
    int l = leaf[static_cast<size_t>(id)];
    if (l >= 0) {
      v[static_cast<size_t>(id)] = point[static_cast<size_t>(l)];
      dv[slot_of(l)] = 1.0;
      continue;
    }
    switch (n.op) {
      case Op::Val: v[static_cast<size_t>(id)] = n.constant; break;
      case Op::Sum: {
        double s = n.constant;
        for (size_t j = 0; j < n.children.size(); ++j) {
          auto c = static_cast<size_t>(n.children[j]);
          s += n.coefs[j] * v[c];
          for (size_t t = 0; t < k; ++t) dv[t] += n.coefs[j] * d[c][t];
        }
        v[static_cast<size_t>(id)] = s;
        break;
      }
      case Op::Prod: {
        const size_t m = n.children.size();
        std::vector<double> pre(m + 1, 1.0), suf(m + 1, 1.0);
        for (size_t j = 0; j < m; ++j) pre[j + 1] = pre[j] * v[static_cast<size_t>(n.children[j])];
        for (size_t j = m; j > 0; --j) suf[j - 1] = suf[j] * v[static_cast<size_t>(n.children[j - 1])];
        v[static_cast<size_t>(id)] = n.constant * pre[m];
        for (size_t j = 0; j < m; ++j) {
          double w = n.constant * pre[j] * suf[j + 1];
          if (w == 0.0) continue;
          auto c = static_cast<size_t>(n.children[j]);
          for (size_t t = 0; t < k; ++t) dv[t] += w * d[c][t];
        }
        break;
      }
      default: {
        auto c = static_cast<size_t>(n.children[0]);
        v[static_cast<size_t>(id)] = apply_unary(n, v[c]);
        double w = apply_unary_deriv(n, v[c]);
        for (size_t t = 0; t < k; ++t)
          if (d[c][t] != 0.0) dv[t] = w * d[c][t];
        break;
      }
    }
  }
  GradResult r;
  r.value = v[static_cast<size_t>(root)];
  for (size_t t = 0; t < k; ++t)
    if (d[static_cast<size_t>(root)][t] != 0.0) r.grad.emplace_back(index_of_slot[t], d[static_cast<size_t>(root)][t]);
  return r;
}

// ---------------------------------------------------------------- simplify

namespace {

NodeId simplify_rec(ExprDag& dag, NodeId id, std::unordered_map<NodeId, NodeId>& memo);

NodeId simplify_pow(ExprDag& dag, NodeId s, double p, std::unordered_map<NodeId, NodeId>& memo) {
  if (p == 0.0) return dag.val(1.0);
  if (p == 1.0) return s;
  const ExprNode sn = dag[s];
  if (sn.op == Op::Val) {
    ExprNode tmp;
    tmp.op = Op::Pow;
    tmp.exponent = p;
    try {
      return dag.val(apply_unary(tmp, sn.constant));
    } catch (const DomainError&) {
      return dag.pow(s, p);
    }
  }
  if (is_int(p)) {
    if (sn.op == Op::Pow && is_int(sn.exponent)) return simplify_pow(dag, sn.children[0], sn.exponent * p, memo);
    if (sn.op == Op::Prod) {
      std::vector<NodeId> fs;
      for (NodeId f : sn.children) fs.push_back(simplify_pow(dag, f, p, memo));
      return simplify_rec(dag, dag.prod(std::pow(sn.constant, p), fs), memo);
    }
    if (sn.op == Op::Sum && sn.constant == 0.0 && sn.children.size() == 1) {
      NodeId inner = simplify_pow(dag, sn.children[0], p, memo);
      return simplify_rec(dag, dag.prod(std::pow(sn.coefs[0], p), {inner}), memo);
    }
  }
  return dag.pow(s, p);
}

NodeId simplify_sum(ExprDag& dag, const ExprNode& n, std::unordered_map<NodeId, NodeId>& memo) {
  double a0 = n.constant;
  std::vector<std::pair<double, NodeId>> terms;
  for (size_t j = 0; j < n.children.size(); ++j) {
    double coef = n.coefs[j];
    NodeId s = simplify_rec(dag, n.children[j], memo);
    const ExprNode c = dag[s];
    if (c.op == Op::Val) {
      a0 += coef * c.constant;
    } else if (c.op == Op::Sum) {
      a0 += coef * c.constant;
      for (size_t k = 0; k < c.children.size(); ++k) terms.emplace_back(coef * c.coefs[k], c.children[k]);
    } else if (c.op == Op::Prod && c.constant != 1.0) {
      if (c.children.size() == 1)
        terms.emplace_back(coef * c.constant, c.children[0]);
      else
        terms.emplace_back(coef * c.constant, dag.prod(1.0, c.children));
    } else {
      terms.emplace_back(coef, s);
    }
  }
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<std::pair<double, NodeId>> merged;
  for (auto& t : terms) {
    if (!merged.empty() && merged.back().second == t.second)
      merged.back().first += t.first;
    else
      merged.push_back(t);
  }
  std::erase_if(merged, [](const auto& t) { return t.first == 0.0; });
  if (merged.empty()) return dag.val(a0);
  if (merged.size() == 1 && merged[0].first == 1.0 && a0 == 0.0) return merged[0].second;
  return dag.sum(a0, std::move(merged));
}

NodeId simplify_prod(ExprDag& dag, const ExprNode& n, std::unordered_map<NodeId, NodeId>& memo) {
  double c = n.constant;
  std::vector<NodeId> fs;
  std::function<void(NodeId)> push = [&](NodeId s) {
    const ExprNode f = dag[s];
    if (f.op == Op::Val) {
      c *= f.constant;
    } else if (f.op == Op::Prod) {
      c *= f.constant;
      for (NodeId g : f.children) fs.push_back(g);
    } else if (f.op == Op::Sum && f.constant == 0.0 && f.children.size() == 1) {
      c *= f.coefs[0];
      push(f.children[0]);
    } else {
      fs.push_back(s);
    }
  };
  for (NodeId ch : n.children) push(simplify_rec(dag, ch, memo));
  if (c == 0.0) return dag.val(0.0);
  // merge repeated bases with positive integer exponents
  std::map<NodeId, std::vector<double>> groups;
  std::vector<NodeId> order;
  for (NodeId f : fs) {
    const ExprNode& fn = dag[f];
    NodeId base = f;
    double e = 1.0;
    if (fn.op == Op::Pow && is_int(fn.exponent)) {
      base = fn.children[0];
      e = fn.exponent;
    }
    if (!groups.count(base)) order.push_back(base);
    groups[base].push_back(e);
  }
  std::vector<NodeId> out;
  for (NodeId base : order) {
    auto& es = groups[base];
    bool all_pos = std::all_of(es.begin(), es.end(), [](double e) { return e > 0; });
    if (es.size() > 1 && all_pos) {
      double tot = 0;
      for (double e : es) tot += e;
      out.push_back(simplify_pow(dag, base, tot, memo));
    } else {
      for (double e : es) out.push_back(e == 1.0 ? base : simplify_pow(dag, base, e, memo));
    }
  }
  // merged powers may have folded into constants
  std::vector<NodeId> final_fs;
  for (NodeId f : out) {
    if (dag[f].op == Op::Val)
      c *= dag[f].constant;
    else
      final_fs.push_back(f);
  }
  if (c == 0.0) return dag.val(0.0);
  if (final_fs.empty()) return dag.val(c);
  if (final_fs.size() == 1 && c == 1.0) return final_fs[0];
  return dag.prod(c, std::move(final_fs));
}

NodeId simplify_rec(ExprDag& dag, NodeId id, std::unordered_map<NodeId, NodeId>& memo) {
  if (auto it = memo.find(id); it != memo.end()) return it->second;
  const ExprNode n = dag[id];
  NodeId r = id;
  switch (n.op) {
    case Op::Val:
    case Op::Var: r = id; break;
    case Op::Sum: r = simplify_sum(dag, n, memo); break;
    case Op::Prod: r = simplify_prod(dag, n, memo); break;
    case Op::Pow: r = simplify_pow(dag, simplify_rec(dag, n.children[0], memo), n.exponent, memo); break;
    default: {
      NodeId s = simplify_rec(dag, n.children[0], memo);
      if (dag[s].op == Op::Val) {
        try {
          r = dag.val(apply_unary(n, dag[s].constant));
          break;
        } catch (const DomainError&) {
        }
      }
      r = n.op == Op::SignPower ? dag.signpower(s, n.exponent) : dag.unary(n.op, s);
      break;
    }
  }
  memo[id] = r;
  memo[r] = r;
  return r;
}

}  // namespace

NodeId simplify(ExprDag& dag, NodeId root, std::unordered_map<NodeId, NodeId>& memo) {
  return simplify_rec(dag, root, memo);
}

NodeId simplify(ExprDag& dag, NodeId root) {
  std::unordered_map<NodeId, NodeId> memo;
  return simplify_rec(dag, root, memo);
}

// ---------------------------------------------------------------- analysis

namespace {

// outward rounding turns exact zeros into tiny negatives; sign tests ignore that
Interval snap_zero(Interval a) {
  constexpr double tiny = 1e-100;
  if (std::fabs(a.lo) < tiny) a.lo = 0.0;
  if (std::fabs(a.hi) < tiny) a.hi = 0.0;
  return a;
}

}  // namespace

Curvature univariate_curvature(const ExprNode& n, Interval a) {
  a = snap_zero(a);
  if (a.is_empty()) return Curvature::Unknown;
  const double pi = std::numbers::pi;
  switch (n.op) {
    case Op::Pow: {
      double p = n.exponent;
      if (p == 1.0 || p == 0.0) return Curvature::Linear;
      if (is_int(p)) {
        long k = static_cast<long>(p);
        if (k > 0) {
          if (k % 2 == 0) return Curvature::Convex;
          if (a.lo >= 0) return Curvature::Convex;
          if (a.hi <= 0) return Curvature::Concave;
          return Curvature::Unknown;
        }
        if (a.lo > 0) return Curvature::Convex;
        if (a.hi < 0) return (k % 2 == 0) ? Curvature::Convex : Curvature::Concave;
        return Curvature::Unknown;
      }
      if (p > 1) return Curvature::Convex;
      if (p > 0) return Curvature::Concave;
      return Curvature::Convex;
    }
    case Op::SignPower:
      if (a.lo >= 0) return Curvature::Convex;
      if (a.hi <= 0) return Curvature::Concave;
      return Curvature::Unknown;
    case Op::Exp: return Curvature::Convex;
    case Op::Log: return Curvature::Concave;
    case Op::Entropy: return Curvature::Concave;
    case Op::Abs: return Curvature::Convex;
    case Op::Sin:
    case Op::Cos: {
      if (!a.bounded()) return Curvature::Unknown;
      // sin is concave on [2k pi, (2k+1) pi], convex on [(2k+1) pi, (2k+2) pi]
      double shift = n.op == Op::Cos ? 0.5 * pi : 0.0;
      double lo = a.lo + shift, hi = a.hi + shift;
      double k = std::floor(lo / pi);
      if (hi > (k + 1) * pi) return Curvature::Unknown;
      return (static_cast<long>(k) % 2 == 0) ? Curvature::Concave : Curvature::Convex;
    }
    default: return Curvature::Unknown;
  }
}

Monotonicity univariate_monotonicity(const ExprNode& n, Interval a) {
  a = snap_zero(a);
  if (a.is_empty()) return Monotonicity::Unknown;
  const double pi = std::numbers::pi;
  switch (n.op) {
    case Op::Pow: {
      double p = n.exponent;
      if (p == 0.0) return Monotonicity::Constant;
      if (is_int(p)) {
        long k = static_cast<long>(p);
        if (k > 0) {
          if (k % 2 == 1) return Monotonicity::Increasing;
          if (a.lo >= 0) return Monotonicity::Increasing;
          if (a.hi <= 0) return Monotonicity::Decreasing;
          return Monotonicity::Unknown;
        }
        if (a.lo > 0) return Monotonicity::Decreasing;
        if (a.hi < 0) return (k % 2 == 0) ? Monotonicity::Increasing : Monotonicity::Decreasing;
        return Monotonicity::Unknown;
      }
      return p > 0 ? Monotonicity::Increasing : Monotonicity::Decreasing;
    }
    case Op::SignPower:
    case Op::Exp:
    case Op::Log: return Monotonicity::Increasing;
    case Op::Entropy: {
      double peak = std::exp(-1.0);
      if (a.hi <= peak) return Monotonicity::Increasing;
      if (a.lo >= peak) return Monotonicity::Decreasing;
      return Monotonicity::Unknown;
    }
    case Op::Abs:
      if (a.lo >= 0) return Monotonicity::Increasing;
      if (a.hi <= 0) return Monotonicity::Decreasing;
      return Monotonicity::Unknown;
    case Op::Sin:
    case Op::Cos: {
      if (!a.bounded()) return Monotonicity::Unknown;
      // sin increasing on [-pi/2 + 2k pi, pi/2 + 2k pi]
      double shift = n.op == Op::Cos ? 0.5 * pi : 0.0;
      double lo = a.lo + shift + 0.5 * pi, hi = a.hi + shift + 0.5 * pi;
      double k = std::floor(lo / pi);
      if (hi > (k + 1) * pi) return Monotonicity::Unknown;
      return (static_cast<long>(k) % 2 == 0) ? Monotonicity::Increasing : Monotonicity::Decreasing;
    }
    default: return Monotonicity::Unknown;
  }
}

namespace {

Curvature scale(Curvature c, double s) {
  if (s == 0.0) return Curvature::Linear;
  if (s > 0) return c;
  if (c == Curvature::Convex) return Curvature::Concave;
  if (c == Curvature::Concave) return Curvature::Convex;
  return c;
}

Curvature combine(Curvature a, Curvature b) {
  if (a == Curvature::Linear) return b;
  if (b == Curvature::Linear) return a;
  if (a == b) return a;
  return Curvature::Unknown;
}

Curvature quadratic_curvature(const ExprDag& dag, NodeId id, Substitution sub) {
  auto q = detect_quadratic(dag, id, sub);
  if (!q || !q->pure_variables(dag, sub)) return Curvature::Unknown;
  const size_t k = q->terms.size();
  if (k > 16) return Curvature::Unknown;
  std::vector<double> m(k * k, 0.0);
  for (size_t i = 0; i < k; ++i) {
    m[i * k + i] = q->terms[i].a;
    for (auto [j, b] : q->terms[i].partners) {
      m[i * k + static_cast<size_t>(j)] += 0.5 * b;
      m[static_cast<size_t>(j) * k + i] += 0.5 * b;
    }
  }
  auto e = eig_sym(m, static_cast<int>(k));
  if (e.values.front() >= -1e-9) return Curvature::Convex;
  if (e.values.back() <= 1e-9) return Curvature::Concave;
  return Curvature::Unknown;
}

}  // namespace

Curvature curvature(const ExprDag& dag, NodeId root, const Box& box, Substitution sub) {
  auto order = reachable(dag, root, sub.aux_of_node);
  auto iv = forward_intervals(dag, order, box, sub);
  std::vector<Curvature> cv(static_cast<size_t>(root) + 1, Curvature::Unknown);
  for (NodeId id : order) {
    const ExprNode& n = dag[id];
    Curvature r = Curvature::Unknown;
    if ((id != root && sub.index(id) >= 0) || n.op == Op::Var || n.op == Op::Val) {
      r = Curvature::Linear;
    } else if (n.op == Op::Sum) {
      r = Curvature::Linear;
      for (size_t j = 0; j < n.children.size(); ++j)
        r = combine(r, scale(cv[static_cast<size_t>(n.children[j])], n.coefs[j]));
    } else if (n.op == Op::Prod) {
      r = n.children.size() == 1 ? scale(cv[static_cast<size_t>(n.children[0])], n.constant) : Curvature::Unknown;
    } else {
      auto c = static_cast<size_t>(n.children[0]);
      Curvature cf = univariate_curvature(n, iv[c]);
      Monotonicity mf = univariate_monotonicity(n, iv[c]);
      Curvature cg = cv[c];
      if (cg == Curvature::Linear) {
        r = cf;
      } else if (cf == Curvature::Linear) {
        r = cg;
      } else if (cf == Curvature::Convex && ((mf == Monotonicity::Increasing && cg == Curvature::Convex) ||
                                             (mf == Monotonicity::Decreasing && cg == Curvature::Concave))) {
        r = Curvature::Convex;
      } else if (cf == Curvature::Concave && ((mf == Monotonicity::Increasing && cg == Curvature::Concave) ||
                                              (mf == Monotonicity::Decreasing && cg == Curvature::Convex))) {
        r = Curvature::Concave;
      }
    }
    if (r == Curvature::Unknown && (n.op == Op::Sum || n.op == Op::Prod || n.op == Op::Pow))
      r = quadratic_curvature(dag, id, sub);
    cv[static_cast<size_t>(id)] = r;
  }
  return cv[static_cast<size_t>(root)];
}

Monotonicity monotonicity(const ExprDag& dag, NodeId parent, int slot, const Box& box, Substitution sub) {
  const ExprNode& n = dag[parent];
  if (slot < 0 || static_cast<size_t>(slot) >= n.children.size()) return Monotonicity::Unknown;
  if (n.op == Op::Sum) {
    double a = n.coefs[static_cast<size_t>(slot)];
    return a > 0 ? Monotonicity::Increasing : (a < 0 ? Monotonicity::Decreasing : Monotonicity::Constant);
  }
  auto child_range = [&](NodeId c) {
    int s = sub.index(c);
    if (s >= 0) return box[static_cast<size_t>(s)];
    return ieval(dag, c, box, sub);
  };
  if (n.op == Op::Prod) {
    Interval others = Interval::point(n.constant);
    for (size_t j = 0; j < n.children.size(); ++j)
      if (static_cast<int>(j) != slot) others = others * child_range(n.children[j]);
    if (others.is_empty()) return Monotonicity::Unknown;
    others = snap_zero(others);
    if (others.lo == 0.0 && others.hi == 0.0) return Monotonicity::Constant;
    if (others.lo >= 0) return Monotonicity::Increasing;
    if (others.hi <= 0) return Monotonicity::Decreasing;
    return Monotonicity::Unknown;
  }
  if (n.op == Op::Val || n.op == Op::Var) return Monotonicity::Unknown;
  return univariate_monotonicity(n, child_range(n.children[0]));
}

bool is_integral(const ExprDag& dag, NodeId root, const std::vector<bool>& integrality) {
  auto order = reachable(dag, root);
  std::vector<char> ok(static_cast<size_t>(root) + 1, 0);
  for (NodeId id : order) {
    const ExprNode& n = dag[id];
    auto child_ok = [&](NodeId c) { return ok[static_cast<size_t>(c)] != 0; };
    bool r = false;
    switch (n.op) {
      case Op::Val: r = is_integer_value(n.constant); break;
      case Op::Var: r = static_cast<size_t>(n.var) < integrality.size() && integrality[static_cast<size_t>(n.var)]; break;
      case Op::Sum:
        r = is_integer_value(n.constant) && std::all_of(n.coefs.begin(), n.coefs.end(), is_integer_value) &&
            std::all_of(n.children.begin(), n.children.end(), child_ok);
        break;
      case Op::Prod:
        r = is_integer_value(n.constant) && std::all_of(n.children.begin(), n.children.end(), child_ok);
        break;
      case Op::Pow:
      case Op::SignPower: r = is_int(n.exponent) && n.exponent >= 0 && child_ok(n.children[0]); break;
      case Op::Abs: r = child_ok(n.children[0]); break;
      default: r = false;
    }
    ok[static_cast<size_t>(id)] = r;
  }
  return ok[static_cast<size_t>(root)] != 0;
}

}  // namespace minlp
