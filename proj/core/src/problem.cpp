#include "minlp/problem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace minlp {

int Problem::add_var(std::string name, double lb, double ub, VarType type) {
  if (type == VarType::Binary) {
    lb = std::max(lb, 0.0);
    ub = std::min(ub, 1.0);
  }
  vars.push_back({std::move(name), lb, ub, type});
  obj.push_back(0.0);
  return static_cast<int>(vars.size()) - 1;
}

int Problem::find_var(const std::string& name) const {
  for (size_t j = 0; j < vars.size(); ++j)
    if (vars[j].name == name) return static_cast<int>(j);
  return -1;
}

void Problem::set_objective_expr(NodeId f, bool max) {
  maximize = max;
  objective_expr = f;
  objective_var = add_var("_obj", -kInf, kInf);
  std::fill(obj.begin(), obj.end(), 0.0);
  obj[static_cast<size_t>(objective_var)] = 1.0;
  NodeId root = dag.sum(0.0, {{1.0, f}, {-1.0, dag.var(objective_var)}});
  if (max)
    add_nonlinear("_objcons", root, 0.0, kInf);
  else
    add_nonlinear("_objcons", root, -kInf, 0.0);
}

void Problem::add_linear(std::string name, std::vector<LinearTerm> terms, double lo, double hi) {
  linear.push_back({std::move(name), std::move(terms), lo, hi});
}

void Problem::add_nonlinear(std::string name, NodeId root, double lo, double hi) {
  nonlinear.push_back({std::move(name), root, lo, hi});
}

std::vector<bool> Problem::integrality() const {
  std::vector<bool> r(vars.size());
  for (size_t j = 0; j < vars.size(); ++j) r[j] = vars[j].integer();
  return r;
}

Box Problem::box() const {
  Box b(vars.size());
  for (size_t j = 0; j < vars.size(); ++j) b[j] = {vars[j].lb, vars[j].ub};
  return b;
}

double Problem::objective(std::span<const double> x) const {
  double v = obj_offset;
  for (size_t j = 0; j < obj.size() && j < x.size(); ++j) v += obj[j] * x[j];
  return v;
}

bool Problem::has_integers() const {
  return std::any_of(vars.begin(), vars.end(), [](const Variable& v) { return v.integer(); });
}

void Problem::synthesize_missing_bounds(double value) {
  for (size_t j = 0; j < vars.size(); ++j) {
    if (static_cast<int>(j) == objective_var) continue;
    auto& v = vars[j];
    if (std::isinf(v.lb)) {
      v.lb = -value;
      v.synthesized = true;
      bounds_synthesized = true;
    }
    if (std::isinf(v.ub)) {
      v.ub = value;
      v.synthesized = true;
      bounds_synthesized = true;
    }
  }
}

std::vector<Constraint> Problem::constraints() const {
  std::vector<Constraint> out;
  for (auto& r : linear) out.push_back({-1, r.terms, {r.lo, r.hi}});
  for (auto& r : nonlinear) out.push_back({r.root, {}, {r.lo, r.hi}});
  return out;
}

std::optional<std::pair<double, std::vector<LinearTerm>>> as_affine(const ExprDag& dag, NodeId root) {
  const auto& n = dag[root];
  std::map<int, double> acc;
  double a0 = 0.0;
  auto add_term = [&](double c, NodeId id) {
    const auto& t = dag[id];
    if (t.op == Op::Var) {
      acc[t.var] += c;
      return true;
    }
    if (t.op == Op::Val) {
      a0 += c * t.constant;
      return true;
    }
    if (t.op == Op::Prod && t.children.size() == 1 && dag[t.children[0]].op == Op::Var) {
      acc[dag[t.children[0]].var] += c * t.constant;
      return true;
    }
    return false;
  };
  if (n.op == Op::Sum) {
    a0 = n.constant;
    for (size_t i = 0; i < n.children.size(); ++i)
      if (!add_term(n.coefs[i], n.children[i])) return std::nullopt;
  } else if (!add_term(1.0, root)) {
    return std::nullopt;
  }
  std::vector<LinearTerm> terms;
  for (auto& [v, c] : acc)
    if (c != 0.0) terms.push_back({v, c});
  return std::make_pair(a0, std::move(terms));
}

namespace {

NodeId rebuild(ExprDag& dag, NodeId id, const std::vector<NodeId>& ch) {
  const ExprNode n = dag[id];
  switch (n.op) {
    case Op::Val:
    case Op::Var:
      return id;
    case Op::Sum: {
      std::vector<std::pair<double, NodeId>> t;
      for (size_t i = 0; i < ch.size(); ++i) t.push_back({n.coefs[i], ch[i]});
      return dag.sum(n.constant, std::move(t));
    }
    case Op::Prod:
      return dag.prod(n.constant, ch);
    case Op::Pow:
      return dag.pow(ch[0], n.exponent);
    case Op::SignPower:
      return dag.signpower(ch[0], n.exponent);
    default:
      return dag.unary(n.op, ch[0]);
  }
}

}  // namespace

NodeId substitute(ExprDag& dag, NodeId root, const std::function<NodeId(NodeId)>& repl,
                  std::unordered_map<NodeId, NodeId>& memo) {
  auto order = reachable(dag, root);
  for (NodeId id : order) {
    if (memo.count(id)) continue;
    NodeId r = repl(id);
    if (r < 0) {
      std::vector<NodeId> ch;
      bool same = true;
      for (NodeId c : dag[id].children) {
        NodeId m = memo.at(c);
        same = same && m == c;
        ch.push_back(m);
      }
      r = same ? id : rebuild(dag, id, ch);
    }
    memo[id] = r;
  }
  return simplify(dag, memo.at(root));
}

std::vector<double> TransformLog::to_original(std::span<const double> presolved) const {
  size_t n = std::min(presolved.size(), static_cast<size_t>(num_original));
  return {presolved.begin(), presolved.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::vector<double> TransformLog::to_presolved(std::span<const double> original) const {
  std::vector<double> x(original.begin(), original.end());
  int n = num_original;
  for (auto& l : products) n = std::max(n, l.z + 1);
  x.resize(static_cast<size_t>(n), 0.0);
  for (auto& l : products)
    x[static_cast<size_t>(l.z)] = x[static_cast<size_t>(l.x1)] * x[static_cast<size_t>(l.x2)];
  return x;
}

std::optional<Box> fbbt_sweep(const Problem& p, const Box& box, int max_rounds) {
  auto cons = p.constraints();
  auto integer = p.integrality();
  Box b = box;
  for (int round = 0; round < max_rounds; ++round) {
    Box before = b;
    for (auto& c : cons) {
      auto r = fbbt_constraint(p.dag, c, b, integer);
      if (!r) return std::nullopt;
      b = std::move(*r);
    }
    if (b == before) break;
  }
  return b;
}

namespace {

// Move rows whose expression turned affine into the linear part. Returns false
// when a constant row is violated.
bool affine_rows_to_linear(Problem& p) {
  std::vector<NonlinearRow> keep;
  for (auto& r : p.nonlinear) {
    auto aff = as_affine(p.dag, r.root);
    if (!aff) {
      keep.push_back(r);
      continue;
    }
    double lo = r.lo - aff->first, hi = r.hi - aff->first;
    if (aff->second.empty()) {
      double tol = 1e-9 * std::max(1.0, std::fabs(aff->first));
      if (lo > tol || hi < -tol) return false;
      continue;
    }
    p.add_linear(r.name, std::move(aff->second), lo, hi);
  }
  p.nonlinear = std::move(keep);
  return true;
}

bool substitute_fixed(Problem& p, TransformLog& log) {
  std::vector<int> fixed_now;
  for (size_t j = 0; j < p.vars.size(); ++j) {
    auto& v = p.vars[j];
    if (v.lb == v.ub && static_cast<int>(j) != p.objective_var) {
      if (std::find(log.fixed.begin(), log.fixed.end(), static_cast<int>(j)) == log.fixed.end()) {
        log.fixed.push_back(static_cast<int>(j));
      }
      fixed_now.push_back(static_cast<int>(j));
    }
  }
  if (fixed_now.empty()) return true;
  std::vector<bool> is_fixed(p.vars.size(), false);
  for (int j : fixed_now) is_fixed[static_cast<size_t>(j)] = true;

  std::unordered_map<NodeId, NodeId> memo;
  auto repl = [&](NodeId id) -> NodeId {
    const auto& n = p.dag[id];
    if (n.op == Op::Var && is_fixed[static_cast<size_t>(n.var)]) return p.dag.val(p.vars[static_cast<size_t>(n.var)].lb);
    return -1;
  };
  for (auto& r : p.nonlinear) r.root = substitute(p.dag, r.root, repl, memo);

  for (auto& r : p.linear) {
    std::vector<LinearTerm> keep;
    double shift = 0.0;
    for (auto& t : r.terms) {
      if (is_fixed[static_cast<size_t>(t.var)])
        shift += t.coef * p.vars[static_cast<size_t>(t.var)].lb;
      else
        keep.push_back(t);
    }
    r.terms = std::move(keep);
    r.lo -= shift;
    r.hi -= shift;
  }
  for (int j : fixed_now) {
    p.obj_offset += p.obj[static_cast<size_t>(j)] * p.vars[static_cast<size_t>(j)].lb;
    p.obj[static_cast<size_t>(j)] = 0.0;
  }
  std::vector<LinearRow> keep;
  for (auto& r : p.linear) {
    if (r.terms.empty()) {
      if (r.lo > 1e-9 || r.hi < -1e-9) return false;
      continue;
    }
    keep.push_back(std::move(r));
  }
  p.linear = std::move(keep);
  return affine_rows_to_linear(p);
}

// a*y^2 + y*(terms without y) + rest, with the square coefficient a; nullopt
// when y enters in any other way.
std::optional<double> square_coefficient(const ExprDag& dag, NodeId root, int y) {
  auto contains = [&](NodeId id) {
    auto vs = variables_of(dag, id);
    return std::binary_search(vs.begin(), vs.end(), y);
  };
  auto term = [&](double c, NodeId id, double& a) {
    const auto& t = dag[id];
    if (!contains(id)) return true;
    if (t.op == Op::Var) return true;
    if (t.op == Op::Pow && t.exponent == 2.0 && dag[t.children[0]].op == Op::Var) {
      a += c;
      return true;
    }
    if (t.op == Op::Prod) {
      int hits = 0;
      for (NodeId f : t.children) {
        if (dag[f].op == Op::Var && dag[f].var == y)
          ++hits;
        else if (contains(f))
          return false;
      }
      if (hits == 1) return true;
      if (t.children.size() == 1 && hits == 1) return true;
      return false;
    }
    return false;
  };
  double a = 0.0;
  const auto& n = dag[root];
  if (n.op == Op::Sum) {
    for (size_t i = 0; i < n.children.size(); ++i)
      if (!term(n.coefs[i], n.children[i], a)) return std::nullopt;
  } else if (!term(1.0, root, a)) {
    return std::nullopt;
  }
  return a;
}

}  // namespace

std::vector<int> fix_to_bound_candidates(const Problem& p) {
  std::vector<int> count(p.vars.size(), 0);
  std::vector<int> where(p.vars.size(), -1);
  for (auto& r : p.linear)
    for (auto& t : r.terms) count[static_cast<size_t>(t.var)] += 1;
  for (size_t k = 0; k < p.nonlinear.size(); ++k)
    for (int v : variables_of(p.dag, p.nonlinear[k].root)) {
      count[static_cast<size_t>(v)] += 1;
      where[static_cast<size_t>(v)] = static_cast<int>(k);
    }
  std::vector<int> out;
  for (size_t j = 0; j < p.vars.size(); ++j) {
    const auto& v = p.vars[j];
    if (v.type != VarType::Continuous || v.bound_disjunction || v.synthesized) continue;
    if (!std::isfinite(v.lb) || !std::isfinite(v.ub) || v.lb >= v.ub) continue;
    if (p.obj[j] != 0.0 || static_cast<int>(j) == p.objective_var) continue;
    if (count[j] != 1 || where[j] < 0) continue;
    const auto& row = p.nonlinear[static_cast<size_t>(where[j])];
    if (row.name == "_objcons") continue;  // the objective in disguise
    auto a = square_coefficient(p.dag, row.root, static_cast<int>(j));
    if (!a) continue;
    bool convex_ok = *a >= 0.0 && std::isinf(row.hi);
    bool concave_ok = *a <= 0.0 && std::isinf(row.lo);
    if (convex_ok || concave_ok) out.push_back(static_cast<int>(j));
  }
  return out;
}

std::vector<ProductLink> linearize_binary_products(Problem& p) {
  std::vector<ProductLink> links;
  std::map<std::pair<int, int>, int> zof;
  auto is_bin = [&](NodeId id) {
    const auto& n = p.dag[id];
    return n.op == Op::Var && p.vars[static_cast<size_t>(n.var)].type == VarType::Binary;
  };
  std::unordered_map<NodeId, NodeId> memo;
  auto repl = [&](NodeId id) -> NodeId {
    const ExprNode n = p.dag[id];
    if (n.op == Op::Pow && n.exponent > 0.0 && is_bin(n.children[0])) return n.children[0];
    if (n.op == Op::Prod && n.children.size() == 2 && is_bin(n.children[0]) && is_bin(n.children[1])) {
      int a = p.dag[n.children[0]].var, b = p.dag[n.children[1]].var;
      if (a == b) return p.dag.sum(0.0, {{n.constant, n.children[0]}});
      auto key = std::minmax(a, b);
      auto it = zof.find(key);
      int z;
      if (it == zof.end()) {
        z = p.add_var("_prod_" + p.vars[static_cast<size_t>(key.first)].name + "_" +
                          p.vars[static_cast<size_t>(key.second)].name,
                      0.0, 1.0, VarType::Binary);
        zof[key] = z;
        links.push_back({z, key.first, key.second});
        p.add_linear("_lin_z1", {{z, 1.0}, {key.first, -1.0}}, -kInf, 0.0);
        p.add_linear("_lin_z2", {{z, 1.0}, {key.second, -1.0}}, -kInf, 0.0);
        p.add_linear("_lin_z3", {{z, 1.0}, {key.first, -1.0}, {key.second, -1.0}}, -1.0, kInf);
      } else {
        z = it->second;
      }
      return p.dag.sum(0.0, {{n.constant, p.dag.var(z)}});
    }
    return -1;
  };
  for (auto& r : p.nonlinear) r.root = substitute(p.dag, r.root, repl, memo);
  return links;
}

std::vector<SemiContInfo> detect_semicontinuous(const Problem& p) {
  struct Implied {
    double alpha, beta;
  };
  // implied bounds of x in terms of a binary y, keyed by (x, y)
  std::map<std::pair<int, int>, std::vector<Implied>> upper, lower;
  for (auto& r : p.linear) {
    if (r.terms.size() != 2) continue;
    for (int k = 0; k < 2; ++k) {
      const auto& tx = r.terms[static_cast<size_t>(k)];
      const auto& ty = r.terms[static_cast<size_t>(1 - k)];
      const auto& vx = p.vars[static_cast<size_t>(tx.var)];
      const auto& vy = p.vars[static_cast<size_t>(ty.var)];
      if (vx.integer() || vy.type != VarType::Binary) continue;
      // a x + b y in [lo, hi]  =>  x <= (hi - b y)/a for a > 0
      double a = tx.coef, b = ty.coef;
      auto key = std::make_pair(tx.var, ty.var);
      if (std::isfinite(r.hi)) (a > 0 ? upper : lower)[key].push_back({-b / a, r.hi / a});
      if (std::isfinite(r.lo)) (a > 0 ? lower : upper)[key].push_back({-b / a, r.lo / a});
    }
  }
  std::vector<SemiContInfo> out;
  std::map<std::pair<int, int>, bool> seen;
  auto consider = [&](const std::pair<int, int>& key) {
    if (seen[key]) return;
    seen[key] = true;
    const auto& vx = p.vars[static_cast<size_t>(key.first)];
    auto ups = upper[key];
    auto los = lower[key];
    if (std::isfinite(vx.ub)) ups.push_back({0.0, vx.ub});
    if (std::isfinite(vx.lb)) los.push_back({0.0, vx.lb});
    for (auto& u : ups)
      for (auto& l : los) {
        if (u.alpha == 0.0 && l.alpha == 0.0) continue;
        if (std::fabs(u.beta - l.beta) > 1e-9 * std::max(1.0, std::fabs(u.beta))) continue;
        Interval on{l.alpha + l.beta, u.alpha + u.beta};
        if (on.is_empty()) continue;
        out.push_back({key.first, key.second, u.beta, on});
        return;
      }
  };
  for (auto& [k, v] : upper) consider(k);
  for (auto& [k, v] : lower) consider(k);
  std::sort(out.begin(), out.end(), [](const SemiContInfo& a, const SemiContInfo& b) {
    return std::tie(a.var, a.indicator) < std::tie(b.var, b.indicator);
  });
  return out;
}

PresolveResult presolve(const Problem& input) {
  PresolveResult res;
  Problem& p = res.problem;
  p = input;
  res.log.num_original = static_cast<int>(input.vars.size());

  std::unordered_map<NodeId, NodeId> memo;
  for (auto& r : p.nonlinear) r.root = simplify(p.dag, r.root, memo);
  if (p.objective_expr >= 0) p.objective_expr = simplify(p.dag, p.objective_expr, memo);
  if (!affine_rows_to_linear(p)) {
    res.infeasible = true;
    return res;
  }
  for (auto& v : p.vars)
    if (v.integer()) {
      v.lb = std::ceil(v.lb - 1e-9);
      v.ub = std::floor(v.ub + 1e-9);
    }

  auto box = fbbt_sweep(p, p.box(), 10);
  if (!box) {
    res.infeasible = true;
    return res;
  }
  for (size_t j = 0; j < p.vars.size(); ++j) {
    auto iv = (*box)[j];
    if (iv.is_empty()) {
      res.infeasible = true;
      return res;
    }
    p.vars[j].lb = iv.lo;
    p.vars[j].ub = iv.hi;
  }
  if (!substitute_fixed(p, res.log)) {
    res.infeasible = true;
    return res;
  }

  for (int j : fix_to_bound_candidates(p)) {
    auto& v = p.vars[static_cast<size_t>(j)];
    if (v.lb == 0.0 && v.ub == 1.0) {
      v.type = VarType::Binary;
      res.log.made_binary.push_back(j);
    } else {
      v.bound_disjunction = true;
      res.log.disjunctions.push_back(j);
    }
  }

  res.log.products = linearize_binary_products(p);
  if (!affine_rows_to_linear(p)) res.infeasible = true;
  return res;
}

double constraint_value(const ExprDag& dag, const Constraint& c, std::span<const double> x) {
  double v = c.root >= 0 ? eval(dag, c.root, x) : 0.0;
  for (auto& t : c.linear) v += t.coef * x[static_cast<size_t>(t.var)];
  return v;
}

Violation violations(const Problem& p, std::span<const double> x) {
  Violation r;
  for (size_t j = 0; j < p.vars.size(); ++j) {
    const auto& v = p.vars[j];
    r.bounds = std::max({r.bounds, v.lb - x[j], x[j] - v.ub});
    if (v.integer()) r.integrality = std::max(r.integrality, std::fabs(x[j] - std::round(x[j])));
  }
  for (auto& row : p.linear) {
    double a = 0.0;
    for (auto& t : row.terms) a += t.coef * x[static_cast<size_t>(t.var)];
    r.linear = std::max({r.linear, row.lo - a, a - row.hi});
  }
  for (auto& row : p.nonlinear) {
    double a;
    try {
      a = eval(p.dag, row.root, x);
    } catch (const DomainError&) {
      a = std::nan("");
    }
    if (!std::isfinite(a)) {
      r.nonlinear = kInf;
      continue;
    }
    r.nonlinear = std::max({r.nonlinear, row.lo - a, a - row.hi});
  }
  return r;
}

}  // namespace minlp
