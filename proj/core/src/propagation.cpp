#include "minlp/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace minlp {

namespace {

// Sum of intervals with infinite parts tracked separately so that the
// contribution of a single term can be removed exactly.
struct Activity {
  double lo = 0.0, hi = 0.0;
  int ninf_lo = 0, ninf_hi = 0;

  void add(Interval t) {
    if (t.lo == -kInf) ++ninf_lo; else lo += t.lo;
    if (t.hi == kInf) ++ninf_hi; else hi += t.hi;
  }
  Interval total() const { return {ninf_lo ? -kInf : lo, ninf_hi ? kInf : hi}; }
  Interval without(Interval t) const {
    double l, h;
    if (t.lo == -kInf) l = ninf_lo > 1 ? -kInf : lo;
    else l = ninf_lo ? -kInf : lo - t.lo;
    if (t.hi == kInf) h = ninf_hi > 1 ? kInf : hi;
    else h = ninf_hi ? kInf : hi - t.hi;
    return {l, h};
  }
};

// Tighten iv[j] from sum_j coef_j * iv[j] in target. Returns false on empty.
bool linear_reverse(const std::vector<double>& coef, std::vector<Interval*>& iv, Interval target) {
  Activity act;
  std::vector<Interval> terms(coef.size());
  for (size_t j = 0; j < coef.size(); ++j) {
    terms[j] = coef[j] * *iv[j];
    if (terms[j].is_empty()) return false;
    act.add(terms[j]);
  }
  if (intersect(outward(act.total()), target).is_empty()) return false;
  for (size_t j = 0; j < coef.size(); ++j) {
    if (coef[j] == 0.0) continue;
    Interval rest = target - act.without(terms[j]);
    Interval v = outward((1.0 / coef[j]) * rest);
    *iv[j] = intersect(*iv[j], v);
    if (iv[j]->is_empty()) return false;
  }
  return true;
}

double root_pos(double v, double p) {  // v >= 0
  if (v == kInf) return kInf;
  return std::pow(v, 1.0 / p);
}

double signroot(double v, double p) {
  if (v == kInf) return kInf;
  if (v == -kInf) return -kInf;
  return v >= 0 ? std::pow(v, 1.0 / p) : -std::pow(-v, 1.0 / p);
}

// {y in child : |y| in mag} for a magnitude interval
Interval symmetric_preimage(Interval child, Interval mag) {
  mag = intersect(mag, {0.0, kInf});
  if (mag.is_empty()) return Interval::empty();
  Interval pos = intersect(child, mag);
  Interval neg = intersect(child, -mag);
  return hull(pos, neg);
}

double entropy_f(double y) { return y <= 0 ? 0.0 : -y * std::log(y); }

// preimage of t under a monotone f on [a, b] (finite a; b may be inf)
Interval monotone_preimage(double a, double b, bool increasing, Interval t) {
  auto f = entropy_f;
  if (b == kInf) b = 1e300;
  auto first_ge = [&](double target, bool inc) {  // smallest y with (inc ? f>=target : f<=target)
    double lo = a, hi = b;
    auto ok = [&](double y) { return inc ? f(y) >= target : f(y) <= target; };
    if (ok(lo)) return lo;
    if (!ok(hi)) return kInf;
    for (int it = 0; it < 200; ++it) {
      double m = 0.5 * (lo + hi);
      if (hi > 1e6 * std::max(1.0, lo)) m = std::sqrt(std::max(lo, 1e-300)) * std::sqrt(hi);
      if (ok(m)) hi = m; else lo = m;
    }
    return lo;
  };
  auto last_le = [&](double target, bool inc) {  // largest y with (inc ? f<=target : f>=target)
    double lo = a, hi = b;
    auto ok = [&](double y) { return inc ? f(y) <= target : f(y) >= target; };
    if (ok(hi)) return hi == 1e300 ? kInf : hi;
    if (!ok(lo)) return -kInf;
    for (int it = 0; it < 200; ++it) {
      double m = 0.5 * (lo + hi);
      if (hi > 1e6 * std::max(1.0, lo)) m = std::sqrt(std::max(lo, 1e-300)) * std::sqrt(hi);
      if (ok(m)) lo = m; else hi = m;
    }
    return hi;
  };
  double l, h;
  if (increasing) {
    l = t.lo == -kInf ? a : first_ge(t.lo, true);
    h = t.hi == kInf ? b : last_le(t.hi, true);
  } else {
    l = t.hi == kInf ? a : first_ge(t.hi, false);
    h = t.lo == -kInf ? b : last_le(t.lo, false);
  }
  if (h == 1e300) h = kInf;
  if (l > h) return Interval::empty();
  return outward({l, h});
}

bool is_int_exp(double p) { return is_integer_value(p) && std::fabs(p) < 1e9; }

}  // namespace

Interval node_interval(const ExprDag&, const ExprNode& n, const std::vector<Interval>& iv) {
  auto at = [&](NodeId c) { return iv[static_cast<size_t>(c)]; };
  switch (n.op) {
    case Op::Val: return Interval::point(n.constant);
    case Op::Var: return Interval::entire();
    case Op::Sum: {
      Activity act;
      for (size_t j = 0; j < n.children.size(); ++j) {
        Interval t = n.coefs[j] * at(n.children[j]);
        if (t.is_empty()) return Interval::empty();
        act.add(t);
      }
      return Interval::point(n.constant) + act.total();
    }
    case Op::Prod: {
      Interval r = Interval::point(n.constant);
      for (NodeId c : n.children) r = r * at(c);
      return r;
    }
    case Op::Pow: return pow(at(n.children[0]), n.exponent);
    case Op::SignPower: return signpower(at(n.children[0]), n.exponent);
    case Op::Exp: return exp(at(n.children[0]));
    case Op::Log: return log(at(n.children[0]));
    case Op::Entropy: return entropy(at(n.children[0]));
    case Op::Sin: return sin(at(n.children[0]));
    case Op::Cos: return cos(at(n.children[0]));
    case Op::Abs: return abs(at(n.children[0]));
  }
  return Interval::entire();
}

std::vector<Interval> forward_intervals(const ExprDag& dag, const std::vector<NodeId>& order, const Box& box,
                                        Substitution sub) {
  std::vector<Interval> iv(order.empty() ? 0 : static_cast<size_t>(order.back()) + 1, Interval::entire());
  NodeId root = order.empty() ? -1 : order.back();
  for (NodeId id : order) {
    const ExprNode& n = dag[id];
    int s = id != root ? sub.index(id) : -1;
    if (s >= 0)
      iv[static_cast<size_t>(id)] = box[static_cast<size_t>(s)];
    else if (n.op == Op::Var)
      iv[static_cast<size_t>(id)] = box[static_cast<size_t>(n.var)];
    else if (n.op == Op::Val)
      iv[static_cast<size_t>(id)] = Interval::point(n.constant);
    else
      iv[static_cast<size_t>(id)] = outward(node_interval(dag, n, iv));
  }
  return iv;
}

Interval ieval(const ExprDag& dag, NodeId root, const Box& box, Substitution sub) {
  auto order = reachable(dag, root, sub.aux_of_node);
  auto iv = forward_intervals(dag, order, box, sub);
  return iv[static_cast<size_t>(root)];
}

bool reverse_node(const ExprDag& dag, NodeId node, std::vector<Interval>& iv) {
  const ExprNode& n = dag[node];
  Interval t = iv[static_cast<size_t>(node)];
  if (t.is_empty()) return false;
  auto ref = [&](NodeId c) -> Interval& { return iv[static_cast<size_t>(c)]; };
  auto narrow = [&](NodeId c, Interval v) {
    Interval r = intersect(ref(c), outward(v));
    ref(c) = r;
    return !r.is_empty();
  };
  switch (n.op) {
    case Op::Val: return t.contains(n.constant);
    case Op::Var: return true;
    case Op::Sum: {
      std::vector<Interval*> ptr;
      for (NodeId c : n.children) ptr.push_back(&ref(c));
      // repeated children would alias; the DAG never repeats a child in a sum
      return linear_reverse(n.coefs, ptr, t - Interval::point(n.constant));
    }
    case Op::Prod: {
      for (size_t j = 0; j < n.children.size(); ++j) {
        Interval others = Interval::point(n.constant);
        for (size_t k = 0; k < n.children.size(); ++k)
          if (k != j) others = others * ref(n.children[k]);
        if (!narrow(n.children[j], t / others)) return false;
      }
      return true;
    }
    case Op::Pow: {
      NodeId c = n.children[0];
      double p = n.exponent;
      if (is_int_exp(p)) {
        long k = static_cast<long>(p);
        if (k == 0) return t.contains(1.0);
        Interval tt = t;
        if (k < 0) {
          tt = Interval::point(1.0) / t;  // y^|k| in 1/t
          k = -k;
        }
        if (k % 2 == 1) return narrow(c, {signroot(tt.lo, static_cast<double>(k)), signroot(tt.hi, static_cast<double>(k))});
        tt = intersect(tt, {0.0, kInf});
        if (tt.is_empty()) return false;
        Interval mag{root_pos(tt.lo, static_cast<double>(k)), root_pos(tt.hi, static_cast<double>(k))};
        Interval r = symmetric_preimage(ref(c), outward(mag));
        ref(c) = r;
        return !r.is_empty();
      }
      Interval tt = intersect(t, {0.0, kInf});
      if (tt.is_empty()) return false;
      Interval r;
      if (p > 0)
        r = {root_pos(tt.lo, p), root_pos(tt.hi, p)};
      else
        r = {tt.hi == kInf ? 0.0 : std::pow(tt.hi, 1.0 / p), tt.lo == 0.0 ? kInf : std::pow(tt.lo, 1.0 / p)};
      return narrow(c, intersect(r, {0.0, kInf}));
    }
    case Op::SignPower:
      return narrow(n.children[0], {signroot(t.lo, n.exponent), signroot(t.hi, n.exponent)});
    case Op::Exp: {
      Interval r = log(t);
      if (r.is_empty()) return false;
      return narrow(n.children[0], r);
    }
    case Op::Log: return narrow(n.children[0], exp(t));
    case Op::Entropy: {
      NodeId c = n.children[0];
      Interval dom = intersect(ref(c), {0.0, kInf});
      if (dom.is_empty()) return false;
      const double peak = std::exp(-1.0);
      Interval low = intersect(dom, {0.0, peak}), high = intersect(dom, {peak, kInf});
      Interval r = Interval::empty();
      if (!low.is_empty()) r = hull(r, intersect(low, monotone_preimage(low.lo, low.hi, true, t)));
      if (!high.is_empty()) r = hull(r, intersect(high, monotone_preimage(high.lo, high.hi, false, t)));
      ref(c) = intersect(ref(c), r);
      return !ref(c).is_empty();
    }
    case Op::Sin:
    case Op::Cos: return !intersect(t, {-1.0, 1.0}).is_empty();
    case Op::Abs: {
      NodeId c = n.children[0];
      Interval r = symmetric_preimage(ref(c), outward(t));
      ref(c) = r;
      return !r.is_empty();
    }
  }
  return true;
}

std::optional<Box> reverse_prop(const ExprDag& dag, NodeId root, Interval target, const Box& box, Substitution sub) {
  auto order = reachable(dag, root, sub.aux_of_node);
  auto iv = forward_intervals(dag, order, box, sub);
  auto& r = iv[static_cast<size_t>(root)];
  r = intersect(r, target);
  if (r.is_empty()) return std::nullopt;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeId id = *it;
    if (id != root && sub.index(id) >= 0) continue;
    if (!reverse_node(dag, id, iv)) return std::nullopt;
  }
  Box out = box;
  for (NodeId id : order) {
    int s = id != root ? sub.index(id) : -1;
    if (s < 0 && dag[id].op == Op::Var) s = dag[id].var;
    if (s < 0) continue;
    auto& b = out[static_cast<size_t>(s)];
    b = intersect(b, iv[static_cast<size_t>(id)]);
    if (b.is_empty()) return std::nullopt;
  }
  return out;
}

Interval accept_tightening(Interval old, Interval proposed, bool integer, bool* changed) {
  if (changed) *changed = false;
  if (old.is_empty()) return old;
  double lo = std::max(old.lo, proposed.lo), hi = std::min(old.hi, proposed.hi);
  if (integer) {
    if (std::isfinite(lo)) lo = std::ceil(lo - 1e-9);
    if (std::isfinite(hi)) hi = std::floor(hi + 1e-9);
  }
  double tol = 1e-9 * std::max({1.0, std::fabs(lo), std::fabs(hi)});
  if (lo > hi + tol) return Interval::empty();
  if (lo > hi) lo = hi = 0.5 * (lo + hi);
  if (integer && lo > hi) return Interval::empty();
  const double width = old.hi - old.lo;
  auto significant = [&](double delta, bool was_inf, bool now_fin) {
    if (delta <= 0) return false;
    if (was_inf) return now_fin;
    if (!std::isfinite(width)) return false;
    return delta >= 0.05 * width;
  };
  Interval r = old;
  if (significant(lo - old.lo, old.lo == -kInf, std::isfinite(lo))) r.lo = lo;
  if (significant(old.hi - hi, old.hi == kInf, std::isfinite(hi))) r.hi = hi;
  // collapse a nearly crossed pair
  if (r.lo > r.hi) r.lo = r.hi = 0.5 * (lo + hi);
  if (changed) *changed = !(r == old);
  return r;
}

std::optional<Box> fbbt_constraint(const ExprDag& dag, const Constraint& cons, const Box& box,
                                   const std::vector<bool>& integer) {
  auto is_int = [&](int v) { return static_cast<size_t>(v) < integer.size() && integer[static_cast<size_t>(v)]; };
  Box out = box;
  if (cons.root < 0) {
    std::vector<double> coef;
    std::vector<Interval> ivs;
    for (auto& t : cons.linear) {
      coef.push_back(t.coef);
      ivs.push_back(box[static_cast<size_t>(t.var)]);
    }
    std::vector<Interval*> ptr;
    for (auto& v : ivs) ptr.push_back(&v);
    if (!linear_reverse(coef, ptr, cons.sides)) return std::nullopt;
    for (size_t j = 0; j < cons.linear.size(); ++j) {
      int v = cons.linear[j].var;
      Interval r = accept_tightening(out[static_cast<size_t>(v)], ivs[j], is_int(v));
      if (r.is_empty()) return std::nullopt;
      out[static_cast<size_t>(v)] = r;
    }
    return out;
  }
  auto tight = reverse_prop(dag, cons.root, cons.sides, box);
  if (!tight) return std::nullopt;
  for (size_t v = 0; v < box.size(); ++v) {
    if ((*tight)[v] == box[v]) continue;
    Interval r = accept_tightening(out[v], (*tight)[v], is_int(static_cast<int>(v)));
    if (r.is_empty()) return std::nullopt;
    out[v] = r;
  }
  return out;
}

// ---------------------------------------------------------------- quadratic

int QuadForm::index_of(NodeId base) const {
  for (size_t i = 0; i < terms.size(); ++i)
    if (terms[i].base == base) return static_cast<int>(i);
  return -1;
}

bool QuadForm::pure_variables(const ExprDag& dag, Substitution sub) const {
  for (auto& t : terms)
    if (dag[t.base].op != Op::Var && sub.index(t.base) < 0) return false;
  return true;
}

std::optional<QuadForm> detect_quadratic(const ExprDag& dag, NodeId root, Substitution sub) {
  const ExprNode& rn = dag[root];
  if (rn.op != Op::Sum && rn.op != Op::Prod && rn.op != Op::Pow) return std::nullopt;
  std::map<NodeId, double> sq, lin;
  std::map<std::pair<NodeId, NodeId>, double> bil;
  bool fail = false;
  std::function<void(double, NodeId)> term = [&](double coef, NodeId id) {
    if (fail) return;
    const ExprNode& n = dag[id];
    if (id != root && sub.index(id) >= 0) {
      lin[id] += coef;
      return;
    }
    if (n.op == Op::Val) return;
    if (n.op == Op::Pow && n.exponent == 2.0) {
      sq[n.children[0]] += coef;
      return;
    }
    if (n.op == Op::Pow && is_int_exp(n.exponent) && n.exponent >= 3) {
      fail = true;
      return;
    }
    if (n.op == Op::Prod) {
      if (n.children.size() == 1) return term(coef * n.constant, n.children[0]);
      if (n.children.size() > 2) {
        fail = true;
        return;
      }
      NodeId u = n.children[0], v = n.children[1];
      if (u == v) {
        sq[u] += coef * n.constant;
        return;
      }
      bil[{std::min(u, v), std::max(u, v)}] += coef * n.constant;
      return;
    }
    lin[id] += coef;
  };
  double constant = 0.0;
  if (rn.op == Op::Sum) {
    constant = rn.constant;
    for (size_t j = 0; j < rn.children.size(); ++j) term(rn.coefs[j], rn.children[j]);
  } else {
    term(1.0, root);
  }
  if (fail) return std::nullopt;
  std::erase_if(sq, [](const auto& e) { return e.second == 0.0; });
  std::erase_if(bil, [](const auto& e) { return e.second == 0.0; });
  if (sq.empty() && bil.empty()) return std::nullopt;
  std::vector<NodeId> bases;
  for (auto& [b, c] : sq) bases.push_back(b);
  for (auto& [b, c] : lin) bases.push_back(b);
  for (auto& [p, c] : bil) {
    bases.push_back(p.first);
    bases.push_back(p.second);
  }
  std::sort(bases.begin(), bases.end());
  bases.erase(std::unique(bases.begin(), bases.end()), bases.end());
  QuadForm q;
  q.root = root;
  q.constant = constant;
  for (NodeId b : bases) {
    QuadTerm t;
    t.base = b;
    if (auto it = sq.find(b); it != sq.end()) t.a = it->second;
    if (auto it = lin.find(b); it != lin.end()) t.c = it->second;
    q.terms.push_back(t);
  }
  for (auto& [p, c] : bil) {
    int i = q.index_of(p.first), j = q.index_of(p.second);
    q.terms[static_cast<size_t>(i)].partners.emplace_back(j, c);
  }
  return q;
}

namespace {

// f(y) = a y^2 + b y, limit at +-inf
double qval(double a, double b, double y) {
  if (std::isfinite(y)) return a * y * y + b * y;
  double s = y > 0 ? 1.0 : -1.0;
  if (a != 0.0) return a > 0 ? kInf : -kInf;
  if (b == 0.0) return 0.0;
  return (b * s) > 0 ? kInf : -kInf;
}

double qmin(double a, double b, double lo, double hi) {
  double m = std::min(qval(a, b, lo), qval(a, b, hi));
  if (a > 0) {
    double v = -b / (2 * a);
    if (lo <= v && v <= hi) m = std::min(m, qval(a, b, v));
  }
  return m;
}

double qmax(double a, double b, double lo, double hi) { return -qmin(-a, -b, lo, hi); }

// {y in d : a y^2 + b y <= r} as up to two intervals
std::vector<Interval> quad_le_set(double a, double b, double r, Interval d) {
  std::vector<Interval> out;
  if (d.is_empty()) return out;
  if (r == kInf) return {d};
  if (r == -kInf) return out;
  auto push = [&](Interval i) {
    i = intersect(outward(i), d);
    if (!i.is_empty()) out.push_back(i);
  };
  if (a == 0.0) {
    if (b == 0.0) {
      if (0.0 <= r) out.push_back(d);
      return out;
    }
    double y = r / b;
    if (b > 0) push({-kInf, y}); else push({y, kInf});
    return out;
  }
  double disc = b * b + 4 * a * r;
  if (disc < 0) {
    if (a < 0) out.push_back(d);
    return out;
  }
  double sq = std::sqrt(disc);
  // roots of a y^2 + b y - r
  double qq = -0.5 * (b + (b >= 0 ? sq : -sq));
  double r1, r2;
  if (qq == 0.0) {
    r1 = r2 = 0.0;
  } else {
    r1 = qq / a;
    r2 = -r / qq;
  }
  if (r1 > r2) std::swap(r1, r2);
  if (a > 0) {
    push({r1, r2});
  } else {
    push({-kInf, r1});
    push({r2, kInf});
  }
  return out;
}

Interval intersect_sets(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  Interval h = Interval::empty();
  for (auto& x : a)
    for (auto& y : b) h = hull(h, intersect(x, y));
  return h;
}

// {y in Y : exists beta in B with a y^2 + beta y in R}
Interval quad_preimage(double a, Interval B, Interval R, Interval Y) {
  if (B.is_empty() || R.is_empty() || Y.is_empty()) return Interval::empty();
  Interval res = Interval::empty();
  Interval yp = intersect(Y, {0.0, kInf});
  if (!yp.is_empty()) {
    // a y^2 + B.lo y <= R.hi  and  a y^2 + B.hi y >= R.lo
    std::vector<Interval> c1 = (B.lo == -kInf) ? std::vector<Interval>{yp} : quad_le_set(a, B.lo, R.hi, yp);
    std::vector<Interval> c2 =
        (B.hi == kInf || R.lo == -kInf) ? std::vector<Interval>{yp} : quad_le_set(-a, -B.hi, -R.lo, yp);
    res = hull(res, intersect_sets(c1, c2));
  }
  Interval yn = intersect(Y, {-kInf, 0.0});
  if (!yn.is_empty()) {
    // a y^2 + B.hi y <= R.hi  and  a y^2 + B.lo y >= R.lo
    std::vector<Interval> c1 = (B.hi == kInf) ? std::vector<Interval>{yn} : quad_le_set(a, B.hi, R.hi, yn);
    std::vector<Interval> c2 =
        (B.lo == -kInf || R.lo == -kInf) ? std::vector<Interval>{yn} : quad_le_set(-a, -B.lo, -R.lo, yn);
    res = hull(res, intersect_sets(c1, c2));
  }
  return res;
}

Interval block_range(const QuadForm& q, size_t i, const std::vector<Interval>& y) {
  const QuadTerm& t = q.terms[i];
  Interval B = Interval::point(t.c);
  for (auto [j, b] : t.partners) B = B + b * y[static_cast<size_t>(j)];
  return outward(quad_range(t.a, B, y[i]));
}

}  // namespace

Interval quad_range(double a, Interval B, Interval y) {
  if (B.is_empty() || y.is_empty()) return Interval::empty();
  Interval res = Interval::empty();
  Interval yp = intersect(y, {0.0, kInf});
  if (!yp.is_empty()) {
    bool pos = yp.hi > 0;
    double lo = (B.lo == -kInf && pos) ? -kInf : qmin(a, B.lo == -kInf ? 0.0 : B.lo, yp.lo, yp.hi);
    double hi = (B.hi == kInf && pos) ? kInf : qmax(a, B.hi == kInf ? 0.0 : B.hi, yp.lo, yp.hi);
    res = hull(res, {lo, hi});
  }
  Interval yn = intersect(y, {-kInf, 0.0});
  if (!yn.is_empty()) {
    bool neg = yn.lo < 0;
    double lo = (B.hi == kInf && neg) ? -kInf : qmin(a, B.hi == kInf ? 0.0 : B.hi, yn.lo, yn.hi);
    double hi = (B.lo == -kInf && neg) ? kInf : qmax(a, B.lo == -kInf ? 0.0 : B.lo, yn.lo, yn.hi);
    res = hull(res, {lo, hi});
  }
  return res;
}

Interval quad_forward(const QuadForm& q, const std::vector<Interval>& y) {
  Activity act;
  for (size_t i = 0; i < q.terms.size(); ++i) {
    Interval r = block_range(q, i, y);
    if (r.is_empty()) return r;
    act.add(r);
  }
  return outward(Interval::point(q.constant) + act.total());
}

std::optional<std::vector<Interval>> quad_prop(const QuadForm& q, const std::vector<Interval>& ybox, Interval qrange) {
  std::vector<Interval> y = ybox;
  const size_t k = q.terms.size();
  if (intersect(quad_forward(q, y), qrange).is_empty()) return std::nullopt;
  for (size_t i = 0; i < k; ++i) {
    Activity others;
    for (size_t l = 0; l < k; ++l) {
      if (l == i) continue;
      Interval r = block_range(q, l, y);
      if (r.is_empty()) return std::nullopt;
      others.add(r);
    }
    Interval rest = qrange - Interval::point(q.constant) - others.total();
    const QuadTerm& t = q.terms[i];
    Interval B = Interval::point(t.c);
    for (auto [j, b] : t.partners) B = B + b * y[static_cast<size_t>(j)];
    Interval yi = intersect(y[i], quad_preimage(t.a, B, rest, y[i]));
    if (yi.is_empty()) return std::nullopt;
    y[i] = yi;
    if (t.partners.empty()) continue;
    // sum_j b_ij y_j in rest / y_i - a_i y_i - c_i, split at y_i = 0
    Interval T = Interval::empty();
    for (Interval part : {intersect(yi, {0.0, kInf}), intersect(yi, {-kInf, 0.0})}) {
      if (part.is_empty()) continue;
      T = hull(T, rest / part - t.a * part - Interval::point(t.c));
    }
    std::vector<double> coef;
    std::vector<Interval*> ptr;
    for (auto [j, b] : t.partners) {
      coef.push_back(b);
      ptr.push_back(&y[static_cast<size_t>(j)]);
    }
    if (!linear_reverse(coef, ptr, outward(T))) return std::nullopt;
  }
  return y;
}

Interval solve_quadratic_range(double a, double b, Interval r, Interval dom) {
  return quad_preimage(a, Interval::point(b), r, dom);
}

}  // namespace minlp
