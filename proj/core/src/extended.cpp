#include "minlp/extended.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "minlp/lp.hpp"

namespace minlp {

const char* sense_name(Sense s) {
  switch (s) {
    case Sense::Le: return "<=";
    case Sense::Eq: return "=";
    case Sense::Ge: return ">=";
  }
  return "?";
}

const char* handler_name(Handler h) {
  switch (h) {
    case Handler::Linear: return "linear";
    case Handler::Quadratic: return "quadratic";
    case Handler::Soc: return "soc";
    case Handler::Convex: return "convex";
    case Handler::Concave: return "concave";
    case Handler::Quotient: return "quotient";
    case Handler::Product: return "product";
    case Handler::Univariate: return "univariate";
  }
  return "?";
}

double AffineForm::value(std::span<const double> y) const {
  double s = beta;
  for (auto& [i, c] : v) s += c * y[static_cast<size_t>(i)];
  return s;
}

Interval AffineForm::range(const Box& box) const {
  Interval s = Interval::point(beta);
  for (auto& [i, c] : v) s = s + c * box[static_cast<size_t>(i)];
  return s;
}

double SocForm::lhs_value(std::span<const double> y) const {
  double s = 0.0;
  for (auto& t : terms) {
    double a = t.value(y);
    s += a * a;
  }
  return std::sqrt(s);
}

double QuotientForm::second(double y) const {
  double den = c * y + d;
  return k * 2.0 * c * (b * c - a * d) / (den * den * den);
}

int ExtendedForm::ext_var_of(const ExprDag& dag, NodeId id) const {
  if (dag[id].op == Op::Var) return dag[id].var;
  if (static_cast<size_t>(id) < aux_of_node.size()) return aux_of_node[static_cast<size_t>(id)];
  return -1;
}

int ExtendedForm::num_aux() const { return static_cast<int>(vars.size()) - num_original; }

Box ExtendedForm::box() const {
  Box b(vars.size());
  for (size_t i = 0; i < vars.size(); ++i) b[i] = vars[i].bounds;
  return b;
}

std::vector<double> ExtendedForm::lift(const ExprDag& dag, std::span<const double> x) const {
  std::vector<double> y(vars.size(), 0.0);
  for (int i = 0; i < num_original; ++i) y[static_cast<size_t>(i)] = x[static_cast<size_t>(i)];
  for (size_t i = static_cast<size_t>(num_original); i < vars.size(); ++i) {
    if (vars[i].node < 0) continue;
    try {
      y[i] = eval(dag, vars[i].node, x);
    } catch (const DomainError&) {
      y[i] = std::nan("");
    }
  }
  for (auto& d : disagg) {
    if (!d) continue;
    for (auto& cone : d->cones) {
      double a = cone.a.value(y), r = cone.r.value(y);
      y[static_cast<size_t>(cone.z)] = r > 0 ? a * a / r : 0.0;
    }
  }
  return y;
}

double ExtendedForm::h_value(const ExprDag& dag, const ExtConstraint& c, std::span<const double> y) const {
  if (c.handler == Handler::Soc) return socs[static_cast<size_t>(c.soc)].lhs_value(y);
  return eval(dag, c.node, y, sub(c));
}

double ExtendedForm::violation(const ExprDag& dag, const ExtConstraint& c, std::span<const double> y) const {
  double h;
  try {
    h = h_value(dag, c, y);
  } catch (const DomainError&) {
    return kInf;
  }
  if (!std::isfinite(h)) return kInf;
  if (c.handler == Handler::Soc) return std::max(0.0, h - socs[static_cast<size_t>(c.soc)].rhs.value(y));
  double w = y[static_cast<size_t>(c.out)];
  double v = 0.0;
  if (c.need_le) v = std::max(v, h - w);
  if (c.need_ge) v = std::max(v, w - h);
  return v;
}

// ---------------------------------------------------------------- cones

namespace {

std::optional<AffineForm> affine_of(const ExprDag& dag, NodeId id, const std::function<int(NodeId)>& index_of) {
  AffineForm f;
  if (dag[id].op == Op::Var) {
    f.v.push_back({dag[id].var, 1.0});
    return f;
  }
  if (auto aff = as_affine(dag, id)) {
    f.beta = aff->first;
    for (auto& t : aff->second) f.v.push_back({t.var, t.coef});
    return f;
  }
  int idx = index_of(id);
  if (idx < 0) return std::nullopt;
  f.v.push_back({idx, 1.0});
  return f;
}

}  // namespace

std::optional<SocForm> detect_soc(const ExprDag& dag, NodeId root, double rhs_const,
                                  const std::function<int(NodeId)>& index_of) {
  const auto& r = dag[root];
  NodeId sqrt_node = -1;
  double alpha = 1.0;
  SocForm soc;
  soc.rhs.beta = rhs_const;
  auto is_sqrt = [&](NodeId id) { return dag[id].op == Op::Pow && dag[id].exponent == 0.5; };
  if (is_sqrt(root)) {
    sqrt_node = root;
  } else if (r.op == Op::Sum) {
    soc.rhs.beta -= r.constant;
    for (size_t i = 0; i < r.children.size(); ++i) {
      NodeId ch = r.children[i];
      double c = r.coefs[i];
      if (is_sqrt(ch) && c > 0 && sqrt_node < 0) {
        sqrt_node = ch;
        alpha = c;
        continue;
      }
      auto f = affine_of(dag, ch, index_of);
      if (!f) return std::nullopt;
      for (auto& [j, cj] : f->v) soc.rhs.v.push_back({j, -c * cj});
      soc.rhs.beta -= c * f->beta;
    }
  }
  if (sqrt_node < 0) return std::nullopt;

  NodeId s = dag[sqrt_node].children[0];
  std::vector<std::pair<double, NodeId>> items;
  double s0 = 0.0;
  if (dag[s].op == Op::Sum) {
    s0 = dag[s].constant;
    for (size_t i = 0; i < dag[s].children.size(); ++i) items.push_back({dag[s].coefs[i], dag[s].children[i]});
  } else {
    items.push_back({1.0, s});
  }
  std::map<NodeId, std::pair<double, double>> sq;  // base -> (a, b)
  std::vector<std::pair<double, NodeId>> lin;
  for (auto& [c, t] : items) {
    const auto& n = dag[t];
    if (n.op == Op::Pow && n.exponent == 2.0)
      sq[n.children[0]].first += c;
    else if (n.op == Op::Val)
      s0 += c * n.constant;
    else
      lin.push_back({c, t});
  }
  for (auto& [c, t] : lin) {
    auto it = sq.find(t);
    if (it == sq.end()) return std::nullopt;
    it->second.second += c;
  }
  double cst = s0;
  for (auto& [base, ab] : sq) {
    if (!(ab.first > 0.0)) return std::nullopt;
    cst -= ab.second * ab.second / (4.0 * ab.first);
  }
  if (cst < -1e-12 * std::max(1.0, std::fabs(s0))) return std::nullopt;
  for (auto& [base, ab] : sq) {
    auto f = affine_of(dag, base, index_of);
    if (!f) return std::nullopt;
    double scale = alpha * std::sqrt(ab.first);
    AffineForm t;
    for (auto& [j, cj] : f->v) t.v.push_back({j, scale * cj});
    t.beta = scale * (f->beta + ab.second / (2.0 * ab.first));
    soc.terms.push_back(std::move(t));
  }
  if (cst > 1e-14) soc.terms.push_back({{}, alpha * std::sqrt(cst)});
  if (soc.terms.empty()) return std::nullopt;
  return soc;
}

std::optional<SocForm> detect_soc(const ExprDag& dag, NodeId root, double rhs_const) {
  return detect_soc(dag, root, rhs_const, [](NodeId) { return -1; });
}

std::optional<Disaggregation> soc_disaggregate(const SocForm& soc, int first_var) {
  if (soc.k() < 3) return std::nullopt;
  Disaggregation d;
  for (int j = 0; j < soc.k(); ++j) {
    int z = first_var + j;
    d.cones.push_back({soc.terms[static_cast<size_t>(j)], soc.rhs, z});
    d.row.push_back({z, 1.0});
  }
  for (auto& [i, c] : soc.rhs.v) d.row.push_back({i, -c});
  d.row_hi = soc.rhs.beta;
  return d;
}

std::optional<QuotientForm> match_quotient(const ExprDag& dag, NodeId node,
                                           const std::function<int(NodeId)>& index_of) {
  const auto& n = dag[node];
  if (n.op != Op::Prod || n.children.size() != 2) return std::nullopt;
  NodeId num = -1, den = -1;
  for (int s = 0; s < 2; ++s) {
    NodeId ch = n.children[static_cast<size_t>(s)];
    if (dag[ch].op == Op::Pow && dag[ch].exponent == -1.0) {
      den = dag[ch].children[0];
      num = n.children[static_cast<size_t>(1 - s)];
      break;
    }
  }
  if (den < 0) return std::nullopt;
  // single-base affine view: (coef, offset, base)
  auto view = [&](NodeId id) -> std::optional<std::tuple<double, double, NodeId>> {
    const auto& m = dag[id];
    if (m.op == Op::Sum && m.children.size() == 1) return std::make_tuple(m.coefs[0], m.constant, m.children[0]);
    if (m.op == Op::Val) return std::nullopt;
    return std::make_tuple(1.0, 0.0, id);
  };
  auto vn = view(num), vd = view(den);
  if (!vn || !vd) return std::nullopt;
  if (std::get<2>(*vn) != std::get<2>(*vd)) return std::nullopt;
  NodeId base = std::get<2>(*vn);
  QuotientForm q;
  q.k = n.constant;
  q.a = std::get<0>(*vn);
  q.b = std::get<1>(*vn);
  q.c = std::get<0>(*vd);
  q.d = std::get<1>(*vd);
  if (q.a == 0.0 || q.c == 0.0) return std::nullopt;
  q.u = dag[base].op == Op::Var ? dag[base].var : index_of(base);
  if (q.u < 0) return std::nullopt;
  return q;
}

// ---------------------------------------------------------------- builder

namespace {

Curvature flip(Curvature c) {
  if (c == Curvature::Convex) return Curvature::Concave;
  if (c == Curvature::Concave) return Curvature::Convex;
  return c;
}

bool is_univariate(Op op) {
  return op != Op::Val && op != Op::Var && op != Op::Sum && op != Op::Prod;
}

Interval clip(Interval a) {
  return intersect(a, {-kBoundClip, kBoundClip});
}

Monotonicity compose(Monotonicity outer, Monotonicity inner) {
  if (outer == Monotonicity::Constant || inner == Monotonicity::Constant) return Monotonicity::Constant;
  if (outer == Monotonicity::Unknown || inner == Monotonicity::Unknown) return Monotonicity::Unknown;
  return outer == inner ? Monotonicity::Increasing : Monotonicity::Decreasing;
}

Monotonicity combine(Monotonicity a, Monotonicity b) {
  if (a == Monotonicity::Constant) return b;
  if (b == Monotonicity::Constant) return a;
  return a == b ? a : Monotonicity::Unknown;
}

class Builder {
 public:
  Builder(const Problem& p, const ExtOptions& o) : p_(p), dag_(p.dag), opts_(o) {}

  ExtendedForm run();

 private:
  struct Need {
    bool le = false, ge = false;
    bool interior = false;
    bool root = false;
    Interval sides = Interval::entire();
  };

  int aux_for(NodeId id);
  bool absorb(NodeId id, Curvature want, std::vector<NodeId>& leaves) const;
  bool retains_nonlinear(NodeId id, const std::set<NodeId>& leaves) const;
  Monotonicity path_mono(NodeId at, NodeId target, const std::set<NodeId>& leaves,
                         std::map<NodeId, Monotonicity>& memo) const;
  bool try_quadratic(NodeId n, const Need& need, ExtConstraint& c, std::vector<NodeId>& leaves);
  bool try_soc(NodeId n, const Need& need, ExtConstraint& c, std::vector<NodeId>& leaves);
  bool try_convex(NodeId n, Curvature want, ExtConstraint& c, std::vector<NodeId>& leaves);
  bool try_quotient(NodeId n, ExtConstraint& c, std::vector<NodeId>& leaves);
  void default_handler(NodeId n, ExtConstraint& c, std::vector<NodeId>& leaves);

  const Problem& p_;
  const ExprDag& dag_;
  ExtOptions opts_;
  Box box_;
  std::vector<Interval> iv_;
  ExtendedForm ef_;
  std::map<NodeId, Need> need_;
  std::priority_queue<NodeId> heap_;
  std::set<NodeId> queued_;
};

int Builder::aux_for(NodeId id) {
  int& slot = ef_.aux_of_node[static_cast<size_t>(id)];
  if (slot >= 0) return slot;
  slot = static_cast<int>(ef_.vars.size());
  ExtVar v;
  v.name = "_w" + std::to_string(slot - ef_.num_original + 1);
  v.node = id;
  v.bounds = clip(iv_[static_cast<size_t>(id)]);
  v.integer = is_integral(dag_, id, p_.integrality());
  ef_.vars.push_back(v);
  return slot;
}

bool Builder::absorb(NodeId id, Curvature want, std::vector<NodeId>& leaves) const {
  const auto& n = dag_[id];
  if (n.op == Op::Var || n.op == Op::Val) return true;
  if (n.op == Op::Sum || (n.op == Op::Prod && n.children.size() == 1)) {
    for (size_t i = 0; i < n.children.size(); ++i) {
      double c = n.op == Op::Sum ? n.coefs[i] : n.constant;
      Curvature w = c >= 0 ? want : flip(want);
      if (!absorb(n.children[i], w, leaves)) leaves.push_back(n.children[i]);
    }
    return true;
  }
  if (n.op == Op::Prod) return false;
  NodeId ch = n.children[0];
  Interval arg = iv_[static_cast<size_t>(ch)];
  Curvature cf = univariate_curvature(n, arg);
  Monotonicity mf = univariate_monotonicity(n, arg);
  if (cf != want && cf != Curvature::Linear) return false;
  Curvature need_child;
  if (mf == Monotonicity::Increasing)
    need_child = want;
  else if (mf == Monotonicity::Decreasing)
    need_child = flip(want);
  else
    need_child = Curvature::Linear;
  if (need_child == Curvature::Linear) {
    if (dag_[ch].op != Op::Var && dag_[ch].op != Op::Val) leaves.push_back(ch);
    return true;
  }
  if (!absorb(ch, need_child, leaves)) leaves.push_back(ch);
  return true;
}

bool Builder::retains_nonlinear(NodeId id, const std::set<NodeId>& leaves) const {
  const auto& n = dag_[id];
  if (leaves.count(id) || n.op == Op::Var || n.op == Op::Val) return false;
  if (is_univariate(n.op)) return true;
  if (n.op == Op::Prod && n.children.size() > 1) return true;
  for (NodeId c : n.children)
    if (retains_nonlinear(c, leaves)) return true;
  return false;
}

Monotonicity Builder::path_mono(NodeId at, NodeId target, const std::set<NodeId>& leaves,
                                std::map<NodeId, Monotonicity>& memo) const {
  if (at == target) return Monotonicity::Increasing;
  const auto& n = dag_[at];
  if (n.op == Op::Var || n.op == Op::Val || leaves.count(at)) return Monotonicity::Constant;
  auto it = memo.find(at);
  if (it != memo.end()) return it->second;
  Monotonicity m = Monotonicity::Constant;
  for (size_t s = 0; s < n.children.size(); ++s) {
    Monotonicity inner = path_mono(n.children[s], target, leaves, memo);
    if (inner == Monotonicity::Constant) continue;
    Monotonicity outer = monotonicity(dag_, at, static_cast<int>(s), box_);
    m = combine(m, compose(outer, inner));
    if (m == Monotonicity::Unknown) break;
  }
  memo[at] = m;
  return m;
}

bool Builder::try_quadratic(NodeId n, const Need& need, ExtConstraint& c, std::vector<NodeId>& leaves) {
  auto q = detect_quadratic(dag_, n);
  if (!q) return false;
  size_t k = q->terms.size();
  std::vector<int> count(k, 0);
  bool quadratic = false;
  for (size_t i = 0; i < k; ++i) {
    const auto& t = q->terms[i];
    if (t.a != 0.0) {
      ++count[i];
      quadratic = true;
    }
    if (t.c != 0.0) ++count[i];
    for (auto& [j, b] : t.partners) {
      ++count[i];
      ++count[static_cast<size_t>(j)];
      quadratic = true;
    }
  }
  if (!quadratic) return false;
  bool repeated = std::any_of(count.begin(), count.end(), [](int v) { return v >= 2; });
  bool useful = repeated;
  if (!useful && k <= 16) {
    std::vector<double> m(k * k, 0.0);
    for (size_t i = 0; i < k; ++i) {
      m[i * k + i] = q->terms[i].a;
      for (auto& [j, b] : q->terms[i].partners) {
        m[i * k + static_cast<size_t>(j)] += b / 2;
        m[static_cast<size_t>(j) * k + i] += b / 2;
      }
    }
    auto e = eig_sym(m, static_cast<int>(k));
    bool convex = e.values.front() >= -1e-9, concave = e.values.back() <= 1e-9;
    useful = (convex && need.le && !need.ge) || (concave && need.ge && !need.le);
  }
  if (!useful) return false;
  c.handler = Handler::Quadratic;
  for (auto& t : q->terms)
    if (dag_[t.base].op != Op::Var) leaves.push_back(t.base);
  c.quad = std::move(q);
  return true;
}

bool Builder::try_soc(NodeId n, const Need& need, ExtConstraint& c, std::vector<NodeId>& leaves) {
  if (!need.root || need.interior || !need.le || need.ge) return false;
  std::vector<NodeId> collected;
  auto probe = [&](NodeId id) {
    collected.push_back(id);
    return 0;
  };
  if (!detect_soc(dag_, n, need.sides.hi, probe)) return false;
  for (NodeId id : collected) leaves.push_back(id);
  auto soc = detect_soc(dag_, n, need.sides.hi, [&](NodeId id) { return aux_for(id); });
  c.handler = Handler::Soc;
  c.soc = static_cast<int>(ef_.socs.size());
  ef_.socs.push_back(*soc);
  return true;
}

bool Builder::try_convex(NodeId n, Curvature want, ExtConstraint& c, std::vector<NodeId>& leaves) {
  std::vector<NodeId> found;
  if (!absorb(n, want, found)) return false;
  std::set<NodeId> ls(found.begin(), found.end());
  if (!retains_nonlinear(n, ls)) return false;
  c.handler = want == Curvature::Convex ? Handler::Convex : Handler::Concave;
  leaves.insert(leaves.end(), found.begin(), found.end());
  return true;
}

bool Builder::try_quotient(NodeId n, ExtConstraint& c, std::vector<NodeId>& leaves) {
  std::vector<NodeId> collected;
  auto q = match_quotient(dag_, n, [&](NodeId id) {
    collected.push_back(id);
    return 0;
  });
  if (!q) return false;
  Interval u = collected.empty() ? box_[static_cast<size_t>(q->u)] : iv_[static_cast<size_t>(collected[0])];
  double pole = q->pole();
  if (!(pole < u.lo || pole > u.hi)) return false;
  leaves.insert(leaves.end(), collected.begin(), collected.end());
  if (!collected.empty()) q->u = aux_for(collected[0]);
  c.handler = Handler::Quotient;
  c.quot = *q;
  return true;
}

void Builder::default_handler(NodeId n, ExtConstraint& c, std::vector<NodeId>& leaves) {
  const auto& node = dag_[n];
  if (node.op == Op::Sum)
    c.handler = Handler::Linear;
  else if (node.op == Op::Prod)
    c.handler = node.children.size() == 1 ? Handler::Linear : Handler::Product;
  else
    c.handler = Handler::Univariate;
  for (NodeId ch : node.children)
    if (dag_[ch].op != Op::Var && dag_[ch].op != Op::Val) leaves.push_back(ch);
}

ExtendedForm Builder::run() {
  ef_.num_original = static_cast<int>(p_.vars.size());
  ef_.aux_of_node.assign(dag_.size(), -1);
  box_ = p_.box();
  for (size_t j = 0; j < p_.vars.size(); ++j) {
    const auto& v = p_.vars[j];
    ef_.vars.push_back({v.name, -1, {v.lb, v.ub}, v.integer()});
  }
  std::vector<NodeId> all(dag_.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<NodeId>(i);
  iv_ = forward_intervals(dag_, all, box_);

  std::vector<bool> in_model(dag_.size(), false);
  for (auto& r : p_.nonlinear)
    for (NodeId id : reachable(dag_, r.root)) in_model[static_cast<size_t>(id)] = true;
  for (size_t id = 0; id < dag_.size(); ++id) {
    if (!in_model[id]) continue;
    const auto& n = dag_[static_cast<NodeId>(id)];
    if (n.op == Op::Pow && !is_integer_value(n.exponent) && iv_[static_cast<size_t>(n.children[0])].lo < -1e-100)
      throw ModelError("fractional power of a possibly negative argument");
  }

  for (auto& r : p_.nonlinear) {
    bool le = std::isfinite(r.hi), ge = std::isfinite(r.lo);
    if (!le && !ge) continue;
    auto& nd = need_[r.root];
    nd.le |= le;
    nd.ge |= ge;
    nd.root = true;
    nd.sides = intersect(nd.sides, {r.lo, r.hi});
    if (queued_.insert(r.root).second) heap_.push(r.root);
  }

  while (!heap_.empty()) {
    NodeId n = heap_.top();
    heap_.pop();
    Need need = need_[n];
    if (!need.le && !need.ge) continue;
    ExtConstraint c;
    c.node = n;
    c.need_le = need.le;
    c.need_ge = need.ge;
    c.root = need.root;
    std::vector<NodeId> leaves;
    bool claimed = (opts_.quadratic && try_quadratic(n, need, c, leaves)) ||
                   (opts_.soc && try_soc(n, need, c, leaves)) ||
                   (opts_.convex && try_convex(n, Curvature::Convex, c, leaves)) ||
                   (opts_.concave && try_convex(n, Curvature::Concave, c, leaves)) ||
                   (opts_.quotient && try_quotient(n, c, leaves));
    if (!claimed) default_handler(n, c, leaves);

    if (c.handler != Handler::Soc) {
      c.out = aux_for(n);
      if (need.root) {
        auto& b = ef_.vars[static_cast<size_t>(c.out)].bounds;
        Interval sides = need.sides;
        if (std::isfinite(sides.lo)) b.lo = sides.lo;
        if (std::isfinite(sides.hi)) b.hi = sides.hi;
      }
    }
    std::sort(leaves.begin(), leaves.end());
    leaves.erase(std::unique(leaves.begin(), leaves.end()), leaves.end());
    std::set<NodeId> leafset(leaves.begin(), leaves.end());
    for (NodeId l : leaves) aux_for(l);

    for (NodeId l : leaves) {
      Monotonicity m;
      if (c.handler == Handler::Soc) {
        m = Monotonicity::Unknown;
      } else {
        std::map<NodeId, Monotonicity> memo;
        m = path_mono(n, l, leafset, memo);
      }
      auto& nl = need_[l];
      nl.interior = true;
      switch (m) {
        case Monotonicity::Increasing:
          nl.le |= c.need_le;
          nl.ge |= c.need_ge;
          break;
        case Monotonicity::Decreasing:
          nl.le |= c.need_ge;
          nl.ge |= c.need_le;
          break;
        case Monotonicity::Constant:
          break;
        case Monotonicity::Unknown:
          nl.le = nl.ge = true;
          break;
      }
      if (queued_.insert(l).second) heap_.push(l);
    }

    // leaves as extended variables, plus original variables h reads directly
    std::set<int> vs;
    std::vector<NodeId> stack{n};
    std::set<NodeId> seen;
    while (!stack.empty()) {
      NodeId id = stack.back();
      stack.pop_back();
      if (!seen.insert(id).second) continue;
      if (dag_[id].op == Op::Var) {
        vs.insert(dag_[id].var);
        continue;
      }
      if (id != n && leafset.count(id)) {
        vs.insert(ef_.aux_of_node[static_cast<size_t>(id)]);
        continue;
      }
      for (NodeId ch : dag_[id].children) stack.push_back(ch);
    }
    c.leaves.assign(vs.begin(), vs.end());
    c.leaf_nodes = leaves;
    if (c.quad) {
      for (auto& t : c.quad->terms) c.quad_vars.push_back(ef_.ext_var_of(dag_, t.base));
    }
    if (c.handler == Handler::Product && dag_[n].children.size() == 2) {
      int a = ef_.ext_var_of(dag_, dag_[n].children[0]);
      int b = ef_.ext_var_of(dag_, dag_[n].children[1]);
      if (a >= 0 && b >= 0 && dag_[n].constant == 1.0) ef_.products[std::minmax(a, b)] = c.out;
    }
    if (c.handler == Handler::Univariate && dag_[n].op == Op::Pow && dag_[n].exponent == 2.0) {
      int a = ef_.ext_var_of(dag_, dag_[n].children[0]);
      if (a >= 0) ef_.products[{a, a}] = c.out;
    }
    ef_.cons.push_back(std::move(c));
  }

  // cone disaggregation
  ef_.disagg.resize(ef_.socs.size());
  for (size_t s = 0; s < ef_.socs.size(); ++s) {
    const auto& soc = ef_.socs[s];
    if (soc.k() < 3) continue;
    int first = static_cast<int>(ef_.vars.size());
    auto d = soc_disaggregate(soc, first);
    Interval r = clip(soc.rhs.range(ef_.box()));
    for (int j = 0; j < soc.k(); ++j)
      ef_.vars.push_back({"_z" + std::to_string(first + j), -1, {0.0, std::max(0.0, r.hi)}, false});
    ef_.disagg[s] = std::move(d);
  }
  return std::move(ef_);
}

}  // namespace

ExtendedForm build_extended_form(const Problem& p, const ExtOptions& opts) {
  Builder b(p, opts);
  return b.run();
}

}  // namespace minlp
