#include "minlp/separation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "minlp/lp.hpp"
#include "minlp/propagation.hpp"

namespace minlp {

const char* cut_family_name(CutFamily f) {
  switch (f) {
    case CutFamily::Linear: return "linear";
    case CutFamily::Tangent: return "tangent";
    case CutFamily::Secant: return "secant";
    case CutFamily::McCormick: return "mccormick";
    case CutFamily::VertexPoly: return "vertexpoly";
    case CutFamily::Gradient: return "gradient";
    case CutFamily::IntervalConst: return "interval";
    case CutFamily::Quotient: return "quotient";
    case CutFamily::Soc: return "soc";
    case CutFamily::Rlt: return "rlt";
    case CutFamily::Sdp: return "sdp";
    case CutFamily::Perspective: return "perspective";
    case CutFamily::Incumbent: return "incumbent";
    case CutFamily::Quadratic: return "quadratic";
  }
  return "?";
}

double Estimator::value(std::span<const double> y) const {
  double s = constant;
  for (auto& [i, c] : coefs) s += c * y[static_cast<size_t>(i)];
  return s;
}

void Estimator::add(int i, double c) {
  for (auto& [j, d] : coefs)
    if (j == i) {
      d += c;
      return;
    }
  coefs.push_back({i, c});
}

double Cut::activity(std::span<const double> y) const {
  double s = 0.0;
  for (auto& [i, c] : coefs) s += c * y[static_cast<size_t>(i)];
  return s;
}

double Cut::violation(std::span<const double> y) const {
  double a = activity(y);
  return std::max({0.0, lhs - a, a - rhs});
}

double Cut::efficacy(std::span<const double> y) const {
  double n = 0.0;
  for (auto& [i, c] : coefs) n += c * c;
  n = std::sqrt(n);
  return n > 0 ? violation(y) / n : 0.0;
}

namespace {

constexpr double kMaxRatio = 1e9;
constexpr double kMaxConst = 1e15;

template <class Coefs>
bool sane_coefs(const Coefs& coefs, double constant) {
  if (!std::isfinite(constant) || std::fabs(constant) > kMaxConst) return false;
  double mx = 0.0, mn = kInf;
  for (auto& [i, c] : coefs) {
    if (!std::isfinite(c)) return false;
    double a = std::fabs(c);
    if (a == 0.0) continue;
    mx = std::max(mx, a);
    mn = std::min(mn, a);
  }
  return mx == 0.0 || mx / mn <= kMaxRatio;
}

void tidy(std::vector<std::pair<int, double>>& coefs) {
  std::sort(coefs.begin(), coefs.end());
  std::vector<std::pair<int, double>> out;
  for (auto& [i, c] : coefs) {
    if (!out.empty() && out.back().first == i)
      out.back().second += c;
    else
      out.push_back({i, c});
  }
  std::erase_if(out, [](const auto& p) { return p.second == 0.0; });
  coefs = std::move(out);
}

std::optional<double> f_at(const ExprNode& f, double u) {
  try {
    double v = apply_unary(f, u);
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

std::optional<double> df_at(const ExprNode& f, double u) {
  try {
    double v = apply_unary_deriv(f, u);
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

double clampd(double v, Interval b) { return std::min(std::max(v, b.lo), b.hi); }

Curvature flip(Curvature c) {
  if (c == Curvature::Convex) return Curvature::Concave;
  if (c == Curvature::Concave) return Curvature::Convex;
  return c;
}

// Points where derivatives blow up are nudged into the interior.
double tangent_point(const ExprNode& f, double ref, Interval b) {
  double r = clampd(ref, b);
  bool positive_domain = f.op == Op::Log || f.op == Op::Entropy ||
                         (f.op == Op::Pow && (!is_integer_value(f.exponent) || f.exponent < 0));
  if (positive_domain && r <= 0.0) {
    double top = std::isfinite(b.hi) ? b.hi : 1.0;
    r = std::min(1e-6, 0.5 * top);
  }
  if (positive_domain && f.op != Op::Pow && r < 1e-9) r = std::min(1e-9, b.hi);
  return r;
}

// Under-estimator of s*f with s = +-1 on b, expressed for s*f.
std::optional<std::pair<Linear1, CutFamily>> under_scaled(const ExprNode& f, double s, Interval b, Interval root,
                                                            double ref, bool integral, bool* global) {
  auto g = [&](double u) -> std::optional<double> {
    auto v = f_at(f, u);
    if (!v) return std::nullopt;
    return s * *v;
  };
  auto dg = [&](double u) -> std::optional<double> {
    auto v = df_at(f, u);
    if (!v) return std::nullopt;
    return s * *v;
  };
  if (global) *global = false;
  if (b.lo == b.hi) {
    auto v = g(b.lo);
    if (!v) return std::nullopt;
    return std::make_pair(Linear1{0.0, *v}, CutFamily::Secant);
  }
  if (f.op == Op::Sin || f.op == Op::Cos) {
    Interval r = f.op == Op::Sin ? sin(b) : cos(b);
    double c = s > 0 ? r.lo : -r.hi;
    return std::make_pair(Linear1{0.0, c}, CutFamily::IntervalConst);
  }
  Curvature cf = univariate_curvature(f, b);
  if (s < 0) cf = flip(cf);
  Curvature croot = univariate_curvature(f, root);
  if (s < 0) croot = flip(croot);

  auto tangent_at = [&](double at) -> std::optional<Linear1> {
    auto v = g(at);
    auto d = dg(at);
    if (!v || !d) return std::nullopt;
    return Linear1{*d, *v - *d * at};
  };
  auto chord = [&](double a, double c) -> std::optional<Linear1> {
    auto va = g(a), vc = g(c);
    if (!va || !vc) return std::nullopt;
    double slope = (*vc - *va) / (c - a);
    return Linear1{slope, *va - slope * a};
  };

  if (cf == Curvature::Linear || cf == Curvature::Convex) {
    if (integral && cf == Curvature::Convex) {
      double k = std::floor(ref + 1e-9);
      if (std::fabs(ref - std::round(ref)) > 1e-9 && k >= b.lo - 1e-9 && k + 1 <= b.hi + 1e-9) {
        if (auto l = chord(k, k + 1)) {
          if (global) *global = croot == Curvature::Convex;
          return std::make_pair(*l, CutFamily::Secant);
        }
      }
    }
    auto l = tangent_at(tangent_point(f, ref, b));
    if (!l) return std::nullopt;
    if (global) *global = croot == Curvature::Convex || croot == Curvature::Linear;
    return std::make_pair(*l, cf == Curvature::Linear ? CutFamily::Linear : CutFamily::Tangent);
  }
  if (cf == Curvature::Concave) {
    if (!b.bounded()) return std::nullopt;
    auto l = chord(b.lo, b.hi);
    if (!l) return std::nullopt;
    return std::make_pair(*l, CutFamily::Secant);
  }
  // odd symmetric functions, convex right of zero for s*f: convex envelope
  bool odd = f.op == Op::SignPower || (f.op == Op::Pow && is_integer_value(f.exponent) && f.exponent > 1 &&
                                       static_cast<long>(f.exponent) % 2 == 1);
  if (odd && b.bounded() && b.lo < 0 && b.hi > 0) {
    // for s < 0 reflect: -f(u) = f(-u)
    double l = s > 0 ? b.lo : -b.hi, u = s > 0 ? b.hi : -b.lo;
    double r = s > 0 ? ref : -ref;
    auto F = [&](double v) { return *f_at(f, v); };
    auto D = [&](double v) { return *df_at(f, v); };
    auto phi = [&](double t) { return F(t) + D(t) * (l - t) - F(l); };
    Linear1 line;
    if (phi(u) >= 0) {
      double slope = (F(u) - F(l)) / (u - l);
      line = {slope, F(l) - slope * l};
    } else {
      double lo = 0.0, hi = u;
      for (int it = 0; it < 100; ++it) {
        double m = 0.5 * (lo + hi);
        (phi(m) > 0 ? lo : hi) = m;
      }
      double t = hi;
      double rr = clampd(r, {l, u});
      if (rr >= t) {
        line = {D(rr), F(rr) - D(rr) * rr};
      } else {
        double slope = (F(t) - F(l)) / (t - l);
        line = {slope, F(l) - slope * l};
      }
    }
    if (s < 0) line.slope = -line.slope;  // back to the original argument
    return std::make_pair(line, CutFamily::Secant);
  }
  // interval constant fallback
  Interval r;
  switch (f.op) {
    case Op::Pow: r = pow(b, f.exponent); break;
    case Op::SignPower: r = signpower(b, f.exponent); break;
    case Op::Exp: r = exp(b); break;
    case Op::Log: r = log(b); break;
    case Op::Entropy: r = entropy(b); break;
    case Op::Abs: r = abs(b); break;
    default: return std::nullopt;
  }
  double c = s > 0 ? r.lo : -r.hi;
  if (!std::isfinite(c)) return std::nullopt;
  return std::make_pair(Linear1{0.0, c}, CutFamily::IntervalConst);
}

}  // namespace

bool numerically_sane(const Estimator& e) { return sane_coefs(e.coefs, e.constant); }

bool numerically_sane(const Cut& c) {
  double k = std::isfinite(c.rhs) ? c.rhs : (std::isfinite(c.lhs) ? c.lhs : 0.0);
  return !c.coefs.empty() && sane_coefs(c.coefs, k);
}

std::optional<Linear2> mccormick(Interval xb, Interval yb, double xr, double yr, Want want) {
  if (!xb.bounded() || !yb.bounded()) return std::nullopt;
  Linear2 a, b;
  if (want == Want::Under) {
    a = {yb.lo, xb.lo, -xb.lo * yb.lo};
    b = {yb.hi, xb.hi, -xb.hi * yb.hi};
  } else {
    a = {yb.hi, xb.lo, -xb.lo * yb.hi};
    b = {yb.lo, xb.hi, -xb.hi * yb.lo};
  }
  double va = a.value(xr, yr), vb = b.value(xr, yr);
  bool pick_b = want == Want::Under ? vb > va : vb < va;
  Linear2 r = pick_b ? b : a;
  if (std::fabs(r.c) > kMaxConst) return std::nullopt;
  return r;
}

std::optional<Linear1> secant(const ExprNode& f, double lb, double ub) {
  if (!(lb < ub) || !std::isfinite(lb) || !std::isfinite(ub)) return std::nullopt;
  auto a = f_at(f, lb), b = f_at(f, ub);
  if (!a || !b) return std::nullopt;
  double slope = (*b - *a) / (ub - lb);
  return Linear1{slope, *a - slope * lb};
}

std::optional<Linear1> integer_secant(const ExprNode& f, double ref, Interval bounds) {
  double k = std::floor(ref);
  if (k < bounds.lo - 1e-9 || k + 1 > bounds.hi + 1e-9) return std::nullopt;
  return secant(f, k, k + 1);
}

std::optional<Linear1> tangent(const ExprNode& f, double at) {
  auto v = f_at(f, at);
  auto d = df_at(f, at);
  if (!v || !d) return std::nullopt;
  return Linear1{*d, *v - *d * at};
}

std::optional<std::pair<Linear1, CutFamily>> univariate_estimate(const ExprNode& f, Interval b, Interval root,
                                                                  double ref, Want want, bool integral,
                                                                  bool* global) {
  if (b.is_empty()) return std::nullopt;
  double s = want == Want::Under ? 1.0 : -1.0;
  auto r = under_scaled(f, s, b, root, ref, integral, global);
  if (!r) return std::nullopt;
  r->first.slope *= s;
  r->first.intercept *= s;
  return r;
}

namespace {

// index of a child in the point for estimators, -1 if it is not a leaf
int leaf_index(const ExprDag& dag, NodeId c, Substitution sub) {
  int s = sub.index(c);
  if (s >= 0) return s;
  if (dag[c].op == Op::Var) return dag[c].var;
  return -1;
}

}  // namespace

std::optional<Estimator> estimate(const ExprDag& dag, NodeId node, const Box& box, std::span<const double> ref,
                                  Want want, Substitution sub, const Box* root_box,
                                  const std::vector<bool>* integral) {
  const auto& n = dag[node];
  Estimator e;
  switch (n.op) {
    case Op::Val:
      e.constant = n.constant;
      e.global = true;
      return e;
    case Op::Var:
      e.coefs.push_back({n.var, 1.0});
      e.global = true;
      return e;
    case Op::Sum: {
      e.constant = n.constant;
      for (size_t i = 0; i < n.children.size(); ++i) {
        NodeId c = n.children[i];
        if (dag[c].op == Op::Val) {
          e.constant += n.coefs[i] * dag[c].constant;
          continue;
        }
        int idx = leaf_index(dag, c, sub);
        if (idx < 0) return std::nullopt;
        e.add(idx, n.coefs[i]);
      }
      e.global = true;
      e.family = CutFamily::Linear;
      return e;
    }
    case Op::Prod: {
      std::vector<int> idx;
      for (NodeId c : n.children) {
        int i = leaf_index(dag, c, sub);
        if (i < 0) return std::nullopt;
        idx.push_back(i);
      }
      double k = n.constant;
      if (idx.size() == 1) {
        e.coefs.push_back({idx[0], k});
        e.global = true;
        return e;
      }
      if (idx.size() == 2) {
        Want w = k >= 0 ? want : (want == Want::Under ? Want::Over : Want::Under);
        auto xb = box[static_cast<size_t>(idx[0])], yb = box[static_cast<size_t>(idx[1])];
        auto xr = clampd(ref[static_cast<size_t>(idx[0])], xb), yr = clampd(ref[static_cast<size_t>(idx[1])], yb);
        auto m = mccormick(xb, yb, xr, yr, w);
        if (!m) return std::nullopt;
        e.add(idx[0], k * m->ax);
        e.add(idx[1], k * m->ay);
        e.constant = k * m->c;
        e.family = CutFamily::McCormick;
        e.bounds_used = idx;
        return e;
      }
      return vertexpoly_under(dag, node, idx, box, ref, sub, want == Want::Over);
    }
    default: {
      int u = leaf_index(dag, n.children[0], sub);
      if (u < 0) return std::nullopt;
      Interval b = box[static_cast<size_t>(u)];
      Interval root = root_box ? (*root_box)[static_cast<size_t>(u)] : b;
      bool integ = integral && static_cast<size_t>(u) < integral->size() && (*integral)[static_cast<size_t>(u)];
      bool global = false;
      auto r = univariate_estimate(n, b, root, ref[static_cast<size_t>(u)], want, integ, &global);
      if (!r) return std::nullopt;
      e.add(u, r->first.slope);
      e.constant = r->first.intercept;
      e.family = r->second;
      e.global = global;
      if (!global) e.bounds_used = {u};
      if (e.family == CutFamily::Tangent || e.family == CutFamily::Linear) e.bounds_used.clear();
      return e;
    }
  }
}

std::optional<Estimator> gradient_cut(const ExprDag& dag, NodeId node, std::span<const double> point,
                                      Substitution sub) {
  GradResult g;
  try {
    g = grad(dag, node, point, sub);
  } catch (const DomainError&) {
    return std::nullopt;
  }
  if (!std::isfinite(g.value)) return std::nullopt;
  Estimator e;
  e.constant = g.value;
  for (auto& [i, d] : g.grad) {
    if (!std::isfinite(d)) return std::nullopt;
    if (d == 0.0) continue;
    e.coefs.push_back({i, d});
    e.constant -= d * point[static_cast<size_t>(i)];
  }
  e.global = true;
  e.family = CutFamily::Gradient;
  return e;
}

std::optional<Estimator> vertexpoly_under(const ExprDag& dag, NodeId node, const std::vector<int>& vars_in,
                                          const Box& box, std::span<const double> ref, Substitution sub,
                                          bool negate) {
  std::vector<double> pt(ref.begin(), ref.end());
  std::vector<int> vars;
  std::vector<double> lo, w;
  for (int v : vars_in) {
    Interval b = box[static_cast<size_t>(v)];
    if (!b.bounded()) return std::nullopt;
    if (std::find(vars.begin(), vars.end(), v) != vars.end()) continue;
    if (b.width() <= 0.0) {
      pt[static_cast<size_t>(v)] = b.lo;
      continue;
    }
    vars.push_back(v);
    lo.push_back(b.lo);
    w.push_back(b.width());
  }
  size_t k = vars.size();
  if (k > 14) return std::nullopt;
  double sgn = negate ? -1.0 : 1.0;
  std::vector<double> t(k);  // reference in unit coordinates
  for (size_t i = 0; i < k; ++i)
    t[i] = std::clamp((ref[static_cast<size_t>(vars[i])] - lo[i]) / w[i], 0.0, 1.0);
  size_t nv = size_t{1} << k;
  std::vector<double> hv(nv);
  for (size_t m = 0; m < nv; ++m) {
    for (size_t i = 0; i < k; ++i) pt[static_cast<size_t>(vars[i])] = lo[i] + (((m >> i) & 1) ? w[i] : 0.0);
    try {
      hv[m] = sgn * eval(dag, node, pt, sub);
    } catch (const DomainError&) {
      return std::nullopt;
    }
    if (!std::isfinite(hv[m])) return std::nullopt;
  }
  // alpha (unit coordinates), gamma
  std::vector<double> alpha(k, 0.0);
  double gamma = 0.0;
  if (k == 0) {
    gamma = hv[0];
  } else if (k == 1) {
    alpha[0] = hv[1] - hv[0];
    gamma = hv[0];
  } else if (k == 2) {
    double h00 = hv[0], h10 = hv[1], h01 = hv[2], h11 = hv[3];
    struct Plane {
      double a1, a2, g;
    };
    Plane cands[4] = {{h10 - h00, h01 - h00, h00},
                      {h10 - h00, h11 - h10, h00},
                      {h11 - h01, h01 - h00, h00},
                      {h11 - h01, h11 - h10, h11 - (h11 - h01) - (h11 - h10)}};
    double best = -kInf;
    double scale = 1e-12 * (1.0 + std::fabs(h00) + std::fabs(h10) + std::fabs(h01) + std::fabs(h11));
    for (auto& p : cands) {
      bool ok = p.g <= h00 + scale && p.a1 + p.g <= h10 + scale && p.a2 + p.g <= h01 + scale &&
                p.a1 + p.a2 + p.g <= h11 + scale;
      double v = p.a1 * t[0] + p.a2 * t[1] + p.g;
      if (ok && v > best) {
        best = v;
        alpha = {p.a1, p.a2};
        gamma = p.g;
      }
    }
    if (!std::isfinite(best)) return std::nullopt;
  } else {
    LpModel lp;
    for (size_t m = 0; m < nv; ++m) lp.add_column(0.0, kInf, hv[m]);
    for (size_t i = 0; i < k; ++i) {
      std::vector<std::pair<int, double>> row;
      for (size_t m = 0; m < nv; ++m)
        if ((m >> i) & 1) row.push_back({static_cast<int>(m), 1.0});
      lp.add_row(std::move(row), t[i], t[i]);
    }
    std::vector<std::pair<int, double>> ones;
    for (size_t m = 0; m < nv; ++m) ones.push_back({static_cast<int>(m), 1.0});
    lp.add_row(std::move(ones), 1.0, 1.0);
    auto sol = lp_solve(lp);
    if (sol.status != LpStatus::Optimal) return std::nullopt;
    for (size_t i = 0; i < k; ++i) alpha[i] = sol.row_dual[i];
    gamma = sol.row_dual[k];
  }
  // restore validity exactly at the vertices
  double worst = 0.0;
  for (size_t m = 0; m < nv; ++m) {
    double v = gamma;
    for (size_t i = 0; i < k; ++i)
      if ((m >> i) & 1) v += alpha[i];
    worst = std::max(worst, v - hv[m]);
  }
  gamma -= worst;
  Estimator e;
  e.constant = gamma;
  for (size_t i = 0; i < k; ++i) {
    double a = alpha[i] / w[i];
    e.constant -= a * lo[i];
    if (a != 0.0) e.coefs.push_back({vars[i], a});
  }
  if (negate) {
    e.constant = -e.constant;
    for (auto& [i, c] : e.coefs) c = -c;
  }
  e.family = CutFamily::VertexPoly;
  e.bounds_used = vars;
  return e;
}

std::optional<Cut> soc_separate(const SocForm& soc, std::span<const double> point, double feastol) {
  double norm = soc.lhs_value(point);
  double rhs = soc.rhs.value(point);
  if (norm - rhs <= feastol) return std::nullopt;
  if (norm < 1e-12) return std::nullopt;
  Cut c;
  double beta = 0.0;
  for (auto& t : soc.terms) {
    double g = t.value(point) / norm;
    for (auto& [i, v] : t.v) c.coefs.push_back({i, g * v});
    beta += g * t.beta;
  }
  for (auto& [i, v] : soc.rhs.v) c.coefs.push_back({i, -v});
  tidy(c.coefs);
  c.rhs = soc.rhs.beta - beta;
  c.global = true;
  c.family = CutFamily::Soc;
  if (c.coefs.empty()) return std::nullopt;
  return c;
}

std::optional<Cut> soc_separate(const RotatedCone& cone, std::span<const double> point, double feastol) {
  SocForm s;
  AffineForm a2 = cone.a;
  for (auto& [i, v] : a2.v) v *= 2.0;
  a2.beta *= 2.0;
  AffineForm diff = cone.r, sum = cone.r;
  diff.v.push_back({cone.z, -1.0});
  sum.v.push_back({cone.z, 1.0});
  s.terms = {a2, diff};
  s.rhs = sum;
  return soc_separate(s, point, feastol);
}

std::optional<Cut> rlt_generate(const std::vector<std::pair<int, double>>& row, double rhs, int factor,
                                FactorSide side, const std::map<std::pair<int, int>, int>& products,
                                const Box& box, std::span<const double> ref) {
  if (!std::isfinite(rhs)) return std::nullopt;
  Interval fb = box[static_cast<size_t>(factor)];
  double sigma = side == FactorSide::Lower ? 1.0 : -1.0;
  double F = side == FactorSide::Lower ? fb.lo : fb.hi;
  if (!std::isfinite(F)) return std::nullopt;
  Cut c;
  double constant = sigma * rhs * F;
  std::set<int> used{factor};
  for (auto& [k, a] : row) {
    double coef = sigma * a;  // on x_k * x_factor
    auto it = products.find(std::minmax(k, factor));
    if (it != products.end()) {
      c.coefs.push_back({it->second, coef});
    } else {
      Want w = coef > 0 ? Want::Under : Want::Over;
      auto m = mccormick(box[static_cast<size_t>(k)], fb, clampd(ref[static_cast<size_t>(k)], box[static_cast<size_t>(k)]),
                         clampd(ref[static_cast<size_t>(factor)], fb), w);
      if (!m) return std::nullopt;
      c.coefs.push_back({k, coef * m->ax});
      c.coefs.push_back({factor, coef * m->ay});
      constant += coef * m->c;
      used.insert(k);
    }
    c.coefs.push_back({k, -sigma * F * a});
  }
  c.coefs.push_back({factor, -sigma * rhs});
  tidy(c.coefs);
  if (c.coefs.empty()) return std::nullopt;
  c.rhs = -constant;
  c.family = CutFamily::Rlt;
  c.bounds_used.assign(used.begin(), used.end());
  if (!numerically_sane(c)) return std::nullopt;
  return c;
}

std::optional<Cut> sdp_minor_cut(const std::array<double, 5>& v, const std::array<int, 5>& index, double tol) {
  double xi = v[0], xj = v[1], xii = v[2], xij = v[3], xjj = v[4];
  std::vector<double> a{1, xi, xj, xi, xii, xij, xj, xij, xjj};
  auto e = eig_sym(a, 3);
  if (!(e.values[0] < tol)) return std::nullopt;
  double v0 = e.vectors[0], v1 = e.vectors[1], v2 = e.vectors[2];
  Cut c;
  c.coefs = {{index[0], 2 * v0 * v1}, {index[1], 2 * v0 * v2}, {index[2], v1 * v1},
             {index[3], 2 * v1 * v2}, {index[4], v2 * v2}};
  tidy(c.coefs);
  std::erase_if(c.coefs, [](const auto& p) { return std::fabs(p.second) < 1e-14; });
  if (c.coefs.empty()) return std::nullopt;
  c.lhs = -v0 * v0;
  c.global = true;
  c.family = CutFamily::Sdp;
  return c;
}

Estimator perspective_strengthen(const Estimator& est, const std::vector<int>& nl_vars,
                                 const std::vector<double>& off, int indicator, double h_off) {
  double l0 = est.constant;
  for (size_t j = 0; j < nl_vars.size(); ++j)
    for (auto& [i, c] : est.coefs)
      if (i == nl_vars[j]) l0 += c * off[j];
  double delta = h_off - l0;
  Estimator r = est;
  r.constant += delta;
  r.add(indicator, -delta);
  r.family = CutFamily::Perspective;
  return r;
}

std::optional<Linear1> quotient_estimate(const QuotientForm& q, Interval ub, double ref, Want want) {
  if (ub.is_empty()) return std::nullopt;
  double pole = q.pole();
  if (!(pole < ub.lo || pole > ub.hi)) return std::nullopt;
  double mid = std::isfinite(ub.lo) && std::isfinite(ub.hi) ? 0.5 * (ub.lo + ub.hi)
               : std::isfinite(ub.lo)                      ? ub.lo + 1
                                                           : ub.hi - 1;
  bool convex = q.second(mid) > 0;
  bool tangent_side = (want == Want::Under) == convex;
  if (tangent_side) {
    double r = clampd(ref, ub);
    double d = q.deriv(r);
    return Linear1{d, q.value(r) - d * r};
  }
  if (!ub.bounded()) return std::nullopt;
  if (ub.lo == ub.hi) return Linear1{0.0, q.value(ub.lo)};
  double slope = (q.value(ub.hi) - q.value(ub.lo)) / (ub.hi - ub.lo);
  return Linear1{slope, q.value(ub.lo) - slope * ub.lo};
}

std::optional<Estimator> quotient_estimate(const ExprDag& dag, NodeId node, const Box& box,
                                           std::span<const double> ref, Want want, Substitution sub) {
  auto q = match_quotient(dag, node, [&](NodeId id) { return sub.index(id); });
  if (!q) return std::nullopt;
  auto l = quotient_estimate(*q, box[static_cast<size_t>(q->u)], ref[static_cast<size_t>(q->u)], want);
  if (!l) return std::nullopt;
  Estimator e;
  e.coefs.push_back({q->u, l->slope});
  e.constant = l->intercept;
  e.family = CutFamily::Quotient;
  e.bounds_used = {q->u};
  return e;
}

namespace {

std::optional<Estimator> quadratic_estimate(const ExtConstraint& c, const Box& box, std::span<const double> point,
                                            Want want, const ExprDag& dag, const ExtendedForm& ef) {
  const auto& q = *c.quad;
  size_t k = q.terms.size();
  if (k <= 16) {
    std::vector<double> m(k * k, 0.0);
    for (size_t i = 0; i < k; ++i) {
      m[i * k + i] = q.terms[i].a;
      for (auto& [j, b] : q.terms[i].partners) {
        m[i * k + static_cast<size_t>(j)] += b / 2;
        m[static_cast<size_t>(j) * k + i] += b / 2;
      }
    }
    auto e = eig_sym(m, static_cast<int>(k));
    bool convex = e.values.front() >= -1e-9, concave = e.values.back() <= 1e-9;
    if ((convex && want == Want::Under) || (concave && want == Want::Over)) {
      auto g = gradient_cut(dag, c.node, point, ef.sub(c));
      if (g) {
        g->family = CutFamily::Quadratic;
        return g;
      }
    }
  }
  Estimator e;
  e.constant = q.constant;
  e.global = true;
  e.family = CutFamily::Quadratic;
  std::set<int> used;
  auto var = [&](size_t i) { return c.quad_vars[i]; };
  for (size_t i = 0; i < k; ++i) {
    const auto& t = q.terms[i];
    int yi = var(i);
    Interval bi = box[static_cast<size_t>(yi)];
    double ri = clampd(point[static_cast<size_t>(yi)], bi);
    if (t.c != 0.0) e.add(yi, t.c);
    if (t.a != 0.0) {
      bool tangent_side = (t.a > 0) == (want == Want::Under);
      if (tangent_side) {
        e.add(yi, 2 * t.a * ri);
        e.constant -= t.a * ri * ri;
      } else {
        if (!bi.bounded()) return std::nullopt;
        e.add(yi, t.a * (bi.lo + bi.hi));
        e.constant -= t.a * bi.lo * bi.hi;
        used.insert(yi);
        e.global = false;
      }
    }
    for (auto& [j, b] : t.partners) {
      int yj = var(static_cast<size_t>(j));
      Interval bj = box[static_cast<size_t>(yj)];
      Want w = b > 0 ? want : (want == Want::Under ? Want::Over : Want::Under);
      auto mc = mccormick(bi, bj, ri, clampd(point[static_cast<size_t>(yj)], bj), w);
      if (!mc) return std::nullopt;
      e.add(yi, b * mc->ax);
      e.add(yj, b * mc->ay);
      e.constant += b * mc->c;
      used.insert(yi);
      used.insert(yj);
      e.global = false;
    }
  }
  e.bounds_used.assign(used.begin(), used.end());
  return e;
}

}  // namespace

std::optional<Estimator> estimate_constraint(const ExprDag& dag, const ExtendedForm& ef, const ExtConstraint& c,
                                             const Box& box, const Box& root_box, std::span<const double> point,
                                             Want want) {
  std::vector<double> pt(point.begin(), point.end());
  for (size_t i = 0; i < pt.size() && i < box.size(); ++i) pt[i] = clampd(pt[i], box[i]);
  std::optional<Estimator> e;
  auto sub = ef.sub(c);
  switch (c.handler) {
    case Handler::Linear:
    case Handler::Product:
    case Handler::Univariate: {
      std::vector<bool> integral(ef.vars.size());
      for (size_t i = 0; i < ef.vars.size(); ++i) integral[i] = ef.vars[i].integer;
      e = estimate(dag, c.node, box, pt, want, sub, &root_box, &integral);
      break;
    }
    case Handler::Convex:
    case Handler::Concave: {
      bool tangent_side = (c.handler == Handler::Convex) == (want == Want::Under);
      if (tangent_side) {
        e = gradient_cut(dag, c.node, pt, sub);
        if (!e) {
          // nudge towards the box center when the point sits on a singularity
          for (double lam : {1e-6, 1e-3, 0.1}) {
            std::vector<double> q = pt;
            for (int v : c.leaves) {
              Interval b = box[static_cast<size_t>(v)];
              if (b.bounded()) q[static_cast<size_t>(v)] = (1 - lam) * q[static_cast<size_t>(v)] + lam * b.mid();
            }
            e = gradient_cut(dag, c.node, q, sub);
            if (e) break;
          }
        }
      } else {
        e = vertexpoly_under(dag, c.node, c.leaves, box, pt, sub, want == Want::Over);
      }
      break;
    }
    case Handler::Quadratic:
      e = quadratic_estimate(c, box, pt, want, dag, ef);
      break;
    case Handler::Quotient: {
      auto l = quotient_estimate(c.quot, box[static_cast<size_t>(c.quot.u)], pt[static_cast<size_t>(c.quot.u)], want);
      if (l) {
        Estimator q;
        q.coefs.push_back({c.quot.u, l->slope});
        q.constant = l->intercept;
        q.family = CutFamily::Quotient;
        q.bounds_used = {c.quot.u};
        e = q;
      }
      break;
    }
    case Handler::Soc:
      return std::nullopt;
  }
  if (!e || !numerically_sane(*e)) return std::nullopt;
  tidy(e->coefs);
  return e;
}

std::vector<int> original_vars(const ExprDag& dag, const ExtendedForm& ef, const std::vector<int>& ext) {
  std::set<int> out;
  for (int e : ext) {
    if (e < ef.num_original) {
      out.insert(e);
      continue;
    }
    NodeId n = ef.vars[static_cast<size_t>(e)].node;
    if (n < 0) continue;
    for (int v : variables_of(dag, n)) out.insert(v);
  }
  return {out.begin(), out.end()};
}

Cut estimator_cut(const ExprDag& dag, const ExtendedForm& ef, const Estimator& est, int out, Want want) {
  Cut c;
  c.coefs = est.coefs;
  c.coefs.push_back({out, -1.0});
  tidy(c.coefs);
  if (want == Want::Under)
    c.rhs = -est.constant;
  else
    c.lhs = -est.constant;
  c.global = est.global;
  c.family = est.family;
  c.bounds_used = original_vars(dag, ef, est.bounds_used);
  return c;
}

std::vector<Cut> incumbent_linearization(const ExprDag& dag, const ExtendedForm& ef, std::span<const double> point) {
  std::vector<Cut> out;
  Box root = ef.box();
  for (auto& c : ef.cons) {
    if (c.handler == Handler::Soc) {
      if (auto cut = soc_separate(ef.socs[static_cast<size_t>(c.soc)], point, -kInf)) {
        cut->family = CutFamily::Incumbent;
        out.push_back(*cut);
      }
      continue;
    }
    for (Want w : {Want::Under, Want::Over}) {
      if ((w == Want::Under && !c.need_le) || (w == Want::Over && !c.need_ge)) continue;
      auto e = estimate_constraint(dag, ef, c, root, root, point, w);
      if (!e || !e->global || e->coefs.empty()) continue;
      if (e->family == CutFamily::Linear) continue;
      Cut cut = estimator_cut(dag, ef, *e, c.out, w);
      cut.family = CutFamily::Incumbent;
      out.push_back(std::move(cut));
    }
  }
  return out;
}

}  // namespace minlp
