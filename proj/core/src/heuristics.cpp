#include "minlp/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "minlp/lp.hpp"

namespace minlp {

namespace {

struct Row {
  Constraint c;
  double value(const ExprDag& dag, std::span<const double> x) const {
    try {
      double v = constraint_value(dag, c, x);
      return std::isfinite(v) ? v : std::nan("");
    } catch (const DomainError&) {
      return std::nan("");
    }
  }
  // signed violation: > 0 above hi, < 0 below lo
  double excess(double v) const {
    if (std::isnan(v)) return std::nan("");
    if (v > c.sides.hi) return v - c.sides.hi;
    if (v < c.sides.lo) return v - c.sides.lo;
    return 0.0;
  }
  std::vector<std::pair<int, double>> gradient(const ExprDag& dag, std::span<const double> x) const {
    std::map<int, double> g;
    if (c.root >= 0) {
      try {
        for (auto& [i, d] : grad(dag, c.root, x).grad) g[i] += d;
      } catch (const DomainError&) {
        return {};
      }
    }
    for (auto& t : c.linear) g[t.var] += t.coef;
    std::vector<std::pair<int, double>> out;
    for (auto& [i, d] : g)
      if (std::isfinite(d) && d != 0.0) out.push_back({i, d});
    return out;
  }
};

std::vector<Row> rows_of(const Problem& p) {
  std::vector<Row> r;
  for (auto& c : p.constraints()) r.push_back({c});
  return r;
}

double row_violation(const ExprDag& dag, const std::vector<Row>& rows, std::span<const double> x) {
  double m = 0.0;
  for (auto& r : rows) {
    double e = r.excess(r.value(dag, x));
    if (std::isnan(e)) return kInf;
    m = std::max(m, std::fabs(e));
  }
  return m;
}

void clip(std::vector<double>& x, const Box& b) {
  for (size_t j = 0; j < x.size(); ++j) x[j] = std::min(std::max(x[j], b[j].lo), b[j].hi);
}

double merit(const ExprDag& dag, const std::vector<Row>& rows, std::span<const double> x) {
  double s = 0.0;
  for (auto& r : rows) {
    double e = r.excess(r.value(dag, x));
    if (std::isnan(e)) return kInf;
    s += e * e;
  }
  return s;
}

std::vector<double> merit_gradient(const ExprDag& dag, const std::vector<Row>& rows, std::span<const double> x) {
  std::vector<double> g(x.size(), 0.0);
  for (auto& r : rows) {
    double e = r.excess(r.value(dag, x));
    if (!(std::fabs(e) > 0.0)) continue;
    for (auto& [i, d] : r.gradient(dag, x)) g[static_cast<size_t>(i)] += 2 * e * d;
  }
  return g;
}

// projected gradient on the squared violation; returns iterations used
int restore(const ExprDag& dag, const std::vector<Row>& rows, const Box& box, const std::vector<bool>& frozen,
            std::vector<double>& x, int max_iters, double target) {
  double m = merit(dag, rows, x);
  double t = 1.0;
  int it = 0;
  for (; it < max_iters; ++it) {
    if (row_violation(dag, rows, x) <= target) break;
    auto g = merit_gradient(dag, rows, x);
    double gn = 0.0;
    for (size_t j = 0; j < g.size(); ++j) {
      if (frozen[j]) g[j] = 0.0;
      gn += g[j] * g[j];
    }
    if (!(gn > 1e-30)) break;
    bool moved = false;
    for (int h = 0; h < 40; ++h) {
      std::vector<double> y = x;
      for (size_t j = 0; j < y.size(); ++j) y[j] -= t * g[j];
      clip(y, box);
      double my = merit(dag, rows, y);
      if (my < m) {
        x = std::move(y);
        m = my;
        moved = true;
        t *= 2.0;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  return it;
}

double objective_of(const Problem& p, std::span<const double> x) {
  double v = p.objective(x);
  return p.maximize ? -v : v;  // minimization view
}

}  // namespace

double max_violation(const Problem& p, std::span<const double> x) {
  auto v = violations(p, x);
  return std::max({v.linear, v.nonlinear, v.bounds});
}

Candidate constraint_consensus(const Problem& p, std::span<const double> start, int max_iters, double feastol) {
  auto rows = rows_of(p);
  Box box = p.box();
  std::vector<double> x(start.begin(), start.end());
  clip(x, box);
  double viol = row_violation(p.dag, rows, x);
  Candidate best{x, viol, p.objective(x), 0};
  int it = 0;
  for (; it < max_iters && viol > feastol; ++it) {
    std::vector<double> d(x.size(), 0.0);
    int count = 0;
    for (auto& r : rows) {
      double e = r.excess(r.value(p.dag, x));
      if (!(std::fabs(e) > feastol)) continue;
      auto g = r.gradient(p.dag, x);
      double n2 = 0.0;
      for (auto& [i, v] : g) n2 += v * v;
      if (!(n2 > 0.0)) continue;
      for (auto& [i, v] : g) d[static_cast<size_t>(i)] -= e / n2 * v;
      ++count;
    }
    if (count == 0) break;
    for (double& v : d) v /= count;
    bool accepted = false;
    double step = 1.0;
    for (int h = 0; h <= 5; ++h, step *= 0.5) {
      std::vector<double> y = x;
      for (size_t j = 0; j < y.size(); ++j) y[j] += step * d[j];
      clip(y, box);
      double vy = row_violation(p.dag, rows, y);
      if (vy < viol) {
        x = std::move(y);
        viol = vy;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    best = {x, viol, p.objective(x), it + 1};
  }
  best.iterations = std::max(best.iterations, 0);
  return best;
}

std::vector<Candidate> multistart(const Problem& p, int samples, std::uint64_t seed, const MultistartOptions& opts) {
  std::vector<Candidate> out;
  if (samples <= 0) return out;
  std::mt19937_64 rng(seed);
  Box sb = p.box();
  double diam2 = 0.0;
  for (auto& b : sb) {
    b.lo = std::max(b.lo, -opts.sample_clamp);
    b.hi = std::min(b.hi, opts.sample_clamp);
    if (b.hi < b.lo) b.hi = b.lo;
    diam2 += b.width() * b.width();
  }
  double radius = opts.cluster_radius * std::sqrt(diam2);
  std::vector<Candidate> pts;
  for (int s = 0; s < samples; ++s) {
    std::vector<double> x(sb.size());
    for (size_t j = 0; j < sb.size(); ++j) {
      std::uniform_real_distribution<double> U(sb[j].lo, sb[j].hi);
      x[j] = sb[j].width() > 0 ? U(rng) : sb[j].lo;
    }
    pts.push_back(constraint_consensus(p, x, opts.consensus_iters, opts.feastol));
  }
  // single linkage
  std::vector<int> parent(pts.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) { return parent[static_cast<size_t>(a)] == a ? a : parent[static_cast<size_t>(a)] = find(parent[static_cast<size_t>(a)]); };
  for (size_t a = 0; a < pts.size(); ++a)
    for (size_t b = a + 1; b < pts.size(); ++b) {
      double d2 = 0.0;
      for (size_t j = 0; j < sb.size(); ++j) {
        double dj = pts[a].point[j] - pts[b].point[j];
        d2 += dj * dj;
      }
      if (std::sqrt(d2) <= radius) {
        int ra = find(static_cast<int>(a)), rb = find(static_cast<int>(b));
        if (ra != rb) parent[static_cast<size_t>(std::max(ra, rb))] = std::min(ra, rb);
      }
    }
  std::map<int, std::vector<size_t>> clusters;
  for (size_t a = 0; a < pts.size(); ++a) clusters[find(static_cast<int>(a))].push_back(a);
  for (auto& [root, members] : clusters) {
    std::vector<double> avg(sb.size(), 0.0);
    size_t best = members.front();
    for (size_t m : members) {
      for (size_t j = 0; j < sb.size(); ++j) avg[j] += pts[m].point[j] / static_cast<double>(members.size());
      if (pts[m].max_violation < pts[best].max_violation) best = m;
    }
    auto round_ints = [&](std::vector<double>& x) {
      for (size_t j = 0; j < x.size(); ++j)
        if (p.vars[j].integer()) x[j] = std::round(x[j]);
    };
    round_ints(avg);
    std::vector<double> rep = avg;
    if (max_violation(p, avg) > pts[best].max_violation) {
      rep = pts[best].point;
      round_ints(rep);
    }
    if (auto c = fix_and_polish(p, rep, opts.feastol)) {
      out.push_back(std::move(*c));
    } else {
      out.push_back({rep, max_violation(p, rep), p.objective(rep), 0});
    }
  }
  return out;
}

std::optional<Candidate> fix_and_polish(const Problem& p, std::span<const double> point, double feastol, int max_iters) {
  Problem q = p;
  std::vector<double> x(point.begin(), point.end());
  for (size_t j = 0; j < q.vars.size(); ++j) {
    auto& v = q.vars[j];
    if (v.integer()) {
      double r = std::round(x[j]);
      if (r < v.lb - 1e-9 || r > v.ub + 1e-9) return std::nullopt;
      v.lb = v.ub = r;
      x[j] = r;
    }
  }
  auto box = fbbt_sweep(q, q.box(), 10);
  if (!box) return std::nullopt;
  for (size_t j = 0; j < q.vars.size(); ++j) {
    if ((*box)[j].is_empty()) return std::nullopt;
    q.vars[j].lb = (*box)[j].lo;
    q.vars[j].ub = (*box)[j].hi;
  }
  clip(x, *box);

  auto accept = [&](std::vector<double> y, int iters) -> std::optional<Candidate> {
    auto viol = violations(p, y);
    if (viol.max() > feastol) return std::nullopt;
    return Candidate{y, viol.max(), p.objective(y), iters};
  };

  auto pre = presolve(q);
  if (pre.infeasible) return std::nullopt;
  if (pre.problem.nonlinear.empty()) {
    const Problem& r = pre.problem;
    LpModel lp;
    for (size_t j = 0; j < r.vars.size(); ++j)
      lp.add_column(r.vars[j].lb, r.vars[j].ub, r.maximize ? -r.obj[j] : r.obj[j]);
    for (auto& row : r.linear) {
      std::vector<std::pair<int, double>> e;
      for (auto& t : row.terms) e.push_back({t.var, t.coef});
      lp.add_row(std::move(e), row.lo, row.hi);
    }
    auto sol = lp_solve(lp);
    if (sol.status != LpStatus::Optimal) return std::nullopt;
    auto y = pre.log.to_original(sol.x);
    for (size_t j = 0; j < y.size(); ++j)
      if (q.vars[j].lb == q.vars[j].ub) y[j] = q.vars[j].lb;
    if (auto c = accept(y, sol.iterations)) return c;
    // tiny LP slack: one restoration pass on the original rows
    auto rows = rows_of(p);
    std::vector<bool> frozen(y.size());
    for (size_t j = 0; j < y.size(); ++j) frozen[j] = q.vars[j].lb == q.vars[j].ub;
    restore(p.dag, rows, *box, frozen, y, 20, 0.1 * feastol);
    return accept(y, sol.iterations);
  }

  auto rows = rows_of(q);
  std::vector<bool> frozen(x.size());
  for (size_t j = 0; j < x.size(); ++j) frozen[j] = q.vars[j].lb == q.vars[j].ub;
  double target = 0.1 * feastol;
  int used = restore(q.dag, rows, *box, frozen, x, max_iters / 2, target);
  if (row_violation(q.dag, rows, x) > target) return accept(x, used);
  // objective descent, each step followed by a restoration
  std::vector<double> c(x.size(), 0.0);
  for (size_t j = 0; j < x.size(); ++j) c[j] = (p.maximize ? -1.0 : 1.0) * p.obj[j];
  double cn = 0.0;
  for (size_t j = 0; j < x.size(); ++j)
    if (!frozen[j]) cn += c[j] * c[j];
  cn = std::sqrt(cn);
  double t = 0.1;
  double cur = objective_of(p, x);
  while (used < max_iters && cn > 0 && t > 1e-10) {
    std::vector<double> y = x;
    for (size_t j = 0; j < y.size(); ++j)
      if (!frozen[j]) y[j] -= t * c[j] / cn;
    clip(y, *box);
    used += 1 + restore(q.dag, rows, *box, frozen, y, 30, target);
    double oy = objective_of(p, y);
    if (row_violation(q.dag, rows, y) <= target && oy < cur - 1e-12) {
      x = std::move(y);
      cur = oy;
      t *= 2.0;
    } else {
      t *= 0.25;
    }
  }
  return accept(x, used);
}

namespace {

void collect_requirements(const ExprDag& dag, NodeId id, std::vector<CoverRequirement>& out, std::set<NodeId>& seen) {
  if (!seen.insert(id).second) return;
  const auto& n = dag[id];
  switch (n.op) {
    case Op::Val:
    case Op::Var:
      return;
    case Op::Sum:
      for (NodeId c : n.children) collect_requirements(dag, c, out, seen);
      return;
    case Op::Prod: {
      if (n.children.size() == 1) {
        collect_requirements(dag, n.children[0], out, seen);
        return;
      }
      bool affine = true;
      std::vector<std::vector<int>> vars;
      for (NodeId c : n.children) {
        if (!as_affine(dag, c)) affine = false;
        vars.push_back(variables_of(dag, c));
      }
      CoverRequirement r;
      if (affine) {
        for (size_t keep = 0; keep < vars.size(); ++keep) {
          std::set<int> alt;
          for (size_t j = 0; j < vars.size(); ++j)
            if (j != keep) alt.insert(vars[j].begin(), vars[j].end());
          r.alternatives.push_back({alt.begin(), alt.end()});
        }
      } else {
        r.alternatives.push_back(variables_of(dag, id));
      }
      out.push_back(std::move(r));
      return;
    }
    default: {
      auto v = variables_of(dag, id);
      if (!v.empty()) out.push_back({{v}});
      return;
    }
  }
}

}  // namespace

std::vector<CoverRequirement> cover_requirements(const Problem& p) {
  std::vector<CoverRequirement> out;
  std::set<NodeId> seen;
  for (auto& r : p.nonlinear) collect_requirements(p.dag, r.root, out, seen);
  return out;
}

std::vector<int> greedy_cover(const std::vector<CoverRequirement>& reqs, int num_vars,
                              const std::vector<bool>& already_fixed) {
  std::vector<bool> fixed(static_cast<size_t>(num_vars), false);
  for (size_t j = 0; j < already_fixed.size() && j < fixed.size(); ++j) fixed[j] = already_fixed[j];
  auto satisfied = [&](const CoverRequirement& r) {
    for (auto& alt : r.alternatives)
      if (std::all_of(alt.begin(), alt.end(), [&](int v) { return fixed[static_cast<size_t>(v)]; })) return true;
    return false;
  };
  std::vector<int> chosen;
  while (true) {
    std::vector<double> score(static_cast<size_t>(num_vars), 0.0);
    bool open = false;
    for (auto& r : reqs) {
      if (satisfied(r)) continue;
      open = true;
      std::vector<double> best(static_cast<size_t>(num_vars), 0.0);
      for (auto& alt : r.alternatives) {
        int missing = 0;
        for (int v : alt) missing += !fixed[static_cast<size_t>(v)];
        for (int v : alt)
          if (!fixed[static_cast<size_t>(v)]) best[static_cast<size_t>(v)] = std::max(best[static_cast<size_t>(v)], 1.0 / missing);
      }
      for (size_t v = 0; v < best.size(); ++v) score[v] += best[v];
    }
    if (!open) break;
    int pick = -1;
    for (int v = 0; v < num_vars; ++v)
      if (!fixed[static_cast<size_t>(v)] && score[static_cast<size_t>(v)] > 0 &&
          (pick < 0 || score[static_cast<size_t>(v)] > score[static_cast<size_t>(pick)]))
        pick = v;
    if (pick < 0) break;
    fixed[static_cast<size_t>(pick)] = true;
    chosen.push_back(pick);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

Problem fix_variables(const Problem& p, const std::vector<int>& vars, std::span<const double> values) {
  Problem q = p;
  for (int j : vars) {
    auto& v = q.vars[static_cast<size_t>(j)];
    double x = values[static_cast<size_t>(j)];
    if (v.integer()) x = std::round(x);
    x = std::min(std::max(x, v.lb), v.ub);
    v.lb = v.ub = x;
  }
  return q;
}

}  // namespace minlp
