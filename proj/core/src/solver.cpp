#include "minlp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <queue>

#include "minlp/lp.hpp"
#include "minlp/obbt.hpp"
#include "minlp/propagation.hpp"

namespace minlp {

const char* status_name(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::GapLimit: return "gap-limit";
    case Status::TimeLimit: return "time-limit";
    case Status::NodeLimit: return "node-limit";
    case Status::Abort: return "abort";
  }
  return "?";
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Cutoff: return "cutoff";
    case Outcome::BoundsTightened: return "bounds-tightened";
    case Outcome::CutsAdded: return "cuts-added";
    case Outcome::Branched: return "branched";
    case Outcome::Feasible: return "feasible";
  }
  return "?";
}

const std::vector<std::string>& known_toggles() {
  static const std::vector<std::string> names{"quadratic", "soc",       "convex",      "concave",  "quotient",
                                              "rlt",       "sdp",       "perspective", "incumbent", "obbt",
                                              "lvb",       "multistart", "undercover", "polish"};
  return names;
}

std::string Stats::to_json() const {
  nlohmann::json j;
  j["nodes"] = nodes;
  j["lp_solves"] = lp_solves;
  j["lp_iterations"] = lp_iterations;
  j["max_depth"] = max_depth;
  j["cuts"] = cuts;
  j["heuristic_wins"] = heuristic_wins;
  j["obbt_tightened"] = obbt_tightened;
  j["lvbs"] = lvbs;
  j["lvb_tightened"] = lvb_tightened;
  j["pool_size"] = pool_size;
  j["seconds"] = seconds;
  return j.dump(2);
}

double gap_tolerance(double primal, const Settings& s) {
  if (!std::isfinite(primal)) return 0.0;
  return std::max(s.abs_gap, s.rel_gap * std::fabs(primal));
}

// ---------------------------------------------------------------- branching

void Pseudocosts::record(int var, bool up, double g) {
  if (!std::isfinite(g) || g < 0) return;
  auto v = static_cast<size_t>(var);
  if (v >= sum_.size()) {
    sum_.resize(v + 1, {0.0, 0.0});
    count_.resize(v + 1, {0, 0});
  }
  if (up) {
    sum_[v].second += g;
    ++count_[v].second;
  } else {
    sum_[v].first += g;
    ++count_[v].first;
  }
}

void Pseudocosts::set(int var, double down, double up) {
  auto v = static_cast<size_t>(var);
  if (v >= sum_.size()) {
    sum_.resize(v + 1, {0.0, 0.0});
    count_.resize(v + 1, {0, 0});
  }
  sum_[v] = {down, up};
  count_[v] = {1, 1};
}

double Pseudocosts::estimate(int var) const {
  auto v = static_cast<size_t>(var);
  if (v >= sum_.size()) return 1e-6;
  auto [cd, cu] = count_[v];
  if (cd == 0 && cu == 0) return 1e-6;
  double d = cd ? sum_[v].first / cd : sum_[v].second / cu;
  double u = cu ? sum_[v].second / cu : d;
  return std::max(std::sqrt(std::max(d, 0.0) * std::max(u, 0.0)), 1e-6);
}

double branch_point(Interval b, double xhat, double lambda) {
  double x = std::min(std::max(xhat, b.lo), b.hi);
  double p = lambda * x + (1 - lambda) * b.mid();
  double w = b.width();
  return std::min(std::max(p, b.lo + 1e-4 * w), b.hi - 1e-4 * w);
}

std::optional<BranchDecision> select_branching(const std::vector<BranchCandidate>& candidates, const Pseudocosts& pc,
                                               std::span<const double> xhat, const Box& box,
                                               const std::vector<bool>& integer, double lambda) {
  int best = -1;
  double best_score = -1.0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    double s = candidates[i].weight * std::max(pc.estimate(candidates[i].var), 1e-6);
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(i);
    }
  }
  if (best < 0) return std::nullopt;
  int v = candidates[static_cast<size_t>(best)].var;
  Interval b = box[static_cast<size_t>(v)];
  BranchDecision d;
  d.var = v;
  d.integer = static_cast<size_t>(v) < integer.size() && integer[static_cast<size_t>(v)];
  double x = std::min(std::max(xhat[static_cast<size_t>(v)], b.lo), b.hi);
  if (d.integer) {
    double p = std::floor(x + 1e-9);
    if (p >= b.hi) p = b.hi - 1;
    if (p < b.lo) p = b.lo;
    d.point = p;  // children [lo, p] and [p + 1, hi]
  } else {
    d.point = branch_point(b, x, lambda);
  }
  return d;
}

// ---------------------------------------------------------------- relaxation

namespace {

ExtOptions ext_options(const Settings& s) {
  return {s.enabled("quadratic"), s.enabled("soc"), s.enabled("convex"), s.enabled("concave"), s.enabled("quotient")};
}

Interval widen(Interval a) {
  double e = 1e-9 * std::max(1.0, std::max(std::fabs(a.lo), std::fabs(a.hi)));
  if (!std::isfinite(e)) e = 0.0;
  return {a.lo - e, a.hi + e};
}

void merge_candidate(std::vector<BranchCandidate>& out, int var, double w) {
  for (auto& c : out)
    if (c.var == var) {
      c.weight = std::max(c.weight, w);
      return;
    }
  out.push_back({var, w});
}

bool widthy(Interval b) { return b.width() > 1e-9 * std::max(1.0, std::fabs(b.mid())); }

}  // namespace

Relaxation::Relaxation(const Problem& presolved, const Settings& settings)
    : p_(presolved), ef_(build_extended_form(presolved, ext_options(settings))), s_(settings) {
  for (auto& sc : detect_semicontinuous(p_)) semicont_[sc.var] = sc;
}

Box Relaxation::ext_box(const Box& box) const {
  Box e(ef_.vars.size());
  for (size_t j = 0; j < e.size(); ++j) {
    if (j < box.size() && static_cast<int>(j) < ef_.num_original) {
      e[j] = box[j];
      continue;
    }
    const auto& v = ef_.vars[j];
    e[j] = v.bounds;
    if (v.node >= 0) {
      Interval iv = ieval(p_.dag, v.node, box);
      iv = {std::max(iv.lo, -kBoundClip), std::min(iv.hi, kBoundClip)};
      e[j] = intersect(v.bounds, widen(iv));
    }
  }
  return e;
}

std::optional<Box> Relaxation::quad_propagate(const Box& ebox) const {
  Box b = ebox;
  for (auto& c : ef_.cons) {
    if (!c.quad || c.out < 0) continue;
    std::vector<Interval> ybox;
    for (int v : c.quad_vars) ybox.push_back(b[static_cast<size_t>(v)]);
    Interval w = b[static_cast<size_t>(c.out)];
    Interval target{c.need_ge ? w.lo : -kInf, c.need_le ? w.hi : kInf};
    auto r = quad_prop(*c.quad, ybox, target);
    if (!r) return std::nullopt;
    for (size_t i = 0; i < c.quad_vars.size(); ++i) {
      auto v = static_cast<size_t>(c.quad_vars[i]);
      bool integer = static_cast<int>(v) < ef_.num_original && p_.vars[v].integer();
      Interval t = accept_tightening(b[v], widen((*r)[i]), integer);
      if (t.is_empty()) return std::nullopt;
      b[v] = t;
    }
  }
  return b;
}

std::optional<Estimator> Relaxation::strengthen(const ExtConstraint& c, const Estimator& e, const Box& ebox) const {
  if (!s_.enabled("perspective") || semicont_.empty() || c.leaves.empty()) return std::nullopt;
  int ind = -1;
  std::vector<double> off;
  for (int v : c.leaves) {
    if (v >= ef_.num_original) return std::nullopt;
    auto it = semicont_.find(v);
    if (it == semicont_.end()) return std::nullopt;
    if (ind >= 0 && it->second.indicator != ind) return std::nullopt;
    ind = it->second.indicator;
    off.push_back(it->second.off_value);
  }
  if (std::find(c.leaves.begin(), c.leaves.end(), ind) != c.leaves.end()) return std::nullopt;
  Interval ib = ebox[static_cast<size_t>(ind)];
  if (!(ib.lo < ib.hi)) return std::nullopt;
  std::vector<double> pt(ef_.vars.size(), 0.0);
  for (size_t i = 0; i < c.leaves.size(); ++i) pt[static_cast<size_t>(c.leaves[i])] = off[i];
  double h_off;
  try {
    h_off = ef_.h_value(p_.dag, c, pt);
  } catch (const DomainError&) {
    return std::nullopt;
  }
  if (!std::isfinite(h_off)) return std::nullopt;
  auto r = perspective_strengthen(e, c.leaves, off, ind, h_off);
  r.bounds_used = e.bounds_used;
  r.global = false;
  if (!numerically_sane(r)) return std::nullopt;
  return r;
}

std::vector<Cut> Relaxation::initial_cuts(const Box& ebox, const Box& root, std::span<const double> ref) const {
  std::vector<Cut> out;
  std::vector<double> pt(ref.begin(), ref.end());
  for (size_t j = 0; j < pt.size(); ++j) pt[j] = std::min(std::max(pt[j], ebox[j].lo), ebox[j].hi);
  for (auto& c : ef_.cons) {
    if (c.handler == Handler::Linear) continue;
    if (c.handler == Handler::Soc) {
      const auto& d = ef_.disagg[static_cast<size_t>(c.soc)];
      if (d) {
        for (auto& rc : d->cones)
          if (auto cut = soc_separate(rc, pt, -kInf)) out.push_back(*cut);
      } else if (auto cut = soc_separate(ef_.socs[static_cast<size_t>(c.soc)], pt, -kInf)) {
        out.push_back(*cut);
      }
      continue;
    }
    for (Want w : {Want::Under, Want::Over}) {
      if ((w == Want::Under && !c.need_le) || (w == Want::Over && !c.need_ge)) continue;
      auto e = estimate_constraint(p_.dag, ef_, c, ebox, root, pt, w);
      if (!e) continue;
      if (w == Want::Under)
        if (auto s = strengthen(c, *e, ebox)) e = s;
      out.push_back(estimator_cut(p_.dag, ef_, *e, c.out, w));
    }
  }
  return out;
}

EnforceResult Relaxation::separate(const Box& ebox, const Box& root, std::span<const double> y) const {
  EnforceResult res;
  res.outcome = Outcome::Branched;
  const double tol = 0.1 * s_.feastol;
  bool useful = false;
  auto consider = [&](Cut cut, double cons_violation) {
    double cv = cut.violation(y);
    if (!(cv > 1e-6)) return;
    if (cv >= s_.branch_ratio * cons_violation) useful = true;
    res.best_cut_violation = std::max(res.best_cut_violation, cv);
    res.cuts.push_back(std::move(cut));
  };
  for (auto& c : ef_.cons) {
    if (c.handler == Handler::Linear) continue;
    if (c.handler == Handler::Soc) {
      const auto& soc = ef_.socs[static_cast<size_t>(c.soc)];
      double v = soc.lhs_value(y) - soc.rhs.value(y);
      const auto& d = ef_.disagg[static_cast<size_t>(c.soc)];
      double dv = 0.0;
      if (d)
        for (auto& rc : d->cones) {
          double a = rc.a.value(y), r = rc.r.value(y), z = y[static_cast<size_t>(rc.z)];
          dv = std::max(dv, std::sqrt(4 * a * a + (r - z) * (r - z)) - (r + z));
        }
      double viol = std::max(v, dv);
      if (!(viol > tol)) continue;
      res.max_violation = std::max(res.max_violation, viol);
      if (d) {
        for (auto& rc : d->cones)
          if (auto cut = soc_separate(rc, y, s_.feastol)) consider(*cut, viol);
      } else if (auto cut = soc_separate(soc, y, s_.feastol)) {
        consider(*cut, viol);
      }
      std::vector<int> ext;
      for (auto& t : soc.terms)
        for (auto& [i, a] : t.v) ext.push_back(i);
      for (auto& [i, a] : soc.rhs.v) ext.push_back(i);
      for (int v2 : original_vars(p_.dag, ef_, ext))
        if (widthy(ebox[static_cast<size_t>(v2)])) merge_candidate(res.candidates, v2, viol);
      continue;
    }
    double h, w = y[static_cast<size_t>(c.out)];
    try {
      h = ef_.h_value(p_.dag, c, y);
    } catch (const DomainError&) {
      h = std::nan("");
    }
    double viol;
    std::vector<Want> wants;
    if (std::isnan(h)) {
      viol = 1.0;
      if (c.need_le) wants.push_back(Want::Under);
      if (c.need_ge) wants.push_back(Want::Over);
    } else {
      double up = c.need_le ? h - w : 0.0, dn = c.need_ge ? w - h : 0.0;
      viol = std::max({0.0, up, dn});
      if (up > tol) wants.push_back(Want::Under);
      if (dn > tol) wants.push_back(Want::Over);
    }
    if (wants.empty()) continue;
    res.max_violation = std::max(res.max_violation, viol);
    std::vector<int> marked;
    for (Want want : wants) {
      auto e = estimate_constraint(p_.dag, ef_, c, ebox, root, y, want);
      if (!e) continue;
      if (want == Want::Under)
        if (auto s = strengthen(c, *e, ebox)) e = s;
      Cut cut = estimator_cut(p_.dag, ef_, *e, c.out, want);
      marked.insert(marked.end(), cut.bounds_used.begin(), cut.bounds_used.end());
      consider(std::move(cut), viol);
    }
    if (marked.empty()) marked = original_vars(p_.dag, ef_, c.leaves);
    for (int v2 : marked)
      if (widthy(ebox[static_cast<size_t>(v2)])) merge_candidate(res.candidates, v2, viol);
  }

  if (s_.enabled("sdp") && !ef_.products.empty()) {
    const auto& pr = ef_.products;
    for (auto& [key, xij] : pr) {
      auto [i, j] = key;
      if (i == j) continue;
      auto ii = pr.find({i, i}), jj = pr.find({j, j});
      if (ii == pr.end() || jj == pr.end()) continue;
      std::array<double, 5> vals{y[static_cast<size_t>(i)], y[static_cast<size_t>(j)], y[static_cast<size_t>(ii->second)],
                                 y[static_cast<size_t>(xij)], y[static_cast<size_t>(jj->second)]};
      if (auto cut = sdp_minor_cut(vals, {i, j, ii->second, xij, jj->second})) consider(*cut, res.max_violation);
    }
  }
  if (s_.enabled("rlt") && !ef_.products.empty() && res.max_violation > 0) {
    std::set<int> in_products;
    for (auto& [key, z] : ef_.products) {
      in_products.insert(key.first);
      in_products.insert(key.second);
    }
    for (auto& row : p_.linear) {
      if (row.terms.size() > 10) continue;
      std::vector<Cut> found;
      for (int side = 0; side < 2; ++side) {
        double rhs = side == 0 ? row.hi : -row.lo;
        if (!std::isfinite(rhs)) continue;
        std::vector<std::pair<int, double>> a;
        for (auto& t : row.terms) a.push_back({t.var, side == 0 ? t.coef : -t.coef});
        for (int f : in_products) {
          if (f >= ef_.num_original) continue;
          bool related = false;
          for (auto& t : row.terms)
            if (ef_.products.count(std::minmax(t.var, f))) related = true;
          if (!related) continue;
          for (auto fs : {FactorSide::Lower, FactorSide::Upper})
            if (auto cut = rlt_generate(a, rhs, f, fs, ef_.products, ebox, y))
              if (cut->violation(y) > 1e-6) found.push_back(std::move(*cut));
        }
      }
      std::sort(found.begin(), found.end(), [&](const Cut& a, const Cut& b) { return a.violation(y) > b.violation(y); });
      if (found.size() > 2) found.resize(2);
      for (auto& c : found) consider(std::move(c), res.max_violation);
    }
  }
  if (useful) res.outcome = Outcome::CutsAdded;
  return res;
}

EnforceResult Relaxation::enforce(const Box& box, const Box& root, std::span<const double> y) const {
  EnforceResult res;
  res.box = box;
  for (auto& c : p_.constraints()) {
    Interval act;
    if (c.root >= 0) {
      act = ieval(p_.dag, c.root, box);
    } else {
      act = {0, 0};
      for (auto& t : c.linear) act = act + t.coef * box[static_cast<size_t>(t.var)];
    }
    Interval s = widen(c.sides);
    if (act.is_empty() || act.hi < s.lo || act.lo > s.hi) {
      res.outcome = Outcome::Cutoff;
      return res;
    }
  }
  auto tight = fbbt_sweep(p_, box, 3);
  if (!tight) {
    res.outcome = Outcome::Cutoff;
    return res;
  }
  for (size_t j = 0; j < tight->size(); ++j) {
    double x = y[j];
    if (x < (*tight)[j].lo - 1e-9 || x > (*tight)[j].hi + 1e-9) {
      res.outcome = Outcome::BoundsTightened;
      res.box = *tight;
      return res;
    }
  }
  std::span<const double> x(y.data(), p_.vars.size());
  if (violations(p_, x).max() <= s_.feastol) {
    res.outcome = Outcome::Feasible;
    return res;
  }
  auto sep = separate(ext_box(box), root, y);
  sep.box = box;
  if (sep.outcome == Outcome::Branched && sep.candidates.empty()) {
    for (auto& row : p_.nonlinear) {
      double v;
      try {
        v = eval(p_.dag, row.root, x);
      } catch (const DomainError&) {
        v = std::nan("");
      }
      double viol = std::isnan(v) ? 1.0 : std::max({0.0, row.lo - v, v - row.hi});
      if (viol <= s_.feastol) continue;
      for (int var : variables_of(p_.dag, row.root))
        if (widthy(box[static_cast<size_t>(var)])) merge_candidate(sep.candidates, var, viol);
    }
  }
  return sep;
}

// ---------------------------------------------------------------- driver

namespace {

using Clock = std::chrono::steady_clock;

struct Node {
  Box box;
  int depth = 0;
  double lb = -kInf;
  long id = 0;
  std::vector<double> ref;
  // pseudocost bookkeeping
  int branch_var = -1;
  bool up = false;
  double frac = 0.0;
  double parent_obj = -kInf;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.lb != b.lb) return a.lb > b.lb;
    return a.id > b.id;
  }
};

struct PoolCut {
  Cut cut;
  int age = 0;
};

class Engine {
 public:
  Engine(const Problem& problem, const Settings& s) : orig_(problem), s_(s) {}

  SolveResult run();

 private:
  Problem orig_;
  Settings s_;
  Clock::time_point start_;
  std::optional<Relaxation> rel_;
  TransformLog log_;
  Stats stats_;
  double sgn_ = 1.0;
  size_t n_ = 0;
  std::vector<bool> integer_, disj_;
  Box root_box_, root_ext_;
  std::vector<Lvb> lvbs_;
  std::vector<PoolCut> pool_;
  Pseudocosts pc_;
  double U_ = kInf;  // internal (minimization) incumbent value
  std::vector<double> best_;   // original space
  double unresolved_ = kInf;
  bool numerics_ = false;
  bool obbt_done_ = false;
  long next_id_ = 1;

  const Problem& P() const { return rel_->problem(); }
  const ExtendedForm& E() const { return rel_->ext(); }
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }
  double tol() const { return gap_tolerance(U_, s_); }

  bool try_incumbent(std::vector<double> x, const std::string& source);
  std::optional<Box> propagate(Box box, bool use_lvb);
  void process(Node node, std::vector<Node>& children);
  void run_obbt(const LpModel& lp, Box& ebox);
  std::vector<int> obbt_candidates() const;
  void add_pool(const Cut& c, int age) {
    if (pool_.size() >= 4000) return;
    pool_.push_back({c, age});
  }
};

bool Engine::try_incumbent(std::vector<double> x, const std::string& source) {
  const Problem& p = P();
  if (x.size() < p.vars.size()) return false;
  x.resize(p.vars.size());
  for (size_t j = 0; j < x.size(); ++j) {
    const auto& v = p.vars[j];
    if (v.integer()) x[j] = std::round(x[j]);
    if (x[j] < v.lb && x[j] > v.lb - s_.feastol) x[j] = v.lb;
    if (x[j] > v.ub && x[j] < v.ub + s_.feastol) x[j] = v.ub;
  }
  if (p.objective_var >= 0 && p.objective_expr >= 0) {
    try {
      double f = eval(p.dag, p.objective_expr, x);
      if (std::isfinite(f)) x[static_cast<size_t>(p.objective_var)] = f;
    } catch (const DomainError&) {
    }
  }
  if (violations(p, x).max() > s_.feastol) return false;
  auto xo = log_.to_original(x);
  xo.resize(orig_.vars.size(), 0.0);
  if (orig_.objective_var >= 0 && orig_.objective_expr >= 0) {
    try {
      double f = eval(orig_.dag, orig_.objective_expr, xo);
      if (std::isfinite(f)) xo[static_cast<size_t>(orig_.objective_var)] = f;
    } catch (const DomainError&) {
    }
  }
  if (violations(orig_, xo).max() > s_.feastol) return false;
  double val = sgn_ * orig_.objective(xo);
  if (!(val < U_ - 1e-12 * std::max(1.0, std::fabs(val)))) return false;
  U_ = val;
  best_ = xo;
  ++stats_.heuristic_wins[source];
  if (s_.enabled("incumbent")) {
    try {
      auto y = E().lift(p.dag, x);
      for (auto& c : incumbent_linearization(p.dag, E(), y)) add_pool(c, s_.cut_age);
    } catch (const DomainError&) {
    }
  }
  return true;
}

std::optional<Box> Engine::propagate(Box box, bool use_lvb) {
  const Problem& p = P();
  for (int pass = 0; pass < 2; ++pass) {
    if (use_lvb && !lvbs_.empty() && s_.enabled("lvb")) {
      Box eb = rel_->ext_box(box);
      for (auto& l : lvbs_) {
        auto k = static_cast<size_t>(l.target);
        Interval iv = widen(lvb_apply(l, eb, U_));
        Interval nb = intersect(box[k], iv);
        if (integer_[k]) nb = {std::ceil(nb.lo - 1e-9), std::floor(nb.hi + 1e-9)};
        if (nb.is_empty()) return std::nullopt;
        if (!(nb == box[k])) {
          box[k] = nb;
          eb[k] = nb;
          ++stats_.lvb_tightened;
        }
      }
    }
    auto t = fbbt_sweep(p, box, 5);
    if (!t) return std::nullopt;
    box = std::move(*t);
    Box eb = rel_->ext_box(box);
    for (auto& iv : eb)
      if (iv.is_empty()) return std::nullopt;
    auto q = rel_->quad_propagate(eb);
    if (!q) return std::nullopt;
    bool changed = false;
    for (size_t j = 0; j < n_; ++j)
      if (!((*q)[j] == box[j])) {
        box[j] = (*q)[j];
        changed = true;
      }
    if (!changed) break;
  }
  for (auto& iv : box)
    if (iv.is_empty()) return std::nullopt;
  return box;
}

std::vector<int> Engine::obbt_candidates() const {
  const Problem& p = P();
  std::vector<int> count(n_, 0);
  for (auto& r : p.nonlinear)
    for (int v : variables_of(p.dag, r.root)) ++count[static_cast<size_t>(v)];
  std::vector<int> c;
  for (size_t j = 0; j < n_; ++j)
    if (count[j] > 0 && root_box_[j].lo < root_box_[j].hi) c.push_back(static_cast<int>(j));
  std::stable_sort(c.begin(), c.end(), [&](int a, int b) { return count[static_cast<size_t>(a)] > count[static_cast<size_t>(b)]; });
  return c;
}

void Engine::run_obbt(const LpModel& lp, Box& ebox) {
  obbt_done_ = true;
  auto cands = obbt_candidates();
  if (cands.empty()) return;
  std::vector<double> cobj(ebox.size(), 0.0);
  for (size_t j = 0; j < n_; ++j) cobj[j] = sgn_ * P().obj[j];
  ObbtOptions o;
  o.integer.assign(ebox.size(), false);
  for (size_t j = 0; j < n_; ++j) o.integer[j] = integer_[j];
  double cutoff = std::isfinite(U_) ? U_ - sgn_ * P().obj_offset : kInf;
  auto prop = [&](const Box& eb) -> std::optional<Box> {
    Box b(eb.begin(), eb.begin() + static_cast<std::ptrdiff_t>(n_));
    auto t = fbbt_sweep(P(), b, 3);
    if (!t) return std::nullopt;
    Box out = rel_->ext_box(*t);
    for (size_t j = n_; j < out.size(); ++j) out[j] = intersect(out[j], eb[j]);
    return out;
  };
  auto r = obbt_root(lp, ebox, cobj, cutoff, cands, o, prop);
  stats_.lp_iterations += r.iterations;
  stats_.lp_solves += r.solves;
  if (r.infeasible) return;
  stats_.obbt_tightened += r.tightened;
  for (size_t j = 0; j < n_; ++j) root_box_[j] = intersect(root_box_[j], r.box[j]);
  ebox = r.box;
  // LVB constants were derived without the objective offset
  for (auto& l : r.lvbs) {
    if (l.mu > 0) l.constant -= (l.upper ? 1.0 : -1.0) * l.mu * sgn_ * P().obj_offset;
    lvbs_.push_back(std::move(l));
  }
  stats_.lvbs = static_cast<int>(lvbs_.size());
}

void Engine::process(Node node, std::vector<Node>& children) {
  const Problem& p = P();
  const ExtendedForm& ef = E();
  ++stats_.nodes;
  stats_.max_depth = std::max(stats_.max_depth, node.depth);
  bool is_root = node.depth == 0;

restart:
  auto pb = propagate(node.box, !is_root || obbt_done_);
  if (!pb) return;
  node.box = std::move(*pb);
  if (is_root) {
    root_box_ = node.box;
    root_ext_ = rel_->ext_box(root_box_);
  }
  Box ebox = rel_->ext_box(node.box);
  for (auto& iv : ebox)
    if (iv.is_empty()) return;
  const size_t N = ebox.size();

  // reference point for the first estimators
  std::vector<double> ref = node.ref;
  if (ref.size() != N) {
    std::vector<double> mid(n_);
    for (size_t j = 0; j < n_; ++j) {
      Interval b = node.box[j];
      mid[j] = std::isfinite(b.lo) && std::isfinite(b.hi) ? b.mid() : std::min(std::max(0.0, b.lo), b.hi);
    }
    try {
      ref = ef.lift(p.dag, mid);
    } catch (const DomainError&) {
      ref.assign(N, 0.0);
      for (size_t j = 0; j < N; ++j) ref[j] = std::min(std::max(0.0, ebox[j].lo), ebox[j].hi);
    }
  }

  LpModel lp;
  for (size_t j = 0; j < N; ++j) lp.add_column(ebox[j].lo, ebox[j].hi, j < n_ ? sgn_ * p.obj[j] : 0.0);
  auto add_cut_row = [&](const Cut& c) {
    lp.add_row(c.coefs, c.lhs, c.rhs);
    ++stats_.cuts[cut_family_name(c.family)];
  };
  for (auto& row : p.linear) {
    std::vector<std::pair<int, double>> e;
    for (auto& t : row.terms) e.push_back({t.var, t.coef});
    lp.add_row(std::move(e), row.lo, row.hi);
  }
  for (auto& c : ef.cons) {
    if (c.handler != Handler::Linear) continue;
    auto e = estimate_constraint(p.dag, ef, c, ebox, root_ext_, ref, Want::Under);
    if (!e) continue;
    Cut cut = estimator_cut(p.dag, ef, *e, c.out, Want::Under);
    double k = -e->constant;
    lp.add_row(cut.coefs, c.need_ge ? k : -kInf, c.need_le ? k : kInf);
  }
  for (auto& d : ef.disagg)
    if (d) lp.add_row(d->row, -kInf, d->row_hi);
  std::vector<int> pool_row(pool_.size(), -1);
  for (size_t i = 0; i < pool_.size(); ++i)
    if (pool_[i].age < s_.cut_age) {
      pool_row[i] = lp.num_rows();
      lp.add_row(pool_[i].cut.coefs, pool_[i].cut.lhs, pool_[i].cut.rhs);
    }
  for (auto& c : rel_->initial_cuts(ebox, root_ext_, ref)) add_cut_row(c);

  Basis basis;
  bool polished = false;
  EnforceResult sep;
  LpSolution sol;
  double lb = node.lb;
  bool lp_ok = false;
  for (int round = 0;; ++round) {
    sol = lp_solve(lp, basis.empty() ? nullptr : &basis);
    ++stats_.lp_solves;
    stats_.lp_iterations += sol.iterations;
    if (sol.status == LpStatus::Infeasible) return;
    if (sol.status != LpStatus::Optimal) {
      // retry cold before giving up on the LP
      if (!basis.empty()) {
        basis = {};
        sol = lp_solve(lp);
        ++stats_.lp_solves;
        stats_.lp_iterations += sol.iterations;
        if (sol.status == LpStatus::Infeasible) return;
      }
      if (sol.status != LpStatus::Optimal) {
        numerics_ = true;
        lp_ok = false;
        break;
      }
    }
    lp_ok = true;
    basis = sol.basis;
    double obj = sol.objective + sgn_ * p.obj_offset;
    if (round == 0 && node.branch_var >= 0 && std::isfinite(node.parent_obj) && node.frac > 0)
      pc_.record(node.branch_var, node.up, std::max(0.0, obj - node.parent_obj) / node.frac);
    lb = std::max(lb, obj);
    if (lb >= U_ - tol()) return;
    // age pool rows
    for (size_t i = 0; i < pool_row.size(); ++i) {
      if (pool_row[i] < 0) continue;
      bool active = std::fabs(sol.row_dual[static_cast<size_t>(pool_row[i])]) > 1e-12;
      pool_[i].age = active ? 0 : pool_[i].age + 1;
    }
    std::span<const double> y(sol.x);
    std::vector<double> xhat(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(n_));
    bool integral = true;
    for (size_t j = 0; j < n_; ++j) {
      if (integer_[j] && std::fabs(xhat[j] - std::round(xhat[j])) > 1e-6) integral = false;
      Interval b = node.box[j];
      if (disj_[j] && xhat[j] > b.lo + s_.feastol && xhat[j] < b.hi - s_.feastol) integral = false;
    }
    if (integral) {
      if (violations(p, xhat).max() <= s_.feastol) {
        if (try_incumbent(xhat, "lp")) {
          // node solved when the LP value is attained
          if (obj >= U_ - tol()) return;
        }
      }
      if (!polished && s_.enabled("polish")) {
        polished = true;
        if (auto c = fix_and_polish(p, xhat, s_.feastol)) try_incumbent(c->point, "polish");
        if (lb >= U_ - tol()) return;
      }
    }
    sep = rel_->separate(ebox, root_ext_, y);
    // pool cuts that were aged out but separate this point
    bool revived = false;
    pool_row.resize(pool_.size(), -1);
    for (size_t i = 0; i < pool_.size(); ++i) {
      if (pool_row[i] >= 0 || pool_[i].cut.violation(y) <= 1e-6) continue;
      pool_[i].age = 0;
      pool_row[i] = lp.num_rows();
      lp.add_row(pool_[i].cut.coefs, pool_[i].cut.lhs, pool_[i].cut.rhs);
      revived = true;
    }
    bool more = (sep.outcome == Outcome::CutsAdded || revived) && round < s_.sep_rounds;
    if (!more) break;
    if (sep.outcome == Outcome::CutsAdded) {
      for (auto& c : sep.cuts) {
        if (c.global) {
          add_pool(c, 0);
          pool_row.resize(pool_.size(), -1);
          pool_row[pool_.size() - 1] = lp.num_rows();
        }
        add_cut_row(c);
      }
    }
    basis.rows.resize(static_cast<size_t>(lp.num_rows()), VarStatus::Basic);
  }
  pool_row.resize(pool_.size(), -1);

  if (is_root && lp_ok && !obbt_done_ && s_.enabled("obbt")) {
    Box before = root_box_;
    run_obbt(lp, ebox);
    if (!(before == root_box_)) {
      node.box = root_box_;
      goto restart;
    }
  }
  if (is_root && lp_ok && s_.enabled("undercover") && !p.nonlinear.empty()) {
    if (auto c = undercover(p, sol.x, s_)) try_incumbent(c->point, "undercover");
  } else if (!is_root && lp_ok && s_.enabled("undercover") && !p.nonlinear.empty() && s_.undercover_frequency > 0 &&
             stats_.nodes % s_.undercover_frequency == 0) {
    if (auto c = undercover(p, sol.x, s_)) try_incumbent(c->point, "undercover");
  }
  if (lb >= U_ - tol()) return;

  // branching
  std::vector<double> y = lp_ok ? sol.x : ref;
  std::vector<double> xhat(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n_));
  std::optional<BranchDecision> dec;
  std::vector<BranchCandidate> frac;
  for (size_t j = 0; j < n_; ++j) {
    if (integer_[j] && std::fabs(xhat[j] - std::round(xhat[j])) > 1e-6)
      frac.push_back({static_cast<int>(j), 0.5 - std::fabs(xhat[j] - std::floor(xhat[j]) - 0.5)});
  }
  std::optional<int> disj;
  for (size_t j = 0; j < n_ && !disj; ++j) {
    Interval b = node.box[j];
    if (disj_[j] && xhat[j] > b.lo + s_.feastol && xhat[j] < b.hi - s_.feastol) disj = static_cast<int>(j);
  }
  std::vector<BranchCandidate> spatial;
  if (frac.empty() && !disj) {
    if (lp_ok) {
      auto enf = rel_->enforce(node.box, root_ext_, y);
      if (enf.outcome == Outcome::Cutoff) return;
      if (enf.outcome == Outcome::BoundsTightened) {
        Node again = node;
        again.box = enf.box;
        again.lb = lb;
        again.ref = y;
        again.branch_var = -1;
        children.push_back(std::move(again));
        return;
      }
      if (enf.outcome == Outcome::Feasible) {
        try_incumbent(xhat, "lp");
        if (!(lb < U_ - tol())) return;
      }
      spatial = enf.candidates;
      std::vector<BranchCandidate> ok;
      for (auto& c : spatial) {
        Interval b = node.box[static_cast<size_t>(c.var)];
        if (integer_[static_cast<size_t>(c.var)] ? b.lo < b.hi : widthy(b)) ok.push_back(c);
      }
      spatial = std::move(ok);
    }
    if (spatial.empty()) {
      // widest nonlinear variable
      int w = -1;
      for (auto& r : p.nonlinear)
        for (int v : variables_of(p.dag, r.root)) {
          Interval b = node.box[static_cast<size_t>(v)];
          bool can = integer_[static_cast<size_t>(v)] ? b.lo < b.hi : widthy(b);
          if (can && (w < 0 || b.width() > node.box[static_cast<size_t>(w)].width())) w = v;
        }
      if (w >= 0) spatial.push_back({w, 1.0});
    }
  }
  if (disj) {
    int v = *disj;
    Interval b = node.box[static_cast<size_t>(v)];
    for (double at : {b.lo, b.hi}) {
      Node c = node;
      c.box[static_cast<size_t>(v)] = {at, at};
      c.depth = node.depth + 1;
      c.lb = lb;
      c.ref = y;
      c.branch_var = -1;
      c.id = next_id_++;
      children.push_back(std::move(c));
    }
    return;
  }
  const auto& cands = frac.empty() ? spatial : frac;
  if (!cands.empty()) dec = select_branching(cands, pc_, xhat, node.box, integer_, s_.branch_lambda);
  if (!dec) {
    // nothing left to split: a leaf that could not be resolved
    try_incumbent(xhat, "lp");
    if (lb < U_ - tol()) unresolved_ = std::min(unresolved_, lb);
    return;
  }
  Interval b = node.box[static_cast<size_t>(dec->var)];
  double obj = lp_ok ? sol.objective + sgn_ * p.obj_offset : -kInf;
  double x = std::min(std::max(xhat[static_cast<size_t>(dec->var)], b.lo), b.hi);
  Node down = node, upn = node;
  if (dec->integer) {
    down.box[static_cast<size_t>(dec->var)] = {b.lo, dec->point};
    upn.box[static_cast<size_t>(dec->var)] = {dec->point + 1, b.hi};
    down.frac = std::max(x - dec->point, 1e-6);
    upn.frac = std::max(dec->point + 1 - x, 1e-6);
  } else {
    down.box[static_cast<size_t>(dec->var)] = {b.lo, dec->point};
    upn.box[static_cast<size_t>(dec->var)] = {dec->point, b.hi};
    down.frac = (b.hi - dec->point) / std::max(b.width(), 1e-300);
    upn.frac = (dec->point - b.lo) / std::max(b.width(), 1e-300);
  }
  for (Node* c : {&down, &upn}) {
    c->depth = node.depth + 1;
    c->lb = lb;
    c->ref = y;
    c->branch_var = dec->var;
    c->parent_obj = obj;
    c->id = next_id_++;
  }
  down.up = false;
  upn.up = true;
  // the child holding the LP point first
  if (x <= dec->point) {
    children.push_back(std::move(down));
    children.push_back(std::move(upn));
  } else {
    children.push_back(std::move(upn));
    children.push_back(std::move(down));
  }
}

SolveResult Engine::run() {
  start_ = Clock::now();
  SolveResult res;
  sgn_ = orig_.maximize ? -1.0 : 1.0;
  auto finish = [&](Status st, double dual_internal) {
    res.status = st;
    stats_.seconds = elapsed();
    stats_.pool_size = static_cast<long>(pool_.size());
    res.stats = stats_;
    if (!best_.empty()) {
      res.incumbent = best_;
      res.primal = sgn_ * U_;
    } else {
      res.primal = sgn_ * kInf;
    }
    double d = std::min(dual_internal, U_);
    res.dual = sgn_ * d;
    return res;
  };

  Problem work = orig_;
  work.synthesize_missing_bounds(s_.inf_bound);
  auto pre = presolve(work);
  if (pre.infeasible) return finish(Status::Infeasible, kInf);
  log_ = pre.log;
  rel_.emplace(pre.problem, s_);
  const Problem& p = P();
  n_ = p.vars.size();
  integer_ = p.integrality();
  disj_.assign(n_, false);
  for (size_t j = 0; j < n_; ++j) disj_[j] = p.vars[j].bound_disjunction;
  pc_ = Pseudocosts(n_);
  root_box_ = p.box();
  root_ext_ = rel_->ext_box(root_box_);

  if (!p.has_integers() && s_.enabled("multistart") && s_.multistart_samples > 0 && !p.nonlinear.empty()) {
    MultistartOptions mo;
    mo.feastol = s_.feastol;
    for (auto& c : multistart(p, s_.multistart_samples, s_.seed, mo)) try_incumbent(c.point, "multistart");
  }

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  Node root;
  root.box = root_box_;
  std::optional<Node> next = std::move(root);
  int plunge = 0;
  double monotone_dual = -kInf;
  auto open_bound = [&]() {
    double d = unresolved_;
    if (next) d = std::min(d, next->lb);
    if (!open.empty()) d = std::min(d, open.top().lb);
    return d;
  };
  while (next || !open.empty()) {
    if (elapsed() > s_.time_limit) {
      monotone_dual = std::max(monotone_dual, open_bound());
      return finish(Status::TimeLimit, monotone_dual);
    }
    if (s_.node_limit >= 0 && stats_.nodes >= s_.node_limit) {
      monotone_dual = std::max(monotone_dual, open_bound());
      return finish(Status::NodeLimit, monotone_dual);
    }
    Node node;
    if (next) {
      node = std::move(*next);
      next.reset();
    } else {
      node = open.top();
      open.pop();
      plunge = 0;
    }
    if (node.lb >= U_ - tol()) continue;
    std::vector<Node> kids;
    process(std::move(node), kids);
    for (size_t i = 0; i < kids.size(); ++i) {
      if (kids[i].lb >= U_ - tol()) continue;
      if (i == 0 && plunge < s_.plunge_depth && !next) {
        next = std::move(kids[i]);
        ++plunge;
      } else {
        open.push(std::move(kids[i]));
      }
    }
    monotone_dual = std::max(monotone_dual, std::min(open_bound(), U_));
  }
  bool loose = s_.rel_gap > Settings{}.rel_gap || s_.abs_gap > Settings{}.abs_gap;
  if (best_.empty()) {
    if (std::isfinite(unresolved_)) return finish(numerics_ ? Status::Abort : Status::GapLimit, unresolved_);
    return finish(numerics_ ? Status::Abort : Status::Infeasible, kInf);
  }
  double dual = std::max(monotone_dual, std::min(unresolved_, U_ - tol()));
  if (unresolved_ < U_ - tol()) return finish(numerics_ ? Status::Abort : Status::GapLimit, unresolved_);
  return finish(loose ? Status::GapLimit : Status::Optimal, std::min(dual, U_));
}

}  // namespace

SolveResult solve(const Problem& problem, const Settings& settings) {
  Engine e(problem, settings);
  return e.run();
}

std::optional<Candidate> undercover(const Problem& p, std::span<const double> ref, const Settings& settings) {
  auto reqs = cover_requirements(p);
  if (reqs.empty()) return std::nullopt;
  std::vector<bool> fixed(p.vars.size());
  for (size_t j = 0; j < p.vars.size(); ++j) fixed[j] = p.vars[j].lb == p.vars[j].ub;
  auto cover = greedy_cover(reqs, static_cast<int>(p.vars.size()), fixed);
  if (cover.empty()) return std::nullopt;
  Problem q = fix_variables(p, cover, ref);
  Settings sub = settings;
  sub.node_limit = settings.undercover_nodes;
  sub.time_limit = std::min(settings.time_limit, 10.0);
  for (const char* name : {"undercover", "multistart", "obbt", "lvb", "incumbent"}) sub.disabled.insert(name);
  SolveResult r;
  try {
    r = solve(q, sub);
  } catch (const ModelError&) {
    return std::nullopt;
  }
  if (!r.has_incumbent()) return std::nullopt;
  auto x = r.incumbent;
  x.resize(p.vars.size(), 0.0);
  double v = max_violation(p, x);
  if (v > settings.feastol) return std::nullopt;
  return Candidate{x, v, p.objective(x), 0};
}

}  // namespace minlp
