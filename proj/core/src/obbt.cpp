#include "minlp/obbt.hpp"

#include <cmath>

#include "minlp/propagation.hpp"

namespace minlp {

Interval lvb_apply(const Lvb& lvb, const Box& box, double cutoff) {
  double s = lvb.upper ? 1.0 : -1.0;
  // in the upper orientation: bound = c + mu*U + max over the box of r.y
  double b = s * lvb.constant;
  if (lvb.mu > 0.0) b += lvb.mu * cutoff;
  for (auto& [j, r] : lvb.coefs) {
    double rr = s * r;
    const Interval& iv = box[static_cast<size_t>(j)];
    double v = rr > 0 ? iv.hi : iv.lo;
    b += rr * v;
  }
  if (std::isnan(b)) b = kInf;
  return lvb.upper ? Interval{-kInf, b} : Interval{-b, kInf};
}

double lvb_rhs(const Lvb& lvb, std::span<const double> y, double cutoff) {
  double s = lvb.upper ? 1.0 : -1.0;
  double b = s * lvb.constant + (lvb.mu > 0 ? lvb.mu * cutoff : 0.0);
  for (auto& [j, r] : lvb.coefs) b += s * r * y[static_cast<size_t>(j)];
  return s * b;
}

namespace {

// From an optimal max of s*x_k: s*x_k <= sum pi_i side_i + mu U + sum r_j y_j.
std::optional<Lvb> harvest(const LpModel& lp, const LpSolution& sol, int k, bool upper, bool has_cutoff,
                           double cutoff) {
  double s = upper ? 1.0 : -1.0;
  int n = lp.num_cols();
  std::vector<double> r(static_cast<size_t>(n), 0.0);
  r[static_cast<size_t>(k)] = s;
  double constant = 0.0, mu = 0.0;
  for (int i = 0; i < lp.num_rows(); ++i) {
    double pi = sol.row_dual[static_cast<size_t>(i)];
    if (std::fabs(pi) < 1e-12) continue;
    const auto& row = lp.row(i);
    double side = pi > 0 ? row.hi : row.lo;
    bool is_cutoff = has_cutoff && i == lp.num_rows() - 1;
    if (is_cutoff) {
      if (pi < 0) return std::nullopt;
      mu = pi;
    } else {
      if (!std::isfinite(side)) return std::nullopt;
      constant += pi * side;
    }
    for (auto& [j, a] : row.entries) r[static_cast<size_t>(j)] -= pi * a;
  }
  if (!std::isfinite(cutoff)) mu = 0.0;
  // a leftover term on x_k itself is moved to the left
  double self = r[static_cast<size_t>(k)];
  double lead = 1.0 - s * self;  // s*x_k*(1 - s*self)
  r[static_cast<size_t>(k)] = 0.0;
  if (!(lead > 1e-9)) return std::nullopt;
  Lvb l;
  l.target = k;
  l.upper = upper;
  l.constant = s * constant / lead;
  l.mu = mu / lead;
  for (int j = 0; j < n; ++j) {
    double v = r[static_cast<size_t>(j)];
    if (std::fabs(v) > 1e-12) l.coefs.push_back({j, s * v / lead});
  }
  return l;
}

}  // namespace

ObbtResult obbt_root(const LpModel& relaxation, const Box& box, std::span<const double> cutoff_obj, double cutoff,
                     const std::vector<int>& candidates, const ObbtOptions& opts,
                     const std::function<std::optional<Box>(const Box&)>& propagate) {
  ObbtResult res;
  res.box = box;
  LpModel lp = relaxation;
  bool has_cutoff = std::isfinite(cutoff) && !cutoff_obj.empty();
  if (has_cutoff) {
    std::vector<std::pair<int, double>> row;
    for (size_t j = 0; j < cutoff_obj.size(); ++j)
      if (cutoff_obj[j] != 0.0) row.push_back({static_cast<int>(j), cutoff_obj[j]});
    if (row.empty())
      has_cutoff = false;
    else
      lp.add_row(std::move(row), -kInf, cutoff);
  }
  int budget = opts.iteration_budget >= 0 ? opts.iteration_budget : 50 * static_cast<int>(candidates.size());
  for (int j = 0; j < lp.num_cols(); ++j) lp.set_objective(j, 0.0);
  lp.set_maximize(true);
  Basis basis;
  auto sync_bounds = [&]() {
    for (int j = 0; j < lp.num_cols(); ++j) lp.set_bounds(j, res.box[static_cast<size_t>(j)].lo, res.box[static_cast<size_t>(j)].hi);
  };
  sync_bounds();
  for (int k : candidates) {
    for (bool upper : {true, false}) {
      int left = budget - res.iterations;
      if (left <= 0) return res;
      lp.set_objective(k, upper ? 1.0 : -1.0);
      auto sol = lp_solve(lp, basis.empty() ? nullptr : &basis, left);
      lp.set_objective(k, 0.0);
      res.iterations += sol.iterations;
      ++res.solves;
      if (sol.status == LpStatus::Infeasible) {
        res.infeasible = true;
        return res;
      }
      if (sol.status != LpStatus::Optimal) continue;
      basis = sol.basis;
      double v = upper ? sol.objective : -sol.objective;
      double slack = 1e-10 * std::max(1.0, std::fabs(v));
      Interval& cur = res.box[static_cast<size_t>(k)];
      Interval proposed = upper ? Interval{cur.lo, std::max(cur.lo, v + slack)} : Interval{std::min(cur.hi, v - slack), cur.hi};
      bool integer = static_cast<size_t>(k) < opts.integer.size() && opts.integer[static_cast<size_t>(k)];
      bool changed = false;
      cur = accept_tightening(cur, proposed, integer, &changed);
      if (changed) {
        ++res.tightened;
        lp.set_bounds(k, cur.lo, cur.hi);
      }
      if (auto l = harvest(lp, sol, k, upper, has_cutoff, cutoff)) res.lvbs.push_back(std::move(*l));
      if (propagate && opts.propagate_every > 0 && res.solves % opts.propagate_every == 0) {
        auto p = propagate(res.box);
        if (!p) {
          res.infeasible = true;
          return res;
        }
        res.box = std::move(*p);
        sync_bounds();
      }
    }
  }
  return res;
}

}  // namespace minlp
