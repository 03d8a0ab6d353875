#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "minlp/interval.hpp"
#include "minlp/lp.hpp"

namespace minlp {

// x_k <= constant + mu*U + sum r_j y_j   (upper)
// x_k >= constant - mu*U + sum r_j y_j   (lower)
struct Lvb {
  int target = -1;
  bool upper = true;
  std::vector<std::pair<int, double>> coefs;  // r, never on the target
  double constant = 0.0;
  double mu = 0.0;  // multiplier of the cutoff row, >= 0
};

// Bound implied on x_k by the box and the cutoff U.
Interval lvb_apply(const Lvb& lvb, const Box& box, double cutoff);

// value of the right-hand side at a point (for validity checks)
double lvb_rhs(const Lvb& lvb, std::span<const double> y, double cutoff);

struct ObbtOptions {
  int iteration_budget = -1;  // total simplex iterations, -1: 50 per candidate
  int propagate_every = 5;
  std::vector<bool> integer;  // per column; empty means continuous
};

struct ObbtResult {
  Box box;
  std::vector<Lvb> lvbs;
  int solves = 0;
  int iterations = 0;
  int tightened = 0;
  bool infeasible = false;
};

// Relaxation rows are those of `relaxation` (columns give the variables);
// `cutoff_obj` (may be empty) adds the row cutoff_obj . y <= cutoff when the
// cutoff is finite. `propagate` is called between solves.
ObbtResult obbt_root(const LpModel& relaxation, const Box& box, std::span<const double> cutoff_obj, double cutoff,
                     const std::vector<int>& candidates, const ObbtOptions& opts = {},
                     const std::function<std::optional<Box>(const Box&)>& propagate = {});

}  // namespace minlp
