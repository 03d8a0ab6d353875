#pragma once

#include <optional>
#include <vector>

#include "minlp/expr.hpp"
#include "minlp/interval.hpp"

namespace minlp {

// Interval of every node in `order` (ascending ids), indexed by node id.
std::vector<Interval> forward_intervals(const ExprDag& dag, const std::vector<NodeId>& order, const Box& box,
                                        Substitution sub = {});

Interval ieval(const ExprDag& dag, NodeId root, const Box& box, Substitution sub = {});

// Forward value of a single node from its children's intervals.
Interval node_interval(const ExprDag& dag, const ExprNode& n, const std::vector<Interval>& iv);

// Backward step at a non-leaf node: tighten the children's entries of `iv`,
// given iv[node] already holds the admissible range. Returns false if some
// child range became empty.
bool reverse_node(const ExprDag& dag, NodeId node, std::vector<Interval>& iv);

// HC4 sweep on a single subexpression. nullopt means infeasible.
std::optional<Box> reverse_prop(const ExprDag& dag, NodeId root, Interval target, const Box& box,
                                Substitution sub = {});

struct LinearTerm {
  int var;
  double coef;
};

struct Constraint {
  // either a linear row (root < 0) or an expression root
  NodeId root = -1;
  std::vector<LinearTerm> linear;
  Interval sides = Interval::entire();
};

// Accept a new bound for an existing interval under the 5% width rule
// (always accepted if it makes an infinite bound finite); integer bounds are
// rounded inward. Returns the resulting interval.
Interval accept_tightening(Interval old, Interval proposed, bool integer, bool* changed = nullptr);

std::optional<Box> fbbt_constraint(const ExprDag& dag, const Constraint& cons, const Box& box,
                                   const std::vector<bool>& integer);

// a*y^2 + c*y + sum_j b_j*y*y_j for each base, plus a constant
struct QuadTerm {
  NodeId base = -1;
  double a = 0.0;
  double c = 0.0;
  std::vector<std::pair<int, double>> partners;  // (term index, b_ij); j in P_i => i not in P_j
};

struct QuadForm {
  NodeId root = -1;
  double constant = 0.0;
  std::vector<QuadTerm> terms;
  int index_of(NodeId base) const;
  bool pure_variables(const ExprDag& dag, Substitution sub = {}) const;
};

std::optional<QuadForm> detect_quadratic(const ExprDag& dag, NodeId root, Substitution sub = {});

// exact hull of { a*y^2 + b*y : y in ybounds, b in B }, not widened
Interval quad_range(double a, Interval B, Interval ybounds);

// Hull of q over the base box (term-block wise).
Interval quad_forward(const QuadForm& q, const std::vector<Interval>& ybox);

// Forward plus reverse over the base box. nullopt means infeasible.
std::optional<std::vector<Interval>> quad_prop(const QuadForm& q, const std::vector<Interval>& ybox,
                                               Interval qrange);

// { y in dom : a*y^2 + b*y in [rlo, rhi] } for a fixed real b, as a hull.
Interval solve_quadratic_range(double a, double b, Interval r, Interval dom);

}  // namespace minlp
