#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "minlp/expr.hpp"
#include "minlp/interval.hpp"
#include "minlp/propagation.hpp"

namespace minlp {

enum class VarType { Continuous, Integer, Binary };

struct Variable {
  std::string name;
  double lb = -kInf;
  double ub = kInf;
  VarType type = VarType::Continuous;
  // presolve: an optimal solution exists with the variable at one of its bounds
  bool bound_disjunction = false;
  bool synthesized = false;  // an infinite bound was replaced at load time
  bool integer() const { return type != VarType::Continuous; }
};

struct LinearRow {
  std::string name;
  std::vector<LinearTerm> terms;
  double lo = -kInf;
  double hi = kInf;
};

struct NonlinearRow {
  std::string name;
  NodeId root = -1;
  double lo = -kInf;
  double hi = kInf;
};

struct Problem {
  ExprDag dag;
  std::vector<Variable> vars;
  std::vector<double> obj;  // linear objective, one entry per variable
  double obj_offset = 0.0;
  bool maximize = false;
  std::vector<LinearRow> linear;
  std::vector<NonlinearRow> nonlinear;
  bool bounds_synthesized = false;
  // set when a nonlinear objective was moved into a constraint
  int objective_var = -1;
  NodeId objective_expr = -1;

  int add_var(std::string name, double lb, double ub, VarType type = VarType::Continuous);
  int find_var(const std::string& name) const;
  // min f becomes min t with f - t <= 0 (max: t <= f)
  void set_objective_expr(NodeId f, bool maximize);
  void add_linear(std::string name, std::vector<LinearTerm> terms, double lo, double hi);
  void add_nonlinear(std::string name, NodeId root, double lo, double hi);

  size_t num_vars() const { return vars.size(); }
  std::vector<bool> integrality() const;
  Box box() const;
  double objective(std::span<const double> x) const;
  bool has_integers() const;

  // replace infinite bounds by +-value, recording that it happened
  void synthesize_missing_bounds(double value);
  // all constraints in propagation form
  std::vector<Constraint> constraints() const;
};

// Affine view of an expression, if it is one (over original variables).
std::optional<std::pair<double, std::vector<LinearTerm>>> as_affine(const ExprDag& dag, NodeId root);

// Rebuild root with replacement nodes (returning -1 keeps the node), then simplify.
NodeId substitute(ExprDag& dag, NodeId root, const std::function<NodeId(NodeId)>& repl,
                  std::unordered_map<NodeId, NodeId>& memo);

struct ProductLink {
  int z, x1, x2;
};

struct TransformLog {
  int num_original = 0;
  std::vector<int> fixed;             // original vars fixed and substituted
  std::vector<int> made_binary;       // fix-to-bound with {0,1} bounds
  std::vector<int> disjunctions;      // fix-to-bound with other bounds
  std::vector<ProductLink> products;  // z = x1 * x2 over binaries
  std::vector<double> to_original(std::span<const double> presolved) const;
  std::vector<double> to_presolved(std::span<const double> original) const;
};

struct PresolveResult {
  Problem problem;
  TransformLog log;
  bool infeasible = false;
};

std::optional<Box> fbbt_sweep(const Problem& p, const Box& box, int max_rounds = 10);

PresolveResult presolve(const Problem& problem);

std::vector<int> fix_to_bound_candidates(const Problem& problem);

// Replace x1*x2 over binaries by z with its exact linearization. Products
// sharing a node share z. Returns the new links.
std::vector<ProductLink> linearize_binary_products(Problem& problem);

struct SemiContInfo {
  int var = -1;
  int indicator = -1;
  double off_value = 0.0;
  Interval on_range;
};

std::vector<SemiContInfo> detect_semicontinuous(const Problem& problem);

// absolute violations by class at a full assignment
struct Violation {
  double linear = 0.0;
  double nonlinear = 0.0;
  double bounds = 0.0;
  double integrality = 0.0;
  double max() const { return std::max({linear, nonlinear, bounds, integrality}); }
};
Violation violations(const Problem& p, std::span<const double> x);

// value of a propagation-form constraint; throws DomainError
double constraint_value(const ExprDag& dag, const Constraint& c, std::span<const double> x);

}  // namespace minlp
