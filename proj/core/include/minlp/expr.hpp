#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "minlp/interval.hpp"

namespace minlp {

using NodeId = std::int32_t;

enum class Op : std::uint8_t { Val, Var, Sum, Prod, Pow, SignPower, Exp, Log, Entropy, Sin, Cos, Abs };

const char* op_name(Op op);

struct ExprNode {
  Op op = Op::Val;
  std::vector<NodeId> children;
  std::vector<double> coefs;  // sum only, one per child
  double constant = 0.0;      // val: the value; sum: a0; prod: factor c
  double exponent = 0.0;      // pow, signpower
  int var = -1;               // var only
};

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Append-only hash-consed arena. Children always have smaller ids than parents.
class ExprDag {
 public:
  NodeId val(double v);
  NodeId var(int index);
  NodeId sum(double a0, std::vector<std::pair<double, NodeId>> terms);
  NodeId prod(double c, std::vector<NodeId> factors);
  NodeId pow(NodeId base, double p);
  NodeId signpower(NodeId base, double p);
  NodeId unary(Op op, NodeId child);

  const ExprNode& operator[](NodeId id) const { return nodes_[static_cast<size_t>(id)]; }
  size_t size() const { return nodes_.size(); }

 private:
  NodeId intern(ExprNode&& n);
  std::vector<ExprNode> nodes_;
  std::unordered_map<std::string, NodeId> cse_index_;
};

// Nodes reachable from root in ascending id order. Nodes listed in `stop`
// (non-empty entries >= 0) other than the root are treated as leaves.
std::vector<NodeId> reachable(const ExprDag& dag, NodeId root, const std::vector<int>* stop = nullptr);

// Original variables reachable from root, ascending.
std::vector<int> variables_of(const ExprDag& dag, NodeId root);

// Evaluation over a point indexed by variable id. With a substitution
// (node -> index into point, -1 for none) annotated non-root nodes read their
// value from the point instead of their subtree.
struct Substitution {
  const std::vector<int>* aux_of_node = nullptr;
  const std::vector<NodeId>* only = nullptr;  // if set, substitute just these (sorted)
  int index(NodeId n) const {
    if (!aux_of_node || static_cast<size_t>(n) >= aux_of_node->size()) return -1;
    if (only && !std::binary_search(only->begin(), only->end(), n)) return -1;
    return (*aux_of_node)[static_cast<size_t>(n)];
  }
};

double eval(const ExprDag& dag, NodeId root, std::span<const double> point, Substitution sub = {});

struct GradResult {
  double value = 0.0;
  std::vector<std::pair<int, double>> grad;  // sorted by index
};

// Forward-mode accumulation of the gradient with respect to point indices.
GradResult grad(const ExprDag& dag, NodeId root, std::span<const double> point, Substitution sub = {});

// Per-operator scalar semantics shared by the evaluators.
double apply_unary(const ExprNode& n, double y);          // throws DomainError
double apply_unary_deriv(const ExprNode& n, double y);    // derivative in y

NodeId simplify(ExprDag& dag, NodeId root);
NodeId simplify(ExprDag& dag, NodeId root, std::unordered_map<NodeId, NodeId>& memo);

enum class Curvature { Linear, Convex, Concave, Unknown };
enum class Monotonicity { Increasing, Decreasing, Constant, Unknown };

const char* curvature_name(Curvature c);

// Boxes are indexed like evaluation points (substituted nodes read their slot).
Curvature curvature(const ExprDag& dag, NodeId root, const Box& box, Substitution sub = {});
Monotonicity monotonicity(const ExprDag& dag, NodeId parent, int child_slot, const Box& box,
                          Substitution sub = {});
bool is_integral(const ExprDag& dag, NodeId root, const std::vector<bool>& integrality);

// Curvature and monotonicity of a univariate operator on a range of its argument.
Curvature univariate_curvature(const ExprNode& n, Interval arg);
Monotonicity univariate_monotonicity(const ExprNode& n, Interval arg);

}  // namespace minlp
