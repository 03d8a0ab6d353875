#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "minlp/expr.hpp"
#include "minlp/interval.hpp"
#include "minlp/problem.hpp"
#include "minlp/propagation.hpp"

namespace minlp {

constexpr double kBoundClip = 1e12;

enum class Sense { Le, Eq, Ge };
const char* sense_name(Sense s);

enum class Handler { Linear, Quadratic, Soc, Convex, Concave, Quotient, Product, Univariate };
const char* handler_name(Handler h);

// sparse affine function over extended variables
struct AffineForm {
  std::vector<std::pair<int, double>> v;
  double beta = 0.0;
  double value(std::span<const double> y) const;
  Interval range(const Box& box) const;
};

// sqrt(sum_j (v_j'y + beta_j)^2) <= v_{k+1}'y + beta_{k+1}
struct SocForm {
  std::vector<AffineForm> terms;
  AffineForm rhs;
  int k() const { return static_cast<int>(terms.size()); }
  double lhs_value(std::span<const double> y) const;
};

// (a'y + alpha)^2 <= z * (r'y + rho)
struct RotatedCone {
  AffineForm a;
  AffineForm r;
  int z = -1;
};

struct Disaggregation {
  std::vector<RotatedCone> cones;
  // sum z_j - (v_{k+1}'y) <= beta_{k+1}
  std::vector<std::pair<int, double>> row;
  double row_hi = 0.0;
};

// f(u) = k (a u + b) / (c u + d)
struct QuotientForm {
  int u = -1;
  double k = 1.0, a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  double value(double y) const { return k * (a * y + b) / (c * y + d); }
  double deriv(double y) const { return k * (a * d - b * c) / ((c * y + d) * (c * y + d)); }
  double second(double y) const;
  double pole() const { return -d / c; }
};

struct ExtVar {
  std::string name;
  NodeId node = -1;  // defining subexpression for auxiliaries
  Interval bounds;
  bool integer = false;
};

struct ExtConstraint {
  NodeId node = -1;
  int out = -1;  // the auxiliary w; -1 for a claimed cone
  bool need_le = false;  // h <= w
  bool need_ge = false;  // h >= w
  Handler handler = Handler::Linear;
  bool root = false;
  std::vector<int> leaves;  // extended variables h reads, ascending
  std::vector<NodeId> leaf_nodes;  // annotated subexpressions h reads, ascending
  int soc = -1;
  std::optional<QuadForm> quad;
  std::vector<int> quad_vars;  // extended variable per quadratic base
  QuotientForm quot;
  Sense sense() const { return need_le && need_ge ? Sense::Eq : (need_le ? Sense::Le : Sense::Ge); }
};

struct ExtOptions {
  bool quadratic = true;
  bool soc = true;
  bool convex = true;
  bool concave = true;
  bool quotient = true;
};

struct ExtendedForm {
  int num_original = 0;
  std::vector<int> aux_of_node;  // node id -> extended variable, -1 if none
  std::vector<ExtVar> vars;
  std::vector<ExtConstraint> cons;
  std::vector<SocForm> socs;
  std::vector<std::optional<Disaggregation>> disagg;  // per cone
  std::map<std::pair<int, int>, int> products;        // (i <= j) -> variable carrying y_i*y_j

  Substitution sub(const ExtConstraint& c) const { return {&aux_of_node, &c.leaf_nodes}; }
  int ext_var_of(const ExprDag& dag, NodeId id) const;
  int num_aux() const;
  Box box() const;
  // set auxiliaries to the value of their subexpressions; cone variables
  // to a point of the disaggregation consistent with the cone
  std::vector<double> lift(const ExprDag& dag, std::span<const double> x) const;
  double h_value(const ExprDag& dag, const ExtConstraint& c, std::span<const double> y) const;
  // amount by which (y) violates the extended constraint
  double violation(const ExprDag& dag, const ExtConstraint& c, std::span<const double> y) const;
};

// Builds the cone from explicit norm structure. `index_of` maps leaf nodes to
// extended variables (called only for nodes that are not variables).
std::optional<SocForm> detect_soc(const ExprDag& dag, NodeId root, double rhs_const,
                                  const std::function<int(NodeId)>& index_of);
std::optional<SocForm> detect_soc(const ExprDag& dag, NodeId root, double rhs_const);

// k >= 3 only; new cone variables start at first_var.
std::optional<Disaggregation> soc_disaggregate(const SocForm& soc, int first_var);

std::optional<QuotientForm> match_quotient(const ExprDag& dag, NodeId node, const std::function<int(NodeId)>& index_of);

ExtendedForm build_extended_form(const Problem& p, const ExtOptions& opts = {});

}  // namespace minlp
