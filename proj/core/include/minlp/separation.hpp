#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "minlp/expr.hpp"
#include "minlp/extended.hpp"
#include "minlp/interval.hpp"
#include "minlp/problem.hpp"

namespace minlp {

enum class Want { Under, Over };

enum class CutFamily {
  Linear,
  Tangent,
  Secant,
  McCormick,
  VertexPoly,
  Gradient,
  IntervalConst,
  Quotient,
  Soc,
  Rlt,
  Sdp,
  Perspective,
  Incumbent,
  Quadratic
};
const char* cut_family_name(CutFamily f);

// L(y) = constant + sum coefs_i y_i
struct Estimator {
  std::vector<std::pair<int, double>> coefs;
  double constant = 0.0;
  bool global = false;
  CutFamily family = CutFamily::Linear;
  std::vector<int> bounds_used;  // extended variables whose bounds were consumed
  double value(std::span<const double> y) const;
  void add(int i, double c);  // merges duplicate indices
};

struct Cut {
  std::vector<std::pair<int, double>> coefs;  // sorted by index, nonzero
  double lhs = -kInf;
  double rhs = kInf;
  bool global = false;
  CutFamily family = CutFamily::Linear;
  std::vector<int> bounds_used;  // original variables
  double activity(std::span<const double> y) const;
  double violation(std::span<const double> y) const;
  double efficacy(std::span<const double> y) const;  // violation / norm
};

// y_x * y_y estimator a*x + b*y + c
struct Linear2 {
  double ax = 0.0, ay = 0.0, c = 0.0;
  double value(double x, double y) const { return ax * x + ay * y + c; }
};

// t*u + c
struct Linear1 {
  double slope = 0.0, intercept = 0.0;
  double value(double u) const { return slope * u + intercept; }
};

// Rejects coefficient ratios above 1e9 or constants above 1e15.
bool numerically_sane(const Estimator& e);
bool numerically_sane(const Cut& c);

std::optional<Linear2> mccormick(Interval xb, Interval yb, double xr, double yr, Want want);

std::optional<Linear1> secant(const ExprNode& f, double lb, double ub);
// integer argument: line through floor(ref) and floor(ref)+1
std::optional<Linear1> integer_secant(const ExprNode& f, double ref, Interval bounds);
std::optional<Linear1> tangent(const ExprNode& f, double at);

// Univariate function f(u) on u in `b` estimated at `ref`; `integral` marks
// an integer-valued argument; `root` is the range used to decide global validity.
std::optional<std::pair<Linear1, CutFamily>> univariate_estimate(const ExprNode& f, Interval b, Interval root,
                                                                  double ref, Want want, bool integral,
                                                                  bool* global = nullptr);

// Default estimator for the operator at `node` whose children are leaves
// (variables or substituted nodes) of the point/box.
std::optional<Estimator> estimate(const ExprDag& dag, NodeId node, const Box& box, std::span<const double> ref,
                                  Want want, Substitution sub = {}, const Box* root_box = nullptr,
                                  const std::vector<bool>* integral = nullptr);

// Tangent plane of h at point; valid as under (convex h) or over (concave h).
std::optional<Estimator> gradient_cut(const ExprDag& dag, NodeId node, std::span<const double> point,
                                      Substitution sub = {});

// Best hyperplane below h at all box vertices over `vars` (k <= 14) at ref.
std::optional<Estimator> vertexpoly_under(const ExprDag& dag, NodeId node, const std::vector<int>& vars,
                                          const Box& box, std::span<const double> ref, Substitution sub = {},
                                          bool negate = false);

std::optional<Cut> soc_separate(const SocForm& soc, std::span<const double> point, double feastol = 1e-6);
std::optional<Cut> soc_separate(const RotatedCone& cone, std::span<const double> point, double feastol = 1e-6);

enum class FactorSide { Lower, Upper };
std::optional<Cut> rlt_generate(const std::vector<std::pair<int, double>>& row, double rhs, int factor,
                                FactorSide side, const std::map<std::pair<int, int>, int>& products,
                                const Box& box, std::span<const double> ref);

// point entries (x_i, x_j, X_ii, X_ij, X_jj) with their variable indices
std::optional<Cut> sdp_minor_cut(const std::array<double, 5>& values, const std::array<int, 5>& index,
                                 double tol = -1e-7);

// ell^nl + (h^nl(x0) - ell^nl(x0)) (1 - y_ind) + ell^l
Estimator perspective_strengthen(const Estimator& est, const std::vector<int>& nonlinear_vars,
                                 const std::vector<double>& off_values, int indicator, double h_off);

std::optional<Linear1> quotient_estimate(const QuotientForm& q, Interval ub, double ref, Want want);
std::optional<Estimator> quotient_estimate(const ExprDag& dag, NodeId node, const Box& box,
                                           std::span<const double> ref, Want want, Substitution sub = {});

// Estimator for one extended constraint under the given handler.
std::optional<Estimator> estimate_constraint(const ExprDag& dag, const ExtendedForm& ef, const ExtConstraint& c,
                                             const Box& box, const Box& root_box, std::span<const double> point,
                                             Want want);

// est(y) <= w (under) or est(y) >= w (over) as a cut over extended variables.
Cut estimator_cut(const ExprDag& dag, const ExtendedForm& ef, const Estimator& est, int out, Want want);

// original variables behind a set of extended variables
std::vector<int> original_vars(const ExprDag& dag, const ExtendedForm& ef, const std::vector<int>& ext);

std::vector<Cut> incumbent_linearization(const ExprDag& dag, const ExtendedForm& ef, std::span<const double> point);

}  // namespace minlp
