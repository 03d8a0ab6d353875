#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "minlp/interval.hpp"

namespace minlp {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };
const char* lp_status_name(LpStatus s);

enum class VarStatus : std::uint8_t { Basic, AtLower, AtUpper, Free };

struct Basis {
  std::vector<VarStatus> cols;
  std::vector<VarStatus> rows;  // status of each row's slack
  bool empty() const { return cols.empty() && rows.empty(); }
};

struct LpRow {
  std::vector<std::pair<int, double>> entries;
  double lo = -kInf;
  double hi = kInf;
};

class LpModel {
 public:
  int add_column(double lo, double hi, double obj = 0.0);
  int add_row(std::vector<std::pair<int, double>> entries, double lo, double hi);
  void set_objective(int col, double c) { obj_[static_cast<size_t>(col)] = c; }
  void set_bounds(int col, double lo, double hi) {
    lo_[static_cast<size_t>(col)] = lo;
    hi_[static_cast<size_t>(col)] = hi;
  }
  void set_maximize(bool m) { maximize_ = m; }

  int num_cols() const { return static_cast<int>(obj_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  bool maximize() const { return maximize_; }
  double obj(int j) const { return obj_[static_cast<size_t>(j)]; }
  double col_lo(int j) const { return lo_[static_cast<size_t>(j)]; }
  double col_hi(int j) const { return hi_[static_cast<size_t>(j)]; }
  const LpRow& row(int i) const { return rows_[static_cast<size_t>(i)]; }

 private:
  std::vector<double> obj_, lo_, hi_;
  std::vector<LpRow> rows_;
  bool maximize_ = false;
};

// Duals follow the active-side convention: row_dual[i] is the rate of change
// of the optimal objective per unit shift of the active side of row i (zero
// when neither side is active). Reduced costs are the analogous rates for
// column bounds. For a minimization an active upper side therefore carries a
// value <= 0, an active lower side >= 0; for maximization the signs flip.
struct LpSolution {
  LpStatus status = LpStatus::NumericalFailure;
  double objective = 0.0;
  std::vector<double> x;
  std::vector<double> row_activity;
  std::vector<double> row_dual;
  std::vector<double> reduced_cost;
  int iterations = 0;
  Basis basis;
};

LpSolution lp_solve(const LpModel& model, const Basis* warm = nullptr, int iteration_limit = 20000);

struct EigenResult {
  std::vector<double> values;   // ascending
  std::vector<double> vectors;  // column-major k x k: vector i occupies [i*k, i*k+k)
};

// Cyclic Jacobi for dense symmetric matrices (row-major input), k <= 16.
EigenResult eig_sym(const std::vector<double>& a, int k);

}  // namespace minlp
