#include "minlp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace minlp {

const char* lp_status_name(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
    case LpStatus::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

int LpModel::add_column(double lo, double hi, double obj) {
  obj_.push_back(obj);
  lo_.push_back(lo);
  hi_.push_back(hi);
  return static_cast<int>(obj_.size()) - 1;
}

int LpModel::add_row(std::vector<std::pair<int, double>> entries, double lo, double hi) {
  rows_.push_back({std::move(entries), lo, hi});
  return static_cast<int>(rows_.size()) - 1;
}

namespace {

constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-9;

class Simplex {
 public:
  Simplex(const LpModel& model, int iteration_limit) : model_(model), limit_(iteration_limit) {
    n_ = model.num_cols();
    m_ = model.num_rows();
    N_ = n_ + m_;
    cols_.resize(static_cast<size_t>(n_));
    for (int i = 0; i < m_; ++i)
      for (auto [j, v] : model.row(i).entries)
        if (v != 0.0) cols_[static_cast<size_t>(j)].emplace_back(i, v);
    lb_.resize(static_cast<size_t>(N_));
    ub_.resize(static_cast<size_t>(N_));
    cost_.assign(static_cast<size_t>(N_), 0.0);
    double sgn = model.maximize() ? -1.0 : 1.0;
    for (int j = 0; j < n_; ++j) {
      lb_[static_cast<size_t>(j)] = model.col_lo(j);
      ub_[static_cast<size_t>(j)] = model.col_hi(j);
      cost_[static_cast<size_t>(j)] = sgn * model.obj(j);
    }
    for (int i = 0; i < m_; ++i) {
      lb_[static_cast<size_t>(n_ + i)] = model.row(i).lo;
      ub_[static_cast<size_t>(n_ + i)] = model.row(i).hi;
    }
  }

  LpSolution run(const Basis* warm) {
    LpSolution sol;
    for (int j = 0; j < N_; ++j) {
      if (lb_[static_cast<size_t>(j)] > ub_[static_cast<size_t>(j)]) {
        sol.status = LpStatus::Infeasible;
        return finish(sol);
      }
    }
    if (!(warm && install(*warm))) slack_basis();
    status_ = iterate();
    sol.status = status_;
    return finish(sol);
  }

 private:
  const LpModel& model_;
  int limit_;
  int n_ = 0, m_ = 0, N_ = 0;
  std::vector<std::vector<std::pair<int, double>>> cols_;
  std::vector<double> lb_, ub_, cost_, x_;
  std::vector<VarStatus> st_;
  std::vector<int> head_, pos_;
  std::vector<double> binv_;
  int iters_ = 0;
  LpStatus status_ = LpStatus::NumericalFailure;

  double& B(int i, int k) { return binv_[static_cast<size_t>(i) * static_cast<size_t>(m_) + static_cast<size_t>(k)]; }

  template <class F>
  void for_column(int j, F&& f) const {
    if (j < n_) {
      for (auto [i, v] : cols_[static_cast<size_t>(j)]) f(i, v);
    } else {
      f(j - n_, -1.0);
    }
  }

  double tol_of(double b) const { return kPrimalTol * std::max(1.0, std::fabs(b)); }

  void place_nonbasic(int j) {
    auto uj = static_cast<size_t>(j);
    VarStatus s = st_[uj];
    if (s == VarStatus::AtLower && !std::isfinite(lb_[uj])) s = std::isfinite(ub_[uj]) ? VarStatus::AtUpper : VarStatus::Free;
    if (s == VarStatus::AtUpper && !std::isfinite(ub_[uj])) s = std::isfinite(lb_[uj]) ? VarStatus::AtLower : VarStatus::Free;
    if (s == VarStatus::Free && std::isfinite(lb_[uj])) s = VarStatus::AtLower;
    if (s == VarStatus::Free && std::isfinite(ub_[uj])) s = VarStatus::AtUpper;
    st_[uj] = s;
    x_[uj] = s == VarStatus::AtLower ? lb_[uj] : (s == VarStatus::AtUpper ? ub_[uj] : 0.0);
  }

  void slack_basis() {
    st_.assign(static_cast<size_t>(N_), VarStatus::AtLower);
    x_.assign(static_cast<size_t>(N_), 0.0);
    head_.resize(static_cast<size_t>(m_));
    pos_.assign(static_cast<size_t>(N_), -1);
    for (int j = 0; j < n_; ++j) place_nonbasic(j);
    for (int i = 0; i < m_; ++i) {
      head_[static_cast<size_t>(i)] = n_ + i;
      pos_[static_cast<size_t>(n_ + i)] = i;
      st_[static_cast<size_t>(n_ + i)] = VarStatus::Basic;
    }
    binv_.assign(static_cast<size_t>(m_) * static_cast<size_t>(m_), 0.0);
    for (int i = 0; i < m_; ++i) B(i, i) = -1.0;
    compute_xb();
  }

  bool install(const Basis& b) {
    if (static_cast<int>(b.cols.size()) != n_ || static_cast<int>(b.rows.size()) != m_) return false;
    st_.assign(static_cast<size_t>(N_), VarStatus::AtLower);
    x_.assign(static_cast<size_t>(N_), 0.0);
    head_.clear();
    pos_.assign(static_cast<size_t>(N_), -1);
    for (int j = 0; j < N_; ++j) {
      VarStatus s = j < n_ ? b.cols[static_cast<size_t>(j)] : b.rows[static_cast<size_t>(j - n_)];
      st_[static_cast<size_t>(j)] = s;
      if (s == VarStatus::Basic) {
        pos_[static_cast<size_t>(j)] = static_cast<int>(head_.size());
        head_.push_back(j);
      }
    }
    if (static_cast<int>(head_.size()) != m_) return false;
    for (int j = 0; j < N_; ++j)
      if (st_[static_cast<size_t>(j)] != VarStatus::Basic) place_nonbasic(j);
    if (!refactor()) return false;
    compute_xb();
    return true;
  }

  bool refactor() {
    const int m = m_;
    std::vector<double> a(static_cast<size_t>(m) * static_cast<size_t>(m), 0.0);
    for (int k = 0; k < m; ++k)
      for_column(head_[static_cast<size_t>(k)], [&](int i, double v) { a[static_cast<size_t>(i * m + k)] = v; });
    binv_.assign(static_cast<size_t>(m) * static_cast<size_t>(m), 0.0);
    for (int i = 0; i < m; ++i) B(i, i) = 1.0;
    // Gauss-Jordan with partial pivoting on a, mirrored on binv
    for (int c = 0; c < m; ++c) {
      int p = c;
      double best = std::fabs(a[static_cast<size_t>(c * m + c)]);
      for (int r = c + 1; r < m; ++r) {
        double v = std::fabs(a[static_cast<size_t>(r * m + c)]);
        if (v > best) {
          best = v;
          p = r;
        }
      }
      if (best < 1e-11) return false;
      if (p != c) {
        for (int k = 0; k < m; ++k) {
          std::swap(a[static_cast<size_t>(c * m + k)], a[static_cast<size_t>(p * m + k)]);
          std::swap(B(c, k), B(p, k));
        }
      }
      double inv = 1.0 / a[static_cast<size_t>(c * m + c)];
      for (int k = 0; k < m; ++k) {
        a[static_cast<size_t>(c * m + k)] *= inv;
        B(c, k) *= inv;
      }
      for (int r = 0; r < m; ++r) {
        if (r == c) continue;
        double f = a[static_cast<size_t>(r * m + c)];
        if (f == 0.0) continue;
        for (int k = 0; k < m; ++k) {
          a[static_cast<size_t>(r * m + k)] -= f * a[static_cast<size_t>(c * m + k)];
          B(r, k) -= f * B(c, k);
        }
      }
    }
    // rows of binv now correspond to columns of the basis in order
    return true;
  }

  void compute_xb() {
    std::vector<double> rhs(static_cast<size_t>(m_), 0.0);
    for (int j = 0; j < N_; ++j) {
      if (st_[static_cast<size_t>(j)] == VarStatus::Basic) continue;
      double xj = x_[static_cast<size_t>(j)];
      if (xj == 0.0) continue;
      for_column(j, [&](int i, double v) { rhs[static_cast<size_t>(i)] -= v * xj; });
    }
    for (int r = 0; r < m_; ++r) {
      double s = 0.0;
      for (int k = 0; k < m_; ++k) s += B(r, k) * rhs[static_cast<size_t>(k)];
      x_[static_cast<size_t>(head_[static_cast<size_t>(r)])] = s;
    }
  }

  std::vector<double> ftran(int j) {
    std::vector<double> alpha(static_cast<size_t>(m_), 0.0);
    for_column(j, [&](int i, double v) {
      for (int r = 0; r < m_; ++r) alpha[static_cast<size_t>(r)] += B(r, i) * v;
    });
    return alpha;
  }

  std::vector<double> btran(const std::vector<double>& cb) {
    std::vector<double> y(static_cast<size_t>(m_), 0.0);
    for (int r = 0; r < m_; ++r) {
      double c = cb[static_cast<size_t>(r)];
      if (c == 0.0) continue;
      for (int k = 0; k < m_; ++k) y[static_cast<size_t>(k)] += c * B(r, k);
    }
    return y;
  }

  double dot_col(const std::vector<double>& y, int j) const {
    double s = 0.0;
    for_column(j, [&](int i, double v) { s += y[static_cast<size_t>(i)] * v; });
    return s;
  }

  // -1 below lower bound, +1 above upper bound, 0 feasible
  int infeas(int j) const {
    double v = x_[static_cast<size_t>(j)];
    double l = lb_[static_cast<size_t>(j)], u = ub_[static_cast<size_t>(j)];
    if (v < l - tol_of(l)) return -1;
    if (v > u + tol_of(u)) return 1;
    return 0;
  }

  LpStatus iterate() {
    int degenerate = 0;
    bool bland = false;
    int since_refactor = 0;
    int verify = 0;
    int failures = 0;
    const int bland_after = 3 * (m_ + n_);
    while (true) {
      if (iters_ >= limit_) return LpStatus::IterationLimit;
      bool phase1 = false;
      std::vector<double> cb(static_cast<size_t>(m_), 0.0);
      for (int r = 0; r < m_; ++r) {
        int f = infeas(head_[static_cast<size_t>(r)]);
        if (f != 0) phase1 = true;
        cb[static_cast<size_t>(r)] = static_cast<double>(f);
      }
      if (!phase1)
        for (int r = 0; r < m_; ++r) cb[static_cast<size_t>(r)] = cost_[static_cast<size_t>(head_[static_cast<size_t>(r)])];
      std::vector<double> y = btran(cb);

      // pricing
      int q = -1;
      double best = 0.0;
      int dir = 0;
      for (int j = 0; j < N_; ++j) {
        auto uj = static_cast<size_t>(j);
        VarStatus s = st_[uj];
        if (s == VarStatus::Basic) continue;
        if (lb_[uj] == ub_[uj]) continue;
        double d = (phase1 ? 0.0 : cost_[uj]) - dot_col(y, j);
        int dj = 0;
        if (d < -kDualTol && s != VarStatus::AtUpper) dj = 1;
        else if (d > kDualTol && s != VarStatus::AtLower) dj = -1;
        if (dj == 0) continue;
        if (bland) {
          q = j;
          dir = dj;
          break;
        }
        if (std::fabs(d) > best) {
          best = std::fabs(d);
          q = j;
          dir = dj;
        }
      }
      if (q < 0) {
        // verify on a fresh factorization before declaring a result
        if (verify < 3 && since_refactor > 0) {
          ++verify;
          if (!refactor()) return LpStatus::NumericalFailure;
          compute_xb();
          since_refactor = 0;
          continue;
        }
        return phase1 ? LpStatus::Infeasible : LpStatus::Optimal;
      }

      std::vector<double> alpha = ftran(q);
      auto uq = static_cast<size_t>(q);
      double tflip = (std::isfinite(lb_[uq]) && std::isfinite(ub_[uq])) ? ub_[uq] - lb_[uq] : kInf;

      // Harris two-pass ratio test (textbook single pass under Bland)
      auto limit_of = [&](int r, double slack_tol, bool& to_upper) -> double {
        int j = head_[static_cast<size_t>(r)];
        double rate = -dir * alpha[static_cast<size_t>(r)];
        if (std::fabs(rate) < kPivotTol) return kInf;
        double v = x_[static_cast<size_t>(j)], l = lb_[static_cast<size_t>(j)], u = ub_[static_cast<size_t>(j)];
        int f = infeas(j);
        if (rate > 0) {
          if (f == -1) {
            to_upper = false;
            return (l - v + slack_tol * tol_of(l)) / rate;
          }
          if (f == 1 || !std::isfinite(u)) return kInf;
          to_upper = true;
          return (u - v + slack_tol * tol_of(u)) / rate;
        }
        if (f == 1) {
          to_upper = true;
          return (v - u + slack_tol * tol_of(u)) / -rate;
        }
        if (f == -1 || !std::isfinite(l)) return kInf;
        to_upper = false;
        return (v - l + slack_tol * tol_of(l)) / -rate;
      };
      int leave = -1;
      bool leave_upper = false;
      double t = kInf;
      if (bland) {
        for (int r = 0; r < m_; ++r) {
          bool up = false;
          double lim = limit_of(r, 0.0, up);
          if (lim == kInf) continue;
          lim = std::max(lim, 0.0);
          if (leave < 0 || lim < t - 1e-12 || (std::fabs(lim - t) <= 1e-12 && head_[static_cast<size_t>(r)] < head_[static_cast<size_t>(leave)])) {
            t = lim;
            leave = r;
            leave_upper = up;
          }
        }
      } else {
        double tmax = kInf;
        for (int r = 0; r < m_; ++r) {
          bool up = false;
          tmax = std::min(tmax, limit_of(r, 1.0, up));
        }
        double big = 0.0;
        for (int r = 0; r < m_; ++r) {
          bool up = false;
          double lim = limit_of(r, 0.0, up);
          if (lim == kInf || lim > tmax) continue;
          double a = std::fabs(alpha[static_cast<size_t>(r)]);
          if (a > big) {
            big = a;
            leave = r;
            leave_upper = up;
            t = std::max(lim, 0.0);
          }
        }
      }
      if (std::isfinite(tflip) && tflip <= t) {
        // bound flip
        x_[uq] = dir > 0 ? ub_[uq] : lb_[uq];
        st_[uq] = dir > 0 ? VarStatus::AtUpper : VarStatus::AtLower;
        for (int r = 0; r < m_; ++r) x_[static_cast<size_t>(head_[static_cast<size_t>(r)])] -= dir * tflip * alpha[static_cast<size_t>(r)];
        ++iters_;
        degenerate = 0;
        continue;
      }
      if (leave < 0) {
        if (!phase1) return LpStatus::Unbounded;
        if (++failures > 3) return LpStatus::NumericalFailure;
        if (!refactor()) return LpStatus::NumericalFailure;
        compute_xb();
        continue;
      }
      ++iters_;
      if (t <= 1e-12) {
        if (++degenerate > bland_after) bland = true;
      } else {
        degenerate = 0;
      }
      for (int r = 0; r < m_; ++r) x_[static_cast<size_t>(head_[static_cast<size_t>(r)])] -= dir * t * alpha[static_cast<size_t>(r)];
      x_[uq] += dir * t;
      int out = head_[static_cast<size_t>(leave)];
      auto uo = static_cast<size_t>(out);
      st_[uo] = leave_upper ? VarStatus::AtUpper : VarStatus::AtLower;
      x_[uo] = leave_upper ? ub_[uo] : lb_[uo];
      pos_[uo] = -1;
      head_[static_cast<size_t>(leave)] = q;
      pos_[uq] = leave;
      st_[uq] = VarStatus::Basic;
      // product-form update of the inverse
      double piv = alpha[static_cast<size_t>(leave)];
      for (int k = 0; k < m_; ++k) B(leave, k) /= piv;
      for (int r = 0; r < m_; ++r) {
        if (r == leave) continue;
        double f = alpha[static_cast<size_t>(r)];
        if (f == 0.0) continue;
        for (int k = 0; k < m_; ++k) B(r, k) -= f * B(leave, k);
      }
      if (++since_refactor >= 50 || std::fabs(piv) < 1e-7) {
        if (!refactor()) {
          if (++failures > 3) return LpStatus::NumericalFailure;
          slack_basis();
        } else {
          compute_xb();
        }
        since_refactor = 0;
      }
    }
  }

  LpSolution& finish(LpSolution& sol) {
    sol.iterations = iters_;
    sol.x.assign(static_cast<size_t>(n_), 0.0);
    sol.row_activity.assign(static_cast<size_t>(m_), 0.0);
    sol.row_dual.assign(static_cast<size_t>(m_), 0.0);
    sol.reduced_cost.assign(static_cast<size_t>(n_), 0.0);
    if (x_.empty()) return sol;
    for (int j = 0; j < n_; ++j) {
      double v = x_[static_cast<size_t>(j)];
      // snap values within tolerance onto their bounds
      double l = lb_[static_cast<size_t>(j)], u = ub_[static_cast<size_t>(j)];
      if (v < l) v = l;
      if (v > u) v = u;
      sol.x[static_cast<size_t>(j)] = v;
    }
    for (int i = 0; i < m_; ++i) {
      double s = 0.0;
      for (auto [j, v] : model_.row(i).entries) s += v * sol.x[static_cast<size_t>(j)];
      sol.row_activity[static_cast<size_t>(i)] = s;
    }
    double obj = 0.0;
    for (int j = 0; j < n_; ++j) obj += model_.obj(j) * sol.x[static_cast<size_t>(j)];
    sol.objective = obj;
    if (sol.status == LpStatus::Optimal) {
      std::vector<double> cb(static_cast<size_t>(m_));
      for (int r = 0; r < m_; ++r) cb[static_cast<size_t>(r)] = cost_[static_cast<size_t>(head_[static_cast<size_t>(r)])];
      std::vector<double> y = btran(cb);
      double sgn = model_.maximize() ? -1.0 : 1.0;
      for (int i = 0; i < m_; ++i)
        sol.row_dual[static_cast<size_t>(i)] = st_[static_cast<size_t>(n_ + i)] == VarStatus::Basic ? 0.0 : sgn * y[static_cast<size_t>(i)];
      for (int j = 0; j < n_; ++j)
        if (st_[static_cast<size_t>(j)] != VarStatus::Basic)
          sol.reduced_cost[static_cast<size_t>(j)] = sgn * (cost_[static_cast<size_t>(j)] - dot_col(y, j));
    }
    sol.basis.cols.assign(st_.begin(), st_.begin() + n_);
    sol.basis.rows.assign(st_.begin() + n_, st_.end());
    return sol;
  }
};

}  // namespace

LpSolution lp_solve(const LpModel& model, const Basis* warm, int iteration_limit) {
  Simplex s(model, iteration_limit);
  return s.run(warm);
}

EigenResult eig_sym(const std::vector<double>& a_in, int k) {
  if (k < 0 || static_cast<size_t>(k) * static_cast<size_t>(k) != a_in.size())
    throw std::invalid_argument("eig_sym: size mismatch");
  const auto n = static_cast<size_t>(k);
  std::vector<double> a = a_in;
  std::vector<double> v(n * n, 0.0);
  for (size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  auto A = [&](size_t i, size_t j) -> double& { return a[i * n + j]; };
  double norm = 0.0;
  for (double x : a) norm = std::max(norm, std::fabs(x));
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) off = std::max(off, std::fabs(A(i, j)));
    if (off <= 1e-15 * std::max(norm, 1e-300)) break;
    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        double apq = A(p, q);
        if (std::fabs(apq) < 1e-300) continue;
        double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (size_t r = 0; r < n; ++r) {
          double arp = A(r, p), arq = A(r, q);
          A(r, p) = c * arp - s * arq;
          A(r, q) = s * arp + c * arq;
        }
        for (size_t r = 0; r < n; ++r) {
          double apr = A(p, r), aqr = A(q, r);
          A(p, r) = c * apr - s * aqr;
          A(q, r) = s * apr + c * aqr;
        }
        for (size_t r = 0; r < n; ++r) {
          double vrp = v[r * n + p], vrq = v[r * n + q];
          v[r * n + p] = c * vrp - s * vrq;
          v[r * n + q] = s * vrp + c * vrq;
        }
      }
    }
  }
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t x, size_t y) { return A(x, x) < A(y, y); });
  EigenResult r;
  r.values.resize(n);
  r.vectors.resize(n * n);
  for (size_t c = 0; c < n; ++c) {
    r.values[c] = A(idx[c], idx[c]);
    for (size_t row = 0; row < n; ++row) r.vectors[c * n + row] = v[row * n + idx[c]];
  }
  return r;
}

}  // namespace minlp
