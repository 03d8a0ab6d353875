#include <gtest/gtest.h>

#include <random>

#include "minlp/lp.hpp"

using namespace minlp;

namespace {

// objective value recomputed from duals: sum over active sides and bounds
double dual_objective(const LpModel& m, const LpSolution& s) {
  double v = 0.0;
  for (int i = 0; i < m.num_rows(); ++i) {
    double y = s.row_dual[static_cast<size_t>(i)];
    if (y == 0.0) continue;
    const auto& r = m.row(i);
    double side = std::fabs(s.row_activity[static_cast<size_t>(i)] - r.lo) <
                          std::fabs(s.row_activity[static_cast<size_t>(i)] - r.hi)
                      ? r.lo
                      : r.hi;
    v += y * side;
  }
  for (int j = 0; j < m.num_cols(); ++j) {
    double d = s.reduced_cost[static_cast<size_t>(j)];
    if (d == 0.0) continue;
    v += d * s.x[static_cast<size_t>(j)];
  }
  return v;
}

}  // namespace

TEST(Lp, MaxWithSingleRow) {
  LpModel m;
  int x = m.add_column(0, kInf, 1.0);
  int y = m.add_column(0, kInf, 0.0);
  m.add_row({{x, 1.0}, {y, 1.0}}, -kInf, 1.0);
  m.set_maximize(true);
  auto s = lp_solve(m);
  ASSERT_EQ(s.status, LpStatus::Optimal);
  EXPECT_NEAR(s.x[0], 1.0, 1e-12);
  EXPECT_NEAR(s.row_dual[0], 1.0, 1e-12);
  EXPECT_NEAR(s.objective, 1.0, 1e-12);
}

TEST(Lp, ContradictoryBoundsInfeasible) {
  LpModel m;
  int x = m.add_column(-kInf, kInf, 1.0);
  m.add_row({{x, 1.0}}, 3.0, kInf);
  m.add_row({{x, 1.0}}, -kInf, 1.0);
  EXPECT_EQ(lp_solve(m).status, LpStatus::Infeasible);
}

TEST(Lp, FreeVariableUnbounded) {
  LpModel m;
  m.add_column(-kInf, kInf, 1.0);
  m.set_maximize(true);
  EXPECT_EQ(lp_solve(m).status, LpStatus::Unbounded);
}

TEST(Lp, SignConventionMinimization) {
  // min -x - y, x + 2y <= 4, 3x + y <= 6 -> x = 1.6, y = 1.2
  LpModel m;
  int x = m.add_column(0, kInf, -1.0);
  int y = m.add_column(0, kInf, -1.0);
  m.add_row({{x, 1.0}, {y, 2.0}}, -kInf, 4.0);
  m.add_row({{x, 3.0}, {y, 1.0}}, -kInf, 6.0);
  auto s = lp_solve(m);
  ASSERT_EQ(s.status, LpStatus::Optimal);
  EXPECT_NEAR(s.x[0], 1.6, 1e-9);
  EXPECT_NEAR(s.x[1], 1.2, 1e-9);
  EXPECT_LE(s.row_dual[0], 0.0);
  EXPECT_LE(s.row_dual[1], 0.0);
  EXPECT_NEAR(dual_objective(m, s), s.objective, 1e-9);
}

TEST(Lp, WarmStartReachesSameOptimum) {
  LpModel m;
  int x = m.add_column(0, 10, -1.0);
  int y = m.add_column(0, 10, -2.0);
  m.add_row({{x, 1.0}, {y, 1.0}}, -kInf, 5.0);
  auto s1 = lp_solve(m);
  ASSERT_EQ(s1.status, LpStatus::Optimal);
  m.add_row({{x, -1.0}, {y, 1.0}}, -kInf, 1.0);
  Basis b = s1.basis;
  b.rows.push_back(VarStatus::Basic);
  auto s2 = lp_solve(m, &b);
  ASSERT_EQ(s2.status, LpStatus::Optimal);
  EXPECT_NEAR(s2.objective, -2.0 - 2.0 * 3.0, 1e-9);
}

TEST(Lp, RandomWeakDualityAndFeasibility) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  int optimal = 0;
  for (int t = 0; t < 200; ++t) {
    LpModel m;
    int n = 2 + static_cast<int>(rng() % 6), rows = 1 + static_cast<int>(rng() % 8);
    std::vector<double> x0;
    for (int j = 0; j < n; ++j) {
      double l = u(rng) * 3, w = std::fabs(u(rng)) * 5;
      bool free_lo = rng() % 5 == 0;
      m.add_column(free_lo ? -kInf : l, l + w, u(rng));
      x0.push_back(l + w * std::fabs(u(rng)));
    }
    // rows built around a known interior point, so the LP is feasible
    for (int i = 0; i < rows; ++i) {
      std::vector<std::pair<int, double>> e;
      double act = 0;
      for (int j = 0; j < n; ++j)
        if (rng() % 2) {
          e.emplace_back(j, u(rng));
          act += e.back().second * x0[static_cast<size_t>(j)];
        }
      double lo = act - std::fabs(u(rng));
      m.add_row(e, rng() % 3 == 0 ? -kInf : lo, act + std::fabs(u(rng)));
    }
    m.set_maximize(rng() % 2);
    auto s = lp_solve(m);
    EXPECT_NE(s.status, LpStatus::Infeasible);
    if (s.status != LpStatus::Optimal) continue;
    ++optimal;
    for (int i = 0; i < rows; ++i) {
      EXPECT_GE(s.row_activity[static_cast<size_t>(i)], m.row(i).lo - 1e-8);
      EXPECT_LE(s.row_activity[static_cast<size_t>(i)], m.row(i).hi + 1e-8);
    }
    EXPECT_NEAR(dual_objective(m, s), s.objective, 1e-6 * std::max(1.0, std::fabs(s.objective)));
    // sign convention on active sides
    double sg = m.maximize() ? -1.0 : 1.0;
    for (int i = 0; i < rows; ++i) {
      double y = s.row_dual[static_cast<size_t>(i)] * sg;
      double a = s.row_activity[static_cast<size_t>(i)];
      if (y > 1e-9) EXPECT_NEAR(a, m.row(i).lo, 1e-7);
      if (y < -1e-9) EXPECT_NEAR(a, m.row(i).hi, 1e-7);
    }
  }
  EXPECT_GT(optimal, 150);
}

TEST(Eigen, KnownSpectra) {
  auto e = eig_sym({1, -2, -2, 1}, 2);
  EXPECT_NEAR(e.values[0], -1, 1e-12);
  EXPECT_NEAR(e.values[1], 3, 1e-12);
  auto i3 = eig_sym({1, 0, 0, 0, 1, 0, 0, 0, 1}, 3);
  for (double v : i3.values) EXPECT_NEAR(v, 1, 1e-15);
  auto f = eig_sym({2, 1, 1, 2}, 2);
  EXPECT_NEAR(f.values[0], 1, 1e-12);
  EXPECT_NEAR(std::fabs(f.vectors[0]), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(f.vectors[0], -f.vectors[1], 1e-12);
  EXPECT_NEAR(f.vectors[2], f.vectors[3], 1e-12);
}

TEST(Eigen, RandomReconstruction) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int k = 1; k <= 16; ++k) {
    std::vector<double> a(static_cast<size_t>(k * k));
    for (int i = 0; i < k; ++i)
      for (int j = i; j < k; ++j) a[static_cast<size_t>(i * k + j)] = a[static_cast<size_t>(j * k + i)] = u(rng);
    auto e = eig_sym(a, k);
    double norm = 0;
    for (double v : a) norm = std::max(norm, std::fabs(v));
    for (int c = 1; c < k; ++c) EXPECT_LE(e.values[static_cast<size_t>(c - 1)], e.values[static_cast<size_t>(c)]);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        double s = 0;
        for (int c = 0; c < k; ++c)
          s += e.vectors[static_cast<size_t>(c * k + i)] * e.values[static_cast<size_t>(c)] * e.vectors[static_cast<size_t>(c * k + j)];
        EXPECT_NEAR(s, a[static_cast<size_t>(i * k + j)], 1e-8 * norm);
      }
    for (int c = 0; c < k; ++c)
      for (int i = 0; i < k; ++i) {
        double av = 0;
        for (int j = 0; j < k; ++j) av += a[static_cast<size_t>(i * k + j)] * e.vectors[static_cast<size_t>(c * k + j)];
        EXPECT_NEAR(av, e.values[static_cast<size_t>(c)] * e.vectors[static_cast<size_t>(c * k + i)], 1e-9 * norm);
      }
  }
}
