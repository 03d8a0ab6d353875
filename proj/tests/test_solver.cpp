#include <gtest/gtest.h>

#include <cmath>

#include "minlp/solver.hpp"

using namespace minlp;

namespace {

void expect_close(double got, double want) { EXPECT_NEAR(got, want, std::max(1e-6, 1e-4 * std::fabs(want))); }

Problem circle() {
  Problem p;
  int x = p.add_var("x", -1, 1), y = p.add_var("y", -1, 1);
  auto& d = p.dag;
  p.add_nonlinear("c", d.sum(0, {{1, d.pow(d.var(x), 2)}, {1, d.pow(d.var(y), 2)}}), -kInf, 1);
  p.obj = {-1, -1};
  return p;
}

Problem hyperbola() {
  Problem p;
  int x = p.add_var("x", 0.1, 10), y = p.add_var("y", 0.1, 10);
  auto& d = p.dag;
  p.add_nonlinear("c", d.prod(1, {d.var(x), d.var(y)}), 1, kInf);
  p.obj = {1, 1};
  return p;
}

}  // namespace

TEST(Solve, CircleOptimum) {
  auto r = solve(circle());
  EXPECT_EQ(r.status, Status::Optimal);
  expect_close(r.primal, -std::sqrt(2.0));
  EXPECT_LE(r.dual, r.primal + 1e-9);
  EXPECT_GE(r.dual, r.primal - gap_tolerance(r.primal, Settings{}) - 1e-9);
  ASSERT_TRUE(r.has_incumbent());
  EXPECT_LE(r.incumbent[0] * r.incumbent[0] + r.incumbent[1] * r.incumbent[1], 1 + 1e-6);
}

TEST(Solve, BilinearOptimum) {
  auto r = solve(hyperbola());
  EXPECT_EQ(r.status, Status::Optimal);
  expect_close(r.primal, 2.0);
  ASSERT_TRUE(r.has_incumbent());
  EXPECT_GE(r.incumbent[0] * r.incumbent[1], 1 - 1e-6);
}

TEST(Solve, ConcaveMinimizationAtVertex) {
  Problem p;
  int x = p.add_var("x", -1, 2);
  p.set_objective_expr(p.dag.sum(0, {{-1, p.dag.pow(p.dag.var(x), 2)}}), false);
  auto r = solve(p);
  EXPECT_EQ(r.status, Status::Optimal);
  expect_close(r.primal, -4.0);
  ASSERT_TRUE(r.has_incumbent());
  EXPECT_NEAR(r.incumbent[0], 2.0, 1e-6);
}

TEST(Solve, MaximizeSense) {
  Problem p = circle();
  p.obj = {1, 1};
  p.maximize = true;
  auto r = solve(p);
  EXPECT_EQ(r.status, Status::Optimal);
  expect_close(r.primal, std::sqrt(2.0));
  EXPECT_GE(r.dual, r.primal - 1e-9);
}

TEST(Solve, InfeasibleProblem) {
  Problem p;
  int x = p.add_var("x", -1, 1), y = p.add_var("y", -1, 1);
  auto& d = p.dag;
  p.add_nonlinear("c", d.sum(0, {{1, d.pow(d.var(x), 2)}, {1, d.pow(d.var(y), 2)}}), 3, kInf);
  p.obj = {1, 0};
  auto r = solve(p);
  EXPECT_EQ(r.status, Status::Infeasible);
  EXPECT_FALSE(r.has_incumbent());
}

TEST(Solve, IntegerNonlinear) {
  // min (x - 2.6)^2 + y with x integer in [0,5], y >= 0, x*y >= 1
  Problem p;
  int x = p.add_var("x", 0, 5, VarType::Integer), y = p.add_var("y", 0, 10);
  auto& d = p.dag;
  NodeId f = d.sum(0, {{1, d.pow(d.sum(-2.6, {{1, d.var(x)}}), 2)}, {1, d.var(y)}});
  p.set_objective_expr(f, false);
  p.add_nonlinear("c", d.prod(1, {d.var(x), d.var(y)}), 1, kInf);
  auto r = solve(p);
  EXPECT_EQ(r.status, Status::Optimal);
  // x=3: 0.16 + 1/3
  expect_close(r.primal, 0.16 + 1.0 / 3.0);
  ASSERT_TRUE(r.has_incumbent());
  EXPECT_DOUBLE_EQ(r.incumbent[0], 3.0);
}

TEST(Solve, DeterministicRuns) {
  Settings s;
  s.seed = 7;
  auto a = solve(hyperbola(), s), b = solve(hyperbola(), s);
  EXPECT_EQ(a.stats.nodes, b.stats.nodes);
  EXPECT_EQ(a.stats.cuts, b.stats.cuts);
  EXPECT_EQ(a.primal, b.primal);
  EXPECT_EQ(a.dual, b.dual);
  EXPECT_EQ(a.incumbent, b.incumbent);
}

TEST(Solve, NodeLimitReportsBounds) {
  Settings s;
  s.node_limit = 1;
  s.disabled = {"obbt", "multistart", "undercover", "polish"};
  auto r = solve(hyperbola(), s);
  EXPECT_TRUE(r.status == Status::NodeLimit || r.status == Status::Optimal);
  EXPECT_LE(r.dual, 2.0 + 1e-6);
}

TEST(Solve, StatsJson) {
  auto r = solve(circle());
  auto j = r.stats.to_json();
  EXPECT_NE(j.find("\"nodes\""), std::string::npos);
  EXPECT_NE(j.find("\"cuts\""), std::string::npos);
  EXPECT_NE(j.find("\"heuristic_wins\""), std::string::npos);
}

TEST(Solve, EveryToggleStillSolves) {
  for (auto& t : known_toggles()) {
    Settings s;
    s.disabled = {t};
    auto r = solve(hyperbola(), s);
    EXPECT_EQ(r.status, Status::Optimal) << t;
    expect_close(r.primal, 2.0);
  }
}

TEST(Branching, PointExamples) {
  EXPECT_DOUBLE_EQ(branch_point({0, 4}, 1.0, 0.75), 1.25);
  EXPECT_DOUBLE_EQ(branch_point({0, 4}, 0.0, 1.0), 4e-4);
  EXPECT_DOUBLE_EQ(branch_point({0, 4}, 4.0, 1.0), 4 - 4e-4);
}

TEST(Branching, ScoreOrderPrefersFirstOnEqualScore) {
  Pseudocosts pc(2);
  pc.set(0, 2.0, 2.0);
  pc.set(1, 0.5, 0.5);
  std::vector<double> x{0.5, 0.5};
  Box b{{0, 1}, {0, 1}};
  auto d = select_branching({{0, 1.0}, {1, 1.0}}, pc, x, b, {false, false}, 0.75);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->var, 0);
  // larger weight wins when pseudocosts are unset
  Pseudocosts none(2);
  d = select_branching({{0, 1.0}, {1, 3.0}}, none, x, b, {false, false}, 0.75);
  EXPECT_EQ(d->var, 1);
  EXPECT_FALSE(select_branching({}, none, x, b, {false, false}, 0.75));
}

TEST(Branching, IntegerFloor) {
  Pseudocosts pc(1);
  std::vector<double> x{2.4};
  auto d = select_branching({{0, 1.0}}, pc, x, {{0, 5}}, {true}, 0.75);
  ASSERT_TRUE(d);
  EXPECT_TRUE(d->integer);
  EXPECT_DOUBLE_EQ(d->point, 2.0);
}

TEST(Branching, PseudocostEstimate) {
  Pseudocosts pc(1);
  EXPECT_DOUBLE_EQ(pc.estimate(0), 1e-6);
  pc.record(0, false, 4.0);
  EXPECT_DOUBLE_EQ(pc.estimate(0), 4.0);
  pc.record(0, true, 1.0);
  EXPECT_DOUBLE_EQ(pc.estimate(0), 2.0);
}

TEST(Enforce, ConvexViolationGivesCut) {
  Problem p;
  int x = p.add_var("x", -2, 1), y = p.add_var("y", 0, 1);
  auto& d = p.dag;
  p.add_nonlinear("c", d.sum(0, {{1, d.unary(Op::Exp, d.var(x))}, {1, d.var(y)}}), -kInf, 2);
  Relaxation rel(p, Settings{});
  Box box = p.box();
  Box eb = rel.ext_box(box);
  std::vector<double> pt(eb.size(), 0.0);
  pt[0] = 0.5;  // exp(0.5) + 1 > 2
  pt[1] = 1.0;
  for (size_t j = 2; j < pt.size(); ++j) pt[j] = std::min(std::max(1.0, eb[j].lo), eb[j].hi);
  auto r = rel.enforce(box, eb, pt);
  EXPECT_EQ(r.outcome, Outcome::CutsAdded);
  ASSERT_FALSE(r.cuts.empty());
  EXPECT_TRUE(r.cuts[0].family == CutFamily::Gradient || r.cuts[0].family == CutFamily::Tangent);
  EXPECT_GT(r.cuts[0].violation(pt), 1e-6);
}

TEST(Enforce, TightMcCormickBranches) {
  // x*y >= 1 on [0.5,2]^2: (0.8,0.8) with w=1 lies under both over-estimators
  Problem p;
  int x = p.add_var("x", 0.5, 2), y = p.add_var("y", 0.5, 2);
  p.add_nonlinear("c", p.dag.prod(1, {p.dag.var(x), p.dag.var(y)}), 1, kInf);
  Settings s;
  s.disabled = {"rlt", "sdp"};
  Relaxation rel(p, s);
  Box box = p.box();
  Box eb = rel.ext_box(box);
  std::vector<double> pt(eb.size(), 0.0);
  pt[0] = 0.8;
  pt[1] = 0.8;
  for (size_t j = 2; j < pt.size(); ++j) pt[j] = 1.0;
  auto r = rel.enforce(box, eb, pt);
  EXPECT_EQ(r.outcome, Outcome::Branched);
  EXPECT_FALSE(r.candidates.empty());
}

TEST(Enforce, DisjointActivityCutoff) {
  Problem p;
  int x = p.add_var("x", 0, 1);
  p.add_nonlinear("c", p.dag.pow(p.dag.var(x), 2), 2, kInf);
  Relaxation rel(p, Settings{});
  Box box = p.box();
  std::vector<double> y(rel.ext_box(box).size(), 0.5);
  EXPECT_EQ(rel.enforce(box, rel.ext_box(box), y).outcome, Outcome::Cutoff);
}

TEST(Enforce, FeasiblePoint) {
  auto p = circle();
  Relaxation rel(p, Settings{});
  Box box = p.box();
  std::vector<double> x{0.5, 0.5};
  auto eb = rel.ext_box(box);
  auto y = rel.ext().lift(p.dag, x);
  EXPECT_EQ(rel.enforce(box, eb, y).outcome, Outcome::Feasible);
}

TEST(Settings, Defaults) {
  Settings s;
  EXPECT_EQ(s.feastol, 1e-6);
  EXPECT_EQ(s.rel_gap, 1e-4);
  EXPECT_EQ(s.abs_gap, 1e-6);
  EXPECT_EQ(s.inf_bound, 1e12);
  EXPECT_EQ(s.branch_lambda, 0.75);
}
