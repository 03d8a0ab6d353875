#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "minlp/extended.hpp"
#include "minlp/separation.hpp"

using namespace minlp;

namespace {

double coef(const Estimator& e, int i) {
  double s = 0.0;
  for (auto& [j, c] : e.coefs)
    if (j == i) s += c;
  return s;
}

double coef(const Cut& e, int i) {
  double s = 0.0;
  for (auto& [j, c] : e.coefs)
    if (j == i) s += c;
  return s;
}

ExprNode unary(Op op, double p = 0.0) {
  ExprNode n;
  n.op = op;
  n.exponent = p;
  n.children = {0};
  return n;
}

std::vector<double> sample(const Box& b, std::mt19937& rng) {
  std::vector<double> x(b.size());
  for (size_t i = 0; i < b.size(); ++i) x[i] = std::uniform_real_distribution<double>(b[i].lo, b[i].hi)(rng);
  return x;
}

}  // namespace

TEST(Estimate, SquareTangentAndSecant) {
  ExprDag d;
  NodeId x = d.var(0), sq = d.pow(x, 2);
  std::vector<double> ref{1.0};
  auto u = estimate(d, sq, {{-3, 3}}, ref, Want::Under);
  ASSERT_TRUE(u);
  EXPECT_DOUBLE_EQ(coef(*u, 0), 2.0);
  EXPECT_DOUBLE_EQ(u->constant, -1.0);
  EXPECT_TRUE(u->global);
  auto o = estimate(d, sq, {{0, 2}}, ref, Want::Over);
  ASSERT_TRUE(o);
  EXPECT_DOUBLE_EQ(coef(*o, 0), 2.0);
  EXPECT_DOUBLE_EQ(o->constant, 0.0);
  EXPECT_EQ(o->family, CutFamily::Secant);
  EXPECT_EQ(o->bounds_used, std::vector<int>{0});
}

TEST(Estimate, SineIntervalConstant) {
  ExprDag d;
  NodeId s = d.unary(Op::Sin, d.var(0));
  std::vector<double> ref{1.0};
  auto u = estimate(d, s, {{0, M_PI}}, ref, Want::Under);
  ASSERT_TRUE(u);
  EXPECT_TRUE(u->coefs.empty() || std::fabs(coef(*u, 0)) < 1e-15);
  EXPECT_NEAR(u->constant, 0.0, 1e-9);
  EXPECT_LE(u->constant, 0.0);
  EXPECT_EQ(u->family, CutFamily::IntervalConst);
}

TEST(Estimate, UnboundedConcaveSideHasNone) {
  ExprDag d;
  NodeId sq = d.pow(d.var(0), 2);
  std::vector<double> ref{0.0};
  EXPECT_FALSE(estimate(d, sq, {{0, kInf}}, ref, Want::Over));
}

TEST(McCormick, Examples) {
  auto a = mccormick({0, 1}, {0, 1}, 0.5, 0.5, Want::Under);
  ASSERT_TRUE(a);
  // first candidate: y_lo*x + x_lo*y - x_lo*y_lo = 0
  EXPECT_DOUBLE_EQ(a->ax, 0.0);
  EXPECT_DOUBLE_EQ(a->ay, 0.0);
  EXPECT_DOUBLE_EQ(a->c, 0.0);
  EXPECT_LE(a->value(0.5, 0.5), 0.25);

  auto b = mccormick({0, 1}, {0, 1}, 1, 1, Want::Over);
  ASSERT_TRUE(b);
  EXPECT_DOUBLE_EQ(b->ax, 1.0);
  EXPECT_DOUBLE_EQ(b->ay, 0.0);
  EXPECT_DOUBLE_EQ(b->value(1, 1), 1.0);

  auto c = mccormick({-1, 1}, {-1, 1}, 0, 0, Want::Under);
  ASSERT_TRUE(c);
  EXPECT_DOUBLE_EQ(c->value(0, 0), -1.0);

  EXPECT_FALSE(mccormick({0, kInf}, {0, 1}, 0, 0, Want::Under));
  EXPECT_FALSE(mccormick({-1e12, 1e12}, {-1e12, 1e12}, 0, 0, Want::Under));
}

TEST(McCormick, ValidOnBox) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-3, 3);
  for (int t = 0; t < 200; ++t) {
    double a = U(rng), b = U(rng), c = U(rng), e = U(rng);
    Interval xb{std::min(a, b), std::max(a, b)}, yb{std::min(c, e), std::max(c, e)};
    std::uniform_real_distribution<double> X(xb.lo, xb.hi), Y(yb.lo, yb.hi);
    double xr = X(rng), yr = Y(rng);
    auto lo = mccormick(xb, yb, xr, yr, Want::Under);
    auto hi = mccormick(xb, yb, xr, yr, Want::Over);
    ASSERT_TRUE(lo && hi);
    for (int s = 0; s < 50; ++s) {
      double x = X(rng), y = Y(rng);
      EXPECT_LE(lo->value(x, y), x * y + 1e-9);
      EXPECT_GE(hi->value(x, y), x * y - 1e-9);
    }
  }
}

TEST(Secant, Examples) {
  auto sq = unary(Op::Pow, 2);
  auto s = secant(sq, 0, 2);
  ASSERT_TRUE(s);
  EXPECT_DOUBLE_EQ(s->slope, 2.0);
  EXPECT_DOUBLE_EQ(s->intercept, 0.0);

  auto lg = secant(unary(Op::Log), 1, M_E);
  ASSERT_TRUE(lg);
  EXPECT_NEAR(lg->slope, 1.0 / (M_E - 1), 1e-12);
  EXPECT_NEAR(lg->value(1.0), 0.0, 1e-12);

  auto is = integer_secant(sq, 1.5, {0, 5});
  ASSERT_TRUE(is);
  EXPECT_DOUBLE_EQ(is->slope, 3.0);
  EXPECT_DOUBLE_EQ(is->intercept, -2.0);
}

TEST(Estimate, IntegerArgumentUsesIntegerSecant) {
  ExprDag d;
  NodeId sq = d.pow(d.var(0), 2);
  std::vector<double> ref{1.5};
  std::vector<bool> integral{true};
  Box b{{0, 5}};
  auto u = estimate(d, sq, b, ref, Want::Under, {}, &b, &integral);
  ASSERT_TRUE(u);
  EXPECT_DOUBLE_EQ(coef(*u, 0), 3.0);
  EXPECT_DOUBLE_EQ(u->constant, -2.0);
  // valid at every integer point
  for (int k = 0; k <= 5; ++k) EXPECT_LE(3.0 * k - 2, k * k);
}

TEST(GradientCut, Examples) {
  ExprDag d;
  NodeId x = d.var(0), y = d.var(1);
  std::vector<double> zero{0.0};
  auto e = gradient_cut(d, d.unary(Op::Exp, x), zero);
  ASSERT_TRUE(e);
  EXPECT_DOUBLE_EQ(coef(*e, 0), 1.0);
  EXPECT_DOUBLE_EQ(e->constant, 1.0);

  NodeId q = d.sum(0, {{1, d.pow(x, 2)}, {2, d.prod(1, {x, y})}, {1, d.pow(y, 2)}});
  std::vector<double> one{1.0, 1.0};
  auto g = gradient_cut(d, q, one);
  ASSERT_TRUE(g);
  EXPECT_DOUBLE_EQ(coef(*g, 0), 4.0);
  EXPECT_DOUBLE_EQ(coef(*g, 1), 4.0);
  EXPECT_DOUBLE_EQ(g->constant, -4.0);

  std::vector<double> four{4.0};
  auto r = gradient_cut(d, d.pow(x, 0.5), four);
  ASSERT_TRUE(r);
  EXPECT_DOUBLE_EQ(coef(*r, 0), 0.25);
  EXPECT_DOUBLE_EQ(r->constant, 1.0);  // 2 + (x - 4)/4

  std::vector<double> neg{-1.0};
  EXPECT_FALSE(gradient_cut(d, d.unary(Op::Log, x), neg));
}

TEST(VertexPoly, Examples) {
  ExprDag d;
  NodeId x = d.var(0), y = d.var(1);
  NodeId h = d.sum(0, {{-1, d.pow(x, 2)}, {-1, d.pow(y, 2)}});
  std::vector<double> ref{0.0, 0.0};
  auto e = vertexpoly_under(d, h, {0, 1}, {{0, 1}, {0, 1}}, ref);
  ASSERT_TRUE(e);
  EXPECT_NEAR(e->value(ref), 0.0, 1e-12);
  EXPECT_NEAR(coef(*e, 0), -1.0, 1e-12);
  EXPECT_NEAR(coef(*e, 1), -1.0, 1e-12);

  std::vector<double> r1{1.0};
  auto s = vertexpoly_under(d, d.pow(x, 0.5), {0}, {{0, 4}}, r1);
  ASSERT_TRUE(s);
  EXPECT_NEAR(coef(*s, 0), 0.5, 1e-12);
  EXPECT_NEAR(s->constant, 0.0, 1e-12);

  std::vector<std::pair<double, NodeId>> terms;
  std::vector<int> vars;
  Box box;
  for (int i = 0; i < 15; ++i) {
    terms.push_back({-1, d.pow(d.var(i), 2)});
    vars.push_back(i);
    box.push_back({0, 1});
  }
  std::vector<double> r15(15, 0.5);
  EXPECT_FALSE(vertexpoly_under(d, d.sum(0, terms), vars, box, r15));
  EXPECT_FALSE(vertexpoly_under(d, h, {0, 1}, {{0, kInf}, {0, 1}}, ref));
}

TEST(VertexPoly, LpCaseMatchesVerticesAndIsValid) {
  ExprDag d;
  // concave: -(x+y+z)^2 - x^2
  NodeId x = d.var(0), y = d.var(1), z = d.var(2);
  NodeId s = d.sum(0, {{1, x}, {1, y}, {1, z}});
  NodeId h = d.sum(0, {{-1, d.pow(s, 2)}, {-1, d.pow(x, 2)}});
  Box box{{-1, 2}, {0, 1}, {-2, 1}};
  std::mt19937 rng(5);
  for (int t = 0; t < 20; ++t) {
    auto ref = sample(box, rng);
    auto e = vertexpoly_under(d, h, {0, 1, 2}, box, ref);
    ASSERT_TRUE(e);
    for (int m = 0; m < 8; ++m) {
      std::vector<double> v{(m & 1) ? box[0].hi : box[0].lo, (m & 2) ? box[1].hi : box[1].lo,
                            (m & 4) ? box[2].hi : box[2].lo};
      EXPECT_LE(e->value(v), eval(d, h, v) + 1e-9);
    }
    for (int k = 0; k < 200; ++k) {
      auto p = sample(box, rng);
      EXPECT_LE(e->value(p), eval(d, h, p) + 1e-7);
    }
    // maximal at the reference: tight at a vertex when ref is one
  }
  std::vector<double> corner{2, 1, 1};
  auto e = vertexpoly_under(d, h, {0, 1, 2}, box, corner);
  ASSERT_TRUE(e);
  EXPECT_NEAR(e->value(corner), eval(d, h, corner), 1e-8);
}

TEST(SocSeparate, Examples) {
  SocForm s;
  s.terms = {AffineForm{{{0, 1.0}}, 0.0}, AffineForm{{{1, 1.0}}, 0.0}};
  s.rhs = AffineForm{{{2, 1.0}}, 0.0};
  std::vector<double> p{1, 1, 0.5};
  auto c = soc_separate(s, p);
  ASSERT_TRUE(c);
  EXPECT_NEAR(coef(*c, 0), 1 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(coef(*c, 1), 1 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(coef(*c, 2), -1.0, 1e-12);
  EXPECT_NEAR(c->rhs, 0.0, 1e-12);
  EXPECT_GT(c->violation(p), 0.5);

  std::vector<double> apex{0, 0, -1};
  EXPECT_FALSE(soc_separate(s, apex));
  std::vector<double> inside{0.3, 0.4, 1};
  EXPECT_FALSE(soc_separate(s, inside));
}

TEST(SocSeparate, RotatedStandardized) {
  // x^2 <= z t with x=0, t=1, z=2
  RotatedCone rc;
  rc.a = AffineForm{{{0, 1.0}}, 0.0};
  rc.r = AffineForm{{{1, 1.0}}, 0.0};
  rc.z = 2;
  std::vector<double> p{1, 0.4, 0.4};
  auto c = soc_separate(rc, p);
  ASSERT_TRUE(c);
  EXPECT_GT(c->violation(p), 0.0);
  // gradient of sqrt(4x^2 + (t-z)^2) at (1, 0) is (2, 0)
  EXPECT_NEAR(coef(*c, 0), 2.0, 1e-12);
  EXPECT_NEAR(coef(*c, 1), -1.0, 1e-12);
  EXPECT_NEAR(coef(*c, 2), -1.0, 1e-12);
  // valid on the cone
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> U(-3, 3), P(0, 3);
  for (int k = 0; k < 1000; ++k) {
    double x = U(rng), t = P(rng), z = P(rng);
    if (x * x > z * t) continue;
    std::vector<double> q{x, t, z};
    EXPECT_LE(c->activity(q), c->rhs + 1e-9);
  }
}

TEST(SocSeparate, CutIsValidOnCone) {
  SocForm s;
  s.terms = {AffineForm{{{0, 2.0}}, 1.0}, AffineForm{{{1, 1.0}, {0, -1.0}}, 0.5}, AffineForm{{{2, 1.0}}, 0.0}};
  s.rhs = AffineForm{{{3, 1.0}}, 1.0};
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> U(-2, 2);
  int cuts = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> p{U(rng), U(rng), U(rng), U(rng)};
    auto c = soc_separate(s, p);
    if (!c) continue;
    ++cuts;
    for (int k = 0; k < 100; ++k) {
      std::vector<double> q{U(rng), U(rng), U(rng), U(rng)};
      if (s.lhs_value(q) <= s.rhs.value(q)) EXPECT_LE(c->activity(q), c->rhs + 1e-9);
    }
  }
  EXPECT_GT(cuts, 10);
}

TEST(Rlt, Examples) {
  std::vector<std::pair<int, double>> row{{0, 1.0}, {1, 1.0}};
  Box box{{0, 1}, {0, 1}, {0, 1}, {0, 1}};
  std::map<std::pair<int, int>, int> prods{{{0, 0}, 2}, {{0, 1}, 3}};
  std::vector<double> ref{0.5, 0.5, 0.25, 0.25};
  auto c = rlt_generate(row, 1.0, 0, FactorSide::Lower, prods, box, ref);
  ASSERT_TRUE(c);
  // X11 + X12 - x1 <= 0
  EXPECT_DOUBLE_EQ(coef(*c, 2), 1.0);
  EXPECT_DOUBLE_EQ(coef(*c, 3), 1.0);
  EXPECT_DOUBLE_EQ(coef(*c, 0), -1.0);
  EXPECT_DOUBLE_EQ(coef(*c, 1), 0.0);
  EXPECT_DOUBLE_EQ(c->rhs, 0.0);

  std::map<std::pair<int, int>, int> only11{{{0, 0}, 2}};
  auto m = rlt_generate(row, 1.0, 0, FactorSide::Lower, only11, box, ref);
  ASSERT_TRUE(m);
  EXPECT_DOUBLE_EQ(coef(*m, 2), 1.0);
  // valid for points of x1 + x2 <= 1 with X11 = x1^2
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 2000; ++k) {
    double a = U(rng), b = U(rng);
    if (a + b > 1) continue;
    std::vector<double> q{a, b, a * a, a * b};
    EXPECT_LE(m->activity(q), m->rhs + 1e-9);
    EXPECT_LE(c->activity(q), c->rhs + 1e-9);
  }

  Box inf{{0, kInf}, {0, 1}, {0, 1}, {0, 1}};
  EXPECT_FALSE(rlt_generate(row, 1.0, 0, FactorSide::Upper, prods, inf, ref));
}

TEST(Rlt, UpperFactorValid) {
  std::vector<std::pair<int, double>> row{{0, 2.0}, {1, -1.0}};
  Box box{{-1, 2}, {0, 3}};
  std::map<std::pair<int, int>, int> none;
  std::mt19937 rng(4);
  for (auto side : {FactorSide::Lower, FactorSide::Upper})
    for (int f : {0, 1}) {
      std::vector<double> ref{0.5, 1.5};
      auto c = rlt_generate(row, 1.0, f, side, none, box, ref);
      if (!c) continue;
      for (int k = 0; k < 2000; ++k) {
        auto q = sample(box, rng);
        if (2 * q[0] - q[1] > 1) continue;
        EXPECT_LE(c->activity(q), c->rhs + 1e-9);
      }
    }
}

TEST(Sdp, Examples) {
  std::array<int, 5> idx{0, 1, 2, 3, 4};
  auto c = sdp_minor_cut({0, 0, 1, -2, 1}, idx);
  ASSERT_TRUE(c);
  double s = coef(*c, 2);
  ASSERT_GT(s, 0);
  EXPECT_NEAR(coef(*c, 3) / s, 2.0, 1e-9);
  EXPECT_NEAR(coef(*c, 4) / s, 1.0, 1e-9);
  EXPECT_NEAR(coef(*c, 0), 0.0, 1e-9);
  EXPECT_NEAR(c->lhs, 0.0, 1e-9);
  std::vector<double> p{0, 0, 1, -2, 1};
  EXPECT_NEAR(c->activity(p) / s, -2.0, 1e-9);

  EXPECT_FALSE(sdp_minor_cut({0, 0, 1, 0, 1}, idx));
  EXPECT_FALSE(sdp_minor_cut({1, 1, 1, 1, 1}, idx));
}

TEST(Sdp, NeverCutsRankOnePoints) {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> U(-3, 3);
  std::array<int, 5> idx{0, 1, 2, 3, 4};
  for (int t = 0; t < 200; ++t) {
    std::array<double, 5> bad{U(rng), U(rng), U(rng), U(rng), U(rng)};
    auto c = sdp_minor_cut(bad, idx);
    if (!c) continue;
    for (int k = 0; k < 1000 / 200 + 5; ++k) {
      double a = U(rng), b = U(rng);
      std::vector<double> q{a, b, a * a, a * b, b * b};
      EXPECT_GE(c->activity(q), c->lhs - 1e-9);
    }
  }
  for (int k = 0; k < 1000; ++k) {
    double a = U(rng), b = U(rng);
    EXPECT_FALSE(sdp_minor_cut({a, b, a * a, a * b, b * b}, idx));
  }
}

TEST(Perspective, Examples) {
  // x^2 <= w, x in {0} u [1, 3] by indicator y (index 1)
  double xh = 2.0;
  Estimator base;
  base.coefs = {{0, 2 * xh}};
  base.constant = -xh * xh;
  auto p = perspective_strengthen(base, {0}, {0.0}, 1, 0.0);
  EXPECT_DOUBLE_EQ(coef(p, 0), 2 * xh);
  EXPECT_DOUBLE_EQ(coef(p, 1), -xh * xh);
  EXPECT_DOUBLE_EQ(p.constant, 0.0);
  std::vector<double> off{0, 0};
  EXPECT_DOUBLE_EQ(p.value(off), 0.0);

  // mixed h = x^2 + 3z: z coefficient unchanged
  Estimator mixed = base;
  mixed.coefs.push_back({2, 3.0});
  auto q = perspective_strengthen(mixed, {0}, {0.0}, 1, 0.0);
  EXPECT_DOUBLE_EQ(coef(q, 2), 3.0);
  EXPECT_DOUBLE_EQ(coef(q, 1), -xh * xh);
}

TEST(Perspective, DominatesBaseCut) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> X(1, 3), Y(0, 1);
  for (int t = 0; t < 50; ++t) {
    double xh = X(rng);
    Estimator base;
    base.coefs = {{0, 2 * xh}};
    base.constant = -xh * xh;
    auto p = perspective_strengthen(base, {0}, {0.0}, 1, 0.0);
    for (int k = 0; k < 100; ++k) {
      std::vector<double> pt{X(rng) * (k % 3 ? 1 : 0), Y(rng)};
      EXPECT_GE(p.value(pt), base.value(pt) - 1e-12);
      pt[1] = 1.0;
      EXPECT_NEAR(p.value(pt), base.value(pt), 1e-12);
      // valid for the semicontinuous set: y=0 forces x=0
      std::vector<double> offp{0.0, 0.0};
      EXPECT_LE(p.value(offp), 0.0 + 1e-12);
      double x = X(rng);
      std::vector<double> on{x, 1.0};
      EXPECT_LE(p.value(on), x * x + 1e-9);
    }
  }
}

TEST(Quotient, Examples) {
  QuotientForm q;
  q.u = 0;
  q.a = 2;
  q.b = 1;
  q.c = 1;
  q.d = 1;
  auto u = quotient_estimate(q, {0, 1}, 0.3, Want::Under);
  ASSERT_TRUE(u);
  EXPECT_NEAR(u->intercept, 1.0, 1e-12);
  EXPECT_NEAR(u->slope, 0.5, 1e-12);
  auto o = quotient_estimate(q, {0, 1}, 0.3, Want::Over);
  ASSERT_TRUE(o);
  EXPECT_NEAR(o->value(0.3), q.value(0.3), 1e-12);
  EXPECT_NEAR(o->slope, q.deriv(0.3), 1e-12);
  for (double x = 0; x <= 1.0; x += 0.01) {
    EXPECT_LE(u->value(x), q.value(x) + 1e-12);
    EXPECT_GE(o->value(x), q.value(x) - 1e-12);
  }
  EXPECT_FALSE(quotient_estimate(q, {-2, 1}, 0.0, Want::Under));
}

TEST(Quotient, MatchedFromExpression) {
  ExprDag d;
  NodeId x = d.var(0);
  NodeId f = d.prod(1, {d.sum(1, {{2, x}}), d.pow(d.sum(1, {{1, x}}), -1)});
  std::vector<int> aux(d.size(), -1);
  aux[static_cast<size_t>(x)] = 0;
  std::vector<double> ref{0.5};
  auto e = quotient_estimate(d, f, {{0, 1}}, ref, Want::Under, {&aux});
  ASSERT_TRUE(e);
  EXPECT_NEAR(e->constant, 1.0, 1e-12);
  EXPECT_NEAR(coef(*e, 0), 0.5, 1e-12);
}

TEST(Estimate, SampledValidityOfUnivariates) {
  struct Case {
    Op op;
    double p;
    Interval b;
  };
  std::vector<Case> cases{{Op::Pow, 2, {-2, 3}},        {Op::Pow, 3, {-2, 1.5}},   {Op::Pow, 3, {0.5, 2}},
                          {Op::Pow, 0.5, {0, 4}},       {Op::Pow, -1, {0.5, 3}},   {Op::Pow, 1.5, {0, 2}},
                          {Op::Pow, 4, {-1, 2}},        {Op::SignPower, 2, {-2, 1}}, {Op::SignPower, 1.5, {-1, 3}},
                          {Op::Exp, 0, {-2, 2}},        {Op::Log, 0, {0.1, 5}},    {Op::Entropy, 0, {0, 2}},
                          {Op::Sin, 0, {-1, 4}},        {Op::Cos, 0, {0, 7}},      {Op::Abs, 0, {-2, 1}},
                          {Op::Pow, 5, {-1, 1}},        {Op::Pow, -2, {0.2, 2}}};
  std::mt19937 rng(11);
  for (auto& c : cases) {
    ExprDag d;
    NodeId x = d.var(0);
    NodeId f;
    if (c.op == Op::Pow)
      f = d.pow(x, c.p);
    else if (c.op == Op::SignPower)
      f = d.signpower(x, c.p);
    else
      f = d.unary(c.op, x);
    std::uniform_real_distribution<double> U(c.b.lo, c.b.hi);
    for (Want w : {Want::Under, Want::Over}) {
      int got = 0;
      for (int t = 0; t < 20; ++t) {
        std::vector<double> ref{U(rng)};
        Box box{c.b};
        auto e = estimate(d, f, box, ref, w);
        if (!e) continue;
        ++got;
        for (int k = 0; k < 500; ++k) {
          std::vector<double> pt{U(rng)};
          double fv = eval(d, f, pt), ev = e->value(pt);
          if (w == Want::Under)
            EXPECT_LE(ev, fv + 1e-7) << op_name(c.op) << " " << c.p << " at " << pt[0];
          else
            EXPECT_GE(ev, fv - 1e-7) << op_name(c.op) << " " << c.p << " at " << pt[0];
        }
      }
      EXPECT_GT(got, 0) << op_name(c.op) << " " << c.p;
    }
  }
}

TEST(Estimate, OddPowerEnvelopeIsTight) {
  ExprDag d;
  NodeId f = d.pow(d.var(0), 3);
  Box box{{-1, 2}};
  // convex envelope of x^3 on [-1,2]: line from (-1,-1) touching at t* = 0.5, tangent beyond
  std::vector<double> ref{1.5};
  auto e = estimate(d, f, box, ref, Want::Under);
  ASSERT_TRUE(e);
  EXPECT_NEAR(e->value(ref), 3.375, 1e-9);
  std::vector<double> neg{-1.0};
  auto e2 = estimate(d, f, box, neg, Want::Under);
  ASSERT_TRUE(e2);
  EXPECT_NEAR(e2->value(neg), -1.0, 1e-9);
}

namespace {

struct Fixture {
  Problem p;
  std::string name;
};

std::vector<Fixture> fixtures() {
  std::vector<Fixture> out;
  {
    Fixture f{{}, "figure"};
    auto& p = f.p;
    int x = p.add_var("x", 0.5, 2), y = p.add_var("y", -1, 1);
    auto& d = p.dag;
    NodeId lx = d.unary(Op::Log, d.var(x));
    NodeId e = d.sum(0, {{1, d.pow(lx, 2)}, {2, d.prod(1, {lx, d.var(y)})}, {1, d.pow(d.var(y), 2)}});
    p.add_nonlinear("c", simplify(d, e), -kInf, 4);
    out.push_back(std::move(f));
  }
  {
    Fixture f{{}, "mixed"};
    auto& p = f.p;
    int x = p.add_var("x", -1, 2), y = p.add_var("y", 0, 1), z = p.add_var("z", -2, 1);
    auto& d = p.dag;
    NodeId X = d.var(x), Y = d.var(y), Z = d.var(z);
    p.add_nonlinear("e", d.unary(Op::Exp, d.sum(0, {{1, X}, {1, Y}})), -kInf, 5);
    p.add_nonlinear("t", d.prod(2, {X, Y, Z}), -1, 1);
    p.add_nonlinear("c", d.sum(0, {{1, d.pow(X, 3)}, {-1, Z}}), -3, 3);
    p.add_nonlinear("s", d.pow(d.sum(1, {{1, Y}, {1, d.pow(Z, 2)}}), 0.5), 0.5, kInf);
    p.add_nonlinear("q", d.prod(1, {d.sum(1, {{2, X}}), d.pow(d.sum(2, {{1, X}}), -1)}), -kInf, 2);
    out.push_back(std::move(f));
  }
  {
    Fixture f{{}, "quadratic"};
    auto& p = f.p;
    int x = p.add_var("x", -2, 2), y = p.add_var("y", -1, 3);
    auto& d = p.dag;
    NodeId X = d.var(x), Y = d.var(y);
    p.add_nonlinear("q1", d.sum(0, {{1, d.pow(X, 2)}, {-3, d.prod(1, {X, Y})}, {1, Y}}), -kInf, 1);
    p.add_nonlinear("q2", d.sum(0, {{1, d.pow(X, 2)}, {1, d.pow(Y, 2)}, {1, d.prod(1, {X, Y})}}), -kInf, 4);
    p.add_nonlinear("en", d.sum(0, {{1, d.unary(Op::Entropy, d.sum(2, {{1, X}}))}, {1, d.signpower(Y, 1.5)}}), -2, 2);
    out.push_back(std::move(f));
  }
  return out;
}

void check_validity(const Problem& p, const ExtendedForm& ef, bool shrink, std::mt19937& rng) {
  Box root = ef.box();
  Box xbox = p.box();
  for (size_t ci = 0; ci < ef.cons.size(); ++ci) {
    const auto& c = ef.cons[ci];
    if (c.handler == Handler::Soc) continue;
    for (Want w : {Want::Under, Want::Over}) {
      if ((w == Want::Under && !c.need_le) || (w == Want::Over && !c.need_ge)) continue;
      for (int t = 0; t < 10; ++t) {
        Box sub = xbox;
        if (shrink) {
          for (auto& b : sub) {
            std::uniform_real_distribution<double> U(b.lo, b.hi);
            double a = U(rng), e = U(rng);
            b = {std::min(a, e), std::max(a, e)};
          }
        }
        auto ref_x = sample(sub, rng);
        auto ref = ef.lift(p.dag, ref_x);
        Box node = root;
        if (shrink) {
          // bounds of the node: recompute auxiliary ranges on the sub box
          for (size_t i = 0; i < sub.size(); ++i) node[i] = sub[i];
          for (size_t i = sub.size(); i < node.size(); ++i)
            if (ef.vars[i].node >= 0) node[i] = intersect(root[i], ieval(p.dag, ef.vars[i].node, sub));
        }
        auto est = estimate_constraint(p.dag, ef, c, node, root, ref, w);
        if (!est) continue;
        Box check = shrink && est->global ? xbox : sub;
        for (int k = 0; k < (shrink ? 100 : 1000); ++k) {
          auto xs = sample(check, rng);
          auto y = ef.lift(p.dag, xs);
          double h = ef.h_value(p.dag, c, y), v = est->value(y);
          if (w == Want::Under)
            EXPECT_LE(v, h + 1e-7 * (1 + std::fabs(h))) << handler_name(c.handler) << " con " << ci;
          else
            EXPECT_GE(v, h - 1e-7 * (1 + std::fabs(h))) << handler_name(c.handler) << " con " << ci;
        }
      }
    }
  }
}

}  // namespace

TEST(EstimateConstraint, SampledValidityAllHandlers) {
  std::mt19937 rng(21);
  std::set<Handler> seen;
  for (auto& f : fixtures()) {
    for (auto opts : {ExtOptions{}, ExtOptions{false, false, false, false, false}}) {
      auto ef = build_extended_form(f.p, opts);
      for (auto& c : ef.cons) seen.insert(c.handler);
      check_validity(f.p, ef, false, rng);
    }
  }
  for (Handler h : {Handler::Linear, Handler::Quadratic, Handler::Convex, Handler::Concave, Handler::Quotient,
                    Handler::Product, Handler::Univariate})
    EXPECT_TRUE(seen.count(h)) << handler_name(h);
}

TEST(EstimateConstraint, GlobalCutsSurviveBoxChanges) {
  std::mt19937 rng(22);
  for (auto& f : fixtures())
    for (auto opts : {ExtOptions{}, ExtOptions{false, false, false, false, false}}) {
      auto ef = build_extended_form(f.p, opts);
      check_validity(f.p, ef, true, rng);
    }
}

TEST(EstimatorCut, SidesAndBoundsUsed) {
  Problem p;
  int x = p.add_var("x", 0, 2), y = p.add_var("y", 0, 3);
  auto& d = p.dag;
  p.add_nonlinear("c", d.prod(1, {d.var(x), d.var(y)}), -kInf, 1);
  auto ef = build_extended_form(p);
  ASSERT_EQ(ef.cons.size(), 1u);
  auto& c = ef.cons[0];
  std::vector<double> pt{1, 1, 1};
  auto e = estimate_constraint(p.dag, ef, c, ef.box(), ef.box(), pt, Want::Under);
  ASSERT_TRUE(e);
  auto cut = estimator_cut(p.dag, ef, *e, c.out, Want::Under);
  EXPECT_EQ(coef(cut, c.out), -1.0);
  EXPECT_FALSE(std::isfinite(cut.lhs));
  EXPECT_TRUE(std::isfinite(cut.rhs));
  EXPECT_EQ(cut.bounds_used, (std::vector<int>{0, 1}));
  EXPECT_FALSE(cut.global);
}

TEST(Incumbent, LinearizationOfConvexSquare) {
  Problem p;
  int x = p.add_var("x", -3, 3);
  p.add_nonlinear("c", p.dag.pow(p.dag.var(x), 2), -kInf, 1);
  auto ef = build_extended_form(p);
  std::vector<double> x1{1.0};
  auto pt = ef.lift(p.dag, x1);
  auto cuts = incumbent_linearization(p.dag, ef, pt);
  ASSERT_EQ(cuts.size(), 1u);
  auto& c = cuts[0];
  EXPECT_DOUBLE_EQ(coef(c, 0), 2.0);
  EXPECT_DOUBLE_EQ(coef(c, ef.cons[0].out), -1.0);
  EXPECT_DOUBLE_EQ(c.rhs, 1.0);
  EXPECT_NEAR(c.violation(pt), 0.0, 1e-12);

  Problem lin;
  int a = lin.add_var("a", 0, 1);
  lin.add_linear("r", {{a, 1.0}}, -kInf, 1);
  auto ef2 = build_extended_form(lin);
  std::vector<double> z{0.5};
  EXPECT_TRUE(incumbent_linearization(lin.dag, ef2, z).empty());
}

TEST(CutRecord, FamilyNamesAndSanity) {
  EXPECT_STREQ(cut_family_name(CutFamily::McCormick), "mccormick");
  Estimator e;
  e.coefs = {{0, 1.0}, {1, 1e-10}};
  EXPECT_FALSE(numerically_sane(e));
  e.coefs = {{0, 1.0}, {1, 1e-3}};
  EXPECT_TRUE(numerically_sane(e));
  e.constant = 1e16;
  EXPECT_FALSE(numerically_sane(e));
}
