#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "minlp/io.hpp"

using namespace minlp;

namespace {

const char* kFixtures[] = {
    "var x >= 0 <= 1 int;\nvar y >= -2 <= 3;\nmin 2*x + y;\ncon a: x + y <= 2;\n",
    "var x >= 0.5 <= 2;\nvar y >= -1 <= 1;\nmin x;\ncon c1: log(x)^2 + 2*log(x)*y + y^2 <= 4;\n",
    "var x >= -1 <= 1;\nvar y >= -1 <= 1;\nmin -x - y;\ncon circle: x^2 + y^2 <= 1;\n",
    "var x >= 0.1 <= 10;\nvar y >= 0.1 <= 10;\nmax x/y - exp(-x) + sqrt(y);\ncon p: 1 <= x*y;\n",
    "var a >= -3 <= 3;\nvar b bin;\nmin signpower(a, 3) + abs(a) + sin(a)*cos(a);\ncon r: -1 <= entropy(b + 0.5) <= 1;\n",
    "var u >= 1 <= 4;\nvar w >= 2 <= 5 int;\nmin (u - 2)^2 * w^(-1);\ncon k: 2 <= u + 2*w <= 9;\ncon q: -u^2 <= -1.5;\n",
};

double eval_row(const Problem& p, const NonlinearRow& r, std::span<const double> x) { return eval(p.dag, r.root, x); }

}  // namespace

TEST(Parse, IntegerVariable) {
  auto p = parse_model("var x >= 0 <= 1 int;");
  ASSERT_EQ(p.vars.size(), 1u);
  EXPECT_EQ(p.vars[0].type, VarType::Integer);
  EXPECT_EQ(p.vars[0].lb, 0.0);
  EXPECT_EQ(p.vars[0].ub, 1.0);
}

TEST(Parse, BinaryBounds) {
  auto p = parse_model("var b bin; var c >= -5 bin;");
  EXPECT_EQ(p.vars[0].type, VarType::Binary);
  EXPECT_EQ(p.vars[0].lb, 0.0);
  EXPECT_EQ(p.vars[0].ub, 1.0);
  EXPECT_EQ(p.vars[1].lb, 0.0);
}

TEST(Parse, LinearObjective) {
  auto p = parse_model("var x; var y; min 2*x + y + 3;");
  EXPECT_EQ(p.obj, (std::vector<double>{2, 1}));
  EXPECT_EQ(p.obj_offset, 3.0);
  EXPECT_EQ(p.objective_var, -1);
  EXPECT_FALSE(p.maximize);
}

TEST(Parse, FigureExpressionDag) {
  auto p = parse_model("var x >= 0.5 <= 2; var y >= -1 <= 1;\ncon c1: log(x)^2 + 2*log(x)*y + y^2 <= 4;");
  ASSERT_EQ(p.nonlinear.size(), 1u);
  EXPECT_EQ(p.nonlinear[0].hi, 4.0);
  const auto& d = p.dag;
  const auto& root = d[p.nonlinear[0].root];
  ASSERT_EQ(root.op, Op::Sum);
  ASSERT_EQ(root.children.size(), 3u);
  EXPECT_EQ(root.constant, 0.0);
  NodeId log_node = -1;
  int pows = 0, prods = 0;
  for (size_t i = 0; i < 3; ++i) {
    const auto& c = d[root.children[i]];
    if (c.op == Op::Pow) {
      ++pows;
      EXPECT_EQ(c.exponent, 2.0);
      EXPECT_EQ(root.coefs[i], 1.0);
      if (d[c.children[0]].op == Op::Log) log_node = c.children[0];
    } else if (c.op == Op::Prod) {
      ++prods;
      EXPECT_EQ(root.coefs[i] * c.constant, 2.0);
      ASSERT_EQ(c.children.size(), 2u);
    }
  }
  EXPECT_EQ(pows, 2);
  EXPECT_EQ(prods, 1);
  ASSERT_GE(log_node, 0);
  // log(x) is one shared node
  for (NodeId c : root.children)
    if (d[c].op == Op::Prod) EXPECT_TRUE(d[c].children[0] == log_node || d[c].children[1] == log_node);
}

TEST(Parse, NonlinearObjectiveMoved) {
  auto p = parse_model("var x >= -1 <= 2; min -x^2;");
  EXPECT_GE(p.objective_var, 0);
  std::vector<double> x{2.0, 0.0};
  EXPECT_DOUBLE_EQ(eval(p.dag, p.objective_expr, x), -4.0);
}

TEST(Parse, PrecedenceAndDesugaring) {
  auto p = parse_model("var x >= -5 <= 5; var y >= 1 <= 5;\ncon a: -x^2 + 2^-1 * y / y + 3*x*y - (x - y)^3 <= 100;");
  std::vector<double> pt{3.0, 2.0};
  double want = -9 + 0.5 + 18 - 1;
  ASSERT_EQ(p.nonlinear.size(), 1u);
  EXPECT_NEAR(eval_row(p, p.nonlinear[0], pt), want, 1e-12);
  auto q = parse_model("var x >= 0 <= 4; con s: sqrt(x) + x/2 - x^0.5 <= 3;");
  std::vector<double> z{4.0};
  ASSERT_EQ(q.linear.size() + q.nonlinear.size(), 1u);
}

TEST(Parse, LinearConstraintSides) {
  auto p = parse_model("var x; var y; con a: 1 <= x - 2*y + 4 <= 7; con b: 3 <= x; con c: y <= 2;");
  ASSERT_EQ(p.linear.size(), 3u);
  EXPECT_EQ(p.linear[0].lo, -3.0);
  EXPECT_EQ(p.linear[0].hi, 3.0);
  EXPECT_EQ(p.linear[1].lo, 3.0);
  EXPECT_EQ(p.linear[2].hi, 2.0);
}

TEST(Parse, ErrorsCarryPosition) {
  try {
    parse_model("var x;\ncon c: x + z <= 1;");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line, 2);
    EXPECT_EQ(e.col, 12);
    EXPECT_NE(std::string(e.what()).find("unknown variable"), std::string::npos);
  }
  try {
    parse_model("var x >= 0;\ncon c: x + * 2;");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line, 2);
    EXPECT_EQ(e.col, 12);
  }
  EXPECT_THROW(parse_model("var x >= -1 <= 1; con c: x^0.5 <= 1;"), ParseError);
  EXPECT_THROW(parse_model("var x >= -1 <= 1; con c: sqrt(x - 2) <= 1;"), ParseError);
  EXPECT_NO_THROW(parse_model("var x >= -1 <= 1; con c: sqrt(x + 1) <= 1;"));
  EXPECT_THROW(parse_model("var x; var x;"), ParseError);
  EXPECT_THROW(parse_model("var x; con c: x^x <= 1;"), ParseError);
  EXPECT_THROW(parse_model("var x; con c: x <= 1"), ParseError);
  EXPECT_THROW(parse_model("var x; con c: foo(x) <= 1;"), ParseError);
  EXPECT_THROW(parse_model("var x; con c: x / 0 <= 1;"), ParseError);
  EXPECT_THROW(parse_model("var x >= 2 <= 1;"), ParseError);
}

TEST(Print, RoundTripIsFixedPoint) {
  std::mt19937 rng(5);
  for (const char* text : kFixtures) {
    auto p1 = parse_model(text);
    std::string t1 = print_model(p1);
    auto p2 = parse_model(t1);
    std::string t2 = print_model(p2);
    EXPECT_EQ(t1, t2) << text;
    ASSERT_EQ(p1.vars.size(), p2.vars.size());
    ASSERT_EQ(p1.linear.size(), p2.linear.size());
    ASSERT_EQ(p1.nonlinear.size(), p2.nonlinear.size());
    EXPECT_EQ(p1.maximize, p2.maximize);
    for (int s = 0; s < 50; ++s) {
      std::vector<double> x(p1.vars.size());
      for (size_t j = 0; j < x.size(); ++j) {
        double lo = std::max(p1.vars[j].lb, -3.0), hi = std::min(p1.vars[j].ub, 3.0);
        x[j] = std::uniform_real_distribution<double>(lo, hi)(rng);
      }
      for (size_t i = 0; i < p1.nonlinear.size(); ++i) {
        EXPECT_EQ(p1.nonlinear[i].lo, p2.nonlinear[i].lo);
        EXPECT_EQ(p1.nonlinear[i].hi, p2.nonlinear[i].hi);
        double a = eval_row(p1, p1.nonlinear[i], x), b = eval_row(p2, p2.nonlinear[i], x);
        EXPECT_NEAR(a, b, 1e-9 * std::max(1.0, std::fabs(a)));
      }
      if (p1.objective_expr >= 0) {
        double a = eval(p1.dag, p1.objective_expr, x), b = eval(p2.dag, p2.objective_expr, x);
        EXPECT_NEAR(a, b, 1e-9 * std::max(1.0, std::fabs(a)));
      } else {
        EXPECT_EQ(p1.obj, p2.obj);
      }
    }
  }
}

TEST(Solution, ParseAndPrint) {
  auto p = parse_model("var x; var y >= 0; min x^2 + y;");
  auto x = parse_solution(p, "# best\nx 1.5\ny 2 # trailing\n\n");
  EXPECT_EQ(x[0], 1.5);
  EXPECT_EQ(x[1], 2.0);
  auto back = parse_solution(p, print_solution(p, x));
  EXPECT_EQ(back[0], 1.5);
  EXPECT_EQ(back[1], 2.0);
  EXPECT_EQ(print_solution(p, x).find("_obj"), std::string::npos);
  EXPECT_THROW(parse_solution(p, "z 1\n"), ParseError);
  EXPECT_THROW(parse_solution(p, "x\n"), ParseError);
  EXPECT_THROW(parse_solution(p, "x abc\n"), ParseError);
}

TEST(Check, ClassesAndTolerance) {
  auto p = parse_model("var x >= -2 <= 2; var k >= 0 <= 3 int; min x; con sq: x^2 <= 1; con lin: x + k <= 3;");
  auto ok = check_solution(p, std::vector<double>{0.5, 1.0});
  EXPECT_TRUE(ok.pass);
  EXPECT_EQ(ok.violation.max(), 0.0);
  auto frac = check_solution(p, std::vector<double>{0.5, 1.5});
  EXPECT_FALSE(frac.pass);
  EXPECT_NEAR(frac.violation.integrality, 0.5, 1e-15);
  auto nl = check_solution(p, std::vector<double>{1.001, 0.0});
  EXPECT_NEAR(nl.violation.nonlinear, 2.001e-3, 1e-12);
  EXPECT_EQ(nl.violation.linear, 0.0);
  auto lin = check_solution(p, std::vector<double>{0.0, 3.0 + 2e-6});
  EXPECT_NEAR(lin.violation.linear, 2e-6, 1e-12);
  EXPECT_FALSE(lin.pass);
  auto bnd = check_solution(p, std::vector<double>{-2.5, 0.0});
  EXPECT_NEAR(bnd.violation.bounds, 0.5, 1e-15);
  // within the absolute tolerance passes
  EXPECT_TRUE(check_solution(p, std::vector<double>{1.0 + 4e-7, 0.0}).pass);
}
