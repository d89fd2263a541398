#include <cmath>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "srcurv/builtins.hpp"
#include "srcurv/expr.hpp"
#include "srcurv/parser.hpp"
#include "srcurv/structure.hpp"
#include "srcurv/vector_field.hpp"

namespace srcurv {
namespace {

// Random expressions of bounded depth over {x, y, z}. Quotients and square
// roots are guarded so the expression is defined everywhere.
Expression random_expression(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 10);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  static const char* names[] = {"x", "y", "z"};
  switch (pick(rng)) {
    case 0:
      return Expression(std::round(coef(rng) * 4) / 4);
    case 1:
      return var(names[std::uniform_int_distribution<int>(0, 2)(rng)]);
    case 2:
      return random_expression(rng, depth - 1) + random_expression(rng, depth - 1);
    case 3:
      return random_expression(rng, depth - 1) - random_expression(rng, depth - 1);
    case 4:
      return random_expression(rng, depth - 1) * random_expression(rng, depth - 1);
    case 5:
      return random_expression(rng, depth - 1) / (Expression(1.0) + pow(random_expression(rng, depth - 1), 2));
    case 6:
      return pow(random_expression(rng, depth - 1), std::uniform_int_distribution<int>(-2, 3)(rng));
    case 7:
      return sin(random_expression(rng, depth - 1));
    case 8:
      return cos(random_expression(rng, depth - 1));
    case 9:
      return exp(Expression(0.5) * sin(random_expression(rng, depth - 1)));
    default:
      return sqrt(Expression(1.0) + pow(random_expression(rng, depth - 1), 2));
  }
}

TEST(Expression, ConstantFoldingAndIdentities) {
  Expression x = var("x");
  EXPECT_TRUE((x * 0.0).is_zero());
  EXPECT_EQ(to_string(x * 1.0), "x");
  EXPECT_EQ(to_string(x + 0.0), "x");
  EXPECT_DOUBLE_EQ((Expression(2.0) * 3.0 + 1.0).value(), 7.0);
  EXPECT_EQ(to_string(-(-x)), "x");
}

TEST(Expression, DifferentiateExamples) {
  auto chart = std::vector<std::string>{"x", "y"};
  Expression e1 = parse_expression("-y/2", chart);
  Expression d1 = differentiate(e1, "y");
  ASSERT_TRUE(d1.is_constant());
  EXPECT_DOUBLE_EQ(d1.value(), -0.5);

  Expression e2 = parse_expression("x*sin(y)", chart);
  EXPECT_TRUE(structurally_equal(differentiate(e2, "x"), parse_expression("sin(y)")));

  Expression e3 = parse_expression("x^3", chart);
  double d = evaluate(differentiate(e3, "x"), {{"x", 2.0}});
  EXPECT_DOUBLE_EQ(d, 12.0);
  // finite-difference oracle
  const double h = 1e-5;
  double fd = (evaluate(e3, {{"x", 2.0 + h}}) - evaluate(e3, {{"x", 2.0 - h}})) / (2 * h);
  EXPECT_NEAR(d, fd, 1e-6);

  EXPECT_TRUE(differentiate(Expression(3.0), "x").is_zero());
}

TEST(Expression, DerivativeMatchesCentralDifferences) {
  std::mt19937 rng(20261016);
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    Expression e = random_expression(rng, 6);
    for (const char* v : {"x", "y", "z"}) {
      std::map<std::string, double> p{{"x", coord(rng)}, {"y", coord(rng)}, {"z", coord(rng)}};
      double f = evaluate(e, p);
      double df = evaluate(differentiate(e, v), p);
      if (!std::isfinite(f) || std::abs(f) > 1e3 || std::abs(df) > 1e3) continue;
      auto central = [&](double h) {
        auto plus = p, minus = p;
        plus[v] += h;
        minus[v] -= h;
        return (evaluate(e, plus) - evaluate(e, minus)) / (2 * h);
      };
      double fd = central(1e-5);
      // Skip points where the difference quotient itself is unresolved.
      if (std::abs(fd - central(2e-5)) > 1e-7 * (1.0 + std::abs(fd))) continue;
      EXPECT_NEAR(df, fd, 1e-5 * (1.0 + std::abs(df))) << to_string(e) << " d/d" << v;
      ++checked;
    }
  }
  EXPECT_GT(checked, 800);
}

TEST(Expression, PrintParseRoundTrip) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    Expression e = random_expression(rng, 5);
    std::string text = to_string(e);
    Expression back = parse_expression(text);
    EXPECT_TRUE(structurally_equal(e, back)) << text << "  vs  " << to_string(back);
    EXPECT_EQ(to_string(parse_expression(to_string(back))), to_string(back));
  }
  EXPECT_TRUE(structurally_equal(parse_expression("x^-2 - (-3)"), parse_expression("3 + x^-2")));
  EXPECT_TRUE(structurally_equal(parse_expression("a*b + c"), parse_expression("c + b*a")));
  EXPECT_FALSE(structurally_equal(parse_expression("a/b"), parse_expression("b/a")));
}

TEST(Expression, ParseErrorsCarryPosition) {
  try {
    parse_expression("x + * y");
    FAIL();
  } catch (const ParseError& err) {
    EXPECT_EQ(err.line(), 1);
    EXPECT_EQ(err.column(), 5);
  }
  EXPECT_THROW(parse_expression("sin(x", {"x"}), ParseError);
  EXPECT_THROW(parse_expression("q + 1", {"x"}), ParseError);
  EXPECT_THROW(parse_expression("x^y"), ParseError);
}

TEST(Structure, ParsesEuclideanAndHeisenberg) {
  auto plane = parse_structure("dim 2\nvars x y\nfield X1 : 1, 0\nfield X2 : 0, 1\n");
  EXPECT_EQ(plane.dim(), 2u);
  EXPECT_EQ(plane.rank(), 2u);
  EXPECT_TRUE(plane.is_riemannian());

  auto heis = parse_structure("dim 3\nvars x y z\nfield X1 : 1, 0, -y/2\nfield X2 : 0, 1, x/2\n");
  EXPECT_EQ(heis.rank(), 2u);
  EXPECT_EQ(heis.dim(), 3u);
  VectorField b = lie_bracket(heis.frame[0], heis.frame[1]);
  for (std::size_t j = 0; j < 3; ++j) ASSERT_TRUE(b[j].is_constant()) << to_string(b[j]);
  EXPECT_DOUBLE_EQ(b[0].value(), 0.0);
  EXPECT_DOUBLE_EQ(b[1].value(), 0.0);
  EXPECT_DOUBLE_EQ(b[2].value(), 1.0);
}

TEST(Structure, ParseErrors) {
  try {
    parse_structure("dim 2\nvars x y\nfield X1 : 1, 0, 0\n");
    FAIL();
  } catch (const ParseError& err) {
    EXPECT_EQ(err.line(), 3);
    EXPECT_NE(std::string(err.what()).find("component count 3 != dim 2"), std::string::npos);
  }
  EXPECT_THROW(parse_structure("dim 2\nvars x y\nfield X1 : 1, w\n"), ParseError);
  EXPECT_THROW(parse_structure("dim 1\nvars x\nfield A : 1\nfield B : 2\n"), ParseError);
  EXPECT_THROW(parse_structure("dim 2\nvars x y\nfield A : 1, 0\nfield A : 0, 1\n"), ParseError);
  EXPECT_THROW(parse_structure("dim 2\nvars x x\nfield A : 1, 0\n"), ParseError);
  EXPECT_THROW(parse_structure("dim 2\nvars x y\n"), ParseError);
  EXPECT_THROW(parse_structure("vars x y\n"), ParseError);
}

TEST(Structure, CommentsAndBlankLines) {
  auto s = parse_structure("# plane\n\ndim 2   # two\nvars x y\n\nfield X1 : 1, 0 # first\nfield X2 : 0, 1\n");
  EXPECT_EQ(s.rank(), 2u);
}

TEST(Structure, BuiltinsRoundTripThroughText) {
  for (const auto& name : builtin_names()) {
    auto b = find_builtin(name);
    ASSERT_TRUE(b.has_value()) << name;
    SRStructure again = parse_structure(to_text(b->structure));
    ASSERT_EQ(again.rank(), b->structure.rank());
    for (std::size_t a = 0; a < again.rank(); ++a)
      for (std::size_t j = 0; j < again.dim(); ++j)
        EXPECT_TRUE(structurally_equal(again.frame[a][j], b->structure.frame[a][j])) << name;
    EXPECT_TRUE(frame_independent_at(b->structure, b->x0)) << name;
  }
}

TEST(LieBracket, CoordinateFieldsCommute) {
  Chart c({"x", "y"});
  VectorField b = lie_bracket(VectorField::coordinate(c, 0), VectorField::coordinate(c, 1));
  EXPECT_TRUE(b[0].is_zero());
  EXPECT_TRUE(b[1].is_zero());
}

TEST(LieBracket, ChartMismatchThrows) {
  EXPECT_THROW(lie_bracket(VectorField::coordinate(Chart({"x"}), 0), VectorField::coordinate(Chart({"y"}), 0)),
               std::invalid_argument);
}

VectorField random_polynomial_field(std::mt19937& rng, const Chart& c) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::vector<Expression> comps;
  for (std::size_t j = 0; j < c.dim(); ++j) {
    Expression e = coef(rng);
    for (int t = 0; t < 4; ++t) {
      Expression mono = coef(rng);
      int deg = std::uniform_int_distribution<int>(1, 3)(rng);
      for (int d = 0; d < deg; ++d) mono = mono * var(c[std::uniform_int_distribution<std::size_t>(0, c.dim() - 1)(rng)]);
      e = e + mono;
    }
    comps.push_back(e);
  }
  return VectorField(c, comps);
}

TEST(LieBracket, AntisymmetryAndJacobiIdentity) {
  std::mt19937 rng(3);
  Chart c({"x", "y", "z"});
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    VectorField a = random_polynomial_field(rng, c), b = random_polynomial_field(rng, c),
                d = random_polynomial_field(rng, c);
    VectorField anti = lie_bracket(a, b) + lie_bracket(b, a);
    VectorField jac = lie_bracket(a, lie_bracket(b, d)) + lie_bracket(b, lie_bracket(d, a)) +
                      lie_bracket(d, lie_bracket(a, b));
    for (int k = 0; k < 10; ++k) {
      std::vector<double> p{coord(rng), coord(rng), coord(rng)};
      EXPECT_LT(anti.evaluate(p).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT(jac.evaluate(p).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(LieBracket, HeisenbergAntisymmetryAtRandomPoints) {
  auto heis = find_builtin("heisenberg")->structure;
  VectorField s = lie_bracket(heis.frame[0], heis.frame[1]) + lie_bracket(heis.frame[1], heis.frame[0]);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> p{coord(rng), coord(rng), coord(rng)};
    EXPECT_EQ(s.evaluate(p).cwiseAbs().maxCoeff(), 0.0);
  }
}

}  // namespace
}  // namespace srcurv
