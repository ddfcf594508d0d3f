#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "jetvar/errors.hpp"
#include "jetvar/expression.hpp"
#include "jetvar/multi_index.hpp"
#include "jetvar/opaque.hpp"
#include "test_util.hpp"

using namespace jetvar;

namespace {

Atom X() { return Atom::base(0); }
Atom Y() { return Atom::field(0, MultiIndex{0}); }
Atom Y1() { return Atom::field(0, MultiIndex{1}); }

ExprTree leaf(Atom a) { return ExprTree::leaf(a); }

}  // namespace

TEST(Rational, LowestTermsAndBigPromotion) {
  Rational r(6, -4);
  EXPECT_EQ(r.to_string(), "-3/2");
  Rational big = factorial(25);
  EXPECT_EQ(big.to_string(), "15511210043330985984000000");
  EXPECT_EQ(big / factorial(24), Rational(25));
  EXPECT_EQ((big / factorial(24)).hash(), Rational(25).hash());
  EXPECT_EQ(Rational::parse("10/4"), Rational(5, 2));
  EXPECT_EQ(Rational(1, 3).mod(7), 5u);
}

TEST(Normalize, Commutativity) {
  auto t = ExprTree::sum({ExprTree::product({leaf(X()), leaf(Y())}), ExprTree::product({leaf(Y()), leaf(X())})});
  EXPECT_EQ(normalize(t), Rational(2) * Expression(X()) * Expression(Y()));
}

TEST(Normalize, AdditiveIdentity) {
  Expression e = Expression(X()) * Expression(Y1()) + 3;
  EXPECT_EQ(e + Expression(0), e);
  auto t = ExprTree::sum({tree_view(e), ExprTree::constant(0)});
  EXPECT_EQ(normalize(t), e);
}

TEST(Normalize, Cancellation) {
  auto sq = ExprTree::power(leaf(Y1()), 2);
  auto t = ExprTree::sum({ExprTree::product({sq, ExprTree::constant(3)}),
                          ExprTree::product({ExprTree::constant(-3), sq})});
  EXPECT_TRUE(normalize(t).is_zero());
}

TEST(Normalize, TreeViewShape) {
  Expression e = Expression(X()) * Expression(Y()) * 2 + pow(Expression(Y1()), 3);
  ExprTree t = tree_view(e);
  ASSERT_EQ(t.kind, ExprTree::Kind::Sum);
  for (const auto& c : t.children) {
    if (c.kind == ExprTree::Kind::Sum || c.kind == ExprTree::Kind::Product) EXPECT_GE(c.children.size(), 2u);
  }
  EXPECT_EQ(tree_view(Expression(X())).kind, ExprTree::Kind::Atom);
  EXPECT_EQ(tree_view(Expression()).kind, ExprTree::Kind::Const);
}

TEST(Normalize, IdempotentAndValuePreserving) {
  std::mt19937_64 rng(20240611);
  std::vector<Atom> atoms = {X(), Y(), Y1(), Atom::base(1), Atom::param(0, MultiIndex{1})};
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 300; ++trial) {
    ExprTree t = jetvar::testing::random_tree(rng, atoms, 4);
    Expression e = normalize(t);
    EXPECT_EQ(normalize(tree_view(e)), e);
    EXPECT_EQ(normalize(e), e);
    NumericPoint p;
    for (Atom a : atoms) p[a.id()] = u(rng);
    double raw = jetvar::testing::tree_value(t, p);
    double canon = evaluate(e, p);
    EXPECT_LE(std::abs(raw - canon), 1e-9 * (1 + std::abs(raw)));
  }
}

TEST(Normalize, UniqueForEqualPolynomials) {
  Expression x(X()), y(Y());
  Expression a = pow(x + y, 3);
  Expression b = x * x * x + 3 * x * x * y + 3 * x * y * y + y * y * y;
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.hash(), b.hash());
}

TEST(Laurent, NegativePowersOfMonomials) {
  Expression x(X());
  EXPECT_EQ(pow(x, -2) * x * x, Expression(1));
  EXPECT_EQ((Rational(3) * x) / (Rational(3, 2) * x), Expression(2));
  EXPECT_THROW(pow(x + 1, -1), DomainError);
  EXPECT_THROW(x / (x + 1), DomainError);
}

TEST(Substitute, Examples) {
  Expression y1(Y1());
  EXPECT_EQ(substitute(y1 * y1, {{Y1(), Expression(2)}}), Expression(4));
  Expression xy = Expression(X()) * Expression(Y());
  EXPECT_EQ(substitute(xy, {}), xy);
  EXPECT_EQ(substitute(Expression(Y()) * y1, {{Y(), Expression(X())}}), Expression(X()) * y1);
}

TEST(Substitute, SimultaneousNotRecursive) {
  Expression x(X()), y(Y());
  Expression e = x + 2 * y;
  EXPECT_EQ(substitute(e, {{X(), y}, {Y(), x}}), y + 2 * x);
}

TEST(Substitute, UnknownKeyThrows) {
  EXPECT_THROW(substitute(Expression(X()), {{Atom(), Expression(1)}}), UnknownAtom);
}

TEST(Substitute, ReachesCallArguments) {
  Atom u = Atom::field(0, MultiIndex{0});
  MetricFamily m(1, {Expression(u)}, 1);
  Expression s = substitute(m.sqrtg(), {{u, Expression(4)}});
  NumericPoint empty;
  EXPECT_DOUBLE_EQ(evaluate(s, empty), 2.0);
}

TEST(Partial, Examples) {
  Expression y1(Y1());
  EXPECT_EQ(partial(Rational(1, 2) * y1 * y1, Y1()), y1);
  EXPECT_TRUE(partial(Expression(X()) * Expression(Y()), Y1()).is_zero());
}

TEST(Partial, SqrtAbsDetFiniteDifference) {
  Atom u = Atom::field(7, MultiIndex{0});
  MetricFamily m(1, {Expression(u)}, 1);
  Expression d = partial(m.sqrtg(), u);
  NumericPoint p{{u.id(), 4.0}};
  double sym = evaluate(d, p);
  const double h = 1e-5;
  NumericPoint pp{{u.id(), 4.0 + h}}, pm{{u.id(), 4.0 - h}};
  double fd = (evaluate(m.sqrtg(), pp) - evaluate(m.sqrtg(), pm)) / (2 * h);
  EXPECT_NEAR(sym, 0.25, 1e-12);
  EXPECT_NEAR(sym, fd, 1e-9);
}

TEST(Partial, MissingRuleThrows) {
  OpaqueFunction f;
  f.name = "noderiv";
  f.arity = 1;
  f.evaluate = [](std::span<const double> a) { return std::sin(a[0]); };
  FunctionId id = register_function(f);
  Expression e(Atom::call(id, {Expression(Y())}));
  EXPECT_THROW(partial(e, Y()), MissingPartial);
  EXPECT_TRUE(partial(e, X()).is_zero());
}

TEST(Partial, LinearityAndLeibniz) {
  std::mt19937_64 rng(7);
  std::vector<Atom> atoms = {X(), Y(), Y1(), Atom::field(1, MultiIndex{0}), Atom::param(3, MultiIndex{2})};
  for (int trial = 0; trial < 200; ++trial) {
    Expression e1 = jetvar::testing::random_polynomial(rng, atoms, 5, 3);
    Expression e2 = jetvar::testing::random_polynomial(rng, atoms, 5, 3);
    Rational a(static_cast<int>(rng() % 7) - 3, 2);
    for (Atom v : atoms) {
      EXPECT_EQ(partial(a * e1 + e2, v), a * partial(e1, v) + partial(e2, v));
      EXPECT_EQ(partial(e1 * e2, v), partial(e1, v) * e2 + e1 * partial(e2, v));
    }
  }
}

TEST(Evaluate, Examples) {
  Expression x(X()), y(Y()), y1(Y1());
  NumericPoint p{{X().id(), 3.0}, {Y().id(), 5.0}};
  EXPECT_DOUBLE_EQ(evaluate(2 * x * y, p), 30.0);
  EXPECT_DOUBLE_EQ(evaluate(y1 * y1 - y1 * y1, NumericPoint{}), 0.0);
  EXPECT_THROW(evaluate(y1, p), UnboundAtom);
}

TEST(Evaluate, SqrtgOfDiagonalMetric) {
  Atom g00 = Atom::field(10, MultiIndex{0, 0}), g01 = Atom::field(11, MultiIndex{0, 0}),
       g11 = Atom::field(12, MultiIndex{0, 0});
  MetricFamily m(2, {Expression(g00), Expression(g01), Expression(g11)}, -1);
  NumericPoint p{{g00.id(), 1.0}, {g01.id(), 0.0}, {g11.id(), -1.0}};
  EXPECT_DOUBLE_EQ(evaluate(m.sqrtg(), p), 1.0);
  EXPECT_DOUBLE_EQ(evaluate(m.ginv(1, 1), p), -1.0);
  NumericPoint singular{{g00.id(), 1.0}, {g01.id(), 1.0}, {g11.id(), 1.0}};
  EXPECT_THROW(evaluate(m.sqrtg(), singular), DomainError);
}

namespace {

// Central difference of every metric-family function against its rule.
void check_metric_partials(int n, int sign, std::uint64_t seed) {
  std::vector<Expression> upper;
  std::vector<Atom> comps;
  for (int k = 0; k < n * (n + 1) / 2; ++k) {
    comps.push_back(Atom::field(100 + k, MultiIndex(n)));
    upper.emplace_back(comps.back());
  }
  MetricFamily m(n, upper, sign);
  std::vector<Expression> fns = {m.sqrtg()};
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) fns.push_back(m.ginv(a, b));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  int points = 0;
  while (points < 100) {
    NumericPoint p;
    std::vector<double> mat(n * n);
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        double base = a == b ? ((a == 0 || sign > 0) ? 1.0 : -1.0) : 0.0;
        if (sign < 0 && a == b) base = a == 0 ? 1.0 : -1.0;
        double v = base + u(rng);
        p[comps[MetricFamily::slot(n, a, b)].id()] = v;
        mat[a * n + b] = mat[b * n + a] = v;
      }
    }
    double det = determinant(mat, n);
    if (std::abs(det) < 0.1 || (det > 0) != (sign > 0)) continue;
    ++points;
    for (const auto& f : fns) {
      for (Atom c : comps) {
        double sym = evaluate(partial(f, c), p);
        const double h = 1e-5;
        NumericPoint pp = p, pm = p;
        pp[c.id()] += h;
        pm[c.id()] -= h;
        double fd = (evaluate(f, pp) - evaluate(f, pm)) / (2 * h);
        EXPECT_LE(std::abs(sym - fd), 1e-6 * (1 + std::abs(sym))) << f.debug_string() << " wrt " << c.debug_string();
      }
    }
  }
}

}  // namespace

TEST(Opaque, MetricPartialsMatchFiniteDifferences) {
  check_metric_partials(1, 1, 1);
  check_metric_partials(2, -1, 2);
  check_metric_partials(3, 1, 3);
  check_metric_partials(4, -1, 4);
}

TEST(Opaque, ExpansionModeAgreesNumerically) {
  int n = 3;
  std::vector<Expression> upper;
  std::vector<Atom> comps;
  for (int k = 0; k < 6; ++k) {
    comps.push_back(Atom::field(200 + k, MultiIndex(n)));
    upper.emplace_back(comps.back());
  }
  MetricFamily m(n, upper, 1);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int t = 0; t < 20; ++t) {
    NumericPoint p;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) p[comps[MetricFamily::slot(n, a, b)].id()] = (a == b ? 1.0 : 0.0) + u(rng);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        Expression e = m.ginv(a, b);
        EXPECT_NEAR(evaluate(e, p), evaluate(expand_inverse_metric(e), p), 1e-12);
      }
    }
  }
}

TEST(Opaque, ModularSqrtAndInverse) {
  const std::uint64_t p = (std::uint64_t{1} << 61) - 1;
  auto r = sqrt_mod(49, p);
  ASSERT_TRUE(r);
  EXPECT_TRUE(*r == 7 || *r == p - 7);
  std::vector<std::uint64_t> mat = {2, 1, 1, 3};
  auto inv = inverse_mod(mat, 2, p);
  ASSERT_TRUE(inv);
  // (2 1; 1 3)^{-1} = (3 -1; -1 2) / 5
  EXPECT_EQ((*inv)[0], Rational(3, 5).mod(p));
  EXPECT_EQ((*inv)[1], Rational(-1, 5).mod(p));
  EXPECT_EQ(*determinant_mod(mat, 2, p), 5u);
}

TEST(Atom, ContentOrder) {
  EXPECT_LT(Atom::base(3), Atom::field(0, MultiIndex{0}));
  EXPECT_LT(Atom::field(5, MultiIndex{3}), Atom::param(0, MultiIndex{0}));
  EXPECT_LT(Atom::param(9, MultiIndex{4}), constant_atom("kappa"));
  EXPECT_LT(Atom::field(0, MultiIndex{0, 2}), Atom::field(0, MultiIndex{1, 1}));
  EXPECT_LT(Atom::field(0, MultiIndex{2, 0}), Atom::field(0, MultiIndex{0, 3}));
  EXPECT_EQ(constant_atom("kappa"), constant_atom("kappa"));
}
