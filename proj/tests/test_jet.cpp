#include <gtest/gtest.h>

#include <random>

#include "jetvar/errors.hpp"
#include "jetvar/jet.hpp"
#include "jetvar/multi_index.hpp"
#include "test_util.hpp"

using namespace jetvar;
using jetvar::testing::jet_atoms;
using jetvar::testing::random_polynomial;
using jetvar::testing::scalar_problem;

TEST(MultiIndex, Add) {
  EXPECT_EQ(mi_add(MultiIndex{2, 1}, MultiIndex{0, 1}), (MultiIndex{2, 2}));
  EXPECT_EQ(mi_add(MultiIndex{3, 0}, MultiIndex(2)), (MultiIndex{3, 0}));
  EXPECT_EQ(mi_add(MultiIndex{1, 0}, MultiIndex{0, 1}), (MultiIndex{1, 1}));
  EXPECT_THROW(mi_add(MultiIndex{1, 0}, MultiIndex{1}), DimensionMismatch);
}

TEST(MultiIndex, Multinomial) {
  EXPECT_EQ(mi_multinomial(MultiIndex{2, 1}, MultiIndex{1, 0}, MultiIndex{1, 1}), Rational(2));
  EXPECT_EQ(mi_multinomial(MultiIndex{2, 1}, MultiIndex{2, 1}, MultiIndex(2)), Rational(1));
  EXPECT_EQ(mi_multinomial(MultiIndex{2, 0}, MultiIndex{1, 0}, MultiIndex{1, 0}), Rational(2));
  EXPECT_THROW(mi_multinomial(MultiIndex{2, 0}, MultiIndex{1, 0}, MultiIndex{0, 1}), NotAPartition);
}

TEST(MultiIndex, MultinomialTimesFactorials) {
  for (int dim = 1; dim <= 3; ++dim) {
    for (const auto& alpha : multi_indices_up_to(dim, 6)) {
      for (const auto& beta : sub_indices(alpha)) {
        MultiIndex gamma(dim);
        for (int k = 0; k < dim; ++k) gamma.set(k, alpha[k] - beta[k]);
        Rational m = mi_multinomial(alpha, beta, gamma);
        EXPECT_EQ(m * beta.factorial() * gamma.factorial(), alpha.factorial());
      }
    }
  }
}

TEST(TotalDerivative, Examples) {
  JetProblem p = scalar_problem(2, 3);
  Expression y(p.jet(0, p.zero())), x1(p.base(0));
  EXPECT_EQ(total_derivative(p, y, 0), Expression(p.jet(0, p.unit(0))));
  EXPECT_EQ(total_derivative(p, x1 * y, 0), y + x1 * Expression(p.jet(0, p.unit(0))));
  Expression d12 = total_derivative(p, total_derivative(p, y, 1), 0);
  Expression d21 = total_derivative(p, total_derivative(p, y, 0), 1);
  EXPECT_TRUE((d12 - d21).is_zero());
  EXPECT_EQ(d12, Expression(p.jet(0, MultiIndex{1, 1})));
  EXPECT_TRUE(total_derivative(p, x1, 1).is_zero());
  EXPECT_THROW(p.xiA(0, p.zero()), UnknownAtom);
}

TEST(TotalDerivative, ParamJets) {
  JetProblem p = scalar_problem(2, 2);
  p.set_algebra({"T"}, {});
  Expression xi(p.xi(1, MultiIndex{1, 0}));
  EXPECT_EQ(total_derivative(p, xi, 1), Expression(p.xi(1, MultiIndex{1, 1})));
  EXPECT_EQ(total_derivative(p, Expression(p.xiA(0, p.zero())), 0), Expression(p.xiA(0, p.unit(0))));
}

TEST(TotalDerivative, OrderCap) {
  JetProblem p = scalar_problem(1, 2);
  p.set_cap(3);
  Expression y3(p.jet(0, MultiIndex{3}));
  EXPECT_THROW(total_derivative(p, y3, 0), OrderOverflow);
}

TEST(TotalDerivative, Commute) {
  std::mt19937_64 rng(11);
  for (int n = 1; n <= 3; ++n) {
    JetProblem p = scalar_problem(n, 4, 2);
    auto atoms = jet_atoms(p, 2);
    for (int trial = 0; trial < 20; ++trial) {
      Expression e = random_polynomial(rng, atoms, 6, 3);
      for (int s = 0; s < n; ++s) {
        for (int m = 0; m < n; ++m) {
          Expression a = total_derivative(p, total_derivative(p, e, m), s);
          Expression b = total_derivative(p, total_derivative(p, e, s), m);
          EXPECT_TRUE((a - b).is_zero());
        }
      }
    }
  }
}

TEST(TotalDerivative, Leibniz) {
  std::mt19937_64 rng(12);
  JetProblem p = scalar_problem(2, 4);
  auto atoms = jet_atoms(p, 2);
  for (int trial = 0; trial < 30; ++trial) {
    Expression a = random_polynomial(rng, atoms, 4, 3), b = random_polynomial(rng, atoms, 4, 3);
    for (int s = 0; s < 2; ++s) {
      EXPECT_EQ(total_derivative(p, a * b, s), total_derivative(p, a, s) * b + a * total_derivative(p, b, s));
    }
  }
}

TEST(HorizontalDensityTest, DHExamples) {
  JetProblem p = scalar_problem(2, 2);
  Expression y(p.jet(0, p.zero()));
  auto top = dH(p, HorizontalDensity::current({y, Expression()}));
  EXPECT_EQ(top.degree(), 2);
  EXPECT_EQ(top.scalar(), Expression(p.jet(0, p.unit(0))));

  auto eta = HorizontalDensity::superpotential_upper(2, {{{0, 1}, Expression(p.base(0))}});
  auto eps = dH(p, eta);
  EXPECT_EQ(eps.eps(0), Expression());
  EXPECT_EQ(eps.eps(1), Expression(-1));

  EXPECT_THROW(dH(p, HorizontalDensity::top(2, y)), DegreeError);
  EXPECT_THROW(HorizontalDensity::superpotential(2, {Expression(), y, y, Expression()}), DomainError);
}

TEST(HorizontalDensityTest, DHSquaredVanishes) {
  std::mt19937_64 rng(13);
  for (int n = 2; n <= 4; ++n) {
    JetProblem p = scalar_problem(n, 4, 2);
    auto atoms = jet_atoms(p, 1);
    for (int trial = 0; trial < 10; ++trial) {
      std::map<std::pair<int, int>, Expression> upper;
      for (int s = 0; s < n; ++s)
        for (int m = s + 1; m < n; ++m) upper[{s, m}] = random_polynomial(rng, atoms, 4, 3);
      auto eta = HorizontalDensity::superpotential_upper(n, upper);
      auto l = dH(p, dH(p, eta));
      EXPECT_TRUE(l.scalar().is_zero());
    }
  }
}

TEST(DV, Examples) {
  JetProblem p1 = scalar_problem(1, 2);
  Expression y1(p1.jet(0, MultiIndex{1}));
  auto t = dV_fiber_partials(Rational(1, 2) * y1 * y1);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.at(JetKey{0, MultiIndex{1}}), y1);
  EXPECT_TRUE(dV_fiber_partials(Expression(p1.base(0))).empty());

  JetProblem p2 = scalar_problem(2, 2);
  Expression yt(p2.jet(0, p2.unit(0))), yx(p2.jet(0, p2.unit(1)));
  auto w = dV_fiber_partials(Rational(1, 2) * (yt * yt - yx * yx));
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w.at(JetKey{0, p2.unit(0)}), yt);
  EXPECT_EQ(w.at(JetKey{0, p2.unit(1)}), -yx);
}

TEST(Problem, AlgebraValidation) {
  JetProblem p(3, 1);
  // su(2): c^A_{BC} = epsilon_{ABC}
  std::map<std::tuple<int, int, int>, Rational> c;
  for (int a = 0; a < 3; ++a) {
    c[{a, (a + 1) % 3, (a + 2) % 3}] = Rational(1);
    c[{a, (a + 2) % 3, (a + 1) % 3}] = Rational(-1);
  }
  p.set_algebra({"T1", "T2", "T3"}, c);
  EXPECT_NO_THROW(p.validate_algebra());
  EXPECT_FALSE(p.is_abelian());

  JetProblem q(2, 1);
  q.set_algebra({"A", "B"}, {{{0, 0, 1}, Rational(1)}});
  EXPECT_THROW(q.validate_algebra(), SemanticError);
}

TEST(Problem, Components) {
  JetProblem p(3, 1);
  FieldDecl f;
  f.label = "F";
  f.descriptor = GeometricDescriptor::tensor(2, 0, Rational(0), IndexSymmetry::Antisymmetric);
  int fi = p.add_field(f);
  EXPECT_EQ(p.num_components(), 3);
  EXPECT_EQ(p.field_jet(fi, {2, 0}, p.zero()), -p.field_jet(fi, {0, 2}, p.zero()));
  EXPECT_TRUE(p.field_jet(fi, {1, 1}, p.zero()).is_zero());
  FieldDecl g;
  g.label = "g";
  g.descriptor = GeometricDescriptor::tensor(0, 2, Rational(0), IndexSymmetry::Symmetric);
  g.metric = true;
  g.signature = {1, -1, -1};
  int gi = p.add_field(g);
  EXPECT_EQ(p.num_components(), 9);
  EXPECT_EQ(p.field_jet(gi, {2, 1}, p.zero()), p.field_jet(gi, {1, 2}, p.zero()));
  ASSERT_NE(p.metric(), nullptr);
  EXPECT_EQ(p.metric()->sign(), 1);
  EXPECT_THROW(p.add_field(f), SemanticError);
}
