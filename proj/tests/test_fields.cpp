#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "jetvar/errors.hpp"
#include "jetvar/fields.hpp"
#include "test_util.hpp"

using namespace jetvar;
using jetvar::testing::jet_atoms;
using jetvar::testing::random_polynomial;
using jetvar::testing::scalar_problem;

namespace {

std::map<std::tuple<int, int, int>, Rational> su2() {
  std::map<std::tuple<int, int, int>, Rational> c;
  for (int a = 0; a < 3; ++a) {
    c[{a, (a + 1) % 3, (a + 2) % 3}] = Rational(1);
    c[{a, (a + 2) % 3, (a + 1) % 3}] = Rational(-1);
  }
  return c;
}

// n = 2 with a (1,1) density of weight 1/2, a symmetric (2,0) tensor and an su(2) connection.
JetProblem mixed_problem() {
  JetProblem p(2, 2);
  p.set_algebra({"T1", "T2", "T3"}, su2());
  FieldDecl t;
  t.label = "t";
  t.descriptor = GeometricDescriptor::tensor(1, 1, Rational(1, 2));
  p.add_field(t);
  FieldDecl h;
  h.label = "h";
  h.descriptor = GeometricDescriptor::tensor(2, 0, Rational(0), IndexSymmetry::Symmetric);
  p.add_field(h);
  FieldDecl w;
  w.label = "w";
  w.descriptor = GeometricDescriptor::connection();
  p.add_field(w);
  return p;
}

Expression E(Atom a) { return Expression(a); }

GaugeGenerator random_generator(std::mt19937_64& rng, const JetProblem& p) {
  std::vector<Atom> base;
  for (int mu = 0; mu < p.n(); ++mu) base.push_back(p.base(mu));
  std::vector<Expression> xi, xiA;
  for (int mu = 0; mu < p.n(); ++mu) xi.push_back(random_polynomial(rng, base, 3, 2));
  for (int a = 0; a < p.algebra_dim(); ++a) xiA.push_back(random_polynomial(rng, base, 3, 2));
  return GaugeGenerator::explicit_field(xi, xiA);
}

}  // namespace

TEST(Prolong, Examples) {
  JetProblem p = scalar_problem(1, 3);
  Expression x = E(p.base(0)), y = E(p.jet(0, p.zero())), y1 = E(p.jet(0, MultiIndex{1}));

  ProjectableVectorField scaling{{x}, {y}};
  auto t = prolong(p, scaling, 2);
  EXPECT_TRUE(t.at(JetKey{0, MultiIndex{1}}).is_zero());
  // y_2 scales with weight -1
  EXPECT_EQ(t.at(JetKey{0, MultiIndex{2}}), -E(p.jet(0, MultiIndex{2})));

  ProjectableVectorField translation{{Expression(1)}, {Expression()}};
  for (const auto& [k, v] : prolong(p, translation, 3)) EXPECT_TRUE(v.is_zero());

  ProjectableVectorField shear{{y}, {Expression()}};
  EXPECT_EQ(prolong(p, shear, 1).at(JetKey{0, MultiIndex{1}}), -y1 * y1);
  EXPECT_EQ(prolong(p, shear, 1, ProlongMethod::Closed).at(JetKey{0, MultiIndex{1}}), -y1 * y1);
  EXPECT_THROW(shear.validate(p), DomainError);

  p.set_cap(3);
  EXPECT_THROW(prolong(p, translation, 4), OrderOverflow);
}

TEST(Prolong, ClosedMatchesRecursive) {
  std::mt19937_64 rng(21);
  for (int n = 1; n <= 2; ++n) {
    for (int m = 1; m <= 2; ++m) {
      JetProblem p = scalar_problem(n, 4, m);
      std::vector<Atom> base, total = jet_atoms(p, 0);
      for (int mu = 0; mu < n; ++mu) base.push_back(p.base(mu));
      for (int trial = 0; trial < 5; ++trial) {
        ProjectableVectorField v;
        for (int mu = 0; mu < n; ++mu) v.xi.push_back(random_polynomial(rng, base, 3, 3));
        for (int i = 0; i < m; ++i) v.Xi.push_back(random_polynomial(rng, total, 4, 3));
        auto a = prolong(p, v, 3, ProlongMethod::Recursive);
        auto b = prolong(p, v, 3, ProlongMethod::Closed);
        ASSERT_EQ(a.size(), b.size());
        for (const auto& [k, val] : a) EXPECT_EQ(val, b.at(k));
      }
    }
  }
}

TEST(Lift, ScalarAndTrivial) {
  JetProblem p = scalar_problem(2, 2);
  auto g = GaugeGenerator::natural(p);
  auto pounds = generalized_lie_derivative(p, g, lift(p, g));
  Expression expected = E(p.xi(0, p.zero())) * E(p.jet(0, p.unit(0))) + E(p.xi(1, p.zero())) * E(p.jet(0, p.unit(1)));
  EXPECT_EQ(pounds[0], expected);

  auto z = GaugeGenerator::zero(p);
  EXPECT_TRUE(generalized_lie_derivative(p, z, lift(p, z))[0].is_zero());
  EXPECT_THROW(generalized_lie_derivative(p, g, LiftTable{}), MissingLift);
}

TEST(Lift, InverseMetricHandFormula) {
  for (int n = 2; n <= 3; ++n) {
    JetProblem p(n, 1);
    FieldDecl h;
    h.label = "h";
    h.descriptor = GeometricDescriptor::tensor(2, 0, Rational(0), IndexSymmetry::Symmetric);
    int f = p.add_field(h);
    auto g = GaugeGenerator::natural(p);
    auto pounds = generalized_lie_derivative(p, g, lift(p, g));
    auto dxi = [&](int mu, int rho) { return E(p.xi(mu, p.unit(rho))); };
    for (int mu = 0; mu < n; ++mu) {
      for (int nu = mu; nu < n; ++nu) {
        ExpressionBuilder b;
        for (int rho = 0; rho < n; ++rho) {
          b.add(E(p.xi(rho, p.zero())) * p.field_jet(f, {mu, nu}, p.unit(rho)));
          b.add(p.field_jet(f, {rho, nu}, p.zero()) * dxi(mu, rho), Rational(-1));
          b.add(p.field_jet(f, {mu, rho}, p.zero()) * dxi(nu, rho), Rational(-1));
        }
        int comp = p.component(f, {mu, nu})->component;
        EXPECT_EQ(pounds[comp], b.build());
      }
    }
  }
}

TEST(Lift, CovariantDensityHandFormula) {
  JetProblem p(3, 1);
  FieldDecl d;
  d.label = "d";
  d.descriptor = GeometricDescriptor::tensor(0, 1, Rational(2));
  int f = p.add_field(d);
  auto g = GaugeGenerator::natural(p);
  auto pounds = generalized_lie_derivative(p, g, lift(p, g));
  for (int mu = 0; mu < 3; ++mu) {
    ExpressionBuilder b;
    for (int rho = 0; rho < 3; ++rho) {
      b.add(E(p.xi(rho, p.zero())) * p.field_jet(f, {mu}, p.unit(rho)));
      b.add(p.field_jet(f, {rho}, p.zero()) * E(p.xi(rho, p.unit(mu))));
      b.add(p.field_jet(f, {mu}, p.zero()) * E(p.xi(rho, p.unit(rho))), Rational(2));
    }
    EXPECT_EQ(pounds[mu], b.build());
  }
}

TEST(Lift, ConnectionHandFormula) {
  JetProblem p = mixed_problem();
  int w = *p.find_field("w");
  auto g = GaugeGenerator::symbolic_full(p);
  auto pounds = generalized_lie_derivative(p, g, lift(p, g));
  for (int a = 0; a < 3; ++a) {
    for (int mu = 0; mu < 2; ++mu) {
      ExpressionBuilder h;
      for (int nu = 0; nu < 2; ++nu) {
        h.add(E(p.xi(nu, p.zero())) * p.field_jet(w, {a, mu}, p.unit(nu)));
        h.add(p.field_jet(w, {a, nu}, p.zero()) * E(p.xi(nu, p.unit(mu))));
      }
      h.add(E(p.xiA(a, p.unit(mu))), Rational(-1));
      for (int bb = 0; bb < 3; ++bb)
        for (int cc = 0; cc < 3; ++cc)
          if (!p.c(a, bb, cc).is_zero()) h.add(p.field_jet(w, {bb, mu}, p.zero()) * E(p.xiA(cc, p.zero())), -p.c(a, bb, cc));
      int comp = p.component(w, {a, mu})->component;
      EXPECT_EQ(pounds[comp], h.build());
    }
  }
}

TEST(Lift, AbelianConnection) {
  JetProblem p(2, 1);
  p.set_algebra({"Q"}, {});
  FieldDecl w;
  w.label = "A";
  w.descriptor = GeometricDescriptor::connection();
  int f = p.add_field(w);
  auto g = GaugeGenerator::symbolic_full(p);
  auto pounds = generalized_lie_derivative(p, g, lift(p, g));
  for (int mu = 0; mu < 2; ++mu) {
    ExpressionBuilder h;
    for (int nu = 0; nu < 2; ++nu) {
      h.add(E(p.xi(nu, p.zero())) * p.field_jet(f, {0, mu}, p.unit(nu)));
      h.add(p.field_jet(f, {0, nu}, p.zero()) * E(p.xi(nu, p.unit(mu))));
    }
    h.add(E(p.xiA(0, p.unit(mu))), Rational(-1));
    EXPECT_EQ(pounds[mu], h.build());
  }
}

TEST(Lift, PureVerticalIsMinusCovariantDerivative) {
  JetProblem p = mixed_problem();
  int w = *p.find_field("w");
  auto g = GaugeGenerator::vertical(p);
  auto pounds = generalized_lie_derivative(p, g, lift(p, g));
  for (int a = 0; a < 3; ++a) {
    for (int mu = 0; mu < 2; ++mu) {
      // nabla_mu xi^A = D_mu xi^A + c^A_{BC} omega^B_mu xi^C
      ExpressionBuilder nabla;
      nabla.add(E(p.xiA(a, p.unit(mu))));
      for (int bb = 0; bb < 3; ++bb)
        for (int cc = 0; cc < 3; ++cc)
          nabla.add(p.field_jet(w, {bb, mu}, p.zero()) * E(p.xiA(cc, p.zero())), p.c(a, bb, cc));
      EXPECT_EQ(pounds[p.component(w, {a, mu})->component], -nabla.build());
    }
  }
  // tensor fields do not see the vertical part
  for (int i = 0; i < p.component(w, {0, 0})->component; ++i) EXPECT_TRUE(pounds[i].is_zero());
}

TEST(Lift, LinearInParameters) {
  JetProblem p = mixed_problem();
  for (const auto& g : {GaugeGenerator::symbolic_full(p), GaugeGenerator::natural(p), GaugeGenerator::vertical(p)}) {
    for (const auto& e : generalized_lie_derivative(p, g, lift(p, g))) EXPECT_TRUE(is_linear_in_params(e));
  }
  EXPECT_FALSE(is_linear_in_params(E(p.xi(0, p.zero())) * E(p.xi(1, p.zero()))));
  EXPECT_FALSE(is_linear_in_params(E(p.base(0))));
}

TEST(Lift, CommutesWithProlongation) {
  JetProblem p = mixed_problem();
  auto g = GaugeGenerator::symbolic_full(p);
  auto v = lifted_field(p, g);
  auto pounds = generalized_lie_derivative(p, g, v.Xi);
  auto table = prolong(p, v, 2);
  for (int i = 0; i < p.num_components(); ++i) {
    for (const auto& alpha : multi_indices_up_to(2, 1)) {
      // Xi_alpha = xi^s y_{alpha+s} - D_alpha pounds
      ExpressionBuilder b;
      for (int s = 0; s < 2; ++s) b.add(g.xi[s] * E(p.jet(i, alpha.plus(s))));
      b.add(prolonged_lie_derivative(p, pounds, i, alpha), Rational(-1));
      EXPECT_EQ(table.at(JetKey{i, alpha}), b.build());
    }
    for (int s = 0; s < 2; ++s)
      EXPECT_EQ(prolonged_lie_derivative(p, pounds, i, p.unit(s)), total_derivative(p, pounds[i], s));
  }
}

TEST(Lift, UnknownDescriptor) {
  JetProblem p = scalar_problem(2, 1);
  EXPECT_THROW(ConnectionValue::from_field(p, 0), UnknownDescriptor);
}

TEST(Split, Examples) {
  JetProblem p = mixed_problem();
  auto omega = ConnectionValue::from_field(p, *p.find_field("w"));

  auto vert = GaugeGenerator::vertical(p);
  auto s1 = split(p, vert, omega);
  for (int a = 0; a < 3; ++a) {
    EXPECT_TRUE(s1.horizontal.xiA[a].is_zero());
    EXPECT_EQ(s1.vertical[a], vert.xiA[a]);
  }
  for (const auto& e : s1.horizontal.xi) EXPECT_TRUE(e.is_zero());

  auto hor = GaugeGenerator::horizontal(p, omega.omega);
  auto s2 = split(p, hor, omega);
  for (const auto& e : s2.vertical) EXPECT_TRUE(e.is_zero());

  auto full = GaugeGenerator::symbolic_full(p);
  auto s3 = split(p, full, ConnectionValue::flat(p));
  for (int a = 0; a < 3; ++a) EXPECT_EQ(s3.vertical[a], full.xiA[a]);
  for (int mu = 0; mu < 2; ++mu) EXPECT_EQ(s3.horizontal.xi[mu], full.xi[mu]);

  EXPECT_TRUE(recomposes(p, vert, s1));
  EXPECT_TRUE(recomposes(p, hor, s2));
  EXPECT_TRUE(recomposes(p, full, s3));
  auto s4 = split(p, full, omega);
  EXPECT_TRUE(recomposes(p, full, s4));
  s4.vertical[0] = s4.vertical[0] + 1;
  EXPECT_FALSE(recomposes(p, full, s4));
}

TEST(Bracket, Examples) {
  JetProblem p = scalar_problem(1, 1);
  auto a = GaugeGenerator::explicit_field({E(p.base(0))}, {});
  auto b = GaugeGenerator::explicit_field({Expression(1)}, {});
  auto r = bracket(p, a, b);
  EXPECT_EQ(r.xi[0], Expression(-1));
  EXPECT_TRUE(bracket(p, a, a).xi[0].is_zero());
  EXPECT_THROW(bracket(p, GaugeGenerator::natural(p), a), ModeError);

  JetProblem q(2, 1);
  q.set_algebra({"Q"}, {});
  auto c1 = GaugeGenerator::explicit_field({E(q.base(1)), Expression()}, {Expression(3)});
  auto c2 = GaugeGenerator::explicit_field({Expression(), E(q.base(0))}, {Expression(-2)});
  EXPECT_TRUE(bracket(q, c1, c2).xiA[0].is_zero());
}

TEST(Bracket, Functoriality) {
  std::mt19937_64 rng(31);
  JetProblem p = mixed_problem();
  auto atoms = jet_atoms(p, 0);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    auto g1 = random_generator(rng, p), g2 = random_generator(rng, p);
    auto lhs = lifted_field(p, bracket(p, g1, g2));
    auto rhs = vector_field_bracket(p, lifted_field(p, g1), lifted_field(p, g2));
    for (int k = 0; k < 5; ++k) {
      NumericPoint pt;
      for (Atom a : atoms) pt[a.id()] = u(rng);
      for (int mu = 0; mu < p.n(); ++mu) {
        double d = evaluate(lhs.xi[mu] - rhs.xi[mu], pt);
        EXPECT_LE(std::abs(d), 1e-8 * (1 + max_term_magnitude(lhs.xi[mu], pt)));
      }
      for (int i = 0; i < p.num_components(); ++i) {
        double scale = 1 + max_term_magnitude(lhs.Xi[i], pt) + max_term_magnitude(rhs.Xi[i], pt);
        EXPECT_LE(std::abs(evaluate(lhs.Xi[i], pt) - evaluate(rhs.Xi[i], pt)), 1e-8 * scale) << "component " << i;
      }
    }
    for (int i = 0; i < p.num_components(); ++i) EXPECT_EQ(lhs.Xi[i], rhs.Xi[i]);
  }
}
