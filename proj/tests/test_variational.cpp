#include <gtest/gtest.h>

#include <random>

#include "jetvar/errors.hpp"
#include "jetvar/variational.hpp"
#include "test_util.hpp"

using namespace jetvar;
using namespace jetvar::testing;

namespace {

Expression E(Atom a) { return Expression(a); }

// Abelian connection A_mu in flat space with diagonal signs s, L = -1/4 F_{mu nu} F^{mu nu}.
struct Maxwell {
  JetProblem p;
  int a = 0;
  std::vector<int> s;
  Expression l;

  explicit Maxwell(std::vector<int> signs) : p(static_cast<int>(signs.size()), 2), s(std::move(signs)) {
    p.set_algebra({"Q"}, {});
    FieldDecl f;
    f.label = "A";
    f.descriptor = GeometricDescriptor::connection();
    a = p.add_field(f);
    ExpressionBuilder b;
    for (int mu = 0; mu < p.n(); ++mu)
      for (int nu = 0; nu < p.n(); ++nu) {
        Expression fl = F(mu, nu);
        b.add(fl * fl, Rational(-s[mu] * s[nu], 4));
      }
    l = b.build();
  }
  Expression A(int mu, const MultiIndex& alpha) const { return p.field_jet(a, {0, mu}, alpha); }
  Expression F(int mu, int nu) const { return A(nu, p.unit(mu)) - A(mu, p.unit(nu)); }
  Expression Fup(int mu, int nu) const { return s[mu] * s[nu] * F(mu, nu); }
  int comp(int mu) const { return p.component(a, {0, mu})->component; }
  Expression chi(const MultiIndex& alpha) const { return E(p.xiA(0, alpha)); }
};

std::vector<Atom> order_atoms(const JetProblem& p, int order) {
  std::vector<Atom> out;
  for (int i = 0; i < p.num_components(); ++i)
    for (const auto& a : multi_indices_up_to(p.n(), order)) out.push_back(p.jet(i, a));
  return out;
}

}  // namespace

TEST(EulerLagrange, Examples) {
  JetProblem p = scalar_problem(1, 4);
  Expression y = E(p.jet(0, p.zero())), y1 = E(p.jet(0, MultiIndex{1}));
  for (auto m : {ELMethod::AlternatingSum, ELMethod::Momentum}) {
    EXPECT_EQ(euler_lagrange(p, Rational(1, 2) * y1 * y1, m).at(0), -E(p.jet(0, MultiIndex{2})));
    EXPECT_EQ(euler_lagrange(p, y, m).at(0), Expression(1));
  }
  JetProblem w = scalar_problem(2, 4);
  Expression yt = E(w.jet(0, MultiIndex{1, 0})), yx = E(w.jet(0, MultiIndex{0, 1}));
  Expression wave = Rational(1, 2) * (yt * yt - yx * yx);
  Expression expected = -E(w.jet(0, MultiIndex{2, 0})) + E(w.jet(0, MultiIndex{0, 2}));
  EXPECT_EQ(euler_lagrange(w, wave).at(0), expected);
  EXPECT_EQ(euler_lagrange(w, wave, ELMethod::Momentum).at(0), expected);
}

TEST(EulerLagrange, OrderOverflow) {
  JetProblem p = scalar_problem(1, 3);
  Expression y2 = E(p.jet(0, MultiIndex{2}));
  p.set_cap(3);
  EXPECT_THROW(euler_lagrange(p, y2 * y2), OrderOverflow);
}

TEST(EulerLagrange, MethodsAgreeOnRandomLagrangians) {
  std::mt19937_64 rng(11);
  JetProblem p = scalar_problem(2, 4, 2);
  auto atoms = jet_atoms(p, 2);
  for (int trial = 0; trial < 20; ++trial) {
    Expression l = random_polynomial(rng, atoms, 5, 3);
    auto a = euler_lagrange(p, l);
    auto b = euler_lagrange(p, l, ELMethod::Momentum);
    EXPECT_EQ(a, b) << trial;
    auto m = momentum(p, l);
    for (const auto& r : momentum_residuals(p, l, m)) EXPECT_TRUE(r.is_zero()) << trial;
  }
}

TEST(Momentum, SecondOrderMechanics) {
  JetProblem p = scalar_problem(1, 4);
  Expression y2 = E(p.jet(0, MultiIndex{2}));
  auto m = momentum(p, Rational(1, 2) * y2 * y2);
  EXPECT_EQ(m.order, 2);
  EXPECT_EQ(m.get(0, MultiIndex{1}, 0), y2);
  EXPECT_EQ(m.get(0, MultiIndex{0}, 0), -E(p.jet(0, MultiIndex{3})));
  EXPECT_EQ(m.euler.at(0), E(p.jet(0, MultiIndex{4})));
}

TEST(Momentum, WeightsSplitMixedDerivatives) {
  JetProblem p = scalar_problem(2, 4);
  Expression y11 = E(p.jet(0, MultiIndex{1, 1}));
  auto m = momentum(p, y11);
  EXPECT_EQ(m.get(0, MultiIndex{0, 1}, 0), Expression(Rational(1, 2)));
  EXPECT_EQ(m.get(0, MultiIndex{1, 0}, 1), Expression(Rational(1, 2)));
  EXPECT_TRUE(m.euler.at(0).is_zero());
}

TEST(Current, EnergyOfOscillator) {
  JetProblem p = scalar_problem(1, 2);
  Expression y = E(p.jet(0, p.zero())), y1 = E(p.jet(0, MultiIndex{1}));
  Expression l = Rational(1, 2) * (y1 * y1 - y * y);
  auto g = GaugeGenerator::explicit_field({Expression(1)}, {});
  auto eps = noether_current(p, l, g, lift(p, g));
  EXPECT_EQ(eps.eps(0), -Rational(1, 2) * (y1 * y1 + y * y));
  auto trivial = GaugeGenerator::explicit_field({Expression()}, {});
  EXPECT_TRUE(noether_current(p, l, trivial, lift(p, trivial)).eps(0).is_zero());
}

TEST(Current, WeaklyConservedOnShell) {
  JetProblem p = scalar_problem(1, 3);
  Expression y = E(p.jet(0, p.zero())), y1 = E(p.jet(0, MultiIndex{1}));
  Expression l = Rational(1, 2) * y1 * y1 - Rational(1, 4) * y * y * y * y;
  auto g = GaugeGenerator::explicit_field({Expression(1)}, {});
  auto eps = noether_current(p, l, g, lift(p, g));
  Expression div = total_derivative(p, eps.eps(0), 0);
  EXPECT_FALSE(div.is_zero());
  auto el = euler_lagrange(p, l);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto on = sample_on_shell_point(p, el, 2, seed, order_atoms(p, 2));
    ASSERT_TRUE(on.solved) << on.note;
    EXPECT_LT(std::abs(evaluate(div, on.point.values)), 1e-9);
  }
}

TEST(Current, MaxwellGauge) {
  Maxwell mx({1, -1, -1, -1});
  auto g = GaugeGenerator::vertical(mx.p);
  auto pounds = generalized_lie_derivative(mx.p, g, lift(mx.p, g));
  for (int nu = 0; nu < 4; ++nu) EXPECT_EQ(pounds[mx.comp(nu)], -mx.chi(mx.p.unit(nu)));
  auto el = euler_lagrange(mx.p, mx.l);
  for (int nu = 0; nu < 4; ++nu) {
    ExpressionBuilder b;
    for (int mu = 0; mu < 4; ++mu) b.add(total_derivative(mx.p, mx.Fup(mu, nu), mu));
    EXPECT_EQ(el.at(mx.comp(nu)), b.build());
  }
  auto eps = noether_current(mx.p, mx.l, g, lift(mx.p, g));
  for (int s = 0; s < 4; ++s) {
    ExpressionBuilder b;
    for (int mu = 0; mu < 4; ++mu) b.add_product(mx.Fup(mu, s), mx.chi(mx.p.unit(mu)));
    EXPECT_EQ(eps.eps(s), b.build());
  }
}

TEST(FirstVariation, IdentityOnRandomLagrangians) {
  std::mt19937_64 rng(2024);
  JetProblem p(2, 2);
  FieldDecl t;
  t.label = "t";
  t.descriptor = GeometricDescriptor::tensor(1, 1, Rational(1, 2));
  p.add_field(t);
  FieldDecl h;
  h.label = "h";
  h.descriptor = GeometricDescriptor::tensor(0, 2, Rational(0), IndexSymmetry::Symmetric);
  p.add_field(h);
  auto atoms = jet_atoms(p, 1);
  std::vector<Atom> base{p.base(0), p.base(1)};
  for (int trial = 0; trial < 20; ++trial) {
    Expression l = random_polynomial(rng, atoms, 4, 3);
    for (int k = 0; k < 5; ++k) {
      GaugeGenerator g = k == 0 ? GaugeGenerator::natural(p)
                                : GaugeGenerator::explicit_field(
                                      {random_polynomial(rng, base, 3, 2), random_polynomial(rng, base, 3, 2)}, {});
      auto lt = lift(p, g);
      auto fv = variational_lie_derivative(p, l, g, lt);
      Expression rhs = fv.el_part + dH(p, fv.boundary).scalar();
      EXPECT_EQ(direct_lie_derivative(p, l, g, lt), rhs) << trial << " " << k;
    }
  }
}

TEST(Ibp, TopDegreeExamples) {
  JetProblem p = scalar_problem(1, 3);
  Expression y = E(p.jet(0, p.zero()));
  Expression xi = E(p.xi(0, p.zero())), xi1 = E(p.xi(0, MultiIndex{1}));
  auto r = ibp_decompose(p, HorizontalDensity::top(1, y * xi1));
  EXPECT_EQ(r.reduced.scalar(), -E(p.jet(0, MultiIndex{1})) * xi);
  EXPECT_EQ(r.boundary.eps(0), y * xi);
  EXPECT_EQ(r.verdict, ZeroVerdict::CanonicalZero);

  auto second = ibp_decompose(p, HorizontalDensity::top(1, y * E(p.xi(0, MultiIndex{2}))));
  EXPECT_EQ(second.reduced.scalar(), E(p.jet(0, MultiIndex{2})) * xi);

  EXPECT_THROW(ibp_decompose(p, HorizontalDensity::top(1, xi * xi1)), NotLinear);
}

TEST(Ibp, ModesOnMixedDerivative) {
  JetProblem p = scalar_problem(2, 3);
  Expression y = E(p.jet(0, p.zero()));
  Expression t = y * E(p.xi(0, MultiIndex{1, 1}));
  IbpOptions lex;
  lex.mode = IbpMode::Lex;
  auto a = ibp_decompose(p, HorizontalDensity::top(2, t));
  auto b = ibp_decompose(p, HorizontalDensity::top(2, t), lex);
  Expression xi = E(p.xi(0, p.zero()));
  Expression y10 = E(p.jet(0, MultiIndex{1, 0})), y01 = E(p.jet(0, MultiIndex{0, 1}));
  EXPECT_EQ(a.boundary.eps(0), Rational(1, 2) * (y * E(p.xi(0, MultiIndex{0, 1})) - y01 * xi));
  EXPECT_EQ(a.boundary.eps(1), Rational(1, 2) * (y * E(p.xi(0, MultiIndex{1, 0})) - y10 * xi));
  EXPECT_EQ(b.boundary.eps(0), y * E(p.xi(0, MultiIndex{0, 1})));
  EXPECT_EQ(b.boundary.eps(1), -y10 * xi);
  EXPECT_EQ(a.reduced, b.reduced);
  EXPECT_EQ(a.reduced.scalar(), E(p.jet(0, MultiIndex{1, 1})) * E(p.xi(0, p.zero())));
}

TEST(Ibp, CurrentModesDifferByClosedForm) {
  std::mt19937_64 rng(5);
  JetProblem p = scalar_problem(3, 4);
  auto atoms = jet_atoms(p, 1);
  for (int trial = 0; trial < 5; ++trial) {
    std::map<std::pair<int, int>, Expression> eta;
    for (int s = 0; s < 3; ++s)
      for (int m = s + 1; m < 3; ++m) {
        ExpressionBuilder b;
        for (int q = 0; q < 2; ++q)
          for (const auto& al : multi_indices_up_to(3, 1))
            b.add_product(random_polynomial(rng, atoms, 2, 2), E(p.xi(q, al)));
        eta[{s, m}] = b.build();
      }
    auto x = dH(p, HorizontalDensity::superpotential_upper(3, eta));
    IbpOptions lex;
    lex.mode = IbpMode::Lex;
    auto a = ibp_decompose(p, x);
    auto b = ibp_decompose(p, x, lex);
    for (int s = 0; s < 3; ++s) {
      EXPECT_TRUE(a.reduced.eps(s).is_zero());
      EXPECT_TRUE(b.reduced.eps(s).is_zero());
    }
    EXPECT_EQ(dH(p, a.boundary), x);
    EXPECT_EQ(dH(p, b.boundary), x);
  }
}

TEST(Ibp, Errors) {
  JetProblem p = scalar_problem(2, 3);
  Expression xi10 = E(p.xi(0, MultiIndex{1, 0}));
  EXPECT_THROW(ibp_decompose(p, HorizontalDensity::current({xi10, Expression()})), DecompositionObstructed);
  EXPECT_THROW(ibp_decompose(p, HorizontalDensity::superpotential(2, std::vector<Expression>(4))), DegreeError);
  IbpOptions late;
  late.deadline = std::chrono::steady_clock::now() - std::chrono::seconds(1);
  EXPECT_THROW(ibp_decompose(p, HorizontalDensity::top(2, E(p.jet(0, p.zero())) * xi10), late), Cancelled);
}

TEST(Superpotential, MaxwellGolden) {
  Maxwell mx({1, -1, -1, -1});
  auto g = GaugeGenerator::vertical(mx.p);
  auto r = superpotential(mx.p, mx.l, g);
  EXPECT_EQ(r.symmetry, ZeroVerdict::CanonicalZero);
  EXPECT_EQ(r.strong_conservation, ZeroVerdict::CanonicalZero);
  EXPECT_EQ(r.certificate, ZeroVerdict::CanonicalZero);
  for (const auto& [k, c] : r.bianchi) EXPECT_TRUE(c.is_zero());
  for (int s = 0; s < 4; ++s) {
    ExpressionBuilder et;
    for (int mu = 0; mu < 4; ++mu) et.add(total_derivative(mx.p, mx.Fup(mu, s), mu));
    EXPECT_EQ(r.reduced_current.eps(s), -et.build() * mx.chi(mx.p.zero())) << s;
    for (int mu = 0; mu < 4; ++mu) EXPECT_EQ(r.superpotential.eta(s, mu), -mx.Fup(s, mu) * mx.chi(mx.p.zero()));
  }
}

TEST(Superpotential, RejectsNonSymmetry) {
  JetProblem p = scalar_problem(1, 2);
  Expression y1 = E(p.jet(0, MultiIndex{1}));
  Expression l = Rational(1, 2) * y1 * y1;
  EXPECT_THROW(superpotential(p, l, GaugeGenerator::natural(p)), NotASymmetry);
  auto b = bianchi_check(p, l, GaugeGenerator::natural(p));
  EXPECT_FALSE(b.holds);
  EXPECT_EQ(b.verdicts.at(0), ZeroVerdict::NonZero);
}

TEST(Superpotential, YangMillsAbelianCurvedBackground) {
  JetProblem p(2, 2);
  p.set_algebra({"Q"}, {});
  FieldDecl gd;
  gd.label = "g";
  gd.descriptor = GeometricDescriptor::tensor(0, 2, Rational(0), IndexSymmetry::Symmetric);
  gd.metric = true;
  gd.background = true;
  gd.signature = {1, -1};
  p.add_field(gd);
  FieldDecl ad;
  ad.label = "A";
  ad.descriptor = GeometricDescriptor::connection();
  int a = p.add_field(ad);
  const MetricFamily& m = *p.metric();
  auto F = [&](int mu, int nu) {
    return p.field_jet(a, {0, nu}, p.unit(mu)) - p.field_jet(a, {0, mu}, p.unit(nu));
  };
  auto Fup = [&](int s, int t) {
    ExpressionBuilder b;
    for (int mu = 0; mu < 2; ++mu)
      for (int nu = 0; nu < 2; ++nu) b.add_product(m.ginv(s, mu) * m.ginv(t, nu), F(mu, nu));
    return b.build();
  };
  ExpressionBuilder lb;
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 2; ++t) lb.add_product(Fup(s, t), F(s, t), Rational(-1, 4));
  Expression l = m.sqrtg() * lb.build();

  auto r = superpotential(p, l, GaugeGenerator::vertical(p));
  EXPECT_NE(r.symmetry, ZeroVerdict::NonZero);
  EXPECT_NE(r.certificate, ZeroVerdict::NonZero);
  Expression chi = E(p.xiA(0, p.zero()));
  EXPECT_NE(zero_test(p, r.superpotential.eta(0, 1) + m.sqrtg() * Fup(0, 1) * chi), ZeroVerdict::NonZero);
  EXPECT_THROW(superpotential(p, l, GaugeGenerator::natural(p)), NotASymmetry);
}
