#include "jetvar/fields.hpp"

#include "jetvar/errors.hpp"

namespace jetvar {

void ProjectableVectorField::validate(const JetProblem& p, bool require_projectable) const {
  if (static_cast<int>(xi.size()) != p.n()) throw DimensionMismatch("vector field needs n base components");
  if (static_cast<int>(Xi.size()) != p.num_components()) throw DimensionMismatch("vector field needs one fiber component per field component");
  if (!require_projectable) return;
  for (const auto& e : xi) {
    for (Atom a : e.leaf_atoms()) {
      if (a.kind() == AtomKind::FieldJet) throw DomainError("base component depends on fiber coordinate " + a.debug_string());
    }
  }
}

std::map<JetKey, Expression> prolong(const JetProblem& p, const ProjectableVectorField& v, int r, ProlongMethod method) {
  v.validate(p, false);
  if (r > p.cap()) throw OrderOverflow("prolongation order " + std::to_string(r) + " exceeds cap");
  int n = p.n();
  std::map<JetKey, Expression> out;
  // D_beta xi^mu, memoized per beta.
  std::map<MultiIndex, std::vector<Expression>> dxi;
  auto dxi_at = [&](const MultiIndex& beta) -> const std::vector<Expression>& {
    auto it = dxi.find(beta);
    if (it != dxi.end()) return it->second;
    std::vector<Expression> d(n);
    for (int mu = 0; mu < n; ++mu) d[mu] = total_derivative(p, v.xi[mu], beta);
    return dxi.emplace(beta, std::move(d)).first->second;
  };
  auto levels = multi_indices_up_to(n, r);
  for (int i = 0; i < p.num_components(); ++i) {
    for (const auto& alpha : levels) {
      Expression value;
      if (alpha.is_zero()) {
        value = v.Xi[i];
      } else if (method == ProlongMethod::Closed) {
        ExpressionBuilder b;
        b.add(total_derivative(p, v.Xi[i], alpha));
        for (const auto& beta : sub_indices(alpha)) {
          if (beta.is_zero()) continue;
          MultiIndex gamma(n);
          for (int k = 0; k < n; ++k) gamma.set(k, alpha[k] - beta[k]);
          Rational m = mi_multinomial(alpha, beta, gamma);
          const auto& d = dxi_at(beta);
          for (int mu = 0; mu < n; ++mu) {
            if (d[mu].is_zero()) continue;
            b.add_scaled(Monomial{Factor{p.jet(i, gamma.plus(mu)).id(), 1}}, -m, d[mu]);
          }
        }
        value = b.build();
      } else {
        int sigma = 0;
        while (alpha[sigma] == 0) ++sigma;
        MultiIndex prev = alpha.minus(sigma);
        const Expression& base = out.at(JetKey{i, prev});
        ExpressionBuilder b;
        b.add(total_derivative(p, base, sigma));
        const auto& d = dxi_at(MultiIndex::unit(n, sigma));
        for (int mu = 0; mu < n; ++mu) {
          if (d[mu].is_zero()) continue;
          b.add_scaled(Monomial{Factor{p.jet(i, prev.plus(mu)).id(), 1}}, Rational(-1), d[mu]);
        }
        value = b.build();
      }
      out.emplace(JetKey{i, alpha}, std::move(value));
    }
  }
  return out;
}

GaugeGenerator GaugeGenerator::zero(const JetProblem& p) {
  GaugeGenerator g;
  g.xi.assign(p.n(), Expression());
  g.xiA.assign(p.algebra_dim(), Expression());
  return g;
}

GaugeGenerator GaugeGenerator::symbolic_full(const JetProblem& p) {
  GaugeGenerator g = zero(p);
  for (int mu = 0; mu < p.n(); ++mu) g.xi[mu] = Expression(p.xi(mu, p.zero()));
  for (int a = 0; a < p.algebra_dim(); ++a) g.xiA[a] = Expression(p.xiA(a, p.zero()));
  g.symbolic = true;
  return g;
}

GaugeGenerator GaugeGenerator::vertical(const JetProblem& p) {
  GaugeGenerator g = zero(p);
  for (int a = 0; a < p.algebra_dim(); ++a) g.xiA[a] = Expression(p.xiA(a, p.zero()));
  g.symbolic = true;
  return g;
}

GaugeGenerator GaugeGenerator::natural(const JetProblem& p) {
  GaugeGenerator g = zero(p);
  for (int mu = 0; mu < p.n(); ++mu) g.xi[mu] = Expression(p.xi(mu, p.zero()));
  g.symbolic = true;
  return g;
}

GaugeGenerator GaugeGenerator::horizontal(const JetProblem& p, const std::vector<Expression>& omega) {
  if (static_cast<int>(omega.size()) != p.algebra_dim() * p.n()) throw DimensionMismatch("connection table size");
  GaugeGenerator g = natural(p);
  for (int a = 0; a < p.algebra_dim(); ++a) {
    ExpressionBuilder b;
    for (int mu = 0; mu < p.n(); ++mu) b.add_product(omega[a * p.n() + mu], g.xi[mu]);
    g.xiA[a] = b.build();
  }
  return g;
}

GaugeGenerator GaugeGenerator::explicit_field(std::vector<Expression> xi, std::vector<Expression> xiA) {
  GaugeGenerator g;
  g.xi = std::move(xi);
  g.xiA = std::move(xiA);
  g.symbolic = false;
  return g;
}

ConnectionValue ConnectionValue::flat(const JetProblem& p) {
  ConnectionValue c;
  c.omega.assign(p.algebra_dim() * p.n(), Expression());
  return c;
}

ConnectionValue ConnectionValue::from_field(const JetProblem& p, int field) {
  const FieldDecl& f = p.fields().at(field);
  if (f.descriptor.kind != FieldKind::PrincipalConnection) throw UnknownDescriptor("'" + f.label + "' is not a connection");
  ConnectionValue c;
  for (int a = 0; a < p.algebra_dim(); ++a)
    for (int mu = 0; mu < p.n(); ++mu) c.omega.push_back(p.field_jet(field, {a, mu}, p.zero()));
  return c;
}

namespace {

void check_generator(const JetProblem& p, const GaugeGenerator& g) {
  if (static_cast<int>(g.xi.size()) != p.n() || static_cast<int>(g.xiA.size()) != p.algebra_dim()) {
    throw DimensionMismatch("generator shape does not match the problem");
  }
}

}  // namespace

Expression lift_component(const JetProblem& p, const GaugeGenerator& g, int component) {
  check_generator(p, g);
  auto [field, tuple_ptr] = p.component_info(component);
  const FieldDecl& f = p.fields()[field];
  const std::vector<int>& idx = *tuple_ptr;
  const auto& d = f.descriptor;
  int n = p.n();
  MultiIndex z = p.zero();
  ExpressionBuilder b;
  if (d.kind == FieldKind::TensorDensity) {
    for (int s = 0; s < d.rank(); ++s) {
      bool up = s < d.contravariant;
      for (int rho = 0; rho < n; ++rho) {
        std::vector<int> t = idx;
        t[s] = rho;
        Expression comp = p.field_jet(field, t, z);
        if (comp.is_zero()) continue;
        if (up) {
          b.add_product(comp, total_derivative(p, g.xi[idx[s]], rho));
        } else {
          b.add_product(comp, total_derivative(p, g.xi[rho], idx[s]), Rational(-1));
        }
      }
    }
    if (!d.weight.is_zero()) {
      Expression self = p.field_jet(field, idx, z);
      for (int rho = 0; rho < n; ++rho) b.add_product(self, total_derivative(p, g.xi[rho], rho), -d.weight);
    }
    return b.build();
  }
  if (d.kind == FieldKind::PrincipalConnection) {
    int a = idx[0], mu = idx[1];
    for (int nu = 0; nu < n; ++nu) {
      b.add_product(p.field_jet(field, {a, nu}, z), total_derivative(p, g.xi[nu], mu), Rational(-1));
    }
    b.add(total_derivative(p, g.xiA[a], mu));
    for (int bb = 0; bb < p.algebra_dim(); ++bb) {
      for (int cc = 0; cc < p.algebra_dim(); ++cc) {
        const Rational& k = p.c(a, bb, cc);
        if (k.is_zero()) continue;
        b.add_product(p.field_jet(field, {bb, mu}, z), g.xiA[cc], k);
      }
    }
    return b.build();
  }
  throw UnknownDescriptor("no lift rule for field '" + f.label + "'");
}

LiftTable lift(const JetProblem& p, const GaugeGenerator& g) {
  LiftTable t(p.num_components());
  for (int i = 0; i < p.num_components(); ++i) t[i] = lift_component(p, g, i);
  return t;
}

ProjectableVectorField lifted_field(const JetProblem& p, const GaugeGenerator& g) {
  ProjectableVectorField v;
  v.xi = g.xi;
  v.Xi = lift(p, g);
  return v;
}

std::vector<Expression> generalized_lie_derivative(const JetProblem& p, const GaugeGenerator& g, const LiftTable& lift) {
  check_generator(p, g);
  if (static_cast<int>(lift.size()) != p.num_components()) throw MissingLift("lift table does not cover every component");
  std::vector<Expression> out(p.num_components());
  for (int i = 0; i < p.num_components(); ++i) {
    ExpressionBuilder b;
    for (int s = 0; s < p.n(); ++s) {
      if (g.xi[s].is_zero()) continue;
      b.add_product(g.xi[s], Expression(p.jet(i, p.unit(s))));
    }
    b.add(lift[i], Rational(-1));
    out[i] = b.build();
  }
  return out;
}

Expression prolonged_lie_derivative(const JetProblem& p, const std::vector<Expression>& pounds, int component,
                                    const MultiIndex& alpha) {
  return total_derivative(p, pounds.at(component), alpha);
}

SplitVectorField split(const JetProblem& p, const GaugeGenerator& g, const ConnectionValue& omega) {
  check_generator(p, g);
  SplitVectorField s;
  s.horizontal = g;
  s.vertical.resize(p.algebra_dim());
  for (int a = 0; a < p.algebra_dim(); ++a) {
    ExpressionBuilder b;
    for (int mu = 0; mu < p.n(); ++mu) b.add_product(omega.at(p, a, mu), g.xi[mu]);
    s.horizontal.xiA[a] = b.build();
    s.vertical[a] = g.xiA[a] - s.horizontal.xiA[a];
  }
  return s;
}

bool recomposes(const JetProblem& p, const GaugeGenerator& g, const SplitVectorField& s) {
  for (int mu = 0; mu < p.n(); ++mu) {
    if (s.horizontal.xi[mu] != g.xi[mu]) return false;
  }
  for (int a = 0; a < p.algebra_dim(); ++a) {
    if (s.horizontal.xiA[a] + s.vertical[a] != g.xiA[a]) return false;
  }
  return true;
}

GaugeGenerator bracket(const JetProblem& p, const GaugeGenerator& a, const GaugeGenerator& b) {
  if (a.symbolic || b.symbolic) throw ModeError("bracket needs explicit generators, not parameter jets");
  check_generator(p, a);
  check_generator(p, b);
  int n = p.n();
  GaugeGenerator r = GaugeGenerator::zero(p);
  for (int nu = 0; nu < n; ++nu) {
    ExpressionBuilder e;
    for (int mu = 0; mu < n; ++mu) {
      e.add_product(a.xi[mu], total_derivative(p, b.xi[nu], mu));
      e.add_product(b.xi[mu], total_derivative(p, a.xi[nu], mu), Rational(-1));
    }
    r.xi[nu] = e.build();
  }
  for (int A = 0; A < p.algebra_dim(); ++A) {
    ExpressionBuilder e;
    for (int mu = 0; mu < n; ++mu) {
      e.add_product(a.xi[mu], total_derivative(p, b.xiA[A], mu));
      e.add_product(b.xi[mu], total_derivative(p, a.xiA[A], mu), Rational(-1));
    }
    for (int B = 0; B < p.algebra_dim(); ++B) {
      for (int C = 0; C < p.algebra_dim(); ++C) {
        const Rational& k = p.c(A, B, C);
        if (!k.is_zero()) e.add_product(a.xiA[B], b.xiA[C], k);
      }
    }
    r.xiA[A] = e.build();
  }
  return r;
}

namespace {

// V(f) for a vector field on Y acting on a function of (x, y).
Expression apply(const JetProblem& p, const ProjectableVectorField& v, const Expression& f) {
  ExpressionBuilder b;
  for (int nu = 0; nu < p.n(); ++nu) {
    if (v.xi[nu].is_zero()) continue;
    b.add_product(v.xi[nu], partial(f, p.base(nu)));
  }
  for (int j = 0; j < p.num_components(); ++j) {
    if (v.Xi[j].is_zero()) continue;
    b.add_product(v.Xi[j], partial(f, p.jet(j, p.zero())));
  }
  return b.build();
}

}  // namespace

ProjectableVectorField vector_field_bracket(const JetProblem& p, const ProjectableVectorField& a,
                                            const ProjectableVectorField& b) {
  a.validate(p);
  b.validate(p);
  ProjectableVectorField r;
  for (int nu = 0; nu < p.n(); ++nu) r.xi.push_back(apply(p, a, b.xi[nu]) - apply(p, b, a.xi[nu]));
  for (int i = 0; i < p.num_components(); ++i) r.Xi.push_back(apply(p, a, b.Xi[i]) - apply(p, b, a.Xi[i]));
  return r;
}

bool is_linear_in_params(const Expression& e) {
  for (const auto& t : e.terms()) {
    if (monomial_degree_in(t.monomial, AtomKind::ParamJet) != 1) return false;
  }
  return true;
}

}  // namespace jetvar
