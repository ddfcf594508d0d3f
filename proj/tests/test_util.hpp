#pragma once

#include <random>
#include <vector>

#include "jetvar/expression.hpp"
#include "jetvar/problem.hpp"

namespace jetvar::testing {

// Random syntax tree over the given atoms with small integer coefficients.
inline ExprTree random_tree(std::mt19937_64& rng, const std::vector<Atom>& atoms, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 4);
  std::uniform_int_distribution<int> coeff(-3, 3);
  std::uniform_int_distribution<std::size_t> atom(0, atoms.size() - 1);
  switch (pick(rng)) {
    case 0:
      return ExprTree::constant(Rational(coeff(rng), 1 + (rng() % 3)));
    case 1:
      return ExprTree::leaf(atoms[atom(rng)]);
    case 2:
    case 3: {
      std::vector<ExprTree> kids;
      int k = 2 + static_cast<int>(rng() % 2);
      for (int i = 0; i < k; ++i) kids.push_back(random_tree(rng, atoms, depth - 1));
      return pick(rng) % 2 ? ExprTree::sum(std::move(kids)) : ExprTree::product(std::move(kids));
    }
    default:
      return ExprTree::power(random_tree(rng, atoms, depth - 1), static_cast<int>(rng() % 3));
  }
}

inline double tree_value(const ExprTree& t, const NumericPoint& p) {
  switch (t.kind) {
    case ExprTree::Kind::Const:
      return t.value.to_double();
    case ExprTree::Kind::Atom:
      return evaluate(Expression(t.atom), p);
    case ExprTree::Kind::Sum: {
      double s = 0;
      for (const auto& c : t.children) s += tree_value(c, p);
      return s;
    }
    case ExprTree::Kind::Product: {
      double s = 1;
      for (const auto& c : t.children) s *= tree_value(c, p);
      return s;
    }
    case ExprTree::Kind::IntPow: {
      double b = tree_value(t.children[0], p), r = 1;
      for (int i = 0; i < t.exponent; ++i) r *= b;
      return r;
    }
  }
  return 0;
}

// Random polynomial with at most `terms` monomials of total degree <= `degree`.
inline Expression random_polynomial(std::mt19937_64& rng, const std::vector<Atom>& atoms, int terms, int degree) {
  ExpressionBuilder b;
  std::uniform_int_distribution<int> coeff(-4, 4);
  std::uniform_int_distribution<std::size_t> atom(0, atoms.size() - 1);
  for (int t = 0; t < terms; ++t) {
    Expression m(Rational(coeff(rng)));
    int d = static_cast<int>(rng() % (degree + 1));
    for (int k = 0; k < d; ++k) m *= Expression(atoms[atom(rng)]);
    b.add(m);
  }
  return b.build();
}

// n-dimensional base with m scalar fields y0..y(m-1).
inline JetProblem scalar_problem(int n, int order, int m = 1) {
  JetProblem p(n, order);
  for (int i = 0; i < m; ++i) {
    FieldDecl f;
    f.label = "y" + std::to_string(i);
    p.add_field(f);
  }
  return p;
}

// Field jets up to `order` of every component, base coordinates included.
inline std::vector<Atom> jet_atoms(const JetProblem& p, int order, bool with_base = true) {
  std::vector<Atom> out;
  if (with_base)
    for (int mu = 0; mu < p.n(); ++mu) out.push_back(p.base(mu));
  for (int i = 0; i < p.num_components(); ++i)
    for (const auto& a : multi_indices_up_to(p.n(), order)) out.push_back(p.jet(i, a));
  return out;
}

}  // namespace jetvar::testing
