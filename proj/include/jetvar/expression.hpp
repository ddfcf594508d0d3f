#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <absl/container/flat_hash_map.h>
#include <absl/container/inlined_vector.h>

#include "jetvar/atom.hpp"
#include "jetvar/rational.hpp"

namespace jetvar {

struct Factor {
  AtomId atom;
  int exponent;
  friend bool operator==(const Factor&, const Factor&) = default;
};

// Product of atom powers, sorted by atom content order, no zero exponents.
using Monomial = absl::InlinedVector<Factor, 4>;

std::strong_ordering monomial_compare(const Monomial& a, const Monomial& b);
Monomial monomial_multiply(const Monomial& a, const Monomial& b);
std::size_t monomial_hash(const Monomial& m);
int monomial_degree_in(const Monomial& m, AtomKind kind);

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const { return monomial_hash(m); }
};

struct Term {
  Monomial monomial;
  Rational coeff;
};

// Canonical Laurent polynomial over interned atoms with exact rational
// coefficients. Every value is kept in canonical form: terms sorted by
// monomial order, like terms collected, zero coefficients dropped.
class Expression {
 public:
  Expression() = default;  // zero
  Expression(const Rational& c);  // NOLINT implicit
  Expression(std::int64_t c) : Expression(Rational(c)) {}  // NOLINT implicit
  Expression(int c) : Expression(Rational(c)) {}  // NOLINT implicit
  Expression(Atom a);  // NOLINT implicit

  static Expression from_terms(std::vector<Term> terms);  // input in any order

  bool is_zero() const { return !impl_; }
  bool is_constant() const;
  Rational constant_value() const;  // constant term
  std::size_t size() const;
  const std::vector<Term>& terms() const;
  std::size_t hash() const;

  // Atoms appearing directly in monomials (call atoms are not opened).
  std::vector<Atom> atoms() const;
  // Leaves reached through call arguments as well.
  std::vector<Atom> leaf_atoms() const;
  bool contains_kind(AtomKind kind) const;
  bool has_opaque() const { return contains_kind(AtomKind::OpaqueCall); }
  // Highest field-jet order reachable, -1 when none.
  int jet_order() const;
  int param_order() const;

  Expression operator-() const;
  Expression& operator+=(const Expression& o);
  Expression& operator-=(const Expression& o);
  Expression& operator*=(const Expression& o);

  friend Expression operator+(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a, const Expression& b);
  friend Expression operator*(const Expression& a, const Expression& b);
  friend Expression operator*(const Rational& c, const Expression& e);
  friend Expression operator*(const Expression& e, const Rational& c) { return c * e; }
  friend Expression operator*(int c, const Expression& e) { return Rational(c) * e; }
  friend Expression operator*(const Expression& e, int c) { return Rational(c) * e; }
  // Division by a single-term expression (monomial times a rational).
  friend Expression operator/(const Expression& a, const Expression& b);

  friend bool operator==(const Expression& a, const Expression& b);
  friend bool operator!=(const Expression& a, const Expression& b) { return !(a == b); }
  // Total order on canonical forms.
  friend std::strong_ordering operator<=>(const Expression& a, const Expression& b);

  std::string debug_string() const;

 private:
  struct Impl {
    std::vector<Term> terms;
    std::size_t hash = 0;
  };
  explicit Expression(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  static Expression adopt_sorted(std::vector<Term> terms);
  friend class ExpressionBuilder;

  std::shared_ptr<const Impl> impl_;
};

Expression pow(const Expression& base, int exponent);

// Accumulates terms in a hash map; build() sorts once.
class ExpressionBuilder {
 public:
  ExpressionBuilder() = default;
  void reserve(std::size_t n) { acc_.reserve(n); }
  void add(const Monomial& m, const Rational& c);
  void add(Monomial&& m, const Rational& c);
  void add(const Expression& e, const Rational& scale = Rational(1));
  // scale * m * e
  void add_scaled(const Monomial& m, const Rational& scale, const Expression& e);
  void add_product(const Expression& a, const Expression& b, const Rational& scale = Rational(1));
  bool empty() const { return acc_.empty(); }
  Expression build();

 private:
  absl::flat_hash_map<Monomial, Rational, MonomialHash> acc_;
};

// Syntax tree accepted by normalize(); the parser and tests build these.
struct ExprTree {
  enum class Kind { Const, Atom, Sum, Product, IntPow };
  Kind kind = Kind::Const;
  Rational value;
  jetvar::Atom atom;
  std::vector<ExprTree> children;
  int exponent = 1;

  static ExprTree constant(const Rational& r);
  static ExprTree leaf(jetvar::Atom a);
  static ExprTree sum(std::vector<ExprTree> c);
  static ExprTree product(std::vector<ExprTree> c);
  static ExprTree power(ExprTree base, int exponent);
};

Expression normalize(const ExprTree& tree);
inline const Expression& normalize(const Expression& e) { return e; }
// Tree view of a canonical form: Sum of Products of IntPow/Atom/Const nodes,
// with singleton sums and products collapsed.
ExprTree tree_view(const Expression& e);

using Bindings = std::unordered_map<Atom, Expression>;
// Simultaneous replacement of atoms (including inside call arguments).
Expression substitute(const Expression& e, const Bindings& bindings);
// Formal partial derivative treating distinct atoms as independent.
Expression partial(const Expression& e, Atom a);

using NumericPoint = absl::flat_hash_map<AtomId, double>;
double evaluate(const Expression& e, const NumericPoint& point);
double evaluate_atom(Atom a, const NumericPoint& point);
// Largest |coefficient * monomial value| over the terms (scale for residuals).
double max_term_magnitude(const Expression& e, const NumericPoint& point);

// Evaluation over F_p, p prime. Returns nullopt if a call is singular.
using ModularPoint = absl::flat_hash_map<AtomId, std::uint64_t>;
std::optional<std::uint64_t> evaluate_mod(const Expression& e, const ModularPoint& point, std::uint64_t p,
                                          absl::flat_hash_map<AtomId, std::uint64_t>* call_cache = nullptr);

// Splits e = sum_k coeff_k * key_k where key_k are monomials made only of
// atoms of kind `kind`; coefficients are free of such atoms.
std::map<Monomial, Expression, bool (*)(const Monomial&, const Monomial&)> split_by_kind(const Expression& e,
                                                                                        AtomKind kind);
bool monomial_less(const Monomial& a, const Monomial& b);

Expression monomial_expression(const Monomial& m, const Rational& c = Rational(1));

}  // namespace jetvar

template <>
struct std::hash<jetvar::Expression> {
  std::size_t operator()(const jetvar::Expression& e) const { return e.hash(); }
};
