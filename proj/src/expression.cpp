#include "jetvar/expression.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "jetvar/errors.hpp"

namespace jetvar {

// ---------------------------------------------------------------------------
// Monomials

std::strong_ordering monomial_compare(const Monomial& a, const Monomial& b) {
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].atom != b[i].atom) return atom_compare(a[i].atom, b[i].atom);
    if (auto c = a[i].exponent <=> b[i].exponent; c != 0) return c;
  }
  return a.size() <=> b.size();
}

bool monomial_less(const Monomial& a, const Monomial& b) { return monomial_compare(a, b) < 0; }

Monomial monomial_multiply(const Monomial& a, const Monomial& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  Monomial r;
  r.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].atom == b[j].atom) {
      int e = a[i].exponent + b[j].exponent;
      if (e != 0) r.push_back({a[i].atom, e});
      ++i;
      ++j;
    } else if (atom_less(a[i].atom, b[j].atom)) {
      r.push_back(a[i++]);
    } else {
      r.push_back(b[j++]);
    }
  }
  while (i < a.size()) r.push_back(a[i++]);
  while (j < b.size()) r.push_back(b[j++]);
  return r;
}

std::size_t monomial_hash(const Monomial& m) {
  std::size_t h = 0xcbf29ce484222325ull;
  for (const auto& f : m) {
    h ^= f.atom;
    h *= 0x100000001b3ull;
    h ^= static_cast<std::uint32_t>(f.exponent);
    h *= 0x100000001b3ull;
  }
  return h;
}

int monomial_degree_in(const Monomial& m, AtomKind kind) {
  int d = 0;
  for (const auto& f : m) {
    if (Atom::from_id(f.atom).kind() == kind) d += f.exponent;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Expression

namespace {

const std::vector<Term>& empty_terms() {
  static const std::vector<Term>* e = new std::vector<Term>();
  return *e;
}

std::size_t terms_hash(const std::vector<Term>& terms) {
  std::size_t h = 0x84222325cbf29ce4ull;
  for (const auto& t : terms) {
    h ^= monomial_hash(t.monomial) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h ^= t.coeff.hash() + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

bool term_less(const Term& a, const Term& b) { return monomial_compare(a.monomial, b.monomial) < 0; }

}  // namespace

Expression Expression::adopt_sorted(std::vector<Term> terms) {
  if (terms.empty()) return Expression();
  auto impl = std::make_shared<Impl>();
  impl->hash = terms_hash(terms);
  impl->terms = std::move(terms);
  return Expression(std::shared_ptr<const Impl>(std::move(impl)));
}

Expression::Expression(const Rational& c) {
  if (c.is_zero()) return;
  *this = adopt_sorted({Term{Monomial{}, c}});
}

Expression::Expression(Atom a) {
  if (!a.valid()) throw UnknownAtom("invalid atom handle");
  *this = adopt_sorted({Term{Monomial{Factor{a.id(), 1}}, Rational(1)}});
}

Expression Expression::from_terms(std::vector<Term> terms) {
  ExpressionBuilder b;
  for (auto& t : terms) {
    // Re-canonicalize each monomial: sort factors and merge repeats.
    Monomial m;
    for (const auto& f : t.monomial) m = monomial_multiply(m, Monomial{f});
    b.add(std::move(m), t.coeff);
  }
  return b.build();
}

bool Expression::is_constant() const {
  return !impl_ || (impl_->terms.size() == 1 && impl_->terms[0].monomial.empty());
}

Rational Expression::constant_value() const {
  if (!impl_) return Rational(0);
  const auto& t = impl_->terms;
  for (const auto& term : t) {
    if (term.monomial.empty()) return term.coeff;
  }
  return Rational(0);
}

std::size_t Expression::size() const { return impl_ ? impl_->terms.size() : 0; }

const std::vector<Term>& Expression::terms() const { return impl_ ? impl_->terms : empty_terms(); }

std::size_t Expression::hash() const { return impl_ ? impl_->hash : 0; }

std::vector<Atom> Expression::atoms() const {
  std::vector<AtomId> ids;
  for (const auto& t : terms()) {
    for (const auto& f : t.monomial) ids.push_back(f.atom);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<Atom> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(Atom::from_id(id));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Atom> Expression::leaf_atoms() const {
  std::vector<AtomId> ids;
  for (const auto& t : terms()) {
    for (const auto& f : t.monomial) {
      const auto& l = Atom::from_id(f.atom).leaves();
      ids.insert(ids.end(), l.begin(), l.end());
    }
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<Atom> out;
  for (auto id : ids) out.push_back(Atom::from_id(id));
  std::sort(out.begin(), out.end());
  return out;
}

bool Expression::contains_kind(AtomKind kind) const {
  for (const auto& t : terms()) {
    for (const auto& f : t.monomial) {
      if (Atom::from_id(f.atom).kind() == kind) return true;
    }
  }
  return false;
}

int Expression::jet_order() const {
  int best = -1;
  for (auto a : leaf_atoms()) {
    if (a.kind() == AtomKind::FieldJet) best = std::max(best, a.multi_index().order());
  }
  return best;
}

int Expression::param_order() const {
  int best = -1;
  for (auto a : leaf_atoms()) {
    if (a.kind() == AtomKind::ParamJet) best = std::max(best, a.multi_index().order());
  }
  return best;
}

Expression Expression::operator-() const {
  if (!impl_) return *this;
  std::vector<Term> t = impl_->terms;
  for (auto& term : t) term.coeff = -term.coeff;
  return adopt_sorted(std::move(t));
}

Expression operator+(const Expression& a, const Expression& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const auto& x = a.terms();
  const auto& y = b.terms();
  std::vector<Term> out;
  out.reserve(x.size() + y.size());
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    auto c = monomial_compare(x[i].monomial, y[j].monomial);
    if (c < 0) {
      out.push_back(x[i++]);
    } else if (c > 0) {
      out.push_back(y[j++]);
    } else {
      Rational s = x[i].coeff + y[j].coeff;
      if (!s.is_zero()) out.push_back(Term{x[i].monomial, s});
      ++i;
      ++j;
    }
  }
  while (i < x.size()) out.push_back(x[i++]);
  while (j < y.size()) out.push_back(y[j++]);
  return Expression::adopt_sorted(std::move(out));
}

Expression operator-(const Expression& a, const Expression& b) { return a + (-b); }

Expression operator*(const Rational& c, const Expression& e) {
  if (c.is_zero() || e.is_zero()) return Expression();
  if (c.is_one()) return e;
  std::vector<Term> t = e.terms();
  for (auto& term : t) term.coeff *= c;
  return Expression::adopt_sorted(std::move(t));
}

Expression operator*(const Expression& a, const Expression& b) {
  if (a.is_zero() || b.is_zero()) return Expression();
  if (a.is_constant()) return a.constant_value() * b;
  if (b.is_constant()) return b.constant_value() * a;
  ExpressionBuilder builder;
  builder.add_product(a, b);
  return builder.build();
}

Expression operator/(const Expression& a, const Expression& b) {
  if (b.is_zero()) throw DomainError("division by zero");
  if (b.size() != 1) throw DomainError("division only by a single monomial term: " + b.debug_string());
  return a * pow(b, -1);
}

Expression& Expression::operator+=(const Expression& o) { return *this = *this + o; }
Expression& Expression::operator-=(const Expression& o) { return *this = *this - o; }
Expression& Expression::operator*=(const Expression& o) { return *this = *this * o; }

bool operator==(const Expression& a, const Expression& b) {
  if (a.impl_ == b.impl_) return true;
  if (a.hash() != b.hash() || a.size() != b.size()) return false;
  const auto& x = a.terms();
  const auto& y = b.terms();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].monomial != y[i].monomial || x[i].coeff != y[i].coeff) return false;
  }
  return true;
}

std::strong_ordering operator<=>(const Expression& a, const Expression& b) {
  if (a.impl_ == b.impl_) return std::strong_ordering::equal;
  const auto& x = a.terms();
  const auto& y = b.terms();
  std::size_t n = std::min(x.size(), y.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto c = monomial_compare(x[i].monomial, y[i].monomial); c != 0) return c;
    if (x[i].coeff != y[i].coeff) {
      return x[i].coeff < y[i].coeff ? std::strong_ordering::less : std::strong_ordering::greater;
    }
  }
  return x.size() <=> y.size();
}

std::string Expression::debug_string() const {
  if (is_zero()) return "0";
  std::string s;
  bool first = true;
  for (const auto& t : terms()) {
    std::string c = t.coeff.to_string();
    if (!first) s += " + ";
    first = false;
    if (t.monomial.empty()) {
      s += c;
      continue;
    }
    if (!t.coeff.is_one()) s += c + "*";
    for (std::size_t i = 0; i < t.monomial.size(); ++i) {
      if (i) s += "*";
      s += Atom::from_id(t.monomial[i].atom).debug_string();
      if (t.monomial[i].exponent != 1) s += "^" + std::to_string(t.monomial[i].exponent);
    }
  }
  return s;
}

Expression pow(const Expression& base, int exponent) {
  if (exponent == 0) return Expression(1);
  if (exponent < 0) {
    if (base.is_zero()) throw DomainError("zero raised to a negative power");
    if (base.size() != 1) throw DomainError("negative power of a sum: " + base.debug_string());
    const Term& t = base.terms()[0];
    Monomial m = t.monomial;
    for (auto& f : m) f.exponent *= exponent;
    Rational c(1);
    Rational inv = Rational(1) / t.coeff;
    for (int k = 0; k < -exponent; ++k) c *= inv;
    return monomial_expression(m, c);
  }
  if (base.size() == 1) {
    const Term& t = base.terms()[0];
    Monomial m = t.monomial;
    for (auto& f : m) f.exponent *= exponent;
    Rational c(1);
    for (int k = 0; k < exponent; ++k) c *= t.coeff;
    return monomial_expression(m, c);
  }
  Expression result(1);
  Expression b = base;
  int e = exponent;
  while (e) {
    if (e & 1) result *= b;
    e >>= 1;
    if (e) b *= b;
  }
  return result;
}

Expression monomial_expression(const Monomial& m, const Rational& c) {
  ExpressionBuilder b;
  b.add(m, c);
  return b.build();
}

// ---------------------------------------------------------------------------
// Builder

void ExpressionBuilder::add(const Monomial& m, const Rational& c) {
  if (c.is_zero()) return;
  auto [it, inserted] = acc_.try_emplace(m, c);
  if (!inserted) it->second += c;
}

void ExpressionBuilder::add(Monomial&& m, const Rational& c) {
  if (c.is_zero()) return;
  auto [it, inserted] = acc_.try_emplace(std::move(m), c);
  if (!inserted) it->second += c;
}

void ExpressionBuilder::add(const Expression& e, const Rational& scale) {
  if (scale.is_zero()) return;
  for (const auto& t : e.terms()) add(t.monomial, scale.is_one() ? t.coeff : t.coeff * scale);
}

void ExpressionBuilder::add_scaled(const Monomial& m, const Rational& scale, const Expression& e) {
  if (scale.is_zero()) return;
  for (const auto& t : e.terms()) add(monomial_multiply(m, t.monomial), t.coeff * scale);
}

void ExpressionBuilder::add_product(const Expression& a, const Expression& b, const Rational& scale) {
  if (scale.is_zero()) return;
  for (const auto& s : a.terms()) {
    Rational c = s.coeff * scale;
    for (const auto& t : b.terms()) add(monomial_multiply(s.monomial, t.monomial), c * t.coeff);
  }
}

Expression ExpressionBuilder::build() {
  std::vector<Term> terms;
  terms.reserve(acc_.size());
  for (auto& [m, c] : acc_) {
    if (!c.is_zero()) terms.push_back(Term{m, c});
  }
  acc_.clear();
  std::sort(terms.begin(), terms.end(), term_less);
  return Expression::adopt_sorted(std::move(terms));
}

// ---------------------------------------------------------------------------
// Trees

ExprTree ExprTree::constant(const Rational& r) {
  ExprTree t;
  t.kind = Kind::Const;
  t.value = r;
  return t;
}

ExprTree ExprTree::leaf(jetvar::Atom a) {
  ExprTree t;
  t.kind = Kind::Atom;
  t.atom = a;
  return t;
}

ExprTree ExprTree::sum(std::vector<ExprTree> c) {
  ExprTree t;
  t.kind = Kind::Sum;
  t.children = std::move(c);
  return t;
}

ExprTree ExprTree::product(std::vector<ExprTree> c) {
  ExprTree t;
  t.kind = Kind::Product;
  t.children = std::move(c);
  return t;
}

ExprTree ExprTree::power(ExprTree base, int exponent) {
  ExprTree t;
  t.kind = Kind::IntPow;
  t.exponent = exponent;
  t.children.push_back(std::move(base));
  return t;
}

Expression normalize(const ExprTree& tree) {
  switch (tree.kind) {
    case ExprTree::Kind::Const:
      return Expression(tree.value);
    case ExprTree::Kind::Atom:
      return Expression(tree.atom);
    case ExprTree::Kind::Sum: {
      ExpressionBuilder b;
      for (const auto& c : tree.children) b.add(normalize(c));
      return b.build();
    }
    case ExprTree::Kind::Product: {
      Expression r(1);
      for (const auto& c : tree.children) r *= normalize(c);
      return r;
    }
    case ExprTree::Kind::IntPow:
      return pow(normalize(tree.children.at(0)), tree.exponent);
  }
  return Expression();
}

ExprTree tree_view(const Expression& e) {
  if (e.is_zero()) return ExprTree::constant(Rational(0));
  std::vector<ExprTree> summands;
  for (const auto& t : e.terms()) {
    std::vector<ExprTree> factors;
    if (!t.coeff.is_one() || t.monomial.empty()) factors.push_back(ExprTree::constant(t.coeff));
    for (const auto& f : t.monomial) {
      ExprTree leaf = ExprTree::leaf(Atom::from_id(f.atom));
      factors.push_back(f.exponent == 1 ? leaf : ExprTree::power(leaf, f.exponent));
    }
    summands.push_back(factors.size() == 1 ? std::move(factors[0]) : ExprTree::product(std::move(factors)));
  }
  if (summands.size() == 1) return std::move(summands[0]);
  return ExprTree::sum(std::move(summands));
}

// ---------------------------------------------------------------------------
// Substitution

namespace {

bool leaves_hit(Atom a, const Bindings& bindings) {
  for (AtomId l : a.leaves()) {
    if (bindings.count(Atom::from_id(l))) return true;
  }
  return false;
}

}  // namespace

Expression substitute(const Expression& e, const Bindings& bindings) {
  for (const auto& [k, v] : bindings) {
    if (!k.valid()) throw UnknownAtom("binding key is not a registered atom");
  }
  if (bindings.empty() || e.is_zero()) return e;
  absl::flat_hash_map<AtomId, std::optional<Expression>> replacement;
  auto replace = [&](AtomId id) -> const std::optional<Expression>& {
    auto it = replacement.find(id);
    if (it != replacement.end()) return it->second;
    Atom a = Atom::from_id(id);
    std::optional<Expression> r;
    auto b = bindings.find(a);
    if (b != bindings.end()) {
      r = b->second;
    } else if (a.kind() == AtomKind::OpaqueCall && leaves_hit(a, bindings)) {
      std::vector<Expression> args;
      for (const auto& arg : a.args()) args.push_back(substitute(arg, bindings));
      r = Expression(Atom::call(a.index(), std::move(args)));
    }
    return replacement.emplace(id, std::move(r)).first->second;
  };
  ExpressionBuilder builder;
  for (const auto& t : e.terms()) {
    Monomial kept;
    Expression product(t.coeff);
    for (const auto& f : t.monomial) {
      const auto& r = replace(f.atom);
      if (r) {
        product *= pow(*r, f.exponent);
      } else {
        kept.push_back(f);
      }
    }
    builder.add_scaled(kept, Rational(1), product);
  }
  return builder.build();
}

// ---------------------------------------------------------------------------
// Partial derivatives

namespace {

struct PairHash {
  std::size_t operator()(const std::pair<AtomId, AtomId>& p) const {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(p.first) << 32) | p.second);
  }
};

std::mutex& partial_mutex() {
  static std::mutex* m = new std::mutex();
  return *m;
}

absl::flat_hash_map<std::pair<AtomId, AtomId>, Expression, PairHash>& partial_cache() {
  static auto* c = new absl::flat_hash_map<std::pair<AtomId, AtomId>, Expression, PairHash>();
  return *c;
}

// d(atom)/d(a)
Expression atom_partial(Atom atom, Atom a) {
  if (atom == a) return Expression(1);
  if (atom.kind() != AtomKind::OpaqueCall) return Expression();
  const auto& leaves = atom.leaves();
  if (!std::binary_search(leaves.begin(), leaves.end(), a.id())) return Expression();
  {
    std::lock_guard<std::mutex> lock(partial_mutex());
    auto it = partial_cache().find({atom.id(), a.id()});
    if (it != partial_cache().end()) return it->second;
  }
  const OpaqueFunction& f = function(atom.index());
  const auto& args = atom.args();
  Expression result;
  for (int slot = 0; slot < static_cast<int>(args.size()); ++slot) {
    Expression inner = partial(args[slot], a);
    if (inner.is_zero()) continue;
    if (!f.partial) throw MissingPartial(f.name + " has no registered partial for slot " + std::to_string(slot));
    Expression outer = f.partial(std::span<const Expression>(args.data(), args.size()), slot);
    result += outer * inner;
  }
  std::lock_guard<std::mutex> lock(partial_mutex());
  partial_cache().emplace(std::make_pair(atom.id(), a.id()), result);
  return result;
}

}  // namespace

Expression partial(const Expression& e, Atom a) {
  if (!a.valid()) throw UnknownAtom("invalid atom handle");
  ExpressionBuilder builder;
  absl::flat_hash_map<AtomId, Expression> dcache;
  for (const auto& t : e.terms()) {
    for (std::size_t i = 0; i < t.monomial.size(); ++i) {
      const Factor& f = t.monomial[i];
      Expression d;
      if (f.atom == a.id()) {
        d = Expression(1);
      } else {
        Atom atom = Atom::from_id(f.atom);
        if (atom.kind() != AtomKind::OpaqueCall) continue;
        auto it = dcache.find(f.atom);
        if (it == dcache.end()) it = dcache.emplace(f.atom, atom_partial(atom, a)).first;
        d = it->second;
      }
      if (d.is_zero()) continue;
      Monomial rest = t.monomial;
      if (f.exponent == 1) {
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        rest[i].exponent -= 1;
      }
      Rational c = t.coeff * Rational(f.exponent);
      if (d.is_constant()) {
        builder.add(std::move(rest), c * d.constant_value());
      } else {
        builder.add_scaled(rest, c, d);
      }
    }
  }
  return builder.build();
}

// ---------------------------------------------------------------------------
// Numeric evaluation

namespace {

double ipow(double x, int e) {
  if (e < 0) {
    if (x == 0.0) throw DomainError("negative power of zero during evaluation");
    return 1.0 / ipow(x, -e);
  }
  double r = 1.0;
  while (e) {
    if (e & 1) r *= x;
    x *= x;
    e >>= 1;
  }
  return r;
}

double atom_value(AtomId id, const NumericPoint& point, absl::flat_hash_map<AtomId, double>& cache) {
  auto p = point.find(id);
  if (p != point.end()) return p->second;
  auto c = cache.find(id);
  if (c != cache.end()) return c->second;
  Atom a = Atom::from_id(id);
  if (a.kind() != AtomKind::OpaqueCall) throw UnboundAtom(a.debug_string());
  const OpaqueFunction& f = function(a.index());
  if (!f.evaluate) throw DomainError(f.name + " has no numeric evaluator");
  std::vector<double> args;
  for (const auto& arg : a.args()) {
    double v = 0;
    for (const auto& t : arg.terms()) {
      double m = t.coeff.to_double();
      for (const auto& fac : t.monomial) m *= ipow(atom_value(fac.atom, point, cache), fac.exponent);
      v += m;
    }
    args.push_back(v);
  }
  double v = f.evaluate(std::span<const double>(args.data(), args.size()));
  cache.emplace(id, v);
  return v;
}

}  // namespace

double evaluate_atom(Atom a, const NumericPoint& point) {
  absl::flat_hash_map<AtomId, double> cache;
  return atom_value(a.id(), point, cache);
}

double evaluate(const Expression& e, const NumericPoint& point) {
  absl::flat_hash_map<AtomId, double> cache;
  double sum = 0;
  for (const auto& t : e.terms()) {
    double m = t.coeff.to_double();
    for (const auto& f : t.monomial) m *= ipow(atom_value(f.atom, point, cache), f.exponent);
    sum += m;
  }
  return sum;
}

double max_term_magnitude(const Expression& e, const NumericPoint& point) {
  absl::flat_hash_map<AtomId, double> cache;
  double best = 0;
  for (const auto& t : e.terms()) {
    double m = t.coeff.to_double();
    for (const auto& f : t.monomial) m *= ipow(atom_value(f.atom, point, cache), f.exponent);
    best = std::max(best, std::abs(m));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Modular evaluation

namespace {

using u64 = std::uint64_t;

u64 mulmod(u64 a, u64 b, u64 p) { return static_cast<u64>(static_cast<unsigned __int128>(a) * b % p); }

u64 powmod(u64 a, u64 e, u64 p) {
  u64 r = 1;
  a %= p;
  while (e) {
    if (e & 1) r = mulmod(r, a, p);
    a = mulmod(a, a, p);
    e >>= 1;
  }
  return r;
}

std::optional<u64> ipow_mod(u64 x, int e, u64 p) {
  if (e < 0) {
    if (x == 0) return std::nullopt;
    x = powmod(x, p - 2, p);
    e = -e;
  }
  return powmod(x, static_cast<u64>(e), p);
}

std::optional<u64> atom_value_mod(AtomId id, const ModularPoint& point, u64 p, absl::flat_hash_map<AtomId, u64>& cache);

std::optional<u64> poly_value_mod(const Expression& e, const ModularPoint& point, u64 p,
                                  absl::flat_hash_map<AtomId, u64>& cache) {
  u64 sum = 0;
  for (const auto& t : e.terms()) {
    u64 m = t.coeff.mod(p);
    for (const auto& f : t.monomial) {
      auto v = atom_value_mod(f.atom, point, p, cache);
      if (!v) return std::nullopt;
      auto pw = ipow_mod(*v, f.exponent, p);
      if (!pw) return std::nullopt;
      m = mulmod(m, *pw, p);
    }
    sum += m;
    if (sum >= p) sum -= p;
  }
  return sum;
}

std::optional<u64> atom_value_mod(AtomId id, const ModularPoint& point, u64 p, absl::flat_hash_map<AtomId, u64>& cache) {
  auto it = point.find(id);
  if (it != point.end()) return it->second;
  auto c = cache.find(id);
  if (c != cache.end()) return c->second;
  Atom a = Atom::from_id(id);
  if (a.kind() != AtomKind::OpaqueCall) throw UnboundAtom(a.debug_string());
  const OpaqueFunction& f = function(a.index());
  if (!f.evaluate_mod) throw DomainError(f.name + " has no modular evaluator");
  std::vector<u64> args;
  for (const auto& arg : a.args()) {
    auto v = poly_value_mod(arg, point, p, cache);
    if (!v) return std::nullopt;
    args.push_back(*v);
  }
  auto v = f.evaluate_mod(std::span<const u64>(args.data(), args.size()), p);
  if (v) cache.emplace(id, *v);
  return v;
}

}  // namespace

std::optional<std::uint64_t> evaluate_mod(const Expression& e, const ModularPoint& point, std::uint64_t p,
                                          absl::flat_hash_map<AtomId, std::uint64_t>* call_cache) {
  absl::flat_hash_map<AtomId, u64> local;
  return poly_value_mod(e, point, p, call_cache ? *call_cache : local);
}

// ---------------------------------------------------------------------------

std::map<Monomial, Expression, bool (*)(const Monomial&, const Monomial&)> split_by_kind(const Expression& e,
                                                                                        AtomKind kind) {
  std::map<Monomial, ExpressionBuilder, bool (*)(const Monomial&, const Monomial&)> parts(monomial_less);
  for (const auto& t : e.terms()) {
    Monomial key, rest;
    for (const auto& f : t.monomial) {
      if (Atom::from_id(f.atom).kind() == kind) {
        key.push_back(f);
      } else {
        rest.push_back(f);
      }
    }
    parts[key].add(std::move(rest), t.coeff);
  }
  std::map<Monomial, Expression, bool (*)(const Monomial&, const Monomial&)> out(monomial_less);
  for (auto& [k, b] : parts) out.emplace(k, b.build());
  return out;
}

}  // namespace jetvar
