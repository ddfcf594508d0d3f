#include "jetvar/jet.hpp"

#include <mutex>

#include "jetvar/errors.hpp"

namespace jetvar {

namespace {

struct CallKey {
  AtomId atom;
  int sigma;
  friend bool operator==(const CallKey&, const CallKey&) = default;
};

struct CallKeyHash {
  std::size_t operator()(const CallKey& k) const { return std::hash<std::uint64_t>{}((std::uint64_t{k.atom} << 4) | k.sigma); }
};

struct CallEntry {
  Expression value;
  int order;  // highest jet order of any leaf
};

std::mutex& cache_mutex() {
  static auto* m = new std::mutex();
  return *m;
}

absl::flat_hash_map<CallKey, CallEntry, CallKeyHash>& call_cache() {
  static auto* c = new absl::flat_hash_map<CallKey, CallEntry, CallKeyHash>();
  return *c;
}

int max_leaf_order(const Expression& e) {
  int best = 0;
  for (Atom a : e.leaf_atoms()) {
    if (a.is_jet()) best = std::max(best, a.multi_index().order());
  }
  return best;
}

Expression atom_derivative(const JetProblem& p, Atom a, int sigma) {
  switch (a.kind()) {
    case AtomKind::BaseCoord:
      return a.index() == static_cast<std::uint32_t>(sigma) ? Expression(1) : Expression();
    case AtomKind::FieldJet:
      return Expression(p.jet(static_cast<int>(a.index()), a.multi_index().plus(sigma)));
    case AtomKind::ParamJet: {
      MultiIndex next = a.multi_index().plus(sigma);
      if (next.order() > p.cap()) {
        throw OrderOverflow("parameter jet order " + std::to_string(next.order()) + " exceeds cap " +
                            std::to_string(p.cap()));
      }
      return Expression(Atom::param(static_cast<int>(a.index()), next));
    }
    case AtomKind::OpaqueCall: {
      if (a.args().empty()) return Expression();
      {
        std::lock_guard<std::mutex> lock(cache_mutex());
        auto it = call_cache().find({a.id(), sigma});
        if (it != call_cache().end()) {
          if (it->second.order > p.cap()) {
            throw OrderOverflow("derivative of " + a.debug_string() + " exceeds cap " + std::to_string(p.cap()));
          }
          return it->second.value;
        }
      }
      const OpaqueFunction& f = function(a.index());
      const auto& args = a.args();
      Expression result;
      for (int slot = 0; slot < static_cast<int>(args.size()); ++slot) {
        Expression inner = total_derivative(p, args[slot], sigma);
        if (inner.is_zero()) continue;
        if (!f.partial) throw MissingPartial(f.name + " has no registered partial for slot " + std::to_string(slot));
        result += f.partial(std::span<const Expression>(args.data(), args.size()), slot) * inner;
      }
      std::lock_guard<std::mutex> lock(cache_mutex());
      call_cache().emplace(CallKey{a.id(), sigma}, CallEntry{result, max_leaf_order(result)});
      return result;
    }
  }
  return Expression();
}

}  // namespace

Expression total_derivative(const JetProblem& p, const Expression& e, int sigma) {
  if (sigma < 0 || sigma >= p.n()) throw DimensionMismatch("direction " + std::to_string(sigma) + " out of range");
  ExpressionBuilder builder;
  absl::flat_hash_map<AtomId, Expression> dcache;
  for (const auto& t : e.terms()) {
    for (std::size_t i = 0; i < t.monomial.size(); ++i) {
      const Factor& f = t.monomial[i];
      auto it = dcache.find(f.atom);
      if (it == dcache.end()) it = dcache.emplace(f.atom, atom_derivative(p, Atom::from_id(f.atom), sigma)).first;
      const Expression& d = it->second;
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

Expression total_derivative(const JetProblem& p, const Expression& e, const MultiIndex& alpha) {
  if (alpha.dim() != p.n()) throw DimensionMismatch("multi-index dimension differs from n");
  Expression r = e;
  for (int mu = 0; mu < p.n(); ++mu) {
    for (int k = 0; k < alpha[mu]; ++k) r = total_derivative(p, r, mu);
  }
  return r;
}

HorizontalDensity HorizontalDensity::top(int n, Expression l) {
  HorizontalDensity d;
  d.n_ = n;
  d.degree_ = n;
  d.comps_ = {std::move(l)};
  return d;
}

HorizontalDensity HorizontalDensity::current(std::vector<Expression> eps) {
  HorizontalDensity d;
  d.n_ = static_cast<int>(eps.size());
  d.degree_ = d.n_ - 1;
  d.comps_ = std::move(eps);
  return d;
}

HorizontalDensity HorizontalDensity::superpotential(int n, std::vector<Expression> eta) {
  if (static_cast<int>(eta.size()) != n * n) throw DimensionMismatch("superpotential table must be n x n");
  for (int s = 0; s < n; ++s) {
    for (int m = 0; m < n; ++m) {
      if (eta[s * n + m] != -eta[m * n + s]) throw DomainError("superpotential table is not antisymmetric");
    }
  }
  HorizontalDensity d;
  d.n_ = n;
  d.degree_ = n - 2;
  d.comps_ = std::move(eta);
  return d;
}

HorizontalDensity HorizontalDensity::superpotential_upper(int n, const std::map<std::pair<int, int>, Expression>& eta) {
  std::vector<Expression> full(n * n);
  for (const auto& [k, v] : eta) {
    auto [s, m] = k;
    if (s >= m) throw DomainError("superpotential_upper expects sigma < mu keys");
    full[s * n + m] = v;
    full[m * n + s] = -v;
  }
  return superpotential(n, std::move(full));
}

const Expression& HorizontalDensity::scalar() const {
  if (degree_ != n_) throw DegreeError("not a top-degree density");
  return comps_[0];
}

const Expression& HorizontalDensity::eps(int sigma) const {
  if (degree_ != n_ - 1) throw DegreeError("not an (n-1)-density");
  return comps_.at(sigma);
}

const Expression& HorizontalDensity::eta(int sigma, int mu) const {
  if (degree_ != n_ - 2) throw DegreeError("not an (n-2)-density");
  return comps_.at(sigma * n_ + mu);
}

HorizontalDensity dH(const JetProblem& p, const HorizontalDensity& d) {
  if (d.n() != p.n()) throw DimensionMismatch("density dimension differs from problem");
  int n = p.n();
  if (d.degree() == n) throw DegreeError("d_H of a top-degree density");
  if (d.degree() == n - 1) {
    ExpressionBuilder b;
    for (int s = 0; s < n; ++s) b.add(total_derivative(p, d.eps(s), s));
    return HorizontalDensity::top(n, b.build());
  }
  if (d.degree() == n - 2) {
    std::vector<Expression> eps(n);
    for (int s = 0; s < n; ++s) {
      ExpressionBuilder b;
      for (int m = 0; m < n; ++m) {
        if (!d.eta(s, m).is_zero()) b.add(total_derivative(p, d.eta(s, m), m));
      }
      eps[s] = b.build();
    }
    return HorizontalDensity::current(std::move(eps));
  }
  throw DegreeError("unsupported density degree " + std::to_string(d.degree()));
}

std::map<JetKey, Expression> dV_fiber_partials(const Expression& l) {
  std::map<JetKey, Expression> out;
  for (Atom a : l.leaf_atoms()) {
    if (a.kind() != AtomKind::FieldJet) continue;
    Expression d = partial(l, a);
    if (!d.is_zero()) out.emplace(JetKey{static_cast<int>(a.index()), a.multi_index()}, std::move(d));
  }
  return out;
}

}  // namespace jetvar
