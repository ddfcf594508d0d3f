#include "jetvar/variational.hpp"

#include <algorithm>

#include "jetvar/errors.hpp"

namespace jetvar {

namespace {

void check_deadline(const IbpOptions& opt) {
  if (opt.deadline && std::chrono::steady_clock::now() > *opt.deadline) throw Cancelled("decomposition deadline exceeded");
}

std::vector<int> components_of(const JetProblem& p, bool include_background) {
  if (!include_background) return p.dynamical_components();
  std::vector<int> all(p.num_components());
  for (int i = 0; i < p.num_components(); ++i) all[i] = i;
  return all;
}

int param_degree_check(const Expression& e) {
  int best = 0;
  for (const auto& t : e.terms()) {
    int d = monomial_degree_in(t.monomial, AtomKind::ParamJet);
    if (d > 1) throw NotLinear("monomial of degree " + std::to_string(d) + " in the symmetry parameters");
    int k = 0;
    for (const auto& f : t.monomial) {
      Atom a = Atom::from_id(f.atom);
      if (a.kind() == AtomKind::ParamJet) {
        if (f.exponent != 1) throw NotLinear("negative power of a symmetry parameter");
        k = a.multi_index().order();
      }
    }
    best = std::max(best, k);
  }
  return best;
}

// Coefficients of the parameter atoms; the parameter-free part is returned separately.
struct ParamSplit {
  std::map<Atom, Expression> coeff;
  Expression free;
};

ParamSplit split_params(const Expression& e) {
  ParamSplit s;
  for (auto& [key, c] : split_by_kind(e, AtomKind::ParamJet)) {
    if (key.empty()) {
      s.free = c;
    } else {
      s.coeff.emplace(Atom::from_id(key.front().atom), c);
    }
  }
  return s;
}

std::size_t total_size(const std::vector<Expression>& es) {
  std::size_t n = 0;
  for (const auto& e : es) n += e.size();
  return n;
}

ZeroVerdict worst(ZeroVerdict a, ZeroVerdict b) {
  if (a == ZeroVerdict::NonZero || b == ZeroVerdict::NonZero) return ZeroVerdict::NonZero;
  if (a == ZeroVerdict::ZeroModuloRelations || b == ZeroVerdict::ZeroModuloRelations) return ZeroVerdict::ZeroModuloRelations;
  return ZeroVerdict::CanonicalZero;
}

}  // namespace

int lagrangian_order(const Expression& l) {
  int s = 0;
  for (Atom a : l.leaf_atoms())
    if (a.kind() == AtomKind::FieldJet) s = std::max(s, a.multi_index().order());
  return s;
}

std::map<int, Expression> euler_lagrange(const JetProblem& p, const Expression& l, ELMethod method, bool include_background) {
  int s = lagrangian_order(l);
  if (2 * s > p.cap()) {
    throw OrderOverflow("Euler-Lagrange expressions of a Lagrangian of order " + std::to_string(s) + " exceed cap " +
                        std::to_string(p.cap()));
  }
  if (method == ELMethod::Momentum) {
    Momentum m = momentum(p, l, include_background);
    return m.euler;
  }
  std::map<int, Expression> out;
  for (int i : components_of(p, include_background)) out[i] = Expression();
  std::map<int, ExpressionBuilder> acc;
  for (const auto& [key, f] : dV_fiber_partials(l)) {
    if (!out.contains(key.component)) continue;
    Rational sign = key.alpha.order() % 2 ? Rational(-1) : Rational(1);
    acc[key.component].add(total_derivative(p, f, key.alpha), sign);
  }
  for (auto& [i, b] : acc) out[i] = b.build();
  return out;
}

const Expression& Momentum::get(int component, const MultiIndex& beta, int mu) const {
  static const Expression zero;
  auto it = table.find(JetKey{component, beta});
  if (it == table.end()) return zero;
  return it->second.at(mu);
}

Momentum momentum(const JetProblem& p, const Expression& l, bool include_background) {
  int n = p.n();
  Momentum m;
  m.order = lagrangian_order(l);
  if (2 * m.order > p.cap()) throw OrderOverflow("momentum recursion would exceed cap " + std::to_string(p.cap()));
  auto f = dV_fiber_partials(l);
  for (int i : components_of(p, include_background)) {
    auto fget = [&](const MultiIndex& a) -> Expression {
      auto it = f.find(JetKey{i, a});
      return it == f.end() ? Expression() : it->second;
    };
    for (int k = m.order; k >= 1; --k) {
      for (const auto& alpha : multi_indices_of_order(n, k)) {
        ExpressionBuilder g;
        g.add(fget(alpha));
        if (k < m.order) {
          for (int nu = 0; nu < n; ++nu) {
            const Expression& q = m.get(i, alpha, nu);
            if (!q.is_zero()) g.add(total_derivative(p, q, nu), Rational(-1));
          }
        }
        Expression ga = g.build();
        if (ga.is_zero()) continue;
        for (int mu = 0; mu < n; ++mu) {
          if (alpha[mu] == 0) continue;
          JetKey key{i, alpha.minus(mu)};
          auto it = m.table.find(key);
          if (it == m.table.end()) it = m.table.emplace(key, std::vector<Expression>(n)).first;
          it->second[mu] += Rational(alpha[mu], k) * ga;
        }
      }
    }
    ExpressionBuilder e;
    e.add(fget(p.zero()));
    for (int nu = 0; nu < n; ++nu) {
      const Expression& q = m.get(i, p.zero(), nu);
      if (!q.is_zero()) e.add(total_derivative(p, q, nu), Rational(-1));
    }
    m.euler[i] = e.build();
  }
  return m;
}

std::vector<Expression> momentum_residuals(const JetProblem& p, const Expression& l, const Momentum& m) {
  int n = p.n();
  std::vector<Expression> out;
  auto f = dV_fiber_partials(l);
  for (const auto& [i, e] : m.euler) {
    auto fget = [&](const MultiIndex& a) -> Expression {
      auto it = f.find(JetKey{i, a});
      return it == f.end() ? Expression() : it->second;
    };
    for (int k = 0; k <= m.order; ++k) {
      for (const auto& alpha : multi_indices_of_order(n, k)) {
        ExpressionBuilder r;
        r.add(fget(alpha));
        for (int nu = 0; nu < n; ++nu) {
          const Expression& q = m.get(i, alpha, nu);
          if (!q.is_zero()) r.add(total_derivative(p, q, nu), Rational(-1));
        }
        if (k == 0) {
          r.add(e, Rational(-1));
        } else {
          for (int mu = 0; mu < n; ++mu)
            if (alpha[mu] > 0) r.add(m.get(i, alpha.minus(mu), mu), Rational(-1));
        }
        out.push_back(r.build());
      }
    }
  }
  return out;
}

HorizontalDensity noether_current(const JetProblem& p, const Expression& l, const Momentum& m, const GaugeGenerator& g,
                                  const std::vector<Expression>& pounds) {
  int n = p.n();
  if (static_cast<int>(pounds.size()) != p.num_components()) throw MissingLift("Lie derivative table does not cover every component");
  std::map<JetKey, Expression> dpounds;
  auto d_of = [&](int i, const MultiIndex& beta) -> const Expression& {
    std::vector<MultiIndex> chain;
    MultiIndex cur = beta;
    while (!dpounds.contains(JetKey{i, cur})) {
      if (cur.is_zero()) {
        dpounds.emplace(JetKey{i, cur}, pounds[i]);
        break;
      }
      chain.push_back(cur);
      int s = 0;
      while (cur[s] == 0) ++s;
      cur = cur.minus(s);
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      int s = 0;
      while ((*it)[s] == 0) ++s;
      dpounds.emplace(JetKey{i, *it}, total_derivative(p, dpounds.at(JetKey{i, it->minus(s)}), s));
    }
    return dpounds.at(JetKey{i, beta});
  };
  std::vector<ExpressionBuilder> eps(n);
  for (const auto& [key, row] : m.table) {
    if (pounds[key.component].is_zero()) continue;
    const Expression& d = d_of(key.component, key.alpha);
    if (d.is_zero()) continue;
    for (int s = 0; s < n; ++s) {
      if (!row[s].is_zero()) eps[s].add_product(row[s], d, Rational(-1));
    }
  }
  std::vector<Expression> out(n);
  for (int s = 0; s < n; ++s) {
    if (!g.xi[s].is_zero()) eps[s].add_product(g.xi[s], l);
    out[s] = eps[s].build();
  }
  return HorizontalDensity::current(std::move(out));
}

HorizontalDensity noether_current(const JetProblem& p, const Expression& l, const GaugeGenerator& g, const LiftTable& lift) {
  auto pounds = generalized_lie_derivative(p, g, lift);
  return noether_current(p, l, momentum(p, l), g, pounds);
}

Expression contract(const std::vector<Expression>& pounds, const std::map<int, Expression>& euler) {
  ExpressionBuilder b;
  for (const auto& [i, e] : euler) {
    if (!e.is_zero() && !pounds.at(i).is_zero()) b.add_product(pounds.at(i), e);
  }
  return b.build();
}

Expression direct_lie_derivative(const JetProblem& p, const Expression& l, const GaugeGenerator& g, const LiftTable& lift) {
  int s = lagrangian_order(l);
  ProjectableVectorField v{g.xi, lift};
  auto table = prolong(p, v, s);
  ExpressionBuilder b;
  for (int sigma = 0; sigma < p.n(); ++sigma) {
    if (g.xi[sigma].is_zero()) continue;
    b.add_product(g.xi[sigma], partial(l, p.base(sigma)));
    b.add_product(l, total_derivative(p, g.xi[sigma], sigma));
  }
  for (const auto& [key, f] : dV_fiber_partials(l)) {
    const Expression& xi = table.at(key);
    if (!xi.is_zero()) b.add_product(xi, f);
  }
  return b.build();
}

FirstVariation variational_lie_derivative(const JetProblem& p, const Expression& l, const GaugeGenerator& g,
                                          const LiftTable& lift) {
  auto pounds = generalized_lie_derivative(p, g, lift);
  Momentum m = momentum(p, l, true);
  FirstVariation fv;
  fv.el_part = -contract(pounds, m.euler);
  fv.boundary = noether_current(p, l, m, g, pounds);
  return fv;
}

const char* to_string(IbpMode m) { return m == IbpMode::Symmetric ? "symmetric" : "lex"; }

// ---------------------------------------------------------------------------

ZeroVerdict divergence_zero_test(const JetProblem& p, const std::vector<Expression>& base,
                                 const std::vector<std::vector<Expression>>& div, const IbpOptions& opt,
                                 std::vector<Expression>* symbolic) {
  std::vector<Expression> all = base;
  for (const auto& d : div) all.insert(all.end(), d.begin(), d.end());
  if (total_size(all) <= opt.symbolic_certificate_limit) {
    ZeroVerdict v = ZeroVerdict::CanonicalZero;
    for (std::size_t k = 0; k < base.size(); ++k) {
      ExpressionBuilder b;
      b.add(base[k]);
      for (int s = 0; s < static_cast<int>(div[k].size()); ++s) {
        if (!div[k][s].is_zero()) b.add(total_derivative(p, div[k][s], s));
      }
      Expression e = b.build();
      if (symbolic) symbolic->push_back(e);
      v = worst(v, zero_test(p, e, opt.zero));
    }
    return v;
  }
  std::vector<Atom> leaves = collect_leaves(base);
  for (const auto& d : div)
    for (const auto& e : d) {
      auto dl = derivative_leaves(p, e);
      leaves.insert(leaves.end(), dl.begin(), dl.end());
    }
  int good = 0;
  for (int k = 0; good < std::max(1, opt.zero.trials) && k < opt.zero.trials + 8; ++k) {
    ModularPoint pt = sample_modular_point(p, opt.zero.seed + 7919 * static_cast<std::uint64_t>(k + 1), leaves);
    absl::flat_hash_map<AtomId, std::uint64_t> cache;
    bool singular = false, nonzero = false;
    for (std::size_t c = 0; c < base.size() && !singular && !nonzero; ++c) {
      check_deadline(opt);
      auto v = evaluate_mod(base[c], pt, kZeroTestPrime, &cache);
      if (!v) {
        singular = true;
        break;
      }
      std::uint64_t sum = *v;
      for (int s = 0; s < static_cast<int>(div[c].size()); ++s) {
        if (div[c][s].is_zero()) continue;
        auto d = evaluate_total_derivative_mod(p, div[c][s], s, pt, cache);
        if (!d) {
          singular = true;
          break;
        }
        sum = (sum + *d) % kZeroTestPrime;
      }
      if (!singular && sum != 0) nonzero = true;
    }
    if (nonzero) return ZeroVerdict::NonZero;
    if (!singular) ++good;
  }
  if (good == 0) throw DomainError("no regular modular sample for the certificate");
  return ZeroVerdict::ZeroModuloRelations;
}

namespace {

DecompositionResult ibp_top(const JetProblem& p, const HorizontalDensity& t, const IbpOptions& opt) {
  int n = p.n();
  const Expression& input = t.scalar();
  int top = param_degree_check(input);
  ParamSplit sp = split_params(input);
  std::vector<ExpressionBuilder> boundary(n);
  // coefficients still to process, keyed by parameter atom
  std::map<Atom, ExpressionBuilder> work;
  for (auto& [a, c] : sp.coeff) work[a].add(c);
  for (int k = top; k >= 1; --k) {
    std::vector<Atom> level;
    for (const auto& [a, b] : work)
      if (a.multi_index().order() == k) level.push_back(a);
    for (Atom a : level) {
      check_deadline(opt);
      Expression c = work.at(a).build();
      work.erase(a);
      if (c.is_zero()) continue;
      const MultiIndex& alpha = a.multi_index();
      int param = static_cast<int>(a.index());
      for (int s = 0; s < n; ++s) {
        if (alpha[s] == 0) continue;
        Rational w = opt.mode == IbpMode::Symmetric ? Rational(alpha[s], k) : Rational(1);
        Atom lower = Atom::param(param, alpha.minus(s));
        boundary[s].add_product(c, Expression(lower), w);
        work[lower].add(total_derivative(p, c, s), -w);
        if (opt.mode == IbpMode::Lex) break;
      }
    }
  }
  ExpressionBuilder reduced;
  reduced.add(sp.free);
  for (auto& [a, b] : work) reduced.add_product(b.build(), Expression(a));
  DecompositionResult r;
  r.input = t;
  r.reduced = HorizontalDensity::top(n, reduced.build());
  std::vector<Expression> bd(n);
  for (int s = 0; s < n; ++s) bd[s] = boundary[s].build();
  r.boundary = HorizontalDensity::current(bd);
  std::vector<Expression> neg(n);
  for (int s = 0; s < n; ++s) neg[s] = -bd[s];
  r.verdict = divergence_zero_test(p, {input - r.reduced.scalar()}, {neg}, opt, &r.certificate);
  return r;
}

// Solves sum_{mu: B_mu > 0} h^{sigma mu}_{B - mu} = c^sigma_B at one level for one parameter.
// h is antisymmetric; unknowns are h^{sigma mu}_{B'} with sigma < mu.
struct LevelSolution {
  std::map<std::tuple<MultiIndex, int, int>, Expression> h;  // (B', sigma, mu), sigma < mu
  std::vector<Expression> inconsistent;                       // residual equations that must vanish
};

LevelSolution solve_symmetric(const JetProblem& p, int k, const std::map<std::pair<MultiIndex, int>, Expression>& c) {
  int n = p.n();
  LevelSolution sol;
  auto cget = [&](const MultiIndex& b, int s) -> Expression {
    auto it = c.find({b, s});
    return it == c.end() ? Expression() : it->second;
  };
  for (const auto& bp : multi_indices_of_order(n, k - 1)) {
    for (int s = 0; s < n; ++s) {
      for (int m = s + 1; m < n; ++m) {
        Expression h = Rational(bp[m] + 1, k + 1) * cget(bp.plus(m), s) - Rational(bp[s] + 1, k + 1) * cget(bp.plus(s), m);
        if (!h.is_zero()) sol.h.emplace(std::make_tuple(bp, s, m), std::move(h));
      }
    }
  }
  return sol;
}

LevelSolution solve_lex(const JetProblem& p, int k, const std::map<std::pair<MultiIndex, int>, Expression>& c) {
  int n = p.n();
  std::vector<std::tuple<MultiIndex, int, int>> unknowns;
  for (const auto& bp : multi_indices_of_order(n, k - 1))
    for (int s = 0; s < n; ++s)
      for (int m = s + 1; m < n; ++m) unknowns.emplace_back(bp, s, m);
  std::map<std::tuple<MultiIndex, int, int>, int> col;
  for (std::size_t j = 0; j < unknowns.size(); ++j) col[unknowns[j]] = static_cast<int>(j);
  std::vector<std::vector<Rational>> rows;
  std::vector<Expression> rhs;
  for (const auto& b : multi_indices_of_order(n, k)) {
    for (int s = 0; s < n; ++s) {
      std::vector<Rational> row(unknowns.size());
      for (int m = 0; m < n; ++m) {
        if (m == s || b[m] == 0) continue;
        MultiIndex bp = b.minus(m);
        if (s < m) {
          row[col.at({bp, s, m})] += Rational(1);
        } else {
          row[col.at({bp, m, s})] -= Rational(1);
        }
      }
      auto it = c.find({b, s});
      rows.push_back(std::move(row));
      rhs.push_back(it == c.end() ? Expression() : it->second);
    }
  }
  // reduced row echelon form, pivots in column order
  std::size_t r = 0;
  std::vector<int> pivot_col;
  for (std::size_t j = 0; j < unknowns.size() && r < rows.size(); ++j) {
    std::size_t piv = r;
    while (piv < rows.size() && rows[piv][j].is_zero()) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[piv], rows[r]);
    std::swap(rhs[piv], rhs[r]);
    Rational inv = Rational(1) / rows[r][j];
    for (auto& v : rows[r]) v = v * inv;
    rhs[r] = inv * rhs[r];
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][j].is_zero()) continue;
      Rational f = rows[i][j];
      for (std::size_t q = 0; q < unknowns.size(); ++q) rows[i][q] = rows[i][q] - f * rows[r][q];
      rhs[i] = rhs[i] - f * rhs[r];
    }
    pivot_col.push_back(static_cast<int>(j));
    ++r;
  }
  LevelSolution sol;
  for (std::size_t i = 0; i < pivot_col.size(); ++i) {
    if (!rhs[i].is_zero()) sol.h.emplace(unknowns[pivot_col[i]], rhs[i]);
  }
  for (std::size_t i = pivot_col.size(); i < rows.size(); ++i) {
    if (!rhs[i].is_zero()) sol.inconsistent.push_back(rhs[i]);
  }
  return sol;
}

DecompositionResult ibp_current(const JetProblem& p, const HorizontalDensity& t, const IbpOptions& opt) {
  int n = p.n();
  if (n < 2) throw DegreeError("superpotentials need n >= 2");
  int top = 0;
  std::vector<ParamSplit> parts(n);
  // per component sigma: parameter atom -> pending coefficient
  std::vector<std::map<Atom, ExpressionBuilder>> work(n);
  for (int s = 0; s < n; ++s) {
    top = std::max(top, param_degree_check(t.eps(s)));
    parts[s] = split_params(t.eps(s));
    for (auto& [a, c] : parts[s].coeff) work[s][a].add(c);
  }
  std::map<std::pair<int, int>, ExpressionBuilder> eta;
  ZeroVerdict dropped = ZeroVerdict::CanonicalZero;
  for (int k = top; k >= 1; --k) {
    // gather c^sigma_B per parameter
    std::map<int, std::map<std::pair<MultiIndex, int>, Expression>> level;
    for (int s = 0; s < n; ++s) {
      std::vector<Atom> keys;
      for (const auto& [a, b] : work[s])
        if (a.multi_index().order() == k) keys.push_back(a);
      for (Atom a : keys) {
        Expression c = work[s].at(a).build();
        work[s].erase(a);
        if (!c.is_zero()) level[static_cast<int>(a.index())][{a.multi_index(), s}] = std::move(c);
      }
    }
    for (auto& [param, c] : level) {
      check_deadline(opt);
      LevelSolution sol = opt.mode == IbpMode::Symmetric ? solve_symmetric(p, k, c) : solve_lex(p, k, c);
      // residual of the level equations
      std::map<std::pair<MultiIndex, int>, ExpressionBuilder> res;
      for (const auto& [key, v] : c) res[key].add(v);
      for (const auto& [key, h] : sol.h) {
        const auto& [bp, s, m] = key;
        res[{bp.plus(m), s}].add(h, Rational(-1));
        res[{bp.plus(s), m}].add(h);
      }
      std::vector<Expression> leftovers = sol.inconsistent;
      for (auto& [key, b] : res) {
        Expression e = b.build();
        if (!e.is_zero()) leftovers.push_back(std::move(e));
      }
      for (const auto& e : leftovers) {
        ZeroVerdict v = zero_test(p, e, opt.zero);
        if (v == ZeroVerdict::NonZero) {
          throw DecompositionObstructed("top part of the current at order " + std::to_string(k) +
                                        " is not a divergence (parameter " + std::to_string(param) + ")");
        }
        dropped = worst(dropped, v);
      }
      for (const auto& [key, h] : sol.h) {
        const auto& [bp, s, m] = key;
        Atom lower = Atom::param(param, bp);
        eta[{s, m}].add_product(h, Expression(lower));
        // eps^s -= D_m(h xi_bp) and eps^m -= D_s(-h xi_bp); the top parts cancel above
        work[s][lower].add(total_derivative(p, h, m), Rational(-1));
        work[m][lower].add(total_derivative(p, h, s));
      }
    }
  }
  std::vector<Expression> reduced(n);
  for (int s = 0; s < n; ++s) {
    ExpressionBuilder b;
    b.add(parts[s].free);
    for (auto& [a, c] : work[s]) b.add_product(c.build(), Expression(a));
    reduced[s] = b.build();
  }
  std::map<std::pair<int, int>, Expression> upper;
  for (auto& [key, b] : eta) upper[key] = b.build();
  DecompositionResult r;
  r.input = t;
  r.reduced = HorizontalDensity::current(reduced);
  r.boundary = HorizontalDensity::superpotential_upper(n, upper);
  std::vector<Expression> base(n);
  std::vector<std::vector<Expression>> div(n, std::vector<Expression>(n));
  for (int s = 0; s < n; ++s) {
    base[s] = t.eps(s) - reduced[s];
    for (int m = 0; m < n; ++m) div[s][m] = -r.boundary.eta(s, m);
  }
  r.verdict = worst(dropped, divergence_zero_test(p, base, div, opt, &r.certificate));
  return r;
}

}  // namespace

DecompositionResult ibp_decompose(const JetProblem& p, const HorizontalDensity& t, const IbpOptions& opt) {
  if (t.n() != p.n()) throw DimensionMismatch("density dimension differs from problem");
  DecompositionResult r;
  if (t.degree() == p.n()) {
    r = ibp_top(p, t, opt);
  } else if (t.degree() == p.n() - 1) {
    r = ibp_current(p, t, opt);
  } else {
    throw DegreeError("integration by parts needs degree n or n-1");
  }
  if (r.verdict == ZeroVerdict::NonZero) throw CertificateFailure("decomposition certificate does not vanish");
  return r;
}

// ---------------------------------------------------------------------------

ZeroVerdict symmetry_verdict(const JetProblem& p, const Expression& l, const GaugeGenerator& g, const LiftTable& lift,
                             const ZeroTestOptions& opt) {
  ZeroVerdict v = zero_test(p, direct_lie_derivative(p, l, g, lift), opt);
  auto pounds = generalized_lie_derivative(p, g, lift);
  for (int i = 0; i < p.num_components(); ++i) {
    if (p.is_background_component(i)) v = worst(v, zero_test(p, pounds[i], opt));
  }
  return v;
}

namespace {

std::map<int, Expression> reduced_coefficients(const Expression& reduced) {
  std::map<int, Expression> out;
  for (auto& [a, c] : split_params(reduced).coeff) out[static_cast<int>(a.index())] = c;
  return out;
}

}  // namespace

BianchiResult bianchi_check(const JetProblem& p, const Expression& l, const GaugeGenerator& g, const IbpOptions& opt) {
  auto pounds = generalized_lie_derivative(p, g, lift(p, g));
  auto e = euler_lagrange(p, l, ELMethod::AlternatingSum, true);
  auto d = ibp_decompose(p, HorizontalDensity::top(p.n(), contract(pounds, e)), opt);
  BianchiResult r;
  r.coefficients = reduced_coefficients(d.reduced.scalar());
  for (int k = 0; k < p.num_params(); ++k) {
    auto it = r.coefficients.find(k);
    ZeroVerdict v = it == r.coefficients.end() ? ZeroVerdict::CanonicalZero : zero_test(p, it->second, opt.zero);
    r.verdicts[k] = v;
    if (v == ZeroVerdict::NonZero) r.holds = false;
  }
  return r;
}

SuperpotentialResult superpotential(const JetProblem& p, const Expression& l, const GaugeGenerator& g,
                                    const SuperpotentialOptions& opt) {
  int n = p.n();
  LiftTable lt = lift(p, g);
  auto pounds = generalized_lie_derivative(p, g, lt);
  SuperpotentialResult r;
  r.symmetry = symmetry_verdict(p, l, g, lt, opt.ibp.zero);
  if (r.symmetry == ZeroVerdict::NonZero) {
    if (!opt.force) throw NotASymmetry("the Lagrangian is not invariant under the generator");
    r.forced = true;
  }
  Momentum m = momentum(p, l, true);
  r.current = noether_current(p, l, m, g, pounds);
  r.mu = contract(pounds, m.euler);
  auto d1 = ibp_decompose(p, HorizontalDensity::top(n, r.mu), opt.ibp);
  r.reduced_current = d1.boundary;
  r.bianchi = reduced_coefficients(d1.reduced.scalar());
  std::vector<Expression> x(n);
  for (int s = 0; s < n; ++s) x[s] = r.current.eps(s) - r.reduced_current.eps(s);
  std::vector<std::vector<Expression>> xdiv{x};
  r.strong_conservation = divergence_zero_test(p, {Expression()}, xdiv, opt.ibp);
  if (r.strong_conservation == ZeroVerdict::NonZero && !r.forced) {
    throw CertificateFailure("D_sigma(eps - eps~) does not vanish");
  }
  auto d2 = ibp_decompose(p, HorizontalDensity::current(x), opt.ibp);
  r.superpotential = d2.boundary;
  r.leftover = ZeroVerdict::CanonicalZero;
  for (int s = 0; s < n; ++s) r.leftover = worst(r.leftover, zero_test(p, d2.reduced.eps(s), opt.ibp.zero));
  if (r.leftover == ZeroVerdict::NonZero) throw CertificateFailure("eps - eps~ has a part that is not a divergence");
  std::vector<std::vector<Expression>> div(n, std::vector<Expression>(n));
  for (int s = 0; s < n; ++s)
    for (int mu = 0; mu < n; ++mu) div[s][mu] = -r.superpotential.eta(s, mu);
  r.certificate = divergence_zero_test(p, x, div, opt.ibp);
  if (r.certificate == ZeroVerdict::NonZero) throw CertificateFailure("D_mu eta^{sigma mu} differs from eps - eps~");
  return r;
}

}  // namespace jetvar
