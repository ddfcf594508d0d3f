#include "jetvar/numcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "jetvar/errors.hpp"
#include "jetvar/opaque.hpp"

namespace jetvar {

namespace {

using u64 = std::uint64_t;

u64 mulmod(u64 a, u64 b, u64 p) { return static_cast<u64>(static_cast<unsigned __int128>(a) * b % p); }

u64 powmod(u64 a, u64 e, u64 p) {
  u64 r = 1;
  while (e) {
    if (e & 1) r = mulmod(r, a, p);
    a = mulmod(a, a, p);
    e >>= 1;
  }
  return r;
}

std::vector<Atom> sorted_unique(std::vector<Atom> atoms) {
  std::sort(atoms.begin(), atoms.end());
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  return atoms;
}

// Order-0 metric atoms with their (a, b) position.
std::vector<std::tuple<Atom, int, int>> metric_slots(const JetProblem& p) {
  std::vector<std::tuple<Atom, int, int>> out;
  const MetricFamily* m = p.metric();
  if (!m) return out;
  int n = m->dim();
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      const Expression& e = m->g(a, b);
      out.emplace_back(Atom::from_id(e.terms().front().monomial.front().atom), a, b);
    }
  }
  return out;
}

std::string describe_point(const NumericPoint& pt) {
  std::vector<std::pair<Atom, double>> items;
  for (const auto& [id, v] : pt) items.emplace_back(Atom::from_id(id), v);
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::ostringstream os;
  os.precision(6);
  int k = 0;
  for (const auto& [a, v] : items) {
    if (k++) os << ", ";
    if (k > 12) {
      os << "...";
      break;
    }
    os << a.debug_string() << "=" << v;
  }
  return os.str();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t{out[0]} << 32) | out[1];
}

}  // namespace

std::vector<Atom> collect_leaves(const std::vector<Expression>& exprs) {
  std::vector<Atom> out;
  for (const auto& e : exprs) {
    for (Atom a : e.leaf_atoms()) out.push_back(a);
    for (Atom a : e.atoms()) {
      if (is_constant_atom(a)) out.push_back(a);
    }
  }
  return sorted_unique(std::move(out));
}

JetPoint sample_jet_point(const JetProblem& p, std::uint64_t seed, const std::vector<Atom>& atoms, const SamplingBox& box) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(box.lo, box.hi);
  std::uniform_real_distribution<double> positive(box.constant_lo, box.constant_hi);
  JetPoint pt;
  pt.seed = seed;
  if (const MetricFamily* m = p.metric()) {
    int n = m->dim();
    const auto& sig = p.fields()[p.metric_field()].signature;
    std::uniform_real_distribution<double> pert(-box.metric_perturbation, box.metric_perturbation);
    bool ok = false;
    std::vector<double> g(n * n);
    for (int attempt = 0; attempt < box.max_retries && !ok; ++attempt) {
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
          double v = (a == b ? sig[a] : 0) + pert(rng);
          g[a * n + b] = g[b * n + a] = v;
        }
      }
      double det = determinant(g, n);
      ok = std::abs(det) >= box.min_abs_det && (det > 0) == (m->sign() > 0);
    }
    if (!ok) {
      throw ConstraintUnsatisfiable("no metric sample with |det g| >= " + std::to_string(box.min_abs_det) + " after " +
                                    std::to_string(box.max_retries) + " attempts");
    }
    for (auto [atom, a, b] : metric_slots(p)) pt.values[atom.id()] = g[a * n + b];
  }
  for (Atom a : sorted_unique(atoms)) {
    if (pt.values.contains(a.id())) continue;
    switch (a.kind()) {
      case AtomKind::BaseCoord:
      case AtomKind::FieldJet:
      case AtomKind::ParamJet:
        pt.values[a.id()] = unit(rng);
        break;
      case AtomKind::OpaqueCall:
        if (is_constant_atom(a)) pt.values[a.id()] = positive(rng);
        break;
    }
  }
  return pt;
}

double default_tolerance(const Expression& e) { return e.has_opaque() ? 1e-6 : 1e-8; }

VerificationReport verify_identities(const JetProblem& p, const std::vector<Expression>& es, int samples, double tol,
                                     std::uint64_t seed, const std::string& id, const SamplingBox& box) {
  VerificationReport r;
  r.id = id;
  r.tolerance = tol;
  r.seed = seed;
  auto atoms = collect_leaves(es);
  for (int k = 0; k < samples; ++k) {
    JetPoint pt = sample_jet_point(p, derive_seed(seed, k), atoms, box);
    for (const auto& e : es) {
      double v, scale;
      try {
        v = evaluate(e, pt.values);
        scale = 1 + max_term_magnitude(e, pt.values);
      } catch (const DomainError& err) {
        throw DomainError(std::string(err.what()) + " at sample " + std::to_string(k) + " [" + describe_point(pt.values) + "]");
      }
      r.max_abs_residual = std::max(r.max_abs_residual, std::abs(v));
      r.max_rel_residual = std::max(r.max_rel_residual, std::abs(v) / scale);
    }
    ++r.samples;
  }
  r.pass = r.max_rel_residual <= tol;
  return r;
}

VerificationReport verify_identity(const JetProblem& p, const Expression& e, int samples, double tol, std::uint64_t seed,
                                   const std::string& id, const SamplingBox& box) {
  return verify_identities(p, {e}, samples, tol, seed, id, box);
}

// ---------------------------------------------------------------------------
// Sections

namespace {

// Symbolic value of every requested jet atom along the section, as a polynomial in x.
absl::flat_hash_map<AtomId, Expression> section_values(const JetProblem& p, const Section& s, const std::vector<Atom>& atoms) {
  absl::flat_hash_map<AtomId, Expression> out;
  for (Atom a : atoms) {
    const Expression* src = nullptr;
    if (a.kind() == AtomKind::FieldJet) {
      auto it = s.fields.find(static_cast<int>(a.index()));
      if (it != s.fields.end()) src = &it->second;
    } else if (a.kind() == AtomKind::ParamJet) {
      auto it = s.params.find(static_cast<int>(a.index()));
      if (it != s.params.end()) src = &it->second;
    } else {
      continue;
    }
    Expression v = src ? *src : Expression();
    const MultiIndex& alpha = a.multi_index();
    for (int mu = 0; mu < p.n(); ++mu)
      for (int k = 0; k < alpha[mu]; ++k) v = partial(v, p.base(mu));
    out.emplace(a.id(), std::move(v));
  }
  return out;
}

NumericPoint bind_section(const JetProblem& p, const Section& s, const absl::flat_hash_map<AtomId, Expression>& values,
                          const std::vector<Atom>& atoms, const std::vector<double>& x) {
  NumericPoint base;
  for (int mu = 0; mu < p.n(); ++mu) base[p.base(mu).id()] = x.at(mu);
  NumericPoint pt = base;
  for (const auto& [id, v] : s.constants) pt[id] = v;
  for (Atom a : atoms) {
    auto it = values.find(a.id());
    if (it != values.end()) pt[a.id()] = evaluate(it->second, base);
  }
  return pt;
}

}  // namespace

NumericPoint section_jets(const JetProblem& p, const Section& s, const std::vector<double>& x0, const std::vector<Atom>& atoms) {
  if (static_cast<int>(x0.size()) != p.n()) throw DimensionMismatch("base point dimension differs from n");
  return bind_section(p, s, section_values(p, s, atoms), atoms, x0);
}

VerificationReport finite_difference_check(const JetProblem& p, const Expression& e, int sigma, const Section& s,
                                           const std::vector<double>& x0, double tol, double step) {
  if (static_cast<int>(x0.size()) != p.n()) throw DimensionMismatch("base point dimension differs from n");
  Expression de = total_derivative(p, e, sigma);
  auto atoms = collect_leaves({e, de});
  auto values = section_values(p, s, atoms);
  NumericPoint at0 = bind_section(p, s, values, atoms, x0);
  double symbolic = evaluate(de, at0);
  auto along = [&](double h) {
    std::vector<double> xp = x0, xm = x0;
    xp[sigma] += h;
    xm[sigma] -= h;
    return (evaluate(e, bind_section(p, s, values, atoms, xp)) - evaluate(e, bind_section(p, s, values, atoms, xm))) / (2 * h);
  };
  double numeric = (4 * along(step / 2) - along(step)) / 3;
  VerificationReport r;
  r.id = "finite-difference";
  r.samples = 1;
  r.tolerance = tol;
  r.max_abs_residual = std::abs(symbolic - numeric);
  r.max_rel_residual = r.max_abs_residual / (1 + std::max(std::abs(symbolic), max_term_magnitude(de, at0)));
  r.pass = r.max_rel_residual <= tol;
  std::ostringstream os;
  os.precision(12);
  os << "symbolic " << symbolic << ", difference quotient " << numeric;
  r.note = os.str();
  return r;
}

// ---------------------------------------------------------------------------
// Zero testing

const char* to_string(ZeroVerdict v) {
  switch (v) {
    case ZeroVerdict::CanonicalZero:
      return "canonical-zero";
    case ZeroVerdict::ZeroModuloRelations:
      return "zero-modulo-relations";
    case ZeroVerdict::NonZero:
      return "nonzero";
  }
  return "?";
}

bool has_relation_calls(const Expression& e) {
  for (Atom a : e.atoms()) {
    if (a.kind() == AtomKind::OpaqueCall && function(a.index()).has_relations) return true;
  }
  return false;
}

ModularPoint sample_modular_point(const JetProblem& p, std::uint64_t seed, const std::vector<Atom>& atoms) {
  const u64 prime = kZeroTestPrime;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<u64> field(1, prime - 1);
  ModularPoint pt;
  if (const MetricFamily* m = p.metric()) {
    int n = m->dim();
    const auto& sig = p.fields()[p.metric_field()].signature;
    // g = M^T diag(signature) M, so sign * det g = det(M)^2 is a square
    std::vector<u64> M(n * n);
    for (auto& v : M) v = field(rng);
    for (auto [atom, a, b] : metric_slots(p)) {
      u64 s = 0;
      for (int k = 0; k < n; ++k) {
        u64 t = mulmod(M[k * n + a], M[k * n + b], prime);
        if (sig[k] < 0) t = t ? prime - t : 0;
        s += t;
        if (s >= prime) s -= prime;
      }
      pt[atom.id()] = s;
    }
  }
  for (Atom a : sorted_unique(atoms)) {
    if (pt.contains(a.id())) continue;
    if (a.kind() != AtomKind::OpaqueCall || is_constant_atom(a)) pt[a.id()] = field(rng);
  }
  return pt;
}

ZeroVerdict zero_test(const JetProblem& p, const Expression& e, const ZeroTestOptions& opt) {
  if (e.is_zero()) return ZeroVerdict::CanonicalZero;
  if (!has_relation_calls(e)) return ZeroVerdict::NonZero;
  auto atoms = collect_leaves({e});
  int good = 0;
  for (int k = 0; good < opt.trials && k < opt.trials + 8; ++k) {
    ModularPoint pt = sample_modular_point(p, derive_seed(opt.seed, k), atoms);
    auto v = evaluate_mod(e, pt, kZeroTestPrime);
    if (!v) continue;  // singular sample
    if (*v != 0) return ZeroVerdict::NonZero;
    ++good;
  }
  if (good < opt.trials) throw DomainError("zero test could not find a regular modular sample");
  return ZeroVerdict::ZeroModuloRelations;
}

std::vector<Atom> derivative_leaves(const JetProblem& p, const Expression& e) {
  std::vector<Atom> out = collect_leaves({e});
  std::size_t base = out.size();
  for (std::size_t k = 0; k < base; ++k) {
    Atom a = out[k];
    for (int s = 0; s < p.n(); ++s) {
      if (a.kind() == AtomKind::FieldJet) out.push_back(p.jet(static_cast<int>(a.index()), a.multi_index().plus(s)));
      if (a.kind() == AtomKind::ParamJet) out.push_back(Atom::param(static_cast<int>(a.index()), a.multi_index().plus(s)));
    }
  }
  return sorted_unique(std::move(out));
}

std::optional<std::uint64_t> evaluate_total_derivative_mod(const JetProblem& p, const Expression& e, int sigma,
                                                           const ModularPoint& point,
                                                           absl::flat_hash_map<AtomId, std::uint64_t>& cache) {
  const u64 prime = kZeroTestPrime;
  absl::flat_hash_map<AtomId, u64> dvals;
  auto value = [&](AtomId id) -> std::optional<u64> { return evaluate_mod(Expression(Atom::from_id(id)), point, prime, &cache); };
  auto dvalue = [&](AtomId id) -> std::optional<u64> {
    auto it = dvals.find(id);
    if (it != dvals.end()) return it->second;
    Atom a = Atom::from_id(id);
    u64 v = 0;
    switch (a.kind()) {
      case AtomKind::BaseCoord:
        v = a.index() == static_cast<std::uint32_t>(sigma) ? 1 : 0;
        break;
      case AtomKind::FieldJet:
      case AtomKind::ParamJet: {
        Atom next = a.kind() == AtomKind::FieldJet ? p.jet(static_cast<int>(a.index()), a.multi_index().plus(sigma))
                                                   : Atom::param(static_cast<int>(a.index()), a.multi_index().plus(sigma));
        auto pv = point.find(next.id());
        if (pv == point.end()) throw UnboundAtom(next.debug_string());
        v = pv->second;
        break;
      }
      case AtomKind::OpaqueCall: {
        auto r = evaluate_mod(total_derivative(p, Expression(a), sigma), point, prime, &cache);
        if (!r) return std::nullopt;
        v = *r;
        break;
      }
    }
    dvals.emplace(id, v);
    return v;
  };
  u64 sum = 0;
  for (const auto& t : e.terms()) {
    std::size_t k = t.monomial.size();
    // prefix/suffix products of the factor values avoid dividing by atom values
    std::vector<u64> vals(k), pre(k + 1, 1), suf(k + 1, 1);
    std::vector<u64> reduced(k);  // a^(e-1)
    for (std::size_t i = 0; i < k; ++i) {
      const Factor& f = t.monomial[i];
      auto v = value(f.atom);
      if (!v) return std::nullopt;
      if (f.exponent < 0 && *v == 0) return std::nullopt;
      u64 base = f.exponent < 0 ? powmod(*v, prime - 2, prime) : *v;
      u64 ae = static_cast<u64>(std::abs(f.exponent));
      vals[i] = powmod(base, ae, prime);
      if (f.exponent > 0) {
        reduced[i] = powmod(base, ae - 1, prime);
      } else {
        reduced[i] = powmod(base, ae + 1, prime);  // a^(e-1) = (1/a)^(|e|+1)
      }
    }
    for (std::size_t i = 0; i < k; ++i) pre[i + 1] = mulmod(pre[i], vals[i], prime);
    for (std::size_t i = k; i > 0; --i) suf[i - 1] = mulmod(suf[i], vals[i - 1], prime);
    u64 c = t.coeff.mod(prime);
    for (std::size_t i = 0; i < k; ++i) {
      const Factor& f = t.monomial[i];
      auto dv = dvalue(f.atom);
      if (!dv) return std::nullopt;
      if (*dv == 0) continue;
      u64 ex = f.exponent >= 0 ? static_cast<u64>(f.exponent) % prime : prime - static_cast<u64>(-f.exponent) % prime;
      u64 term = mulmod(mulmod(c, ex, prime), mulmod(pre[i], suf[i + 1], prime), prime);
      term = mulmod(term, mulmod(reduced[i], *dv, prime), prime);
      sum += term;
      if (sum >= prime) sum -= prime;
    }
  }
  return sum;
}

// ---------------------------------------------------------------------------
// On-shell points

OnShellResult sample_on_shell_point(const JetProblem& p, const std::map<int, Expression>& euler, int order,
                                    std::uint64_t seed, std::vector<Atom> atoms, const SamplingBox& box) {
  OnShellResult res;
  // equations grouped by derivative level
  std::map<int, std::vector<Expression>> levels;
  std::vector<Expression> all;
  for (const auto& [comp, e] : euler) {
    if (e.is_zero()) continue;
    int k = 0;
    for (Atom a : e.leaf_atoms())
      if (a.kind() == AtomKind::FieldJet) k = std::max(k, a.multi_index().order());
    int top = std::max(0, order - k);
    for (const auto& beta : multi_indices_up_to(p.n(), top)) {
      Expression q = total_derivative(p, e, beta);
      levels[beta.order()].push_back(q);
      all.push_back(q);
    }
  }
  for (Atom a : collect_leaves(all)) atoms.push_back(a);
  res.point = sample_jet_point(p, seed, atoms, box);
  NumericPoint& pt = res.point.values;
  std::set<AtomId> chosen;
  for (auto& [level, eqs] : levels) {
    std::vector<Atom> unknowns;
    for (const auto& q : eqs) {
      std::optional<Atom> best;
      for (Atom a : q.leaf_atoms()) {
        if (a.kind() != AtomKind::FieldJet || p.is_background_component(static_cast<int>(a.index()))) continue;
        if (chosen.contains(a.id())) continue;
        if (!best || a.multi_index().order() > best->multi_index().order() ||
            (a.multi_index().order() == best->multi_index().order() && *best < a)) {
          best = a;
        }
      }
      if (!best) {
        res.note = "no free jet atom to solve for at derivative level " + std::to_string(level);
        return res;
      }
      chosen.insert(best->id());
      unknowns.push_back(*best);
    }
    int m = static_cast<int>(eqs.size());
    std::vector<std::vector<Expression>> jac(m, std::vector<Expression>(m));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) jac[i][j] = partial(eqs[i], unknowns[j]);
    for (int iter = 0; iter < 30; ++iter) {
      Eigen::VectorXd f(m);
      Eigen::MatrixXd J(m, m);
      double worst = 0;
      for (int i = 0; i < m; ++i) {
        f[i] = evaluate(eqs[i], pt);
        worst = std::max(worst, std::abs(f[i]) / (1 + max_term_magnitude(eqs[i], pt)));
        for (int j = 0; j < m; ++j) J(i, j) = evaluate(jac[i][j], pt);
      }
      if (worst < 1e-14) break;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
      if (lu.rank() < m) {
        res.note = "singular linearization at derivative level " + std::to_string(level);
        return res;
      }
      Eigen::VectorXd dx = lu.solve(-f);
      for (int j = 0; j < m; ++j) pt[unknowns[j].id()] += dx[j];
    }
  }
  double worst = 0;
  for (const auto& q : all) worst = std::max(worst, std::abs(evaluate(q, pt)) / (1 + max_term_magnitude(q, pt)));
  res.residual = worst;
  res.solved = worst < 1e-10;
  if (!res.solved) res.note = "field equations not solved below 1e-10 (residual " + std::to_string(worst) + ")";
  return res;
}

}  // namespace jetvar
