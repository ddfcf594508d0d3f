#include <sstream>

#include "jetvar/cli.hpp"
#include "jetvar/errors.hpp"
#include "jetvar/opaque.hpp"

namespace jetvar::cli {

namespace {

std::string counts(const MultiIndex& a) {
  std::string s;
  for (int k = 0; k < a.dim(); ++k) s += (k ? "," : "") + std::to_string(a[k]);
  return s;
}

std::string indices(const std::vector<int>& idx) {
  std::string s;
  for (std::size_t k = 0; k < idx.size(); ++k) s += (k ? "," : "") + std::to_string(idx[k] + 1);
  return s;
}

// Call atoms: metric functions print in index form when they act on the problem's metric.
std::optional<std::pair<std::string, std::vector<int>>> metric_call(const JetProblem& p, Atom a) {
  const OpaqueFunction& f = function(a.index());
  if (!is_metric_function(a.index()) || !p.metric() || a.args() != p.metric()->args()) return std::nullopt;
  if (f.name == "ginv") {
    int n = p.n();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (p.metric()->ginv(i, j) == Expression(a)) return std::make_pair(f.name, std::vector<int>{i, j});
  }
  return std::make_pair(f.name, std::vector<int>{});
}

std::string atom_plain(const JetProblem& p, Atom a) {
  switch (a.kind()) {
    case AtomKind::BaseCoord:
      return "x[" + std::to_string(a.index() + 1) + "]";
    case AtomKind::FieldJet: {
      auto [f, idx] = p.component_info(static_cast<int>(a.index()));
      const FieldDecl& d = p.fields()[f];
      const MultiIndex& al = a.multi_index();
      if (idx->empty()) return al.is_zero() ? d.label : d.label + "[;" + counts(al) + "]";
      return d.label + "[" + indices(*idx) + (al.is_zero() ? "" : ";" + counts(al)) + "]";
    }
    case AtomKind::ParamJet: {
      int P = static_cast<int>(a.index());
      const MultiIndex& al = a.multi_index();
      std::string head = P < p.n() ? "xi[" + std::to_string(P + 1) : "xiA[" + std::to_string(P - p.n() + 1);
      return head + (al.is_zero() ? "" : ";" + counts(al)) + "]";
    }
    case AtomKind::OpaqueCall: {
      if (is_constant_atom(a)) return function(a.index()).name;
      if (auto m = metric_call(p, a)) {
        if (m->first == "ginv") return "ginv(" + indices(m->second) + ")";
        return m->first;
      }
      const OpaqueFunction& f = function(a.index());
      std::string s = f.name + "(";
      for (std::size_t k = 0; k < a.args().size(); ++k) s += (k ? ", " : "") + render_plain(p, a.args()[k]);
      return s + ")";
    }
  }
  return "?";
}

std::string atom_latex(const JetProblem& p, Atom a) {
  switch (a.kind()) {
    case AtomKind::BaseCoord:
      return "x^{" + std::to_string(a.index() + 1) + "}";
    case AtomKind::FieldJet: {
      auto [f, idx] = p.component_info(static_cast<int>(a.index()));
      const FieldDecl& d = p.fields()[f];
      const MultiIndex& al = a.multi_index();
      std::string up, down;
      int contra = d.descriptor.kind == FieldKind::PrincipalConnection ? 1 : d.descriptor.contravariant;
      for (std::size_t k = 0; k < idx->size(); ++k) {
        (static_cast<int>(k) < contra ? up : down) += std::to_string((*idx)[k] + 1);
      }
      std::string s = d.label;
      if (!up.empty()) s += "^{" + up + "}";
      std::string der;
      for (int k = 0; k < al.dim(); ++k)
        for (int r = 0; r < al[k]; ++r) der += std::to_string(k + 1);
      if (!down.empty() || !der.empty()) s += "_{" + down + (der.empty() ? "" : "," + der) + "}";
      return s;
    }
    case AtomKind::ParamJet: {
      int P = static_cast<int>(a.index());
      std::string s = P < p.n() ? "\\xi^{" + std::to_string(P + 1) + "}" : "\\xi^{A" + std::to_string(P - p.n() + 1) + "}";
      std::string der;
      const MultiIndex& al = a.multi_index();
      for (int k = 0; k < al.dim(); ++k)
        for (int r = 0; r < al[k]; ++r) der += std::to_string(k + 1);
      return der.empty() ? s : s + "_{," + der + "}";
    }
    case AtomKind::OpaqueCall: {
      if (is_constant_atom(a)) return "\\mathrm{" + function(a.index()).name + "}";
      if (auto m = metric_call(p, a)) {
        if (m->first == "ginv") return "g^{" + std::to_string(m->second[0] + 1) + std::to_string(m->second[1] + 1) + "}";
        return "\\sqrt{|g|}";
      }
      const OpaqueFunction& f = function(a.index());
      std::string s = "\\operatorname{" + f.name + "}\\left(";
      for (std::size_t k = 0; k < a.args().size(); ++k) s += (k ? ", " : "") + render_latex(p, a.args()[k]);
      return s + "\\right)";
    }
  }
  return "?";
}

template <typename AtomFn, typename PowFn, typename CoeffFn>
std::string render(const Expression& e, AtomFn atom, PowFn power, CoeffFn coeff, const std::string& times) {
  if (e.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& t : e.terms()) {
    Rational c = t.coeff;
    bool neg = c.sign() < 0;
    if (neg) c = -c;
    out += first ? (neg ? "-" : "") : (neg ? " - " : " + ");
    first = false;
    std::vector<std::string> parts;
    if (t.monomial.empty() || c != Rational(1)) parts.push_back(coeff(c));
    for (const auto& f : t.monomial) parts.push_back(power(atom(Atom::from_id(f.atom)), f.exponent));
    for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? times : "") + parts[k];
  }
  return out;
}

}  // namespace

std::string component_name(const JetProblem& p, int component) { return atom_plain(p, p.jet(component, p.zero())); }

std::string render_plain(const JetProblem& p, const Expression& e) {
  return render(
      e, [&](Atom a) { return atom_plain(p, a); },
      [](const std::string& s, int k) { return k == 1 ? s : s + "^" + std::to_string(k); },
      [](const Rational& c) { return c.to_string(); }, "*");
}

std::string render_latex(const JetProblem& p, const Expression& e) {
  return render(
      e, [&](Atom a) { return atom_latex(p, a); },
      [](const std::string& s, int k) { return k == 1 ? s : "{" + s + "}^{" + std::to_string(k) + "}"; },
      [](const Rational& c) {
        if (c.is_integer()) return c.to_string();
        std::string s = c.to_string();
        auto slash = s.find('/');
        return "\\frac{" + s.substr(0, slash) + "}{" + s.substr(slash + 1) + "}";
      },
      " ");
}

}  // namespace jetvar::cli
