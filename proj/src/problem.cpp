#include "jetvar/problem.hpp"

#include <algorithm>

#include "jetvar/errors.hpp"

namespace jetvar {

namespace {

void enumerate_tuples(int rank, int n, IndexSymmetry sym, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == rank) {
    out.push_back(cur);
    return;
  }
  int start = 0;
  if (!cur.empty() && sym == IndexSymmetry::Symmetric) start = cur.back();
  if (!cur.empty() && sym == IndexSymmetry::Antisymmetric) start = cur.back() + 1;
  for (int v = start; v < n; ++v) {
    cur.push_back(v);
    enumerate_tuples(rank, n, sym, cur, out);
    cur.pop_back();
  }
}

}  // namespace

JetProblem::JetProblem(int n, int order) : n_(n), order_(order) {
  if (n < 1 || n > kMaxBaseDim) throw DimensionMismatch("base dimension must be in 1.." + std::to_string(kMaxBaseDim));
  if (order < 1) throw DomainError("jet order must be at least 1");
  cap_ = std::max(kDefaultCap, order);
}

void JetProblem::set_cap(int cap) {
  if (cap < order_) throw DomainError("order cap below declared jet order");
  cap_ = cap;
}

void JetProblem::set_algebra(std::vector<std::string> basis, const std::map<std::tuple<int, int, int>, Rational>& c) {
  basis_ = std::move(basis);
  int d = algebra_dim();
  c_.assign(static_cast<std::size_t>(d) * d * d, Rational(0));
  for (const auto& [k, v] : c) {
    auto [a, b, cc] = k;
    if (a < 0 || b < 0 || cc < 0 || a >= d || b >= d || cc >= d) throw DimensionMismatch("structure constant index");
    c_[(a * d + b) * d + cc] = v;
  }
}

const Rational& JetProblem::c(int a, int b, int cc) const {
  int d = algebra_dim();
  return c_.at((static_cast<std::size_t>(a) * d + b) * d + cc);
}

bool JetProblem::is_abelian() const {
  return std::all_of(c_.begin(), c_.end(), [](const Rational& r) { return r.is_zero(); });
}

void JetProblem::validate_algebra() const {
  int d = algebra_dim();
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      for (int e = 0; e < d; ++e) {
        if (c(a, b, e) != -c(a, e, b)) {
          throw SemanticError("structure constants not antisymmetric in the lower indices");
        }
      }
    }
  }
  // [[B,C],E] + cyclic = 0  <=>  sum_D c^A_{DE} c^D_{BC} + c^A_{DB} c^D_{CE} + c^A_{DC} c^D_{EB} = 0
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      for (int cc = 0; cc < d; ++cc) {
        for (int e = 0; e < d; ++e) {
          Rational s(0);
          for (int k = 0; k < d; ++k) {
            s += c(a, k, e) * c(k, b, cc) + c(a, k, b) * c(k, cc, e) + c(a, k, cc) * c(k, e, b);
          }
          if (!s.is_zero()) throw SemanticError("structure constants violate the Jacobi identity");
        }
      }
    }
  }
}

int JetProblem::add_field(FieldDecl decl) {
  if (find_field(decl.label)) throw SemanticError("duplicate field label '" + decl.label + "'");
  const auto& d = decl.descriptor;
  if (d.contravariant < 0 || d.covariant < 0) throw SemanticError("negative valence");
  decl.components.clear();
  if (d.kind == FieldKind::PrincipalConnection) {
    if (algebra_dim() == 0) throw SemanticError("connection field '" + decl.label + "' needs a declared algebra");
    for (int a = 0; a < algebra_dim(); ++a)
      for (int mu = 0; mu < n_; ++mu) decl.components.push_back({a, mu});
  } else {
    std::vector<int> cur;
    enumerate_tuples(d.rank(), n_, d.rank() < 2 ? IndexSymmetry::None : d.symmetry, cur, decl.components);
  }
  decl.first_component = num_components_;
  int idx = static_cast<int>(fields_.size());
  for (std::size_t k = 0; k < decl.components.size(); ++k) component_field_.push_back(idx);
  num_components_ += static_cast<int>(decl.components.size());
  if (decl.metric) {
    if (metric_) throw SemanticError("only one metric field may be declared");
    if (d.kind != FieldKind::TensorDensity || d.contravariant != 0 || d.covariant != 2 ||
        d.symmetry != IndexSymmetry::Symmetric || !d.weight.is_zero()) {
      throw SemanticError("metric field '" + decl.label + "' must be a symmetric tensor(0,2) of weight 0");
    }
    if (decl.signature.empty()) decl.signature.assign(n_, 1);
    if (static_cast<int>(decl.signature.size()) != n_) throw SemanticError("metric signature length differs from n");
    int sign = 1;
    for (int s : decl.signature) {
      if (s != 1 && s != -1) throw SemanticError("metric signature entries must be +1 or -1");
      sign *= s;
    }
    std::vector<Expression> upper;
    for (int a = 0; a < n_; ++a) {
      for (int b = a; b < n_; ++b) {
        auto it = std::find(decl.components.begin(), decl.components.end(), std::vector<int>{a, b});
        int comp = decl.first_component + static_cast<int>(it - decl.components.begin());
        upper.emplace_back(Atom::field(comp, zero()));
      }
    }
    metric_.emplace(n_, std::move(upper), sign);
    metric_field_ = idx;
  }
  fields_.push_back(std::move(decl));
  return idx;
}

const FieldDecl& JetProblem::field(const std::string& label) const {
  auto f = find_field(label);
  if (!f) throw SemanticError("undeclared field '" + label + "'");
  return fields_[*f];
}

std::optional<int> JetProblem::find_field(const std::string& label) const {
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (fields_[i].label == label) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::pair<int, const std::vector<int>*> JetProblem::component_info(int component) const {
  if (component < 0 || component >= num_components_) throw UnknownAtom("field component " + std::to_string(component));
  int f = component_field_[component];
  return {f, &fields_[f].components[component - fields_[f].first_component]};
}

bool JetProblem::is_background_component(int component) const { return fields_[component_info(component).first].background; }

std::vector<int> JetProblem::dynamical_components() const {
  std::vector<int> out;
  for (int i = 0; i < num_components_; ++i) {
    if (!is_background_component(i)) out.push_back(i);
  }
  return out;
}

std::optional<ComponentRef> JetProblem::component(int field, const std::vector<int>& indices) const {
  const FieldDecl& f = fields_.at(field);
  const auto& d = f.descriptor;
  int rank = d.kind == FieldKind::PrincipalConnection ? 2 : d.rank();
  if (static_cast<int>(indices.size()) != rank) {
    throw SemanticError("field '" + f.label + "' takes " + std::to_string(rank) + " indices, got " +
                        std::to_string(indices.size()));
  }
  std::vector<int> key = indices;
  int sign = 1;
  if (d.kind == FieldKind::PrincipalConnection) {
    if (key[0] < 0 || key[0] >= algebra_dim()) throw SemanticError("algebra index out of range in '" + f.label + "'");
    if (key[1] < 0 || key[1] >= n_) throw SemanticError("base index out of range in '" + f.label + "'");
  } else {
    for (int v : key) {
      if (v < 0 || v >= n_) throw SemanticError("index out of range in '" + f.label + "'");
    }
    if (rank >= 2 && d.symmetry == IndexSymmetry::Symmetric) std::sort(key.begin(), key.end());
    if (rank >= 2 && d.symmetry == IndexSymmetry::Antisymmetric) {
      // bubble sort tracking the permutation sign
      for (std::size_t i = 0; i < key.size(); ++i) {
        for (std::size_t j = 0; j + 1 < key.size() - i; ++j) {
          if (key[j] > key[j + 1]) {
            std::swap(key[j], key[j + 1]);
            sign = -sign;
          } else if (key[j] == key[j + 1]) {
            return std::nullopt;
          }
        }
      }
      for (std::size_t j = 0; j + 1 < key.size(); ++j) {
        if (key[j] == key[j + 1]) return std::nullopt;
      }
    }
  }
  auto it = std::find(f.components.begin(), f.components.end(), key);
  if (it == f.components.end()) throw SemanticError("no component for indices in '" + f.label + "'");
  return ComponentRef{f.first_component + static_cast<int>(it - f.components.begin()), sign};
}

Expression JetProblem::field_jet(int field, const std::vector<int>& indices, const MultiIndex& alpha) const {
  auto ref = component(field, indices);
  if (!ref) return Expression();
  Expression e(jet(ref->component, alpha));
  return ref->sign > 0 ? e : -e;
}

void JetProblem::check_multi_index(const MultiIndex& alpha) const {
  if (alpha.dim() != n_) {
    throw DimensionMismatch("multi-index of dimension " + std::to_string(alpha.dim()) + " in a problem with n = " +
                            std::to_string(n_));
  }
  if (alpha.order() > cap_) {
    throw OrderOverflow("jet order " + std::to_string(alpha.order()) + " exceeds cap " + std::to_string(cap_));
  }
}

Atom JetProblem::jet(int component, const MultiIndex& alpha) const {
  if (component < 0 || component >= num_components_) throw UnknownAtom("field component " + std::to_string(component));
  check_multi_index(alpha);
  return Atom::field(component, alpha);
}

Atom JetProblem::xi(int mu, const MultiIndex& alpha) const {
  if (mu < 0 || mu >= n_) throw UnknownAtom("base parameter index " + std::to_string(mu));
  check_multi_index(alpha);
  return Atom::param(mu, alpha);
}

Atom JetProblem::xiA(int a, const MultiIndex& alpha) const {
  if (a < 0 || a >= algebra_dim()) throw UnknownAtom("gauge parameter index " + std::to_string(a));
  check_multi_index(alpha);
  return Atom::param(n_ + a, alpha);
}

Atom JetProblem::base(int mu) const {
  if (mu < 0 || mu >= n_) throw UnknownAtom("base coordinate " + std::to_string(mu));
  return Atom::base(mu);
}

Atom JetProblem::constant(const std::string& name) {
  auto it = constants_.find(name);
  if (it != constants_.end()) return it->second;
  Atom a = constant_atom(name);
  constants_.emplace(name, a);
  return a;
}

std::optional<Atom> JetProblem::find_constant(const std::string& name) const {
  auto it = constants_.find(name);
  if (it == constants_.end()) return std::nullopt;
  return it->second;
}

void JetProblem::set_table(const std::string& name, std::vector<Rational> values, std::vector<int> shape) {
  std::size_t size = 1;
  for (int s : shape) size *= static_cast<std::size_t>(s);
  if (size != values.size()) throw DimensionMismatch("table '" + name + "' has the wrong number of entries");
  tables_[name] = {std::move(values), std::move(shape)};
}

const std::vector<Rational>* JetProblem::table(const std::string& name) const {
  auto it = tables_.find(name);
  return it == tables_.end() ? nullptr : &it->second.first;
}

const std::vector<int>* JetProblem::table_shape(const std::string& name) const {
  auto it = tables_.find(name);
  return it == tables_.end() ? nullptr : &it->second.second;
}

void JetProblem::check_order(const Expression& e, const std::string& what) const {
  for (Atom a : e.leaf_atoms()) {
    if ((a.kind() == AtomKind::FieldJet || a.kind() == AtomKind::ParamJet) && a.multi_index().order() > cap_) {
      throw OrderOverflow(what + " reaches jet order " + std::to_string(a.multi_index().order()) + " above cap " +
                          std::to_string(cap_));
    }
  }
}

}  // namespace jetvar
