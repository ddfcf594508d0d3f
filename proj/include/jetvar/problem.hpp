#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jetvar/expression.hpp"
#include "jetvar/multi_index.hpp"
#include "jetvar/opaque.hpp"

namespace jetvar {

enum class FieldKind { TensorDensity, PrincipalConnection };
enum class IndexSymmetry { None, Symmetric, Antisymmetric };

// Geometric type of a field, which fixes its lift.
struct GeometricDescriptor {
  FieldKind kind = FieldKind::TensorDensity;
  int contravariant = 0;
  int covariant = 0;
  Rational weight;
  IndexSymmetry symmetry = IndexSymmetry::None;

  static GeometricDescriptor scalar() { return {}; }
  static GeometricDescriptor tensor(int p, int q, Rational w = Rational(0), IndexSymmetry s = IndexSymmetry::None) {
    return {FieldKind::TensorDensity, p, q, w, s};
  }
  static GeometricDescriptor connection() { return {FieldKind::PrincipalConnection, 0, 1, Rational(0), IndexSymmetry::None}; }

  int rank() const { return contravariant + covariant; }
};

struct FieldDecl {
  std::string label;
  GeometricDescriptor descriptor;
  bool background = false;  // fixed field: no field equation, never varied
  bool metric = false;      // supplies ginv/sqrtg
  std::vector<int> signature;  // metric sampling pattern, e.g. (1,-1,-1,-1)

  // Filled by JetProblem::add_field.
  int first_component = 0;
  // Index tuple of each stored component. Tensors list contravariant slots
  // first; connections store (A, mu).
  std::vector<std::vector<int>> components;
};

// Component reference with the sign picked up by index symmetries.
struct ComponentRef {
  int component;
  int sign;
};

class JetProblem {
 public:
  static constexpr int kDefaultCap = 6;

  JetProblem(int n, int order);

  int n() const { return n_; }
  int order() const { return order_; }
  int cap() const { return cap_; }
  void set_cap(int cap);

  // --- gauge algebra
  void set_algebra(std::vector<std::string> basis, const std::map<std::tuple<int, int, int>, Rational>& c);
  int algebra_dim() const { return static_cast<int>(basis_.size()); }
  const std::vector<std::string>& algebra_basis() const { return basis_; }
  const Rational& c(int a, int b, int cc) const;
  bool is_abelian() const;
  // Antisymmetry in the lower pair and the Jacobi identity.
  void validate_algebra() const;

  // --- fields
  int add_field(FieldDecl decl);
  const std::vector<FieldDecl>& fields() const { return fields_; }
  const FieldDecl& field(const std::string& label) const;
  std::optional<int> find_field(const std::string& label) const;
  int num_components() const { return num_components_; }
  // Field index and tuple of a global component.
  std::pair<int, const std::vector<int>*> component_info(int component) const;
  bool is_background_component(int component) const;
  std::vector<int> dynamical_components() const;
  // nullopt for identically-zero components (repeated antisymmetric slot).
  std::optional<ComponentRef> component(int field, const std::vector<int>& indices) const;
  Expression field_jet(int field, const std::vector<int>& indices, const MultiIndex& alpha) const;
  Atom jet(int component, const MultiIndex& alpha) const;

  // --- symmetry parameters: xi^mu for mu < n, then xi^A
  int num_params() const { return n_ + algebra_dim(); }
  Atom xi(int mu, const MultiIndex& alpha) const;
  Atom xiA(int a, const MultiIndex& alpha) const;
  Atom base(int mu) const;
  MultiIndex zero() const { return MultiIndex(n_); }
  MultiIndex unit(int mu) const { return MultiIndex::unit(n_, mu); }

  // --- metric
  const MetricFamily* metric() const { return metric_ ? &*metric_ : nullptr; }
  int metric_field() const { return metric_field_; }

  // --- named constants and numeric tables
  Atom constant(const std::string& name);
  std::optional<Atom> find_constant(const std::string& name) const;
  const std::map<std::string, Atom>& constants() const { return constants_; }
  void set_table(const std::string& name, std::vector<Rational> values, std::vector<int> shape);
  const std::vector<Rational>* table(const std::string& name) const;
  const std::vector<int>* table_shape(const std::string& name) const;

  // Highest field and param jet order allowed by the declared problem.
  void check_order(const Expression& e, const std::string& what) const;

 private:
  void check_multi_index(const MultiIndex& alpha) const;

  int n_;
  int order_;
  int cap_ = kDefaultCap;
  std::vector<std::string> basis_;
  std::vector<Rational> c_;
  std::vector<FieldDecl> fields_;
  std::vector<int> component_field_;
  int num_components_ = 0;
  std::optional<MetricFamily> metric_;
  int metric_field_ = -1;
  std::map<std::string, Atom> constants_;
  std::map<std::string, std::pair<std::vector<Rational>, std::vector<int>>> tables_;
};

}  // namespace jetvar
