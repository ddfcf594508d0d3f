#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jetvar/multi_index.hpp"

namespace jetvar {

class Expression;

enum class AtomKind : std::uint8_t { BaseCoord = 0, FieldJet = 1, ParamJet = 2, OpaqueCall = 3 };

using AtomId = std::uint32_t;
using FunctionId = std::uint32_t;

struct AtomData;

// Handle to an interned atom: a base coordinate x^sigma, a field jet y^i_alpha,
// a symmetry-parameter jet xi^P_alpha, or a call to a registered opaque function.
// Equal atoms share one id, so handle equality is content equality.
class Atom {
 public:
  Atom() = default;

  static Atom base(int sigma);
  static Atom field(int component, const MultiIndex& alpha);
  static Atom param(int parameter, const MultiIndex& alpha);
  static Atom call(FunctionId function, std::vector<Expression> args);
  // Looks up an atom without interning it.
  static std::optional<Atom> find_field(int component, const MultiIndex& alpha);
  static std::optional<Atom> find_param(int parameter, const MultiIndex& alpha);

  static Atom from_id(AtomId id) { return Atom(id); }

  AtomId id() const { return id_; }
  bool valid() const { return id_ != kInvalid; }
  const AtomData& data() const;

  AtomKind kind() const;
  // Direction, field component, parameter index or function id.
  std::uint32_t index() const;
  const MultiIndex& multi_index() const;
  const std::vector<Expression>& args() const;
  // Jet order: |alpha| for jets, highest field-jet order among the leaves of a call.
  int order() const;
  // Non-call atoms reachable through call arguments (sorted by id); {self} for non-calls.
  const std::vector<AtomId>& leaves() const;

  bool is_jet() const { return kind() == AtomKind::FieldJet || kind() == AtomKind::ParamJet; }

  friend bool operator==(Atom a, Atom b) { return a.id_ == b.id_; }
  // Content order: BaseCoord < FieldJet < ParamJet < OpaqueCall, then index,
  // then graded-lex multi-index, then call arguments.
  friend std::strong_ordering operator<=>(Atom a, Atom b);

  std::string debug_string() const;

 private:
  static constexpr AtomId kInvalid = 0xffffffffu;
  explicit Atom(AtomId id) : id_(id) {}
  AtomId id_ = kInvalid;
};

struct AtomData {
  AtomKind kind{};
  std::uint32_t index = 0;
  MultiIndex alpha;
  std::vector<Expression> args;
  int order = 0;
  std::vector<AtomId> leaves;
  std::size_t hash = 0;
};

bool atom_less(AtomId a, AtomId b);
std::strong_ordering atom_compare(AtomId a, AtomId b);

// ---------------------------------------------------------------------------
// Opaque functions

using PartialRule = std::function<Expression(std::span<const Expression> args, int slot)>;
using RealEvaluator = std::function<double(std::span<const double> args)>;
// Evaluation modulo a prime; std::nullopt when the point is singular.
using ModularEvaluator =
    std::function<std::optional<std::uint64_t>(std::span<const std::uint64_t> args, std::uint64_t prime)>;

struct OpaqueFunction {
  std::string name;
  std::vector<int> tags;  // integer parameters distinguishing family members, e.g. matrix position
  int arity = 0;
  PartialRule partial;
  RealEvaluator evaluate;
  ModularEvaluator evaluate_mod;
  // Values obey algebraic relations that canonical forms do not see
  // (e.g. an inverse matrix times the matrix is the identity).
  bool has_relations = false;
  std::string latex;
};

// Registers `f` or returns the id of an existing function with the same name, tags and arity.
FunctionId register_function(OpaqueFunction f);
const OpaqueFunction& function(FunctionId id);
std::optional<FunctionId> find_function(const std::string& name, const std::vector<int>& tags, int arity);

}  // namespace jetvar

template <>
struct std::hash<jetvar::Atom> {
  std::size_t operator()(jetvar::Atom a) const { return std::hash<std::uint32_t>{}(a.id()); }
};
