#pragma once

#include <string>
#include <vector>

#include "jetvar/expression.hpp"

namespace jetvar {

// Symbolic constant (e.g. a coupling); a nullary call with no evaluator, so it
// must be bound in numeric points.
Atom constant_atom(const std::string& name);
bool is_constant_atom(Atom a);

// Inverse and density functions of a symmetric n x n matrix g_{ab} given by
// its upper-triangular entries (row-major, a <= b).
//
//   ginv(a,b)  = (g^{-1})^{ab}
//   sqrtg      = sqrt(|det g|)
//
// `sign` is the sign of det g on the intended domain (-1 for Lorentzian n = 4);
// it selects sqrt(sign * det g) in modular evaluation.
class MetricFamily {
 public:
  MetricFamily() = default;
  MetricFamily(int n, std::vector<Expression> upper, int sign);

  int dim() const { return n_; }
  int sign() const { return sign_; }
  const Expression& g(int a, int b) const;
  Expression ginv(int a, int b) const;
  Expression sqrtg() const;
  const std::vector<Expression>& args() const { return upper_; }
  // Slot of g_{ab} within the argument list.
  static int slot(int n, int a, int b);

 private:
  int n_ = 0;
  int sign_ = 1;
  std::vector<Expression> upper_;
  std::vector<Atom> ginv_;
  Atom sqrtg_;
};

bool is_metric_function(FunctionId f);

// Replaces every ginv(a,b) call by cofactor(a,b) * invdet, where invdet is an
// opaque 1/det(g). Used for numeric cross-checks of the opaque rules.
Expression expand_inverse_metric(const Expression& e);

// Numeric helpers on dense row-major matrices (n <= 8).
double determinant(const std::vector<double>& m, int n);
std::vector<double> inverse(const std::vector<double>& m, int n);

// Modular helpers; nullopt when singular.
std::optional<std::uint64_t> determinant_mod(std::vector<std::uint64_t> m, int n, std::uint64_t p);
std::optional<std::vector<std::uint64_t>> inverse_mod(std::vector<std::uint64_t> m, int n, std::uint64_t p);
// Square root modulo p = 3 mod 4; nullopt for non-residues.
std::optional<std::uint64_t> sqrt_mod(std::uint64_t a, std::uint64_t p);

}  // namespace jetvar
