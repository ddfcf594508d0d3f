#pragma once

#include <map>
#include <vector>

#include "jetvar/expression.hpp"
#include "jetvar/jet.hpp"
#include "jetvar/problem.hpp"

namespace jetvar {

// xi^sigma(x) d_sigma + Xi^i d_i on Y. Xi^i may depend on x, order-0 field
// atoms and (in symbolic mode) parameter jets.
struct ProjectableVectorField {
  std::vector<Expression> xi;  // n entries
  std::vector<Expression> Xi;  // one per field component

  // Throws DomainError if xi depends on fiber atoms (when projectable is required).
  void validate(const JetProblem& p, bool require_projectable = true) const;
};

enum class ProlongMethod { Recursive, Closed };

// Coefficients Xi^i_alpha of d/dy^i_alpha in j_r Xi, for every component and
// |alpha| <= r. Also valid for fields whose xi depends on y.
std::map<JetKey, Expression> prolong(const JetProblem& p, const ProjectableVectorField& v, int r,
                                     ProlongMethod method = ProlongMethod::Recursive);

// Right-invariant generator on the structure bundle: base part xi^mu and
// algebra part xi^A. Symbolic mode uses parameter jets.
struct GaugeGenerator {
  std::vector<Expression> xi;   // n
  std::vector<Expression> xiA;  // algebra dimension
  bool symbolic = false;

  static GaugeGenerator zero(const JetProblem& p);
  // xi^mu and xi^A all parameters.
  static GaugeGenerator symbolic_full(const JetProblem& p);
  // xi^mu = 0, xi^A parameters (pure gauge).
  static GaugeGenerator vertical(const JetProblem& p);
  // xi^mu parameters, xi^A = 0.
  static GaugeGenerator natural(const JetProblem& p);
  // xi^mu parameters, xi^A = omega^A_mu xi^mu.
  static GaugeGenerator horizontal(const JetProblem& p, const std::vector<Expression>& omega);
  static GaugeGenerator explicit_field(std::vector<Expression> xi, std::vector<Expression> xiA);
};

// Principal connection components omega^A_mu, row-major (A, mu).
struct ConnectionValue {
  std::vector<Expression> omega;
  const Expression& at(const JetProblem& p, int a, int mu) const { return omega.at(a * p.n() + mu); }

  static ConnectionValue flat(const JetProblem& p);
  // References to the order-0 jets of a connection field.
  static ConnectionValue from_field(const JetProblem& p, int field);
};

// Fiber components Xi-hat^i of the gauge-natural lift, one per component.
using LiftTable = std::vector<Expression>;

LiftTable lift(const JetProblem& p, const GaugeGenerator& g);
Expression lift_component(const JetProblem& p, const GaugeGenerator& g, int component);
ProjectableVectorField lifted_field(const JetProblem& p, const GaugeGenerator& g);

// Sign and index conventions, fixed in one place:
//   tensor density T (p up, q down, weight w):
//     Xi-hat = sum_up T^{..rho..} D_rho xi^a - sum_down T_{..rho..} D_b xi^rho - w T D_rho xi^rho
//   connection:
//     Xi-hat(omega^A_mu) = -omega^A_nu D_mu xi^nu + D_mu xi^A + c^A_{BC} omega^B_mu xi^C
//   Lie derivative:  pounds^i = xi^sigma y^i_sigma - Xi-hat^i
// so pounds(omega) = xi^nu F^A_{nu mu} - nabla_mu xi^A_v and, for xi^mu = 0,
// pounds(omega^A_mu) = -(D_mu xi^A + c^A_{BC} omega^B_mu xi^C).
std::vector<Expression> generalized_lie_derivative(const JetProblem& p, const GaugeGenerator& g, const LiftTable& lift);
// j_s pounds: D_alpha pounds^i
Expression prolonged_lie_derivative(const JetProblem& p, const std::vector<Expression>& pounds, int component,
                                    const MultiIndex& alpha);

struct SplitVectorField {
  GaugeGenerator horizontal;     // (xi^mu, omega^A_mu xi^mu)
  std::vector<Expression> vertical;  // xi^A_v = xi^A - omega^A_mu xi^mu
};

SplitVectorField split(const JetProblem& p, const GaugeGenerator& g, const ConnectionValue& omega);
// Xi_h + Xi_v == Xi as canonical forms.
bool recomposes(const JetProblem& p, const GaugeGenerator& g, const SplitVectorField& s);

// [g1, g2]: base part the Lie bracket, algebra part
// xi1^mu d_mu xi2^A - xi2^mu d_mu xi1^A + c^A_{BC} xi1^B xi2^C. ModeError in symbolic mode.
GaugeGenerator bracket(const JetProblem& p, const GaugeGenerator& a, const GaugeGenerator& b);
// Commutator of vector fields on Y.
ProjectableVectorField vector_field_bracket(const JetProblem& p, const ProjectableVectorField& a,
                                            const ProjectableVectorField& b);

// Monomials of parameter degree other than one, for the linearity check.
bool is_linear_in_params(const Expression& e);

}  // namespace jetvar
