#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jetvar/expression.hpp"
#include "jetvar/fields.hpp"
#include "jetvar/jet.hpp"
#include "jetvar/numcheck.hpp"
#include "jetvar/problem.hpp"

namespace jetvar {

// Highest field jet order reached by L.
int lagrangian_order(const Expression& l);

enum class ELMethod { AlternatingSum, Momentum };

// E_i = sum_alpha (-1)^|alpha| D_alpha (dL/dy^i_alpha), for the dynamical
// components (every component when include_background is set).
std::map<int, Expression> euler_lagrange(const JetProblem& p, const Expression& l, ELMethod method = ELMethod::AlternatingSum,
                                         bool include_background = false);

// p^{beta mu}_i for |beta| <= s-1, built downwards from the top order:
//   g^alpha = f^alpha - sum_nu D_nu p^{alpha nu}   (g^alpha = f^alpha at |alpha| = s)
//   p^{(alpha-mu) mu} = (alpha_mu / |alpha|) g^alpha
// with f^alpha = dL/dy_alpha; E = g^0.
struct Momentum {
  int order = 0;
  std::map<JetKey, std::vector<Expression>> table;  // (i, beta) -> mu -> p^{beta mu}_i
  std::map<int, Expression> euler;                   // g^0_i

  const Expression& get(int component, const MultiIndex& beta, int mu) const;
};

Momentum momentum(const JetProblem& p, const Expression& l, bool include_background = true);
// f^alpha - sum_nu D_nu p^{alpha nu} - sum_mu p^{(alpha-mu) mu} for 1 <= |alpha| <= s and
// f^0 - sum_nu D_nu p^{0 nu} - E; all entries are zero for a consistent table.
std::vector<Expression> momentum_residuals(const JetProblem& p, const Expression& l, const Momentum& m);

// eps^sigma = - sum_{i,beta} p^{beta sigma}_i D_beta pounds^i + xi^sigma L
HorizontalDensity noether_current(const JetProblem& p, const Expression& l, const Momentum& m, const GaugeGenerator& g,
                                  const std::vector<Expression>& pounds);
HorizontalDensity noether_current(const JetProblem& p, const Expression& l, const GaugeGenerator& g, const LiftTable& lift);

// mu = sum_i pounds^i E_i
Expression contract(const std::vector<Expression>& pounds, const std::map<int, Expression>& euler);

// xi^sigma d_sigma L + sum Xi^i_alpha dL/dy^i_alpha + L D_sigma xi^sigma
Expression direct_lie_derivative(const JetProblem& p, const Expression& l, const GaugeGenerator& g, const LiftTable& lift);

// Both summands of  L_{j Xi} lambda = -sum pounds^i E_i + D_sigma eps^sigma.
struct FirstVariation {
  Expression el_part;
  HorizontalDensity boundary;
};
FirstVariation variational_lie_derivative(const JetProblem& p, const Expression& l, const GaugeGenerator& g,
                                          const LiftTable& lift);

enum class IbpMode { Symmetric, Lex };

const char* to_string(IbpMode m);

struct IbpOptions {
  IbpMode mode = IbpMode::Symmetric;
  std::optional<std::chrono::steady_clock::time_point> deadline;
  ZeroTestOptions zero;
  // Certificates above this many terms are checked by modular evaluation
  // instead of being expanded.
  std::size_t symbolic_certificate_limit = 20000;
};

struct DecompositionResult {
  HorizontalDensity input;
  HorizontalDensity reduced;   // parameter jets of order 0 only
  HorizontalDensity boundary;  // one degree lower
  // input - reduced - dH(boundary), when formed symbolically
  std::vector<Expression> certificate;
  ZeroVerdict verdict = ZeroVerdict::CanonicalZero;
};

// Degree n:   T = reduced + D_sigma boundary^sigma
// Degree n-1: eps^sigma = reduced^sigma + D_mu boundary^{sigma mu}
// NotLinear for parameter-quadratic monomials; DecompositionObstructed when an
// (n-1)-density has a top part that is not a divergence; Cancelled past the
// deadline; CertificateFailure if the certificate does not vanish.
DecompositionResult ibp_decompose(const JetProblem& p, const HorizontalDensity& t, const IbpOptions& opt = {});

// Zero test for base + sum_sigma D_sigma div[sigma]; expanded symbolically when
// small and relation-free, otherwise evaluated modulo a prime without forming
// the derivatives.
ZeroVerdict divergence_zero_test(const JetProblem& p, const std::vector<Expression>& base,
                                 const std::vector<std::vector<Expression>>& div, const IbpOptions& opt,
                                 std::vector<Expression>* symbolic = nullptr);

struct BianchiResult {
  std::map<int, Expression> coefficients;  // parameter -> coefficient of xi^P in the reduced part
  std::map<int, ZeroVerdict> verdicts;
  bool holds = true;
};

BianchiResult bianchi_check(const JetProblem& p, const Expression& l, const GaugeGenerator& g, const IbpOptions& opt = {});

struct SuperpotentialOptions {
  IbpOptions ibp;
  bool force = false;  // skip the symmetry precondition
};

struct SuperpotentialResult {
  HorizontalDensity current;          // eps
  HorizontalDensity reduced_current;  // eps-tilde
  HorizontalDensity superpotential;   // eta
  Expression mu;                      // pounds . E
  std::map<int, Expression> bianchi;  // reduced part of mu
  ZeroVerdict symmetry = ZeroVerdict::CanonicalZero;
  ZeroVerdict strong_conservation = ZeroVerdict::CanonicalZero;  // D_sigma(eps - eps-tilde)
  ZeroVerdict certificate = ZeroVerdict::CanonicalZero;          // D_mu eta - (eps - eps-tilde)
  ZeroVerdict leftover = ZeroVerdict::CanonicalZero;             // reduced part of the second decomposition
  bool forced = false;
};

// NotASymmetry unless the direct Lie derivative vanishes (and background fields
// are invariant) or opt.force; CertificateFailure if an identity fails.
SuperpotentialResult superpotential(const JetProblem& p, const Expression& l, const GaugeGenerator& g,
                                    const SuperpotentialOptions& opt = {});

// Zero test for the symmetry precondition: direct Lie derivative and the Lie
// derivative of every background component.
ZeroVerdict symmetry_verdict(const JetProblem& p, const Expression& l, const GaugeGenerator& g, const LiftTable& lift,
                             const ZeroTestOptions& opt = {});

}  // namespace jetvar
