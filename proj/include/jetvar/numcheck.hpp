#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jetvar/expression.hpp"
#include "jetvar/jet.hpp"
#include "jetvar/problem.hpp"

namespace jetvar {

struct SamplingBox {
  double lo = -1.0;
  double hi = 1.0;
  double metric_perturbation = 0.3;
  double min_abs_det = 0.1;
  double constant_lo = 0.5;  // constants are sampled positive
  double constant_hi = 2.0;
  int max_retries = 200;
};

struct JetPoint {
  NumericPoint values;
  std::uint64_t seed = 0;
};

// Binds every atom in `atoms` (leaves of calls included). Deterministic in the
// seed. Metric order-0 jets are diag(signature) plus a symmetric perturbation,
// with |det| >= min_abs_det and the sign of det matching the signature.
JetPoint sample_jet_point(const JetProblem& p, std::uint64_t seed, const std::vector<Atom>& atoms,
                          const SamplingBox& box = {});
// Convenience: all leaves reached by the expressions.
std::vector<Atom> collect_leaves(const std::vector<Expression>& exprs);

struct VerificationReport {
  std::string id;
  int samples = 0;
  int skipped = 0;
  double max_abs_residual = 0;
  double max_rel_residual = 0;
  double tolerance = 0;
  bool pass = false;
  std::uint64_t seed = 0;
  std::string note;
};

double default_tolerance(const Expression& e);

// Relative residual |e(P)| / (1 + max_term |term(P)|) over `samples` points.
VerificationReport verify_identity(const JetProblem& p, const Expression& e, int samples, double tol, std::uint64_t seed,
                                   const std::string& id = "identity", const SamplingBox& box = {});
VerificationReport verify_identities(const JetProblem& p, const std::vector<Expression>& es, int samples, double tol,
                                     std::uint64_t seed, const std::string& id, const SamplingBox& box = {});

// Polynomial section x -> (y^i(x), xi^P(x)); components absent from the map are zero.
struct Section {
  std::map<int, Expression> fields;  // component -> polynomial in base coordinates
  std::map<int, Expression> params;  // parameter -> polynomial in base coordinates
  NumericPoint constants;            // values for constant atoms
};

// Binds the jets of the section at base point x0.
NumericPoint section_jets(const JetProblem& p, const Section& s, const std::vector<double>& x0,
                          const std::vector<Atom>& atoms);

// Compares D_sigma e along the section with a central difference (step 1e-4,
// one Richardson level) of e along the section.
VerificationReport finite_difference_check(const JetProblem& p, const Expression& e, int sigma, const Section& s,
                                           const std::vector<double>& x0, double tol, double step = 1e-4);

// ---------------------------------------------------------------------------
// Exact zero testing

enum class ZeroVerdict { CanonicalZero, ZeroModuloRelations, NonZero };

const char* to_string(ZeroVerdict v);

struct ZeroTestOptions {
  int trials = 2;
  std::uint64_t seed = 0x5eed;
};

inline constexpr std::uint64_t kZeroTestPrime = (std::uint64_t{1} << 61) - 1;

// Canonical zero, or (when relation-bearing calls such as ginv/sqrtg occur)
// evaluation modulo a 61-bit prime at random points of the metric variety.
ZeroVerdict zero_test(const JetProblem& p, const Expression& e, const ZeroTestOptions& opt = {});
bool has_relation_calls(const Expression& e);

// Modular point for the given leaves: metric jets sampled as M^T diag(signature) M.
ModularPoint sample_modular_point(const JetProblem& p, std::uint64_t seed, const std::vector<Atom>& atoms);

// Value of D_sigma e at a modular point without building the derivative.
// The point must also bind the jets one order higher than those in e.
std::optional<std::uint64_t> evaluate_total_derivative_mod(const JetProblem& p, const Expression& e, int sigma,
                                                           const ModularPoint& point,
                                                           absl::flat_hash_map<AtomId, std::uint64_t>& cache);
// Leaves of e plus their one-step total derivatives.
std::vector<Atom> derivative_leaves(const JetProblem& p, const Expression& e);

// ---------------------------------------------------------------------------
// On-shell points

struct OnShellResult {
  bool solved = false;
  JetPoint point;
  std::string note;
  double residual = 0;
};

// Starts from a sampled point for `atoms` and solves E_i = 0 together with the
// formal derivatives D_beta E_i needed up to jet order `order` for the
// highest jet atoms (Newton on a linearized system).
OnShellResult sample_on_shell_point(const JetProblem& p, const std::map<int, Expression>& euler, int order,
                                    std::uint64_t seed, std::vector<Atom> atoms, const SamplingBox& box = {});

}  // namespace jetvar
