#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jetvar/expression.hpp"
#include "jetvar/fields.hpp"
#include "jetvar/problem.hpp"
#include "jetvar/variational.hpp"

namespace jetvar::cli {

// Indices in problem files are 1-based: base directions, tensor slots, algebra
// basis elements, components y[i; ...] and parameters xi[P; ...] (P <= n for
// xi^mu, n < P for the algebra part).

struct GeneratorSpec {
  std::string name;
  std::string kind;  // symbolic | natural | vertical | horizontal | explicit
  GaugeGenerator generator;
  int line = 0;
};

struct CheckSpec {
  std::string kind;
  std::vector<std::string> words;  // positional arguments before '='
  std::optional<Expression> expected;
  std::map<std::string, std::string> options;  // key=value after the expression
  int line = 0;

  double number(const std::string& key, double fallback) const;
};

struct ProblemFile {
  std::shared_ptr<JetProblem> problem;
  std::string name;
  Expression lagrangian;
  std::string lagrangian_source;
  std::vector<GeneratorSpec> generators;
  std::optional<ConnectionValue> connection;
  std::vector<CheckSpec> checks;

  const GeneratorSpec& generator(const std::string& name) const;  // SemanticError if absent
};

// ParseError for syntax, SemanticError for undeclared labels and order overflow.
ProblemFile parse_problem(const std::string& text);
ProblemFile load_problem(const std::string& path);

// Expression in problem-file syntax against an existing problem (no macros or index variables).
Expression parse_expression(const JetProblem& p, const std::string& text);

std::string render_plain(const JetProblem& p, const Expression& e);
std::string render_latex(const JetProblem& p, const Expression& e);
std::string component_name(const JetProblem& p, int component);

enum class Format { Plain, Latex, Json };

struct RunOptions {
  IbpMode ibp_mode = IbpMode::Symmetric;
  std::uint64_t seed = 1;
  std::optional<double> tol;
  std::optional<int> max_order;
  Format format = Format::Plain;
  bool force = false;
};

struct RunResult {
  int exit_code = 0;
  std::string output;
  std::vector<VerificationReport> reports;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"el", "momentum", "current", "superpotential", "bianchi", "verify", "all"};
  return c;
}

// Exit codes: 0 success, 1 parse or semantic error, 2 failed certificate or verification.
RunResult run_command(const std::string& cmd, ProblemFile& file, const RunOptions& opt);

}  // namespace jetvar::cli
