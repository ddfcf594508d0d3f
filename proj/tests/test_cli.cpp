#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "jetvar/cli.hpp"
#include "jetvar/errors.hpp"

using namespace jetvar;
using namespace jetvar::cli;
using json = nlohmann::json;

namespace {

const std::string kMechanics = R"([problem]
n = 1
order = 1

[fields]
u : scalar

[lagrangian]
L = 1/2*y[1;1]^2
)";

const std::string kDir = JETVAR_PROBLEMS_DIR;

json run_json(const std::string& cmd, ProblemFile& f, RunOptions o = {}) {
  o.format = Format::Json;
  return json::parse(run_command(cmd, f, o).output);
}

// Every string leaf of a result subtree is a rendered expression.
void collect(const json& j, std::vector<std::string>& out) {
  if (j.is_string()) out.push_back(j.get<std::string>());
  if (j.is_structured())
    for (const auto& v : j) collect(v, out);
}

}  // namespace

TEST(Parse, MinimalFile) {
  auto f = parse_problem(kMechanics);
  EXPECT_EQ(f.problem->n(), 1);
  EXPECT_EQ(f.problem->num_components(), 1);
  Expression y1(f.problem->jet(0, MultiIndex{1}));
  EXPECT_EQ(f.lagrangian, Rational(1, 2) * y1 * y1);
}

TEST(Parse, UndeclaredComponentNamesIt) {
  std::string text = kMechanics;
  text.replace(text.find("y[1;1]^2"), 8, "y[2;1]^2");
  try {
    parse_problem(text);
    FAIL() << "expected SemanticError";
  } catch (const SemanticError& e) {
    EXPECT_NE(std::string(e.what()).find("component 2"), std::string::npos) << e.what();
  }
}

TEST(Parse, UnclosedHeaderPointsAtBracket) {
  std::string text = kMechanics;
  text.replace(text.find("[lagrangian]"), 12, "[lagrangian");
  try {
    parse_problem(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 8);
    EXPECT_EQ(e.column(), 12);
  }
}

TEST(Parse, OrderAboveDeclaration) {
  std::string text = kMechanics;
  text.replace(text.find("y[1;1]^2"), 8, "y[1;2]^2");
  EXPECT_THROW(parse_problem(text), SemanticError);
}

TEST(Parse, DiagnosticsCarryPositions) {
  std::string text = kMechanics;
  text.replace(text.find("1/2*"), 4, "1/2*)");
  try {
    parse_problem(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 9);
    EXPECT_EQ(e.column(), 9);
  }
  EXPECT_THROW(parse_problem("[problem]\nn = 1\norder = 1\n[bogus]\n"), ParseError);
}

TEST(Run, ElOnMechanics) {
  auto f = parse_problem(kMechanics);
  auto doc = run_json("el", f);
  EXPECT_EQ(doc["results"]["euler_lagrange"]["u"], "-u[;2]");
  EXPECT_EQ(doc["exit_code"], 0);
  EXPECT_EQ(parse_expression(*f.problem, doc["results"]["euler_lagrange"]["u"].get<std::string>()),
            -Expression(f.problem->jet(0, MultiIndex{2})));
}

TEST(Run, MaxwellSuperpotential) {
  auto f = load_problem(kDir + "/maxwell_4d_flat.jet");
  auto r = run_command("superpotential", f, {});
  EXPECT_EQ(r.exit_code, 0);
  for (const auto& rep : r.reports) EXPECT_TRUE(rep.pass) << rep.id;
  auto doc = run_json("superpotential", f);
  const auto& eta = doc["results"]["superpotentials"]["gauge"]["eta"];
  // -F^{12} chi with F^{12} = eta^{11} eta^{22} (A_2,1 - A_1,2)
  EXPECT_EQ(parse_expression(*f.problem, eta["1,2"].get<std::string>()),
            parse_expression(*f.problem, "(A[1,2;1,0,0,0] - A[1,1;0,1,0,0])*xiA[1]"));
}

TEST(Run, VerifyBundledYangMills) {
  auto f = load_problem(kDir + "/yangmills_abelian_2d.jet");
  auto r = run_command("verify", f, {});
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_GE(r.reports.size(), 5u);
  for (const auto& rep : r.reports) EXPECT_TRUE(rep.pass) << rep.id;
}

TEST(Run, ExitCodes) {
  auto f = parse_problem(kMechanics + "\n[checks]\nel u = u[;2]\n");
  EXPECT_EQ(run_command("verify", f, {}).exit_code, 2);
  auto g = parse_problem(kMechanics + "\n[checks]\nel u = -u[;2]\n");
  EXPECT_EQ(run_command("verify", g, {}).exit_code, 0);
  // arbitrary base diffeomorphisms do not preserve a flat-space Lagrangian
  auto h = parse_problem(
      "[problem]\nn = 2\norder = 1\n[fields]\nu : scalar\n[lagrangian]\nL = y[1;1,0]^2 + y[1;0,1]^2\n"
      "[generators]\nd = natural\n");
  auto doc = run_json("superpotential", h);
  EXPECT_EQ(doc["exit_code"], 2);
  ASSERT_FALSE(doc["errors"].empty());
  EXPECT_NE(doc["errors"][0]["message"].get<std::string>().find("NotASymmetry"), std::string::npos);
  // forcing it through leaves eps - eps~ without a divergence form
  RunOptions forced;
  forced.force = true;
  auto f2 = run_json("superpotential", h, forced);
  EXPECT_EQ(f2["exit_code"], 2);
  EXPECT_NE(f2["errors"][0]["message"].get<std::string>().find("CertificateFailure"), std::string::npos);
}

TEST(Run, DeterministicStructuredOutput) {
  auto f = load_problem(kDir + "/wave_2d.jet");
  RunOptions o;
  o.format = Format::Json;
  o.seed = 7;
  auto a = run_command("all", f, o).output;
  auto g = load_problem(kDir + "/wave_2d.jet");
  auto b = run_command("all", g, o).output;
  EXPECT_EQ(a, b);
}

TEST(Render, RoundTripsComputedObjects) {
  for (const char* name : {"maxwell_4d_flat", "yangmills_abelian_2d", "second_order"}) {
    auto f = load_problem(kDir + "/" + name + ".jet");
    auto doc = run_json("all", f);
    std::vector<std::string> rendered;
    collect(doc["results"]["euler_lagrange"], rendered);
    collect(doc["results"]["currents"], rendered);
    for (const auto& [g, s] : doc["results"]["superpotentials"].items()) {
      collect(s["eps_tilde"], rendered);
      collect(s["eta"], rendered);
    }
    ASSERT_FALSE(rendered.empty()) << name;
    for (const auto& text : rendered) {
      Expression e = parse_expression(*f.problem, text);
      EXPECT_EQ(render_plain(*f.problem, e), text) << name;
    }
  }
}

TEST(Render, RoundTripsLagrangians) {
  for (const char* name : {"yangmills_curved", "einstein_hilbert_komar", "maxwell_4d_flat"}) {
    auto f = load_problem(kDir + "/" + name + ".jet");
    EXPECT_EQ(parse_expression(*f.problem, render_plain(*f.problem, f.lagrangian)), f.lagrangian) << name;
  }
}

TEST(Render, Latex) {
  auto f = parse_problem(kMechanics);
  Expression y1(f.problem->jet(0, MultiIndex{1}));
  EXPECT_EQ(render_latex(*f.problem, Rational(1, 2) * y1 * y1), "\\frac{1}{2} {u_{,1}}^{2}");
}
