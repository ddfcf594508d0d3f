#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "jetvar/cli.hpp"
#include "jetvar/errors.hpp"

int main(int argc, char** argv) {
  using namespace jetvar::cli;
  CLI::App app{"Variational calculus on jet spaces: Euler-Lagrange, Noether currents, superpotentials"};
  std::string cmd, file, mode = "symmetric", format = "plain", out;
  RunOptions opt;
  std::uint64_t seed = 1;
  double tol = 0;
  int max_order = 0;
  app.add_option("command", cmd, "el | momentum | current | superpotential | bianchi | verify | all")
      ->required()
      ->check(CLI::IsMember(commands()));
  app.add_option("file", file, "problem file")->required();
  app.add_option("--ibp-mode", mode, "integration-by-parts slot rule")->check(CLI::IsMember({"symmetric", "lex"}));
  app.add_option("--seed", seed, "seed for sampled checks");
  auto* tol_opt = app.add_option("--tol", tol, "tolerance for numeric checks");
  auto* order_opt = app.add_option("--max-order", max_order, "jet order cap")->check(CLI::PositiveNumber);
  app.add_option("--format", format, "output format")->check(CLI::IsMember({"plain", "latex", "json-like"}));
  app.add_flag("--force", opt.force, "skip the symmetry precondition");
  app.add_option("--out", out, "write the document to PATH instead of standard output");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  opt.ibp_mode = mode == "lex" ? jetvar::IbpMode::Lex : jetvar::IbpMode::Symmetric;
  opt.seed = seed;
  if (*tol_opt) opt.tol = tol;
  if (*order_opt) opt.max_order = max_order;
  opt.format = format == "latex" ? Format::Latex : format == "json-like" ? Format::Json : Format::Plain;

  ProblemFile pf;
  try {
    pf = load_problem(file);
  } catch (const jetvar::ParseError& e) {
    std::cerr << file << ":" << e.line() << ":" << e.column() << ": " << e.message() << "\n";
    return 1;
  } catch (const jetvar::Error& e) {
    std::cerr << file << ": " << e.what() << "\n";
    return 1;
  }
  RunResult r = run_command(cmd, pf, opt);
  if (out.empty()) {
    std::cout << r.output;
  } else {
    std::ofstream f(out);
    if (!f) {
      std::cerr << "cannot write " << out << "\n";
      return 1;
    }
    f << r.output;
  }
  if (r.exit_code != 0) std::cerr << "jetvar: " << cmd << " finished with exit code " << r.exit_code << "\n";
  return r.exit_code;
}
