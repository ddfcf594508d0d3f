#include <nlohmann/json.hpp>

#include <sstream>

#include "jetvar/cli.hpp"
#include "jetvar/errors.hpp"
#include "jetvar/numcheck.hpp"

namespace jetvar::cli {

namespace {

using json = nlohmann::ordered_json;

std::string descriptor_text(const FieldDecl& f) {
  const auto& d = f.descriptor;
  std::string s;
  if (d.kind == FieldKind::PrincipalConnection) {
    s = "connection";
  } else if (d.rank() == 0 && d.weight.is_zero()) {
    s = "scalar";
  } else {
    s = "tensor(" + std::to_string(d.contravariant) + "," + std::to_string(d.covariant) + ")";
  }
  if (d.symmetry == IndexSymmetry::Symmetric) s += " symmetric";
  if (d.symmetry == IndexSymmetry::Antisymmetric) s += " antisymmetric";
  if (!d.weight.is_zero()) s += " weight(" + d.weight.to_string() + ")";
  if (f.metric) s += " metric";
  if (f.background) s += " background";
  return s;
}

json report_json(const VerificationReport& r) {
  return json{{"id", r.id},
              {"pass", r.pass},
              {"samples", r.samples},
              {"skipped", r.skipped},
              {"max_abs_residual", r.max_abs_residual},
              {"max_rel_residual", r.max_rel_residual},
              {"tolerance", r.tolerance},
              {"seed", r.seed},
              {"note", r.note}};
}

VerificationReport symbolic_report(const std::string& id, ZeroVerdict v, const std::string& note = "") {
  VerificationReport r;
  r.id = id;
  r.pass = v != ZeroVerdict::NonZero;
  r.note = std::string("symbolic: ") + to_string(v) + (note.empty() ? "" : "; " + note);
  return r;
}

std::string pair_key(int s, int m) { return std::to_string(s + 1) + "," + std::to_string(m + 1); }

class Session {
 public:
  Session(ProblemFile& f, const RunOptions& o) : f_(f), p_(*f.problem), o_(o) {}

  json doc;
  std::vector<VerificationReport> reports;
  bool failed = false;

  std::string ex(const Expression& e) const { return o_.format == Format::Latex ? render_latex(p_, e) : render_plain(p_, e); }

  IbpOptions ibp(IbpMode mode) const {
    IbpOptions i;
    i.mode = mode;
    i.zero.seed = 0x5eed ^ o_.seed;
    return i;
  }

  const std::map<int, Expression>& euler() {
    if (!euler_) euler_ = euler_lagrange(p_, f_.lagrangian, ELMethod::AlternatingSum, true);
    return *euler_;
  }

  const Momentum& momentum_table() {
    if (!momentum_) momentum_ = momentum(p_, f_.lagrangian, true);
    return *momentum_;
  }

  const std::vector<Expression>& pounds(const GeneratorSpec& g) {
    auto it = pounds_.find(g.name);
    if (it == pounds_.end()) it = pounds_.emplace(g.name, generalized_lie_derivative(p_, g.generator, lift(p_, g.generator))).first;
    return it->second;
  }

  const HorizontalDensity& current(const GeneratorSpec& g) {
    auto it = currents_.find(g.name);
    if (it == currents_.end()) {
      it = currents_.emplace(g.name, noether_current(p_, f_.lagrangian, momentum_table(), g.generator, pounds(g))).first;
    }
    return it->second;
  }

  const SuperpotentialResult& super(const GeneratorSpec& g, IbpMode mode) {
    auto key = std::make_pair(g.name, mode);
    auto it = supers_.find(key);
    if (it == supers_.end()) {
      SuperpotentialOptions so;
      so.ibp = ibp(mode);
      so.force = o_.force;
      it = supers_.emplace(key, superpotential(p_, f_.lagrangian, g.generator, so)).first;
    }
    return it->second;
  }

  bool has_parameters(const GeneratorSpec& g) const { return g.kind != "explicit"; }

  void add(const VerificationReport& r) {
    reports.push_back(r);
    if (!r.pass) failed = true;
  }

  // ---- commands

  void el() {
    json out = json::object();
    auto e = euler_lagrange(p_, f_.lagrangian);
    for (const auto& [i, v] : e) out[component_name(p_, i)] = ex(v);
    doc["results"]["euler_lagrange"] = out;
  }

  void momentum_cmd() {
    json rows = json::array();
    const Momentum& m = momentum_table();
    for (const auto& [key, row] : m.table) {
      if (p_.is_background_component(key.component)) continue;
      for (int mu = 0; mu < p_.n(); ++mu) {
        if (row[mu].is_zero()) continue;
        std::vector<int> beta;
        for (int s = 0; s < p_.n(); ++s) beta.push_back(key.alpha[s]);
        rows.push_back(json{{"component", component_name(p_, key.component)}, {"beta", beta}, {"mu", mu + 1}, {"value", ex(row[mu])}});
      }
    }
    doc["results"]["momentum"] = rows;
    momentum_identity();
  }

  void momentum_identity() {
    ZeroVerdict v = ZeroVerdict::CanonicalZero;
    for (const auto& r : momentum_residuals(p_, f_.lagrangian, momentum_table())) {
      if (zero_test(p_, r) == ZeroVerdict::NonZero) v = ZeroVerdict::NonZero;
    }
    auto alt = euler();
    for (const auto& [i, e] : momentum_table().euler)
      if (zero_test(p_, e - alt.at(i)) == ZeroVerdict::NonZero) v = ZeroVerdict::NonZero;
    add(symbolic_report("momentum_identity", v, "E = dV L - D p and alternating sum agree"));
  }

  void current_cmd() {
    json out = json::object();
    for (const auto& g : f_.generators) {
      json eps = json::array();
      const auto& c = current(g);
      for (int s = 0; s < p_.n(); ++s) eps.push_back(ex(c.eps(s)));
      out[g.name] = eps;
    }
    doc["results"]["currents"] = out;
  }

  template <typename F>
  bool guarded(const std::string& where, F&& body) {
    try {
      body();
      return true;
    } catch (const NotASymmetry& e) {
      doc["errors"].push_back(json{{"where", where}, {"message", std::string(e.what()) + " (use --force to skip)"}});
    } catch (const CertificateFailure& e) {
      doc["errors"].push_back(json{{"where", where}, {"message", e.what()}});
    } catch (const DecompositionObstructed& e) {
      doc["errors"].push_back(json{{"where", where}, {"message", e.what()}});
    }
    failed = true;
    return false;
  }

  void superpotential_cmd() {
    json out = json::object();
    for (const auto& g : f_.generators) {
      if (!has_parameters(g)) continue;
      if (p_.n() < 2) {
        out[g.name] = json{{"skipped", "superpotentials need n >= 2"}};
        continue;
      }
      guarded("superpotential " + g.name, [&] {
        const auto& r = super(g, o_.ibp_mode);
        json et = json::array();
        for (int s = 0; s < p_.n(); ++s) et.push_back(ex(r.reduced_current.eps(s)));
        json eta = json::object();
        for (int s = 0; s < p_.n(); ++s)
          for (int m = s + 1; m < p_.n(); ++m) eta[pair_key(s, m)] = ex(r.superpotential.eta(s, m));
        out[g.name] = json{{"ibp_mode", to_string(o_.ibp_mode)},
                           {"forced", r.forced},
                           {"eps_tilde", et},
                           {"eta", eta},
                           {"symmetry", to_string(r.symmetry)},
                           {"strong_conservation", to_string(r.strong_conservation)},
                           {"certificate", to_string(r.certificate)},
                           {"leftover", to_string(r.leftover)}};
        add(symbolic_report("strong_conservation " + g.name, r.strong_conservation, "D_s(eps - eps~) = 0"));
        add(symbolic_report("superpotential_certificate " + g.name, worst_of(r.certificate, r.leftover),
                            "D_m eta^{sm} = eps^s - eps~^s"));
      });
    }
    doc["results"]["superpotentials"] = out;
  }

  std::map<int, Expression> bianchi_coefficients(const GeneratorSpec& g) {
    auto it = supers_.find(std::make_pair(g.name, o_.ibp_mode));
    if (it != supers_.end()) return it->second.bianchi;
    return bianchi_check(p_, f_.lagrangian, g.generator, ibp(o_.ibp_mode)).coefficients;
  }

  void bianchi_cmd() {
    json out = json::object();
    for (const auto& g : f_.generators) {
      if (!has_parameters(g)) continue;
      auto coeff = bianchi_coefficients(g);
      json row = json::object();
      ZeroVerdict all = ZeroVerdict::CanonicalZero;
      for (int k = 0; k < p_.num_params(); ++k) {
        auto c = coeff.find(k);
        ZeroVerdict v = c == coeff.end() ? ZeroVerdict::CanonicalZero : zero_test(p_, c->second, ibp(o_.ibp_mode).zero);
        all = worst_of(all, v);
        std::string name = k < p_.n() ? "xi[" + std::to_string(k + 1) + "]" : "xiA[" + std::to_string(k - p_.n() + 1) + "]";
        row[name] = to_string(v);
      }
      out[g.name] = row;
      add(symbolic_report("bianchi " + g.name, all, "reduced part of pounds . E"));
    }
    doc["results"]["bianchi"] = out;
  }

  // ---- checks

  double tol(const CheckSpec& c, double fallback) const { return o_.tol ? *o_.tol : c.number("tol", fallback); }

  std::uint64_t check_seed(const CheckSpec& c) const {
    return static_cast<std::uint64_t>(c.number("seed", static_cast<double>(o_.seed))) * 1000003ULL + c.line;
  }

  int word_int(const CheckSpec& c, std::size_t k) const {
    if (k >= c.words.size()) throw SemanticError("line " + std::to_string(c.line) + ": check '" + c.kind + "' is missing an index");
    return std::stoi(c.words[k]) - 1;
  }

  const GeneratorSpec& word_gen(const CheckSpec& c) const {
    if (c.words.empty()) throw SemanticError("line " + std::to_string(c.line) + ": check '" + c.kind + "' needs a generator");
    return f_.generator(c.words[0]);
  }

  void compare(const CheckSpec& c, const std::string& id, const Expression& value, int default_samples) {
    if (!c.expected) throw SemanticError("line " + std::to_string(c.line) + ": check '" + c.kind + "' needs '= expression'");
    Rational scale = 1;
    if (auto s = c.options.find("scale"); s != c.options.end()) scale = Rational::parse(s->second);
    Expression diff = value - scale * *c.expected;
    ZeroVerdict v = zero_test(p_, diff);
    int samples = static_cast<int>(c.number("samples", default_samples));
    if (samples <= 0) {
      add(symbolic_report(id, v));
      return;
    }
    double t = tol(c, default_tolerance(diff));
    auto r = verify_identity(p_, diff, samples, t, check_seed(c), id);
    r.note += std::string(r.note.empty() ? "" : "; ") + "symbolic: " + to_string(v);
    r.pass = r.pass && v != ZeroVerdict::NonZero;
    add(r);
  }

  void check(const CheckSpec& c) {
    std::string id = c.kind;
    for (const auto& w : c.words) id += " " + (w[0] == '#' ? component_name(p_, std::stoi(w.substr(1))) : w);
    if (c.kind == "el") {
      if (c.words.empty() || c.words[0][0] != '#') throw SemanticError("line " + std::to_string(c.line) + ": el needs a field component");
      int comp = std::stoi(c.words[0].substr(1));
      compare(c, id, euler().at(comp), 0);
    } else if (c.kind == "momentum") {
      momentum_identity();
    } else if (c.kind == "first_variation") {
      const auto& g = word_gen(c);
      auto lt = lift(p_, g.generator);
      auto fv = variational_lie_derivative(p_, f_.lagrangian, g.generator, lt);
      Expression diff = direct_lie_derivative(p_, f_.lagrangian, g.generator, lt) - fv.el_part - dH(p_, fv.boundary).scalar();
      ZeroVerdict v = zero_test(p_, diff);
      int samples = static_cast<int>(c.number("samples", 0));
      if (samples > 0) {
        auto r = verify_identity(p_, diff, samples, tol(c, default_tolerance(diff)), check_seed(c), id);
        r.note += std::string(r.note.empty() ? "" : "; ") + "symbolic: " + to_string(v);
        r.pass = r.pass && v != ZeroVerdict::NonZero;
        add(r);
      } else {
        add(symbolic_report(id, v));
      }
    } else if (c.kind == "eps") {
      compare(c, id, current(word_gen(c)).eps(word_int(c, 1)), 0);
    } else if (c.kind == "eps_tilde") {
      const auto& g = word_gen(c);
      guarded(id, [&] { compare(c, id, super(g, o_.ibp_mode).reduced_current.eps(word_int(c, 1)), 0); });
    } else if (c.kind == "eta") {
      const auto& g = word_gen(c);
      guarded(id, [&] { compare(c, id, super(g, o_.ibp_mode).superpotential.eta(word_int(c, 1), word_int(c, 2)), 50); });
    } else if (c.kind == "strong") {
      const auto& g = word_gen(c);
      guarded(id, [&] { add(symbolic_report(id, super(g, o_.ibp_mode).strong_conservation)); });
    } else if (c.kind == "bianchi") {
      const auto& g = word_gen(c);
      auto coeff = bianchi_coefficients(g);
      std::vector<Expression> es;
      ZeroVerdict v = ZeroVerdict::CanonicalZero;
      for (const auto& [k, e] : coeff) {
        es.push_back(e);
        v = worst_of(v, zero_test(p_, e));
      }
      int samples = static_cast<int>(c.number("samples", 0));
      if (samples > 0 && !es.empty()) {
        auto r = verify_identities(p_, es, samples, tol(c, 1e-8), check_seed(c), id);
        r.note += std::string(r.note.empty() ? "" : "; ") + "symbolic: " + to_string(v);
        r.pass = r.pass && v != ZeroVerdict::NonZero;
        add(r);
      } else {
        add(symbolic_report(id, v));
      }
    } else if (c.kind == "weak") {
      weak(c, id);
    } else if (c.kind == "modes") {
      const auto& g = word_gen(c);
      guarded(id, [&] {
        const auto& a = super(g, IbpMode::Symmetric);
        const auto& b = super(g, IbpMode::Lex);
        std::vector<Expression> delta(p_.n() * p_.n());
        for (int s = 0; s < p_.n(); ++s)
          for (int m = 0; m < p_.n(); ++m) delta[s * p_.n() + m] = a.superpotential.eta(s, m) - b.superpotential.eta(s, m);
        auto d = dH(p_, HorizontalDensity::superpotential(p_.n(), delta));
        ZeroVerdict v = ZeroVerdict::CanonicalZero;
        for (int s = 0; s < p_.n(); ++s) v = worst_of(v, zero_test(p_, d.eps(s)));
        add(symbolic_report(id, v, std::string("D_m(eta_symmetric - eta_lex)^{sm} = 0; tables ") +
                                       (a.superpotential == b.superpotential ? "identical" : "differ")));
      });
    }
  }

  void weak(const CheckSpec& c, const std::string& id) {
    const auto& g = word_gen(c);
    const auto& eps = current(g);
    ExpressionBuilder b;
    for (int s = 0; s < p_.n(); ++s) b.add(total_derivative(p_, eps.eps(s), s));
    Expression div = b.build();
    int samples = static_cast<int>(c.number("samples", 100));
    double t = tol(c, 1e-8);
    VerificationReport r;
    r.id = id;
    r.tolerance = t;
    r.seed = check_seed(c);
    std::map<int, Expression> el;
    for (int i : p_.dynamical_components()) el[i] = euler().at(i);
    int order = div.jet_order();
    std::vector<Atom> atoms = collect_leaves({div});
    for (int k = 0; k < samples; ++k) {
      auto on = sample_on_shell_point(p_, el, order, r.seed + static_cast<std::uint64_t>(k), atoms);
      if (!on.solved) {
        ++r.skipped;
        continue;
      }
      ++r.samples;
      double v = std::abs(evaluate(div, on.point.values));
      double rel = v / (1 + max_term_magnitude(div, on.point.values));
      r.max_abs_residual = std::max(r.max_abs_residual, v);
      r.max_rel_residual = std::max(r.max_rel_residual, rel);
    }
    r.pass = r.samples > 0 && r.max_rel_residual <= t;
    r.note = "D_s eps^s at on-shell jet points";
    if (r.skipped) r.note += "; " + std::to_string(r.skipped) + " points not solvable";
    add(r);
  }

  void verify_cmd() {
    momentum_identity();
    for (const auto& c : f_.checks) check(c);
  }

  static ZeroVerdict worst_of(ZeroVerdict a, ZeroVerdict b) {
    if (a == ZeroVerdict::NonZero || b == ZeroVerdict::NonZero) return ZeroVerdict::NonZero;
    if (a == ZeroVerdict::ZeroModuloRelations || b == ZeroVerdict::ZeroModuloRelations) return ZeroVerdict::ZeroModuloRelations;
    return ZeroVerdict::CanonicalZero;
  }

 private:
  ProblemFile& f_;
  JetProblem& p_;
  const RunOptions& o_;
  std::optional<std::map<int, Expression>> euler_;
  std::optional<Momentum> momentum_;
  std::map<std::string, std::vector<Expression>> pounds_;
  std::map<std::string, HorizontalDensity> currents_;
  std::map<std::pair<std::string, IbpMode>, SuperpotentialResult> supers_;
};

json problem_echo(const ProblemFile& f) {
  const JetProblem& p = *f.problem;
  json fields = json::array();
  for (const auto& d : p.fields()) fields.push_back(json{{"label", d.label}, {"descriptor", descriptor_text(d)}});
  json gens = json::array();
  for (const auto& g : f.generators) gens.push_back(json{{"name", g.name}, {"kind", g.kind}});
  json echo{{"name", f.name}, {"n", p.n()}, {"order", p.order()}, {"cap", p.cap()}, {"fields", fields}};
  if (p.algebra_dim() > 0) echo["algebra"] = p.algebra_basis();
  echo["lagrangian"] = render_plain(p, f.lagrangian);
  echo["generators"] = gens;
  return echo;
}

json conventions(const RunOptions& o) {
  return json::array({"indices are 1-based; jets are written label[indices; derivative counts]",
                      "pounds^i = xi^s y^i_s - Xi^i (generalized Lie derivative)",
                      "eps^s = -sum p^{b s}_i D_b pounds^i + xi^s L",
                      "eps^s - eps~^s = sum_m D_m eta^{s m}, eta antisymmetric",
                      "momenta split g^a over slots with weights a_m/|a|",
                      std::string("integration by parts: ") + to_string(o.ibp_mode) + " slot rule"});
}

void flatten(const json& j, const std::string& path, std::ostringstream& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), path.empty() ? it.key() : path + "." + it.key(), out);
  } else if (j.is_array() && !j.empty() && (j.front().is_object() || j.front().is_array() || j.front().is_string())) {
    for (std::size_t k = 0; k < j.size(); ++k) flatten(j[k], path + "[" + std::to_string(k + 1) + "]", out);
  } else if (j.is_string()) {
    out << path << ": " << j.get<std::string>() << "\n";
  } else {
    out << path << ": " << j.dump() << "\n";
  }
}

}  // namespace

RunResult run_command(const std::string& cmd, ProblemFile& file, const RunOptions& opt) {
  RunResult res;
  Session s(file, opt);
  s.doc["command"] = cmd;
  s.doc["problem"] = problem_echo(file);
  s.doc["conventions"] = conventions(opt);
  s.doc["results"] = json::object();
  s.doc["errors"] = json::array();
  bool known = std::find(commands().begin(), commands().end(), cmd) != commands().end();
  try {
    if (!known) throw SemanticError("unknown command '" + cmd + "'");
    if (opt.max_order) file.problem->set_cap(*opt.max_order);
    bool all = cmd == "all";
    if (all || cmd == "el") s.el();
    if (all || cmd == "momentum") s.momentum_cmd();
    if (all || cmd == "current") s.current_cmd();
    if (all || cmd == "superpotential") s.superpotential_cmd();
    if (all || cmd == "bianchi") s.bianchi_cmd();
    if (all || cmd == "verify") s.verify_cmd();
    res.exit_code = s.failed ? 2 : 0;
  } catch (const ParseError& e) {
    s.doc["errors"].push_back(json{{"where", cmd}, {"message", e.what()}});
    res.exit_code = 1;
  } catch (const SemanticError& e) {
    s.doc["errors"].push_back(json{{"where", cmd}, {"message", e.what()}});
    res.exit_code = 1;
  } catch (const OrderOverflow& e) {
    s.doc["errors"].push_back(json{{"where", cmd}, {"message", e.what()}});
    res.exit_code = 1;
  } catch (const Error& e) {
    s.doc["errors"].push_back(json{{"where", cmd}, {"message", e.what()}});
    res.exit_code = 2;
  }
  json reports = json::array();
  for (const auto& r : s.reports) reports.push_back(report_json(r));
  s.doc["reports"] = reports;
  s.doc["status"] = res.exit_code == 0 ? "ok" : res.exit_code == 1 ? "error" : "failed";
  s.doc["exit_code"] = res.exit_code;
  res.reports = s.reports;
  if (opt.format == Format::Json) {
    res.output = s.doc.dump(2) + "\n";
  } else {
    std::ostringstream out;
    flatten(s.doc, "", out);
    res.output = out.str();
  }
  return res;
}

}  // namespace jetvar::cli
