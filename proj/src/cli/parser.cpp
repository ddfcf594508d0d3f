#include <cctype>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "jetvar/cli.hpp"
#include "jetvar/errors.hpp"
#include "jetvar/jet.hpp"
#include "jetvar/opaque.hpp"

namespace jetvar::cli {

namespace {

// ---------------------------------------------------------------------------
// Source text with positions

struct Pos {
  int line = 0;
  int col = 0;
};

// One logical line (continuations joined), with the position of every char.
struct Source {
  std::string text;
  std::vector<Pos> pos;  // size text.size() + 1

  Pos at(std::size_t i) const { return pos[std::min(i, pos.size() - 1)]; }
};

struct RawLine {
  std::string text;
  int line;
};

std::string strip_comment(const std::string& s) {
  auto h = s.find('#');
  return h == std::string::npos ? s : s.substr(0, h);
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// Joins indented continuation lines onto the previous logical line.
std::vector<Source> logical_lines(const std::vector<RawLine>& lines, bool single) {
  std::vector<Source> out;
  for (const auto& l : lines) {
    std::string t = strip_comment(l.text);
    if (blank(t)) continue;
    bool cont = single ? !out.empty() : (!out.empty() && std::isspace(static_cast<unsigned char>(t[0])));
    if (!cont) out.emplace_back();
    Source& s = out.back();
    if (!s.text.empty()) {
      s.text.push_back(' ');
      s.pos.push_back(Pos{l.line, static_cast<int>(t.size()) + 1});
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      s.text.push_back(t[i]);
      s.pos.push_back(Pos{l.line, static_cast<int>(i) + 1});
    }
  }
  for (auto& s : out) {
    Pos end = s.pos.empty() ? Pos{} : s.pos.back();
    s.pos.push_back(Pos{end.line, end.col + 1});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tokens

enum class Tok { Number, Ident, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  Pos pos;
};

std::vector<Token> tokenize(const Source& s) {
  std::vector<Token> out;
  const std::string& t = s.text;
  std::size_t i = 0;
  while (i < t.size()) {
    unsigned char c = t[i];
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isdigit(c)) {
      while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
      if (i + 1 < t.size() && t[i] == '.' && std::isdigit(static_cast<unsigned char>(t[i + 1]))) {
        ++i;
        while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
      }
      if (i < t.size() && (t[i] == 'e' || t[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < t.size() && (t[j] == '-' || t[j] == '+')) ++j;
        if (j < t.size() && std::isdigit(static_cast<unsigned char>(t[j]))) {
          i = j;
          while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
        }
      }
      out.push_back({Tok::Number, t.substr(start, i - start), s.at(start)});
    } else if (std::isalpha(c) || c == '_') {
      while (i < t.size() && (std::isalnum(static_cast<unsigned char>(t[i])) || t[i] == '_')) ++i;
      out.push_back({Tok::Ident, t.substr(start, i - start), s.at(start)});
    } else if (c == '.' && i + 1 < t.size() && t[i + 1] == '.') {
      i += 2;
      out.push_back({Tok::Punct, "..", s.at(start)});
    } else if (std::string("+-*/^()[],;=:").find(static_cast<char>(c)) != std::string::npos) {
      ++i;
      out.push_back({Tok::Punct, std::string(1, static_cast<char>(c)), s.at(start)});
    } else {
      throw ParseError(s.at(start).line, s.at(start).col, std::string("unexpected character '") + static_cast<char>(c) + "'");
    }
  }
  out.push_back({Tok::End, "", s.at(t.size())});
  return out;
}

Rational parse_number(const std::string& text) {
  std::string mant = text;
  int exp10 = 0;
  auto e = text.find_first_of("eE");
  if (e != std::string::npos) {
    mant = text.substr(0, e);
    exp10 = std::stoi(text.substr(e + 1));
  }
  auto dot = mant.find('.');
  if (dot != std::string::npos) {
    exp10 -= static_cast<int>(mant.size() - dot - 1);
    mant.erase(dot, 1);
  }
  Rational r = Rational::parse(mant);
  Rational ten(10);
  for (int k = 0; k < std::abs(exp10); ++k) r = exp10 > 0 ? r * ten : r / ten;
  return r;
}

// ---------------------------------------------------------------------------
// Syntax tree

struct Node {
  enum class K { Num, Add, Sub, Mul, Div, Neg, Pow, Ident, Call, Bracket, Range };
  Node(K k, Pos p, std::string s = {}) : kind(k), pos(p), name(std::move(s)) {}
  K kind;
  Pos pos;
  std::string name;
  Rational value;
  int exponent = 0;
  std::vector<Node> args;   // operands, call arguments, or bracket indices
  std::vector<Node> alpha;  // bracket multi-index (after ';')
  bool semicolon = false;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  const Token& peek(int k = 0) const { return t_[std::min(i_ + k, t_.size() - 1)]; }
  bool at_end() const { return peek().kind == Tok::End; }
  bool is(const std::string& p) const { return peek().kind == Tok::Punct && peek().text == p; }
  Token next() { return t_[std::min(i_++, t_.size() - 1)]; }

  [[noreturn]] void fail(const std::string& expected) const {
    const Token& k = peek();
    std::string got = k.kind == Tok::End ? "end of line" : "'" + k.text + "'";
    throw ParseError(k.pos.line, k.pos.col, "expected " + expected + ", got " + got);
  }

  void expect(const std::string& p) {
    if (!is(p)) fail("'" + p + "'");
    next();
  }

  std::string ident(const std::string& what = "identifier") {
    if (peek().kind != Tok::Ident) fail(what);
    return next().text;
  }

  Node expr() {
    Node lhs = term();
    while (is("+") || is("-")) {
      Pos p = peek().pos;
      bool plus = next().text == "+";
      Node rhs = term();
      lhs = binary(plus ? Node::K::Add : Node::K::Sub, p, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Node term() {
    Node lhs = unary();
    while (is("*") || is("/")) {
      Pos p = peek().pos;
      bool mul = next().text == "*";
      Node rhs = unary();
      lhs = binary(mul ? Node::K::Mul : Node::K::Div, p, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Node unary() {
    if (is("-")) {
      Pos p = next().pos;
      Node n{Node::K::Neg, p};
      n.args.push_back(unary());
      return n;
    }
    if (is("+")) {
      next();
      return unary();
    }
    return power();
  }

  Node power() {
    Node b = primary();
    if (is("^")) {
      Pos p = next().pos;
      int sign = 1;
      if (is("-")) {
        next();
        sign = -1;
      }
      if (peek().kind != Tok::Number || peek().text.find_first_of(".eE") != std::string::npos) fail("integer exponent");
      Node n{Node::K::Pow, p};
      n.exponent = sign * std::stoi(next().text);
      n.args.push_back(std::move(b));
      return n;
    }
    return b;
  }

  Node primary() {
    const Token& k = peek();
    if (k.kind == Tok::Number) {
      Node n{Node::K::Num, k.pos};
      n.value = parse_number(next().text);
      return n;
    }
    if (is("(")) {
      next();
      Node e = expr();
      expect(")");
      return e;
    }
    if (k.kind == Tok::Ident) {
      Node n{Node::K::Ident, k.pos, next().text};
      if (is("(")) {
        n.kind = Node::K::Call;
        next();
        if (!is(")")) {
          n.args.push_back(range_or_expr());
          while (is(",")) {
            next();
            n.args.push_back(range_or_expr());
          }
        }
        expect(")");
      } else if (is("[")) {
        n.kind = Node::K::Bracket;
        next();
        std::vector<Node>* dst = &n.args;
        while (!is("]")) {
          if (is(";")) {
            if (n.semicolon) fail("']'");
            n.semicolon = true;
            dst = &n.alpha;
            next();
            continue;
          }
          dst->push_back(expr());
          if (is(",")) {
            next();
          } else if (!is(";") && !is("]")) {
            fail("',', ';' or ']'");
          }
        }
        next();
      }
      return n;
    }
    fail("number, identifier or '('");
  }

 private:
  Node binary(Node::K k, Pos p, Node a, Node b) {
    Node n{k, p};
    n.args.push_back(std::move(a));
    n.args.push_back(std::move(b));
    return n;
  }

  Node range_or_expr() {
    Node a = expr();
    if (is("..")) {
      Pos p = next().pos;
      Node r{Node::K::Range, p};
      r.args.push_back(std::move(a));
      r.args.push_back(expr());
      return r;
    }
    return a;
  }

  std::vector<Token> t_;
  std::size_t i_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation

[[noreturn]] void semantic(Pos p, const std::string& msg) {
  throw SemanticError(std::to_string(p.line) + ":" + std::to_string(p.col) + ": " + msg);
}

struct Macro {
  std::vector<std::string> params;
  Node body{Node::K::Num, Pos{}};
  Pos pos;
};

struct Context {
  JetProblem* p = nullptr;
  std::map<std::string, Macro> macros;
  std::map<std::pair<std::string, std::vector<int>>, Expression> memo;
  std::vector<std::string> active;  // macro call stack, for recursion detection
  bool allow_macros = true;
};

using Env = std::map<std::string, int>;

const std::set<std::string>& reserved() {
  static const std::set<std::string> r{"x", "y", "xi", "xiA", "D", "sum", "ginv", "sqrtg", "c", "n"};
  return r;
}

class Evaluator {
 public:
  explicit Evaluator(Context& c) : c_(c), p_(*c.p) {}

  int index(const Node& n, const Env& env) {
    switch (n.kind) {
      case Node::K::Num:
        if (!n.value.is_integer()) semantic(n.pos, "index must be an integer");
        return static_cast<int>(n.value.to_double());
      case Node::K::Ident: {
        if (auto it = env.find(n.name); it != env.end()) return it->second;
        if (n.name == "n") return p_.n();
        semantic(n.pos, "unknown index variable '" + n.name + "'");
      }
      case Node::K::Add:
        return index(n.args[0], env) + index(n.args[1], env);
      case Node::K::Sub:
        return index(n.args[0], env) - index(n.args[1], env);
      case Node::K::Neg:
        return -index(n.args[0], env);
      case Node::K::Mul:
        return index(n.args[0], env) * index(n.args[1], env);
      default:
        semantic(n.pos, "expected an index");
    }
  }

  // 1-based index into 0..limit-1
  int slot(const Node& n, const Env& env, int limit, const std::string& what) {
    int v = index(n, env);
    if (v < 1 || v > limit) semantic(n.pos, what + " index " + std::to_string(v) + " out of range 1.." + std::to_string(limit));
    return v - 1;
  }

  MultiIndex multi(const Node& b, const std::vector<Node>& counts, const Env& env) {
    MultiIndex a(p_.n());
    if (counts.empty()) return a;
    if (static_cast<int>(counts.size()) != p_.n()) {
      semantic(b.pos, "multi-index needs " + std::to_string(p_.n()) + " counts, got " + std::to_string(counts.size()));
    }
    for (int s = 0; s < p_.n(); ++s) {
      int v = index(counts[s], env);
      if (v < 0) semantic(counts[s].pos, "negative derivative count");
      a.set(s, v);
    }
    if (a.order() > p_.cap()) {
      semantic(b.pos, "jet order " + std::to_string(a.order()) + " exceeds the order cap " + std::to_string(p_.cap()));
    }
    return a;
  }

  Expression eval(const Node& n, const Env& env) {
    switch (n.kind) {
      case Node::K::Num:
        return Expression(n.value);
      case Node::K::Add:
        return eval(n.args[0], env) + eval(n.args[1], env);
      case Node::K::Sub:
        return eval(n.args[0], env) - eval(n.args[1], env);
      case Node::K::Mul:
        return eval(n.args[0], env) * eval(n.args[1], env);
      case Node::K::Neg:
        return -eval(n.args[0], env);
      case Node::K::Div: {
        Expression d = eval(n.args[1], env);
        if (d.is_zero()) semantic(n.pos, "division by zero");
        if (d.size() != 1) semantic(n.pos, "division by a sum");
        return eval(n.args[0], env) / d;
      }
      case Node::K::Pow: {
        Expression b = eval(n.args[0], env);
        if (n.exponent < 0 && b.size() != 1) semantic(n.pos, "negative power of a sum");
        return pow(b, n.exponent);
      }
      case Node::K::Ident:
        return ident(n, env);
      case Node::K::Bracket:
        return bracket(n, env);
      case Node::K::Call:
        return call(n, env);
      case Node::K::Range:
        semantic(n.pos, "range outside sum()");
    }
    return {};
  }

 private:
  Expression ident(const Node& n, const Env& env) {
    if (auto it = env.find(n.name); it != env.end()) return Expression(it->second);
    if (n.name == "n") return Expression(p_.n());
    if (n.name == "sqrtg") return metric(n).sqrtg();
    if (auto c = p_.find_constant(n.name)) return Expression(*c);
    if (auto f = p_.find_field(n.name)) {
      const FieldDecl& d = p_.fields()[*f];
      if (d.descriptor.kind != FieldKind::PrincipalConnection && d.descriptor.rank() == 0) {
        return p_.field_jet(*f, {}, p_.zero());
      }
      semantic(n.pos, "field '" + n.name + "' needs indices");
    }
    if (c_.allow_macros && c_.macros.contains(n.name)) return macro(n, {}, env);
    semantic(n.pos, "undeclared name '" + n.name + "'");
  }

  const MetricFamily& metric(const Node& n) {
    if (!p_.metric()) semantic(n.pos, "'" + n.name + "' needs a field declared as metric");
    return *p_.metric();
  }

  Expression bracket(const Node& n, const Env& env) {
    const std::string& h = n.name;
    if (h == "x") {
      if (n.args.size() != 1 || n.semicolon) semantic(n.pos, "x[s] takes one index");
      return Expression(p_.base(slot(n.args[0], env, p_.n(), "base")));
    }
    if (h == "y") {
      if (n.args.size() != 1) semantic(n.pos, "y[i; a1,...,an] takes one component index");
      int i = index(n.args[0], env);
      if (i < 1 || i > p_.num_components()) semantic(n.args[0].pos, "undeclared field component " + std::to_string(i));
      return Expression(p_.jet(i - 1, multi(n, n.alpha, env)));
    }
    if (h == "xi" || h == "xiA") {
      if (n.args.size() != 1) semantic(n.pos, h + "[P; a1,...,an] takes one parameter index");
      MultiIndex a = multi(n, n.alpha, env);
      if (h == "xiA") return Expression(p_.xiA(slot(n.args[0], env, p_.algebra_dim(), "algebra"), a));
      int P = slot(n.args[0], env, p_.num_params(), "parameter");
      return Expression(P < p_.n() ? p_.xi(P, a) : p_.xiA(P - p_.n(), a));
    }
    auto f = p_.find_field(h);
    if (!f) semantic(n.pos, "undeclared field '" + h + "'");
    const FieldDecl& d = p_.fields()[*f];
    int rank = d.descriptor.kind == FieldKind::PrincipalConnection ? 2 : d.descriptor.rank();
    std::vector<Node> idx = n.args;
    std::vector<Node> counts = n.alpha;
    if (rank == 0 && !n.semicolon) std::swap(idx, counts);
    if (static_cast<int>(idx.size()) != rank) {
      semantic(n.pos, "field '" + h + "' takes " + std::to_string(rank) + " indices, got " + std::to_string(idx.size()));
    }
    std::vector<int> iv;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      bool algebra = d.descriptor.kind == FieldKind::PrincipalConnection && k == 0;
      iv.push_back(algebra ? slot(idx[k], env, p_.algebra_dim(), "algebra") : slot(idx[k], env, p_.n(), "tensor"));
    }
    return p_.field_jet(*f, iv, multi(n, counts, env));
  }

  Expression call(const Node& n, const Env& env) {
    const std::string& h = n.name;
    auto arity = [&](std::size_t k) {
      if (n.args.size() != k) semantic(n.pos, h + "() takes " + std::to_string(k) + " arguments");
    };
    if (h == "D") {
      arity(2);
      int s = slot(n.args[0], env, p_.n(), "base");
      Expression e = eval(n.args[1], env);
      try {
        return total_derivative(p_, e, s);
      } catch (const OrderOverflow& ex) {
        semantic(n.pos, ex.what());
      }
    }
    if (h == "sum") {
      arity(3);
      if (n.args[0].kind != Node::K::Ident) semantic(n.args[0].pos, "sum() needs an index variable");
      if (n.args[1].kind != Node::K::Range) semantic(n.args[1].pos, "sum() needs a range lo..hi");
      int lo = index(n.args[1].args[0], env), hi = index(n.args[1].args[1], env);
      ExpressionBuilder b;
      Env inner = env;
      for (int v = lo; v <= hi; ++v) {
        inner[n.args[0].name] = v;
        b.add(eval(n.args[2], inner));
      }
      return b.build();
    }
    if (h == "ginv" || h == "g") {
      arity(2);
      const MetricFamily& m = metric(n);
      int a = slot(n.args[0], env, p_.n(), "metric"), b = slot(n.args[1], env, p_.n(), "metric");
      return h == "g" ? m.g(a, b) : m.ginv(a, b);
    }
    if (h == "sqrtg") {
      arity(0);
      return metric(n).sqrtg();
    }
    if (h == "c") {
      arity(3);
      int k = p_.algebra_dim();
      return Expression(p_.c(slot(n.args[0], env, k, "algebra"), slot(n.args[1], env, k, "algebra"),
                             slot(n.args[2], env, k, "algebra")));
    }
    if (const auto* tab = p_.table(h)) {
      const auto& shape = *p_.table_shape(h);
      arity(shape.size());
      std::size_t flat = 0;
      for (std::size_t k = 0; k < shape.size(); ++k) flat = flat * shape[k] + slot(n.args[k], env, shape[k], "table");
      return Expression((*tab)[flat]);
    }
    if (c_.allow_macros && c_.macros.contains(h)) {
      std::vector<int> args;
      for (const auto& a : n.args) args.push_back(index(a, env));
      return macro(n, args, env);
    }
    semantic(n.pos, "unknown function '" + h + "'");
  }

  Expression macro(const Node& n, const std::vector<int>& args, const Env&) {
    const Macro& m = c_.macros.at(n.name);
    if (args.size() != m.params.size()) {
      semantic(n.pos, "'" + n.name + "' takes " + std::to_string(m.params.size()) + " index arguments");
    }
    auto key = std::make_pair(n.name, args);
    if (auto it = c_.memo.find(key); it != c_.memo.end()) return it->second;
    if (std::find(c_.active.begin(), c_.active.end(), n.name) != c_.active.end()) semantic(n.pos, "recursive definition '" + n.name + "'");
    c_.active.push_back(n.name);
    Env inner;
    for (std::size_t k = 0; k < args.size(); ++k) inner[m.params[k]] = args[k];
    Expression e = eval(m.body, inner);
    c_.active.pop_back();
    c_.memo.emplace(key, e);
    return e;
  }

  Context& c_;
  JetProblem& p_;
};

// ---------------------------------------------------------------------------
// Sections

struct Sections {
  std::map<std::string, std::vector<RawLine>> body;
  std::map<std::string, int> header_line;
};

const std::vector<std::string>& known_sections() {
  static const std::vector<std::string> s{"problem", "fields",     "algebra",    "define",
                                          "lagrangian", "connection", "generators", "checks"};
  return s;
}

Sections split_sections(const std::string& text) {
  Sections s;
  std::istringstream in(text);
  std::string line;
  std::string current;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = strip_comment(line);
    std::size_t first = t.find_first_not_of(" \t");
    if (first != std::string::npos && t[first] == '[') {
      auto close = t.find(']', first);
      if (close == std::string::npos) {
        std::size_t last = t.find_last_not_of(" \t");
        throw ParseError(no, static_cast<int>(last) + 2, "expected ']' to close the section header");
      }
      std::string name = t.substr(first + 1, close - first - 1);
      if (!blank(t.substr(close + 1))) throw ParseError(no, static_cast<int>(close) + 2, "unexpected text after section header");
      if (std::find(known_sections().begin(), known_sections().end(), name) == known_sections().end()) {
        std::string all;
        for (const auto& k : known_sections()) all += (all.empty() ? "" : ", ") + k;
        throw ParseError(no, static_cast<int>(first) + 2, "unknown section '" + name + "'; expected one of " + all);
      }
      if (s.header_line.contains(name)) throw ParseError(no, static_cast<int>(first) + 1, "duplicate section [" + name + "]");
      s.header_line[name] = no;
      s.body[name];
      current = name;
      continue;
    }
    if (current.empty()) {
      if (!blank(t)) throw ParseError(no, static_cast<int>(first) + 1, "expected a [section] header");
      continue;
    }
    s.body[current].push_back({line, no});
  }
  if (!s.header_line.contains("problem")) throw ParseError(no + 1, 1, "missing [problem] section");
  if (!s.header_line.contains("lagrangian")) throw ParseError(no + 1, 1, "missing [lagrangian] section");
  return s;
}

// `key = rest` with the rest re-tokenized by the caller.
struct KeyLine {
  std::string key;
  std::vector<Token> rest;  // tokens after '='
  Pos pos;
};

std::vector<Token> slice(const std::vector<Token>& t, std::size_t from) {
  return std::vector<Token>(t.begin() + from, t.end());
}

std::vector<std::string> ident_list(Parser& ps) {
  std::vector<std::string> out;
  out.push_back(ps.ident());
  while (ps.is(",")) {
    ps.next();
    out.push_back(ps.ident());
  }
  if (!ps.at_end()) ps.fail("',' or end of line");
  return out;
}

int integer(Parser& ps, const std::string& what) {
  bool neg = false;
  if (ps.is("-")) {
    ps.next();
    neg = true;
  }
  if (ps.peek().kind != Tok::Number || ps.peek().text.find_first_of(".eE") != std::string::npos) ps.fail(what);
  int v = std::stoi(ps.next().text);
  return neg ? -v : v;
}

Rational rational(Parser& ps) {
  Node n = ps.unary();
  std::function<Rational(const Node&)> fold = [&](const Node& x) -> Rational {
    switch (x.kind) {
      case Node::K::Num:
        return x.value;
      case Node::K::Neg:
        return -fold(x.args[0]);
      case Node::K::Div:
        return fold(x.args[0]) / fold(x.args[1]);
      default:
        semantic(x.pos, "expected a rational number");
    }
  };
  if (ps.is("/")) {
    ps.next();
    Node d = ps.unary();
    return fold(n) / fold(d);
  }
  return fold(n);
}

struct Builder {
  ProblemFile file;
  Context ctx;
  Sections sec;

  void declare_name(const std::string& name, Pos pos, std::set<std::string>& used) {
    if (reserved().contains(name)) semantic(pos, "'" + name + "' is reserved");
    if (!used.insert(name).second) semantic(pos, "'" + name + "' is declared twice");
  }

  std::set<std::string> names;

  void problem_section() {
    int n = -1, order = -1, cap = -1;
    std::vector<std::string> constants;
    struct TableDecl {
      std::string name;
      std::vector<Rational> values;
      std::vector<int> shape;
    };
    std::vector<TableDecl> tables;
    for (const auto& src : logical_lines(sec.body["problem"], false)) {
      Parser ps(tokenize(src));
      Pos pos = ps.peek().pos;
      std::string key = ps.ident("key");
      if (key == "table") {
        TableDecl t;
        t.name = ps.ident("table name");
        if (ps.is("(")) {
          ps.next();
          t.shape.push_back(integer(ps, "dimension"));
          while (ps.is(",")) {
            ps.next();
            t.shape.push_back(integer(ps, "dimension"));
          }
          ps.expect(")");
        }
        ps.expect("=");
        if (ps.peek().kind == Tok::Ident && ps.peek().text == "diag") {
          ps.next();
          ps.expect("(");
          std::vector<Rational> d{rational(ps)};
          while (ps.is(",")) {
            ps.next();
            d.push_back(rational(ps));
          }
          ps.expect(")");
          int k = static_cast<int>(d.size());
          t.shape = {k, k};
          t.values.assign(k * k, Rational(0));
          for (int a = 0; a < k; ++a) t.values[a * k + a] = d[a];
        } else {
          t.values.push_back(rational(ps));
          while (ps.is(",")) {
            ps.next();
            t.values.push_back(rational(ps));
          }
          if (t.shape.empty()) t.shape = {static_cast<int>(t.values.size())};
          std::size_t total = 1;
          for (int d : t.shape) total *= d;
          if (total != t.values.size()) semantic(pos, "table '" + t.name + "' has " + std::to_string(t.values.size()) + " values for its shape");
        }
        if (!ps.at_end()) ps.fail("end of line");
        declare_name(t.name, pos, names);
        tables.push_back(std::move(t));
        continue;
      }
      ps.expect("=");
      if (key == "name") {
        std::string v = src.text.substr(src.text.find('=') + 1);
        v.erase(0, v.find_first_not_of(" \t"));
        v.erase(v.find_last_not_of(" \t\r\n") + 1);
        file.name = v;
      } else if (key == "n" || key == "order" || key == "cap") {
        int v = integer(ps, "integer");
        if (!ps.at_end()) ps.fail("end of line");
        (key == "n" ? n : key == "order" ? order : cap) = v;
      } else if (key == "constants") {
        for (auto& c : ident_list(ps)) {
          declare_name(c, pos, names);
          constants.push_back(c);
        }
      } else {
        throw ParseError(pos.line, pos.col, "unknown key '" + key + "'; expected one of name, n, order, cap, constants, table");
      }
    }
    int hl = sec.header_line["problem"];
    if (n < 1) throw SemanticError(std::to_string(hl) + ":1: [problem] needs n >= 1");
    if (order < 0) throw SemanticError(std::to_string(hl) + ":1: [problem] needs order >= 0");
    file.problem = std::make_shared<JetProblem>(n, order);
    if (cap >= 0) file.problem->set_cap(cap);
    for (const auto& c : constants) file.problem->constant(c);
    for (auto& t : tables) file.problem->set_table(t.name, t.values, t.shape);
    ctx.p = file.problem.get();
  }

  void algebra_section() {
    if (!sec.body.contains("algebra")) return;
    std::vector<std::string> basis;
    std::vector<std::pair<std::array<int, 3>, std::pair<Rational, Pos>>> entries;
    for (const auto& src : logical_lines(sec.body["algebra"], false)) {
      Parser ps(tokenize(src));
      Pos pos = ps.peek().pos;
      std::string key = ps.ident("'basis' or 'c'");
      if (key == "basis") {
        ps.expect("=");
        basis = ident_list(ps);
      } else if (key == "c") {
        ps.expect("(");
        std::array<int, 3> abc{};
        for (int k = 0; k < 3; ++k) {
          if (k) ps.expect(",");
          abc[k] = integer(ps, "algebra index");
        }
        ps.expect(")");
        ps.expect("=");
        Rational v = rational(ps);
        if (!ps.at_end()) ps.fail("end of line");
        entries.push_back({abc, {v, pos}});
      } else {
        throw ParseError(pos.line, pos.col, "expected 'basis' or 'c(A,B,C)'");
      }
    }
    int k = static_cast<int>(basis.size());
    std::map<std::tuple<int, int, int>, Rational> c;
    for (auto& [abc, vp] : entries) {
      for (int v : abc)
        if (v < 1 || v > k) semantic(vp.second, "algebra index " + std::to_string(v) + " out of range 1.." + std::to_string(k));
      auto key = std::make_tuple(abc[0] - 1, abc[1] - 1, abc[2] - 1);
      auto swapped = std::make_tuple(abc[0] - 1, abc[2] - 1, abc[1] - 1);
      c[key] = vp.first;
      if (!c.contains(swapped)) c[swapped] = -vp.first;
    }
    file.problem->set_algebra(basis, c);
    file.problem->validate_algebra();
  }

  void fields_section() {
    for (const auto& src : logical_lines(sec.body["fields"], false)) {
      Parser ps(tokenize(src));
      Pos pos = ps.peek().pos;
      FieldDecl f;
      f.label = ps.ident("field label");
      declare_name(f.label, pos, names);
      ps.expect(":");
      std::string kind = ps.ident("scalar, tensor(p,q) or connection");
      if (kind == "scalar") {
        f.descriptor = GeometricDescriptor::scalar();
      } else if (kind == "tensor") {
        ps.expect("(");
        int up = integer(ps, "contravariant rank");
        ps.expect(",");
        int down = integer(ps, "covariant rank");
        ps.expect(")");
        f.descriptor = GeometricDescriptor::tensor(up, down);
      } else if (kind == "connection") {
        f.descriptor = GeometricDescriptor::connection();
      } else {
        throw ParseError(pos.line, pos.col, "unknown descriptor '" + kind + "'; expected scalar, tensor(p,q) or connection");
      }
      while (!ps.at_end()) {
        Pos mp = ps.peek().pos;
        std::string mod = ps.ident("modifier");
        if (mod == "symmetric") {
          f.descriptor.symmetry = IndexSymmetry::Symmetric;
        } else if (mod == "antisymmetric") {
          f.descriptor.symmetry = IndexSymmetry::Antisymmetric;
        } else if (mod == "weight") {
          ps.expect("(");
          f.descriptor.weight = rational(ps);
          ps.expect(")");
        } else if (mod == "metric") {
          f.metric = true;
        } else if (mod == "background") {
          f.background = true;
        } else if (mod == "signature") {
          ps.expect("(");
          f.signature.push_back(integer(ps, "sign"));
          while (ps.is(",")) {
            ps.next();
            f.signature.push_back(integer(ps, "sign"));
          }
          ps.expect(")");
        } else {
          throw ParseError(mp.line, mp.col,
                           "unknown modifier '" + mod + "'; expected symmetric, antisymmetric, weight(w), metric, background or signature(...)");
        }
      }
      if (f.descriptor.kind == FieldKind::PrincipalConnection && file.problem->algebra_dim() == 0) {
        semantic(pos, "connection '" + f.label + "' needs an [algebra] section");
      }
      file.problem->add_field(std::move(f));
    }
  }

  void define_section() {
    if (!sec.body.contains("define")) return;
    for (const auto& src : logical_lines(sec.body["define"], false)) {
      Parser ps(tokenize(src));
      Pos pos = ps.peek().pos;
      Macro m;
      m.pos = pos;
      std::string name = ps.ident("definition name");
      declare_name(name, pos, names);
      if (ps.is("(")) {
        ps.next();
        if (!ps.is(")")) {
          m.params.push_back(ps.ident("index parameter"));
          while (ps.is(",")) {
            ps.next();
            m.params.push_back(ps.ident("index parameter"));
          }
        }
        ps.expect(")");
      }
      ps.expect("=");
      m.body = ps.expr();
      if (!ps.at_end()) ps.fail("operator or end of definition");
      ctx.macros.emplace(name, std::move(m));
    }
  }

  Expression expression(Parser& ps, const Env& env = {}) {
    Node n = ps.expr();
    Evaluator ev(ctx);
    try {
      return ev.eval(n, env);
    } catch (const OrderOverflow& e) {
      semantic(n.pos, e.what());
    } catch (const UnknownAtom& e) {
      semantic(n.pos, e.what());
    }
  }

  void lagrangian_section() {
    auto lines = logical_lines(sec.body["lagrangian"], true);
    int hl = sec.header_line["lagrangian"];
    if (lines.empty()) throw ParseError(hl + 1, 1, "empty [lagrangian] section");
    const Source& src = lines.front();
    auto toks = tokenize(src);
    std::size_t from = 0;
    if (toks.size() > 2 && toks[0].kind == Tok::Ident && toks[0].text == "L" && toks[1].text == "=") from = 2;
    Parser ps(slice(toks, from));
    file.lagrangian = expression(ps);
    if (!ps.at_end()) ps.fail("operator or end of Lagrangian");
    file.lagrangian_source = src.text.substr(from ? src.text.find('=') + 1 : 0);
    int s = lagrangian_order(file.lagrangian);
    if (s > file.problem->order()) {
      semantic(toks[from].pos, "Lagrangian has jet order " + std::to_string(s) + " above the declared order " +
                                   std::to_string(file.problem->order()));
    }
  }

  void connection_section() {
    if (!sec.body.contains("connection")) return;
    JetProblem& p = *file.problem;
    ConnectionValue w = ConnectionValue::flat(p);
    for (const auto& src : logical_lines(sec.body["connection"], false)) {
      Parser ps(tokenize(src));
      Pos pos = ps.peek().pos;
      std::string key = ps.ident("'field' or 'omega'");
      if (key == "field") {
        ps.expect("=");
        std::string label = ps.ident("connection field label");
        auto f = p.find_field(label);
        if (!f) semantic(pos, "undeclared field '" + label + "'");
        try {
          w = ConnectionValue::from_field(p, *f);
        } catch (const Error& e) {
          semantic(pos, e.what());
        }
      } else if (key == "omega") {
        ps.expect("(");
        int a = integer(ps, "algebra index");
        ps.expect(",");
        int mu = integer(ps, "base index");
        ps.expect(")");
        ps.expect("=");
        if (a < 1 || a > p.algebra_dim() || mu < 1 || mu > p.n()) semantic(pos, "omega index out of range");
        w.omega[(a - 1) * p.n() + (mu - 1)] = expression(ps);
        if (!ps.at_end()) ps.fail("end of line");
      } else {
        throw ParseError(pos.line, pos.col, "expected 'field = LABEL' or 'omega(A,mu) = expr'");
      }
    }
    file.connection = w;
  }

  void generators_section() {
    if (!sec.body.contains("generators")) return;
    JetProblem& p = *file.problem;
    std::set<std::string> used;
    for (const auto& src : logical_lines(sec.body["generators"], false)) {
      Parser ps(tokenize(src));
      Pos pos = ps.peek().pos;
      GeneratorSpec g;
      g.line = pos.line;
      g.name = ps.ident("generator name");
      if (!used.insert(g.name).second) semantic(pos, "generator '" + g.name + "' declared twice");
      ps.expect("=");
      Pos kp = ps.peek().pos;
      g.kind = ps.ident("symbolic, natural, vertical, horizontal or explicit");
      if (g.kind == "symbolic") {
        g.generator = GaugeGenerator::symbolic_full(p);
      } else if (g.kind == "natural") {
        g.generator = GaugeGenerator::natural(p);
      } else if (g.kind == "vertical") {
        if (p.algebra_dim() == 0) semantic(kp, "vertical generator needs an [algebra] section");
        g.generator = GaugeGenerator::vertical(p);
      } else if (g.kind == "horizontal") {
        ConnectionValue w = file.connection ? *file.connection : ConnectionValue::flat(p);
        g.generator = GaugeGenerator::horizontal(p, w.omega);
      } else if (g.kind == "explicit") {
        ps.expect("(");
        std::vector<Expression> xi, xiA;
        std::vector<Expression>* dst = &xi;
        bool semicolon = false;
        while (!ps.is(")")) {
          if (ps.is(";")) {
            if (semicolon) ps.fail("')'");
            semicolon = true;
            dst = &xiA;
            ps.next();
            continue;
          }
          dst->push_back(expression(ps));
          if (ps.is(",")) {
            ps.next();
          } else if (!ps.is(";") && !ps.is(")")) {
            ps.fail("',', ';' or ')'");
          }
        }
        ps.next();
        if (static_cast<int>(xi.size()) != p.n()) semantic(kp, "explicit generator needs " + std::to_string(p.n()) + " base components");
        if (xiA.empty()) xiA.assign(p.algebra_dim(), Expression());
        if (static_cast<int>(xiA.size()) != p.algebra_dim()) {
          semantic(kp, "explicit generator needs " + std::to_string(p.algebra_dim()) + " algebra components");
        }
        for (const auto& e : xi)
          if (e.contains_kind(AtomKind::FieldJet) || e.contains_kind(AtomKind::ParamJet)) semantic(kp, "explicit components may depend on x only");
        g.generator = GaugeGenerator::explicit_field(xi, xiA);
      } else {
        throw ParseError(kp.line, kp.col, "unknown generator kind '" + g.kind + "'; expected symbolic, natural, vertical, horizontal or explicit");
      }
      if (!ps.at_end()) ps.fail("end of line");
      file.generators.push_back(std::move(g));
    }
  }

  void checks_section() {
    if (!sec.body.contains("checks")) return;
    static const std::set<std::string> kinds{"el",      "momentum", "first_variation", "eps",  "eps_tilde", "eta",
                                             "bianchi", "weak",     "strong",          "modes"};
    for (const auto& src : logical_lines(sec.body["checks"], false)) {
      Parser ps(tokenize(src));
      Pos pos = ps.peek().pos;
      CheckSpec c;
      c.line = pos.line;
      c.kind = ps.ident("check kind");
      if (!kinds.contains(c.kind)) {
        std::string all;
        for (const auto& k : kinds) all += (all.empty() ? "" : ", ") + k;
        throw ParseError(pos.line, pos.col, "unknown check '" + c.kind + "'; expected one of " + all);
      }
      std::vector<Node> positional;
      static const std::set<std::string> option_keys{"samples", "tol", "seed", "scale"};
      auto option_ahead = [&] {
        return ps.peek().kind == Tok::Ident && option_keys.contains(ps.peek().text) && ps.peek(1).kind == Tok::Punct &&
               ps.peek(1).text == "=";
      };
      while (!ps.at_end() && !ps.is("=") && !option_ahead()) positional.push_back(ps.primary());
      if (ps.is("=")) {
        ps.next();
        c.expected = expression(ps);
      }
      while (!ps.at_end()) {
        if (!option_ahead()) ps.fail("option samples=, tol=, seed= or scale=, or end of line");
        std::string key = ps.next().text;
        ps.next();
        std::string v;
        if (ps.is("-")) v += ps.next().text;
        if (ps.at_end()) ps.fail("option value");
        v += ps.next().text;
        c.options[key] = v;
      }
      Evaluator ev(ctx);
      for (const auto& node : positional) {
        if (node.kind == Node::K::Ident && !file.problem->find_field(node.name)) {
          c.words.push_back(node.name);
        } else if (node.kind == Node::K::Num) {
          c.words.push_back(std::to_string(ev.index(node, {})));
        } else {
          Expression e = ev.eval(node, {});
          auto atoms = e.atoms();
          if (e.size() != 1 || atoms.size() != 1 || atoms[0].kind() != AtomKind::FieldJet) semantic(node.pos, "expected a field component");
          c.words.push_back("#" + std::to_string(atoms[0].index()));
        }
      }
      for (const auto& w : c.words) {
        if (!w.empty() && std::isalpha(static_cast<unsigned char>(w[0])) && c.kind != "el") {
          bool known = std::any_of(file.generators.begin(), file.generators.end(), [&](const GeneratorSpec& g) { return g.name == w; });
          if (!known) semantic(pos, "undeclared generator '" + w + "'");
        }
      }
      file.checks.push_back(std::move(c));
    }
  }
};

}  // namespace

double CheckSpec::number(const std::string& key, double fallback) const {
  auto it = options.find(key);
  if (it == options.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw SemanticError("line " + std::to_string(line) + ": option " + key + " needs a number");
  }
}

const GeneratorSpec& ProblemFile::generator(const std::string& n) const {
  for (const auto& g : generators)
    if (g.name == n) return g;
  throw SemanticError("undeclared generator '" + n + "'");
}

ProblemFile parse_problem(const std::string& text) {
  Builder b;
  b.sec = split_sections(text);
  b.problem_section();
  b.algebra_section();
  b.fields_section();
  b.define_section();
  b.lagrangian_section();
  b.connection_section();
  b.generators_section();
  b.checks_section();
  return std::move(b.file);
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SemanticError("cannot read problem file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

Expression parse_expression(const JetProblem& p, const std::string& text) {
  Context ctx;
  ctx.p = const_cast<JetProblem*>(&p);  // evaluation only reads the problem
  ctx.allow_macros = false;
  Source src;
  for (std::size_t i = 0; i < text.size(); ++i) {
    src.text.push_back(text[i] == '\n' ? ' ' : text[i]);
    src.pos.push_back(Pos{1, static_cast<int>(i) + 1});
  }
  src.pos.push_back(Pos{1, static_cast<int>(text.size()) + 1});
  Parser ps(tokenize(src));
  Node n = ps.expr();
  if (!ps.at_end()) ps.fail("operator or end of expression");
  Evaluator ev(ctx);
  return ev.eval(n, {});
}

}  // namespace jetvar::cli
