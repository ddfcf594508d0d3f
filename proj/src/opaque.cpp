#include "jetvar/opaque.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "jetvar/errors.hpp"

namespace jetvar {

namespace {

using u64 = std::uint64_t;

u64 mulmod(u64 a, u64 b, u64 p) { return static_cast<u64>(static_cast<unsigned __int128>(a) * b % p); }

u64 powmod(u64 a, u64 e, u64 p) {
  u64 r = 1;
  a %= p;
  while (e) {
    if (e & 1) r = mulmod(r, a, p);
    a = mulmod(a, a, p);
    e >>= 1;
  }
  return r;
}

int arity_for(int n) { return n * (n + 1) / 2; }

std::vector<double> full_matrix(std::span<const double> upper, int n) {
  std::vector<double> m(n * n);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      double v = upper[MetricFamily::slot(n, a, b)];
      m[a * n + b] = v;
      m[b * n + a] = v;
    }
  }
  return m;
}

std::vector<u64> full_matrix_mod(std::span<const u64> upper, int n) {
  std::vector<u64> m(n * n);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      u64 v = upper[MetricFamily::slot(n, a, b)];
      m[a * n + b] = v;
      m[b * n + a] = v;
    }
  }
  return m;
}

void check_regular(double det) {
  if (!(std::abs(det) > 1e-300)) throw DomainError("singular metric (det = " + std::to_string(det) + ")");
}

FunctionId ginv_function(int n, int a, int b);
FunctionId sqrtg_function(int n, int sign);
FunctionId invdet_function(int n);

Expression ginv_call(int n, int a, int b, std::span<const Expression> args) {
  if (a > b) std::swap(a, b);
  return Expression(Atom::call(ginv_function(n, a, b), std::vector<Expression>(args.begin(), args.end())));
}

// (c, d) for argument slot k.
std::pair<int, int> slot_pair(int n, int k) {
  for (int c = 0; c < n; ++c) {
    for (int d = c; d < n; ++d) {
      if (MetricFamily::slot(n, c, d) == k) return {c, d};
    }
  }
  throw DomainError("metric slot out of range");
}

FunctionId ginv_function(int n, int a, int b) {
  OpaqueFunction f;
  f.name = "ginv";
  f.tags = {n, a, b};
  f.arity = arity_for(n);
  f.has_relations = true;
  f.partial = [n, a, b](std::span<const Expression> args, int slot) {
    auto [c, d] = slot_pair(n, slot);
    Expression r = -(ginv_call(n, a, c, args) * ginv_call(n, d, b, args));
    if (c != d) r -= ginv_call(n, a, d, args) * ginv_call(n, c, b, args);
    return r;
  };
  f.evaluate = [n, a, b](std::span<const double> args) {
    auto m = full_matrix(args, n);
    check_regular(determinant(m, n));
    return inverse(m, n)[a * n + b];
  };
  f.evaluate_mod = [n, a, b](std::span<const u64> args, u64 p) -> std::optional<u64> {
    auto inv = inverse_mod(full_matrix_mod(args, n), n, p);
    if (!inv) return std::nullopt;
    return (*inv)[a * n + b];
  };
  return register_function(std::move(f));
}

FunctionId sqrtg_function(int n, int sign) {
  OpaqueFunction f;
  f.name = "sqrtg";
  f.tags = {n, sign};
  f.arity = arity_for(n);
  f.has_relations = true;
  f.partial = [n, sign](std::span<const Expression> args, int slot) {
    auto [c, d] = slot_pair(n, slot);
    Expression s(Atom::call(sqrtg_function(n, sign), std::vector<Expression>(args.begin(), args.end())));
    Expression r = s * ginv_call(n, c, d, args);
    return c == d ? Rational(1, 2) * r : r;
  };
  f.evaluate = [n](std::span<const double> args) {
    double det = determinant(full_matrix(args, n), n);
    check_regular(det);
    return std::sqrt(std::abs(det));
  };
  f.evaluate_mod = [n, sign](std::span<const u64> args, u64 p) -> std::optional<u64> {
    auto det = determinant_mod(full_matrix_mod(args, n), n, p);
    if (!det || *det == 0) return std::nullopt;
    u64 v = sign > 0 ? *det : (p - *det) % p;
    return sqrt_mod(v, p);
  };
  return register_function(std::move(f));
}

FunctionId invdet_function(int n) {
  OpaqueFunction f;
  f.name = "invdet";
  f.tags = {n};
  f.arity = arity_for(n);
  f.has_relations = true;
  f.partial = [n](std::span<const Expression> args, int slot) {
    auto [c, d] = slot_pair(n, slot);
    Expression inv(Atom::call(invdet_function(n), std::vector<Expression>(args.begin(), args.end())));
    Expression r = -(inv * ginv_call(n, c, d, args));
    return c == d ? r : Rational(2) * r;
  };
  f.evaluate = [n](std::span<const double> args) {
    double det = determinant(full_matrix(args, n), n);
    check_regular(det);
    return 1.0 / det;
  };
  f.evaluate_mod = [n](std::span<const u64> args, u64 p) -> std::optional<u64> {
    auto det = determinant_mod(full_matrix_mod(args, n), n, p);
    if (!det || *det == 0) return std::nullopt;
    return powmod(*det, p - 2, p);
  };
  return register_function(std::move(f));
}

Expression symbolic_det(const std::vector<Expression>& m, int n) {
  if (n == 1) return m[0];
  Expression r;
  for (int c = 0; c < n; ++c) {
    if (m[c].is_zero()) continue;
    std::vector<Expression> minor;
    for (int i = 1; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (j != c) minor.push_back(m[i * n + j]);
      }
    }
    Expression term = m[c] * symbolic_det(minor, n - 1);
    r += (c % 2 == 0) ? term : -term;
  }
  return r;
}

}  // namespace

Atom constant_atom(const std::string& name) {
  OpaqueFunction f;
  f.name = name;
  f.arity = 0;
  return Atom::call(register_function(std::move(f)), {});
}

bool is_constant_atom(Atom a) {
  if (a.kind() != AtomKind::OpaqueCall) return false;
  const OpaqueFunction& f = function(a.index());
  return f.arity == 0 && !f.has_relations;
}

int MetricFamily::slot(int n, int a, int b) {
  if (a > b) std::swap(a, b);
  // Row-major upper triangle: rows before a contribute n + (n-1) + ... entries.
  return a * n - a * (a - 1) / 2 + (b - a);
}

MetricFamily::MetricFamily(int n, std::vector<Expression> upper, int sign) : n_(n), sign_(sign), upper_(std::move(upper)) {
  if (n < 1 || n > kMaxBaseDim) throw DimensionMismatch("metric dimension " + std::to_string(n));
  if (static_cast<int>(upper_.size()) != arity_for(n)) {
    throw DimensionMismatch("metric needs " + std::to_string(arity_for(n)) + " upper-triangular entries");
  }
  if (sign != 1 && sign != -1) throw DomainError("metric determinant sign must be +1 or -1");
  ginv_.resize(n * n);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      Atom at = Atom::call(ginv_function(n, a, b), upper_);
      ginv_[a * n + b] = at;
      ginv_[b * n + a] = at;
    }
  }
  sqrtg_ = Atom::call(sqrtg_function(n, sign), upper_);
}

const Expression& MetricFamily::g(int a, int b) const { return upper_.at(slot(n_, a, b)); }

Expression MetricFamily::ginv(int a, int b) const { return Expression(ginv_.at(a * n_ + b)); }

Expression MetricFamily::sqrtg() const { return Expression(sqrtg_); }

bool is_metric_function(FunctionId f) {
  const auto& fn = function(f);
  return fn.has_relations && (fn.name == "ginv" || fn.name == "sqrtg" || fn.name == "invdet");
}

Expression expand_inverse_metric(const Expression& e) {
  Bindings b;
  for (Atom a : e.atoms()) {
    if (a.kind() != AtomKind::OpaqueCall) continue;
    const auto& f = function(a.index());
    if (f.name != "ginv") continue;
    int n = f.tags[0], r = f.tags[1], c = f.tags[2];
    const auto& args = a.args();
    std::vector<Expression> m(n * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) m[i * n + j] = args[MetricFamily::slot(n, i, j)];
    }
    // adj(g)_{rc} = (-1)^{r+c} det(minor without row c, column r)
    std::vector<Expression> minor;
    for (int i = 0; i < n; ++i) {
      if (i == c) continue;
      for (int j = 0; j < n; ++j) {
        if (j != r) minor.push_back(m[i * n + j]);
      }
    }
    Expression cof = n == 1 ? Expression(1) : symbolic_det(minor, n - 1);
    if ((r + c) % 2) cof = -cof;
    Expression inv(Atom::call(invdet_function(n), args));
    b.emplace(a, cof * inv);
  }
  return substitute(e, b);
}

double determinant(const std::vector<double>& m, int n) {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> mat(m.data(), n, n);
  return mat.determinant();
}

std::vector<double> inverse(const std::vector<double>& m, int n) {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> mat(m.data(), n, n);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> inv = mat.inverse();
  return std::vector<double>(inv.data(), inv.data() + n * n);
}

std::optional<u64> determinant_mod(std::vector<u64> m, int n, u64 p) {
  u64 det = 1;
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    for (int r = col; r < n; ++r) {
      if (m[r * n + col] % p != 0) {
        piv = r;
        break;
      }
    }
    if (piv < 0) return u64{0};
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(m[piv * n + j], m[col * n + j]);
      det = (p - det) % p;
    }
    u64 d = m[col * n + col];
    det = mulmod(det, d, p);
    u64 inv = powmod(d, p - 2, p);
    for (int r = col + 1; r < n; ++r) {
      u64 factor = mulmod(m[r * n + col], inv, p);
      if (!factor) continue;
      for (int j = col; j < n; ++j) {
        m[r * n + j] = (m[r * n + j] + p - mulmod(factor, m[col * n + j], p)) % p;
      }
    }
  }
  return det;
}

std::optional<std::vector<u64>> inverse_mod(std::vector<u64> m, int n, u64 p) {
  std::vector<u64> inv(n * n, 0);
  for (int i = 0; i < n; ++i) inv[i * n + i] = 1;
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    for (int r = col; r < n; ++r) {
      if (m[r * n + col] % p != 0) {
        piv = r;
        break;
      }
    }
    if (piv < 0) return std::nullopt;
    if (piv != col) {
      for (int j = 0; j < n; ++j) {
        std::swap(m[piv * n + j], m[col * n + j]);
        std::swap(inv[piv * n + j], inv[col * n + j]);
      }
    }
    u64 d = powmod(m[col * n + col], p - 2, p);
    for (int j = 0; j < n; ++j) {
      m[col * n + j] = mulmod(m[col * n + j], d, p);
      inv[col * n + j] = mulmod(inv[col * n + j], d, p);
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      u64 factor = m[r * n + col];
      if (!factor) continue;
      for (int j = 0; j < n; ++j) {
        m[r * n + j] = (m[r * n + j] + p - mulmod(factor, m[col * n + j], p)) % p;
        inv[r * n + j] = (inv[r * n + j] + p - mulmod(factor, inv[col * n + j], p)) % p;
      }
    }
  }
  return inv;
}

std::optional<u64> sqrt_mod(u64 a, u64 p) {
  a %= p;
  if (a == 0) return u64{0};
  if (p % 4 != 3) throw DomainError("sqrt_mod requires p = 3 mod 4");
  u64 r = powmod(a, (p + 1) / 4, p);
  if (mulmod(r, r, p) != a) return std::nullopt;
  return r;
}

}  // namespace jetvar
