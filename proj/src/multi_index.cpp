#include "jetvar/multi_index.hpp"

#include <algorithm>

#include "jetvar/errors.hpp"

namespace jetvar {

MultiIndex::MultiIndex(int dim) {
  if (dim < 0 || dim > kMaxBaseDim) throw DimensionMismatch("unsupported base dimension " + std::to_string(dim));
  dim_ = static_cast<std::uint8_t>(dim);
}

MultiIndex::MultiIndex(std::initializer_list<int> counts) : MultiIndex(static_cast<int>(counts.size())) {
  int i = 0;
  for (int c : counts) set(i++, c);
}

MultiIndex MultiIndex::from_vector(const std::vector<int>& counts) {
  MultiIndex m(static_cast<int>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i) m.set(static_cast<int>(i), counts[i]);
  return m;
}

MultiIndex MultiIndex::unit(int dim, int sigma) {
  MultiIndex m(dim);
  m.set(sigma, 1);
  return m;
}

void MultiIndex::set(int mu, int value) {
  if (mu < 0 || mu >= dim_) throw DimensionMismatch("direction " + std::to_string(mu) + " out of range");
  if (value < 0 || value > 255) throw DomainError("multi-index count out of range");
  counts_[mu] = static_cast<std::uint8_t>(value);
}

int MultiIndex::order() const {
  int s = 0;
  for (int i = 0; i < dim_; ++i) s += counts_[i];
  return s;
}

Rational MultiIndex::factorial() const {
  Rational r(1);
  for (int i = 0; i < dim_; ++i) r *= jetvar::factorial(counts_[i]);
  return r;
}

MultiIndex MultiIndex::plus(int sigma) const {
  MultiIndex m = *this;
  m.set(sigma, counts_[sigma] + 1);
  return m;
}

MultiIndex MultiIndex::minus(int sigma) const {
  if (!can_minus(sigma)) throw DomainError("multi-index count would become negative");
  MultiIndex m = *this;
  m.set(sigma, counts_[sigma] - 1);
  return m;
}

std::string MultiIndex::to_string() const {
  std::string s = "(";
  for (int i = 0; i < dim_; ++i) {
    if (i) s += ",";
    s += std::to_string(counts_[i]);
  }
  return s + ")";
}

std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b) {
  if (auto c = a.dim_ <=> b.dim_; c != 0) return c;
  if (auto c = a.order() <=> b.order(); c != 0) return c;
  for (int i = 0; i < a.dim_; ++i) {
    if (auto c = a.counts_[i] <=> b.counts_[i]; c != 0) return c;
  }
  return std::strong_ordering::equal;
}

std::size_t MultiIndex::hash() const {
  std::size_t h = dim_;
  for (int i = 0; i < dim_; ++i) h = h * 131 + counts_[i];
  return h;
}

MultiIndex mi_add(const MultiIndex& a, const MultiIndex& b) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("cannot add multi-indices of dimension " + std::to_string(a.dim()) + " and " +
                            std::to_string(b.dim()));
  }
  MultiIndex r(a.dim());
  for (int i = 0; i < a.dim(); ++i) r.set(i, a[i] + b[i]);
  return r;
}

Rational mi_multinomial(const MultiIndex& alpha, const MultiIndex& beta, const MultiIndex& gamma) {
  if (alpha.dim() != beta.dim() || alpha.dim() != gamma.dim()) throw DimensionMismatch("multinomial dimensions differ");
  if (mi_add(beta, gamma) != alpha) {
    throw NotAPartition(beta.to_string() + " + " + gamma.to_string() + " != " + alpha.to_string());
  }
  return alpha.factorial() / (beta.factorial() * gamma.factorial());
}

namespace {

void enumerate(int dim, int pos, int remaining, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (pos == dim - 1) {
    cur.set(pos, remaining);
    out.push_back(cur);
    return;
  }
  for (int c = remaining; c >= 0; --c) {
    cur.set(pos, c);
    enumerate(dim, pos + 1, remaining - c, cur, out);
  }
}

}  // namespace

std::vector<MultiIndex> multi_indices_of_order(int dim, int order) {
  std::vector<MultiIndex> out;
  if (dim == 0) {
    if (order == 0) out.emplace_back(0);
    return out;
  }
  MultiIndex cur(dim);
  enumerate(dim, 0, order, cur, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<MultiIndex> multi_indices_up_to(int dim, int max_order) {
  std::vector<MultiIndex> out;
  for (int k = 0; k <= max_order; ++k) {
    auto level = multi_indices_of_order(dim, k);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

std::vector<MultiIndex> sub_indices(const MultiIndex& alpha) {
  std::vector<MultiIndex> out;
  MultiIndex cur(alpha.dim());
  // Odometer over 0..alpha_i in each slot.
  while (true) {
    out.push_back(cur);
    int i = 0;
    for (; i < alpha.dim(); ++i) {
      if (cur[i] < alpha[i]) {
        cur.set(i, cur[i] + 1);
        break;
      }
      cur.set(i, 0);
    }
    if (i == alpha.dim()) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace jetvar
