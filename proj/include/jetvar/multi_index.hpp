#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "jetvar/rational.hpp"

namespace jetvar {

inline constexpr int kMaxBaseDim = 8;

// Derivative counts (alpha_1, ..., alpha_n) over the base directions.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(int dim);
  MultiIndex(std::initializer_list<int> counts);
  static MultiIndex from_vector(const std::vector<int>& counts);
  // The unit multi-index for direction `sigma` (0-based).
  static MultiIndex unit(int dim, int sigma);

  int dim() const { return dim_; }
  int operator[](int mu) const { return counts_[mu]; }
  void set(int mu, int value);
  int order() const;  // |alpha|
  bool is_zero() const { return order() == 0; }

  Rational factorial() const;  // alpha!

  MultiIndex plus(int sigma) const;
  // Returns false when alpha_sigma == 0.
  bool can_minus(int sigma) const { return counts_[sigma] > 0; }
  MultiIndex minus(int sigma) const;

  std::string to_string() const;

  // Graded-lex: lower total order first, then lexicographic on counts.
  friend std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b);
  friend bool operator==(const MultiIndex& a, const MultiIndex& b) = default;

  std::size_t hash() const;

 private:
  std::uint8_t dim_ = 0;
  std::array<std::uint8_t, kMaxBaseDim> counts_{};
};

MultiIndex mi_add(const MultiIndex& a, const MultiIndex& b);

// alpha! / (beta! gamma!) for beta + gamma = alpha.
Rational mi_multinomial(const MultiIndex& alpha, const MultiIndex& beta, const MultiIndex& gamma);

// All multi-indices of dimension `dim` with |alpha| == order, in graded-lex order.
std::vector<MultiIndex> multi_indices_of_order(int dim, int order);
// All multi-indices of dimension `dim` with |alpha| <= max_order, graded-lex.
std::vector<MultiIndex> multi_indices_up_to(int dim, int max_order);
// All beta <= alpha componentwise (gamma = alpha - beta is the complement).
std::vector<MultiIndex> sub_indices(const MultiIndex& alpha);

}  // namespace jetvar

template <>
struct std::hash<jetvar::MultiIndex> {
  std::size_t operator()(const jetvar::MultiIndex& m) const { return m.hash(); }
};
