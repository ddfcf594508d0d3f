#pragma once

#include <map>
#include <vector>

#include "jetvar/expression.hpp"
#include "jetvar/problem.hpp"

namespace jetvar {

// Formal derivative D_sigma = d_sigma + y^i_{alpha+sigma} d/dy^i_alpha, extended
// to parameter jets by xi_alpha -> xi_{alpha+sigma} and through calls by the
// chain rule. Throws OrderOverflow past the problem's cap.
Expression total_derivative(const JetProblem& p, const Expression& e, int sigma);
// D_alpha = D_1^{alpha_1} ... D_n^{alpha_n}
Expression total_derivative(const JetProblem& p, const Expression& e, const MultiIndex& alpha);

// Horizontal densities of degree n, n-1 and n-2.
//   degree n:   L omega
//   degree n-1: eps^sigma omega_sigma
//   degree n-2: eta^{sigma mu} omega_{sigma mu}, summed over sigma < mu
// The (n-2) table is stored in full and must be antisymmetric.
class HorizontalDensity {
 public:
  static HorizontalDensity top(int n, Expression l);
  static HorizontalDensity current(std::vector<Expression> eps);
  // Full n x n row-major table.
  static HorizontalDensity superpotential(int n, std::vector<Expression> eta);
  // Upper triangle given; lower filled by antisymmetry.
  static HorizontalDensity superpotential_upper(int n, const std::map<std::pair<int, int>, Expression>& eta);

  int n() const { return n_; }
  int degree() const { return degree_; }
  const Expression& scalar() const;
  const Expression& eps(int sigma) const;
  const Expression& eta(int sigma, int mu) const;
  const std::vector<Expression>& components() const { return comps_; }

  friend bool operator==(const HorizontalDensity& a, const HorizontalDensity& b) = default;

 private:
  int n_ = 0;
  int degree_ = 0;
  std::vector<Expression> comps_;
};

// d_H: degree n-1 -> n (L = D_sigma eps^sigma), degree n-2 -> n-1
// (eps^sigma = D_mu eta^{sigma mu}). DegreeError on degree-n input.
HorizontalDensity dH(const JetProblem& p, const HorizontalDensity& d);

struct JetKey {
  int component;
  MultiIndex alpha;
  friend auto operator<=>(const JetKey& a, const JetKey& b) = default;
};

// (d_V lambda)^alpha_i = dL/dy^i_alpha for every field jet reached by L.
std::map<JetKey, Expression> dV_fiber_partials(const Expression& l);

}  // namespace jetvar
