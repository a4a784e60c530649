#pragma once

#include <array>
#include <vector>

namespace seis {

/// Variable slots of the triple-product linearization.
enum TripleVar : int { u_line = 0, u_from = 1, u_to = 2, z_pair = 3, z_triple = 4 };

enum class Sense { less_equal, greater_equal, equal };

struct LinearConstraint {
  std::array<double, 5> coeffs{};  // indexed by TripleVar
  Sense sense = Sense::less_equal;
  double rhs = 0.0;

  bool satisfied(const std::array<double, 5>& x, double tol = 1e-12) const;
};

/// Pairwise McCormick envelope of u_line * u_from * u_to with binary auxiliaries:
/// z_pair = u_line * u_from, z_triple = z_pair * u_to.
std::vector<LinearConstraint> linearize_triple_product();

/// Big-M voltage-drop rows for an energized-or-relaxed branch:
/// -M (1 - z) <= v_i - v_j - (rho p + chi q) <= M (1 - z).
/// Variable order: (v_i, v_j, p, q, z). Returned as (coeffs, rhs) pairs in <= form.
struct BranchRow {
  std::array<double, 5> coeffs{};
  double rhs = 0.0;
};
std::array<BranchRow, 2> branch_voltage_bigm(double resistance, double reactance, double big_m = 10.0);

}  // namespace seis
