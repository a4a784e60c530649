#include "seis/linearize.hpp"

#include <cmath>

namespace seis {

bool LinearConstraint::satisfied(const std::array<double, 5>& x, double tol) const {
  double lhs = 0.0;
  for (int i = 0; i < 5; ++i) lhs += coeffs[i] * x[i];
  switch (sense) {
    case Sense::less_equal: return lhs <= rhs + tol;
    case Sense::greater_equal: return lhs >= rhs - tol;
    case Sense::equal: return std::abs(lhs - rhs) <= tol;
  }
  return false;
}

namespace {

// z = a * b for binaries a, b:  z <= a,  z <= b,  z >= a + b - 1.
void mccormick(std::vector<LinearConstraint>& out, int z, int a, int b) {
  LinearConstraint le_a, le_b, ge;
  le_a.coeffs[z] = 1.0;
  le_a.coeffs[a] = -1.0;
  le_b.coeffs[z] = 1.0;
  le_b.coeffs[b] = -1.0;
  ge.coeffs[z] = 1.0;
  ge.coeffs[a] = -1.0;
  ge.coeffs[b] = -1.0;
  ge.sense = Sense::greater_equal;
  ge.rhs = -1.0;
  out.push_back(le_a);
  out.push_back(le_b);
  out.push_back(ge);
}

}  // namespace

std::vector<LinearConstraint> linearize_triple_product() {
  std::vector<LinearConstraint> rows;
  mccormick(rows, z_pair, u_line, u_from);
  mccormick(rows, z_triple, z_pair, u_to);
  return rows;
}

std::array<BranchRow, 2> branch_voltage_bigm(double resistance, double reactance, double big_m) {
  // Upper:  v_i - v_j - rho p - chi q + M z <= M
  // Lower: -v_i + v_j + rho p + chi q + M z <= M
  BranchRow upper{{1.0, -1.0, -resistance, -reactance, big_m}, big_m};
  BranchRow lower{{-1.0, 1.0, resistance, reactance, big_m}, big_m};
  return {upper, lower};
}

}  // namespace seis
