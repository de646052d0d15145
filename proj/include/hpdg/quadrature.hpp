// SPDX-License-Identifier: MIT

#pragma once

#include <array>
#include <vector>

namespace hpdg {

struct QuadratureRule {
  int dim = 1;
  std::vector<std::array<double, 3>> points;  // inside [-1,1]^dim
  std::vector<double> weights;
  [[nodiscard]] int size() const { return static_cast<int>(weights.size()); }
};

// Gauss-Legendre nodes and weights on [-1,1], exact for degree 2n-1.
// Newton iteration on the Legendre polynomial, nodes symmetrized.
void gauss_rule(int n, std::vector<double>& nodes, std::vector<double>& weights);

QuadratureRule tensor_gauss(int n, int dim);

// Composite rule for integrands with an r^-alpha singularity at the corner
// (-1,...,-1): m dyadic shells graded toward that corner, each shell covered
// by plain tensor Gauss boxes with n points per direction. m = 1 degenerates
// to tensor_gauss(n, dim). Every point stays strictly away from the corner.
QuadratureRule singular_cell_rule(int n, int dim, double alpha, int m);

}  // namespace hpdg
