// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "hpdg/mesh.hpp"
#include "hpdg/quadrature.hpp"

#include <iosfwd>

namespace hpdg {

// Block layout of the broken polynomial space: element blocks are contiguous
// and ordered by element id, block k has (degree_k + 1)^dim columns.
struct DofMap {
  std::vector<int> offset;  // size elements+1, offset.back() == total
  int total = 0;

  static DofMap build(const GradedMesh& mesh);

  int block_start(int element_id) const { return offset[element_id]; }
  int block_size(int element_id) const {
    return offset[element_id + 1] - offset[element_id];
  }
};

// V(x) = coefficient * r^{-alpha} + shift with r = |x|.
// coefficient == 0 turns the singular part off regardless of alpha.
struct Potential {
  double alpha = 0.0;
  double coefficient = 1.0;
  double shift = 0.0;

  bool has_singular_part() const { return coefficient != 0.0 && alpha != 0.0; }
};

struct QuadratureConfig {
  int extra = 2;    // points per direction = p + 1 + extra
  int shells = 10;  // composite shells on origin-touching elements

  int volume_points(int degree) const { return degree + 1 + extra; }
  int face_points(int degree) const { return degree + 1 + extra; }
};

// Mass matrix of the L2-orthonormal reference basis: exactly diagonal with
// entries (h_K/2)^dim, no quadrature involved.
Eigen::VectorXd assemble_mass_diagonal(const GradedMesh& mesh,
                                       const DofMap& dofs);

// Per-element stiffness plus potential blocks. Stiffness integrands are
// polynomial, so plain tensor Gauss is exact for them on every element; the
// potential picks the composite singular rule on origin-touching elements,
// reflected so its graded corner sits on the element's origin vertex.
// Throws std::runtime_error naming the element id if the potential evaluates
// to a non-finite value at a quadrature point.
Eigen::SparseMatrix<double> assemble_volume(const GradedMesh& mesh,
                                            const DofMap& dofs,
                                            const Potential& potential,
                                            const QuadratureConfig& quad);

// Interior penalty face terms:
//   -(<d_n u>, [v]) - theta (<d_n v>, [u]) + penalty p_e^2 / h_e ([u], [v])
// accumulated over interior faces, and over boundary faces too unless
// include_boundary is false (boundary traces are one-sided, enforcing the
// Dirichlet condition weakly). h_e is the finer side's h, p_e the larger
// degree; quadrature lives on the finer face.
Eigen::SparseMatrix<double> assemble_faces(const GradedMesh& mesh,
                                           const FaceSet& faces,
                                           const DofMap& dofs, double theta,
                                           double penalty,
                                           const QuadratureConfig& quad,
                                           bool include_boundary = true);

struct OperatorPair {
  Eigen::SparseMatrix<double> stiffness;  // volume + face terms
  Eigen::VectorXd mass;                   // diagonal of the mass matrix
  double theta = 1.0;
};

OperatorPair assemble_operator(const GradedMesh& mesh, const FaceSet& faces,
                               const DofMap& dofs, const Potential& potential,
                               double theta, double penalty,
                               const QuadratureConfig& quad);

// One "row col value" line per stored entry, row-major order, %.17g values.
void dump_matrix(const Eigen::SparseMatrix<double>& matrix, std::ostream& out);
void dump_diagonal(const Eigen::VectorXd& diag, std::ostream& out);

}  // namespace hpdg
