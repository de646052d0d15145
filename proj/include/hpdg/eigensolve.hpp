// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Sparse>
#include <cstdint>
#include <vector>

#include "hpdg/assembly.hpp"

namespace hpdg {

struct EigenPair {
  double lambda = 0.0;
  Eigen::VectorXd coefficients;  // ||u||_M = 1, largest-magnitude entry > 0
  double residual = 0.0;         // ||A u - lambda M u||_2
  double mnorm = 1.0;
};

struct SolveOptions {
  int k = 1;
  double tol = 1e-10;
  int max_iter = 20000;  // cap on linear solves
  double shift = 0.0;    // must sit below the smallest eigenvalue
  std::uint64_t seed = 1;
};

// B = M^{-1/2} A M^{-1/2}; same eigenvalues as the pencil (A, M), vectors
// transform back through u = M^{-1/2} x. Throws on a non-positive mass entry.
Eigen::SparseMatrix<double> to_standard(const OperatorPair& op);

// k smallest eigenpairs, ascending. Symmetric operators run shift-invert
// Lanczos with full reorthogonalization on a sparse LDLT of B - shift I,
// locking converged pairs and restarting with fresh seeded vectors so
// degenerate clusters are picked up one copy at a time; a final restart
// certifies that nothing converges below the k-th locked value. The
// nonsymmetric variants run shift-invert Arnoldi on a sparse LU instead.
// Deterministic for a fixed seed. Throws on factorization failure,
// non-convergence within max_iter, or a residual above tolerance relative
// to the operator scale.
std::vector<EigenPair> solve_smallest(const OperatorPair& op,
                                      const SolveOptions& options);

// Full dense symmetric eigendecomposition of B, first k pairs. Test oracle;
// refuses N > 2000 and nonsymmetric variants.
std::vector<EigenPair> dense_oracle(const OperatorPair& op, int k);

}  // namespace hpdg
