// SPDX-License-Identifier: MIT

#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "hpdg/quadrature.hpp"

namespace hpdg {

// L2-orthonormal Legendre values on [-1,1]: out[k] = sqrt(k + 1/2) P_k(x)
// for k = 0..p. Optional first and second derivative tables.
void legendre_values(int p, double x, double* val, double* d1 = nullptr, double* d2 = nullptr);

// Tensor-product modal basis on the reference cube [-1,1]^dim. Multi-indices
// run lexicographically with the first axis slowest, so index
// i = (i0 (p+1) + i1)(p+1) + i2 in 3D. The basis is L2-orthonormal on the
// reference cube, which keeps every element mass matrix diagonal.
class ReferenceBasis {
 public:
  ReferenceBasis(int dim, int degree);

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] int size() const { return size_; }
  [[nodiscard]] const std::array<int, 3>& multi_index(int i) const {
    return index_[static_cast<std::size_t>(i)];
  }

  // All basis values at one reference point; buffers sized size() and
  // size()*dim (gradient, axis fastest) and size()*n_second respectively.
  void eval(const double* xi, double* values) const;
  void eval_grad(const double* xi, double* values, double* grads) const;
  // Second partials ordered like multi-index pairs (a,b), a <= b.
  void eval_hessian(const double* xi, double* hess) const;
  [[nodiscard]] int hessian_terms() const { return dim_ * (dim_ + 1) / 2; }

 private:
  int dim_;
  int degree_;
  int size_;
  std::vector<std::array<int, 3>> index_;
};

// Dense tables over a quadrature rule: value(q, i), grad[a](q, i) with
// reference-coordinate derivatives.
struct BasisTables {
  Eigen::MatrixXd value;
  std::array<Eigen::MatrixXd, 3> grad;
};

BasisTables tabulate(const ReferenceBasis& basis, const QuadratureRule& rule, bool with_grad);

}  // namespace hpdg
