// SPDX-License-Identifier: MIT

#include "hpdg/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace hpdg {

void legendre_values(int p, double x, double* val, double* d1, double* d2) {
  double pm1 = 1.0;
  double pm2 = 0.0;
  double dm1 = 0.0;
  double dm2 = 0.0;
  double sm1 = 0.0;
  double sm2 = 0.0;
  for (int k = 0; k <= p; ++k) {
    const double norm = std::sqrt(k + 0.5);
    val[k] = norm * pm1;
    if (d1 != nullptr) d1[k] = norm * dm1;
    if (d2 != nullptr) d2[k] = norm * sm1;
    const double a = (2.0 * k + 1.0) / (k + 1.0);
    const double b = static_cast<double>(k) / (k + 1.0);
    const double pk = a * x * pm1 - b * pm2;
    const double dk = a * (pm1 + x * dm1) - b * dm2;
    const double sk = a * (2.0 * dm1 + x * sm1) - b * sm2;
    pm2 = pm1;
    pm1 = pk;
    dm2 = dm1;
    dm1 = dk;
    sm2 = sm1;
    sm1 = sk;
  }
}

ReferenceBasis::ReferenceBasis(int dim, int degree) : dim_(dim), degree_(degree) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("basis: dim must be in [1, 3]");
  if (degree < 0) throw std::invalid_argument("basis: degree must be >= 0");
  size_ = 1;
  for (int a = 0; a < dim; ++a) size_ *= degree + 1;
  index_.resize(static_cast<std::size_t>(size_));
  std::array<int, 3> mi{0, 0, 0};
  for (int i = 0; i < size_; ++i) {
    index_[static_cast<std::size_t>(i)] = mi;
    for (int a = dim - 1; a >= 0; --a) {
      auto& c = mi[static_cast<std::size_t>(a)];
      if (++c <= degree) break;
      c = 0;
    }
  }
}

void ReferenceBasis::eval(const double* xi, double* values) const {
  std::array<std::vector<double>, 3> line;
  for (int a = 0; a < dim_; ++a) {
    line[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(degree_ + 1));
    legendre_values(degree_, xi[a], line[static_cast<std::size_t>(a)].data());
  }
  for (int i = 0; i < size_; ++i) {
    const auto& mi = index_[static_cast<std::size_t>(i)];
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) {
      v *= line[static_cast<std::size_t>(a)][static_cast<std::size_t>(mi[static_cast<std::size_t>(a)])];
    }
    values[i] = v;
  }
}

void ReferenceBasis::eval_grad(const double* xi, double* values, double* grads) const {
  std::array<std::vector<double>, 3> line;
  std::array<std::vector<double>, 3> dline;
  for (int a = 0; a < dim_; ++a) {
    line[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(degree_ + 1));
    dline[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(degree_ + 1));
    legendre_values(degree_, xi[a], line[static_cast<std::size_t>(a)].data(),
                    dline[static_cast<std::size_t>(a)].data());
  }
  for (int i = 0; i < size_; ++i) {
    const auto& mi = index_[static_cast<std::size_t>(i)];
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) {
      v *= line[static_cast<std::size_t>(a)][static_cast<std::size_t>(mi[static_cast<std::size_t>(a)])];
    }
    values[i] = v;
    for (int g = 0; g < dim_; ++g) {
      double dv = 1.0;
      for (int a = 0; a < dim_; ++a) {
        const auto k = static_cast<std::size_t>(mi[static_cast<std::size_t>(a)]);
        dv *= (a == g) ? dline[static_cast<std::size_t>(a)][k] : line[static_cast<std::size_t>(a)][k];
      }
      grads[i * dim_ + g] = dv;
    }
  }
}

void ReferenceBasis::eval_hessian(const double* xi, double* hess) const {
  std::array<std::vector<double>, 3> line;
  std::array<std::vector<double>, 3> dline;
  std::array<std::vector<double>, 3> sline;
  for (int a = 0; a < dim_; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    line[sa].resize(static_cast<std::size_t>(degree_ + 1));
    dline[sa].resize(static_cast<std::size_t>(degree_ + 1));
    sline[sa].resize(static_cast<std::size_t>(degree_ + 1));
    legendre_values(degree_, xi[a], line[sa].data(), dline[sa].data(), sline[sa].data());
  }
  const int terms = hessian_terms();
  for (int i = 0; i < size_; ++i) {
    const auto& mi = index_[static_cast<std::size_t>(i)];
    int t = 0;
    for (int a = 0; a < dim_; ++a) {
      for (int b = a; b < dim_; ++b) {
        double v = 1.0;
        for (int c = 0; c < dim_; ++c) {
          const auto sc = static_cast<std::size_t>(c);
          const auto k = static_cast<std::size_t>(mi[sc]);
          if (c == a && c == b) {
            v *= sline[sc][k];
          } else if (c == a || c == b) {
            v *= dline[sc][k];
          } else {
            v *= line[sc][k];
          }
        }
        hess[i * terms + t] = v;
        ++t;
      }
    }
  }
}

BasisTables tabulate(const ReferenceBasis& basis, const QuadratureRule& rule, bool with_grad) {
  BasisTables tables;
  const int nq = rule.size();
  const int nb = basis.size();
  tables.value.resize(nq, nb);
  if (with_grad) {
    for (int a = 0; a < basis.dim(); ++a) tables.grad[static_cast<std::size_t>(a)].resize(nq, nb);
  }
  std::vector<double> vals(static_cast<std::size_t>(nb));
  std::vector<double> grads(static_cast<std::size_t>(nb * basis.dim()));
  for (int q = 0; q < nq; ++q) {
    const double* xi = rule.points[static_cast<std::size_t>(q)].data();
    if (with_grad) {
      basis.eval_grad(xi, vals.data(), grads.data());
      for (int i = 0; i < nb; ++i) {
        for (int a = 0; a < basis.dim(); ++a) {
          tables.grad[static_cast<std::size_t>(a)](q, i) = grads[static_cast<std::size_t>(i * basis.dim() + a)];
        }
      }
    } else {
      basis.eval(xi, vals.data());
    }
    for (int i = 0; i < nb; ++i) tables.value(q, i) = vals[static_cast<std::size_t>(i)];
  }
  return tables;
}

}  // namespace hpdg
