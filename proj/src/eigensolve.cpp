// SPDX-License-Identifier: MIT

#include "hpdg/eigensolve.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#ifdef HPDG_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

namespace hpdg {

namespace {

using SparseMat = Eigen::SparseMatrix<double>;

// B - shift I is positive definite whenever the shift sits below the
// spectrum, so a Cholesky factorization doubles as the validity check.
#ifdef HPDG_HAVE_CHOLMOD
using SymmetricFactor = Eigen::CholmodSupernodalLLT<SparseMat>;
#else
using SymmetricFactor = Eigen::SimplicialLDLT<SparseMat>;
#endif

double max_entry(const SparseMat& matrix) {
  double out = 0.0;
  for (int k = 0; k < matrix.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(matrix, k); it; ++it) {
      out = std::max(out, std::abs(it.value()));
    }
  }
  return out;
}

// Portable uniform in [-1, 1): mt19937_64 output mapped directly, so results
// do not depend on the standard library's distribution internals.
double uniform_pm1(std::mt19937_64& rng) {
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform_pm1(rng);
  return v;
}

void orthogonalize(Eigen::VectorXd& w, const Eigen::MatrixXd& basis,
                   Eigen::Index cols) {
  if (cols == 0) return;
  auto v = basis.leftCols(cols);
  w.noalias() -= v * (v.transpose() * w);
  w.noalias() -= v * (v.transpose() * w);
}

// Back-transform, M-normalize, fix the sign, measure the true residual.
EigenPair finalize_pair(const OperatorPair& op, double lambda,
                        const Eigen::VectorXd& x) {
  EigenPair pair;
  pair.lambda = lambda;
  Eigen::VectorXd u = x.cwiseQuotient(op.mass.cwiseSqrt());
  const double mnorm = std::sqrt(u.dot(op.mass.cwiseProduct(u)));
  u /= mnorm;
  Eigen::Index imax = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (std::abs(u[i]) > best) {
      best = std::abs(u[i]);
      imax = i;
    }
  }
  if (u[imax] < 0.0) u = -u;
  pair.coefficients = std::move(u);
  pair.mnorm = std::sqrt(pair.coefficients.dot(
      op.mass.cwiseProduct(pair.coefficients)));
  Eigen::VectorXd r = op.stiffness * pair.coefficients -
                      lambda * op.mass.cwiseProduct(pair.coefficients);
  pair.residual = r.norm();
  return pair;
}

void check_residuals(const std::vector<EigenPair>& pairs, double tol,
                     double operator_scale) {
  const double bound = tol * std::max(1.0, operator_scale);
  for (const auto& p : pairs) {
    if (!(p.residual <= bound)) {
      throw std::runtime_error("eigensolver residual above tolerance");
    }
  }
}

std::vector<EigenPair> solve_symmetric(const OperatorPair& op,
                                       const SparseMat& standard, int k,
                                       const SolveOptions& options) {
  const Eigen::Index n = standard.rows();
  SparseMat shifted = standard;
  if (options.shift != 0.0) {
    SparseMat identity(n, n);
    identity.setIdentity();
    shifted -= options.shift * identity;
  }
  shifted.makeCompressed();
  SymmetricFactor factor;
#ifdef HPDG_HAVE_CHOLMOD
  // Nested dissection cuts the factor flops by a third on large 3D meshes;
  // the default minimum-degree ordering is cheaper below that size.
  if (n >= 30000) {
    factor.cholmod().nmethods = 1;
    factor.cholmod().method[0].ordering = CHOLMOD_NESDIS;
  }
#endif
  factor.compute(shifted);
  if (factor.info() != Eigen::Success) {
    throw std::runtime_error("shift-invert factorization failed");
  }
#ifndef HPDG_HAVE_CHOLMOD
  // LDLT succeeds on indefinite matrices, so check the inertia explicitly;
  // a negative pivot means the shift sits inside the spectrum.
  if ((factor.vectorD().array() <= 0.0).any()) {
    throw std::runtime_error("shift-invert factorization failed");
  }
#endif

  std::mt19937_64 rng(options.seed);
  Eigen::MatrixXd locked(n, 0);
  std::vector<double> locked_nu;  // eigenvalue of (B - shift)^-1, descending order found
  int applications = 0;

  // One Lanczos cycle against the deflated operator; locks converged Ritz
  // pairs from the top of the inverted spectrum (smallest lambda first).
  // The basis stops growing as soon as `wanted` pairs have converged.
  auto converged_from_top =
      [](const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& small,
         Eigen::Index steps, double last_beta) -> int {
    const double nu_top = std::abs(small.eigenvalues()[steps - 1]);
    int count = 0;
    for (Eigen::Index i = steps - 1; i >= 0; --i) {
      if (last_beta * std::abs(small.eigenvectors()(steps - 1, i)) >
          1e-13 * nu_top) {
        break;
      }
      ++count;
    }
    return count;
  };

  auto cycle = [&](int wanted) -> int {
    const Eigen::Index room = n - locked.cols();
    if (room <= 0) return 0;
    const Eigen::Index m =
        std::min<Eigen::Index>(room, std::max(2 * k + 20, 30));
    Eigen::MatrixXd basis(n, m + 1);
    Eigen::VectorXd alpha(m), beta(m);

    Eigen::VectorXd v = random_vector(rng, n);
    orthogonalize(v, locked, locked.cols());
    while (v.norm() < 1e-8) {
      v = random_vector(rng, n);
      orthogonalize(v, locked, locked.cols());
    }
    basis.col(0) = v / v.norm();

    Eigen::Index steps = 0;
    bool breakdown = false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (++applications > options.max_iter) {
        throw std::runtime_error("eigensolver did not converge within max_iter");
      }
      Eigen::VectorXd w = factor.solve(basis.col(j));
      alpha[j] = basis.col(j).dot(w);
      w -= alpha[j] * basis.col(j);
      if (j > 0) w -= beta[j - 1] * basis.col(j - 1);
      orthogonalize(w, basis, j + 1);
      orthogonalize(w, locked, locked.cols());
      beta[j] = w.norm();
      steps = j + 1;
      if (beta[j] < 1e-280) {
        breakdown = true;
        break;
      }
      basis.col(j + 1) = w / beta[j];

      Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(steps, steps);
      for (Eigen::Index i = 0; i < steps; ++i) {
        tri(i, i) = alpha[i];
        if (i + 1 < steps) tri(i + 1, i) = tri(i, i + 1) = beta[i];
      }
      small.compute(tri);
      if (steps > 2 && converged_from_top(small, steps, beta[j]) >= wanted) {
        break;
      }
    }
    if (breakdown) {
      Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(steps, steps);
      for (Eigen::Index i = 0; i < steps; ++i) {
        tri(i, i) = alpha[i];
        if (i + 1 < steps) tri(i + 1, i) = tri(i, i + 1) = beta[i];
      }
      small.compute(tri);
    }
    const double last_beta = breakdown ? 0.0 : beta[steps - 1];
    const int ready = converged_from_top(small, steps, last_beta);

    int added = 0;
    for (int c = 0; c < ready; ++c) {
      const Eigen::Index i = steps - 1 - c;
      Eigen::VectorXd x = basis.leftCols(steps) * small.eigenvectors().col(i);
      orthogonalize(x, locked, locked.cols());
      const double norm = x.norm();
      if (norm < 0.1) continue;  // rediscovered a locked direction
      x /= norm;
      locked.conservativeResize(Eigen::NoChange, locked.cols() + 1);
      locked.col(locked.cols() - 1) = x;
      locked_nu.push_back(small.eigenvalues()[i]);
      ++added;
    }
    return added;
  };

  // Lock until k pairs are present, then keep restarting until a cycle finds
  // nothing new below the current k-th value; with an exhausted space there
  // is nothing left to certify.
  std::vector<double> lambdas;
  auto refresh_lambdas = [&]() {
    lambdas.clear();
    for (Eigen::Index c = 0; c < locked.cols(); ++c) {
      Eigen::VectorXd bx = standard * locked.col(c);
      lambdas.push_back(locked.col(c).dot(bx));
    }
  };
  while (static_cast<int>(locked.cols()) < std::min<Eigen::Index>(k, n)) {
    const int need = k - static_cast<int>(locked.cols());
    if (cycle(need) == 0 && static_cast<int>(locked.cols()) < k &&
        locked.cols() < n) {
      continue;  // unlucky start vector; rng state advanced, try again
    }
  }
  refresh_lambdas();
  while (locked.cols() < n) {
    std::vector<double> sorted = lambdas;
    std::sort(sorted.begin(), sorted.end());
    const double kth = sorted[static_cast<std::size_t>(k - 1)];
    const Eigen::Index before = locked.cols();
    cycle(1);
    refresh_lambdas();
    bool improved = false;
    for (Eigen::Index c = before; c < locked.cols(); ++c) {
      if (lambdas[static_cast<std::size_t>(c)] <
          kth * (1.0 - 1e-12) - 1e-300) {
        improved = true;
      }
    }
    if (!improved) break;
  }

  std::vector<int> order(lambdas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return lambdas[static_cast<std::size_t>(a)] <
                                       lambdas[static_cast<std::size_t>(b)]; });

  std::vector<EigenPair> out;
  const int take = std::min<int>(k, static_cast<int>(order.size()));
  out.reserve(static_cast<std::size_t>(take));
  for (int i = 0; i < take; ++i) {
    const int c = order[static_cast<std::size_t>(i)];
    out.push_back(finalize_pair(op, lambdas[static_cast<std::size_t>(c)],
                                locked.col(c)));
  }
  check_residuals(out, options.tol, max_entry(standard));
  return out;
}

std::vector<EigenPair> solve_nonsymmetric(const OperatorPair& op,
                                          const SparseMat& standard, int k,
                                          const SolveOptions& options) {
  const Eigen::Index n = standard.rows();
  SparseMat shifted = standard;
  if (options.shift != 0.0) {
    SparseMat identity(n, n);
    identity.setIdentity();
    shifted -= options.shift * identity;
  }
  shifted.makeCompressed();
  Eigen::SparseLU<SparseMat> factor(shifted);
  if (factor.info() != Eigen::Success) {
    throw std::runtime_error("shift-invert factorization failed");
  }

  std::mt19937_64 rng(options.seed);
  Eigen::VectorXd start = random_vector(rng, n);
  int applications = 0;

  while (true) {
    const Eigen::Index m = std::min<Eigen::Index>(n, std::max(3 * k + 30, 60));
    Eigen::MatrixXd basis(n, m + 1);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m + 1, m);
    if (start.norm() < 1e-290) start = random_vector(rng, n);
    basis.col(0) = start / start.norm();

    Eigen::Index steps = 0;
    bool breakdown = false;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (++applications > options.max_iter) {
        throw std::runtime_error("eigensolver did not converge within max_iter");
      }
      Eigen::VectorXd w = factor.solve(basis.col(j));
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i <= j; ++i) {
          const double h = basis.col(i).dot(w);
          hess(i, j) += h;
          w -= h * basis.col(i);
        }
      }
      hess(j + 1, j) = w.norm();
      steps = j + 1;
      if (hess(j + 1, j) < 1e-280) {
        breakdown = true;
        break;
      }
      basis.col(j + 1) = w / hess(j + 1, j);
    }

    Eigen::EigenSolver<Eigen::MatrixXd> small(hess.topLeftCorner(steps, steps));
    std::vector<int> order(static_cast<std::size_t>(steps));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(small.eigenvalues()[a]) > std::abs(small.eigenvalues()[b]);
    });

    const int want = std::min<int>(k, static_cast<int>(steps));
    const double last = breakdown ? 0.0 : hess(steps, steps - 1);
    const double nu_top = std::abs(small.eigenvalues()[order[0]]);
    bool converged = true;
    for (int i = 0; i < want; ++i) {
      const auto& vec = small.eigenvectors().col(order[static_cast<std::size_t>(i)]);
      if (std::abs(last) * std::abs(vec[steps - 1]) > 1e-12 * nu_top) {
        converged = false;
        break;
      }
    }

    if (!converged) {
      // Restart from the dominant Ritz directions.
      Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < want; ++i) {
        const auto& vec = small.eigenvectors().col(order[static_cast<std::size_t>(i)]);
        next += (basis.leftCols(steps) * vec.real()).normalized();
      }
      start = next;
      continue;
    }

    std::vector<EigenPair> out;
    out.reserve(static_cast<std::size_t>(want));
    for (int i = 0; i < want; ++i) {
      const int c = order[static_cast<std::size_t>(i)];
      const std::complex<double> nu = small.eigenvalues()[c];
      const std::complex<double> lam = options.shift + 1.0 / nu;
      if (std::abs(lam.imag()) > 1e-8 * std::max(1.0, std::abs(lam.real()))) {
        throw std::runtime_error("eigenvalue has a non-negligible imaginary part");
      }
      Eigen::VectorXcd xc = basis.leftCols(steps) * small.eigenvectors().col(c);
      Eigen::VectorXd x = xc.real();
      if (x.norm() < 1e-8) x = xc.imag();
      out.push_back(finalize_pair(op, lam.real(), x / x.norm()));
    }
    std::sort(out.begin(), out.end(), [](const EigenPair& a, const EigenPair& b) {
      return a.lambda < b.lambda;
    });
    check_residuals(out, options.tol, max_entry(standard));
    return out;
  }
}

}  // namespace

Eigen::SparseMatrix<double> to_standard(const OperatorPair& op) {
  for (Eigen::Index i = 0; i < op.mass.size(); ++i) {
    if (!(op.mass[i] > 0.0)) {
      throw std::runtime_error("mass matrix must have positive entries");
    }
  }
  Eigen::VectorXd scale = op.mass.cwiseSqrt().cwiseInverse();
  SparseMat standard =
      scale.asDiagonal() * op.stiffness * scale.asDiagonal();
  return standard;
}

std::vector<EigenPair> solve_smallest(const OperatorPair& op,
                                      const SolveOptions& options) {
  if (options.k < 1) throw std::invalid_argument("k must be at least 1");
  if (!(options.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const SparseMat standard = to_standard(op);
  const int k = std::min<int>(options.k, static_cast<int>(standard.rows()));
  if (op.theta == 1.0) return solve_symmetric(op, standard, k, options);
  return solve_nonsymmetric(op, standard, k, options);
}

std::vector<EigenPair> dense_oracle(const OperatorPair& op, int k) {
  if (op.theta != 1.0) {
    throw std::invalid_argument("dense oracle requires the symmetric variant");
  }
  if (op.mass.size() > 2000) {
    throw std::runtime_error("dense oracle limited to N <= 2000");
  }
  const Eigen::MatrixXd standard = Eigen::MatrixXd(to_standard(op));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(standard);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("dense eigendecomposition failed");
  }
  const int take = std::min<int>(k, static_cast<int>(standard.rows()));
  std::vector<EigenPair> out;
  out.reserve(static_cast<std::size_t>(take));
  for (int i = 0; i < take; ++i) {
    out.push_back(finalize_pair(op, solver.eigenvalues()[i],
                                solver.eigenvectors().col(i)));
  }
  return out;
}

}  // namespace hpdg
