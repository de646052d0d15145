// SPDX-License-Identifier: MIT

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "hpdg/assembly.hpp"
#include "hpdg/eigensolve.hpp"
#include "hpdg/mesh.hpp"

using hpdg::assemble_operator;
using hpdg::dense_oracle;
using hpdg::DofMap;
using hpdg::EigenPair;
using hpdg::enumerate_faces;
using hpdg::GradedMesh;
using hpdg::OperatorPair;
using hpdg::Potential;
using hpdg::QuadratureConfig;
using hpdg::Rational;
using hpdg::solve_smallest;
using hpdg::SolveOptions;
using hpdg::to_standard;

namespace {

OperatorPair make_operator(int dim, int levels, bool uniform, int p0,
                           const Potential& potential, double theta) {
  GradedMesh mesh = uniform ? hpdg::build_uniform_mesh(dim, levels)
                            : hpdg::build_graded_mesh(dim, levels, Rational(1, 2));
  hpdg::assign_degrees(mesh, p0, Rational(0, 1));
  const hpdg::FaceSet faces = enumerate_faces(mesh);
  const DofMap dofs = DofMap::build(mesh);
  return assemble_operator(mesh, faces, dofs, potential, theta, 10.0,
                           QuadratureConfig{});
}

double m_norm(const Eigen::VectorXd& mass, const Eigen::VectorXd& v) {
  return std::sqrt(v.dot(mass.cwiseProduct(v)));
}

double max_abs_diff(const Eigen::SparseMatrix<double>& a,
                    const Eigen::SparseMatrix<double>& b) {
  return (Eigen::MatrixXd(a) - Eigen::MatrixXd(b)).cwiseAbs().maxCoeff();
}

// Eigenvalues must match one by one; eigenvectors are compared per cluster,
// with principal angles taking over wherever the spectrum is degenerate.
void compare_with_oracle(const OperatorPair& op, const std::vector<EigenPair>& got,
                         const std::vector<EigenPair>& want) {
  REQUIRE(got.size() == want.size());
  const int k = static_cast<int>(got.size());
  for (int i = 0; i < k; ++i) {
    CHECK(got[i].lambda > 0.0);
    if (i > 0) CHECK(got[i].lambda >= got[i - 1].lambda);
    CHECK(std::abs(got[i].lambda - want[i].lambda) <= 1e-8);
  }
  int start = 0;
  while (start < k) {
    int end = start + 1;
    while (end < k &&
           want[end].lambda - want[end - 1].lambda <=
               1e-6 * std::max(1.0, std::abs(want[end].lambda))) {
      ++end;
    }
    if (end - start == 1) {
      Eigen::VectorXd u = got[start].coefficients;
      const Eigen::VectorXd& v = want[start].coefficients;
      if (u.dot(op.mass.cwiseProduct(v)) < 0.0) u = -u;
      CHECK(m_norm(op.mass, u - v) <= 1e-6);
    } else {
      const int width = end - start;
      Eigen::MatrixXd overlap(width, width);
      for (int a = 0; a < width; ++a) {
        for (int b = 0; b < width; ++b) {
          overlap(a, b) = got[start + a].coefficients.dot(
              op.mass.cwiseProduct(want[start + b].coefficients));
        }
      }
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(overlap);
      for (int a = 0; a < width; ++a) {
        CHECK(svd.singularValues()[a] == doctest::Approx(1.0).epsilon(1e-6));
      }
    }
    start = end;
  }
}

}  // namespace

TEST_CASE("standard form with unit mass returns the stiffness unchanged") {
  OperatorPair op = make_operator(2, 1, false, 1, Potential{0.0, 1.0, 0.0}, 1.0);
  op.mass.setOnes();
  CHECK(max_abs_diff(to_standard(op), op.stiffness) == 0.0);
}

TEST_CASE("standard form with equal mass entries is a scalar scaling") {
  const OperatorPair op =
      make_operator(2, 1, true, 1, Potential{0.0, 0.0, 0.0}, 1.0);
  for (Eigen::Index i = 0; i < op.mass.size(); ++i) {
    REQUIRE(op.mass[i] == 1.0 / 64.0);
  }
  Eigen::SparseMatrix<double> scaled = op.stiffness * 64.0;
  CHECK(max_abs_diff(to_standard(op), scaled) == 0.0);
}

TEST_CASE("standard form preserves the generalized spectrum") {
  const int n = 40;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::MatrixXd raw(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) raw(i, j) = unit(rng);
  }
  const Eigen::MatrixXd a = 0.5 * (raw + raw.transpose());
  Eigen::VectorXd mass(n);
  for (int i = 0; i < n; ++i) mass[i] = 1.5 + unit(rng);

  const Eigen::MatrixXd m = mass.asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> generalized(a, m);
  REQUIRE(generalized.info() == Eigen::Success);

  const OperatorPair op{Eigen::SparseMatrix<double>(a.sparseView()), mass, 1.0};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> standard(
      Eigen::MatrixXd(to_standard(op)));
  REQUIRE(standard.info() == Eigen::Success);

  const double scale = std::max(1.0, generalized.eigenvalues().cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i) {
    CHECK(std::abs(standard.eigenvalues()[i] - generalized.eigenvalues()[i]) <=
          1e-12 * scale);
  }
}

TEST_CASE("standard form rejects non-positive mass entries") {
  OperatorPair op = make_operator(2, 1, false, 1, Potential{0.0, 1.0, 0.0}, 1.0);
  op.mass[3] = 0.0;
  CHECK_THROWS_AS(to_standard(op), std::runtime_error);
  op.mass[3] = -1.0;
  CHECK_THROWS_AS(to_standard(op), std::runtime_error);
}

TEST_CASE("dense oracle solves a one-by-one system exactly") {
  Eigen::SparseMatrix<double> a(1, 1);
  a.insert(0, 0) = 3.5;
  Eigen::VectorXd m(1);
  m[0] = 2.0;
  const OperatorPair op{a, m, 1.0};
  const auto pairs = dense_oracle(op, 1);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].lambda == doctest::Approx(1.75).epsilon(1e-14));
  CHECK(pairs[0].coefficients[0] ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(pairs[0].mnorm == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pairs[0].residual <= 1e-14);

  // The iterative path degenerates to the same answer.
  const auto solved = solve_smallest(op, SolveOptions{});
  REQUIRE(solved.size() == 1);
  CHECK(solved[0].lambda == doctest::Approx(1.75).epsilon(1e-14));
}

TEST_CASE("dense oracle full spectrum reproduces the standard-form trace") {
  const OperatorPair op =
      make_operator(2, 1, false, 1, Potential{1.0, 1.0, 0.0}, 1.0);
  const int n = static_cast<int>(op.mass.size());
  double trace = 0.0;
  for (int i = 0; i < n; ++i) trace += op.stiffness.coeff(i, i) / op.mass[i];

  const auto pairs = dense_oracle(op, n);
  REQUIRE(static_cast<int>(pairs.size()) == n);
  double sum = 0.0;
  for (const auto& p : pairs) sum += p.lambda;
  CHECK(std::abs(sum - trace) <= 1e-9 * std::max(1.0, std::abs(trace)));
}

TEST_CASE("dense oracle guards its preconditions") {
  OperatorPair op = make_operator(2, 1, false, 1, Potential{0.0, 1.0, 0.0}, 1.0);
  op.theta = 0.5;
  CHECK_THROWS_AS(dense_oracle(op, 1), std::invalid_argument);

  const int n = 2048;
  Eigen::SparseMatrix<double> identity(n, n);
  identity.setIdentity();
  const OperatorPair big{identity, Eigen::VectorXd::Ones(n), 1.0};
  CHECK_THROWS_AS(dense_oracle(big, 1), std::runtime_error);
}

TEST_CASE("shift-invert agrees with the dense oracle on small meshes") {
  struct Config {
    int dim, levels, p0, k;
    bool uniform;
    Potential potential;
  };
  const Config configs[] = {
      {2, 2, 1, 6, false, Potential{0.5, 1.0, 0.0}},
      {2, 2, 1, 6, false, Potential{1.0, 1.0, 0.0}},
      {2, 2, 2, 6, true, Potential{0.0, 0.0, 0.0}},
      {2, 2, 1, 6, true, Potential{1.0, 1.0, 0.0}},
      {3, 1, 1, 7, false, Potential{1.0, 1.0, 0.0}},
  };
  for (const auto& c : configs) {
    CAPTURE(c.dim);
    CAPTURE(c.levels);
    CAPTURE(c.uniform);
    const OperatorPair op =
        make_operator(c.dim, c.levels, c.uniform, c.p0, c.potential, 1.0);
    const auto want = dense_oracle(op, c.k);
    SolveOptions options;
    options.k = c.k;
    const auto got = solve_smallest(op, options);
    compare_with_oracle(op, got, want);
  }
}

TEST_CASE("computed eigenpairs are M-orthonormal with the declared signs") {
  const OperatorPair op =
      make_operator(2, 2, false, 1, Potential{1.0, 1.0, 0.0}, 1.0);
  SolveOptions options;
  options.k = 6;
  const auto pairs = solve_smallest(op, options);
  REQUIRE(pairs.size() == 6);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs[i].mnorm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pairs[i].residual >= 0.0);
    Eigen::Index arg = 0;
    pairs[i].coefficients.cwiseAbs().maxCoeff(&arg);
    CHECK(pairs[i].coefficients[arg] > 0.0);
    for (std::size_t j = 0; j <= i; ++j) {
      const double inner =
          pairs[i].coefficients.dot(op.mass.cwiseProduct(pairs[j].coefficients));
      CHECK(std::abs(inner - (i == j ? 1.0 : 0.0)) <= 10.0 * options.tol);
    }
  }
}

TEST_CASE("a fixed seed reproduces the solve bitwise") {
  const OperatorPair op =
      make_operator(2, 2, false, 1, Potential{0.5, 1.0, 0.0}, 1.0);
  SolveOptions options;
  options.k = 3;
  options.seed = 7;
  const auto first = solve_smallest(op, options);
  const auto second = solve_smallest(op, options);
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].lambda == second[i].lambda);
    REQUIRE(first[i].coefficients.size() == second[i].coefficients.size());
    bool same = true;
    for (Eigen::Index j = 0; j < first[i].coefficients.size(); ++j) {
      same = same && first[i].coefficients[j] == second[i].coefficients[j];
    }
    CHECK(same);
  }

  options.seed = 8;
  const auto other = solve_smallest(op, options);
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(std::abs(other[i].lambda - first[i].lambda) <=
          1e-9 * std::max(1.0, std::abs(first[i].lambda)));
  }
}

TEST_CASE("uniformly refined square recovers the Dirichlet ground state") {
  const OperatorPair op =
      make_operator(2, 4, true, 3, Potential{0.0, 0.0, 0.0}, 1.0);
  const auto pairs = solve_smallest(op, SolveOptions{});
  const double exact = 2.0 * std::numbers::pi * std::numbers::pi;
  CHECK(std::abs(pairs[0].lambda - exact) <= 1e-6);
}

TEST_CASE("uniformly refined cube recovers the Dirichlet ground state") {
  const OperatorPair op =
      make_operator(3, 2, true, 3, Potential{0.0, 0.0, 0.0}, 1.0);
  const auto pairs = solve_smallest(op, SolveOptions{});
  const double exact = 3.0 * std::numbers::pi * std::numbers::pi;
  CHECK(std::abs(pairs[0].lambda - exact) <= 1e-4);
}

TEST_CASE("a constant added to the potential shifts every eigenvalue by one") {
  const OperatorPair base =
      make_operator(2, 2, false, 1, Potential{0.5, 1.0, 0.0}, 1.0);
  const OperatorPair lifted =
      make_operator(2, 2, false, 1, Potential{0.5, 1.0, 1.0}, 1.0);

  const auto want = dense_oracle(base, 3);
  const auto want_lifted = dense_oracle(lifted, 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(want_lifted[i].lambda - want[i].lambda - 1.0) <= 1e-10);
  }

  SolveOptions options;
  options.k = 3;
  const auto got = solve_smallest(base, options);
  const auto got_lifted = solve_smallest(lifted, options);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(got_lifted[i].lambda - got[i].lambda - 1.0) <= 1e-10);
  }
}

TEST_CASE("scaling both matrices leaves the spectrum unchanged") {
  const OperatorPair op =
      make_operator(2, 2, false, 1, Potential{1.0, 1.0, 0.0}, 1.0);
  OperatorPair scaled = op;
  scaled.stiffness = op.stiffness * 7.0;
  scaled.mass = op.mass * 7.0;

  const auto base = dense_oracle(op, 5);
  const auto same = dense_oracle(scaled, 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(same[i].lambda - base[i].lambda) <=
          1e-12 * std::abs(base[i].lambda));
  }

  SolveOptions options;
  options.k = 2;
  const auto got = solve_smallest(op, options);
  const auto got_scaled = solve_smallest(scaled, options);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(got_scaled[i].lambda - got[i].lambda) <=
          1e-12 * std::abs(got[i].lambda));
  }
}

TEST_CASE("nonsymmetric variants agree with a dense complex oracle") {
  for (const double theta : {-1.0, 0.0}) {
    CAPTURE(theta);
    const OperatorPair op =
        make_operator(2, 1, false, 1, Potential{0.5, 1.0, 0.0}, theta);

    const Eigen::MatrixXd standard(to_standard(op));
    Eigen::EigenSolver<Eigen::MatrixXd> oracle(standard);
    REQUIRE(oracle.info() == Eigen::Success);
    std::vector<double> real_parts;
    for (Eigen::Index i = 0; i < standard.rows(); ++i) {
      const std::complex<double> value = oracle.eigenvalues()[i];
      REQUIRE(std::abs(value.imag()) <=
              1e-8 * std::max(1.0, std::abs(value.real())));
      real_parts.push_back(value.real());
    }
    std::sort(real_parts.begin(), real_parts.end());

    SolveOptions options;
    options.k = 3;
    const auto got = solve_smallest(op, options);
    REQUIRE(got.size() == 3);
    for (int i = 0; i < 3; ++i) {
      CHECK(got[i].lambda > 0.0);
      if (i > 0) CHECK(got[i].lambda >= got[i - 1].lambda);
      CHECK(std::abs(got[i].lambda - real_parts[static_cast<std::size_t>(i)]) <=
            1e-8);
    }
  }
}

TEST_CASE("solver validates its inputs and reports failures") {
  const OperatorPair op =
      make_operator(2, 2, false, 1, Potential{0.5, 1.0, 0.0}, 1.0);

  SolveOptions options;
  options.k = 0;
  CHECK_THROWS_AS(solve_smallest(op, options), std::invalid_argument);

  options = SolveOptions{};
  options.tol = 0.0;
  CHECK_THROWS_AS(solve_smallest(op, options), std::invalid_argument);

  options = SolveOptions{};
  options.max_iter = 1;
  CHECK_THROWS_AS(solve_smallest(op, options), std::runtime_error);

  // A shift far above the spectrum makes the shifted operator indefinite.
  options = SolveOptions{};
  options.shift = 1e12;
  CHECK_THROWS_AS(solve_smallest(op, options), std::runtime_error);

  OperatorPair broken = op;
  broken.mass[0] = 0.0;
  CHECK_THROWS_AS(solve_smallest(broken, SolveOptions{}), std::runtime_error);
}
