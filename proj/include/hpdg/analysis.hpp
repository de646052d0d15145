// SPDX-License-Identifier: MIT

#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

#include "hpdg/assembly.hpp"
#include "hpdg/mesh.hpp"

namespace hpdg {

// Knobs that produced a discrete solution, carried along so error analysis
// and reporting never have to guess where a coefficient vector came from.
struct SolutionMeta {
  int dim = 2;
  int levels = 1;
  bool uniform = false;
  int p0 = 1;
  Rational slope{0, 1};
  Potential potential;
  double theta = 1.0;
  double penalty = 10.0;
  QuadratureConfig quadrature;
};

struct DiscreteSolution {
  GradedMesh mesh;
  DofMap dofs;
  Eigen::VectorXd coefficients;
  double lambda = 0.0;
  SolutionMeta meta;
};

struct ErrorNorms {
  double dg = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

// One row of a convergence study.
struct StudyRecord {
  int n = 0;
  int levels = 0;
  double lambda = 0.0;
  double err_dg = 0.0;
  double err_l2 = 0.0;
  double err_linf = 0.0;
  double err_lambda = 0.0;
};

enum class StudyField { dg, l2, linf, lambda };

// Exponential model err = C exp(-b N^(1/(dim+1))) fitted by least squares
// on ln err; records at or below the plateau are excluded.
struct RateFit {
  double b = 0.0;
  double c = 0.0;
  double r_squared = 0.0;
  int points_used = 0;
  double plateau_threshold = 1e-11;
};

struct EvalResult {
  Eigen::VectorXd values;
  Eigen::MatrixXd gradients;  // one row per point, filled on request
};

// Point evaluation; each point is resolved to a single element (ties broken
// by the mesh lookup), so values on faces come from exactly one side.
EvalResult evaluate(const DiscreteSolution& sol,
                    const std::vector<std::array<double, 3>>& points,
                    bool with_gradients = false);

// Error norms of sol against a reference whose mesh refines sol's mesh.
// All integrals run over the reference mesh; the sign of sol is aligned to
// the reference before comparing. The L-infinity value is sampled at the
// reference quadrature points and element corners, not maximized exactly.
ErrorNorms error_norms(const DiscreteSolution& sol, const DiscreteSolution& ref);

double eigenvalue_error(const DiscreteSolution& sol, const DiscreteSolution& ref);

// Sum over all multi-indices of the given order of the squared weighted
// L2 norms of the derivatives, weight r^(order - gamma); a diagnostic value.
double weighted_seminorm(const DiscreteSolution& sol, double gamma, int order);

RateFit fit_rate(const std::vector<StudyRecord>& records, StudyField field,
                 int dim, double plateau_threshold = 1e-11);

}  // namespace hpdg
