// SPDX-License-Identifier: MIT
//
// End-to-end acceptance checks. Each prints one PASS/FAIL line with the
// measured quantities; the process exits with the number of failures.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "hpdg/basis.hpp"
#include "hpdg/eigensolve.hpp"
#include "hpdg/study.hpp"

using hpdg::DofMap;
using hpdg::EigenPair;
using hpdg::Element;
using hpdg::FaceSet;
using hpdg::GradedMesh;
using hpdg::OperatorPair;
using hpdg::Potential;
using hpdg::QuadratureConfig;
using hpdg::QuadratureRule;
using hpdg::RateFit;
using hpdg::Rational;
using hpdg::ReferenceBasis;
using hpdg::SolveOptions;
using hpdg::StudyConfig;
using hpdg::StudyField;
using hpdg::StudyRecord;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Solved {
  GradedMesh mesh;
  DofMap dofs;
  OperatorPair op;
  std::vector<EigenPair> pairs;
};

Solved solve_config(int dim, int levels, bool uniform, int p0,
                    const Rational& slope, const Potential& pot, double theta,
                    int k, const QuadratureConfig& quad = QuadratureConfig{}) {
  Solved s;
  s.mesh = uniform ? hpdg::build_uniform_mesh(dim, levels)
                   : hpdg::build_graded_mesh(dim, levels, Rational(1, 2));
  hpdg::assign_degrees(s.mesh, p0, slope);
  s.dofs = DofMap::build(s.mesh);
  const FaceSet faces = hpdg::enumerate_faces(s.mesh);
  s.op = hpdg::assemble_operator(s.mesh, faces, s.dofs, pot, theta, 10.0, quad);
  SolveOptions options;
  options.k = k;
  s.pairs = hpdg::solve_smallest(s.op, options);
  return s;
}

std::vector<StudyRecord> run_study_quiet(StudyConfig cfg, const char* out) {
  cfg.out = out;
  std::ostringstream log;
  return hpdg::run_study(cfg, log);
}

// Per-element L2 projection of a smooth function onto the broken space.
Eigen::VectorXd project(const GradedMesh& mesh, const DofMap& dofs,
                        const std::function<double(const double*)>& f) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dofs.total);
  for (const Element& e : mesh.elements) {
    const ReferenceBasis basis(mesh.dim, e.degree);
    const QuadratureRule rule = hpdg::tensor_gauss(e.degree + 3, mesh.dim);
    std::vector<double> values(static_cast<std::size_t>(basis.size()));
    for (int q = 0; q < rule.size(); ++q) {
      double x[3] = {0.0, 0.0, 0.0};
      for (int a = 0; a < mesh.dim; ++a) {
        x[a] = mesh.center_of(e, a) +
               0.5 * mesh.h_of(e) *
                   rule.points[static_cast<std::size_t>(q)]
                              [static_cast<std::size_t>(a)];
      }
      basis.eval(rule.points[static_cast<std::size_t>(q)].data(),
                 values.data());
      const double fw =
          f(x) * rule.weights[static_cast<std::size_t>(q)];
      for (int i = 0; i < basis.size(); ++i) {
        u[dofs.block_start(e.id) + i] += fw * values[static_cast<std::size_t>(i)];
      }
    }
  }
  return u;
}

// Mapped from [-1,1]^d (corner at -1,...,-1) to (0,1)^d, applied to r^-alpha.
double integrate_unit_cube(const QuadratureRule& rule, double alpha) {
  const double jac = std::pow(0.5, rule.dim);
  double sum = 0.0;
  for (int q = 0; q < rule.size(); ++q) {
    double r2 = 0.0;
    for (int a = 0; a < rule.dim; ++a) {
      const double x =
          0.5 * (rule.points[static_cast<std::size_t>(q)]
                            [static_cast<std::size_t>(a)] +
                 1.0);
      r2 += x * x;
    }
    sum += rule.weights[static_cast<std::size_t>(q)] * jac *
           std::pow(r2, -0.5 * alpha);
  }
  return sum;
}

// Angle (in the M inner product) between a computed eigenvector and the span
// of oracle eigenvectors whose eigenvalues sit within cluster_tol of it;
// degenerate pairs make the single-vector angle meaningless.
double m_angle(const OperatorPair& op, const EigenPair& mine,
               const std::vector<EigenPair>& oracle, double cluster_tol) {
  const Eigen::VectorXd mu = op.mass.cwiseProduct(mine.coefficients);
  const double norm_sq = mine.coefficients.dot(mu);
  double proj_sq = 0.0;
  for (const EigenPair& ref : oracle) {
    if (std::abs(ref.lambda - mine.lambda) > cluster_tol) continue;
    const double c = ref.coefficients.dot(mu);
    proj_sq += c * c;
  }
  const double sin_sq = std::max(0.0, 1.0 - proj_sq / norm_sq);
  return std::asin(std::min(1.0, std::sqrt(sin_sq)));
}

// criterion 1: analytic eigenvalues of the free box on uniform meshes.
Outcome criterion1() {
  const auto t2d = std::chrono::steady_clock::now();
  const Solved a =
      solve_config(2, 4, true, 3, Rational(0), Potential{0.0, 0.0, 0.0}, 1.0, 1);
  const double err2 =
      std::abs(a.pairs[0].lambda - 2.0 * std::numbers::pi * std::numbers::pi);
  const double sec2 = seconds_since(t2d);

  const auto t3d = std::chrono::steady_clock::now();
  const Solved b =
      solve_config(3, 3, true, 2, Rational(0), Potential{0.0, 0.0, 0.0}, 1.0, 1);
  const double err3 =
      std::abs(b.pairs[0].lambda - 3.0 * std::numbers::pi * std::numbers::pi);
  const double sec3 = seconds_since(t3d);

  Outcome out;
  out.pass = err2 <= 1e-6 && sec2 <= 60.0 && err3 <= 1e-4 && sec3 <= 60.0;
  out.detail = fmt("2D err %.3g (<= 1e-6, %.1f s); 3D err %.3g (<= 1e-4, %.1f s)",
                   err2, sec2, err3, sec3);
  return out;
}

// criterion 2: V -> V+1 shifts every eigenvalue by exactly 1.
Outcome criterion2() {
  double worst = 0.0;
  for (const auto& alpha : {Rational(1, 2), Rational(1), Rational(3, 2)}) {
    const Potential base{alpha.to_double(), 1.0, 0.0};
    const Potential lifted{alpha.to_double(), 1.0, 1.0};
    const Solved plain =
        solve_config(2, 3, false, 1, Rational(1, 2), base, 1.0, 4);
    const Solved shifted =
        solve_config(2, 3, false, 1, Rational(1, 2), lifted, 1.0, 4);
    for (std::size_t i = 0; i < plain.pairs.size(); ++i) {
      worst = std::max(worst, std::abs(shifted.pairs[i].lambda -
                                       plain.pairs[i].lambda - 1.0));
    }
  }
  Outcome out;
  out.pass = worst <= 1e-9;
  out.detail = fmt("max |lambda(V+1) - lambda(V) - 1| = %.3g (<= 1e-9), "
                   "alpha in {1/2, 1, 3/2}, k = 4", worst);
  return out;
}

std::string monotonicity_violations(const std::vector<StudyRecord>& records) {
  std::string where;
  auto scan = [&](const char* name, auto field) {
    for (std::size_t i = 1; i < records.size(); ++i) {
      if (!(field(records[i]) < field(records[i - 1]))) {
        where += fmt("%s%s@%d", where.empty() ? "" : ",", name,
                     records[i].levels);
      }
    }
  };
  scan("dg", [](const StudyRecord& r) { return r.err_dg; });
  scan("l2", [](const StudyRecord& r) { return r.err_l2; });
  scan("linf", [](const StudyRecord& r) { return r.err_linf; });
  scan("lambda", [](const StudyRecord& r) { return r.err_lambda; });
  return where;
}

// criterion 3: exponential convergence quality on the graded 2D study.
Outcome criterion3(const std::vector<StudyRecord>& records, double secs) {
  Outcome out;
  try {
    const RateFit dg = hpdg::fit_rate(records, StudyField::dg, 2);
    const RateFit l2 = hpdg::fit_rate(records, StudyField::l2, 2);
    const std::string rises = monotonicity_violations(records);
    out.pass = dg.b > 0.0 && l2.b > 0.0 && dg.r_squared >= 0.97 &&
               l2.r_squared >= 0.97 && rises.empty() && secs <= 900.0;
    out.detail = fmt("b_dg = %.3f (R^2 %.3f), b_l2 = %.3f (R^2 %.3f), "
                     "R^2 target 0.97; non-monotone steps: %s; %.0f s",
                     dg.b, dg.r_squared, l2.b, l2.r_squared,
                     rises.empty() ? "none" : rises.c_str(), secs);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = fmt("fit failed: %s", e.what());
  }
  return out;
}

// criterion 4: SIP eigenvalue rate-doubling, NIP without it.
Outcome criterion4(const std::vector<StudyRecord>& sip,
                   const std::vector<StudyRecord>& nip) {
  Outcome out;
  try {
    const double sip_dg = hpdg::fit_rate(sip, StudyField::dg, 2).b;
    const double sip_lam = hpdg::fit_rate(sip, StudyField::lambda, 2).b;
    const double nip_dg = hpdg::fit_rate(nip, StudyField::dg, 2).b;
    const double nip_lam = hpdg::fit_rate(nip, StudyField::lambda, 2).b;
    out.pass = sip_lam >= 1.6 * sip_dg && nip_lam <= 1.3 * nip_dg;
    out.detail = fmt("SIP b_lambda/b_dg = %.3f/%.3f = %.2f (>= 1.6); "
                     "NIP %.3f/%.3f = %.2f (<= 1.3)",
                     sip_lam, sip_dg, sip_lam / sip_dg, nip_lam, nip_dg,
                     nip_lam / nip_dg);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = fmt("fit failed: %s", e.what());
  }
  return out;
}

// criterion 5: low quadrature must degrade the late-range eigenvalue error.
Outcome criterion5(const std::vector<StudyRecord>& low,
                   const std::vector<StudyRecord>& high) {
  const StudyRecord& l = low.back();
  const StudyRecord& h = high.back();
  Outcome out;
  if (l.n != h.n) {
    out.detail = fmt("no common largest N (%d vs %d)", l.n, h.n);
    return out;
  }
  const double ratio = l.err_lambda / h.err_lambda;
  out.pass = ratio >= 5.0;
  out.detail = fmt("lambda error at N = %d: quad 2 gives %.6g, quad 10 gives "
                   "%.6g, ratio %.3g (>= 5)",
                   l.n, l.err_lambda, h.err_lambda, ratio);
  return out;
}

// criterion 6: iterative eigenpairs match the dense oracle on small meshes.
Outcome criterion6() {
  struct Case {
    int dim, levels, p0;
  };
  const std::vector<Case> cases = {
      {2, 1, 1}, {2, 1, 2}, {2, 2, 1}, {2, 2, 2}, {3, 1, 1}};
  double worst_lambda = 0.0;
  double worst_angle = 0.0;
  for (const Case& c : cases) {
    const Solved s = solve_config(c.dim, c.levels, true, c.p0, Rational(0),
                                  Potential{1.0, 1.0, 0.0}, 1.0, 3);
    const auto oracle = hpdg::dense_oracle(s.op, 6);
    for (std::size_t i = 0; i < s.pairs.size(); ++i) {
      worst_lambda = std::max(
          worst_lambda, std::abs(s.pairs[i].lambda - oracle[i].lambda));
      worst_angle = std::max(
          worst_angle, m_angle(s.op, s.pairs[i], oracle, 1e-6));
    }
  }
  Outcome out;
  out.pass = worst_lambda <= 1e-8 && worst_angle <= 1e-6;
  out.detail = fmt("5 meshes, k = 3: max |lambda - oracle| = %.3g (<= 1e-8), "
                   "max M-angle = %.3g (<= 1e-6)",
                   worst_lambda, worst_angle);
  return out;
}

// criterion 7: operator invariants.
Outcome criterion7() {
  double worst_asym = 0.0;
  bool mass_exact = true;
  double worst_penalty = 0.0;
  double min_lambda = 1e300;

  struct Case {
    int dim, levels, p0;
  };
  for (const Case& c : {Case{2, 3, 2}, Case{3, 2, 2}}) {
    const Solved s = solve_config(c.dim, c.levels, false, c.p0, Rational(1, 2),
                                  Potential{1.0, 1.0, 0.0}, 1.0, 1);
    min_lambda = std::min(min_lambda, s.pairs[0].lambda);

    // Symmetry, relative to the largest entry.
    Eigen::SparseMatrix<double> diff = Eigen::SparseMatrix<double>(
        s.op.stiffness.transpose()) - s.op.stiffness;
    double amax = 0.0, dmax = 0.0;
    for (int k = 0; k < s.op.stiffness.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(s.op.stiffness, k);
           it; ++it) {
        amax = std::max(amax, std::abs(it.value()));
      }
    }
    for (int k = 0; k < diff.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it) {
        dmax = std::max(dmax, std::abs(it.value()));
      }
    }
    worst_asym = std::max(worst_asym, dmax / amax);

    // Mass diagonal (h/2)^d, bitwise: every value here is a power of two.
    for (const Element& e : s.mesh.elements) {
      double expected = 1.0;
      for (int a = 0; a < c.dim; ++a) expected *= 0.5 * s.mesh.h_of(e);
      for (int i = 0; i < s.dofs.block_size(e.id); ++i) {
        const int row = s.dofs.block_start(e.id) + i;
        if (s.op.mass[row] != expected) mass_exact = false;
      }
    }

    // Penalty energy of a continuous zero-boundary polynomial.
    const FaceSet faces = hpdg::enumerate_faces(s.mesh);
    const auto no_penalty = hpdg::assemble_operator(
        s.mesh, faces, s.dofs, Potential{1.0, 1.0, 0.0}, 1.0, 0.0,
        QuadratureConfig{});
    const Eigen::VectorXd u =
        project(s.mesh, s.dofs, [&](const double* x) {
          double v = 1.0;
          for (int a = 0; a < c.dim; ++a) v *= x[a] * x[a] - 0.25;
          return v;
        });
    const double penalty_energy =
        u.dot(s.op.stiffness * u) - u.dot(no_penalty.stiffness * u);
    worst_penalty = std::max(
        worst_penalty, std::abs(penalty_energy) / u.dot(s.op.stiffness * u));
  }

  // Positivity on the small oracle meshes as well.
  for (const auto& cfg : {std::array<int, 3>{2, 2, 2}, {3, 1, 1}}) {
    const Solved s = solve_config(cfg[0], cfg[1], true, cfg[2], Rational(0),
                                  Potential{1.0, 1.0, 0.0}, 1.0, 1);
    min_lambda = std::min(min_lambda, s.pairs[0].lambda);
  }

  Outcome out;
  out.pass = worst_asym <= 1e-12 && mass_exact && worst_penalty <= 1e-12 &&
             min_lambda > 0.0;
  out.detail = fmt("asymmetry %.3g (<= 1e-12); mass diagonal %s; continuous "
                   "penalty energy %.3g (<= 1e-12); min lambda %.3g (> 0)",
                   worst_asym, mass_exact ? "exact" : "NOT exact",
                   worst_penalty, min_lambda);
  return out;
}

// criterion 8: no spurious eigenvalues, none missing, at desk scale.
Outcome criterion8() {
  const Solved coarse = solve_config(2, 8, false, 1, Rational(1, 2),
                                     Potential{1.0, 1.0, 0.0}, 1.0, 8);
  const Solved ref = solve_config(2, 10, false, 1, Rational(1, 2),
                                  Potential{1.0, 1.0, 0.0}, 1.0, 7,
                                  QuadratureConfig{10, 10});
  double worst = 0.0;
  for (int i = 0; i < 6; ++i) {
    worst = std::max(worst, std::abs(coarse.pairs[static_cast<std::size_t>(i)]
                                         .lambda -
                                     ref.pairs[static_cast<std::size_t>(i)]
                                         .lambda));
  }
  const double midpoint =
      0.5 * (ref.pairs[5].lambda + ref.pairs[6].lambda);
  int below = 0;
  for (const EigenPair& p : coarse.pairs) {
    if (p.lambda < midpoint) ++below;
  }
  Outcome out;
  out.pass = worst <= 1e-3 && below == 6;
  out.detail = fmt("max |lambda_i - ref| = %.3g over i = 1..6 (<= 1e-3); "
                   "%d discrete eigenvalues below the 6/7 midpoint %.6g "
                   "(expect 6)",
                   worst, below, midpoint);
  return out;
}

// criterion 9: singular corner quadrature against the closed form.
Outcome criterion9() {
  const double exact = 2.0 * std::log(1.0 + std::sqrt(2.0));
  const double err = std::abs(
      integrate_unit_cube(hpdg::singular_cell_rule(8, 2, 1.0, 12), 1.0) -
      exact);
  bool monotone = true;
  double previous = 1e300;
  for (const int m : {1, 2, 4, 8, 12}) {
    const double e = std::abs(
        integrate_unit_cube(hpdg::singular_cell_rule(8, 2, 1.0, m), 1.0) -
        exact);
    if (!(e < previous)) monotone = false;
    previous = e;
  }
  Outcome out;
  out.pass = err <= 1e-6 && monotone;
  out.detail = fmt("err(m=12, n=8) = %.3g (<= 1e-6); shell refinement %s",
                   err, monotone ? "monotone" : "NOT monotone");
  return out;
}

// criterion 10: the 3D study's error columns.
Outcome criterion10(const std::vector<StudyRecord>& records, double secs) {
  const std::string rises = monotonicity_violations(records);
  Outcome out;
  out.pass = rises.empty() && secs <= 1800.0;
  out.detail = fmt("levels 2..4, non-monotone steps: %s; %.0f s",
                   rises.empty() ? "none" : rises.c_str(), secs);
  return out;
}

}  // namespace

int main() {
  std::vector<std::pair<int, Outcome>> results;
  auto report = [&](int id, const Outcome& out) {
    results.emplace_back(id, out);
    std::printf("criterion %2d: %s  %s\n", id, out.pass ? "PASS" : "FAIL",
                out.detail.c_str());
    std::fflush(stdout);
  };

  report(1, criterion1());
  report(2, criterion2());

  StudyConfig graded;
  graded.dim = 2;
  graded.alpha = Rational(1);
  graded.slope = Rational(1, 4);
  graded.level_lo = 2;
  graded.level_hi = 9;
  graded.ref_levels = 11;

  auto t0 = std::chrono::steady_clock::now();
  const auto low_quad = run_study_quiet(graded, "/tmp/acceptance_c3.csv");
  const double study_secs = seconds_since(t0);

  StudyConfig sip = graded;
  sip.quad_extra = 10;
  StudyConfig nip = sip;
  nip.theta = -1;
  const auto sip_records = run_study_quiet(sip, "/tmp/acceptance_c4_sip.csv");
  const auto nip_records = run_study_quiet(nip, "/tmp/acceptance_c4_nip.csv");

  report(3, criterion3(low_quad, study_secs));
  report(4, criterion4(sip_records, nip_records));
  report(5, criterion5(low_quad, sip_records));
  report(6, criterion6());
  report(7, criterion7());
  report(8, criterion8());
  report(9, criterion9());

  StudyConfig smoke;
  smoke.dim = 3;
  smoke.alpha = Rational(1);
  smoke.slope = Rational(1, 4);
  smoke.level_lo = 2;
  smoke.level_hi = 4;
  smoke.ref_levels = 6;
  t0 = std::chrono::steady_clock::now();
  const auto smoke_records = run_study_quiet(smoke, "/tmp/acceptance_c10.csv");
  report(10, criterion10(smoke_records, seconds_since(t0)));

  int failures = 0;
  for (const auto& [id, out] : results) {
    if (!out.pass) ++failures;
  }
  std::printf("acceptance: %d/%zu passed\n", static_cast<int>(results.size()) - failures,
              results.size());
  return failures;
}
