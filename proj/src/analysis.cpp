// SPDX-License-Identifier: MIT

#include "hpdg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "hpdg/basis.hpp"
#include "hpdg/quadrature.hpp"

namespace hpdg {

namespace {

double pow_int(double base, int exponent) {
  double out = 1.0;
  for (int i = 0; i < exponent; ++i) out *= base;
  return out;
}

const ReferenceBasis& basis_for(std::map<int, ReferenceBasis>& cache, int dim,
                                int degree) {
  auto it = cache.find(degree);
  if (it == cache.end()) {
    it = cache.emplace(degree, ReferenceBasis(dim, degree)).first;
  }
  return it->second;
}

// Evaluates one DG function inside one known element; gradient rows are
// physical (chain rule 2/h).
class ElementEvaluator {
 public:
  ElementEvaluator(const GradedMesh& mesh, const DofMap& dofs,
                   const Eigen::VectorXd& coefficients)
      : mesh_(mesh), dofs_(dofs), coefficients_(coefficients) {}

  double value(int element_id, const double* x) {
    const Element& e = mesh_.element(element_id);
    const ReferenceBasis& basis = basis_for(cache_, mesh_.dim, e.degree);
    double xi[3] = {0.0, 0.0, 0.0};
    mesh_.to_reference(e, x, xi);
    scratch_.resize(basis.size());
    basis.eval(xi, scratch_.data());
    const auto block = coefficients_.segment(dofs_.block_start(element_id),
                                             dofs_.block_size(element_id));
    return Eigen::Map<const Eigen::VectorXd>(scratch_.data(), basis.size())
        .dot(block);
  }

  double value_and_gradient(int element_id, const double* x, double* grad) {
    const Element& e = mesh_.element(element_id);
    const ReferenceBasis& basis = basis_for(cache_, mesh_.dim, e.degree);
    double xi[3] = {0.0, 0.0, 0.0};
    mesh_.to_reference(e, x, xi);
    scratch_.resize(basis.size());
    grad_scratch_.resize(static_cast<std::size_t>(basis.size()) *
                         static_cast<std::size_t>(mesh_.dim));
    basis.eval_grad(xi, scratch_.data(), grad_scratch_.data());
    const auto block = coefficients_.segment(dofs_.block_start(element_id),
                                             dofs_.block_size(element_id));
    const double scale = 2.0 / mesh_.h_of(e);
    for (int a = 0; a < mesh_.dim; ++a) grad[a] = 0.0;
    double out = 0.0;
    for (int i = 0; i < basis.size(); ++i) {
      const double c = block[i];
      out += c * scratch_[static_cast<std::size_t>(i)];
      for (int a = 0; a < mesh_.dim; ++a) {
        grad[a] += c * scale *
                   grad_scratch_[static_cast<std::size_t>(i * mesh_.dim + a)];
      }
    }
    return out;
  }

 private:
  const GradedMesh& mesh_;
  const DofMap& dofs_;
  const Eigen::VectorXd& coefficients_;
  std::map<int, ReferenceBasis> cache_;
  std::vector<double> scratch_;
  std::vector<double> grad_scratch_;
};

// Containing coarse element per fine element; containment is exact because
// both meshes live on dyadic lattices.
std::vector<int> containment_map(const GradedMesh& coarse,
                                 const GradedMesh& fine) {
  std::vector<int> out(fine.elements.size(), -1);
  for (const Element& e : fine.elements) {
    double center[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < fine.dim; ++a) center[a] = fine.center_of(e, a);
    const int id = coarse.locate(center);
    bool inside = id >= 0;
    if (inside) {
      const Element& c = coarse.element(id);
      for (int a = 0; a < fine.dim; ++a) {
        const double fine_lo = fine.lower_of(e, a);
        const double fine_hi = fine_lo + fine.h_of(e);
        const double coarse_lo = coarse.lower_of(c, a);
        const double coarse_hi = coarse_lo + coarse.h_of(c);
        inside = inside && coarse_lo <= fine_lo && fine_hi <= coarse_hi;
      }
    }
    if (!inside) {
      throw std::invalid_argument(
          "error norms: reference mesh does not refine the solution mesh");
    }
    out[static_cast<std::size_t>(e.id)] = id;
  }
  return out;
}

const QuadratureRule& volume_rule(std::map<int, QuadratureRule>& cache, int n,
                                  int dim) {
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, tensor_gauss(n, dim)).first;
  return it->second;
}

}  // namespace

EvalResult evaluate(const DiscreteSolution& sol,
                    const std::vector<std::array<double, 3>>& points,
                    bool with_gradients) {
  const Eigen::Index count = static_cast<Eigen::Index>(points.size());
  EvalResult out;
  out.values.resize(count);
  if (with_gradients) out.gradients.setZero(count, sol.mesh.dim);

  ElementEvaluator field(sol.mesh, sol.dofs, sol.coefficients);
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto& x = points[static_cast<std::size_t>(i)];
    const int id = sol.mesh.locate(x.data());
    if (id < 0) {
      throw std::invalid_argument("evaluate: point outside the domain");
    }
    if (with_gradients) {
      double grad[3] = {0.0, 0.0, 0.0};
      out.values[i] = field.value_and_gradient(id, x.data(), grad);
      for (int a = 0; a < sol.mesh.dim; ++a) out.gradients(i, a) = grad[a];
    } else {
      out.values[i] = field.value(id, x.data());
    }
  }
  return out;
}

ErrorNorms error_norms(const DiscreteSolution& sol, const DiscreteSolution& ref) {
  const GradedMesh& rmesh = ref.mesh;
  const int dim = rmesh.dim;
  if (sol.mesh.dim != dim) {
    throw std::invalid_argument("error norms: dimension mismatch");
  }
  const std::vector<int> container = containment_map(sol.mesh, rmesh);

  // Align the sign of sol against the reference first; the L2 inner product
  // is exact at this rule order since both sides are piecewise polynomial.
  std::map<int, QuadratureRule> rules;
  Eigen::VectorXd sol_coeffs = sol.coefficients;
  {
    ElementEvaluator usol(sol.mesh, sol.dofs, sol_coeffs);
    ElementEvaluator uref(rmesh, ref.dofs, ref.coefficients);
    double inner = 0.0;
    for (const Element& e : rmesh.elements) {
      const int host = container[static_cast<std::size_t>(e.id)];
      const int pmax =
          std::max(e.degree, sol.mesh.element(host).degree);
      const QuadratureRule& rule = volume_rule(rules, pmax + 1, dim);
      const double wscale = pow_int(0.5 * rmesh.h_of(e), dim);
      for (int q = 0; q < rule.size(); ++q) {
        double x[3] = {0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) {
          x[a] = rmesh.center_of(e, a) +
                 0.5 * rmesh.h_of(e) *
                     rule.points[static_cast<std::size_t>(q)][static_cast<std::size_t>(a)];
        }
        inner += wscale * rule.weights[static_cast<std::size_t>(q)] *
                 usol.value(host, x) * uref.value(e.id, x);
      }
    }
    if (inner < 0.0) sol_coeffs = -sol_coeffs;
  }

  ElementEvaluator usol(sol.mesh, sol.dofs, sol_coeffs);
  ElementEvaluator uref(rmesh, ref.dofs, ref.coefficients);

  ErrorNorms norms;
  double l2_sq = 0.0;
  double h1_sq = 0.0;
  double jump_sq = 0.0;
  double linf = 0.0;

  for (const Element& e : rmesh.elements) {
    const int host = container[static_cast<std::size_t>(e.id)];
    const int pmax = std::max(e.degree, sol.mesh.element(host).degree);
    const QuadratureRule& rule = volume_rule(rules, pmax + 2, dim);
    const double h = rmesh.h_of(e);
    const double wscale = pow_int(0.5 * h, dim);

    for (int q = 0; q < rule.size(); ++q) {
      double x[3] = {0.0, 0.0, 0.0};
      for (int a = 0; a < dim; ++a) {
        x[a] = rmesh.center_of(e, a) +
               0.5 * h *
                   rule.points[static_cast<std::size_t>(q)][static_cast<std::size_t>(a)];
      }
      double gsol[3] = {0.0, 0.0, 0.0};
      double gref[3] = {0.0, 0.0, 0.0};
      const double diff =
          usol.value_and_gradient(host, x, gsol) -
          uref.value_and_gradient(e.id, x, gref);
      const double w = wscale * rule.weights[static_cast<std::size_t>(q)];
      l2_sq += w * diff * diff;
      for (int a = 0; a < dim; ++a) {
        const double g = gsol[a] - gref[a];
        h1_sq += w * g * g;
      }
      linf = std::max(linf, std::abs(diff));
    }

    // Element corners complete the max sample.
    const int corners = 1 << dim;
    for (int c = 0; c < corners; ++c) {
      double x[3] = {0.0, 0.0, 0.0};
      for (int a = 0; a < dim; ++a) {
        x[a] = rmesh.lower_of(e, a) + ((c >> a) & 1 ? h : 0.0);
      }
      linf = std::max(linf, std::abs(usol.value(host, x) - uref.value(e.id, x)));
    }
  }

  // Jump terms over the full reference face set, weight p^2/h of the face;
  // each side is evaluated through its own containing solution element so
  // skeleton discontinuities of both functions are kept.
  const FaceSet rfaces = enumerate_faces(rmesh);
  std::map<int, QuadratureRule> face_rules;
  for (const Face& f : rfaces.faces) {
    const Element& owner = rmesh.element(f.owner);
    int pmax = std::max(owner.degree,
                        sol.mesh.element(container[static_cast<std::size_t>(f.owner)]).degree);
    if (f.interior()) {
      const Element& nb = rmesh.element(f.neighbor);
      pmax = std::max(
          pmax,
          std::max(nb.degree,
                   sol.mesh.element(container[static_cast<std::size_t>(f.neighbor)]).degree));
    }
    auto it = face_rules.find(pmax + 1);
    if (it == face_rules.end()) {
      it = face_rules.emplace(pmax + 1, tensor_gauss(pmax + 1, dim - 1)).first;
    }
    const QuadratureRule& rule = it->second;

    const double unit = rmesh.unit();
    const double h_face = static_cast<double>(f.size) * unit;
    const double wscale = pow_int(0.5 * h_face, dim - 1);
    const double h_e = rmesh.h_of(owner);
    const double p_e = static_cast<double>(f.degree);
    const double weight = p_e * p_e / h_e;

    std::array<int, 2> taxis{};
    {
      int t = 0;
      for (int a = 0; a < dim; ++a) {
        if (a != f.axis) taxis[static_cast<std::size_t>(t++)] = a;
      }
    }
    for (int q = 0; q < rule.size(); ++q) {
      double x[3] = {0.0, 0.0, 0.0};
      x[f.axis] = static_cast<double>(f.plane) * unit;
      for (int i = 0; i < dim - 1; ++i) {
        const int a = taxis[static_cast<std::size_t>(i)];
        x[a] = static_cast<double>(f.lower[static_cast<std::size_t>(i)]) * unit +
               0.5 * h_face *
                   (rule.points[static_cast<std::size_t>(q)][static_cast<std::size_t>(i)] + 1.0);
      }
      double jump = usol.value(container[static_cast<std::size_t>(f.owner)], x) -
                    uref.value(f.owner, x);
      if (f.interior()) {
        jump -= usol.value(container[static_cast<std::size_t>(f.neighbor)], x) -
                uref.value(f.neighbor, x);
      }
      jump_sq += weight * wscale * rule.weights[static_cast<std::size_t>(q)] *
                 jump * jump;
    }
  }

  norms.l2 = std::sqrt(l2_sq);
  norms.dg = std::sqrt(l2_sq + h1_sq + jump_sq);
  norms.linf = linf;
  return norms;
}

double eigenvalue_error(const DiscreteSolution& sol, const DiscreteSolution& ref) {
  return std::abs(sol.lambda - ref.lambda);
}

double weighted_seminorm(const DiscreteSolution& sol, double gamma, int order) {
  if (order < 0 || order > 2) {
    throw std::invalid_argument("weighted seminorm: order must be 0, 1, or 2");
  }
  const GradedMesh& mesh = sol.mesh;
  const int dim = mesh.dim;
  const double exponent = 2.0 * (static_cast<double>(order) - gamma);

  std::map<int, ReferenceBasis> bases;
  std::map<int, QuadratureRule> plain;
  double total = 0.0;

  std::vector<double> values;
  std::vector<double> grads;
  std::vector<double> hess;

  for (const Element& e : mesh.elements) {
    const ReferenceBasis& basis = basis_for(bases, dim, e.degree);
    const int n = sol.meta.quadrature.volume_points(e.degree) + 2;

    QuadratureRule local;
    const QuadratureRule* rule = nullptr;
    if (e.touches_origin) {
      local = singular_cell_rule(n, dim, std::max(0.0, -exponent),
                                 sol.meta.quadrature.shells);
      // The composite rule grades toward (-1,..,-1); reflect axes whose
      // element corner at the origin sits on the upper side instead.
      for (auto& point : local.points) {
        for (int a = 0; a < dim; ++a) {
          if (e.lower[static_cast<std::size_t>(a)] != 0) point[a] = -point[a];
        }
      }
      rule = &local;
    } else {
      rule = &volume_rule(plain, n, dim);
    }

    const double h = mesh.h_of(e);
    const double wscale = pow_int(0.5 * h, dim);
    const double dscale = 2.0 / h;
    const auto block = sol.coefficients.segment(sol.dofs.block_start(e.id),
                                                sol.dofs.block_size(e.id));
    const int nb = basis.size();
    values.resize(static_cast<std::size_t>(nb));
    grads.resize(static_cast<std::size_t>(nb) * static_cast<std::size_t>(dim));
    hess.resize(static_cast<std::size_t>(nb) *
                static_cast<std::size_t>(basis.hessian_terms()));

    for (int q = 0; q < rule->size(); ++q) {
      const auto& xi = rule->points[static_cast<std::size_t>(q)];
      double x[3] = {0.0, 0.0, 0.0};
      double r_sq = 0.0;
      for (int a = 0; a < dim; ++a) {
        x[a] = mesh.center_of(e, a) + 0.5 * h * xi[static_cast<std::size_t>(a)];
        r_sq += x[a] * x[a];
      }
      const double weight = wscale * rule->weights[static_cast<std::size_t>(q)] *
                            std::pow(r_sq, 0.5 * exponent);

      if (order == 0) {
        basis.eval(xi.data(), values.data());
        double u = 0.0;
        for (int i = 0; i < nb; ++i) u += block[i] * values[static_cast<std::size_t>(i)];
        total += weight * u * u;
      } else if (order == 1) {
        basis.eval_grad(xi.data(), values.data(), grads.data());
        for (int a = 0; a < dim; ++a) {
          double d = 0.0;
          for (int i = 0; i < nb; ++i) {
            d += block[i] * grads[static_cast<std::size_t>(i * dim + a)];
          }
          d *= dscale;
          total += weight * d * d;
        }
      } else {
        basis.eval_hessian(xi.data(), hess.data());
        const int terms = basis.hessian_terms();
        for (int t = 0; t < terms; ++t) {
          double d = 0.0;
          for (int i = 0; i < nb; ++i) {
            d += block[i] * hess[static_cast<std::size_t>(i * terms + t)];
          }
          d *= dscale * dscale;
          total += weight * d * d;
        }
      }
    }
  }
  return total;
}

RateFit fit_rate(const std::vector<StudyRecord>& records, StudyField field,
                 int dim, double plateau_threshold) {
  if (dim != 2 && dim != 3) {
    throw std::invalid_argument("rate fit: dim must be 2 or 3");
  }
  auto value_of = [field](const StudyRecord& r) {
    switch (field) {
      case StudyField::dg: return r.err_dg;
      case StudyField::l2: return r.err_l2;
      case StudyField::linf: return r.err_linf;
      default: return r.err_lambda;
    }
  };

  std::vector<StudyRecord> sorted = records;
  std::sort(sorted.begin(), sorted.end(),
            [](const StudyRecord& a, const StudyRecord& b) {
              if (a.n != b.n) return a.n < b.n;
              return a.levels < b.levels;
            });

  struct Sample {
    double x;
    double y;
    double err;
  };
  std::vector<Sample> kept;
  for (const StudyRecord& r : sorted) {
    const double err = value_of(r);
    if (!(err > plateau_threshold)) continue;
    kept.push_back({std::pow(static_cast<double>(r.n), 1.0 / (dim + 1)),
                    std::log(err), err});
  }

  // Plateau onset: the point past which the running minimum never again
  // improves by at least 2 percent.  Keeping the stagnant tail would bias
  // the slope toward zero; intermediate stalls that later resume are data,
  // not plateau, so they stay.
  if (!kept.empty()) {
    std::size_t last_improver = 0;
    double running_min = kept.front().err;
    for (std::size_t i = 1; i < kept.size(); ++i) {
      if (kept[i].err <= 0.98 * running_min) last_improver = i;
      running_min = std::min(running_min, kept[i].err);
    }
    kept.resize(last_improver + 1);
  }

  std::vector<double> xs;
  std::vector<double> ys;
  for (const Sample& s : kept) {
    xs.push_back(s.x);
    ys.push_back(s.y);
  }
  if (xs.size() < 3) {
    throw std::runtime_error("rate fit: too few pre-plateau points");
  }

  const double n = static_cast<double>(xs.size());
  double sum_x = 0.0, sum_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sum_x += xs[i];
    sum_y += ys[i];
  }
  const double mean_x = sum_x / n;
  const double mean_y = sum_y / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
    sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
  }
  const double slope = sxy / sxx;
  const double intercept = mean_y - slope * mean_x;

  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fit = intercept + slope * xs[i];
    ss_res += (ys[i] - fit) * (ys[i] - fit);
    ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
  }

  RateFit out;
  out.b = -slope;
  out.c = std::exp(intercept);
  out.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot)
                               : (ss_res == 0.0 ? 1.0 : 0.0);
  out.points_used = static_cast<int>(xs.size());
  out.plateau_threshold = plateau_threshold;
  return out;
}

}  // namespace hpdg
