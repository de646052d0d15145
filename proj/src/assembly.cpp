// SPDX-License-Identifier: MIT

#include "hpdg/assembly.hpp"

#include "hpdg/basis.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hpdg {

namespace {

using Triplet = Eigen::Triplet<double>;

double pow_int(double base, int exponent) {
  double out = 1.0;
  for (int i = 0; i < exponent; ++i) out *= base;
  return out;
}

double potential_value(const Potential& potential, const double* x, int dim) {
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) r2 += x[a] * x[a];
  double v = potential.shift;
  if (potential.coefficient != 0.0) {
    v += potential.coefficient * std::pow(r2, -0.5 * potential.alpha);
  }
  return v;
}

// B^T diag(d) B with the sign split d = d+ - d-, each half accumulated as a
// rank update so the block comes out bitwise symmetric.
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& values,
                              const Eigen::VectorXd& diag) {
  const Eigen::Index nb = values.cols();
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::VectorXd root_pos = diag.cwiseMax(0.0).cwiseSqrt();
  Eigen::VectorXd root_neg = (-diag).cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd scaled = root_pos.asDiagonal() * values;
  block.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose(), 1.0);
  if ((diag.array() < 0.0).any()) {
    scaled = root_neg.asDiagonal() * values;
    block.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose(), -1.0);
  }
  return block.selfadjointView<Eigen::Lower>();
}

void scatter_block(const Eigen::MatrixXd& block, int row0, int col0,
                   std::vector<Triplet>& triplets) {
  for (Eigen::Index i = 0; i < block.rows(); ++i) {
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
      triplets.emplace_back(row0 + static_cast<int>(i),
                            col0 + static_cast<int>(j), block(i, j));
    }
  }
}

struct VolumeWorkspace {
  ReferenceBasis basis;
  QuadratureRule rule;
  BasisTables tables;
};

}  // namespace

DofMap DofMap::build(const GradedMesh& mesh) {
  DofMap map;
  map.offset.resize(mesh.elements.size() + 1, 0);
  for (std::size_t k = 0; k < mesh.elements.size(); ++k) {
    int nb = 1;
    for (int a = 0; a < mesh.dim; ++a) nb *= mesh.elements[k].degree + 1;
    map.offset[k + 1] = map.offset[k] + nb;
  }
  map.total = map.offset.back();
  return map;
}

Eigen::VectorXd assemble_mass_diagonal(const GradedMesh& mesh,
                                       const DofMap& dofs) {
  Eigen::VectorXd diag(dofs.total);
  for (const Element& e : mesh.elements) {
    const double scale = pow_int(0.5 * mesh.h_of(e), mesh.dim);
    const int start = dofs.block_start(e.id);
    const int nb = dofs.block_size(e.id);
    for (int i = 0; i < nb; ++i) diag[start + i] = scale;
  }
  return diag;
}

Eigen::SparseMatrix<double> assemble_volume(const GradedMesh& mesh,
                                            const DofMap& dofs,
                                            const Potential& potential,
                                            const QuadratureConfig& quad) {
  const int dim = mesh.dim;
  std::map<int, VolumeWorkspace> plain;  // keyed by element degree
  std::vector<Triplet> triplets;

  for (const Element& e : mesh.elements) {
    auto found = plain.find(e.degree);
    if (found == plain.end()) {
      VolumeWorkspace ws{ReferenceBasis(dim, e.degree),
                         tensor_gauss(quad.volume_points(e.degree), dim), {}};
      ws.tables = tabulate(ws.basis, ws.rule, true);
      found = plain.emplace(e.degree, std::move(ws)).first;
    }
    const VolumeWorkspace& ws = found->second;
    const int nb = ws.basis.size();
    const double half_h = 0.5 * mesh.h_of(e);

    // Stiffness: reference gradients carry a 2/h each, the volume element an
    // (h/2)^dim, so the block scales by (h/2)^(dim-2).
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(nb, nb);
    const double stiff_scale = pow_int(half_h, dim - 2);
    Eigen::VectorXd root_w(ws.rule.size());
    for (int q = 0; q < ws.rule.size(); ++q) {
      root_w[q] = std::sqrt(ws.rule.weights[static_cast<std::size_t>(q)]);
    }
    for (int a = 0; a < dim; ++a) {
      Eigen::MatrixXd scaled = root_w.asDiagonal() * ws.tables.grad[static_cast<std::size_t>(a)];
      block.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose(),
                                                       stiff_scale);
    }
    block = block.selfadjointView<Eigen::Lower>();

    // Potential: plain Gauss away from the origin, the graded composite rule
    // on origin-touching elements, reflected so its corner is the origin.
    const bool singular = e.touches_origin && potential.has_singular_part();
    if (potential.coefficient != 0.0 || potential.shift != 0.0) {
      const QuadratureRule* rule = &ws.rule;
      const Eigen::MatrixXd* values = &ws.tables.value;
      QuadratureRule flipped;
      BasisTables singular_tables;
      if (singular) {
        flipped = singular_cell_rule(quad.volume_points(e.degree), dim,
                                     potential.alpha, quad.shells);
        for (int a = 0; a < dim; ++a) {
          if (e.lower[static_cast<std::size_t>(a)] != 0) {
            for (auto& p : flipped.points) {
              p[static_cast<std::size_t>(a)] = -p[static_cast<std::size_t>(a)];
            }
          }
        }
        singular_tables = tabulate(ws.basis, flipped, false);
        rule = &flipped;
        values = &singular_tables.value;
      }

      const double volume_scale = pow_int(half_h, dim);
      Eigen::VectorXd diag(rule->size());
      std::array<double, 3> x{0.0, 0.0, 0.0};
      for (int q = 0; q < rule->size(); ++q) {
        const auto& xi = rule->points[static_cast<std::size_t>(q)];
        for (int a = 0; a < dim; ++a) {
          x[static_cast<std::size_t>(a)] =
              mesh.lower_of(e, a) + half_h * (xi[static_cast<std::size_t>(a)] + 1.0);
        }
        const double v = potential_value(potential, x.data(), dim);
        if (!std::isfinite(v)) {
          throw std::runtime_error("potential quadrature failed on element " +
                                   std::to_string(e.id));
        }
        diag[q] = rule->weights[static_cast<std::size_t>(q)] * v * volume_scale;
      }
      block += weighted_gram(*values, diag);
    }

    scatter_block(block, dofs.block_start(e.id), dofs.block_start(e.id),
                  triplets);
  }

  Eigen::SparseMatrix<double> matrix(dofs.total, dofs.total);
  matrix.setFromTriplets(triplets.begin(), triplets.end());
  return matrix;
}

Eigen::SparseMatrix<double> assemble_faces(const GradedMesh& mesh,
                                           const FaceSet& faces,
                                           const DofMap& dofs, double theta,
                                           double penalty,
                                           const QuadratureConfig& quad,
                                           bool include_boundary) {
  const int dim = mesh.dim;
  const double unit = mesh.unit();
  std::map<int, QuadratureRule> face_rules;    // keyed by point count
  std::map<int, ReferenceBasis> bases;         // keyed by degree
  std::vector<Triplet> triplets;

  for (const Face& f : faces.faces) {
    if (!f.interior() && !include_boundary) continue;

    const int np1d = quad.face_points(f.degree);
    auto rule_it = face_rules.find(np1d);
    if (rule_it == face_rules.end()) {
      rule_it = face_rules.emplace(np1d, tensor_gauss(np1d, dim - 1)).first;
    }
    const QuadratureRule& frule = rule_it->second;
    const int nq = frule.size();

    // Physical quadrature points on the face; the face is always the owner's
    // full face, so its transverse extent is the owner's h.
    const double h_face = static_cast<double>(f.size) * unit;
    const double wscale = pow_int(0.5 * h_face, dim - 1);
    std::vector<std::array<double, 3>> xq(static_cast<std::size_t>(nq),
                                          {0.0, 0.0, 0.0});
    {
      std::array<int, 2> taxis{};
      int t = 0;
      for (int a = 0; a < dim; ++a) {
        if (a != f.axis) taxis[static_cast<std::size_t>(t++)] = a;
      }
      for (int q = 0; q < nq; ++q) {
        auto& x = xq[static_cast<std::size_t>(q)];
        x[static_cast<std::size_t>(f.axis)] = static_cast<double>(f.plane) * unit;
        for (int i = 0; i < dim - 1; ++i) {
          const int a = taxis[static_cast<std::size_t>(i)];
          x[static_cast<std::size_t>(a)] =
              static_cast<double>(f.lower[static_cast<std::size_t>(i)]) * unit +
              0.5 * h_face *
                  (frule.points[static_cast<std::size_t>(q)][static_cast<std::size_t>(i)] + 1.0);
        }
      }
    }

    const int sides = f.interior() ? 2 : 1;
    std::array<int, 2> ids{f.owner, f.neighbor};
    std::array<int, 2> start{};
    std::array<int, 2> width{};
    std::array<Eigen::MatrixXd, 2> trace_value;
    std::array<Eigen::MatrixXd, 2> trace_dnorm;  // d/dx_axis, physical

    for (int s = 0; s < sides; ++s) {
      const Element& e = mesh.element(ids[static_cast<std::size_t>(s)]);
      auto basis_it = bases.find(e.degree);
      if (basis_it == bases.end()) {
        basis_it = bases.emplace(e.degree, ReferenceBasis(dim, e.degree)).first;
      }
      const ReferenceBasis& basis = basis_it->second;

      QuadratureRule side_points;
      side_points.dim = dim;
      side_points.points.resize(static_cast<std::size_t>(nq));
      side_points.weights.assign(static_cast<std::size_t>(nq), 0.0);
      for (int q = 0; q < nq; ++q) {
        mesh.to_reference(e, xq[static_cast<std::size_t>(q)].data(),
                          side_points.points[static_cast<std::size_t>(q)].data());
      }
      BasisTables tables = tabulate(basis, side_points, true);

      start[static_cast<std::size_t>(s)] = dofs.block_start(e.id);
      width[static_cast<std::size_t>(s)] = basis.size();
      trace_value[static_cast<std::size_t>(s)] = std::move(tables.value);
      trace_dnorm[static_cast<std::size_t>(s)] =
          (2.0 / mesh.h_of(e)) * tables.grad[static_cast<std::size_t>(f.axis)];
    }

    const int ncols = width[0] + (sides == 2 ? width[1] : 0);
    const double sgn = static_cast<double>(f.side);

    // Column-stacked jump [.] and average <d_n .> over both traces; boundary
    // faces take the one-sided trace with full weight.
    Eigen::MatrixXd jump(nq, ncols);
    Eigen::MatrixXd avg(nq, ncols);
    jump.leftCols(width[0]) = sgn * trace_value[0];
    avg.leftCols(width[0]) =
        (sides == 2 ? 0.5 : 1.0) * trace_dnorm[0];
    if (sides == 2) {
      jump.rightCols(width[1]) = -sgn * trace_value[1];
      avg.rightCols(width[1]) = 0.5 * trace_dnorm[1];
    }

    Eigen::VectorXd wq(nq);
    for (int q = 0; q < nq; ++q) {
      wq[q] = frule.weights[static_cast<std::size_t>(q)] * wscale;
    }

    // h_e is the finer side's h; the owner of a 1-irregular face is the finer
    // element, and on conforming faces both sides match.
    const double h_edge = mesh.h_of(mesh.element(f.owner));
    const double pen =
        penalty * static_cast<double>(f.degree) * static_cast<double>(f.degree) / h_edge;

    Eigen::MatrixXd consistency = jump.transpose() * wq.asDiagonal() * avg;
    Eigen::MatrixXd block = -(consistency + theta * consistency.transpose());
    if (pen != 0.0) {
      Eigen::MatrixXd scaled = wq.cwiseSqrt().asDiagonal() * jump;
      Eigen::MatrixXd pen_block = Eigen::MatrixXd::Zero(ncols, ncols);
      pen_block.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose(),
                                                           pen);
      block += Eigen::MatrixXd(pen_block.selfadjointView<Eigen::Lower>());
    }

    for (int si = 0; si < sides; ++si) {
      for (int sj = 0; sj < sides; ++sj) {
        const int r0 = si == 0 ? 0 : width[0];
        const int c0 = sj == 0 ? 0 : width[0];
        scatter_block(block.block(r0, c0, width[static_cast<std::size_t>(si)],
                                  width[static_cast<std::size_t>(sj)]),
                      start[static_cast<std::size_t>(si)],
                      start[static_cast<std::size_t>(sj)], triplets);
      }
    }
  }

  Eigen::SparseMatrix<double> matrix(dofs.total, dofs.total);
  matrix.setFromTriplets(triplets.begin(), triplets.end());
  return matrix;
}

OperatorPair assemble_operator(const GradedMesh& mesh, const FaceSet& faces,
                               const DofMap& dofs, const Potential& potential,
                               double theta, double penalty,
                               const QuadratureConfig& quad) {
  OperatorPair op;
  op.theta = theta;
  op.stiffness = assemble_volume(mesh, dofs, potential, quad);
  op.stiffness += assemble_faces(mesh, faces, dofs, theta, penalty, quad);
  op.mass = assemble_mass_diagonal(mesh, dofs);
  return op;
}

void dump_matrix(const Eigen::SparseMatrix<double>& matrix,
                 std::ostream& out) {
  Eigen::SparseMatrix<double, Eigen::RowMajor> rows = matrix;
  char line[80];
  for (int r = 0; r < rows.outerSize(); ++r) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, r);
         it; ++it) {
      std::snprintf(line, sizeof line, "%ld %ld %.17g\n",
                    static_cast<long>(it.row()), static_cast<long>(it.col()),
                    it.value());
      out << line;
    }
  }
}

void dump_diagonal(const Eigen::VectorXd& diag, std::ostream& out) {
  char line[80];
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    std::snprintf(line, sizeof line, "%ld %ld %.17g\n", static_cast<long>(i),
                  static_cast<long>(i), diag[i]);
    out << line;
  }
}

}  // namespace hpdg
