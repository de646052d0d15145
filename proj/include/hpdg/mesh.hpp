// SPDX-License-Identifier: MIT

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "hpdg/rational.hpp"

namespace hpdg {

// Axis-aligned cube element of a geometrically graded tensor mesh on
// (-1/2, 1/2)^d. All geometry lives on an integer lattice: lengths are
// multiples of the finest cell size 2^-(levels+1), so comparisons and
// containment tests are exact.
struct Element {
  int id = -1;
  int layer = 0;  // j in 1..levels; edge length is sigma^(j+1)
  std::array<std::int64_t, 3> lower{0, 0, 0};  // lattice units
  std::int64_t size = 0;                       // edge length, lattice units
  int degree = 1;
  bool touches_origin = false;
};

// A full face of its owner element. Interior faces pair the owner with the
// element on the other side; where the mesh is 1-irregular the owner is
// always the finer element, so integration over the face set never needs
// sub-face splitting. Boundary faces have neighbor == -1.
struct Face {
  int owner = -1;
  int neighbor = -1;
  int axis = 0;
  int side = +1;  // owner's outward normal is side * e_axis
  std::int64_t plane = 0;                   // coordinate along axis, units
  std::array<std::int64_t, 2> lower{0, 0};  // transverse corner, ascending axes != axis
  std::int64_t size = 0;                    // transverse edge length, units
  int degree = 1;                           // max degree of the adjacent elements
  [[nodiscard]] bool interior() const { return neighbor >= 0; }
};

struct FaceSet {
  std::vector<Face> faces;
  int interior_count = 0;
  int boundary_count = 0;
};

class GradedMesh {
 public:
  int dim = 2;
  int levels = 1;
  std::vector<Element> elements;

  // Lattice scale: one unit is 2^-(levels+1) physical lengths; the domain is
  // [-half_units, half_units]^dim on the lattice.
  [[nodiscard]] std::int64_t half_units() const { return std::int64_t(1) << levels; }
  [[nodiscard]] double unit() const { return 1.0 / static_cast<double>(std::int64_t(1) << (levels + 1)); }

  [[nodiscard]] const Element& element(int id) const { return elements[static_cast<std::size_t>(id)]; }
  [[nodiscard]] int element_count() const { return static_cast<int>(elements.size()); }

  [[nodiscard]] double h_of(const Element& e) const { return static_cast<double>(e.size) * unit(); }
  [[nodiscard]] double lower_of(const Element& e, int axis) const {
    return static_cast<double>(e.lower[static_cast<std::size_t>(axis)]) * unit();
  }
  [[nodiscard]] double center_of(const Element& e, int axis) const {
    return (static_cast<double>(e.lower[static_cast<std::size_t>(axis)]) + 0.5 * static_cast<double>(e.size)) * unit();
  }

  // Element whose closure contains x (physical coordinates). Points on shared
  // boundaries resolve to the smallest id among the touching elements.
  [[nodiscard]] int locate(const double* x) const;
  [[nodiscard]] int locate_units(const double* xu) const;

  // Map a physical point into the owner element's reference cube [-1,1]^dim.
  void to_reference(const Element& e, const double* x, double* xi) const;

  void rebuild_lookup();

 private:
  std::unordered_map<std::uint64_t, int> leaf_of_cube_;
  [[nodiscard]] std::uint64_t cube_key(const std::int64_t* lower, std::int64_t size) const;
};

// Recursive bisection toward the origin: levels passes, each splitting every
// element whose closure contains the origin. Only sigma = 1/2 is supported.
GradedMesh build_graded_mesh(int dim, int levels, const Rational& sigma);

// Conforming uniform mesh whose elements all have the finest-layer size
// 2^-(levels+1) of the graded family; levels = 1 coincides with the graded
// mesh. Used for analytic smooth-eigenfunction checks.
GradedMesh build_uniform_mesh(int dim, int levels);

// p_K = p0 + floor(slope * (levels - layer)); exact integer arithmetic.
void assign_degrees(GradedMesh& mesh, int p0, const Rational& slope);

FaceSet enumerate_faces(const GradedMesh& mesh);

// One line per element: id layer lower... h p touches_origin, rationals as num/den.
void dump_mesh(const GradedMesh& mesh, std::ostream& out);

}  // namespace hpdg
