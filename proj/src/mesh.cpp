// SPDX-License-Identifier: MIT

#include "hpdg/mesh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace hpdg {

namespace {

bool closure_contains_origin(const Element& e, int dim) {
  for (int a = 0; a < dim; ++a) {
    if (e.lower[static_cast<std::size_t>(a)] > 0 || e.lower[static_cast<std::size_t>(a)] + e.size < 0) return false;
  }
  return true;
}

}  // namespace

std::uint64_t GradedMesh::cube_key(const std::int64_t* lower, std::int64_t size) const {
  // Coordinates are shifted to [0, 2^(levels+1)]; levels <= 16 keeps the
  // packed key inside 64 bits with room to spare.
  const auto shift = half_units();
  std::uint64_t key = static_cast<std::uint64_t>(std::countr_zero(static_cast<std::uint64_t>(size)));
  for (int a = 0; a < dim; ++a) {
    key = (key << 18) | static_cast<std::uint64_t>(lower[static_cast<std::size_t>(a)] + shift);
  }
  return key;
}

void GradedMesh::rebuild_lookup() {
  leaf_of_cube_.clear();
  leaf_of_cube_.reserve(elements.size() * 2);
  for (const Element& e : elements) {
    leaf_of_cube_.emplace(cube_key(e.lower.data(), e.size), e.id);
  }
}

int GradedMesh::locate_units(const double* xu) const {
  const double half = static_cast<double>(half_units());
  for (int a = 0; a < dim; ++a) {
    if (xu[a] < -half || xu[a] > half) throw std::invalid_argument("locate: point outside the closed domain");
  }

  struct Cube {
    std::array<std::int64_t, 3> lower;
    std::int64_t size;
  };
  std::vector<Cube> stack;
  stack.push_back({{-half_units(), -half_units(), -half_units()}, std::int64_t(2) * half_units()});

  int best = -1;
  while (!stack.empty()) {
    Cube c = stack.back();
    stack.pop_back();
    const auto it = leaf_of_cube_.find(cube_key(c.lower.data(), c.size));
    if (it != leaf_of_cube_.end()) {
      if (best < 0 || it->second < best) best = it->second;
      continue;
    }
    if (c.size == 1) throw std::runtime_error("locate: lattice cube without element");
    const std::int64_t child = c.size / 2;
    // Descend into every child whose closure contains the point, so points on
    // internal planes see all touching leaves and the smallest id wins.
    std::array<std::array<bool, 2>, 3> take{};
    for (int a = 0; a < dim; ++a) {
      const double mid = static_cast<double>(c.lower[static_cast<std::size_t>(a)] + child);
      take[static_cast<std::size_t>(a)][0] = xu[a] <= mid;
      take[static_cast<std::size_t>(a)][1] = xu[a] >= mid;
    }
    const int corners = 1 << dim;
    for (int m = 0; m < corners; ++m) {
      bool ok = true;
      Cube next{c.lower, child};
      for (int a = 0; a < dim; ++a) {
        const int bit = (m >> a) & 1;
        ok = ok && take[static_cast<std::size_t>(a)][static_cast<std::size_t>(bit)];
        if (bit) next.lower[static_cast<std::size_t>(a)] += child;
      }
      if (ok) stack.push_back(next);
    }
  }
  if (best < 0) throw std::runtime_error("locate: no element found");
  return best;
}

int GradedMesh::locate(const double* x) const {
  std::array<double, 3> xu{0.0, 0.0, 0.0};
  const double scale = 1.0 / unit();
  for (int a = 0; a < dim; ++a) xu[static_cast<std::size_t>(a)] = x[a] * scale;
  return locate_units(xu.data());
}

void GradedMesh::to_reference(const Element& e, const double* x, double* xi) const {
  for (int a = 0; a < dim; ++a) {
    const double lo = lower_of(e, a);
    const double h = h_of(e);
    xi[a] = 2.0 * (x[a] - lo) / h - 1.0;
  }
}

GradedMesh build_graded_mesh(int dim, int levels, const Rational& sigma) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("mesh: dim must be 2 or 3");
  if (levels < 1 || levels > 16) throw std::invalid_argument("mesh: levels must be in [1, 16]");
  if (!(sigma == Rational(1, 2))) throw std::invalid_argument("mesh: only sigma = 1/2 is supported");

  GradedMesh mesh;
  mesh.dim = dim;
  mesh.levels = levels;

  const std::int64_t half = mesh.half_units();
  const int children = 1 << dim;

  // Quadrant/octant split of the domain, then one bisection pass per level.
  std::vector<Element> cells;
  for (int m = 0; m < children; ++m) {
    Element e;
    e.size = half;
    for (int a = 0; a < dim; ++a) e.lower[static_cast<std::size_t>(a)] = ((m >> a) & 1) ? 0 : -half;
    cells.push_back(e);
  }
  for (int pass = 1; pass <= levels; ++pass) {
    std::vector<Element> next;
    next.reserve(cells.size() + static_cast<std::size_t>(children));
    for (const Element& e : cells) {
      if (!closure_contains_origin(e, dim)) {
        next.push_back(e);
        continue;
      }
      const std::int64_t s = e.size / 2;
      for (int m = 0; m < children; ++m) {
        Element c;
        c.size = s;
        for (int a = 0; a < dim; ++a) {
          c.lower[static_cast<std::size_t>(a)] = e.lower[static_cast<std::size_t>(a)] + (((m >> a) & 1) ? s : 0);
        }
        next.push_back(c);
      }
    }
    cells.swap(next);
  }

  for (Element& e : cells) {
    const int depth = std::countr_zero(static_cast<std::uint64_t>(e.size));
    e.layer = levels - depth;
    e.touches_origin = closure_contains_origin(e, dim);
  }
  std::sort(cells.begin(), cells.end(), [dim](const Element& a, const Element& b) {
    if (a.layer != b.layer) return a.layer < b.layer;
    for (int ax = 0; ax < dim; ++ax) {
      const auto i = static_cast<std::size_t>(ax);
      if (a.lower[i] != b.lower[i]) return a.lower[i] < b.lower[i];
    }
    return false;
  });
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i].id = static_cast<int>(i);

  mesh.elements = std::move(cells);
  mesh.rebuild_lookup();
  return mesh;
}

GradedMesh build_uniform_mesh(int dim, int levels) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("mesh: dim must be 2 or 3");
  if (levels < 1 || levels > 16) throw std::invalid_argument("mesh: levels must be in [1, 16]");
  const std::int64_t cells_per_axis = std::int64_t(2) << levels;
  double total = 1.0;
  for (int a = 0; a < dim; ++a) total *= static_cast<double>(cells_per_axis);
  if (total > static_cast<double>(std::int64_t(1) << 24)) {
    throw std::invalid_argument("mesh: uniform mesh too large");
  }

  GradedMesh mesh;
  mesh.dim = dim;
  mesh.levels = levels;
  const std::int64_t half = mesh.half_units();

  // Lexicographic sweep over unit cells; every element sits on the finest
  // layer so the degree law reduces to p0. Unused trailing coordinates stay
  // zero so 2D elements compare equal across mesh builders.
  std::array<std::int64_t, 3> lo{0, 0, 0};
  for (int a = 0; a < dim; ++a) lo[static_cast<std::size_t>(a)] = -half;
  while (true) {
    Element e;
    e.size = 1;
    e.layer = levels;
    e.lower = lo;
    e.touches_origin = closure_contains_origin(e, dim);
    e.id = static_cast<int>(mesh.elements.size());
    mesh.elements.push_back(e);

    int a = dim - 1;
    while (a >= 0) {
      const auto i = static_cast<std::size_t>(a);
      if (++lo[i] < half) break;
      lo[i] = -half;
      --a;
    }
    if (a < 0) break;
  }
  mesh.rebuild_lookup();
  return mesh;
}

void assign_degrees(GradedMesh& mesh, int p0, const Rational& slope) {
  if (p0 < 1) throw std::invalid_argument("degrees: p0 must be >= 1");
  if (slope.num < 0) throw std::invalid_argument("degrees: slope must be >= 0");
  for (Element& e : mesh.elements) {
    e.degree = p0 + static_cast<int>(slope.floor_scaled(mesh.levels - e.layer));
  }
}

FaceSet enumerate_faces(const GradedMesh& mesh) {
  FaceSet set;
  const std::int64_t half = mesh.half_units();
  for (const Element& e : mesh.elements) {
    for (int axis = 0; axis < mesh.dim; ++axis) {
      for (int side : {-1, +1}) {
        const std::int64_t plane =
            side < 0 ? e.lower[static_cast<std::size_t>(axis)] : e.lower[static_cast<std::size_t>(axis)] + e.size;

        Face f;
        f.owner = e.id;
        f.axis = axis;
        f.side = side;
        f.plane = plane;
        f.size = e.size;
        int t = 0;
        for (int a = 0; a < mesh.dim; ++a) {
          if (a == axis) continue;
          f.lower[static_cast<std::size_t>(t++)] = e.lower[static_cast<std::size_t>(a)];
        }

        if (plane == -half || plane == half) {
          f.degree = e.degree;
          set.faces.push_back(f);
          ++set.boundary_count;
          continue;
        }

        // Probe half a lattice unit beyond the face: lands strictly inside
        // the neighbor since no element is smaller than one unit.
        std::array<double, 3> probe{0.0, 0.0, 0.0};
        for (int a = 0; a < mesh.dim; ++a) {
          probe[static_cast<std::size_t>(a)] =
              static_cast<double>(e.lower[static_cast<std::size_t>(a)]) + 0.5 * static_cast<double>(e.size);
        }
        probe[static_cast<std::size_t>(axis)] = static_cast<double>(plane) + 0.5 * static_cast<double>(side);
        const int nb = mesh.locate_units(probe.data());
        const Element& other = mesh.element(nb);

        // Keep the face only from the finer side (hanging faces), or from the
        // smaller id when the sides match, so each face appears exactly once.
        if (other.size < e.size) continue;
        if (other.size == e.size && nb < e.id) continue;
        f.neighbor = nb;
        f.degree = std::max(e.degree, other.degree);
        set.faces.push_back(f);
        ++set.interior_count;
      }
    }
  }
  return set;
}

void dump_mesh(const GradedMesh& mesh, std::ostream& out) {
  const int e2 = mesh.levels + 1;
  for (const Element& e : mesh.elements) {
    out << e.id << ' ' << e.layer;
    for (int a = 0; a < mesh.dim; ++a) out << ' ' << format_dyadic(e.lower[static_cast<std::size_t>(a)], e2);
    out << ' ' << format_dyadic(e.size, e2) << ' ' << e.degree << ' ' << (e.touches_origin ? 1 : 0) << '\n';
  }
}

}  // namespace hpdg
