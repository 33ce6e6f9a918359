#pragma once

/**
 * @file mesh_fem.hpp
 * @brief Conforming P1 finite elements on a partition of [0,1] whose left
 * node is pinned to zero.
 *
 * Degrees of freedom are the nodes 1..N (0-based index j <-> node j+1); the
 * last DOF is the boundary node x = 1. Nonlinear and load integrals use the
 * 3-point Gauss-Legendre rule per element, which is exact for the degree-4
 * integrands produced by cubing a P1 function.
 */

#include "penalty_stab/tridiagonal.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace penalty_stab {

class MeshError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// 3-point Gauss-Legendre rule mapped to the reference element [0,1].
struct GaussLegendre3 {
  static constexpr std::size_t size = 3;
  static const std::array<double, 3> &points() {
    static const std::array<double, 3> p{0.5 - 0.5 * std::sqrt(0.6), 0.5,
                                         0.5 + 0.5 * std::sqrt(0.6)};
    return p;
  }
  static constexpr std::array<double, 3> weights{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
};

/**
 * @brief Partition 0 = x_0 < x_1 < ... < x_N = 1.
 */
class MeshPartition {
public:
  explicit MeshPartition(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 3) {
      throw MeshError("mesh needs at least 2 elements, got " +
                      std::to_string(nodes_.empty() ? 0 : nodes_.size() - 1));
    }
    if (nodes_.front() != 0.0 || nodes_.back() != 1.0) {
      throw MeshError("mesh nodes must span exactly [0,1]");
    }
    sizes_.resize(nodes_.size() - 1);
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
      sizes_[i - 1] = nodes_[i] - nodes_[i - 1];
      if (!(sizes_[i - 1] > 0.0)) throw MeshError("mesh nodes must be strictly increasing");
    }
    h_ = *std::max_element(sizes_.begin(), sizes_.end());
  }

  const std::vector<double> &nodes() const noexcept { return nodes_; }
  const std::vector<double> &element_sizes() const noexcept { return sizes_; }
  double h() const noexcept { return h_; }
  std::size_t n_elements() const noexcept { return sizes_.size(); }
  std::size_t n_dofs() const noexcept { return sizes_.size(); }
  /// node coordinate of DOF j
  double dof_coordinate(std::size_t j) const { return nodes_[j + 1]; }

  bool operator==(const MeshPartition &other) const { return nodes_ == other.nodes_; }

private:
  std::vector<double> nodes_;
  std::vector<double> sizes_;
  double h_ = 0.0;
};

inline MeshPartition make_uniform_mesh(std::size_t n_elements) {
  if (n_elements < 2) {
    throw MeshError("make_uniform_mesh: need at least 2 elements, got " +
                    std::to_string(n_elements));
  }
  std::vector<double> nodes(n_elements + 1);
  for (std::size_t i = 0; i <= n_elements; ++i) {
    nodes[i] = static_cast<double>(i) / static_cast<double>(n_elements);
  }
  nodes.back() = 1.0;
  return MeshPartition(std::move(nodes));
}

/// Nodal coefficients over the DOFs; the value at x = 0 is implicitly zero.
struct StateVector {
  Vector coefficients;

  StateVector() = default;
  explicit StateVector(std::size_t n) : coefficients(n, 0.0) {}
  explicit StateVector(Vector c) : coefficients(std::move(c)) {}

  std::size_t size() const noexcept { return coefficients.size(); }
  double &operator[](std::size_t i) { return coefficients[i]; }
  double operator[](std::size_t i) const { return coefficients[i]; }
  operator std::span<const double>() const noexcept { return coefficients; }

  /// Value of the P1 function at x in [0,1].
  double evaluate(const MeshPartition &mesh, double x) const {
    assert(size() == mesh.n_dofs());
    const auto &nodes = mesh.nodes();
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return coefficients.back();
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    const std::size_t e = static_cast<std::size_t>(it - nodes.begin()); // right node
    const double a = nodes[e - 1];
    const double b = nodes[e];
    const double left = e - 1 == 0 ? 0.0 : coefficients[e - 2];
    const double right = coefficients[e - 1];
    const double t = (x - a) / (b - a);
    return left * (1.0 - t) + right * t;
  }

  bool operator==(const StateVector &) const = default;
};

/// Mass and stiffness matrices over all N+1 nodes, node 0 included.
struct UnpinnedMatrices {
  SymTridiagonal mass;
  SymTridiagonal stiffness;
};

inline UnpinnedMatrices assemble_unpinned(const MeshPartition &mesh) {
  const std::size_t n_nodes = mesh.nodes().size();
  UnpinnedMatrices out{SymTridiagonal(n_nodes), SymTridiagonal(n_nodes)};
  const auto &hs = mesh.element_sizes();
  for (std::size_t e = 0; e < hs.size(); ++e) {
    const double h = hs[e];
    out.mass.diag[e] += h / 3.0;
    out.mass.diag[e + 1] += h / 3.0;
    out.mass.off[e] += h / 6.0;
    out.stiffness.diag[e] += 1.0 / h;
    out.stiffness.diag[e + 1] += 1.0 / h;
    out.stiffness.off[e] -= 1.0 / h;
  }
  return out;
}

/**
 * @brief Finite element objects on the pinned space: M, K, the moment
 * vector w_i = int x phi_i dx and the index of the node at x = 1.
 */
struct AssembledSystem {
  MeshPartition mesh;
  SymTridiagonal mass;
  SymTridiagonal stiffness;
  Vector moment;
  std::size_t boundary_index = 0;

  std::size_t size() const noexcept { return moment.size(); }

  /// int_0^1 x Y(x) dx
  double moment_of(std::span<const double> y) const {
    assert(y.size() == moment.size());
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += moment[i] * y[i];
    return s;
  }
};

inline AssembledSystem assemble(const MeshPartition &mesh) {
  const auto full = assemble_unpinned(mesh);
  const std::size_t n = mesh.n_dofs();
  AssembledSystem sys{mesh, SymTridiagonal(n), SymTridiagonal(n), Vector(n, 0.0), n - 1};
  for (std::size_t j = 0; j < n; ++j) {
    sys.mass.diag[j] = full.mass.diag[j + 1];
    sys.stiffness.diag[j] = full.stiffness.diag[j + 1];
    if (j + 1 < n) {
      sys.mass.off[j] = full.mass.off[j + 1];
      sys.stiffness.off[j] = full.stiffness.off[j + 1];
    }
  }
  // element [a,b]: int x phi_left = h(b + 2a)/6, int x phi_right = h(2b + a)/6
  const auto &nodes = mesh.nodes();
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    const double a = nodes[e];
    const double b = nodes[e + 1];
    const double h = b - a;
    if (e > 0) sys.moment[e - 1] += h * (b + 2.0 * a) / 6.0;
    sys.moment[e] += h * (2.0 * b + a) / 6.0;
  }
  return sys;
}

enum class ProjectionMode { l2, interpolation };

/**
 * Discrete initial datum. L2 mode solves M c = ((f, phi_i))_i with the load
 * integrated by 3-point Gauss per element; interpolation samples f at the
 * nodes. f(0) is assumed to vanish.
 */
inline StateVector project_initial(const AssembledSystem &sys,
                                   const std::function<double(double)> &f,
                                   ProjectionMode mode = ProjectionMode::l2) {
  const auto &mesh = sys.mesh;
  const std::size_t n = mesh.n_dofs();
  StateVector out(n);
  if (mode == ProjectionMode::interpolation) {
    for (std::size_t j = 0; j < n; ++j) out[j] = f(mesh.dof_coordinate(j));
    return out;
  }
  Vector load(n, 0.0);
  const auto &nodes = mesh.nodes();
  const auto &pts = GaussLegendre3::points();
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    const double a = nodes[e];
    const double h = nodes[e + 1] - a;
    double to_left = 0.0, to_right = 0.0;
    for (std::size_t q = 0; q < GaussLegendre3::size; ++q) {
      const double t = pts[q];
      const double fw = f(a + h * t) * GaussLegendre3::weights[q] * h;
      to_left += fw * (1.0 - t);
      to_right += fw * t;
    }
    if (e > 0) load[e - 1] += to_left;
    load[e] += to_right;
  }
  out.coefficients = thomas_solve(sys.mass, load);
  return out;
}

inline StateVector project_initial(const MeshPartition &mesh,
                                   const std::function<double(double)> &f,
                                   ProjectionMode mode = ProjectionMode::l2) {
  return project_initial(assemble(mesh), f, mode);
}

namespace detail {

/// Calls fn(left_dof_or_npos, right_dof, y_left, y_right, a, h) per element.
template <typename Fn>
void for_each_element(const MeshPartition &mesh, std::span<const double> y, Fn &&fn) {
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  const auto &nodes = mesh.nodes();
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    const std::size_t left = e == 0 ? none : e - 1;
    const double yl = e == 0 ? 0.0 : y[e - 1];
    fn(left, e, yl, y[e], nodes[e], nodes[e + 1] - nodes[e]);
  }
}

} // namespace detail

/// (Y^3, phi_i) for every DOF.
inline Vector cubic_term(const MeshPartition &mesh, std::span<const double> y) {
  assert(y.size() == mesh.n_dofs());
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  Vector out(mesh.n_dofs(), 0.0);
  const auto &pts = GaussLegendre3::points();
  detail::for_each_element(mesh, y, [&](std::size_t left, std::size_t right, double yl,
                                        double yr, double, double h) {
    double to_left = 0.0, to_right = 0.0;
    for (std::size_t q = 0; q < GaussLegendre3::size; ++q) {
      const double t = pts[q];
      const double v = yl * (1.0 - t) + yr * t;
      const double c = v * v * v * GaussLegendre3::weights[q] * h;
      to_left += c * (1.0 - t);
      to_right += c * t;
    }
    if (left != none) out[left] += to_left;
    out[right] += to_right;
  });
  return out;
}

/// (3 Y^2 phi_j, phi_i): derivative of cubic_term.
inline SymTridiagonal cubic_jacobian(const MeshPartition &mesh, std::span<const double> y) {
  assert(y.size() == mesh.n_dofs());
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  SymTridiagonal out(mesh.n_dofs());
  const auto &pts = GaussLegendre3::points();
  detail::for_each_element(mesh, y, [&](std::size_t left, std::size_t right, double yl,
                                        double yr, double, double h) {
    double ll = 0.0, lr = 0.0, rr = 0.0;
    for (std::size_t q = 0; q < GaussLegendre3::size; ++q) {
      const double t = pts[q];
      const double v = yl * (1.0 - t) + yr * t;
      const double c = 3.0 * v * v * GaussLegendre3::weights[q] * h;
      ll += c * (1.0 - t) * (1.0 - t);
      lr += c * (1.0 - t) * t;
      rr += c * t * t;
    }
    if (left != none) {
      out.diag[left] += ll;
      out.off[left] += lr;
    }
    out.diag[right] += rr;
  });
  return out;
}

struct Norms {
  double l2 = 0.0;
  double l_inf = 0.0;
  double l4 = 0.0;
  double h1_semi = 0.0;
};

inline double l2_norm(const AssembledSystem &sys, std::span<const double> y) {
  return std::sqrt(std::max(0.0, sys.mass.quadratic_form(y)));
}

inline double linf_norm(std::span<const double> y) {
  double m = 0.0;
  for (double v : y) m = std::max(m, std::abs(v));
  return m;
}

inline double l4_norm(const MeshPartition &mesh, std::span<const double> y) {
  double s = 0.0;
  const auto &pts = GaussLegendre3::points();
  detail::for_each_element(mesh, y, [&](std::size_t, std::size_t, double yl, double yr, double,
                                        double h) {
    for (std::size_t q = 0; q < GaussLegendre3::size; ++q) {
      const double v = yl * (1.0 - pts[q]) + yr * pts[q];
      s += v * v * v * v * GaussLegendre3::weights[q] * h;
    }
  });
  return std::pow(s, 0.25);
}

inline Norms norms(const AssembledSystem &sys, std::span<const double> y) {
  if (y.size() != sys.size()) throw MeshError("norms: state does not match the mesh");
  return {l2_norm(sys, y), linf_norm(y), l4_norm(sys.mesh, y),
          std::sqrt(std::max(0.0, sys.stiffness.quadratic_form(y)))};
}

} // namespace penalty_stab
