#pragma once

// Uniform interior-node grids on the unit square, grid functions tagged with
// their inner-product space, and shifted-Laplacian linear solves.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "lptr/errors.hpp"

namespace lptr {

using Vector = Eigen::VectorXd;

/// Interior nodes of (0,1)^2 with spacing h = 1/(n+1) in both directions.
struct Grid {
  int n = 2;

  Grid() = default;
  explicit Grid(int nodes_per_axis) : n(nodes_per_axis) {
    LPTR_REQUIRE(n >= 2, "grid needs at least 2 interior nodes per axis");
  }

  double h() const { return 1.0 / static_cast<double>(n + 1); }
  /// Quadrature weight of one node (midpoint rule).
  double cell_area() const { return h() * h(); }
  int size() const { return n * n; }
  /// Total quadrature area, n^2 h^2.
  double area() const { return cell_area() * size(); }
  int index(int i, int j) const { return i + n * j; }
  double x(int i) const { return (i + 1) * h(); }
  double y(int j) const { return (j + 1) * h(); }

  friend bool operator==(const Grid&, const Grid&) = default;
};

enum class Space { L2, H01 };

inline const char* to_string(Space s) { return s == Space::L2 ? "l2" : "h01"; }

/// Lower/upper constant bounds; infinite values mean "no bound".
struct BoxBounds {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  BoxBounds() = default;
  BoxBounds(double a, double b) : lower(a), upper(b) {
    LPTR_REQUIRE(a < b, "box bounds need lower < upper");
  }

  static BoxBounds unbounded() { return {}; }
  static BoxBounds symmetric(double b) { return {-b, b}; }

  bool is_unbounded() const { return std::isinf(lower) && std::isinf(upper); }
  bool contains(double v) const { return v >= lower && v <= upper; }
  double clamp(double v) const { return std::min(std::max(v, lower), upper); }
};

/// Nodal values of a control or state, tagged with the space whose inner
/// product it carries.
struct GridFunction {
  Grid grid;
  Space space = Space::L2;
  Vector values;

  GridFunction() = default;
  GridFunction(Grid g, Space s) : grid(g), space(s), values(Vector::Zero(g.size())) {}
  GridFunction(Grid g, Space s, Vector v) : grid(g), space(s), values(std::move(v)) {
    LPTR_REQUIRE(values.size() == grid.size(), "grid function length must be n^2");
  }

  static GridFunction constant(Grid g, Space s, double c) {
    return {g, s, Vector::Constant(g.size(), c)};
  }

  /// Samples f(x, y) at every interior node.
  template <class F>
  static GridFunction sample(Grid g, Space s, F&& f) {
    Vector v(g.size());
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) v[g.index(i, j)] = f(g.x(i), g.y(j));
    return {g, s, std::move(v)};
  }

  GridFunction with_values(Vector v) const { return {grid, space, std::move(v)}; }
  GridFunction in_space(Space s) const { return {grid, s, values}; }

  int size() const { return static_cast<int>(values.size()); }
  double operator[](int i) const { return values[i]; }
  double& operator[](int i) { return values[i]; }
  bool all_finite() const { return values.allFinite(); }
};

inline void require_compatible(const GridFunction& u, const GridFunction& v) {
  LPTR_REQUIRE(u.grid == v.grid, "grid functions live on different grids");
  LPTR_REQUIRE(u.space == v.space, "grid functions carry different space tags");
}

inline GridFunction operator+(const GridFunction& u, const GridFunction& v) {
  require_compatible(u, v);
  return u.with_values(u.values + v.values);
}
inline GridFunction operator-(const GridFunction& u, const GridFunction& v) {
  require_compatible(u, v);
  return u.with_values(u.values - v.values);
}
inline GridFunction operator*(double a, const GridFunction& u) { return u.with_values(a * u.values); }
inline GridFunction operator-(const GridFunction& u) { return u.with_values(-u.values); }

/// 5-point negative Laplacian with homogeneous Dirichlet data, scaled by 1/h^2.
inline Vector apply_laplacian(const Grid& g, const Vector& u) {
  const int n = g.n;
  const double s = 1.0 / g.cell_area();
  Vector out(g.size());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int k = g.index(i, j);
      double acc = 4.0 * u[k];
      if (i > 0) acc -= u[k - 1];
      if (i < n - 1) acc -= u[k + 1];
      if (j > 0) acc -= u[k - n];
      if (j < n - 1) acc -= u[k + n];
      out[k] = s * acc;
    }
  }
  return out;
}

/// Sparse K + diag(c).
inline Eigen::SparseMatrix<double> shifted_laplacian_matrix(const Grid& g, const Vector& c) {
  const int n = g.n;
  const double s = 1.0 / g.cell_area();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(5 * g.size()));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int k = g.index(i, j);
      trip.emplace_back(k, k, 4.0 * s + c[k]);
      if (i > 0) trip.emplace_back(k, k - 1, -s);
      if (i < n - 1) trip.emplace_back(k, k + 1, -s);
      if (j > 0) trip.emplace_back(k, k - n, -s);
      if (j < n - 1) trip.emplace_back(k, k + n, -s);
    }
  }
  Eigen::SparseMatrix<double> a(g.size(), g.size());
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

/// Discrete inner product of the shared space: h^2 u.v (L2) or h^2 u.Kv (H01).
inline double inner(const GridFunction& u, const GridFunction& v) {
  require_compatible(u, v);
  const double w = u.grid.cell_area();
  if (u.space == Space::L2) return w * u.values.dot(v.values);
  return w * u.values.dot(apply_laplacian(v.grid, v.values));
}

inline double norm(const GridFunction& u) { return std::sqrt(std::max(0.0, inner(u, u))); }

/// L2 norm of a raw nodal vector on g.
inline double l2_norm(const Grid& g, const Vector& v) { return g.h() * v.norm(); }

inline GridFunction project_box(const GridFunction& u, const BoxBounds& box) {
  return u.with_values(u.values.unaryExpr([&](double v) { return box.clamp(v); }));
}

inline bool within_box(const GridFunction& u, const BoxBounds& box) {
  if (box.is_unbounded()) return true;
  return (u.values.array() >= box.lower).all() && (u.values.array() <= box.upper).all();
}

namespace detail {

/// Jacobi-preconditioned CG on (K + diag(c)) x = rhs, warm-started at x.
/// Returns the achieved L2 residual.
inline double pcg(const Grid& g, const Vector& c, const Vector& rhs, Vector& x, double tol,
                  int max_iter) {
  const double target = tol * std::max(1.0, l2_norm(g, rhs));
  const Vector diag = Vector::Constant(g.size(), 4.0 / g.cell_area()) + c;
  Vector r = rhs - apply_laplacian(g, x) - c.cwiseProduct(x);
  double res = l2_norm(g, r);
  if (res <= target) return res;
  Vector z = r.cwiseQuotient(diag);
  Vector p = z;
  double rz = r.dot(z);
  for (int it = 0; it < max_iter; ++it) {
    const Vector ap = apply_laplacian(g, p) + c.cwiseProduct(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double step = rz / pap;
    x += step * p;
    r -= step * ap;
    res = l2_norm(g, r);
    if (res <= target) return res;
    z = r.cwiseQuotient(diag);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  // Recompute to avoid reporting a drifted recursive residual.
  return l2_norm(g, rhs - apply_laplacian(g, x) - c.cwiseProduct(x));
}

inline int default_cg_cap(const Grid& g) { return std::max(1000, 20 * g.size()); }

}  // namespace detail

/// Solves (K + diag(c)) y = rhs by diagonally preconditioned CG so that
/// ||(K + diag(c)) y - rhs||_L2 <= tol * max(1, ||rhs||_L2).
inline GridFunction solve_shifted_laplacian(const Vector& c, const GridFunction& rhs,
                                            double tol = 1e-10) {
  LPTR_REQUIRE(c.size() == rhs.size(), "shift has wrong length");
  LPTR_REQUIRE((c.array() >= 0.0).all(), "shift must be nonnegative");
  const Grid& g = rhs.grid;
  Vector y = Vector::Zero(g.size());
  const double res = detail::pcg(g, c, rhs.values, y, tol, detail::default_cg_cap(g));
  if (res > tol * std::max(1.0, l2_norm(g, rhs.values)))
    throw SolverFailure("lptr: CG iteration cap exceeded", res);
  return rhs.with_values(std::move(y));
}

inline GridFunction solve_shifted_laplacian(double c, const GridFunction& rhs, double tol = 1e-10) {
  LPTR_REQUIRE(c >= 0.0, "shift must be nonnegative");
  return solve_shifted_laplacian(Vector::Constant(rhs.size(), c), rhs, tol);
}

/// Sparse LDL^T factorization of K + diag(c) for repeated solves with one
/// shift. The symbolic analysis is kept across refactorizations. Every solve
/// is checked against the same residual contract as solve_shifted_laplacian
/// and polished with CG if the direct solve falls short.
class ShiftedLaplacianSolver {
 public:
  explicit ShiftedLaplacianSolver(Grid g) : grid_(g), shift_(Vector::Zero(g.size())) {}

  ShiftedLaplacianSolver(Grid g, const Vector& c) : ShiftedLaplacianSolver(g) { factor(c); }

  void factor(const Vector& c) {
    LPTR_REQUIRE(c.size() == grid_.size(), "shift has wrong length");
    LPTR_REQUIRE((c.array() >= 0.0).all(), "shift must be nonnegative");
    shift_ = c;
    matrix_ = shifted_laplacian_matrix(grid_, c);
    if (!analyzed_) {
      ldlt_.analyzePattern(matrix_);
      analyzed_ = true;
    }
    ldlt_.factorize(matrix_);
    if (ldlt_.info() != Eigen::Success) throw SolverFailure("lptr: sparse factorization failed", 0.0);
    factored_ = true;
  }

  void factor(double c) { factor(Vector::Constant(grid_.size(), c)); }

  bool factored() const { return factored_; }
  const Grid& grid() const { return grid_; }
  const Vector& shift() const { return shift_; }

  Vector solve(const Vector& rhs, double tol = 1e-10) const {
    LPTR_REQUIRE(factored_, "solver used before factor()");
    Vector x = ldlt_.solve(rhs);
    const double target = tol * std::max(1.0, l2_norm(grid_, rhs));
    double res = l2_norm(grid_, rhs - matrix_ * x);
    if (!(res <= target) || !x.allFinite()) {
      if (!x.allFinite()) x.setZero();
      res = detail::pcg(grid_, shift_, rhs, x, tol, detail::default_cg_cap(grid_));
      if (res > target) throw SolverFailure("lptr: shifted Laplacian solve failed", res);
    }
    return x;
  }

 private:
  Grid grid_;
  Vector shift_;
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool analyzed_ = false;
  bool factored_ = false;
};

}  // namespace lptr
