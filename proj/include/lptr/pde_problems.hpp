#pragma once

// Tracking objectives f(u) = 1/2 ||S u - y_d||^2 where S solves
//   -Lap y = chi u        (poisson)   or
//   -Lap y + y^3 = chi u  (semilinear)
// with homogeneous Dirichlet data, plus the built-in test configurations.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lptr/errors.hpp"
#include "lptr/grid.hpp"
#include "lptr/regularizer.hpp"
#include "lptr/smooth_model.hpp"

namespace lptr {

enum class PdeKind { Poisson, Semilinear };

struct ProblemSpec {
  std::string name;
  PdeKind kind = PdeKind::Poisson;
  GridFunction y_d;   // L2-tagged
  GridFunction mask;  // L2-tagged 0/1 values
  Space space = Space::L2;
  RegularizerParams reg;
  // Trapezoidal-rule share of 1/2 ||y - y_d||^2 on the boundary nodes, where
  // the state vanishes. A constant; it only shifts f.
  double boundary_tracking = 0.0;

  const Grid& grid() const { return y_d.grid; }

  void validate() const {
    LPTR_REQUIRE(y_d.all_finite(), "desired state must be finite");
    LPTR_REQUIRE(mask.grid == y_d.grid, "mask and desired state live on different grids");
    LPTR_REQUIRE(((mask.values.array() == 0.0) || (mask.values.array() == 1.0)).all(),
                 "mask values must be 0 or 1");
    reg.validate(space);
  }
};

struct StateSolve {
  GridFunction y;
  int newton_iters = 0;
  double residual = 0.0;
};

namespace detail {

inline Vector masked(const ProblemSpec& spec, const GridFunction& u) {
  LPTR_REQUIRE(u.grid == spec.grid(), "control lives on the wrong grid");
  return spec.mask.values.cwiseProduct(u.values);
}

// Newton (or one linear solve) for the state. The workspace ends up holding
// some factorization; callers must not assume which.
inline StateSolve solve_state_impl(const ProblemSpec& spec, const Vector& rhs, double tol,
                                   ShiftedLaplacianSolver& ws) {
  const Grid& g = spec.grid();
  const double target = tol * std::max(1.0, l2_norm(g, rhs));
  StateSolve out;
  if (spec.kind == PdeKind::Poisson) {
    if (!ws.factored() || !ws.shift().isZero(0.0)) ws.factor(0.0);
    Vector y = ws.solve(rhs, tol);
    out.residual = l2_norm(g, apply_laplacian(g, y) - rhs);
    out.y = GridFunction(g, Space::L2, std::move(y));
    return out;
  }
  constexpr int kNewtonCap = 50;
  Vector y = Vector::Zero(g.size());
  for (int it = 0;; ++it) {
    const Vector r = apply_laplacian(g, y) + y.array().cube().matrix() - rhs;
    const double res = l2_norm(g, r);
    if (res <= target) {
      out.residual = res;
      out.newton_iters = it;
      break;
    }
    if (it == kNewtonCap || !std::isfinite(res)) throw SolverFailure("lptr: Newton iteration cap exceeded", res);
    ws.factor((3.0 * y.array().square()).matrix());
    y -= ws.solve(r, 1e-12);
  }
  out.y = GridFunction(g, Space::L2, std::move(y));
  return out;
}

}  // namespace detail

/// Solves the state equation for control u; ||residual||_L2 <= tol * max(1, ||chi u||_L2).
inline StateSolve solve_state(const ProblemSpec& spec, const GridFunction& u, double tol = 1e-10) {
  LPTR_REQUIRE(u.all_finite(), "control must be finite");
  ShiftedLaplacianSolver ws(spec.grid());
  return detail::solve_state_impl(spec, detail::masked(spec, u), tol, ws);
}

/// SmoothObjective for a ProblemSpec. Keeps the states, adjoints and
/// linearized-operator factorizations of the two most recent controls.
class TrackingObjective final : public SmoothObjective {
 public:
  explicit TrackingObjective(ProblemSpec spec, double tol = 1e-10)
      : spec_(std::move(spec)), tol_(tol), laplace_(spec_.grid(), Vector::Zero(spec_.grid().size())) {
    spec_.validate();
  }

  const ProblemSpec& spec() const { return spec_; }
  Grid grid() const override { return spec_.grid(); }
  Space space() const override { return spec_.space; }

  /// Cached state for u (solved on demand).
  const StateSolve& state(const GridFunction& u) { return lookup(u).state; }

 protected:
  double do_value(const GridFunction& u) override {
    const Entry& e = lookup(u);
    const Vector d = e.state.y.values - spec_.y_d.values;
    return 0.5 * spec_.grid().cell_area() * d.squaredNorm() + spec_.boundary_tracking;
  }

  GridFunction do_gradient(const GridFunction& u) override {
    Entry& e = lookup(u);
    return u.with_values(riesz(spec_.mask.values.cwiseProduct(adjoint(e))));
  }

  GridFunction do_hess_vec(const GridFunction& u, const GridFunction& s) override {
    require_compatible(u, s);
    Entry& e = lookup(u);
    const ShiftedLaplacianSolver& jac = jacobian(e);
    const Vector dy = jac.solve(detail::masked(spec_, s), linear_tol());
    Vector src = dy;
    if (spec_.kind == PdeKind::Semilinear)
      src -= (6.0 * e.state.y.values.array() * adjoint(e).array() * dy.array()).matrix();
    const Vector w = jac.solve(src, linear_tol());
    return s.with_values(riesz(spec_.mask.values.cwiseProduct(w)));
  }

 private:
  struct Entry {
    Vector u;
    StateSolve state;
    std::optional<Vector> q;
    std::unique_ptr<ShiftedLaplacianSolver> jac;
    std::uint64_t stamp = 0;
    bool used = false;
    bool jac_ready = false;
  };

  double linear_tol() const { return std::min(tol_, 1e-12); }

  Entry& lookup(const GridFunction& u) {
    LPTR_REQUIRE(u.grid == spec_.grid(), "control lives on the wrong grid");
    LPTR_REQUIRE(u.space == spec_.space, "control carries the wrong space tag");
    for (Entry& e : cache_) {
      if (e.used && e.u.size() == u.values.size() &&
          std::memcmp(e.u.data(), u.values.data(), sizeof(double) * static_cast<std::size_t>(u.size())) == 0) {
        e.stamp = ++clock_;
        return e;
      }
    }
    LPTR_REQUIRE(u.all_finite(), "control must be finite");
    Entry& slot = cache_[0].stamp <= cache_[1].stamp ? cache_[0] : cache_[1];
    slot.used = false;
    if (spec_.kind == PdeKind::Poisson) {
      slot.state = detail::solve_state_impl(spec_, detail::masked(spec_, u), tol_, laplace_);
    } else {
      if (!slot.jac) slot.jac = std::make_unique<ShiftedLaplacianSolver>(spec_.grid());
      slot.state = detail::solve_state_impl(spec_, detail::masked(spec_, u), tol_, *slot.jac);
    }
    slot.jac_ready = false;
    slot.u = u.values;
    slot.q.reset();
    slot.stamp = ++clock_;
    slot.used = true;
    return slot;
  }

  const ShiftedLaplacianSolver& jacobian(Entry& e) {
    if (spec_.kind == PdeKind::Poisson) return laplace_;
    if (!e.jac_ready) {
      e.jac->factor((3.0 * e.state.y.values.array().square()).matrix());
      e.jac_ready = true;
    }
    return *e.jac;
  }

  const Vector& adjoint(Entry& e) {
    if (!e.q) e.q = jacobian(e).solve(e.state.y.values - spec_.y_d.values, linear_tol());
    return *e.q;
  }

  Vector riesz(const Vector& l2_rep) const {
    if (spec_.space == Space::L2) return l2_rep;
    return laplace_.solve(l2_rep, linear_tol());
  }

  ProblemSpec spec_;
  double tol_;
  ShiftedLaplacianSolver laplace_;
  std::array<Entry, 2> cache_;
  std::uint64_t clock_ = 0;
};

// ---------------------------------------------------------------------------
// Built-in configurations.

inline const std::vector<std::string>& builtin_problem_ids() {
  static const std::vector<std::string> ids{"poisson", "s1", "s2", "s2-localized"};
  return ids;
}

/// Disc of radius 0.4 around (0.6, 0.4).
inline GridFunction localized_mask(Grid g) {
  return GridFunction::sample(g, Space::L2, [](double x, double y) {
    const double dx = x - 0.6, dy = y - 0.4;
    return dx * dx + dy * dy < 0.16 ? 1.0 : 0.0;
  });
}

/// 1/2 sum over boundary nodes of w_b f(x_b)^2 with trapezoidal weights
/// (h^2/2 on edges, h^2/4 at corners).
template <class F>
double boundary_tracking_term(Grid g, F&& f) {
  const int m = g.n + 1;
  const double h = g.h();
  double acc = 0.0;
  for (int j = 0; j <= m; ++j) {
    for (int i = 0; i <= m; ++i) {
      const bool edge_i = i == 0 || i == m, edge_j = j == 0 || j == m;
      if (!edge_i && !edge_j) continue;
      const double w = (edge_i ? 0.5 : 1.0) * (edge_j ? 0.5 : 1.0);
      const double v = f(i * h, j * h);
      acc += w * v * v;
    }
  }
  return 0.5 * h * h * acc;
}

/// One built-in problem. Unconstrained flavors drop the box; H01 flavors are
/// always unconstrained.
inline ProblemSpec make_problem(const std::string& id, Grid g, Space space, bool constrained, double p) {
  using std::numbers::pi;
  ProblemSpec spec;
  spec.space = space;
  spec.mask = GridFunction::constant(g, Space::L2, 1.0);
  double bound = 0.0;
  double (*yd)(double, double) = nullptr;
  if (id == "poisson") {
    spec.kind = PdeKind::Poisson;
    yd = [](double x, double y) { return 10.0 * x * std::sin(5.0 * x) * std::cos(7.0 * y); };
    spec.reg.alpha = 0.01;
    spec.reg.beta = 0.01;
    bound = 4.0;
  } else if (id == "s1") {
    spec.kind = PdeKind::Semilinear;
    yd = [](double x, double y) { return 4.0 * std::sin(2.0 * pi * x) * std::sin(pi * y) * std::exp(x); };
    spec.reg.alpha = 0.002;
    spec.reg.beta = 0.03;
    bound = 12.0;
  } else if (id == "s2" || id == "s2-localized") {
    spec.kind = PdeKind::Semilinear;
    yd = [](double, double) { return -1.0; };
    spec.reg.alpha = 1e-4;
    spec.reg.beta = 1e-2;
    bound = 25.0;
    if (id == "s2-localized") spec.mask = localized_mask(g);
  } else {
    throw ContractViolation("lptr: unknown problem id '" + id + "'");
  }
  spec.y_d = GridFunction::sample(g, Space::L2, yd);
  spec.boundary_tracking = boundary_tracking_term(g, yd);
  spec.reg.p = p;
  const bool boxed = constrained && space == Space::L2;
  if (boxed) spec.reg.box = BoxBounds::symmetric(bound);
  spec.name = id + "/" + to_string(space) + (boxed ? "/constrained" : "/unconstrained");
  spec.validate();
  return spec;
}

/// The four problems in constrained and unconstrained L2 flavors, plus S2 in H01.
inline std::vector<ProblemSpec> builtin_specs(Grid g, double p = 0.5) {
  std::vector<ProblemSpec> out;
  for (const auto& id : builtin_problem_ids()) {
    out.push_back(make_problem(id, g, Space::L2, true, p));
    out.push_back(make_problem(id, g, Space::L2, false, p));
  }
  out.push_back(make_problem("s2", g, Space::H01, false, p));
  return out;
}

}  // namespace lptr
