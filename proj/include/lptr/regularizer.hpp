#pragma once

// The nonsmooth term phi(u) = beta * int |u|^p + alpha/2 ||u||^2 + I_box(u),
// its smoothed version phi_eps (|u|^p replaced by psi_eps(u^2)) and the convex
// majorant phi_k obtained by linearizing psi_eps in u^2 at an anchor u_k.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <variant>

#include "lptr/errors.hpp"
#include "lptr/grid.hpp"

namespace lptr {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct RegularizerParams {
  double p = 0.5;
  double alpha = 0.0;
  double beta = 1.0;
  BoxBounds box;

  /// Checks the parameter ranges; H01 additionally needs alpha > 0 and no box.
  void validate(Space space) const {
    LPTR_REQUIRE(p > 0.0 && p <= 1.0, "p must lie in (0, 1]");
    LPTR_REQUIRE(beta > 0.0, "beta must be positive");
    LPTR_REQUIRE(alpha >= 0.0, "alpha must be nonnegative");
    if (space == Space::H01) {
      LPTR_REQUIRE(alpha > 0.0, "H01 regularization needs alpha > 0");
      LPTR_REQUIRE(box.is_unbounded(), "H01 regularization is unconstrained");
    }
  }
};

/// Smoothing level eps_k and the anchor u_k of the majorant phi_k.
struct SmoothingState {
  double eps = 1e-6;
  GridFunction anchor;

  SmoothingState() = default;
  SmoothingState(double e, GridFunction a) : eps(e), anchor(std::move(a)) {
    LPTR_REQUIRE(eps >= 0.0, "smoothing parameter must be nonnegative");
    LPTR_REQUIRE(anchor.all_finite(), "majorant anchor must be finite");
  }
};

/// Per-solver count of nonconvex (L^p) proximal evaluations.
struct EvalTally {
  std::int64_t prox_lp = 0;
};

// ---------------------------------------------------------------------------
// Scalar smoothing function psi_eps, a C^1 concave replacement of t -> t^{p/2}.
// eps = 0 gives t^{p/2} itself.

inline double psi_eps(double t, double eps, double p) {
  const double e2 = eps * eps;
  if (t < e2) return 0.5 * p * t / std::pow(eps, 2.0 - p) + (1.0 - 0.5 * p) * std::pow(eps, p);
  return std::pow(t, 0.5 * p);
}

/// (p/2) min(eps^{p-2}, t^{(p-2)/2}); +inf at t = 0 when eps = 0.
inline double psi_eps_prime(double t, double eps, double p) {
  if (t <= eps * eps) {
    if (eps == 0.0) return kInf;
    return 0.5 * p * std::pow(eps, p - 2.0);
  }
  return 0.5 * p * std::pow(t, 0.5 * (p - 2.0));
}

/// h^2 sum psi_eps(u_i^2).
inline double j_eps(const GridFunction& u, double eps, double p) {
  double acc = 0.0;
  for (int i = 0; i < u.size(); ++i) acc += psi_eps(u[i] * u[i], eps, p);
  return u.grid.cell_area() * acc;
}

/// Weights psi'_eps(u_k^2) of the majorant at every node.
inline Vector majorant_weights(const SmoothingState& st, double p) {
  return st.anchor.values.unaryExpr([&](double a) { return psi_eps_prime(a * a, st.eps, p); });
}

namespace detail {

// One node of the majorant integrand; an infinite slope (eps = 0 at a zero
// anchor) pins the node to the anchor.
inline double majorant_term(double u, double a, double eps, double p, double slope) {
  const double base = psi_eps(a * a, eps, p);
  if (std::isinf(slope)) return u == a ? base : kInf;
  return base + slope * (u * u - a * a);
}

}  // namespace detail

/// h^2 sum [psi_eps(a_i^2) + psi'_eps(a_i^2) (u_i^2 - a_i^2)] with a = anchor.
inline double j_majorant(const GridFunction& u, const SmoothingState& st, double p) {
  require_compatible(u, st.anchor);
  double acc = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    const double a = st.anchor[i];
    acc += detail::majorant_term(u[i], a, st.eps, p, psi_eps_prime(a * a, st.eps, p));
  }
  return u.grid.cell_area() * acc;
}

/// Exact |u|^p integral.
inline double j_exact(const GridFunction& u, double p) {
  double acc = 0.0;
  for (int i = 0; i < u.size(); ++i) acc += std::pow(std::abs(u[i]), p);
  return u.grid.cell_area() * acc;
}

// ---------------------------------------------------------------------------
// phi in its three flavors.

struct ExactPhi {};
struct SmoothedPhi {
  double eps;
};
struct MajorantPhi {
  std::reference_wrapper<const SmoothingState> state;
};
using PhiVariant = std::variant<ExactPhi, SmoothedPhi, MajorantPhi>;

/// beta * (j term of the variant) + alpha/2 ||u||^2, or +inf outside the box.
inline double phi_value(const GridFunction& u, const RegularizerParams& prm, const PhiVariant& which) {
  if (!within_box(u, prm.box)) return kInf;
  const double j = std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ExactPhi>) return j_exact(u, prm.p);
        else if constexpr (std::is_same_v<T, SmoothedPhi>) return j_eps(u, v.eps, prm.p);
        else return j_majorant(u, v.state.get(), prm.p);
      },
      which);
  const double quad = prm.alpha == 0.0 ? 0.0 : 0.5 * prm.alpha * inner(u, u);
  return prm.beta * j + quad;
}

// ---------------------------------------------------------------------------
// Proximal maps of the convex majorant.

/// Closed form proj_box(v / (1 + alpha r + 2 r beta psi'_eps(u_k^2))).
inline GridFunction prox_majorant_l2(const GridFunction& v, double r, const SmoothingState& st,
                                     const RegularizerParams& prm) {
  LPTR_REQUIRE(v.space == Space::L2, "closed-form majorant prox is for L2 controls");
  LPTR_REQUIRE(r > 0.0, "prox parameter must be positive");
  require_compatible(v, st.anchor);
  Vector w(v.size());
  for (int i = 0; i < v.size(); ++i) {
    const double a = st.anchor[i];
    const double slope = psi_eps_prime(a * a, st.eps, prm.p);
    const double denom = 1.0 + prm.alpha * r + 2.0 * r * prm.beta * slope;
    w[i] = prm.box.clamp(std::isinf(denom) ? 0.0 : v[i] / denom);
  }
  return v.with_values(std::move(w));
}

/// Minimizer of (1/2r)||w - v||^2_H01 + alpha/2 ||w||^2_H01 + beta h^2 sum psi'(u_k^2) w^2,
/// i.e. K w + (2 beta r / (1 + alpha r)) D w = K v / (1 + alpha r).
inline GridFunction prox_majorant_h1(const GridFunction& v, double r, const SmoothingState& st,
                                     const RegularizerParams& prm, double tol = 1e-10,
                                     ShiftedLaplacianSolver* workspace = nullptr) {
  LPTR_REQUIRE(v.space == Space::H01, "H01 majorant prox needs an H01 argument");
  LPTR_REQUIRE(r > 0.0, "prox parameter must be positive");
  LPTR_REQUIRE(prm.box.is_unbounded(), "H01 prox is unconstrained");
  LPTR_REQUIRE(prm.alpha > 0.0, "H01 prox needs alpha > 0");
  require_compatible(v, st.anchor);
  const double scale = 1.0 / (1.0 + prm.alpha * r);
  Vector c = (2.0 * prm.beta * r * scale) * majorant_weights(st, prm.p);
  LPTR_REQUIRE(c.allFinite(), "H01 majorant prox needs eps > 0 at zero anchors");
  const Vector rhs = scale * apply_laplacian(v.grid, v.values);
  if (workspace != nullptr) {
    workspace->factor(c);
    return v.with_values(workspace->solve(rhs, tol));
  }
  ShiftedLaplacianSolver solver(v.grid, c);
  return v.with_values(solver.solve(rhs, tol));
}

inline GridFunction prox_majorant(const GridFunction& v, double r, const SmoothingState& st,
                                  const RegularizerParams& prm, ShiftedLaplacianSolver* ws = nullptr) {
  if (v.space == Space::L2) return prox_majorant_l2(v, r, st, prm);
  return prox_majorant_h1(v, r, st, prm, 1e-10, ws);
}

// ---------------------------------------------------------------------------
// Nonconvex scalar prox of phi_eps.

/// Inflection point (r beta p (1-p) / (1 + alpha r))^{1/(2-p)} of the prox objective.
inline double inflection_threshold(double r, const RegularizerParams& prm) {
  LPTR_REQUIRE(r > 0.0, "prox parameter must be positive");
  return std::pow(r * prm.beta * prm.p * (1.0 - prm.p) / (1.0 + prm.alpha * r), 1.0 / (2.0 - prm.p));
}

/// Objective of the scalar prox problem, w -> (w - v)^2/(2r) + alpha/2 w^2 + beta psi_eps(w^2).
inline double scalar_prox_objective(double w, double v, double r, double eps, const RegularizerParams& prm) {
  const double d = w - v;
  return 0.5 * d * d / r + 0.5 * prm.alpha * w * w + prm.beta * psi_eps(w * w, eps, prm.p);
}

struct ScalarProxOptions {
  int max_iter = 100;
  double step_tol = 1e-12;
  double tie_tol = 1e-12;
};

/// A global minimizer of scalar_prox_objective over the box. Ties within
/// tie_tol (relative) go to the candidate of smaller magnitude.
inline double prox_smoothed_scalar(double v, double r, double eps, const RegularizerParams& prm,
                                   const ScalarProxOptions& opt = {}) {
  LPTR_REQUIRE(r > 0.0, "prox parameter must be positive");
  LPTR_REQUIRE(eps >= 0.0, "smoothing parameter must be nonnegative");
  // The objective is even in (w, v); work with v >= 0 and a mirrored box.
  const double sign = v < 0.0 ? -1.0 : 1.0;
  const double x = std::abs(v);
  const BoxBounds box = sign > 0 ? prm.box : BoxBounds(-prm.box.upper, -prm.box.lower);
  const double p = prm.p;
  const double alpha = prm.alpha;
  const double beta = prm.beta;
  auto objective = [&](double w) { return scalar_prox_objective(w, x, r, eps, prm); };

  // Minimizer of the quadratic piece on [0, eps] (w = 0 for the exact |.|^p).
  double small = 0.0;
  if (eps > 0.0) small = std::min(eps, x / (1.0 + alpha * r + beta * r * p / std::pow(eps, 2.0 - p)));

  // On [max(u0, eps), x] the power piece is convex and its derivative increasing.
  auto dphi = [&](double w) {
    const double pw = beta == 0.0 ? 0.0 : beta * p * std::pow(w, p - 1.0);
    return (w - x) / r + alpha * w + pw;
  };
  auto d2phi = [&](double w) {
    const double pw = beta == 0.0 ? 0.0 : beta * p * (p - 1.0) * std::pow(w, p - 2.0);
    return 1.0 / r + alpha + pw;
  };
  std::optional<double> large;
  const double lo = std::max(p < 1.0 ? inflection_threshold(r, prm) : 0.0, eps);
  if (x > lo && (lo > 0.0 ? dphi(lo) < 0.0 : true)) {
    double a = lo, b = x, w = x;
    bool converged = false;
    for (int it = 0; it < opt.max_iter; ++it) {
      const double g = dphi(w);
      if (g == 0.0) {
        converged = true;
        break;
      }
      if (g > 0.0) b = w;
      else a = w;
      double next = w - g / d2phi(w);
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      const double step = std::abs(next - w);
      w = next;
      if (step <= opt.step_tol || b - a <= opt.step_tol) {
        converged = true;
        break;
      }
    }
    if (!converged) throw ProxFailure("lptr: scalar prox Newton iteration cap exceeded", sign * small, sign * w);
    large = w;
  }

  double best = box.clamp(small);
  double best_val = objective(best);
  auto consider = [&](double w) {
    const double val = objective(w);
    const double tie = opt.tie_tol * std::max(1.0, std::abs(best_val));
    if (val < best_val - tie || (std::abs(val - best_val) <= tie && std::abs(w) < std::abs(best))) {
      best = w;
      best_val = val;
    }
  };
  if (large) consider(box.clamp(*large));
  if (std::isfinite(box.lower)) consider(box.lower);
  if (std::isfinite(box.upper)) consider(box.upper);
  return sign * best;
}

/// Pointwise prox of r * phi_eps for L2 controls.
inline GridFunction prox_smoothed(const GridFunction& v, double r, double eps, const RegularizerParams& prm,
                                  EvalTally* tally = nullptr) {
  LPTR_REQUIRE(v.space == Space::L2, "nonconvex prox is only separable in L2");
  Vector w(v.size());
  for (int i = 0; i < v.size(); ++i) w[i] = prox_smoothed_scalar(v[i], r, eps, prm);
  if (tally != nullptr) ++tally->prox_lp;
  return v.with_values(std::move(w));
}

// ---------------------------------------------------------------------------

/// Quadrature measure of {|u| <= tol}.
inline double sparsity_measure(const GridFunction& u, double tol) {
  LPTR_REQUIRE(tol >= 0.0, "sparsity tolerance must be nonnegative");
  const auto count = (u.values.array().abs() <= tol).count();
  return u.grid.cell_area() * static_cast<double>(count);
}

inline double default_sparsity_tol(const BoxBounds& box) {
  const double b = std::isfinite(box.upper) ? std::abs(box.upper) : 1.0;
  return 1e-8 * std::max(1.0, b);
}

}  // namespace lptr
