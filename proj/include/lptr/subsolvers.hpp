#pragma once

// Step improvement after the Cauchy point: a nonconvex spectral proximal
// gradient method on m_k^eps and the majorize-minimize variant MM-SPG.

#include <algorithm>
#include <cmath>
#include <functional>

#include "lptr/errors.hpp"
#include "lptr/gcp.hpp"
#include "lptr/grid.hpp"
#include "lptr/regularizer.hpp"
#include "lptr/smooth_model.hpp"

namespace lptr {

struct SpgParams {
  double lambda_min = 1e-8;
  double lambda_max = 1e8;
  int max_iter = 10;
  double eps1 = 1e-6;
  double eps2 = 1e-6;
  double mu1 = 1e-4;
  double beta1 = 0.5;
  int max_backtracks = 60;

  void validate() const {
    LPTR_REQUIRE(0.0 < lambda_min && lambda_min < lambda_max, "need 0 < lambda_min < lambda_max");
    LPTR_REQUIRE(max_iter >= 0 && max_backtracks >= 1, "iteration caps must be nonnegative");
    for (double v : {eps1, eps2, mu1, beta1}) LPTR_REQUIRE(0.0 < v && v < 1.0, "SPG constants must lie in (0,1)");
  }

  static SpgParams mm_defaults() {
    SpgParams p;
    p.max_iter = 50;
    return p;
  }
};

/// Largest t in (0, 1] with f(t) <= 0 for a nondecreasing f, up to a
/// relative bracket width rel_width. Bisection with secant steps; the
/// returned point always satisfies f(t) <= 0.
inline double largest_negative_t(const std::function<double(double)>& f, double rel_width = 1e-3,
                                 double t_min = 1e-12) {
  double f_hi = f(1.0);
  if (f_hi <= 0.0) return 1.0;
  double hi = 1.0;
  double lo = 0.5;
  double f_lo = f(lo);
  while (f_lo > 0.0) {
    hi = lo;
    f_hi = f_lo;
    lo *= 0.5;
    if (lo < t_min) throw NoFeasibleStep("lptr: no step length keeps the path inside the trust region");
    f_lo = f(lo);
  }
  bool bisect_next = false;
  while (hi > lo * (1.0 + rel_width)) {
    const double width = hi - lo;
    double c = 0.5 * (lo + hi);
    if (!bisect_next && std::isfinite(f_hi) && f_hi > f_lo) {
      const double secant = lo - f_lo * width / (f_hi - f_lo);
      c = std::clamp(secant, lo + 0.05 * width, hi - 0.05 * width);
    }
    const double fc = f(c);
    if (fc <= 0.0) {
      lo = c;
      f_lo = fc;
    } else {
      hi = c;
      f_hi = fc;
    }
    // Fall back to a bisection whenever a secant step shrank the bracket by
    // less than half.
    bisect_next = !bisect_next && (hi - lo) > 0.5 * width;
  }
  return lo;
}

namespace detail {

inline double bb_step(const GridFunction& s, const GridFunction& b, const GridFunction& d, const SpgParams& prm) {
  const double bs = inner(b, s);
  double lambda;
  if (bs <= 0.0) {
    const double dn = norm(d);
    lambda = dn > 0.0 ? 1.0 / dn : prm.lambda_max;
  } else {
    lambda = inner(s, s) / bs;
  }
  return std::clamp(lambda, prm.lambda_min, prm.lambda_max);
}

inline bool is_zero(const GridFunction& v) { return v.values.isZero(0.0); }

}  // namespace detail

/// Proximal gradient on m_k^eps with BB-initialized prox parameter and
/// backtracking on it. Trial points outside the ball are pulled back along
/// t -> prox_{r t phi_eps}(u_k + t (z - u_k)). Never increases m_k^eps.
inline TrialStep spg_nonconvex(const QuadraticModel& m, const TrialStep& start, double delta, const SpgParams& prm,
                               const StepContext& ctx, double ball_factor = 1.0) {
  prm.validate();
  LPTR_REQUIRE(start.u.space == Space::L2, "nonconvex SPG needs L2 controls");
  const GridFunction& u_k = m.anchor;
  const double radius = ball_factor * delta;
  TrialStep cur = start;
  double phi_cur = ctx.phi(cur.u, ProxMode::Nonconvex);
  GridFunction d = m.g + cur.bs;  // gradient of f_k at the current point
  double lambda = detail::is_zero(cur.s) ? std::clamp(1.0 / std::max(norm(d), 1e-300), prm.lambda_min, prm.lambda_max)
                                         : detail::bb_step(cur.s, cur.bs, d, prm);
  double first_disp = -1.0;

  for (int it = 0; it < prm.max_iter; ++it) {
    double r = lambda;
    bool accepted = false;
    GridFunction w, step, bstep;
    double phi_w = 0.0;
    for (int bt = 0; bt < prm.max_backtracks; ++bt, r *= prm.beta1) {
      const GridFunction z = cur.u - r * d;
      w = ctx.prox(z, r, ProxMode::Nonconvex);
      if (norm(w - u_k) > radius) {
        const GridFunction dz = z - u_k;
        auto dist = [&](double t) { return norm(ctx.prox(u_k + t * dz, r * t, ProxMode::Nonconvex) - u_k) - radius; };
        double t;
        try {
          t = largest_negative_t(dist);
        } catch (const NoFeasibleStep&) {
          continue;
        }
        w = ctx.prox(u_k + t * dz, r * t, ProxMode::Nonconvex);
      }
      step = w - cur.u;
      if (detail::is_zero(step)) break;
      bstep = m.apply(step);
      phi_w = ctx.phi(w, ProxMode::Nonconvex);
      const double change = inner(d, step) + 0.5 * inner(bstep, step) + phi_w - phi_cur;
      if (change <= -prm.mu1 * inner(step, step) / r) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    cur.u = w;
    cur.s = w - u_k;
    cur.bs = cur.bs + bstep;
    d = d + bstep;
    phi_cur = phi_w;
    lambda = detail::bb_step(step, bstep, d, prm);
    const double disp = norm(step);
    if (first_disp < 0.0) first_disp = disp;
    if (disp <= std::min(prm.eps1, prm.eps2 * first_disp)) break;
  }
  return cur;
}

/// Algorithm "MM-SPG": SPG on f_k + phi_{k,l}, where phi_{k,l} is the convex
/// majorant of phi_eps anchored at the current inner iterate, with box and
/// trust-region constraints. f_k is tracked by its exact quadratic recurrence.
inline TrialStep mm_spg(const QuadraticModel& m, const TrialStep& start, double delta, const SpgParams& prm,
                        const StepContext& ctx, double ball_factor = 1.0) {
  prm.validate();
  const GridFunction& u_k = m.anchor;
  const Space space = u_k.space;
  const double radius = ball_factor * delta;
  const RegularizerParams& reg = ctx.reg;
  const double eps = ctx.state.eps;

  TrialStep cur = start;
  double f_cur = inner(m.g, cur.s) + 0.5 * inner(cur.bs, cur.s);
  GridFunction d = m.g + cur.bs;
  GridFunction s = cur.s;
  GridFunction b = cur.bs;
  double h_first = -1.0;

  for (int l = 0; l < prm.max_iter; ++l) {
    const double lambda = detail::bb_step(s, b, d, prm);
    const SmoothingState inner_state(eps, cur.u);
    auto prox_inner = [&](const GridFunction& v, double r) {
      return prox_majorant(v, r, inner_state, reg, ctx.workspace);
    };
    auto phi_inner = [&](const GridFunction& v) { return phi_value(v, reg, MajorantPhi{std::cref(inner_state)}); };

    const GridFunction z = cur.u - lambda * d;
    GridFunction w = prox_inner(z, lambda);
    if (norm(w - u_k) > radius) {
      if (space == Space::L2) {
        const GridFunction dz = z - u_k;
        auto dist = [&](double t) { return norm(prox_inner(u_k + t * dz, lambda * t) - u_k) - radius; };
        double t;
        try {
          t = largest_negative_t(dist);
        } catch (const NoFeasibleStep&) {
          break;
        }
        w = prox_inner(u_k + t * dz, lambda * t);
      } else {
        const GridFunction off = w - u_k;
        w = u_k + (radius / norm(off)) * off;
      }
    }
    s = w - cur.u;
    const double h = norm(s) / lambda;
    if (h_first < 0.0) h_first = h;
    if (!(h > std::min(prm.eps1, prm.eps2 * h_first))) break;

    b = m.apply(s);
    const double ds = inner(d, s);
    const double bss = inner(b, s);
    const double phi0 = phi_inner(cur.u);
    double a1 = 1.0;
    bool found = false;
    for (int i = 0; i < prm.max_backtracks; ++i, a1 *= prm.beta1) {
      const GridFunction trial = cur.u + a1 * s;
      const double phi1 = phi_inner(trial);
      const double f_next = f_cur + a1 * ds + 0.5 * a1 * a1 * bss;
      if (f_next + phi1 <= f_cur + phi0 + prm.mu1 * (a1 * ds + phi1 - phi0)) {
        found = true;
        cur.u = trial;
        f_cur = f_next;
        break;
      }
    }
    if (!found) break;
    cur.s = cur.u - u_k;
    cur.bs = cur.bs + a1 * b;
    d = d + a1 * b;
  }
  return cur;
}

}  // namespace lptr
