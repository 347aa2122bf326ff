#pragma once

// Randomized property suites shared by the unit tests (small counts) and the
// acceptance binary (full counts). Each suite reports the number of checked
// instances, the number of violations and the worst margin seen.

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "lptr/lptr.hpp"
#include "oracles.hpp"

namespace props {

using namespace lptr;

struct SuiteResult {
  long checked = 0;
  long failures = 0;
  double worst = 0.0;  // largest violation (positive means violated)
  std::string first_failure;

  bool pass() const { return failures == 0 && checked > 0; }

  void record(double violation, const std::string& what) {
    ++checked;
    worst = std::max(worst, violation);
    if (violation > 0.0) {
      if (failures == 0) first_failure = what;
      ++failures;
    }
  }
};

struct Sampler {
  std::mt19937_64 rng;
  explicit Sampler(std::uint64_t seed) : rng(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  double log_uniform(double a, double b) { return std::exp(uniform(std::log(a), std::log(b))); }
  bool coin(double prob = 0.5) { return uniform(0.0, 1.0) < prob; }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }

  /// p in (0,1), alpha sometimes zero, beta in [1e-3, 1], optional symmetric box.
  RegularizerParams regularizer(bool allow_box = true) {
    RegularizerParams prm;
    prm.p = uniform(0.1, 0.95);
    prm.alpha = coin(0.3) ? 0.0 : log_uniform(1e-4, 1.0);
    prm.beta = log_uniform(1e-3, 1.0);
    if (allow_box && coin(0.4)) prm.box = BoxBounds::symmetric(uniform(0.5, 4.0));
    return prm;
  }

  double eps(double zero_prob = 0.0) { return coin(zero_prob) ? 0.0 : log_uniform(1e-6, 1e-1); }

  GridFunction field(Grid g, Space s, double lo, double hi) {
    return {g, s, oracle::random_vector(rng, g.size(), lo, hi)};
  }

  /// Random feasible point; a fraction of the entries is exactly zero.
  GridFunction feasible(Grid g, const RegularizerParams& prm, Space s = Space::L2) {
    GridFunction u = field(g, s, -3.0, 3.0);
    for (int i = 0; i < u.size(); ++i)
      if (coin(0.2)) u[i] = 0.0;
    return project_box(u, prm.box);
  }
};

inline std::string describe(const RegularizerParams& prm, double r, double eps) {
  std::ostringstream os;
  os.precision(17);
  os << "p=" << prm.p << " alpha=" << prm.alpha << " beta=" << prm.beta << " box=[" << prm.box.lower << ","
     << prm.box.upper << "] r=" << r << " eps=" << eps;
  return os.str();
}

// ---------------------------------------------------------------------------

/// (w - u, v - w) + 1/2 ||w - v||^2 >= r phi(w) - r phi(v) for w = prox_{r phi}(u),
/// with phi = phi_eps and phi = phi_k, in L2 and (phi_k only) in H01.
inline SuiteResult prox_inequality_suite(int instances, std::uint64_t seed, double slack = 1e-10) {
  Sampler S(seed);
  SuiteResult out;
  for (int k = 0; k < instances; ++k) {
    const bool scalar = k % 2 == 0;
    const bool h01 = !scalar && k % 6 == 1;
    const Space space = h01 ? Space::H01 : Space::L2;
    RegularizerParams prm = S.regularizer(!h01);
    if (h01 && prm.alpha == 0.0) prm.alpha = 0.1;
    const Grid g(scalar ? 2 : S.integer(2, 6));
    const double r = S.log_uniform(1e-2, 10.0);
    const double eps = h01 ? S.eps() : S.eps(0.2);
    GridFunction u = S.field(g, space, -4.0, 4.0);
    if (scalar) u.values.setConstant(u[0]);
    const SmoothingState st(eps > 0.0 ? eps : 1e-3, S.feasible(g, prm, space));

    auto check = [&](const GridFunction& w, auto&& phi, const char* which) {
      for (int j = 0; j < 5; ++j) {
        GridFunction v = S.feasible(g, prm, space);
        if (scalar) v.values.setConstant(v[0]);
        if (j == 0) v = GridFunction(g, space);
        const double lhs = inner(w - u, v - w) + 0.5 * inner(w - v, w - v);
        const double rhs = r * phi(w) - r * phi(v);
        out.record(rhs - lhs - slack, std::string(which) + " " + describe(prm, r, eps));
      }
    };
    if (!h01) {
      const GridFunction w = prox_smoothed(u, r, eps, prm);
      check(w, [&](const GridFunction& x) { return phi_value(x, prm, SmoothedPhi{eps}); }, "phi_eps");
    }
    const GridFunction wk = prox_majorant(u, r, st, prm);
    check(wk, [&](const GridFunction& x) { return phi_value(x, prm, MajorantPhi{std::cref(st)}); }, "phi_k");
  }
  return out;
}

/// r -> ||prox_{r phi}(u + r d) - u|| is nondecreasing on increasing ladders.
inline SuiteResult phi_monotone_suite(int pairs, int ladder, std::uint64_t seed) {
  Sampler S(seed);
  SuiteResult out;
  for (int k = 0; k < pairs; ++k) {
    const RegularizerParams prm = S.regularizer();
    const Grid g(S.integer(2, 5));
    const double eps = S.eps(0.2);
    const GridFunction u = S.feasible(g, prm);
    const GridFunction d = S.field(g, Space::L2, -5.0, 5.0);
    const SmoothingState st(std::max(eps, 1e-4), S.feasible(g, prm));
    const double r_lo = S.log_uniform(1e-3, 1e-1), r_hi = S.log_uniform(1.0, 20.0);
    for (int mode = 0; mode < 2; ++mode) {
      double prev = 0.0;
      for (int i = 0; i < ladder; ++i) {
        const double r = r_lo * std::pow(r_hi / r_lo, i / (ladder - 1.0));
        const GridFunction v = u + r * d;
        const GridFunction w = mode == 0 ? prox_smoothed(v, r, eps, prm) : prox_majorant(v, r, st, prm);
        const double phi = norm(w - u);
        if (i > 0)
          out.record(prev - phi - 1e-12 * std::max(1.0, prev),
                     std::string(mode == 0 ? "phi_eps " : "phi_k ") + describe(prm, r, eps));
        prev = phi;
      }
    }
  }
  return out;
}

/// j_k(u) >= j_eps(u) >= j_eps'(u) for eps' <= eps, and j_k(u_k) = j_eps(u_k).
struct MajorizationResult {
  SuiteResult chain;
  SuiteResult tangency;
};

inline MajorizationResult majorization_suite(int instances, std::uint64_t seed) {
  Sampler S(seed);
  MajorizationResult out;
  for (int k = 0; k < instances; ++k) {
    const double p = S.uniform(0.05, 1.0);
    const Grid g(S.integer(2, 8));
    const double eps = S.log_uniform(1e-8, 1.0);
    const double eps2 = S.coin(0.1) ? 0.0 : eps * S.uniform(0.0, 1.0);
    GridFunction anchor = S.field(g, Space::L2, -3.0, 3.0);
    for (int i = 0; i < anchor.size(); ++i)
      if (S.coin(0.2)) anchor[i] = S.uniform(-eps, eps);
    const SmoothingState st(eps, anchor);
    const GridFunction u = S.field(g, Space::L2, -3.0, 3.0);
    const double jk = j_majorant(u, st, p), je = j_eps(u, eps, p), je2 = j_eps(u, eps2, p);
    std::ostringstream what;
    what << "p=" << p << " eps=" << eps << " eps'=" << eps2;
    const double scale = 1e-13 * std::max(1.0, std::abs(jk));
    out.chain.record(je - jk - scale, "j_k >= j_eps " + what.str());
    out.chain.record(je2 - je - scale, "j_eps >= j_eps' " + what.str());
    out.tangency.record(std::abs(j_majorant(anchor, st, p) - j_eps(anchor, eps, p)) - 1e-12, what.str());
  }
  return out;
}

/// |w| <= eps or |w| >= u0(r) - 1e-10 for every scalar prox output (no box).
inline SuiteResult sparsity_threshold_suite(int instances, std::uint64_t seed) {
  Sampler S(seed);
  SuiteResult out;
  for (int k = 0; k < instances; ++k) {
    const RegularizerParams prm = S.regularizer(false);
    const double r = S.log_uniform(1e-2, 10.0);
    const double eps = S.eps(0.25);
    const double v = S.uniform(-4.0, 4.0);
    const double w = std::abs(prox_smoothed_scalar(v, r, eps, prm));
    const double u0 = inflection_threshold(r, prm);
    const double violation = std::min(w - eps, (u0 - 1e-10) - w);
    out.record(violation, describe(prm, r, eps) + " v=" + std::to_string(v));
  }
  return out;
}

/// |prox_{r phi_k}(u_k - r g) - u_k| <= (4 + 2/p) |prox_{r phi_eps}(u_k - r g) - u_k|
/// for scalar unconstrained instances, phi_k anchored at u_k.
inline SuiteResult prox_distance_suite(int instances, std::uint64_t seed) {
  Sampler S(seed);
  SuiteResult out;
  const Grid g(2);
  for (int k = 0; k < instances; ++k) {
    const RegularizerParams prm = S.regularizer(false);
    const double r = S.log_uniform(1e-2, 10.0);
    const double eps = S.eps();
    double uk = S.uniform(-3.0, 3.0);
    if (S.coin(0.2)) uk = S.uniform(-2.0 * eps, 2.0 * eps);
    const double gk = S.uniform(-5.0, 5.0);
    const double z = uk - r * gk;
    const double p_eps = prox_smoothed_scalar(z, r, eps, prm);
    const SmoothingState st(eps, GridFunction::constant(g, Space::L2, uk));
    const double p_k = prox_majorant_l2(GridFunction::constant(g, Space::L2, z), r, st, prm)[0];
    const double c = 4.0 + 2.0 / prm.p;
    const double lhs = std::abs(p_k - uk), rhs = c * std::abs(p_eps - uk);
    out.record(lhs - rhs - 1e-12 * std::max(1.0, std::abs(uk)),
               describe(prm, r, eps) + " u_k=" + std::to_string(uk) + " g=" + std::to_string(gk));
  }
  return out;
}

/// Objective value of prox_smoothed_scalar against a grid-search oracle on
/// [-|v|, |v|] intersected with the box.
inline SuiteResult scalar_oracle_suite(int instances, std::uint64_t seed, int points = 1000001) {
  Sampler S(seed);
  SuiteResult out;
  for (int k = 0; k < instances; ++k) {
    const RegularizerParams prm = S.regularizer();
    const double r = S.log_uniform(1e-2, 10.0);
    const double eps = S.eps(0.2);
    const double v = S.uniform(-4.0, 4.0);
    const double w = prox_smoothed_scalar(v, r, eps, prm);
    const double lo = std::max(prm.box.lower, -std::abs(v)), hi = std::min(prm.box.upper, std::abs(v));
    const auto best = oracle::grid_search_min(v, r, eps, prm.p, prm.alpha, prm.beta, lo, hi, points);
    const double ours = oracle::prox_objective(w, v, r, eps, prm.p, prm.alpha, prm.beta);
    out.record(std::abs(ours - best.value) - 1e-10,
               describe(prm, r, eps) + " v=" + std::to_string(v) + " w=" + std::to_string(w) +
                   " oracle_w=" + std::to_string(best.w));
  }
  return out;
}

/// Q(r) nonincreasing in r and Q(r) <= -1/2 Phi(r) Psi(r) = -Phi(r)^2 / (2r),
/// nonconvex (phi_eps) and convex (phi_k) modes.
struct QResult {
  SuiteResult monotone;
  SuiteResult bound;
};

inline QResult q_suite(int ladders, int ladder, std::uint64_t seed) {
  Sampler S(seed);
  QResult out;
  for (int k = 0; k < ladders; ++k) {
    const RegularizerParams prm = S.regularizer();
    const Grid g(S.integer(2, 5));
    const double eps = S.eps();
    const GridFunction uk = S.feasible(g, prm);
    const GridFunction gk = S.field(g, Space::L2, -5.0, 5.0);
    const SmoothingState st(eps, uk);
    const StepContext ctx{prm, st};
    const double r_lo = S.log_uniform(1e-3, 1e-1), r_hi = S.log_uniform(1.0, 20.0);
    for (ProxMode mode : {ProxMode::Nonconvex, ProxMode::Convex}) {
      double prev = 0.0;
      for (int i = 0; i < ladder; ++i) {
        const double r = r_lo * std::pow(r_hi / r_lo, i / (ladder - 1.0));
        const GridFunction p = prox_path(mode, r, uk, gk, ctx);
        const double Q = q_value_of(mode, p, uk, gk, ctx);
        const double Phi = norm(p);
        const std::string what = std::string(to_string(mode)) + " " + describe(prm, r, eps);
        const double tol = 1e-12 * std::max(1.0, std::abs(Q));
        out.bound.record(Q + 0.5 * Phi * Phi / r - tol, what);
        if (i > 0) out.monotone.record(Q - prev - tol, what);
        prev = Q;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Driver invariants of a finished trust-region run.
struct DriverCheck {
  bool fcd = true;
  bool monotone = true;
  bool termination = true;
  std::string note;

  bool pass() const { return fcd && monotone && termination; }
};

inline DriverCheck check_driver_run(const SolveResult& res, double tau0) {
  DriverCheck out;
  double prev = kInf;
  for (const auto& rec : res.history) {
    if (rec.accepted && !rec.fcd_ok) {
      out.fcd = false;
      out.note += " FCD fails at iteration " + std::to_string(rec.iter) + ";";
    }
    if (rec.merit > prev + 1e-12 * std::max(1.0, std::abs(prev))) {
      out.monotone = false;
      out.note += " merit increases at iteration " + std::to_string(rec.iter) + ";";
    }
    prev = rec.merit;
  }
  if (!res.history.empty() && res.history.back().accepted && !(res.history.back().cred > 0.0)) {
    out.monotone = false;
    out.note += " last accepted step does not decrease;";
  }
  if (res.converged && !(res.row.h_K < tau0 * res.h0 || res.row.h_K == 0.0)) {
    out.termination = false;
    out.note += " reported success with h_K >= tau0 h0 (" + res.stop_reason + ");";
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Adjoint gradient against central differences and Hessian symmetry for one
/// objective at a few random points.
struct DerivativeCheck {
  double grad_rel = 0.0;
  double sym_rel = 0.0;
  double hess_fd_rel = 0.0;
};

inline DerivativeCheck check_derivatives(TrackingObjective& f, std::uint64_t seed, int points = 3) {
  Sampler S(seed);
  DerivativeCheck out;
  const Grid g = f.grid();
  const double b = std::isfinite(f.spec().reg.box.upper) ? f.spec().reg.box.upper : 5.0;
  for (int k = 0; k < points; ++k) {
    const GridFunction u = S.field(g, f.space(), -0.5 * b, 0.5 * b);
    const GridFunction d = S.field(g, f.space(), -1.0, 1.0);
    // Fourth-order central differences.
    const double step = 1e-3 * (1.0 + norm(u.in_space(Space::L2)));
    auto diff = [&](double t) { return f.value(u + t * d) - f.value(u - t * d); };
    const double fd = (8.0 * diff(step) - diff(2.0 * step)) / (12.0 * step);
    const GridFunction grad = f.gradient(u);
    const double an = inner(grad, d);
    out.grad_rel = std::max(out.grad_rel, std::abs(fd - an) / std::max(std::abs(an), 1e-12));

    const GridFunction s = S.field(g, f.space(), -1.0, 1.0);
    const GridFunction t = S.field(g, f.space(), -1.0, 1.0);
    const double bst = inner(f.hess_vec(u, s), t), sbt = inner(s, f.hess_vec(u, t));
    out.sym_rel = std::max(out.sym_rel, std::abs(bst - sbt) / std::max({std::abs(bst), std::abs(sbt), 1e-12}));

    const GridFunction hs = f.hess_vec(u, s);
    auto gdiff = [&](double t) { return f.gradient(u + t * s) - f.gradient(u - t * s); };
    const GridFunction fd_hs = (1.0 / (12.0 * step)) * (8.0 * gdiff(step) - gdiff(2.0 * step));
    const double fd_h = norm(fd_hs - hs) / std::max(norm(hs), 1e-12);
    out.hess_fd_rel = std::max(out.hess_fd_rel, fd_h);
  }
  return out;
}

}  // namespace props
