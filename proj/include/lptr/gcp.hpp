#pragma once

// Generalized Cauchy point search along the proximal path
//   p(t) = prox_{t phi}(u_k - t g_k) - u_k
// with phi the convex majorant phi_k (convex mode) or the smoothed phi_eps
// (nonconvex mode).

#include <cmath>
#include <cstdint>
#include <optional>

#include "lptr/errors.hpp"
#include "lptr/grid.hpp"
#include "lptr/regularizer.hpp"
#include "lptr/smooth_model.hpp"

namespace lptr {

enum class ProxMode { Convex, Nonconvex };

inline const char* to_string(ProxMode m) { return m == ProxMode::Convex ? "convex" : "nonconvex"; }

/// Everything a step computation needs besides the model: regularizer,
/// smoothing state (eps_k and anchor u_k), prox tally and H01 workspace.
struct StepContext {
  const RegularizerParams& reg;
  const SmoothingState& state;
  EvalTally* tally = nullptr;
  ShiftedLaplacianSolver* workspace = nullptr;

  /// phi_k (convex) or phi_eps (nonconvex).
  double phi(const GridFunction& u, ProxMode mode) const {
    if (mode == ProxMode::Convex) return phi_value(u, reg, MajorantPhi{std::cref(state)});
    return phi_value(u, reg, SmoothedPhi{state.eps});
  }

  GridFunction prox(const GridFunction& v, double r, ProxMode mode) const {
    if (mode == ProxMode::Convex) return prox_majorant(v, r, state, reg, workspace);
    if (v.space != Space::L2)
      throw UnsupportedConfiguration("lptr: nonconvex prox is only available for L2 controls");
    return prox_smoothed(v, r, state.eps, reg, tally);
  }
};

/// A trial point together with its step from u_k and the product B_k s.
struct TrialStep {
  GridFunction u;
  GridFunction s;
  GridFunction bs;
};

struct GcpParams {
  double mu1 = 1e-4;
  double mu2 = 0.9;
  double nu1 = 1.0;
  double nu2 = 0.5;
  double nu3 = 1e-3;
  double nu4 = 0.5;
  double beta_dec = 0.5;
  double beta_inc = 10.0;
  int M_inc = 2;
  double t0 = 1.0;
  int max_backtracks = 200;

  void validate() const {
    LPTR_REQUIRE(0.0 < mu1 && mu1 < mu2 && mu2 < 1.0, "need 0 < mu1 < mu2 < 1");
    LPTR_REQUIRE(0.0 < nu4 && nu4 < nu1, "need 0 < nu4 < nu1");
    LPTR_REQUIRE(0.0 < nu2 && nu2 < 1.0 && nu3 > 0.0, "need 0 < nu2 < 1 and nu3 > 0");
    LPTR_REQUIRE(0.0 < beta_dec && beta_dec < 1.0 && beta_inc > 1.0, "need beta_dec < 1 < beta_inc");
    LPTR_REQUIRE(M_inc >= 1 && t0 > 0.0, "need M_inc >= 1 and t0 > 0");
  }
};

struct GcpResult {
  double t_A = 0.0;
  std::optional<double> t_B;  // first failing step length, if any was tried
  TrialStep trial;
  double Q = 0.0;
  double model_change = 0.0;  // m(u_trial) - m(u_k)
  ProxMode mode = ProxMode::Convex;
  int backtracks = 0;
  int expansions = 0;
};

inline GridFunction prox_path(ProxMode mode, double t, const GridFunction& u_k, const GridFunction& g_k,
                              const StepContext& ctx) {
  LPTR_REQUIRE(t > 0.0, "step length must be positive");
  return ctx.prox(u_k - t * g_k, t, mode) - u_k;
}

/// Q(t) = <g_k, p> + phi(u_k + p) - phi(u_k) for a displacement p.
inline double q_value_of(ProxMode mode, const GridFunction& p, const GridFunction& u_k, const GridFunction& g_k,
                         const StepContext& ctx) {
  if (p.values.isZero(0.0)) return 0.0;
  return inner(g_k, p) + ctx.phi(u_k + p, mode) - ctx.phi(u_k, mode);
}

inline double q_value(ProxMode mode, double t, const GridFunction& u_k, const GridFunction& g_k,
                      const StepContext& ctx) {
  return q_value_of(mode, prox_path(mode, t, u_k, g_k, ctx), u_k, g_k, ctx);
}

struct GcpConditions {
  bool desc = false;
  bool radius = false;
  bool both() const { return desc && radius; }
};

namespace detail {

struct GcpProbe {
  GcpConditions cond;
  GridFunction p;
  GridFunction bp;
  double Q = 0.0;
  double model_change = 0.0;
};

// The radius test is cheap and checked first; the Hessian product is skipped
// when it fails.
inline GcpProbe gcp_probe(const QuadraticModel& m, double t, double delta, const GcpParams& prm, ProxMode mode,
                          const StepContext& ctx) {
  GcpProbe out;
  out.p = prox_path(mode, t, m.anchor, m.g, ctx);
  out.cond.radius = norm(out.p) <= prm.nu1 * delta;
  if (!out.cond.radius) return out;
  if (out.p.values.isZero(0.0)) {
    out.bp = out.p;
    out.cond.desc = true;
    return out;
  }
  out.Q = q_value_of(mode, out.p, m.anchor, m.g, ctx);
  out.bp = m.apply(out.p);
  out.model_change = out.Q + 0.5 * inner(out.bp, out.p);
  out.cond.desc = out.model_change <= prm.mu1 * out.Q;
  return out;
}

}  // namespace detail

inline GcpConditions gcp_conditions(const QuadraticModel& m, double t, double delta, const GcpParams& prm,
                                    ProxMode mode, const StepContext& ctx) {
  const auto probe = detail::gcp_probe(m, t, delta, prm, mode, ctx);
  GcpConditions out = probe.cond;
  if (!out.radius) {
    // Report the descent condition as well when asked directly.
    const double Q = q_value_of(mode, probe.p, m.anchor, m.g, ctx);
    out.desc = Q + 0.5 * inner(m.apply(probe.p), probe.p) <= prm.mu1 * Q;
  }
  return out;
}

/// Bidirectional search on t starting from t_prev: expand by beta_inc while
/// both conditions hold (at most M_k^inc times), or backtrack by beta_dec until
/// they do.
inline GcpResult gcp_search(const QuadraticModel& m, double delta, double t_prev, const GcpParams& prm,
                            ProxMode mode, const StepContext& ctx) {
  LPTR_REQUIRE(t_prev > 0.0, "previous step length must be positive");
  LPTR_REQUIRE(delta > 0.0, "trust-region radius must be positive");
  GcpResult res;
  res.mode = mode;
  double t = t_prev;
  auto probe = detail::gcp_probe(m, t, delta, prm, mode, ctx);
  if (probe.cond.both()) {
    const double ratio = std::log(prm.t0 / t_prev) / std::log(prm.beta_inc);
    const int m_inc = std::max(prm.M_inc, static_cast<int>(std::ceil(ratio)));
    for (int l = 0; l < m_inc; ++l) {
      const double t_next = t * prm.beta_inc;
      auto next = detail::gcp_probe(m, t_next, delta, prm, mode, ctx);
      if (!next.cond.both()) {
        res.t_B = t_next;
        break;
      }
      t = t_next;
      probe = std::move(next);
      ++res.expansions;
    }
  } else {
    bool found = false;
    for (int l = 0; l < prm.max_backtracks; ++l) {
      res.t_B = t;
      t *= prm.beta_dec;
      probe = detail::gcp_probe(m, t, delta, prm, mode, ctx);
      ++res.backtracks;
      if (probe.cond.both()) {
        found = true;
        break;
      }
    }
    if (!found) throw DegenerateStep("lptr: Cauchy point backtracking exhausted");
  }
  res.t_A = t;
  res.Q = probe.Q;
  res.model_change = probe.model_change;
  res.trial = TrialStep{m.anchor + probe.p, probe.p, probe.bp};
  return res;
}

}  // namespace lptr
