#pragma once

// Smoothed proximal trust-region method for f + phi with L^p regularization:
// GCP plus optional step improvement, ratio test on m_k or m_k^eps, radius
// update, and an eps_k schedule advanced on accepted steps.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lptr/errors.hpp"
#include "lptr/gcp.hpp"
#include "lptr/grid.hpp"
#include "lptr/regularizer.hpp"
#include "lptr/report.hpp"
#include "lptr/smooth_model.hpp"
#include "lptr/subsolvers.hpp"

namespace lptr {

/// eps_k as a function of an iteration index k, bounded below by a floor.
struct EpsSchedule {
  std::function<double(std::int64_t)> fn;
  double floor = 1e-130;

  double operator()(std::int64_t k) const {
    LPTR_REQUIRE(k >= 0, "schedule index must be nonnegative");
    return std::max(floor, fn(k));
  }

  /// eps0 * 10^-k / k!
  static EpsSchedule factorial(double eps0, double floor = 1e-130) {
    return {[eps0](std::int64_t k) {
              const double kd = static_cast<double>(k);
              const double lg = std::log10(eps0) - kd - std::lgamma(kd + 1.0) / std::log(10.0);
              return lg < -300.0 ? 0.0 : eps0 * std::pow(10.0, -kd) / std::tgamma(kd + 1.0);
            },
            floor};
  }

  /// eps0 * ratio^k
  static EpsSchedule geometric(double eps0, double ratio, double floor = 1e-130) {
    return {[eps0, ratio](std::int64_t k) { return eps0 * std::pow(ratio, static_cast<double>(k)); }, floor};
  }

  static EpsSchedule constant(double eps) {
    return {[eps](std::int64_t) { return eps; }, eps};
  }

  /// Default for the trust-region methods: factorial decay from 0.1 for
  /// moderate p, powers of ten for p in [0.3, 0.5), and the floor itself for
  /// small p, where eps^p would otherwise dominate psi_eps.
  static EpsSchedule for_exponent(double p) {
    if (p >= 0.5) return factorial(0.1);
    if (p >= 0.3) return geometric(1.0, 0.1);
    return constant(1e-130);
  }
};

enum class Subsolver { None, Spg, MmSpg };

struct TRConfig {
  double delta0 = 10.0;
  double eta1 = 1e-4;
  double eta2 = 0.5;
  double gamma1 = 0.25;
  double gamma2 = 0.25;
  double gamma3 = 10.0;
  double tau0 = 1e-4;
  double r0 = 1.0;
  double kappa_fcd = 1e-8;
  std::int64_t max_outer = 500;
  double min_radius = 1e-14;
  ProxMode model_mode = ProxMode::Nonconvex;
  ProxMode gcp_mode = ProxMode::Convex;
  Subsolver subsolver = Subsolver::None;
  GcpParams gcp;
  SpgParams spg;
  SpgParams mm = SpgParams::mm_defaults();
  std::optional<EpsSchedule> schedule;  // defaults to EpsSchedule::for_exponent(p)

  void validate() const {
    LPTR_REQUIRE(delta0 > 0.0, "initial radius must be positive");
    LPTR_REQUIRE(0.0 < eta1 && eta1 < eta2 && eta2 < 1.0, "need 0 < eta1 < eta2 < 1");
    LPTR_REQUIRE(0.0 < gamma1 && gamma1 <= gamma2 && gamma2 < 1.0 && 1.0 <= gamma3, "radius factors out of order");
    LPTR_REQUIRE(tau0 > 0.0 && r0 > 0.0 && kappa_fcd > 0.0, "tau0, r0 and kappa_fcd must be positive");
    LPTR_REQUIRE(max_outer >= 0, "max_outer must be nonnegative");
    gcp.validate();
    spg.validate();
    mm.validate();
  }
};

/// (1/r0) ||prox_{r0 phi_k}(u - r0 g) - u||, phi_k anchored at u with eps.
inline double stationarity_h(const GridFunction& u, const GridFunction& g, double eps, double r0,
                             const RegularizerParams& reg, ShiftedLaplacianSolver* ws = nullptr) {
  const SmoothingState st(eps, u);
  return norm(prox_majorant(u - r0 * g, r0, st, reg, ws) - u) / r0;
}

/// Same with the nonconvex phi_eps; counts one L^p prox evaluation.
inline double stationarity_h_nc(const GridFunction& u, const GridFunction& g, double eps, double r0,
                                const RegularizerParams& reg, EvalTally* tally = nullptr) {
  if (u.space != Space::L2) throw UnsupportedConfiguration("lptr: h_nc needs the separable L2 prox");
  return norm(prox_smoothed(u - r0 * g, r0, eps, reg, tally) - u) / r0;
}

struct IterationRecord {
  std::int64_t iter = 0;
  bool accepted = false;
  double rho = 0.0;
  double pred = 0.0;
  double cred = 0.0;
  double h = 0.0;
  double omega = 0.0;
  double delta = 0.0;
  double eps = 0.0;
  double merit = 0.0;  // f(u_k) + phi_{eps_k}(u_k) before the step
  double step_norm = 0.0;
  bool fcd_ok = true;
};

struct TRState {
  GridFunction u;
  double f_u = 0.0;
  GridFunction g;
  double delta = 10.0;
  double eps = 0.0;
  std::int64_t k = 0;         // iterations performed
  std::int64_t accepted = 0;  // accepted steps, drives the eps schedule
  double h = 0.0;
  double h0 = 0.0;
  double t_prev = 1.0;
  double last_step = 0.0;
  std::vector<IterationRecord> history;
  EvalTally tally;
};

struct SolveResult {
  GridFunction u;
  ReportRow row;
  bool converged = false;
  std::string stop_reason;
  double h0 = 0.0;
  std::vector<IterationRecord> history;
};

struct StepOutcome {
  bool accepted = false;
  double rho = 0.0;
};

/// Fresh state at u0 with eps_0 = schedule(0) and the initial stationarity h_0.
inline TRState tr_init(SmoothObjective& f, const GridFunction& u0, const RegularizerParams& reg, const TRConfig& cfg,
                       const EpsSchedule& schedule, ShiftedLaplacianSolver* ws = nullptr) {
  LPTR_REQUIRE(within_box(u0, reg.box), "starting point must be feasible");
  TRState s;
  s.u = u0;
  s.f_u = f.value(u0);
  s.g = f.gradient(u0);
  s.delta = cfg.delta0;
  s.eps = schedule(0);
  s.t_prev = cfg.gcp.t0;
  s.h = stationarity_h(s.u, s.g, s.eps, cfg.r0, reg, ws);
  s.h0 = s.h;
  return s;
}

/// One iteration: model, GCP, optional improvement, ratio test, radius update.
inline StepOutcome tr_step(TRState& s, SmoothObjective& f, const RegularizerParams& reg, const TRConfig& cfg,
                           const EpsSchedule& schedule, ShiftedLaplacianSolver* ws = nullptr) {
  const SmoothingState st(s.eps, s.u);
  const StepContext ctx{reg, st, &s.tally, ws};
  QuadraticModel m;
  m.anchor = s.u;
  m.g = s.g;
  m.hess = [&f, u = s.u](const GridFunction& v) { return f.hess_vec(u, v); };

  IterationRecord rec;
  rec.iter = s.k;
  rec.h = s.h;
  rec.delta = s.delta;
  rec.eps = s.eps;
  rec.merit = s.f_u + ctx.phi(s.u, ProxMode::Nonconvex);

  const GcpResult gcp = gcp_search(m, s.delta, s.t_prev, cfg.gcp, cfg.gcp_mode, ctx);
  TrialStep trial = gcp.trial;
  if (cfg.subsolver == Subsolver::Spg) trial = spg_nonconvex(m, trial, s.delta, cfg.spg, ctx, cfg.gcp.nu1);
  else if (cfg.subsolver == Subsolver::MmSpg) trial = mm_spg(m, trial, s.delta, cfg.mm, ctx, cfg.gcp.nu1);

  const bool moved = !trial.s.values.isZero(0.0);
  const double phi_u = ctx.phi(s.u, cfg.model_mode);
  double pred = 0.0;
  if (moved) pred = -(model_step_value(m, trial.s, trial.bs) + ctx.phi(trial.u, cfg.model_mode) - phi_u);
  rec.pred = pred;
  rec.step_norm = norm(trial.s);
  // Curvature along the trial step, from the product already at hand.
  rec.omega = moved ? std::abs(inner(trial.s, trial.bs)) / inner(trial.s, trial.s) : 0.0;

  StepOutcome out;
  double f_trial = s.f_u;
  if (moved && pred > 0.0) {
    f_trial = f.value(trial.u);
    rec.cred = (s.f_u + phi_u) - (f_trial + ctx.phi(trial.u, cfg.model_mode));
    out.rho = rec.cred / pred;
  } else {
    // No model decrease: rho is undefined and the step is rejected unevaluated.
    out.rho = -kInf;
  }
  rec.rho = out.rho;
  s.t_prev = gcp.t_A;

  if (out.rho < cfg.eta1) {
    s.delta *= cfg.gamma1;
  } else {
    out.accepted = true;
    if (out.rho >= cfg.eta2) s.delta *= cfg.gamma3;
    const double bound = cfg.kappa_fcd * s.h * std::min(s.h / (1.0 + rec.omega), rec.delta);
    rec.fcd_ok = pred >= bound;
    s.last_step = rec.step_norm;
    s.u = trial.u;
    s.f_u = f_trial;
    s.g = f.gradient(s.u);
    ++s.accepted;
    s.eps = std::min(s.eps, schedule(s.accepted));
    s.h = stationarity_h(s.u, s.g, s.eps, cfg.r0, reg, ws);
  }
  rec.accepted = out.accepted;
  s.history.push_back(rec);
  ++s.k;
  return out;
}

/// Runs the trust-region method from u0 (zero by default) until
/// h_k < tau0 h_0 or max_outer iterations.
inline SolveResult tr_solve(SmoothObjective& f, const RegularizerParams& reg, const TRConfig& cfg,
                            const std::string& alg, std::optional<GridFunction> u0 = std::nullopt) {
  cfg.validate();
  reg.validate(f.space());
  if (f.space() == Space::H01 && (cfg.gcp_mode == ProxMode::Nonconvex || cfg.subsolver == Subsolver::Spg))
    throw UnsupportedConfiguration("lptr: nonconvex prox steps need L2 controls");
  const auto start = std::chrono::steady_clock::now();
  f.reset_counters();
  const EpsSchedule schedule = cfg.schedule.value_or(EpsSchedule::for_exponent(reg.p));
  std::optional<ShiftedLaplacianSolver> ws;
  if (f.space() == Space::H01) ws.emplace(f.grid());
  ShiftedLaplacianSolver* wsp = ws ? &*ws : nullptr;

  TRState s = tr_init(f, u0.value_or(GridFunction(f.grid(), f.space())), reg, cfg, schedule, wsp);
  SolveResult res;
  res.h0 = s.h0;
  for (;;) {
    if (s.h < cfg.tau0 * s.h0 || s.h == 0.0) {
      res.converged = true;
      res.stop_reason = "stationary";
      break;
    }
    if (s.k >= cfg.max_outer) {
      res.stop_reason = "iteration limit";
      break;
    }
    if (s.delta < cfg.min_radius) {
      res.stop_reason = "radius collapsed";
      break;
    }
    try {
      tr_step(s, f, reg, cfg, schedule, wsp);
    } catch (const DegenerateStep&) {
      res.converged = true;
      res.stop_reason = "degenerate Cauchy step";
      break;
    }
  }

  res.u = s.u;
  res.history = std::move(s.history);
  ReportRow& row = res.row;
  row.alg = alg;
  row.F = s.f_u + phi_value(s.u, reg, ExactPhi{});
  row.iter = s.k;
  row.eps_K = s.eps;
  row.dF = s.last_step;
  row.h_K = s.h;
  if (f.space() == Space::L2) row.h_K_nc = stationarity_h_nc(s.u, s.g, s.eps, cfg.r0, reg, &s.tally);
  row.sparsity = sparsity_measure(s.u, default_sparsity_tol(reg.box));
  row.feval = f.value_evals();
  row.hess = f.hess_evals();
  row.prox_lp = s.tally.prox_lp;
  row.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace lptr
