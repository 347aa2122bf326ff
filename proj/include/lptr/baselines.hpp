#pragma once

// Reference solvers: proximal gradient with a bidirectional step-size search
// (PG) and a majorize-minimize scheme on the smoothed problem (MM).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "lptr/errors.hpp"
#include "lptr/grid.hpp"
#include "lptr/regularizer.hpp"
#include "lptr/report.hpp"
#include "lptr/smooth_model.hpp"
#include "lptr/tr_driver.hpp"

namespace lptr {

struct PgParams {
  double eta_dec = 1e-4;
  double theta = 0.5;
  double r0 = 1.0;
  int max_expand = 2;
  int max_shrink = 60;
  std::int64_t max_iter = 2000;
  double tol = 1e-10;
  /// Smoothing used inside the prox; the exact |.|^p prox (eps = 0) by default.
  EpsSchedule schedule = EpsSchedule::constant(0.0);

  void validate() const {
    LPTR_REQUIRE(0.0 < eta_dec && eta_dec < 1.0 && 0.0 < theta && theta < 1.0, "eta_dec and theta must lie in (0,1)");
    LPTR_REQUIRE(r0 > 0.0 && tol >= 0.0 && max_iter >= 0, "invalid PG settings");
  }
};

struct MmParams {
  double r0 = 1.0;
  double lambda_min = 1e-8;
  double lambda_max = 1e8;
  int inner_max_iter = 20;
  double inner_rel_tol = 1e-2;
  int max_backtracks = 60;
  double mu = 1e-4;
  std::int64_t max_outer = 2000;
  double tol = 1e-9;
  EpsSchedule schedule = EpsSchedule::geometric(0.1, 0.9);

  void validate() const {
    LPTR_REQUIRE(r0 > 0.0 && 0.0 < lambda_min && lambda_min < lambda_max, "invalid MM step settings");
    LPTR_REQUIRE(inner_max_iter >= 1 && max_outer >= 0 && tol >= 0.0, "invalid MM caps");
  }
};

/// Proximal gradient u+ = prox_{r phi_eps}(u - r grad f(u)). The step size r
/// is expanded by 1/theta while the sufficient decrease test
///   F(u+) <= F(u) - eta_dec ||u+ - u||^2 / r
/// holds (at most max_expand times) and shrunk by theta until it does.
inline SolveResult pg_solve(SmoothObjective& f, const RegularizerParams& reg, const PgParams& prm,
                            const std::string& alg = "PG", std::optional<GridFunction> u0 = std::nullopt) {
  prm.validate();
  reg.validate(f.space());
  if (f.space() != Space::L2) throw UnsupportedConfiguration("lptr: PG needs the separable L2 prox");
  const auto start = std::chrono::steady_clock::now();
  f.reset_counters();
  EvalTally tally;

  GridFunction u = u0.value_or(GridFunction(f.grid(), f.space()));
  LPTR_REQUIRE(within_box(u, reg.box), "starting point must be feasible");
  std::int64_t k = 0;
  double eps = prm.schedule(0);
  double fu = f.value(u);
  double Fu = fu + phi_value(u, reg, SmoothedPhi{eps});
  GridFunction g = f.gradient(u);
  double r = prm.r0;
  double last_step = 0.0;
  SolveResult res;

  struct Probe {
    GridFunction u;
    double f = 0.0;
    double F = 0.0;
    double step = 0.0;
    bool ok = false;
  };
  auto probe = [&](double rr) {
    Probe p;
    p.u = prox_smoothed(u - rr * g, rr, eps, reg, &tally);
    p.f = f.value(p.u);
    p.F = p.f + phi_value(p.u, reg, SmoothedPhi{eps});
    p.step = norm(p.u - u);
    p.ok = p.F <= Fu - prm.eta_dec * p.step * p.step / rr;
    return p;
  };

  for (;;) {
    if (k >= prm.max_iter) {
      res.stop_reason = "iteration limit";
      break;
    }
    Probe best = probe(r);
    if (best.ok) {
      for (int i = 0; i < prm.max_expand; ++i) {
        Probe next = probe(r / prm.theta);
        if (!next.ok) break;
        r /= prm.theta;
        best = std::move(next);
      }
    } else {
      for (int i = 0; i < prm.max_shrink && !best.ok; ++i) {
        r *= prm.theta;
        best = probe(r);
      }
    }
    if (!best.ok) {
      // Only a zero step can pass at r -> 0; the iterate is a fixed point.
      res.converged = best.step <= prm.tol;
      res.stop_reason = res.converged ? "fixed point" : "line search collapse";
      break;
    }
    u = best.u;
    fu = best.f;
    last_step = best.step;
    ++k;
    eps = std::min(eps, prm.schedule(k));
    Fu = fu + phi_value(u, reg, SmoothedPhi{eps});
    g = f.gradient(u);
    if (best.step <= prm.tol) {
      res.converged = true;
      res.stop_reason = "step below tolerance";
      break;
    }
  }

  res.u = u;
  ReportRow& row = res.row;
  row.alg = alg;
  row.F = fu + phi_value(u, reg, ExactPhi{});
  row.iter = k;
  row.eps_K = eps;
  row.dF = last_step;
  row.h_K = stationarity_h(u, g, eps, 1.0, reg);
  row.h_K_nc = stationarity_h_nc(u, g, eps, 1.0, reg, &tally);
  row.sparsity = sparsity_measure(u, default_sparsity_tol(reg.box));
  row.feval = f.value_evals();
  row.hess = f.hess_evals();
  row.prox_lp = tally.prox_lp;
  row.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

/// Majorize-minimize: at each outer iterate u_j build the convex majorant
/// phi_j of phi_{eps_j}, run a few BB proximal gradient steps on f + phi_j,
/// then shrink eps. Only majorant proxes are used, so it works in H01 too.
inline SolveResult mm_solve(SmoothObjective& f, const RegularizerParams& reg, const MmParams& prm,
                            const std::string& alg = "MM", std::optional<GridFunction> u0 = std::nullopt) {
  prm.validate();
  reg.validate(f.space());
  const auto start = std::chrono::steady_clock::now();
  f.reset_counters();
  EvalTally tally;
  std::optional<ShiftedLaplacianSolver> ws;
  if (f.space() == Space::H01) ws.emplace(f.grid());
  ShiftedLaplacianSolver* wsp = ws ? &*ws : nullptr;

  GridFunction u = u0.value_or(GridFunction(f.grid(), f.space()));
  LPTR_REQUIRE(within_box(u, reg.box), "starting point must be feasible");
  std::int64_t j = 0;
  double eps = prm.schedule(0);
  double fu = f.value(u);
  GridFunction g = f.gradient(u);
  double lambda = prm.r0;
  double last_step = 0.0;
  bool inner_capped = false;
  SolveResult res;

  for (;;) {
    if (j >= prm.max_outer) {
      res.stop_reason = "iteration limit";
      break;
    }
    const SmoothingState st(eps, u);
    auto F = [&](double fv, const GridFunction& v) { return fv + phi_value(v, reg, MajorantPhi{std::cref(st)}); };
    GridFunction v = u;
    double fv = fu;
    GridFunction gv = g;
    double Fv = F(fv, v);
    double first = -1.0;
    bool inner_done = false;
    for (int it = 0; it < prm.inner_max_iter; ++it) {
      double r = lambda;
      bool ok = false;
      GridFunction w;
      double fw = 0.0, Fw = 0.0, step = 0.0;
      for (int bt = 0; bt < prm.max_backtracks; ++bt, r *= 0.5) {
        w = prox_majorant(v - r * gv, r, st, reg, wsp);
        step = norm(w - v);
        if (step == 0.0) break;
        fw = f.value(w);
        Fw = F(fw, w);
        if (Fw <= Fv - prm.mu * step * step / r) {
          ok = true;
          break;
        }
      }
      if (!ok) {
        inner_done = true;
        break;
      }
      const GridFunction gw = f.gradient(w);
      const GridFunction sv = w - v;
      const double sy = inner(sv, gw - gv);
      lambda = sy > 0.0 ? std::clamp(inner(sv, sv) / sy, prm.lambda_min, prm.lambda_max)
                        : std::min(2.0 * r, prm.lambda_max);
      v = w;
      fv = fw;
      Fv = Fw;
      gv = gw;
      const double hstep = step / r;
      if (first < 0.0) first = hstep;
      if (hstep <= prm.inner_rel_tol * first) {
        inner_done = true;
        break;
      }
    }
    if (!inner_done) inner_capped = true;
    last_step = norm(v - u);
    u = v;
    fu = fv;
    g = gv;
    ++j;
    eps = std::min(eps, prm.schedule(j));
    if (last_step <= prm.tol) {
      res.converged = true;
      res.stop_reason = "step below tolerance";
      break;
    }
  }
  if (inner_capped && res.converged) res.stop_reason += " (inner cap hit)";

  res.u = u;
  ReportRow& row = res.row;
  row.alg = alg;
  row.F = fu + phi_value(u, reg, ExactPhi{});
  row.iter = j;
  row.eps_K = eps;
  row.dF = last_step;
  row.h_K = stationarity_h(u, g, eps, 1.0, reg, wsp);
  if (f.space() == Space::L2) row.h_K_nc = stationarity_h_nc(u, g, eps, 1.0, reg, &tally);
  row.sparsity = sparsity_measure(u, default_sparsity_tol(reg.box));
  row.feval = f.value_evals();
  row.hess = f.hess_evals();
  row.prox_lp = tally.prox_lp;
  row.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace lptr
