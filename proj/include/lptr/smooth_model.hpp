#pragma once

// The smooth part f behind a small interface, and the quadratic model
// f_k(u) = <g_k, s> + 1/2 <B_k s, s>, s = u - u_k, built from it.

#include <cmath>
#include <cstdint>
#include <functional>

#include "lptr/errors.hpp"
#include "lptr/grid.hpp"

namespace lptr {

/// Smooth objective with value/gradient/Hessian-vector access. Gradients and
/// Hessian products are Riesz representatives in space().
class SmoothObjective {
 public:
  virtual ~SmoothObjective() = default;

  double value(const GridFunction& u) {
    ++value_evals_;
    return do_value(u);
  }
  GridFunction gradient(const GridFunction& u) { return do_gradient(u); }
  GridFunction hess_vec(const GridFunction& u, const GridFunction& s) {
    ++hess_evals_;
    return do_hess_vec(u, s);
  }

  virtual Grid grid() const = 0;
  virtual Space space() const = 0;

  std::int64_t value_evals() const { return value_evals_; }
  std::int64_t hess_evals() const { return hess_evals_; }
  void reset_counters() { value_evals_ = hess_evals_ = 0; }

 protected:
  virtual double do_value(const GridFunction& u) = 0;
  virtual GridFunction do_gradient(const GridFunction& u) = 0;
  virtual GridFunction do_hess_vec(const GridFunction& u, const GridFunction& s) = 0;

 private:
  std::int64_t value_evals_ = 0;
  std::int64_t hess_evals_ = 0;
};

/// f_k at anchor u_k. The Hessian apply captures the objective by reference,
/// so the objective must outlive the model.
struct QuadraticModel {
  GridFunction anchor;
  GridFunction g;
  std::function<GridFunction(const GridFunction&)> hess;

  static QuadraticModel build(SmoothObjective& f, const GridFunction& u_k) {
    QuadraticModel m;
    m.anchor = u_k;
    m.g = f.gradient(u_k);
    m.hess = [&f, u_k](const GridFunction& s) { return f.hess_vec(u_k, s); };
    return m;
  }

  GridFunction apply(const GridFunction& s) const { return hess(s); }
};

/// f_k value of a step s whose product B s is already known.
inline double model_step_value(const QuadraticModel& m, const GridFunction& s, const GridFunction& bs) {
  return inner(m.g, s) + 0.5 * inner(bs, s);
}

inline double model_value(const QuadraticModel& m, const GridFunction& u) {
  const GridFunction s = u - m.anchor;
  if (s.values.isZero(0.0)) return 0.0;
  return model_step_value(m, s, m.apply(s));
}

/// <s, B s> / ||s||^2.
inline double curvature(const QuadraticModel& m, const GridFunction& s) {
  const double ss = inner(s, s);
  LPTR_REQUIRE(ss > 0.0, "curvature needs a nonzero step");
  return inner(s, m.apply(s)) / ss;
}

/// Curvature along the trial step as a stand-in for the supremum over the ball.
inline double omega_k_estimate(const QuadraticModel& m, const GridFunction& s_trial) {
  return std::abs(curvature(m, s_trial));
}

}  // namespace lptr
