#pragma once

// Small smooth objectives with dense closed forms, used to drive the model,
// Cauchy-point, subsolver and trust-region tests.

#include <Eigen/Dense>
#include <cmath>

#include "lptr/smooth_model.hpp"
#include "oracles.hpp"

namespace toy {

using lptr::GridFunction;
using lptr::Space;
using lptr::Vector;

/// f(u) = h^2 (1/2 u'Au - b'u) + c with A symmetric. In H01 the gradient is
/// the Riesz representative K^{-1}(Au - b).
class DenseQuadratic final : public lptr::SmoothObjective {
 public:
  DenseQuadratic(lptr::Grid g, Space s, Eigen::MatrixXd A, Vector b, double c = 0.0)
      : g_(g), s_(s), A_(std::move(A)), b_(std::move(b)), c_(c), K_(oracle::dense_laplacian(g).llt()) {}

  lptr::Grid grid() const override { return g_; }
  Space space() const override { return s_; }
  const Eigen::MatrixXd& A() const { return A_; }
  const Vector& b() const { return b_; }

 protected:
  double do_value(const GridFunction& u) override {
    return g_.cell_area() * (0.5 * u.values.dot(A_ * u.values) - b_.dot(u.values)) + c_;
  }
  GridFunction do_gradient(const GridFunction& u) override { return u.with_values(riesz(A_ * u.values - b_)); }
  GridFunction do_hess_vec(const GridFunction&, const GridFunction& s) override {
    return s.with_values(riesz(A_ * s.values));
  }

 private:
  Vector riesz(const Vector& v) const { return s_ == Space::L2 ? v : Vector(K_.solve(v)); }

  lptr::Grid g_;
  Space s_;
  Eigen::MatrixXd A_;
  Vector b_;
  double c_;
  Eigen::LLT<Eigen::MatrixXd> K_;
};

/// Random symmetric matrix with eigenvalues drawn from [lo, hi].
inline Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, int n, double lo, double hi) {
  const Eigen::MatrixXd M = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return std::normal_distribution<double>()(rng); });
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  const Eigen::MatrixXd Q = qr.householderQ();
  const Vector d = oracle::random_vector(rng, n, lo, hi);
  return Q * d.asDiagonal() * Q.transpose();
}

/// Quartic f(u) = h^2 sum (u_i^4/4 - b_i u_i); its quadratic model is inexact.
class Quartic final : public lptr::SmoothObjective {
 public:
  Quartic(lptr::Grid g, Vector b) : g_(g), b_(std::move(b)) {}
  lptr::Grid grid() const override { return g_; }
  Space space() const override { return Space::L2; }

 protected:
  double do_value(const GridFunction& u) override {
    return g_.cell_area() * (0.25 * u.values.array().pow(4).sum() - b_.dot(u.values));
  }
  GridFunction do_gradient(const GridFunction& u) override {
    return u.with_values(u.values.array().cube().matrix() - b_);
  }
  GridFunction do_hess_vec(const GridFunction& u, const GridFunction& s) override {
    return s.with_values((3.0 * u.values.array().square() * s.values.array()).matrix());
  }

 private:
  lptr::Grid g_;
  Vector b_;
};

}  // namespace toy
