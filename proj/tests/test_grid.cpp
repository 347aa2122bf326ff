#include <gtest/gtest.h>

#include <random>

#include "lptr/grid.hpp"
#include "oracles.hpp"

using namespace lptr;

TEST(Grid, SpacingAndSize) {
  Grid g(7);
  EXPECT_DOUBLE_EQ(g.h(), 1.0 / 8.0);
  EXPECT_EQ(g.size(), 49);
  EXPECT_THROW(Grid(1), ContractViolation);
}

TEST(Inner, ConstantOneGivesQuadratureArea) {
  for (int n : {2, 5, 16}) {
    Grid g(n);
    const auto one = GridFunction::constant(g, Space::L2, 1.0);
    const double expect = std::pow(n / (n + 1.0), 2);
    EXPECT_NEAR(inner(one, one), expect, 1e-14);
  }
}

TEST(Inner, ZeroElement) {
  Grid g(6);
  std::mt19937_64 rng(1);
  const GridFunction v(g, Space::L2, oracle::random_vector(rng, g.size(), -1, 1));
  EXPECT_EQ(inner(GridFunction(g, Space::L2), v), 0.0);
  EXPECT_EQ(inner(GridFunction(g, Space::H01), v.in_space(Space::H01)), 0.0);
}

TEST(Inner, H01EigenvectorMatchesEigenvalue) {
  Grid g(9);
  const Vector e = oracle::first_eigvec(g);
  const GridFunction u(g, Space::H01, e);
  const double l2 = g.cell_area() * e.squaredNorm();
  EXPECT_NEAR(inner(u, u), oracle::first_eigval(g) * l2, 1e-10 * oracle::first_eigval(g) * l2);
}

TEST(Inner, H01MatchesDenseLaplacian) {
  Grid g(6);
  std::mt19937_64 rng(2);
  const Vector a = oracle::random_vector(rng, g.size(), -1, 1);
  const Vector b = oracle::random_vector(rng, g.size(), -1, 1);
  const double expect = g.cell_area() * a.dot(oracle::dense_laplacian(g) * b);
  EXPECT_NEAR(inner(GridFunction(g, Space::H01, a), GridFunction(g, Space::H01, b)), expect, 1e-10 * std::abs(expect));
}

TEST(Inner, SymmetricBilinearPositive) {
  Grid g(5);
  std::mt19937_64 rng(3);
  for (Space s : {Space::L2, Space::H01}) {
    const GridFunction u(g, s, oracle::random_vector(rng, g.size(), -1, 1));
    const GridFunction v(g, s, oracle::random_vector(rng, g.size(), -1, 1));
    const GridFunction w(g, s, oracle::random_vector(rng, g.size(), -1, 1));
    EXPECT_NEAR(inner(u, v), inner(v, u), 1e-12);
    EXPECT_NEAR(inner(2.0 * u + w, v), 2.0 * inner(u, v) + inner(w, v), 1e-12);
    EXPECT_GT(inner(u, u), 0.0);
  }
}

TEST(Inner, MismatchIsContractViolation) {
  const GridFunction a(Grid(4), Space::L2), b(Grid(5), Space::L2), c(Grid(4), Space::H01);
  EXPECT_THROW(inner(a, b), ContractViolation);
  EXPECT_THROW(inner(a, c), ContractViolation);
}

TEST(ProjectBox, InteriorUnchangedAndSaturation) {
  Grid g(4);
  const auto u = GridFunction::constant(g, Space::L2, 0.3);
  EXPECT_EQ(project_box(u, BoxBounds::symmetric(4)).values, u.values);
  const auto big = GridFunction::constant(g, Space::L2, 10.0);
  EXPECT_TRUE((project_box(big, BoxBounds::symmetric(4)).values.array() == 4.0).all());
}

TEST(ProjectBox, MatchesLoopIdempotentLipschitz) {
  Grid g(8);
  std::mt19937_64 rng(4);
  const BoxBounds box(-1.5, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    const GridFunction u(g, Space::L2, oracle::random_vector(rng, g.size(), -5, 5));
    const GridFunction v(g, Space::L2, oracle::random_vector(rng, g.size(), -5, 5));
    const auto pu = project_box(u, box);
    for (int i = 0; i < u.size(); ++i) EXPECT_EQ(pu[i], std::min(std::max(u[i], -1.5), 2.0));
    EXPECT_EQ(project_box(pu, box).values, pu.values);
    EXPECT_LE(norm(pu - project_box(v, box)), norm(u - v) + 1e-14);
  }
}

TEST(BoxBounds, RejectsInvertedBounds) { EXPECT_THROW(BoxBounds(1.0, -1.0), ContractViolation); }

TEST(ShiftedLaplacian, ZeroRhsGivesZero) {
  Grid g(8);
  const auto y = solve_shifted_laplacian(0.0, GridFunction(g, Space::L2));
  EXPECT_TRUE(y.values.isZero(0.0));
}

TEST(ShiftedLaplacian, EigenpairIsReproduced) {
  Grid g(12);
  const Vector e = oracle::first_eigvec(g);
  const GridFunction rhs(g, Space::L2, oracle::first_eigval(g) * e);
  const auto y = solve_shifted_laplacian(0.0, rhs, 1e-12);
  EXPECT_LT((y.values - e).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ShiftedLaplacian, MatchesDenseSolveWithVariableShift) {
  Grid g(8);
  std::mt19937_64 rng(5);
  const Vector rhs = oracle::random_vector(rng, g.size(), -1, 1);
  const Vector c = oracle::random_vector(rng, g.size(), 0, 50);
  oracle::MatrixXd A = oracle::dense_laplacian(g);
  A.diagonal() += c;
  const Vector expect = A.llt().solve(rhs);
  const auto y = solve_shifted_laplacian(c, GridFunction(g, Space::L2, rhs), 1e-12);
  EXPECT_LT((y.values - expect).cwiseAbs().maxCoeff(), 1e-10);

  ShiftedLaplacianSolver direct(g, c);
  EXPECT_LT((direct.solve(rhs, 1e-12) - expect).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ShiftedLaplacian, ResidualContractHolds) {
  Grid g(20);
  std::mt19937_64 rng(6);
  const Vector c = oracle::random_vector(rng, g.size(), 0, 3);
  const GridFunction rhs(g, Space::L2, oracle::random_vector(rng, g.size(), -100, 100));
  for (double tol : {1e-6, 1e-10}) {
    const auto y = solve_shifted_laplacian(c, rhs, tol);
    const Vector res = apply_laplacian(g, y.values) + c.cwiseProduct(y.values) - rhs.values;
    EXPECT_LE(l2_norm(g, res), tol * std::max(1.0, l2_norm(g, rhs.values)));
  }
}

TEST(ShiftedLaplacian, NegativeShiftRejected) {
  Grid g(4);
  EXPECT_THROW(solve_shifted_laplacian(-1.0, GridFunction(g, Space::L2)), ContractViolation);
}
