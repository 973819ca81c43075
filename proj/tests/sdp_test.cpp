#include "secrate/sdp.hpp"

#include <random>

#include <gtest/gtest.h>

namespace secrate::sdp {
namespace {

CMatrix random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = Complex(g(rng), g(rng));
  }
  return 0.5 * (a + a.adjoint());
}

// Residual and eigenvalue checks that every optimal solution must pass.
void expect_certified(const Problem& p, const Solution& s) {
  ASSERT_TRUE(s.optimal());
  EXPECT_LE(s.duality_gap, 1e-7);
  for (std::size_t b = 0; b < p.blocks().size(); ++b) {
    if (p.blocks()[b].kind == BlockKind::kFreeScalar) continue;
    EXPECT_GE(HermitianMatrix::symmetrized(s.values[b]).min_eigenvalue(), -1e-9);
  }
  for (double e : constraint_min_eigenvalues(p, s.values)) EXPECT_GE(e, -1e-7);
  for (const auto& eq : p.equalities()) EXPECT_LE(std::abs(eq.evaluate(s.values)(0, 0)), 1e-7);
}

TEST(SdpSolveTest, ScalarUpperBound) {
  Problem p;
  const Var t = p.add_free("t");
  AffineHermitian c(1);
  c.add_constant(1.0).add_scaled(t, -1.0);
  p.add_psd(c);
  AffineHermitian obj(1);
  obj.add_scaled(t, 1.0);
  p.maximize(obj);
  const Solution s = solve(p);
  expect_certified(p, s);
  EXPECT_NEAR(s.objective, 1.0, 1e-7);
  EXPECT_NEAR(s.scalar(t), 1.0, 1e-7);
}

TEST(SdpSolveTest, TraceBoundActive) {
  Problem p;
  const Var q = p.add_hermitian_psd(2, "Q");
  AffineHermitian c(1);
  c.add_constant(100.0).add_trace(q, 2, -1.0);
  p.add_psd(c);
  AffineHermitian obj(1);
  obj.add_trace(q, 2);
  p.maximize(obj);
  const Solution s = solve(p);
  expect_certified(p, s);
  EXPECT_NEAR(s.objective, 100.0, 1e-5);
}

TEST(SdpSolveTest, LargestEigenvalueMatchesEigensolver) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 4;
    const CMatrix a = random_hermitian(n, rng);
    Problem p;
    const Var t = p.add_free("t");
    AffineHermitian lmi(n);
    lmi.add_scaled(t, 1.0).add_constant(-a);
    p.add_psd(lmi);
    AffineHermitian obj(1);
    obj.add_scaled(t, 1.0);
    p.minimize(obj);
    const Solution s = solve(p);
    expect_certified(p, s);
    const double lmax = HermitianMatrix(a).eigenvalues()(n - 1);
    EXPECT_NEAR(s.objective, lmax, 1e-6 * (1.0 + std::abs(lmax)));
  }
}

// max h X h^H s.t. Tr X <= P, X >= 0 has value P |h|^2 at a rank-one X.
TEST(SdpSolveTest, BeamformingAlignsWithChannel) {
  CRowVector h(3);
  h << Complex(0.3, -1.2), Complex(0.7, 0.1), Complex(-0.4, 0.5);
  Problem p;
  const Var x = p.add_hermitian_psd(3, "X");
  AffineHermitian tr(1);
  tr.add_constant(10.0).add_trace(x, 3, -1.0);
  p.add_psd(tr);
  AffineHermitian obj(1);
  obj.add_quad(x, h);
  p.maximize(obj);
  const Solution s = solve(p);
  expect_certified(p, s);
  EXPECT_NEAR(s.objective, 10.0 * h.squaredNorm(), 1e-5);
  const auto ev = s.matrix(x).eigenvalues();
  EXPECT_LT(ev(1) / ev(2), 1e-5);
}

TEST(SdpSolveTest, EqualityConstraints) {
  // max x + y s.t. x + 2y = 4, x, y >= 0  ->  x = 4, y = 0.
  Problem p;
  const Var x = p.add_nonnegative("x");
  const Var y = p.add_nonnegative("y");
  AffineHermitian eq(1);
  eq.add_scaled(x, 1.0).add_scaled(y, 2.0).add_constant(-4.0);
  p.add_equality(eq);
  AffineHermitian obj(1);
  obj.add_scaled(x, 1.0).add_scaled(y, 1.0);
  p.maximize(obj);
  const Solution s = solve(p);
  expect_certified(p, s);
  EXPECT_NEAR(s.objective, 4.0, 1e-6);
  EXPECT_NEAR(s.scalar(y), 0.0, 1e-6);
}

TEST(SdpSolveTest, DetectsInfeasibility) {
  // t >= 2 and t <= 1.
  Problem p;
  const Var t = p.add_free("t");
  AffineHermitian lo(1), hi(1), obj(1);
  lo.add_scaled(t, 1.0).add_constant(-2.0);
  hi.add_constant(1.0).add_scaled(t, -1.0);
  p.add_psd(lo);
  p.add_psd(hi);
  obj.add_scaled(t, 1.0);
  p.maximize(obj);
  EXPECT_EQ(solve(p).status, Status::kInfeasible);
}

TEST(SdpSolveTest, DetectsInfeasibleLmi) {
  // X >= 0 with Tr X = -1.
  Problem p;
  const Var x = p.add_hermitian_psd(2, "X");
  AffineHermitian eq(1);
  eq.add_trace(x, 2).add_constant(1.0);
  p.add_equality(eq);
  AffineHermitian obj(1);
  obj.add_trace(x, 2);
  p.minimize(obj);
  EXPECT_EQ(solve(p).status, Status::kInfeasible);
}

TEST(SdpSolveTest, DetectsUnboundedness) {
  Problem p;
  const Var t = p.add_nonnegative("t");
  AffineHermitian obj(1);
  obj.add_scaled(t, 1.0);
  p.maximize(obj);
  EXPECT_EQ(solve(p).status, Status::kUnbounded);
}

TEST(SdpSolveTest, Deterministic) {
  std::mt19937_64 rng(5);
  const CMatrix a = random_hermitian(4, rng);
  Problem p;
  const Var x = p.add_hermitian_psd(4, "X");
  AffineHermitian tr(1);
  tr.add_constant(1.0).add_trace(x, 4, -1.0);
  p.add_psd(tr);
  AffineHermitian obj(1);
  for (int i = 0; i < 4; ++i) obj.add_quad(x, a.row(i));
  p.maximize(obj);
  const Solution s1 = solve(p);
  const Solution s2 = solve(p);
  ASSERT_TRUE(s1.optimal());
  EXPECT_NEAR(s1.objective, s2.objective, 1e-8);
}

TEST(SdpValidateTest, RejectsUndeclaredBlock) {
  Problem p;
  AffineHermitian c(1);
  c.add_scaled(Var{3}, 1.0);
  p.add_psd(c);
  EXPECT_THROW(solve(p), ValidationError);
}

TEST(SdpValidateTest, RejectsNonFiniteCoefficient) {
  Problem p;
  const Var t = p.add_free();
  AffineHermitian c(1);
  c.add_scaled(t, std::nan(""));
  p.add_psd(c);
  EXPECT_THROW(solve(p), ValidationError);
}

}  // namespace
}  // namespace secrate::sdp
