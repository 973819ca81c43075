#include "secrate/robust_region.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "secrate/perfect_region.hpp"
#include "test_util.hpp"

namespace secrate {
namespace {

using testing::reference_channels;
using testing::random_channel;
using testing::random_psd;

// Fixed values for the variables referenced by build_lmis.
struct Values {
  sdp::Problem p;
  sdp::Assignment a;
  RobustVariables v;

  Values(const HermitianMatrix& q0, const HermitianMatrix& qc, const HermitianMatrix& qa, int k_count,
         double t, double delta, double rho) {
    v.q0 = matrix(q0);
    v.qc = matrix(qc);
    v.qa = matrix(qa);
    for (int k = 1; k < k_count; ++k) v.t.push_back(scalar(t));
    for (int k = 0; k < k_count; ++k) v.delta.push_back(scalar(delta));
    v.rho = scalar(rho);
  }
  sdp::Var matrix(const HermitianMatrix& m) {
    a.push_back(m.matrix());
    return p.add_hermitian_psd(static_cast<int>(m.matrix().rows()));
  }
  sdp::Var scalar(double x) {
    a.push_back(CMatrix::Constant(1, 1, Complex(x, 0.0)));
    return p.add_free();
  }
  CMatrix eval(const sdp::AffineHermitian& f) const { return f.evaluate(a); }
  double min_eig(const sdp::AffineHermitian& f) const {
    return HermitianMatrix::symmetrized(eval(f)).min_eigenvalue();
  }
};

ChannelSet two_user(const CRowVector& h1, const CRowVector& h2, double radius) {
  ChannelSet ch;
  ch.n_tx = static_cast<int>(h1.size());
  ch.channels = {h1, h2};
  ch.radii = {radius, radius};
  return ch;
}

double quad(const CRowVector& h, const HermitianMatrix& m) { return (h * m.matrix() * h.adjoint())(0, 0).real(); }

TEST(RobustLmiTest, ExactReceiverCollapsesToScalarInequality) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  for (int i = 0; i < 20; ++i) {
    const ChannelSet ch = two_user(random_channel(2, rng), random_channel(2, rng), 0.0);
    const HermitianMatrix qc = random_psd(2, rng, 3.0);
    const HermitianMatrix qa = random_psd(2, rng, 2.0);
    const double beta = u(rng);
    const Values val(HermitianMatrix::zero(2), qc, qa, 2, 0.0, 0.0, 0.0);
    const CRowVector& h = ch.channels[1];
    const double residual = (beta - 1.0) * (1.0 + quad(h, qa)) - quad(h, qc);

    const RobustLmis full = build_lmis(beta, 1.0, 0.0, ch, val.v);
    const CMatrix t = val.eval(full.t[0]);
    ASSERT_EQ(t.rows(), 3);
    EXPECT_NEAR(t(2, 2).real(), residual, 1e-9 * (1.0 + std::abs(residual)));
    // The border is the top block applied to h, so the Schur complement
    // of the top block leaves exactly the constant beta - 1.
    const CMatrix m = t.topLeftCorner(2, 2);
    EXPECT_LE((t.bottomLeftCorner(1, 2) - h * m).norm(), 1e-9 * (1.0 + m.norm()));

    const RobustLmis collapsed = build_lmis(beta, 1.0, 0.0, ch, val.v, true);
    const CMatrix s = val.eval(collapsed.t[0]);
    ASSERT_EQ(s.rows(), 1);
    EXPECT_NEAR(s(0, 0).real(), residual, 1e-9 * (1.0 + std::abs(residual)));
  }
}

TEST(RobustLmiTest, DiagonalCase) {
  std::mt19937_64 rng(3);
  for (double eps : {0.5, 1.0, 1.5}) {
    const ChannelSet ch = two_user(random_channel(2, rng), random_channel(2, rng), eps);
    const HermitianMatrix z = HermitianMatrix::zero(2);
    const Values val(z, z, z, 2, 1.0, 0.0, 0.0);
    const CMatrix t = val.eval(build_lmis(2.0, 1.0, 0.0, ch, val.v).t[0]);
    CMatrix expected = CMatrix::Identity(3, 3);
    expected(2, 2) = 1.0 - eps * eps;
    EXPECT_LE((t - expected).norm(), 1e-12);
    EXPECT_EQ(val.min_eig(build_lmis(2.0, 1.0, 0.0, ch, val.v).t[0]) >= 0.0, eps <= 1.0) << eps;
  }
}

// S_k certifies c |h + e|^2 >= tau' over the ball for some delta >= 0
// exactly when the sampled minimum over the ball clears tau'.
TEST(RobustLmiTest, MulticastBlockMatchesBallSampling) {
  std::mt19937_64 rng(11);
  const double eps = 0.3;
  const double c = 2.0;
  const std::vector<CRowVector> ball = sample_unit_ball(2, 10000, 5);
  for (int i = 0; i < 5; ++i) {
    const CRowVector h = random_channel(2, rng);
    if (h.norm() <= 2 * eps) continue;
    double sampled = std::norm(h.norm() - eps) * c;
    for (const CRowVector& e : ball) sampled = std::min(sampled, c * (h + eps * e).squaredNorm());
    const ChannelSet ch = two_user(h, h, eps);
    const HermitianMatrix z = HermitianMatrix::zero(2);
    const HermitianMatrix q0 = HermitianMatrix::symmetrized(c * CMatrix::Identity(2, 2));
    auto certified = [&](double tau_prime) {
      for (double logd = -4.0; logd <= 4.0; logd += 0.002) {
        const Values val(q0, z, z, 2, 0.0, std::pow(10.0, logd), 0.0);
        if (val.min_eig(build_lmis(1.0, 1.0, tau_prime, ch, val.v).s[0]) >= -1e-12) return true;
      }
      return false;
    };
    EXPECT_TRUE(certified(0.99 * sampled)) << i;
    EXPECT_FALSE(certified(1.01 * sampled)) << i;
  }
}

TEST(WcMulticastCapacityTest, ZeroRadiiIsMulticastCapacity) {
  const SystemConfig cfg{reference_channels(), 100.0};
  const WorstCaseCapacity wc = wc_multicast_capacity(cfg);
  EXPECT_NEAR(wc.tau_max, multicast_capacity(cfg).tau_max, 1e-5);
  EXPECT_LE(wc.q0.trace(), 100.0 * (1 + 1e-7));
}

TEST(WcMulticastCapacityTest, SingleReceiverRadialWorstCase) {
  ChannelSet ch = reference_channels(0.2);
  ch.channels.resize(1);
  ch.radii.resize(1);
  SystemConfig cfg{ch, 100.0};
  const WorstCaseCapacity wc = wc_multicast_capacity(cfg);
  const double lo = ball_extremes(ch.channels[0], 0.2).first;
  EXPECT_NEAR(wc.tau_max, std::log2(1.0 + 100.0 * lo), 1e-5);
}

TEST(WcMulticastCapacityTest, ShrinksWithRadius) {
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.0, 0.1, 0.2, 0.3, 0.4}) {
    const WorstCaseCapacity wc = wc_multicast_capacity({reference_channels(eps), 100.0});
    EXPECT_LE(wc.tau_max, prev + 1e-7) << eps;
    prev = wc.tau_max;
    // The covariance achieves the value over the whole ball.
    const RateBreakdown r = exact_worst_case({wc.q0, HermitianMatrix::zero(2), HermitianMatrix::zero(2)},
                                             reference_channels(eps));
    EXPECT_NEAR(r.multicast_rate, wc.tau_max, 1e-5) << eps;
  }
}

TEST(RobustInnerTest, ZeroRadiiMatchesPerfectInner) {
  const SystemConfig cfg{reference_channels(), 100.0};
  const RobustSettings rs = RobustSettings::from_config(cfg);
  for (double beta : {2.0, 10.0, 50.0}) {
    for (double tau_prime : {0.0, 1.0}) {
      const InnerSolution perfect = inner_sdp(beta, tau_prime, cfg);
      const RobustInnerSolution robust = robust_inner(beta, tau_prime, cfg, rs);
      ASSERT_TRUE(perfect.feasible());
      ASSERT_TRUE(robust.feasible());
      EXPECT_NEAR(robust.eta, perfect.eta, std::max(1e-3, rs.bisection_tol())) << beta << " " << tau_prime;
      EXPECT_LE(robust.eta, perfect.eta * (1 + 1e-7));
    }
  }
}

TEST(RobustInnerTest, UnreachableTargetIsInfeasible) {
  const SystemConfig cfg{reference_channels(0.2), 100.0};
  const RobustInnerSolution s = robust_inner(2.0, 1e6, cfg, RobustSettings::from_config(cfg));
  EXPECT_EQ(s.status, sdp::Status::kInfeasible);
}

TEST(RobustInnerTest, RejectsOutOfRangeArguments) {
  const SystemConfig cfg{reference_channels(0.2), 100.0};
  const RobustSettings rs = RobustSettings::from_config(cfg);
  EXPECT_THROW(robust_inner(0.5, 0.0, cfg, rs), ValidationError);
  EXPECT_THROW(robust_inner(robust_beta_max(cfg) * 2, 0.0, cfg, rs), ValidationError);
  EXPECT_THROW(robust_inner(2.0, -1.0, cfg, rs), ValidationError);
  RobustSettings bad = rs;
  bad.eps_b = 0.5;
  EXPECT_THROW(robust_inner(2.0, 0.0, cfg, bad), ValidationError);
}

TEST(RobustInnerTest, SolutionInvariants) {
  const SystemConfig cfg{reference_channels(0.2), 100.0};
  const RobustSettings rs = RobustSettings::from_config(cfg);
  const double tol = rs.bisection_tol();
  const double beta_max = robust_beta_max(cfg);
  const double tau_prime = 1.0;
  for (double beta : {1.5, 5.0, 30.0}) {
    const RobustInnerSolution s = robust_inner(beta, tau_prime, cfg, rs);
    ASSERT_TRUE(s.feasible()) << beta;
    EXPECT_LE(s.iterations, std::log2((beta_max / beta - 1.0 / beta) / tol) + 1.0) << beta;
    EXPECT_GE(s.eta, 1.0 / beta);
    EXPECT_LE(s.eta, s.upper);
    for (double m : robust_lmi_min_eigenvalues(s, tau_prime, cfg.channels)) EXPECT_GE(m, -1e-7) << beta;
    for (double t : s.t_slacks) EXPECT_GE(t, 0.0);
    for (double d : s.delta_slacks) EXPECT_GE(d, 0.0);
    EXPECT_GE(s.rho, 0.0);
    EXPECT_LE(s.triple().total_power(), 100.0 * (1 + 1e-6));
    if (s.eta > 1.0) EXPECT_LE(rank_ratio(s.qc), 1e-6) << beta;

    const RateBreakdown wc = worst_case_eval(s.triple(), cfg.channels, 10000, 3);
    EXPECT_GE(wc.secrecy_rate, std::log2(s.eta) - 1e-3) << beta;
    EXPECT_GE(wc.multicast_rate, std::log2(1.0 + tau_prime) - 1e-3) << beta;
  }
}

TEST(RobustSettingsTest, StepAndBounds) {
  RobustSettings rs;
  rs.eps = 0.1;
  rs.eps_b = 1e-4;
  const double e = std::exp2(0.1);
  EXPECT_DOUBLE_EQ(robust_beta_step(rs), (e * (1 - 1e-4) - 1) / (1 + e * 1e-4));
  EXPECT_EQ(RobustSettings{}.bisection_tol(), default_bisection_tol(0.01));
  const SystemConfig cfg{reference_channels(0.2), 100.0};
  const double lo = ball_extremes(cfg.channels.channels[0], 0.2).first;
  EXPECT_NEAR(robust_beta_max(cfg), 1.0 + 100.0 * lo, 1e-12);
  rs.eps_b = 1.0 - std::exp2(-0.1);
  EXPECT_THROW(rs.validate(), ValidationError);
}

TEST(RobustSrmTest, CapacityEndpointStopsConfidentialService) {
  const SystemConfig cfg{reference_channels(0.2), 100.0};
  const RobustSettings rs = RobustSettings::from_config(cfg);
  const WorstCaseCapacity cap = wc_multicast_capacity(cfg);
  const RatePoint p = robust_qoms_srm(cap.tau_max, cfg, rs, &cap);
  EXPECT_EQ(p.status, PointStatus::kOptimal);
  EXPECT_EQ(p.secrecy_rate, 0.0);
  EXPECT_GE(p.multicast_rate_achieved, cap.tau_max - 1e-5);
  EXPECT_EQ(robust_qoms_srm(cap.tau_max + 0.5, cfg, rs, &cap).status, PointStatus::kInfeasible);
}

TEST(RobustSrmTest, PrunedSearchMatchesExhaustiveScan) {
  SystemConfig cfg{reference_channels(0.2), 2.0};
  cfg.search_epsilon = 0.25;
  RobustSettings rs = RobustSettings::from_config(cfg);
  const RatePoint pruned = robust_qoms_srm(0.3, cfg, rs);
  rs.search_mode = search::Mode::kExhaustive;
  const RatePoint full = robust_qoms_srm(0.3, cfg, rs);
  ASSERT_EQ(pruned.status, PointStatus::kOptimal);
  ASSERT_EQ(full.status, PointStatus::kOptimal);
  EXPECT_GT(full.secrecy_rate, 0.0);
  EXPECT_GE(pruned.secrecy_rate, full.secrecy_rate - 0.25);
  EXPECT_LE(pruned.diagnostics.solver_calls, full.diagnostics.solver_calls);
}

class RobustSweepTest : public ::testing::Test {
 protected:
  static SystemConfig config(double eps) {
    SystemConfig cfg{reference_channels(eps), 100.0};
    cfg.search_epsilon = 0.05;
    cfg.grid_points = 4;
    return cfg;
  }
  static void SetUpTestSuite() {
    perfect_ = new RegionResult(region_sweep(config(0.0)));
    exact_ = new RegionResult(robust_region_sweep(config(0.0), RobustSettings::from_config(config(0.0))));
    // Shared targets so the two radii can be compared pointwise.
    taus_ = new std::vector<double>(tau_grid(wc_multicast_capacity(config(0.3)).tau_max, 4));
    mid_ = new RegionResult(robust_region_sweep(config(0.2), *taus_, RobustSettings::from_config(config(0.2))));
    wide_ = new RegionResult(robust_region_sweep(config(0.3), *taus_, RobustSettings::from_config(config(0.3))));
  }
  static void TearDownTestSuite() {
    delete perfect_;
    delete exact_;
    delete taus_;
    delete mid_;
    delete wide_;
  }
  static RegionResult* perfect_;
  static RegionResult* exact_;
  static std::vector<double>* taus_;
  static RegionResult* mid_;
  static RegionResult* wide_;
};
RegionResult* RobustSweepTest::perfect_ = nullptr;
RegionResult* RobustSweepTest::exact_ = nullptr;
std::vector<double>* RobustSweepTest::taus_ = nullptr;
RegionResult* RobustSweepTest::mid_ = nullptr;
RegionResult* RobustSweepTest::wide_ = nullptr;

TEST_F(RobustSweepTest, ZeroRadiiMatchesPerfectSweep) {
  const double tol = 2 * 0.05 + RobustSettings::from_config(config(0.0)).bisection_tol();
  ASSERT_EQ(exact_->points.size(), perfect_->points.size());
  EXPECT_EQ(exact_->scheme, "robust");
  EXPECT_NEAR(exact_->tau_max, perfect_->tau_max, 1e-5);
  for (std::size_t i = 0; i < exact_->points.size(); ++i) {
    EXPECT_NEAR(exact_->points[i].secrecy_rate, perfect_->points[i].secrecy_rate, tol) << i;
  }
}

TEST_F(RobustSweepTest, BoundaryDecreases) {
  for (const RegionResult* r : {exact_, mid_, wide_}) {
    EXPECT_EQ(r->failed_points(), 0);
    for (std::size_t i = 1; i < r->points.size(); ++i) {
      const RatePoint& a = r->points[i - 1];
      const RatePoint& b = r->points[i];
      if (b.status != PointStatus::kOptimal) continue;
      if (b.secrecy_rate > 0.0) EXPECT_GT(a.secrecy_rate, b.secrecy_rate - 1e-4) << i;
    }
  }
}

TEST_F(RobustSweepTest, UncertaintyShrinksTheRegion) {
  const RegionResult r = region_sweep(config(0.0), *taus_, SchemeOptions{});
  for (std::size_t i = 0; i < taus_->size(); ++i) {
    EXPECT_LE(wide_->points[i].secrecy_rate, mid_->points[i].secrecy_rate + 1e-4) << i;
    EXPECT_LE(mid_->points[i].secrecy_rate, r.points[i].secrecy_rate + 1e-4) << i;
  }
  EXPECT_GT(r.points[0].secrecy_rate, mid_->points[0].secrecy_rate + 0.1);
}

TEST_F(RobustSweepTest, CertifiedRatesHoldOverTheBall) {
  for (const RegionResult* r : {mid_, wide_}) {
    const ChannelSet& ch = r == mid_ ? reference_channels(0.2) : reference_channels(0.3);
    for (const RatePoint& p : r->points) {
      if (p.status != PointStatus::kOptimal) continue;
      const RateBreakdown wc = worst_case_eval(p.triple, ch, 10000, 9);
      EXPECT_GE(wc.secrecy_rate, p.secrecy_rate - 1e-3) << p.tau_ms;
      EXPECT_GE(wc.multicast_rate, p.tau_ms - 1e-3) << p.tau_ms;
      EXPECT_GE(p.diagnostics.qoms_slack, -1e-5) << p.tau_ms;
    }
  }
}

TEST_F(RobustSweepTest, ConfidentialCovarianceIsRankOne) {
  for (const RegionResult* r : {exact_, mid_, wide_}) {
    for (const RatePoint& p : r->points) {
      if (p.secrecy_rate > 0.0) EXPECT_LE(p.diagnostics.rank_ratio_qc, 1e-6) << p.tau_ms;
    }
  }
}

TEST_F(RobustSweepTest, CallsWithinBudget) {
  for (const RegionResult* r : {exact_, mid_, wide_}) {
    for (const RatePoint& p : r->points) EXPECT_LE(p.diagnostics.solver_calls, p.diagnostics.call_bound);
  }
  const RobustSettings rs = RobustSettings::from_config(config(0.2));
  EXPECT_EQ(mid_->points[0].diagnostics.call_bound, robust_call_bound(config(0.2), rs) + 2.0);
}

TEST(RobustRegionSweepTest, TwoPointGridIsTheEndpoints) {
  SystemConfig cfg{reference_channels(0.2), 100.0};
  cfg.search_epsilon = 0.1;
  cfg.grid_points = 2;
  const RegionResult r = robust_region_sweep(cfg, RobustSettings::from_config(cfg));
  ASSERT_EQ(r.points.size(), 2u);
  EXPECT_EQ(r.points[0].tau_ms, 0.0);
  EXPECT_GT(r.points[0].secrecy_rate, 0.0);
  EXPECT_EQ(r.points[1].tau_ms, r.tau_max);
  EXPECT_EQ(r.points[1].secrecy_rate, 0.0);
}

}  // namespace
}  // namespace secrate
