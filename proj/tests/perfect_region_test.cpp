#include "secrate/perfect_region.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace secrate {
namespace {

using testing::reference_channels;
using testing::random_channel;

ChannelSet two_user(const CRowVector& h1, const CRowVector& h2) {
  ChannelSet ch;
  ch.n_tx = static_cast<int>(h1.size());
  ch.channels = {h1, h2};
  ch.radii = {0.0, 0.0};
  return ch;
}

// Brute-force multicast capacity over rank-one and rank-two covariances
// P (l v v^H + (1 - l) w w^H) with v = (cos t, sin t e^{ip}) and w its
// orthogonal complement, on a 0.01 grid in t, p and l.
double grid_multicast_capacity(const ChannelSet& ch, double p) {
  double best = 0.0;
  const int nk = ch.size();
  std::vector<double> a(nk), b(nk);
  for (double t = 0.0; t <= std::numbers::pi / 2 + 1e-12; t += 0.01) {
    for (double ph = 0.0; ph < 2 * std::numbers::pi; ph += 0.01) {
      const Complex e = std::polar(1.0, ph);
      for (int k = 0; k < nk; ++k) {
        const CRowVector& h = ch.channels[k];
        a[k] = std::norm(h(0) * std::cos(t) + h(1) * std::sin(t) * e);
        b[k] = std::norm(-h(0) * std::sin(t) + h(1) * std::cos(t) * e);
      }
      for (int li = 0; li <= 100; ++li) {
        const double l = li / 100.0;
        double worst = std::numeric_limits<double>::infinity();
        for (int k = 0; k < nk; ++k) worst = std::min(worst, l * a[k] + (1 - l) * b[k]);
        best = std::max(best, worst);
      }
    }
  }
  return std::log2(1.0 + p * best);
}

TEST(MulticastCapacityTest, SingleReceiverIsBeamforming) {
  ChannelSet ch = reference_channels();
  ch.channels.resize(1);
  ch.radii.resize(1);
  const MulticastCapacity c = multicast_capacity({ch, 100.0});
  EXPECT_NEAR(c.tau_max, std::log2(1.0 + 100.0 * ch.channels[0].squaredNorm()), 1e-6);
  EXPECT_LE(rank_ratio(c.q0), 1e-6);
}

TEST(MulticastCapacityTest, DuplicateReceiverChangesNothing) {
  const ChannelSet base = reference_channels();
  const ChannelSet dup = two_user(base.channels[2], base.channels[2]);
  const MulticastCapacity c = multicast_capacity({dup, 10.0});
  EXPECT_NEAR(c.tau_max, std::log2(1.0 + 10.0 * base.channels[2].squaredNorm()), 1e-6);
}

TEST(MulticastCapacityTest, MatchesBruteForceGrid) {
  const ChannelSet ch = reference_channels();
  const MulticastCapacity c = multicast_capacity({ch, 100.0});
  const double grid = grid_multicast_capacity(ch, 100.0);
  EXPECT_GE(c.tau_max, grid - 1e-7);
  EXPECT_LE(c.tau_max - grid, 0.02);
  // The recovered covariance achieves the value.
  const RateBreakdown r = rates({c.q0, HermitianMatrix::zero(2), HermitianMatrix::zero(2)}, ch);
  EXPECT_NEAR(r.multicast_rate, c.tau_max, 1e-6);
  EXPECT_LE(c.q0.trace(), 100.0 * (1 + 1e-7));
}

TEST(MulticastCapacityTest, ZeroPower) {
  const MulticastCapacity c = multicast_capacity({reference_channels(), 0.0});
  EXPECT_EQ(c.tau_max, 0.0);
}

// With alpha = 1 and one eavesdropper, Qc must null the eavesdropper and
// the best legitimate SNR is the zero-forcing one.
TEST(InnerSdpTest, ZeroForcingAtUnitAlpha) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const CRowVector h1 = random_channel(2, rng), h2 = random_channel(2, rng);
    const double p = 10.0;
    // h1 (I - h2^H h2 / |h2|^2)
    const CRowVector proj = h1 - ((h1 * h2.adjoint())(0, 0) / h2.squaredNorm()) * h2;
    const double zf_snr = p * proj.squaredNorm();
    for (bool an : {true, false}) {
      const InnerSolution s = inner_sdp(1.0, 0.0, {two_user(h1, h2), p}, {an});
      ASSERT_TRUE(s.feasible()) << sdp::to_string(s.status);
      EXPECT_NEAR(s.eta * s.alpha - 1.0, zf_snr, 1e-5 * (1.0 + zf_snr));
    }
  }
}

TEST(InnerSdpTest, UnreachableMulticastTargetIsInfeasible) {
  const ChannelSet ch = reference_channels();
  double min_gain = std::numeric_limits<double>::infinity();
  for (const auto& h : ch.channels) min_gain = std::min(min_gain, h.squaredNorm());
  const InnerSolution s = inner_sdp(3.0, 1.1 * 100.0 * min_gain, {ch, 100.0});
  EXPECT_EQ(s.status, sdp::Status::kInfeasible);
  EXPECT_FALSE(quasiconvex_oracle(3.0, 1.1 * 100.0 * min_gain, {ch, 100.0}).has_value());
}

TEST(InnerSdpTest, SolutionInvariants) {
  const SystemConfig cfg{reference_channels(), 100.0};
  const ChannelSet& ch = cfg.channels;
  const CRowVector& h1 = ch.channels[0];
  for (double alpha : {1.3, 2.6, 20.0, 300.0}) {
    for (double tp : {0.0, 4.0, 30.0}) {
      const InnerSolution s = inner_sdp(alpha, tp, cfg);
      ASSERT_TRUE(s.feasible()) << alpha << " " << tp;
      EXPECT_NEAR(alpha * s.xi + alpha * s.gamma.quad(h1), 1.0, 1e-6);
      const CovarianceTriple& q = s.triple;
      EXPECT_LE(q.total_power(), 100.0 * (1 + 1e-6));
      for (int k = 1; k < ch.size(); ++k) {
        const CRowVector& h = ch.channels[k];
        EXPECT_LE(q.qc.quad(h), (alpha - 1.0) * (1.0 + q.qa.quad(h)) + 1e-6 * (1.0 + q.qc.quad(h)));
      }
      for (const auto& h : ch.channels) {
        const double rhs = tp * (1.0 + q.qc.quad(h) + q.qa.quad(h));
        EXPECT_GE(q.q0.quad(h), rhs - 1e-6 * (1.0 + rhs));
      }
      const double ratio = (1.0 + q.qc.quad(h1) + q.qa.quad(h1)) / (alpha * (1.0 + q.qa.quad(h1)));
      EXPECT_NEAR(ratio, s.eta, 1e-6 * s.eta);
    }
  }
}

TEST(InnerSdpTest, RejectsOutOfRangeArguments) {
  const SystemConfig cfg{reference_channels(), 100.0};
  EXPECT_THROW(inner_sdp(0.99, 0.0, cfg), ValidationError);
  EXPECT_THROW(inner_sdp(1.0 + 100.0 * 4.75, 0.0, cfg), ValidationError);
  EXPECT_THROW(inner_sdp(2.0, -0.1, cfg), ValidationError);
}

TEST(QuasiconvexOracleTest, AgreesWithCharnesCooperSdp) {
  const SystemConfig cfg{reference_channels(), 100.0};
  const double alpha_max = 1.0 + 100.0 * cfg.channels.channels[0].squaredNorm();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ua(1.0, alpha_max), ut(0.0, 50.0);
  int compared = 0;
  for (int i = 0; i < 50; ++i) {
    const double alpha = ua(rng), tp = i % 3 == 0 ? 0.0 : ut(rng);
    const SchemeOptions opt{i % 2 == 0};
    const InnerSolution s = inner_sdp(alpha, tp, cfg, opt);
    const auto o = quasiconvex_oracle(alpha, tp, cfg, opt);
    ASSERT_EQ(s.feasible(), o.has_value()) << alpha << " " << tp;
    if (!o) continue;
    EXPECT_NEAR(s.eta, o->eta, 1e-4 * o->eta) << alpha << " " << tp;
    ++compared;
  }
  EXPECT_GE(compared, 40);
}

// Eavesdropper identical to the legitimate receiver at alpha = 1: nothing
// confidential can be sent and the ratio collapses to 1 / alpha.
TEST(QuasiconvexOracleTest, IdenticalEavesdropper) {
  const CRowVector h = reference_channels().channels[0];
  const SystemConfig cfg{two_user(h, h), 10.0};
  const auto o = quasiconvex_oracle(1.0, 0.0, cfg);
  ASSERT_TRUE(o.has_value());
  EXPECT_NEAR(o->eta, 1.0, 1e-6);
  const InnerSolution s = inner_sdp(1.0, 0.0, cfg);
  ASSERT_TRUE(s.feasible());
  EXPECT_NEAR(s.eta, 1.0, 1e-6);
}

TEST(QomsSrmTest, PrunedSearchMatchesExhaustiveScan) {
  SystemConfig cfg{reference_channels(), 10.0};
  cfg.search_epsilon = 0.3;
  for (double tau : {0.0, 1.5}) {
    const RatePoint pruned = qoms_srm(tau, cfg, {true, search::Mode::kPruned});
    const RatePoint full = qoms_srm(tau, cfg, {true, search::Mode::kExhaustive});
    ASSERT_EQ(pruned.status, PointStatus::kOptimal);
    ASSERT_EQ(full.status, PointStatus::kOptimal);
    EXPECT_GE(pruned.secrecy_rate, full.secrecy_rate - 0.25 * cfg.search_epsilon);
    EXPECT_LT(pruned.diagnostics.solver_calls, full.diagnostics.solver_calls);
  }
}

TEST(QomsSrmTest, WithinEpsilonOfDenseAlphaScan) {
  SystemConfig cfg{reference_channels(), 10.0};
  cfg.search_epsilon = 0.2;
  const RatePoint pt = qoms_srm(1.0, cfg);
  ASSERT_EQ(pt.status, PointStatus::kOptimal);
  const double alpha_max = 1.0 + 10.0 * cfg.channels.channels[0].squaredNorm();
  double dense = 0.0;
  for (int i = 1; i <= 400; ++i) {
    const InnerSolution s = inner_sdp(1.0 + (alpha_max - 1.0) * i / 400.0, pt.tau_prime, cfg);
    if (s.feasible()) dense = std::max(dense, std::log2(s.eta));
  }
  EXPECT_GE(pt.secrecy_rate, dense - cfg.search_epsilon);
}

TEST(QomsSrmTest, CallsWithinBudget) {
  const SystemConfig cfg{reference_channels(), 100.0};
  for (double tau : {0.0, 2.0, 5.0}) {
    const RatePoint pt = qoms_srm(tau, cfg);
    ASSERT_EQ(pt.status, PointStatus::kOptimal);
    EXPECT_LE(pt.diagnostics.solver_calls, perfect_call_bound(cfg) + 1.0);
    EXPECT_EQ(pt.diagnostics.call_bound, perfect_call_bound(cfg) + 1.0);
  }
}

TEST(QomsSrmTest, CapacityEndpointStopsConfidentialService) {
  const SystemConfig cfg{reference_channels(), 100.0};
  const MulticastCapacity cap = multicast_capacity(cfg);
  const RatePoint pt = qoms_srm(cap.tau_max, cfg, {}, &cap);
  EXPECT_EQ(pt.status, PointStatus::kOptimal);
  EXPECT_EQ(pt.secrecy_rate, 0.0);
  EXPECT_LE(pt.triple.qc.trace(), 1e-9);
  EXPECT_NEAR(pt.multicast_rate_achieved, cap.tau_max, 1e-6);
}

TEST(QomsSrmTest, AboveCapacityIsInfeasible) {
  const SystemConfig cfg{reference_channels(), 100.0};
  const MulticastCapacity cap = multicast_capacity(cfg);
  const RatePoint pt = qoms_srm(cap.tau_max + 0.1, cfg, {}, &cap);
  EXPECT_EQ(pt.status, PointStatus::kInfeasible);
  EXPECT_EQ(pt.message, "QoMS target infeasible");
}

TEST(QomsSrmTest, ReportedRateIsAchievedByTheTriple) {
  const SystemConfig cfg{reference_channels(), 100.0};
  for (bool an : {true, false}) {
    for (double tau : {0.0, 1.0, 3.0, 5.5}) {
      const RatePoint pt = qoms_srm(tau, cfg, {an});
      ASSERT_EQ(pt.status, PointStatus::kOptimal);
      const RateBreakdown r = rates(pt.triple, cfg.channels);
      EXPECT_GE(r.multicast_rate, tau - 1e-5);
      EXPECT_GE(r.secrecy_rate, pt.secrecy_rate - 1e-4);
      EXPECT_GE(pt.diagnostics.qoms_slack, -1e-5);
    }
  }
}

// Two receivers: the optimal multicast covariance is rank one and the
// artificial noise has rank at most one.
TEST(QomsSrmTest, TwoReceiverRankStructure) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    const SystemConfig cfg{two_user(random_channel(2, rng), random_channel(2, rng)), 10.0};
    const MulticastCapacity cap = multicast_capacity(cfg);
    const RatePoint pt = qoms_srm(0.5 * cap.tau_max, cfg, {}, &cap);
    ASSERT_EQ(pt.status, PointStatus::kOptimal);
    if (pt.secrecy_rate <= 0.0) continue;
    EXPECT_LE(pt.diagnostics.rank_ratio_qc, 1e-6);
    EXPECT_LE(pt.diagnostics.rank_ratio_q0, 1e-6);
    EXPECT_LE(pt.diagnostics.rank_ratio_qa, 1e-6);
  }
}

class ReferenceSweepTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const SystemConfig cfg{reference_channels(), 100.0};
    with_an_ = new RegionResult(region_sweep(cfg, SchemeOptions{true}));
    without_an_ = new RegionResult(region_sweep(cfg, SchemeOptions{false}));
  }
  static void TearDownTestSuite() {
    delete with_an_;
    delete without_an_;
  }
  static RegionResult* with_an_;
  static RegionResult* without_an_;
};
RegionResult* ReferenceSweepTest::with_an_ = nullptr;
RegionResult* ReferenceSweepTest::without_an_ = nullptr;

TEST_F(ReferenceSweepTest, GridCoversCapacityInterval) {
  for (const RegionResult* r : {with_an_, without_an_}) {
    ASSERT_EQ(r->points.size(), 25u);
    EXPECT_EQ(r->points.front().tau_ms, 0.0);
    EXPECT_EQ(r->points.back().tau_ms, r->tau_max);
    for (std::size_t i = 1; i < r->points.size(); ++i) EXPECT_GT(r->points[i].tau_ms, r->points[i - 1].tau_ms);
    EXPECT_EQ(r->failed_points(), 0);
  }
  EXPECT_EQ(with_an_->scheme, "optimal");
  EXPECT_EQ(without_an_->scheme, "no-an");
}

TEST_F(ReferenceSweepTest, BoundaryDecreases) {
  for (const RegionResult* r : {with_an_, without_an_}) {
    for (std::size_t i = 1; i < r->points.size(); ++i) {
      const RatePoint& a = r->points[i - 1];
      const RatePoint& b = r->points[i];
      if (b.secrecy_rate > 0.0) EXPECT_GT(a.secrecy_rate, b.secrecy_rate - 1e-4) << i;
    }
  }
}

TEST_F(ReferenceSweepTest, ArtificialNoiseDominates) {
  for (std::size_t i = 0; i < with_an_->points.size(); ++i) {
    EXPECT_GE(with_an_->points[i].secrecy_rate, without_an_->points[i].secrecy_rate - 1e-4) << i;
  }
  EXPECT_NEAR(with_an_->points.back().secrecy_rate, without_an_->points.back().secrecy_rate, 1e-2);
}

TEST_F(ReferenceSweepTest, MulticastConstraintIsActive) {
  for (const RegionResult* r : {with_an_, without_an_}) {
    for (std::size_t i = 1; i + 1 < r->points.size(); ++i) {
      const RatePoint& p = r->points[i];
      if (p.secrecy_rate > 0.0) EXPECT_LE(p.diagnostics.qoms_slack, 1e-3) << i;
      EXPECT_GE(p.diagnostics.qoms_slack, -1e-5) << i;
    }
  }
}

TEST_F(ReferenceSweepTest, ConfidentialCovarianceIsRankOne) {
  for (const RegionResult* r : {with_an_, without_an_}) {
    for (const RatePoint& p : r->points) {
      if (p.secrecy_rate > 0.0) EXPECT_LE(p.diagnostics.rank_ratio_qc, 1e-6) << p.tau_ms;
    }
  }
}

TEST_F(ReferenceSweepTest, CallsWithinBudget) {
  const double bound = perfect_call_bound({reference_channels(), 100.0}) + 1.0;
  for (const RegionResult* r : {with_an_, without_an_}) {
    for (const RatePoint& p : r->points) EXPECT_LE(p.diagnostics.solver_calls, bound);
  }
}

TEST(RegionSweepTest, TwoPointGridIsTheEndpoints) {
  SystemConfig cfg{reference_channels(), 100.0};
  cfg.grid_points = 2;
  const RegionResult r = region_sweep(cfg);
  ASSERT_EQ(r.points.size(), 2u);
  EXPECT_EQ(r.points[0].tau_ms, 0.0);
  EXPECT_GT(r.points[0].secrecy_rate, 0.0);
  EXPECT_EQ(r.points[1].tau_ms, r.tau_max);
  EXPECT_EQ(r.points[1].secrecy_rate, 0.0);
}

TEST(RegionSweepTest, TargetsAboveCapacityAreReportedInfeasible) {
  const SystemConfig cfg{reference_channels(), 100.0};
  const RegionResult r = region_sweep(cfg, std::vector<double>{0.5, 10.0}, SchemeOptions{});
  ASSERT_EQ(r.points.size(), 2u);
  EXPECT_EQ(r.points[0].status, PointStatus::kOptimal);
  EXPECT_EQ(r.points[1].status, PointStatus::kInfeasible);
}

TEST(RankDiagnosticsTest, Ratios) {
  EXPECT_EQ(rank_ratio(HermitianMatrix::zero(2)), 0.0);
  CRowVector v(2);
  v << Complex(1.0, 2.0), Complex(-0.5, 0.1);
  EXPECT_LE(rank_ratio(HermitianMatrix::outer(v)), 1e-12);
  EXPECT_NEAR(rank_ratio(HermitianMatrix::identity(3)), 1.0, 1e-12);
  const RankDiagnostics d = rank_diagnostics({HermitianMatrix::identity(2), HermitianMatrix::outer(v),
                                              HermitianMatrix::zero(2)});
  EXPECT_FALSE(d.q0_rank_one);
  EXPECT_TRUE(d.qc_rank_one);
  EXPECT_TRUE(d.qa_rank_one);
}

TEST(TauGridTest, EndpointsExact) {
  const std::vector<double> g = tau_grid(5.731544, 25);
  ASSERT_EQ(g.size(), 25u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 5.731544);
  EXPECT_THROW(tau_grid(1.0, 1), ValidationError);
}

}  // namespace
}  // namespace secrate
