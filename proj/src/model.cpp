#include "secrate/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace secrate {

bool ChannelSet::perfect() const {
  return std::all_of(radii.begin(), radii.end(), [](double r) { return r == 0.0; });
}

ChannelSet ChannelSet::nominal() const {
  ChannelSet out = *this;
  out.radii.assign(channels.size(), 0.0);
  return out;
}

void ChannelSet::validate(int min_receivers) const {
  if (n_tx < 1) throw ValidationError("n_tx must be positive");
  if (size() < min_receivers) {
    std::ostringstream os;
    os << "need at least " << min_receivers << " receivers, got " << size();
    throw ValidationError(os.str());
  }
  if (!radii.empty() && radii.size() != channels.size()) {
    throw ValidationError("radii count does not match channel count");
  }
  for (int k = 0; k < size(); ++k) {
    const auto& h = channels[k];
    if (h.size() != n_tx) {
      std::ostringstream os;
      os << "channel " << k + 1 << " has " << h.size() << " entries, expected " << n_tx;
      throw ValidationError(os.str());
    }
    if (!h.allFinite()) throw ValidationError("channel entries must be finite");
    const double r = radius(k);
    if (!std::isfinite(r) || r < 0.0) throw ValidationError("radii must be finite and nonnegative");
    if (r > 0.0 && r >= h.norm()) {
      std::ostringstream os;
      os << "radius of receiver " << k + 1 << " must be below the channel norm";
      throw ValidationError(os.str());
    }
  }
}

double default_bisection_tol(double eps) { return std::min(1e-4, (1.0 - std::exp2(-eps)) / 10.0); }

double SystemConfig::eps_b() const {
  return bisection_tol > 0.0 ? bisection_tol : default_bisection_tol(search_epsilon);
}

void SystemConfig::validate(int min_receivers) const {
  channels.validate(min_receivers);
  if (!std::isfinite(power) || power < 0.0) throw ValidationError("power must be finite and nonnegative");
  if (!(search_epsilon > 0.0)) throw ValidationError("search epsilon must be positive");
  if (bisection_tol < 0.0) throw ValidationError("bisection tolerance must be positive");
  if (eps_b() >= 1.0 - std::exp2(-search_epsilon)) {
    throw ValidationError("bisection tolerance must be below 1 - 2^-eps");
  }
  if (grid_points < 2) throw ValidationError("grid needs at least two points");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

CovarianceTriple CovarianceTriple::zero(int n_tx) {
  return {HermitianMatrix::zero(n_tx), HermitianMatrix::zero(n_tx), HermitianMatrix::zero(n_tx)};
}

CovarianceTriple CovarianceTriple::clipped() const { return {q0.clipped(), qc.clipped(), qa.clipped()}; }

HermitianMatrix reduce_rank(const HermitianMatrix& x, const std::vector<CRowVector>& hs) {
  const Complex i(0.0, 1.0);
  CMatrix cur = x.matrix();
  for (;;) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (cur + cur.adjoint()));
    const Eigen::VectorXd& ev = es.eigenvalues();
    const int n = static_cast<int>(ev.size());
    const double top = n > 0 ? ev(n - 1) : 0.0;
    if (top <= 0.0) break;
    std::vector<int> keep;
    for (int j = 0; j < n; ++j) {
      if (ev(j) > 1e-12 * top) keep.push_back(j);
    }
    const int r = static_cast<int>(keep.size());
    if (r <= 1) break;
    CMatrix v(n, r);
    for (int c = 0; c < r; ++c) v.col(c) = es.eigenvectors().col(keep[c]) * std::sqrt(ev(keep[c]));

    // Hermitian directions D (r x r) with h V D V^H h^H = 0 for every
    // channel and Tr(V D V^H) = 0.
    std::vector<CMatrix> basis;
    for (int a = 0; a < r; ++a) {
      for (int b = a; b < r; ++b) {
        CMatrix e = CMatrix::Zero(r, r);
        e(a, b) = 1.0;
        e(b, a) = 1.0;
        if (a == b) e(a, a) = 1.0;
        basis.push_back(e);
        if (a != b) {
          CMatrix f = CMatrix::Zero(r, r);
          f(a, b) = i;
          f(b, a) = -i;
          basis.push_back(f);
        }
      }
    }
    const int m = static_cast<int>(hs.size()) + 1;
    const int d = static_cast<int>(basis.size());
    Eigen::MatrixXd a(m, d);
    const CMatrix gram = v.adjoint() * v;
    for (int c = 0; c < d; ++c) {
      for (std::size_t k = 0; k < hs.size(); ++k) {
        const CRowVector w = hs[k] * v;
        a(static_cast<int>(k), c) = (w * basis[c] * w.adjoint())(0, 0).real();
      }
      a(m - 1, c) = (basis[c] * gram).trace().real();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double scale = sv.size() > 0 ? sv(0) : 1.0;
    if (d <= m && sv(d - 1) > 1e-10 * scale) break;
    const Eigen::VectorXd dir = svd.matrixV().col(d - 1);
    CMatrix dm = CMatrix::Zero(r, r);
    for (int c = 0; c < d; ++c) dm += dir(c) * basis[c];
    Eigen::SelfAdjointEigenSolver<CMatrix> ds(dm, Eigen::EigenvaluesOnly);
    const double lo = ds.eigenvalues()(0), hi = ds.eigenvalues()(r - 1);
    const double lam = std::abs(hi) >= std::abs(lo) ? hi : lo;
    if (lam == 0.0) break;
    const CMatrix next = v * (CMatrix::Identity(r, r) - dm / lam) * v.adjoint();
    cur = 0.5 * (next + next.adjoint());
  }
  return HermitianMatrix::symmetrized(cur).clipped();
}

namespace {

void check_dims(const CovarianceTriple& q, const ChannelSet& ch) {
  if (q.q0.dim() != ch.n_tx || q.qc.dim() != ch.n_tx || q.qa.dim() != ch.n_tx) {
    throw ValidationError("covariance dimension does not match n_tx");
  }
  for (const auto& h : ch.channels) {
    if (h.size() != ch.n_tx) throw ValidationError("channel length does not match n_tx");
  }
  if (ch.size() < 1) throw ValidationError("no channels");
}

// SINR-type ratios at a concrete channel.
double multicast_sinr(const CovarianceTriple& q, const CRowVector& h) {
  return q.q0.quad(h) / (1.0 + q.qc.quad(h) + q.qa.quad(h));
}
double confidential_sinr(const CovarianceTriple& q, const CRowVector& h) {
  return q.qc.quad(h) / (1.0 + q.qa.quad(h));
}

void finish(RateBreakdown& r) {
  r.multicast_rate = *std::min_element(r.multicast_per_rx.begin(), r.multicast_per_rx.end());
  double worst_eave = 0.0;
  for (double e : r.eaves_per_rx) worst_eave = std::max(worst_eave, e);
  r.secrecy_rate = std::max(0.0, r.legit_rate - worst_eave);
}

double log2p(double x) { return std::log2(1.0 + std::max(0.0, x)); }

// Real representation of the column h^H so that h M h^H = w' embed(M) w.
Eigen::VectorXd real_column(const CRowVector& h) {
  const int n = static_cast<int>(h.size());
  Eigen::VectorXd w(2 * n);
  for (int i = 0; i < n; ++i) {
    w(i) = h(i).real();
    w(n + i) = -h(i).imag();
  }
  return w;
}

CRowVector from_real_column(const Eigen::VectorXd& w) {
  const int n = static_cast<int>(w.size() / 2);
  CRowVector h(n);
  for (int i = 0; i < n; ++i) h(i) = Complex(w(i), -w(n + i));
  return h;
}

// min d'Sd + 2g'd subject to |d| <= r.
Eigen::VectorXd trust_region(const Eigen::MatrixXd& s, const Eigen::VectorXd& g, double r) {
  const int n = static_cast<int>(g.size());
  if (r <= 0.0) return Eigen::VectorXd::Zero(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const Eigen::VectorXd lam = es.eigenvalues();
  const Eigen::MatrixXd& v = es.eigenvectors();
  const Eigen::VectorXd gp = v.transpose() * g;
  const double smin = lam(0);
  const double scale = std::max({1.0, lam.cwiseAbs().maxCoeff(), g.norm()});

  auto step = [&](double mu) {
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) {
      const double den = lam(i) + mu;
      c(i) = den > 0.0 ? -gp(i) / den : 0.0;
    }
    return c;
  };
  // Interior Newton point.
  if (smin > 1e-14 * scale) {
    const Eigen::VectorXd c = step(0.0);
    if (c.norm() <= r) return v * c;
  }
  const double lo = std::max(0.0, -smin);
  // Hard case: g has no weight on the bottom eigenspace and the shifted
  // step stays strictly inside the ball.
  const double tol = 1e-10 * scale;
  bool orth = true;
  for (int i = 0; i < n; ++i) {
    if (lam(i) - smin <= tol && std::abs(gp(i)) > 1e-12 * scale) orth = false;
  }
  if (orth && -smin >= 0.0) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (lam(i) - smin > tol) c(i) = -gp(i) / (lam(i) - smin);
    }
    if (c.norm() <= r) {
      c(0) += std::sqrt(std::max(0.0, r * r - c.squaredNorm()));
      return v * c;
    }
  }
  // Boundary solution: |step(mu)| = r on (lo, hi].
  double a = lo;
  double b = lo + g.norm() / r + 1e-300;
  while (step(b).norm() > r) b = lo + 2.0 * (b - lo);
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    if (step(m).norm() > r) {
      a = m;
    } else {
      b = m;
    }
  }
  return v * step(b);
}

// Dinkelbach iteration for min (h A h^H) / (1 + h B h^H) over the ball.
RatioExtreme min_ratio(const CRowVector& hc, double eps, const CMatrix& a, const CMatrix& b) {
  auto qa = [&](const CRowVector& h) { return (h * a * h.adjoint())(0, 0).real(); };
  auto qb = [&](const CRowVector& h) { return (h * b * h.adjoint())(0, 0).real(); };
  auto ratio = [&](const CRowVector& h) { return qa(h) / (1.0 + qb(h)); };
  CRowVector best_e = CRowVector::Zero(hc.size());
  double lambda = ratio(hc);
  if (eps <= 0.0) return {lambda, best_e};
  const Eigen::VectorXd w0 = real_column(hc);
  for (int it = 0; it < 100; ++it) {
    const CMatrix m = a - lambda * b;
    const Eigen::MatrixXd s = embed_complex(0.5 * (m + m.adjoint()));
    const Eigen::VectorXd d = trust_region(s, s * w0, eps);
    const CRowVector e = from_real_column(d);
    const CRowVector h = hc + e;
    const double f = qa(h) - lambda * (1.0 + qb(h));
    if (f >= -1e-14 * (std::abs(qa(h)) + std::abs(lambda) * (1.0 + qb(h)) + 1e-300)) break;
    const double next = ratio(h);
    if (!(next < lambda)) break;
    lambda = next;
    best_e = e;
  }
  return {lambda, best_e};
}

}  // namespace

RatioExtreme min_ratio_over_ball(const CRowVector& hc, double eps, const HermitianMatrix& a,
                                 const HermitianMatrix& b) {
  return min_ratio(hc, eps, a.matrix(), b.matrix());
}

RatioExtreme max_ratio_over_ball(const CRowVector& hc, double eps, const HermitianMatrix& a,
                                 const HermitianMatrix& b) {
  RatioExtreme r = min_ratio(hc, eps, -a.matrix(), b.matrix());
  r.value = -r.value;
  return r;
}

RateBreakdown rates(const CovarianceTriple& q, const ChannelSet& ch) {
  check_dims(q, ch);
  RateBreakdown r;
  for (const auto& h : ch.channels) r.multicast_per_rx.push_back(log2p(multicast_sinr(q, h)));
  r.legit_rate = log2p(confidential_sinr(q, ch.channels[0]));
  for (int k = 1; k < ch.size(); ++k) r.eaves_per_rx.push_back(log2p(confidential_sinr(q, ch.channels[k])));
  finish(r);
  return r;
}

std::vector<CRowVector> sample_unit_ball(int n, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<CRowVector> out;
  out.reserve(count);
  for (int s = 0; s < count; ++s) {
    CRowVector e(n);
    for (int i = 0; i < n; ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      e(i) = Complex(re, im);
    }
    const double nrm = e.norm();
    const double radius = std::pow(unif(rng), 1.0 / (2.0 * n));
    out.push_back(nrm > 0.0 ? CRowVector(e * (radius / nrm)) : CRowVector::Zero(n));
  }
  return out;
}

RateBreakdown worst_case_eval_at(const CovarianceTriple& q, const ChannelSet& ch,
                                 const std::vector<std::vector<CRowVector>>& errors) {
  check_dims(q, ch);
  if (static_cast<int>(errors.size()) != ch.size()) throw ValidationError("one error set per receiver required");
  RateBreakdown r;
  const int k_total = ch.size();
  for (int k = 0; k < k_total; ++k) {
    const auto& hc = ch.channels[k];
    double m_min = multicast_sinr(q, hc);
    double c_min = confidential_sinr(q, hc);
    double c_max = c_min;
    for (const auto& e : errors[k]) {
      const CRowVector h = hc + e;
      m_min = std::min(m_min, multicast_sinr(q, h));
      const double c = confidential_sinr(q, h);
      c_min = std::min(c_min, c);
      c_max = std::max(c_max, c);
    }
    r.multicast_per_rx.push_back(log2p(m_min));
    if (k == 0) {
      r.legit_rate = log2p(c_min);
    } else {
      r.eaves_per_rx.push_back(log2p(c_max));
    }
  }
  finish(r);
  return r;
}

RateBreakdown worst_case_eval(const CovarianceTriple& q, const ChannelSet& ch, int n_samples,
                              std::uint64_t seed) {
  check_dims(q, ch);
  if (n_samples < 1) throw ValidationError("n_samples must be at least 1");
  std::vector<std::vector<CRowVector>> errors(ch.size());
  for (int k = 0; k < ch.size(); ++k) {
    const double eps = ch.radius(k);
    if (eps <= 0.0) continue;
    const auto& hc = ch.channels[k];
    const CRowVector radial = hc * (eps / hc.norm());
    errors[k].push_back(radial);
    errors[k].push_back(-radial);
    for (const auto& u : sample_unit_ball(ch.n_tx, n_samples, seed + 0x9e3779b97f4a7c15ULL * (k + 1))) {
      errors[k].push_back(u * eps);
    }
  }
  return worst_case_eval_at(q, ch, errors);
}

RateBreakdown exact_worst_case(const CovarianceTriple& q, const ChannelSet& ch) {
  check_dims(q, ch);
  RateBreakdown r;
  const HermitianMatrix interference = q.qc + q.qa;
  for (int k = 0; k < ch.size(); ++k) {
    const auto& hc = ch.channels[k];
    const double eps = ch.radius(k);
    r.multicast_per_rx.push_back(log2p(min_ratio_over_ball(hc, eps, q.q0, interference).value));
    if (k == 0) {
      r.legit_rate = log2p(min_ratio_over_ball(hc, eps, q.qc, q.qa).value);
    } else {
      r.eaves_per_rx.push_back(log2p(max_ratio_over_ball(hc, eps, q.qc, q.qa).value));
    }
  }
  finish(r);
  return r;
}

std::pair<double, double> ball_extremes(const CRowVector& h, double eps) {
  const double n = h.norm();
  if (!(eps >= 0.0)) throw ValidationError("radius must be nonnegative");
  if (eps > 0.0 && eps >= n) throw ValidationError("radius must be below the channel norm");
  return {(n - eps) * (n - eps), (n + eps) * (n + eps)};
}

}  // namespace secrate
