#include "secrate/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <cstdio>
#include <sstream>

namespace secrate::sdp {

// ---------------------------------------------------------------------------
// Modeling layer

AffineHermitian::AffineHermitian(int dim) : dim_(dim), constant_(CMatrix::Zero(dim, dim)) {
  if (dim < 1) throw ValidationError("affine expression dimension must be positive");
}

AffineHermitian& AffineHermitian::add_constant(const CMatrix& c) {
  if (c.rows() != dim_ || c.cols() != dim_) {
    throw ValidationError("constant term has wrong shape");
  }
  constant_ += c;
  return *this;
}

AffineHermitian& AffineHermitian::add_constant(double c) {
  constant_ += c * CMatrix::Identity(dim_, dim_);
  return *this;
}

AffineHermitian& AffineHermitian::add_congruence(Var x, const CMatrix& left, double coeff) {
  if (left.rows() != dim_) throw ValidationError("congruence factor has wrong row count");
  if (coeff != 0.0) congruences_.push_back({x, left, coeff});
  return *this;
}

AffineHermitian& AffineHermitian::add_scaled(Var x, const CMatrix& m) {
  if (m.rows() != dim_ || m.cols() != dim_) throw ValidationError("scaled term has wrong shape");
  scaled_.push_back({x, m});
  return *this;
}

AffineHermitian& AffineHermitian::add_scaled(Var x, double c) {
  return add_scaled(x, c * CMatrix::Identity(dim_, dim_));
}

AffineHermitian& AffineHermitian::add_trace(Var x, int block_dim, double coeff) {
  if (dim_ != 1) throw ValidationError("trace term requires a scalar expression");
  for (int i = 0; i < block_dim; ++i) {
    CMatrix e = CMatrix::Zero(1, block_dim);
    e(0, i) = 1.0;
    add_congruence(x, e, coeff);
  }
  return *this;
}

AffineHermitian& AffineHermitian::add_quad(Var x, const CRowVector& h, double coeff) {
  if (dim_ != 1) throw ValidationError("quadratic-form term requires a scalar expression");
  return add_congruence(x, CMatrix(h), coeff);
}

CMatrix AffineHermitian::evaluate(const Assignment& values) const {
  CMatrix out = constant_;
  for (const auto& t : congruences_) {
    out += t.coeff * (t.left * values.at(t.var.block) * t.left.adjoint());
  }
  for (const auto& t : scaled_) {
    out += values.at(t.var.block)(0, 0).real() * t.m;
  }
  return out;
}

Var Problem::add_block(BlockKind kind, int dim, std::string name) {
  if (dim < 1) throw ValidationError("block dimension must be positive");
  blocks_.push_back({kind, dim, std::move(name)});
  return Var{static_cast<int>(blocks_.size()) - 1};
}

Var Problem::add_hermitian_psd(int dim, std::string name) {
  return add_block(BlockKind::kHermitianPsd, dim, std::move(name));
}

Var Problem::add_nonnegative(std::string name) {
  return add_block(BlockKind::kNonnegativeScalar, 1, std::move(name));
}

Var Problem::add_free(std::string name) {
  return add_block(BlockKind::kFreeScalar, 1, std::move(name));
}

void Problem::add_psd(AffineHermitian f) { psd_.push_back(std::move(f)); }

void Problem::add_equality(AffineHermitian f) {
  if (f.dim() != 1) throw ValidationError("equality constraints must be scalar");
  eq_.push_back(std::move(f));
}

void Problem::maximize(AffineHermitian f) {
  if (f.dim() != 1) throw ValidationError("objective must be scalar");
  objective_ = std::move(f);
  maximize_ = true;
}

void Problem::minimize(AffineHermitian f) {
  if (f.dim() != 1) throw ValidationError("objective must be scalar");
  objective_ = std::move(f);
  maximize_ = false;
}

namespace {

void validate_expr(const AffineHermitian& f, const std::vector<BlockInfo>& blocks,
                   const char* where) {
  auto fail = [&](const std::string& msg) {
    throw ValidationError(std::string(where) + ": " + msg);
  };
  if (!f.constant().allFinite()) fail("non-finite constant");
  if ((f.constant() - f.constant().adjoint()).cwiseAbs().maxCoeff() > 1e-9) {
    fail("constant term is not Hermitian");
  }
  for (const auto& t : f.congruences()) {
    if (t.var.block < 0 || t.var.block >= static_cast<int>(blocks.size())) {
      fail("undeclared block");
    }
    const auto& b = blocks[t.var.block];
    if (b.kind != BlockKind::kHermitianPsd) fail("congruence term on a scalar block");
    if (t.left.cols() != b.dim) fail("congruence factor column count mismatch");
    if (!t.left.allFinite() || !std::isfinite(t.coeff)) fail("non-finite coefficient");
  }
  for (const auto& t : f.scaled()) {
    if (t.var.block < 0 || t.var.block >= static_cast<int>(blocks.size())) {
      fail("undeclared block");
    }
    if (blocks[t.var.block].kind == BlockKind::kHermitianPsd) fail("scaled term on a matrix block");
    if (!t.m.allFinite()) fail("non-finite coefficient");
    if ((t.m - t.m.adjoint()).cwiseAbs().maxCoeff() > 1e-9) fail("scaled term is not Hermitian");
  }
}

}  // namespace

void Problem::validate() const {
  for (const auto& f : psd_) validate_expr(f, blocks_, "psd constraint");
  for (const auto& f : eq_) validate_expr(f, blocks_, "equality");
  validate_expr(objective_, blocks_, "objective");
}

const char* to_string(Status s) {
  switch (s) {
    case Status::kOptimal: return "optimal";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnbounded: return "unbounded";
    case Status::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

HermitianMatrix Solution::matrix(Var v) const {
  return HermitianMatrix::symmetrized(values.at(v.block));
}

double Solution::scalar(Var v) const { return values.at(v.block)(0, 0).real(); }

std::vector<double> constraint_min_eigenvalues(const Problem& problem, const Assignment& values) {
  std::vector<double> out;
  out.reserve(problem.psd_constraints().size());
  for (const auto& f : problem.psd_constraints()) {
    out.push_back(HermitianMatrix::symmetrized(f.evaluate(values)).min_eigenvalue());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Real conic form:
//   minimize c'x  s.t.  s = h + sum_j x_j F_j  in PSD,  A x = b.
// In the usual notation G = -F.

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Cone {
  int n = 0;
  MatrixXd h;
  std::vector<int> vars;
  std::vector<MatrixXd> f;  // F_j for vars[j]
};

struct ConicForm {
  int num_vars = 0;
  std::vector<int> offsets;  // first coordinate of each block
  VectorXd c;
  double c0 = 0.0;
  MatrixXd a;
  VectorXd b;
  std::vector<Cone> cones;
  int degree = 0;
};

// Hermitian basis for a dim-d block: diagonal, then (re, im) per upper pair.
CMatrix basis_image(const CMatrix& left, int d, int j) {
  if (j < d) return left.col(j) * left.col(j).adjoint();
  int k = j - d;
  for (int r = 0; r < d; ++r) {
    for (int s = r + 1; s < d; ++s) {
      if (k < 2) {
        const CMatrix lr_ls = left.col(r) * left.col(s).adjoint();
        if (k == 0) return lr_ls + lr_ls.adjoint();
        const Complex i(0.0, 1.0);
        return i * lr_ls - i * lr_ls.adjoint();
      }
      k -= 2;
    }
  }
  return {};
}

MatrixXd to_real(const CMatrix& m) {
  if (m.rows() == 1) return MatrixXd::Constant(1, 1, m(0, 0).real());
  return embed_complex(m);
}

int block_coords(const BlockInfo& b) { return b.kind == BlockKind::kHermitianPsd ? b.dim * b.dim : 1; }

// Sparse linear part of an expression: coordinate -> complex matrix.
std::map<int, CMatrix> linear_part(const AffineHermitian& f, const std::vector<BlockInfo>& blocks,
                                   const std::vector<int>& offsets) {
  std::map<int, CMatrix> out;
  auto accumulate = [&](int coord, const CMatrix& m) {
    auto it = out.find(coord);
    if (it == out.end()) {
      out.emplace(coord, m);
    } else {
      it->second += m;
    }
  };
  for (const auto& t : f.congruences()) {
    const int d = blocks[t.var.block].dim;
    const int base = offsets[t.var.block];
    for (int j = 0; j < d * d; ++j) accumulate(base + j, t.coeff * basis_image(t.left, d, j));
  }
  for (const auto& t : f.scaled()) accumulate(offsets[t.var.block], t.m);
  return out;
}

Cone make_cone(const CMatrix& constant, const std::map<int, CMatrix>& lin) {
  Cone cone;
  cone.h = to_real(0.5 * (constant + constant.adjoint()));
  cone.n = static_cast<int>(cone.h.rows());
  double scale = cone.h.cwiseAbs().maxCoeff();
  for (const auto& [coord, m] : lin) {
    MatrixXd fr = to_real(0.5 * (m + m.adjoint()));
    if (fr.cwiseAbs().maxCoeff() == 0.0) continue;
    scale = std::max(scale, fr.cwiseAbs().maxCoeff());
    cone.vars.push_back(coord);
    cone.f.push_back(std::move(fr));
  }
  // Row scaling leaves the constraint unchanged and evens out magnitudes.
  if (scale > 0.0) {
    cone.h /= scale;
    for (auto& fj : cone.f) fj /= scale;
  }
  return cone;
}

ConicForm compile(const Problem& p) {
  ConicForm cf;
  const auto& blocks = p.blocks();
  for (const auto& b : blocks) {
    cf.offsets.push_back(cf.num_vars);
    cf.num_vars += block_coords(b);
  }
  const int n = cf.num_vars;

  // Variable-block cones.
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const auto& b = blocks[bi];
    if (b.kind == BlockKind::kFreeScalar) continue;
    AffineHermitian self(b.dim);
    if (b.kind == BlockKind::kHermitianPsd) {
      self.add_congruence(Var{static_cast<int>(bi)}, CMatrix::Identity(b.dim, b.dim));
    } else {
      self.add_scaled(Var{static_cast<int>(bi)}, 1.0);
    }
    cf.cones.push_back(make_cone(self.constant(), linear_part(self, blocks, cf.offsets)));
  }
  for (const auto& f : p.psd_constraints()) {
    cf.cones.push_back(make_cone(f.constant(), linear_part(f, blocks, cf.offsets)));
  }
  for (const auto& cone : cf.cones) cf.degree += cone.n;

  const int m = static_cast<int>(p.equalities().size());
  cf.a = MatrixXd::Zero(m, n);
  cf.b = VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    const auto& f = p.equalities()[i];
    for (const auto& [coord, mat] : linear_part(f, blocks, cf.offsets)) cf.a(i, coord) = mat(0, 0).real();
    cf.b(i) = -f.constant()(0, 0).real();
    const double scale = std::max(cf.a.row(i).cwiseAbs().maxCoeff(), std::abs(cf.b(i)));
    if (scale > 0.0) {
      cf.a.row(i) /= scale;
      cf.b(i) /= scale;
    }
  }

  cf.c = VectorXd::Zero(n);
  const double sign = p.maximizing() ? -1.0 : 1.0;
  for (const auto& [coord, mat] : linear_part(p.objective(), blocks, cf.offsets)) {
    cf.c(coord) = sign * mat(0, 0).real();
  }
  cf.c0 = p.objective().constant()(0, 0).real();
  return cf;
}

// ---------------------------------------------------------------------------
// Homogeneous self-dual interior point method.
//
// Embedding (G = -F):
//   [0]   [ 0   A'  G'  c] [x]
//   [0] = [-A   0   0   b] [y]
//   [s]   [-G   0   0   h] [z]
//   [k]   [-c' -b' -h'  0] [t]
// with s, z in the cone and t, k >= 0.

double dot(const MatrixXd& a, const MatrixXd& b) { return (a.array() * b.array()).sum(); }

struct ConeScaling {
  MatrixXd r;        // W(z) = R' z R, W^{-T}(s) = R^{-1} s R^{-T}
  MatrixXd r_inv;
  VectorXd lambda;   // W(z) = W^{-T}(s) = diag(lambda)
  std::vector<MatrixXd> g_hat;  // R^{-1} G_j R^{-T}
};

bool nt_scaling(const MatrixXd& s, const MatrixXd& z, ConeScaling& out) {
  Eigen::LLT<MatrixXd> ls(s), lz(z);
  if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
  const MatrixXd l_s = ls.matrixL();
  const MatrixXd l_z = lz.matrixL();
  Eigen::JacobiSVD<MatrixXd> svd(l_z.transpose() * l_s, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd sv = svd.singularValues();
  if (sv.minCoeff() <= 0.0 || !sv.allFinite()) return false;
  const VectorXd isq = sv.cwiseSqrt().cwiseInverse();
  out.lambda = sv;
  out.r = l_s * svd.matrixV() * isq.asDiagonal();
  const MatrixXd l_s_inv = l_s.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(s.rows(), s.cols()));
  out.r_inv = sv.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * l_s_inv;
  return true;
}

// Updates a scaling in place given the new iterates in its scaled
// coordinates, s = R s_til R', z = R^-T z_til R^-1. Working with the well
// conditioned scaled matrices avoids refactoring nearly singular s and z.
bool nt_rescale(const MatrixXd& s_til, const MatrixXd& z_til, ConeScaling& sc) {
  ConeScaling inner;
  if (!nt_scaling(s_til, z_til, inner)) return false;
  sc.r = sc.r * inner.r;
  sc.r_inv = inner.r_inv * sc.r_inv;
  sc.lambda = inner.lambda;
  return sc.r.allFinite() && sc.r_inv.allFinite();
}

// Largest step a with diag(lambda) + a * d PSD (infinity when unbounded).
double max_step(const VectorXd& lambda, const MatrixXd& d) {
  const VectorXd isq = lambda.cwiseSqrt().cwiseInverse();
  MatrixXd scaled = isq.asDiagonal() * d * isq.asDiagonal();
  scaled = 0.5 * (scaled + scaled.transpose());
  double mn;
  if (scaled.rows() == 1) {
    mn = scaled(0, 0);
  } else {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(scaled, Eigen::EigenvaluesOnly);
    mn = es.eigenvalues()(0);
  }
  return mn >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / mn;
}

// Symmetrized product (A B + B A) / 2.
MatrixXd jordan(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd ab = a * b;
  return 0.5 * (ab + ab.transpose());
}

double min_eig(const MatrixXd& m) {
  if (m.rows() == 1) return m(0, 0);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

using ConeVec = std::vector<MatrixXd>;

// Residual level accepted when full accuracy cannot be reached.
constexpr double kAcceptableFeasibility = 1e-7;
constexpr double kAcceptableGapFactor = 10.0;
// Relative KKT residual above which the normal equations are abandoned.
constexpr double kNormalEquationAccuracy = 1e-10;

// Symmetric matrix <-> packed lower triangle with sqrt(2) on off-diagonals,
// so that the Euclidean inner product matches the trace inner product.
void svec_into(const MatrixXd& m, double* out) {
  const int n = static_cast<int>(m.rows());
  int k = 0;
  for (int j = 0; j < n; ++j) {
    out[k++] = m(j, j);
    for (int i = j + 1; i < n; ++i) out[k++] = std::sqrt(2.0) * 0.5 * (m(i, j) + m(j, i));
  }
}

MatrixXd smat(const double* v, int n) {
  MatrixXd m(n, n);
  int k = 0;
  for (int j = 0; j < n; ++j) {
    m(j, j) = v[k++];
    for (int i = j + 1; i < n; ++i) m(i, j) = m(j, i) = v[k++] / std::sqrt(2.0);
  }
  return m;
}

class Hsd {
 public:
  Hsd(const ConicForm& cf, const Settings& st) : cf_(cf), st_(st) {
    n_ = cf.num_vars;
    p_ = static_cast<int>(cf.b.size());
    scalings_.resize(cf.cones.size());
  }

  Solution run();
  const VectorXd& x() const { return x_out_; }
  const ConeVec& s() const { return s_out_; }

 private:
  // G x as cone matrices (= -F x).
  ConeVec apply_g(const VectorXd& x) const {
    ConeVec out;
    out.reserve(cf_.cones.size());
    for (const auto& cone : cf_.cones) {
      MatrixXd m = MatrixXd::Zero(cone.n, cone.n);
      for (std::size_t j = 0; j < cone.vars.size(); ++j) m -= x(cone.vars[j]) * cone.f[j];
      out.push_back(std::move(m));
    }
    return out;
  }
  VectorXd apply_gt(const ConeVec& z) const {
    VectorXd out = VectorXd::Zero(n_);
    for (std::size_t c = 0; c < cf_.cones.size(); ++c) {
      const auto& cone = cf_.cones[c];
      for (std::size_t j = 0; j < cone.vars.size(); ++j) out(cone.vars[j]) -= dot(cone.f[j], z[c]);
    }
    return out;
  }
  double cone_dot(const ConeVec& a, const ConeVec& b) const {
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) s += dot(a[c], b[c]);
    return s;
  }
  double cone_norm(const ConeVec& a) const { return std::sqrt(cone_dot(a, a)); }
  ConeVec cone_hs() const {
    ConeVec out;
    for (const auto& cone : cf_.cones) out.push_back(cone.h);
    return out;
  }

  bool factor(bool identity_scaling);
  struct KktSol {
    VectorXd x, y;
    ConeVec z;      // unscaled
    ConeVec z_til;  // W z
  };
  // Solves [0 A' G'; A 0 0; G 0 -W'W] [x; y; z] = [r1; r2; r3].
  KktSol solve_kkt(const VectorXd& r1, const VectorXd& r2, const ConeVec& r3) const;
  // Same system with iterative refinement on the unreduced equations. Falls
  // back to the augmented factorization once the normal equations lose
  // accuracy, and keeps using it for the remaining iterations.
  KktSol solve_refined(const VectorXd& r1, const VectorXd& r2, const ConeVec& r3);
  void factor_augmented();

  const ConicForm& cf_;
  const Settings& st_;
  int n_ = 0, p_ = 0;
  std::vector<ConeScaling> scalings_;
  Eigen::PartialPivLU<MatrixXd> lu_;
  MatrixXd kkt_;
  // Augmented system [0 A' Gh'; A 0 0; Gh 0 -I] over svec coordinates.
  bool augmented_ = false;
  bool augmented_ready_ = false;
  std::vector<int> svec_offsets_;
  int svec_size_ = 0;
  Eigen::PartialPivLU<MatrixXd> aug_lu_;
  MatrixXd aug_;
  VectorXd x_out_;
  ConeVec s_out_;
};

// Variable blocks are read from their own slack cone when available, which
// keeps them exactly PSD; everything else comes from x.
Assignment unpack(const Problem& p, const ConicForm& cf, const VectorXd& x, const ConeVec* slacks) {
  Assignment out;
  const Complex i(0.0, 1.0);
  int cone = 0;
  for (std::size_t bi = 0; bi < p.blocks().size(); ++bi) {
    const auto& b = p.blocks()[bi];
    const int base = cf.offsets[bi];
    if (b.kind != BlockKind::kFreeScalar && slacks != nullptr) {
      const MatrixXd& sm = (*slacks)[cone++];
      if (b.dim == 1) {
        out.push_back(CMatrix::Constant(1, 1, sm(0, 0)));
      } else {
        const int d = b.dim;
        const MatrixXd re = 0.5 * (sm.topLeftCorner(d, d) + sm.bottomRightCorner(d, d));
        const MatrixXd im = 0.5 * (sm.bottomLeftCorner(d, d) - sm.topRightCorner(d, d));
        CMatrix m = re.cast<Complex>() + i * im.cast<Complex>();
        out.push_back(0.5 * (m + m.adjoint()));
      }
      continue;
    }
    if (b.kind != BlockKind::kHermitianPsd) {
      out.push_back(CMatrix::Constant(1, 1, x(base)));
      continue;
    }
    const int d = b.dim;
    CMatrix m = CMatrix::Zero(d, d);
    for (int k = 0; k < d; ++k) m(k, k) = x(base + k);
    int k = base + d;
    for (int r = 0; r < d; ++r) {
      for (int s = r + 1; s < d; ++s) {
        m(r, s) += x(k) + i * x(k + 1);
        m(s, r) += x(k) - i * x(k + 1);
        k += 2;
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

bool Hsd::factor(bool identity_scaling) {
  const int n = n_, p = p_;
  MatrixXd m = MatrixXd::Zero(n, n);
  for (std::size_t c = 0; c < cf_.cones.size(); ++c) {
    const auto& cone = cf_.cones[c];
    auto& sc = scalings_[c];
    if (identity_scaling) {
      sc.r = MatrixXd::Identity(cone.n, cone.n);
      sc.r_inv = sc.r;
      sc.lambda = VectorXd::Ones(cone.n);
    }
    sc.g_hat.resize(cone.vars.size());
    for (std::size_t j = 0; j < cone.vars.size(); ++j) {
      sc.g_hat[j].noalias() = -(sc.r_inv * cone.f[j] * sc.r_inv.transpose());
    }
    if (augmented_) continue;
    for (std::size_t i = 0; i < cone.vars.size(); ++i) {
      for (std::size_t j = i; j < cone.vars.size(); ++j) {
        const double v = dot(sc.g_hat[i], sc.g_hat[j]);
        m(cone.vars[i], cone.vars[j]) += v;
        if (i != j) m(cone.vars[j], cone.vars[i]) += v;
      }
    }
  }
  augmented_ready_ = false;
  if (augmented_) {
    factor_augmented();
    return aug_.allFinite();
  }
  kkt_ = MatrixXd::Zero(n + p, n + p);
  kkt_.topLeftCorner(n, n) = m;
  kkt_.topRightCorner(n, p) = cf_.a.transpose();
  kkt_.bottomLeftCorner(p, n) = cf_.a;
  // Tiny static regularization keeps the factorization defined for
  // variables that only enter through equalities.
  const double reg = 1e-13 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
  MatrixXd reg_kkt = kkt_;
  reg_kkt.topLeftCorner(n, n).diagonal().array() += reg;
  reg_kkt.bottomRightCorner(p, p).diagonal().array() -= reg;
  lu_.compute(reg_kkt);
  return kkt_.allFinite();
}

void Hsd::factor_augmented() {
  const int n = n_, p = p_;
  if (svec_offsets_.empty()) {
    for (const auto& cone : cf_.cones) {
      svec_offsets_.push_back(svec_size_);
      svec_size_ += cone.n * (cone.n + 1) / 2;
    }
  }
  const int total = n + p + svec_size_;
  // Gh in svec coordinates, assembled column by column, then mirrored.
  MatrixXd gh = MatrixXd::Zero(svec_size_, n);
  for (std::size_t c = 0; c < cf_.cones.size(); ++c) {
    const auto& cone = cf_.cones[c];
    for (std::size_t j = 0; j < cone.vars.size(); ++j) {
      double* col = gh.col(cone.vars[j]).data() + svec_offsets_[c];
      const MatrixXd& g = scalings_[c].g_hat[j];
      const int m = cone.n;
      int k = 0;
      for (int b = 0; b < m; ++b) {
        col[k++] += g(b, b);
        for (int a = b + 1; a < m; ++a) col[k++] += std::sqrt(2.0) * 0.5 * (g(a, b) + g(b, a));
      }
    }
  }
  aug_.setZero(total, total);
  aug_.block(0, n, n, p) = cf_.a.transpose();
  aug_.block(n, 0, p, n) = cf_.a;
  aug_.bottomLeftCorner(svec_size_, n) = gh;
  aug_.topRightCorner(n, svec_size_) = gh.transpose();
  aug_.bottomRightCorner(svec_size_, svec_size_).diagonal().setConstant(-1.0);
  aug_.topLeftCorner(n, n).diagonal().array() += 1e-13;
  aug_.block(n, n, p, p).diagonal().array() -= 1e-13;
  aug_lu_.compute(aug_);
  aug_.topLeftCorner(n, n).diagonal().array() -= 1e-13;
  aug_.block(n, n, p, p).diagonal().array() += 1e-13;
  augmented_ready_ = true;
}

Hsd::KktSol Hsd::solve_kkt(const VectorXd& r1, const VectorXd& r2, const ConeVec& r3) const {
  const int n = n_, p = p_;
  ConeVec r3_hat(cf_.cones.size());
  VectorXd rhs(n + p);
  rhs.head(n) = r1;
  rhs.tail(p) = r2;
  for (std::size_t c = 0; c < cf_.cones.size(); ++c) {
    const auto& cone = cf_.cones[c];
    const auto& sc = scalings_[c];
    r3_hat[c].noalias() = sc.r_inv * r3[c] * sc.r_inv.transpose();
    if (augmented_ready_) continue;
    for (std::size_t j = 0; j < cone.vars.size(); ++j) rhs(cone.vars[j]) += dot(sc.g_hat[j], r3_hat[c]);
  }
  if (augmented_ready_) {
    VectorXd full = VectorXd::Zero(n + p + svec_size_);
    full.head(n) = r1;
    full.segment(n, p) = r2;
    for (std::size_t c = 0; c < cf_.cones.size(); ++c) svec_into(r3_hat[c], full.data() + n + p + svec_offsets_[c]);
    VectorXd sol = aug_lu_.solve(full);
    const VectorXd res = full - aug_ * sol;
    sol += aug_lu_.solve(res);
    KktSol out;
    out.x = sol.head(n);
    out.y = sol.segment(n, p);
    out.z.resize(cf_.cones.size());
    out.z_til.resize(cf_.cones.size());
    for (std::size_t c = 0; c < cf_.cones.size(); ++c) {
      const auto& sc = scalings_[c];
      MatrixXd zt = smat(sol.data() + n + p + svec_offsets_[c], cf_.cones[c].n);
      out.z[c] = sc.r_inv.transpose() * zt * sc.r_inv;
      out.z_til[c] = std::move(zt);
    }
    return out;
  }
  VectorXd sol = lu_.solve(rhs);
  for (int it = 0; it < 2; ++it) {
    const VectorXd res = rhs - kkt_ * sol;
    sol += lu_.solve(res);
  }
  KktSol out;
  out.x = sol.head(n);
  out.y = sol.tail(p);
  out.z.resize(cf_.cones.size());
  out.z_til.resize(cf_.cones.size());
  for (std::size_t c = 0; c < cf_.cones.size(); ++c) {
    const auto& cone = cf_.cones[c];
    const auto& sc = scalings_[c];
    MatrixXd zt = -r3_hat[c];
    for (std::size_t j = 0; j < cone.vars.size(); ++j) zt += out.x(cone.vars[j]) * sc.g_hat[j];
    out.z[c] = sc.r_inv.transpose() * zt * sc.r_inv;
    out.z_til[c] = std::move(zt);
  }
  return out;
}

Hsd::KktSol Hsd::solve_refined(const VectorXd& r1, const VectorXd& r2, const ConeVec& r3) {
  const std::size_t nc = cf_.cones.size();
  auto residual = [&](const KktSol& sol, VectorXd& e1, VectorXd& e2, ConeVec& e3) {
    e1 = r1 - cf_.a.transpose() * sol.y - apply_gt(sol.z);
    e2 = r2 - cf_.a * sol.x;
    const ConeVec gx = apply_g(sol.x);
    e3.resize(nc);
    for (std::size_t k = 0; k < nc; ++k) {
      const MatrixXd rrt = scalings_[k].r * scalings_[k].r.transpose();
      e3[k] = r3[k] - gx[k] + rrt * sol.z[k] * rrt;
    }
    return std::max({e1.lpNorm<Eigen::Infinity>(), e2.lpNorm<Eigen::Infinity>(), std::sqrt(cone_dot(e3, e3))});
  };
  KktSol sol = solve_kkt(r1, r2, r3);
  VectorXd e1, e2;
  ConeVec e3;
  double err = residual(sol, e1, e2, e3);
  for (int it = 0; it < 3 && err > 0.0; ++it) {
    const KktSol corr = solve_kkt(e1, e2, e3);
    KktSol next = sol;
    next.x += corr.x;
    next.y += corr.y;
    for (std::size_t k = 0; k < nc; ++k) {
      next.z[k] += corr.z[k];
      next.z_til[k] += corr.z_til[k];
    }
    VectorXd f1, f2;
    ConeVec f3;
    const double next_err = residual(next, f1, f2, f3);
    if (!(next_err < 0.5 * err)) break;
    sol = std::move(next);
    err = next_err;
    e1 = std::move(f1);
    e2 = std::move(f2);
    e3 = std::move(f3);
  }
  const double scale = std::max({1.0, r1.lpNorm<Eigen::Infinity>(), r2.lpNorm<Eigen::Infinity>(), std::sqrt(cone_dot(r3, r3))});
  if (!augmented_ && err > kNormalEquationAccuracy * scale) {
    augmented_ = true;
    factor_augmented();
    KktSol retry = solve_refined(r1, r2, r3);
    return retry;
  }
  return sol;
}

Solution Hsd::run() {
  const std::size_t nc = cf_.cones.size();
  const VectorXd& c = cf_.c;
  const VectorXd& b = cf_.b;
  const ConeVec h = cone_hs();

  Solution sol;
  const double resx0 = std::max(1.0, c.norm());
  const double resy0 = std::max(1.0, b.norm());
  const double resz0 = std::max(1.0, cone_norm(h));

  // Starting point from two least-norm problems with identity scaling.
  factor(true);
  KktSol p0 = solve_kkt(VectorXd::Zero(n_), b, h);
  KktSol d0 = solve_kkt(-c, VectorXd::Zero(p_), apply_g(VectorXd::Zero(n_)));
  VectorXd x = p0.x;
  VectorXd y = d0.y;
  ConeVec s(nc), z(nc);
  for (std::size_t k = 0; k < nc; ++k) {
    s[k] = -p0.z[k];
    z[k] = d0.z[k];
  }
  auto shift = [&](ConeVec& v) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& m : v) worst = std::max(worst, -min_eig(m));
    const double nrm = cone_norm(v);
    if (worst >= -1e-8 * std::max(nrm, 1.0)) {
      for (auto& m : v) m.diagonal().array() += 1.0 + worst;
    }
  };
  shift(s);
  shift(z);
  double tau = 1.0, kappa = 1.0;

  const double deg = static_cast<double>(cf_.degree);
  ConeVec ds_a(nc), dz_a(nc);
  double dtau_a = 0.0, dkappa_a = 0.0;
  int stalls = 0;
  struct Best {
    double merit = std::numeric_limits<double>::infinity();
    VectorXd x;
    ConeVec s;
    double tau = 1.0;
    double pres = 0.0, dres = 0.0, gap = 0.0;
  } best;
  double best_merit = std::numeric_limits<double>::infinity();
  int no_progress = 0;
  // Scaled iterates from the last step, used to update the scaling.
  ConeVec s_next(nc), z_next(nc);
  bool scaled_update = false;

  for (int iter = 0; iter <= st_.max_iterations; ++iter) {
    sol.iterations = iter;
    // Residuals of the embedding.
    const VectorXd gtz = apply_gt(z);
    const ConeVec gx = apply_g(x);
    const VectorXd r1 = cf_.a.transpose() * y + gtz + c * tau;
    const VectorXd r2 = -cf_.a * x + b * tau;
    ConeVec r3(nc);
    for (std::size_t k = 0; k < nc; ++k) r3[k] = -gx[k] + h[k] * tau - s[k];
    const double cx = c.dot(x), by = b.dot(y), hz = cone_dot(h, z);
    const double r4 = -cx - by - hz - kappa;
    const double gap = cone_dot(s, z);
    const double mu = (gap + tau * kappa) / (deg + 1.0);

    const double pcost = cx / tau;
    const double dcost = -(by + hz) / tau;
    const double pres = std::max(r2.norm() / resy0, cone_norm(r3) / resz0) / tau;
    const double dres = r1.norm() / resx0 / tau;
    const double rel_gap = gap / (tau * tau) / (1.0 + std::abs(pcost));
    const double cost_gap = std::abs(pcost - dcost) / (1.0 + std::abs(pcost));
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.duality_gap = std::max(rel_gap, cost_gap);
    if (st_.verbose) {
      std::fprintf(stderr, "it %3d pcost %+.6e dcost %+.6e pres %.2e dres %.2e gap %.2e tau %.2e kap %.2e\n", iter,
                   pcost, dcost, pres, dres, rel_gap, tau, kappa);
    }

    if (pres <= st_.feasibility_tolerance && dres <= st_.feasibility_tolerance &&
        rel_gap <= st_.gap_tolerance && cost_gap <= st_.gap_tolerance) {
      sol.status = Status::kOptimal;
      x /= tau;
      break;
    }
    // Remember the best iterate that already meets the reduced accuracy
    // bound, in case the linear algebra degrades before full convergence.
    const double merit = std::max({pres, dres, rel_gap, cost_gap});
    const double gap_ok = kAcceptableGapFactor * st_.gap_tolerance;
    if (pres <= kAcceptableFeasibility && dres <= kAcceptableFeasibility && rel_gap <= gap_ok &&
        cost_gap <= gap_ok && merit < best.merit) {
      best = {merit, x / tau, s, tau, pres, dres, std::max(rel_gap, cost_gap)};
      for (auto& m : best.s) m /= tau;
    }
    if (merit < best_merit * 0.9) {
      best_merit = merit;
      no_progress = 0;
    } else if (++no_progress >= 20) {
      stalls = 8;
    }
    if (by + hz < 0.0) {
      const double pinf = (cf_.a.transpose() * y + gtz).norm() / resx0 / (-(by + hz));
      if (pinf <= st_.feasibility_tolerance) {
        sol.status = Status::kInfeasible;
        x.setZero();
        break;
      }
    }
    if (cx < 0.0) {
      ConeVec gxs(nc);
      for (std::size_t k = 0; k < nc; ++k) gxs[k] = gx[k] + s[k];
      const double dinf = std::max((cf_.a * x).norm() / resy0, cone_norm(gxs) / resz0) / (-cx);
      if (dinf <= st_.feasibility_tolerance) {
        sol.status = Status::kUnbounded;
        x /= -cx;
        break;
      }
    }
    if (iter == st_.max_iterations || stalls >= 8) {
      sol.status = Status::kNumericalFailure;
      x /= tau;
      break;
    }

    // Nesterov-Todd scaling at the current point.
    bool ok = true;
    if (scaled_update) {
      const std::vector<ConeScaling> saved = scalings_;
      for (std::size_t k = 0; k < nc && ok; ++k) ok = nt_rescale(s_next[k], z_next[k], scalings_[k]);
      if (!ok) scalings_ = saved;
    }
    if (!scaled_update || !ok) {
      ok = true;
      for (std::size_t k = 0; k < nc && ok; ++k) ok = nt_scaling(s[k], z[k], scalings_[k]);
    }
    if (!ok || !factor(false)) {
      if (st_.verbose) std::fprintf(stderr, "scaling failed (%s)\n", ok ? "factor" : "nt");
      sol.status = Status::kNumericalFailure;
      x /= tau;
      break;
    }
    const KktSol u1 = solve_refined(-c, b, h);
    const double den_base = kappa / tau - c.dot(u1.x) - b.dot(u1.y) - cone_dot(h, u1.z);

    double sigma = 0.0;
    double step = 0.0;
    for (int phase = 0; phase < 2; ++phase) {
      const bool affine = phase == 0;
      const double rs = 1.0 - sigma;
      ConeVec rs_til(nc), rhs_z(nc);
      for (std::size_t k = 0; k < nc; ++k) {
        const auto& sc = scalings_[k];
        const int m = static_cast<int>(sc.lambda.size());
        MatrixXd v = MatrixXd::Zero(m, m);
        v.diagonal() = -sc.lambda.cwiseProduct(sc.lambda) + VectorXd::Constant(m, sigma * mu);
        if (!affine) v -= jordan(ds_a[k], dz_a[k]);
        MatrixXd u(m, m);
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < m; ++j) u(i, j) = 2.0 * v(i, j) / (sc.lambda(i) + sc.lambda(j));
        }
        // rhs_z = -(rhs_z_embedding + W' r_s), rhs_z_embedding = -(1 - sigma) r3
        rhs_z[k] = rs * r3[k] - sc.r * u * sc.r.transpose();
        rs_til[k] = std::move(u);
      }
      double r_kappa = -tau * kappa + sigma * mu;
      if (!affine) r_kappa -= dtau_a * dkappa_a;
      const VectorXd rhs_x = -rs * r1;
      const VectorXd rhs_y = rs * r2;  // -(rhs_y_embedding)
      const double rhs_tau = -rs * r4;
      const KktSol u2 = solve_refined(rhs_x, rhs_y, rhs_z);
      const double num = rhs_tau + r_kappa / tau + c.dot(u2.x) + b.dot(u2.y) + cone_dot(h, u2.z);
      const double dtau = num / den_base;
      const double dkappa = (r_kappa - kappa * dtau) / tau;
      ConeVec dz_til(nc), ds_til(nc);
      for (std::size_t k = 0; k < nc; ++k) {
        dz_til[k] = u2.z_til[k] + dtau * u1.z_til[k];
        ds_til[k] = rs_til[k] - dz_til[k];
      }
      double amax = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nc; ++k) {
        amax = std::min(amax, max_step(scalings_[k].lambda, ds_til[k]));
        amax = std::min(amax, max_step(scalings_[k].lambda, dz_til[k]));
      }
      if (dtau < 0.0) amax = std::min(amax, -tau / dtau);
      if (dkappa < 0.0) amax = std::min(amax, -kappa / dkappa);

      if (affine) {
        const double a = std::min(1.0, amax);
        sigma = std::pow(1.0 - a, 3);
        ds_a = std::move(ds_til);
        dz_a = std::move(dz_til);
        dtau_a = dtau;
        dkappa_a = dkappa;
        continue;
      }
      step = std::min(1.0, 0.99 * amax);
      const VectorXd dx = u2.x + dtau * u1.x;
      const VectorXd dy = u2.y + dtau * u1.y;
      // ds from the linearized cone equation itself, which keeps the primal
      // residual exact instead of going through the scaling.
      const ConeVec gdx = apply_g(dx);
      x += step * dx;
      y += step * dy;
      for (std::size_t k = 0; k < nc; ++k) {
        const auto& sc = scalings_[k];
        const MatrixXd ds = rs * r3[k] - gdx[k] + dtau * h[k];
        const MatrixXd dz = sc.r_inv.transpose() * dz_til[k] * sc.r_inv;
        s_next[k] = step * ds_til[k];
        s_next[k].diagonal() += sc.lambda;
        s_next[k] = 0.5 * (s_next[k] + s_next[k].transpose()).eval();
        z_next[k] = step * dz_til[k];
        z_next[k].diagonal() += sc.lambda;
        z_next[k] = 0.5 * (z_next[k] + z_next[k].transpose()).eval();
        s[k] += step * ds;
        z[k] += step * dz;
        s[k] = 0.5 * (s[k] + s[k].transpose()).eval();
        z[k] = 0.5 * (z[k] + z[k].transpose()).eval();
      }
      tau += step * dtau;
      kappa += step * dkappa;
      scaled_update = true;
    }
    stalls = step < 1e-8 ? stalls + 1 : 0;
  }

  if (sol.status == Status::kNumericalFailure && best.merit < std::numeric_limits<double>::infinity()) {
    sol.status = Status::kOptimal;
    x = best.x;
    s = best.s;
    tau = 1.0;
    sol.primal_residual = best.pres;
    sol.dual_residual = best.dres;
    sol.duality_gap = best.gap;
  }
  x_out_ = x;
  s_out_ = s;
  for (auto& m : s_out_) m /= tau;
  return sol;
}

}  // namespace

Solution solve(const Problem& problem, const Settings& settings) {
  problem.validate();
  const ConicForm cf = compile(problem);
  Hsd hsd(cf, settings);
  Solution sol = hsd.run();
  const bool from_slack = sol.status == Status::kOptimal || sol.status == Status::kNumericalFailure;
  sol.values = unpack(problem, cf, hsd.x(), from_slack ? &hsd.s() : nullptr);
  sol.objective = problem.objective().evaluate(sol.values)(0, 0).real();
  return sol;
}

}  // namespace secrate::sdp
