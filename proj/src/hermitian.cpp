#include "secrate/hermitian.hpp"

#include <sstream>

namespace secrate {

HermitianMatrix::HermitianMatrix(const CMatrix& m, double tol) {
  if (m.rows() != m.cols()) {
    throw ValidationError("Hermitian matrix must be square");
  }
  const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (m.size() > 0 && asym > tol) {
    std::ostringstream os;
    os << "matrix is not Hermitian (max |M - M^H| = " << asym << ")";
    throw ValidationError(os.str());
  }
  m_ = 0.5 * (m + m.adjoint());
}

HermitianMatrix HermitianMatrix::zero(int dim) {
  return HermitianMatrix(CMatrix::Zero(dim, dim));
}

HermitianMatrix HermitianMatrix::identity(int dim) {
  return HermitianMatrix(CMatrix::Identity(dim, dim));
}

HermitianMatrix HermitianMatrix::outer(const CRowVector& v, double c) {
  return symmetrized(c * (v.adjoint() * v));
}

HermitianMatrix HermitianMatrix::symmetrized(const CMatrix& m) {
  HermitianMatrix out;
  out.m_ = 0.5 * (m + m.adjoint());
  return out;
}

double HermitianMatrix::quad(const CRowVector& h) const {
  return (h * m_ * h.adjoint())(0, 0).real();
}

Eigen::VectorXd HermitianMatrix::eigenvalues() const {
  if (m_.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double HermitianMatrix::min_eigenvalue() const {
  const Eigen::VectorXd ev = eigenvalues();
  return ev.size() == 0 ? 0.0 : ev(0);
}

HermitianMatrix HermitianMatrix::clipped() const {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m_);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return symmetrized(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint());
}

HermitianMatrix HermitianMatrix::operator+(const HermitianMatrix& o) const {
  return symmetrized(m_ + o.m_);
}

HermitianMatrix HermitianMatrix::operator-(const HermitianMatrix& o) const {
  return symmetrized(m_ - o.m_);
}

HermitianMatrix HermitianMatrix::operator*(double s) const {
  return symmetrized(m_ * s);
}

Eigen::MatrixXd embed_complex(const CMatrix& m) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = m.real();
  out.topRightCorner(n, n) = -m.imag();
  out.bottomLeftCorner(n, n) = m.imag();
  out.bottomRightCorner(n, n) = m.real();
  return out;
}

Eigen::MatrixXd embed_hermitian(const HermitianMatrix& h) {
  return embed_complex(h.matrix());
}

}  // namespace secrate
