#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace secrate {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CRowVector = Eigen::RowVectorXcd;

/// Raised when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Complex Hermitian matrix. Construction checks conjugate symmetry and
/// stores the exactly symmetrized value (M + M^H) / 2.
class HermitianMatrix {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  HermitianMatrix() = default;
  explicit HermitianMatrix(const CMatrix& m, double tol = kSymmetryTolerance);

  static HermitianMatrix zero(int dim);
  static HermitianMatrix identity(int dim);
  /// c * v^H v for a row vector v.
  static HermitianMatrix outer(const CRowVector& v, double c = 1.0);
  /// (M + M^H) / 2 without the symmetry check; for solver output.
  static HermitianMatrix symmetrized(const CMatrix& m);

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(int i, int j) const { return m_(i, j); }

  double trace() const { return m_.trace().real(); }
  /// Real quadratic form h M h^H for a row vector h.
  double quad(const CRowVector& h) const;
  /// Ascending eigenvalues.
  Eigen::VectorXd eigenvalues() const;
  double min_eigenvalue() const;
  /// Projection onto the PSD cone: negative eigenvalues set to 0.
  HermitianMatrix clipped() const;

  HermitianMatrix operator+(const HermitianMatrix& o) const;
  HermitianMatrix operator-(const HermitianMatrix& o) const;
  HermitianMatrix operator*(double s) const;

 private:
  CMatrix m_;
};

/// Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of dimension 2n.
/// The spectrum is that of H with every eigenvalue repeated twice.
Eigen::MatrixXd embed_hermitian(const HermitianMatrix& h);
/// Same embedding for an unchecked complex matrix.
Eigen::MatrixXd embed_complex(const CMatrix& m);

}  // namespace secrate
