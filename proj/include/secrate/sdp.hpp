#pragma once

// Dense semidefinite programming for small complex-Hermitian problems.
//
// A problem is stated over variable blocks (Hermitian PSD matrices,
// nonnegative scalars, free scalars) with affine Hermitian expressions
// constrained to be PSD, nonnegative or zero. Complex LMIs are solved
// through their real symmetric embedding by a homogeneous self-dual
// interior-point method with Nesterov-Todd scaling and Mehrotra
// predictor-corrector steps.

#include <string>
#include <vector>

#include "secrate/hermitian.hpp"

namespace secrate::sdp {

enum class BlockKind { kHermitianPsd, kNonnegativeScalar, kFreeScalar };

struct Var {
  int block = -1;
};

struct BlockInfo {
  BlockKind kind;
  int dim;  // 1 for scalars
  std::string name;
};

/// Value of every variable block. Scalars are stored as 1x1 matrices.
using Assignment = std::vector<CMatrix>;

/// Affine map from the variable blocks into dim x dim Hermitian matrices:
///   F = C + sum_i c_i L_i X_i L_i^H + sum_j x_j M_j.
class AffineHermitian {
 public:
  explicit AffineHermitian(int dim);

  int dim() const { return dim_; }

  AffineHermitian& add_constant(const CMatrix& c);
  AffineHermitian& add_constant(double c);  // c * I
  /// coeff * L X L^H for a matrix block X; L is dim x block_dim.
  AffineHermitian& add_congruence(Var x, const CMatrix& left, double coeff = 1.0);
  /// x * M for a scalar block x.
  AffineHermitian& add_scaled(Var x, const CMatrix& m);
  AffineHermitian& add_scaled(Var x, double c);  // x * c * I
  /// coeff * Tr(X) on a 1x1 expression.
  AffineHermitian& add_trace(Var x, int block_dim, double coeff = 1.0);
  /// coeff * h X h^H on a 1x1 expression.
  AffineHermitian& add_quad(Var x, const CRowVector& h, double coeff = 1.0);

  /// Evaluates the expression at a variable assignment.
  CMatrix evaluate(const Assignment& values) const;

  struct CongruenceTerm {
    Var var;
    CMatrix left;
    double coeff;
  };
  struct ScaledTerm {
    Var var;
    CMatrix m;
  };
  const CMatrix& constant() const { return constant_; }
  const std::vector<CongruenceTerm>& congruences() const { return congruences_; }
  const std::vector<ScaledTerm>& scaled() const { return scaled_; }

 private:
  int dim_;
  CMatrix constant_;
  std::vector<CongruenceTerm> congruences_;
  std::vector<ScaledTerm> scaled_;
};

class Problem {
 public:
  Var add_hermitian_psd(int dim, std::string name = {});
  Var add_nonnegative(std::string name = {});
  Var add_free(std::string name = {});

  /// F(x) >= 0 in the PSD order (dimension 1 means a scalar inequality).
  void add_psd(AffineHermitian f);
  /// Scalar equality f(x) = 0; f must be 1x1.
  void add_equality(AffineHermitian f);
  void maximize(AffineHermitian f);
  void minimize(AffineHermitian f);

  const std::vector<BlockInfo>& blocks() const { return blocks_; }
  const std::vector<AffineHermitian>& psd_constraints() const { return psd_; }
  const std::vector<AffineHermitian>& equalities() const { return eq_; }
  const AffineHermitian& objective() const { return objective_; }
  bool maximizing() const { return maximize_; }

  /// Checks that every expression references declared blocks with
  /// consistent shapes and finite coefficients.
  void validate() const;

 private:
  Var add_block(BlockKind kind, int dim, std::string name);

  std::vector<BlockInfo> blocks_;
  std::vector<AffineHermitian> psd_;
  std::vector<AffineHermitian> eq_;
  AffineHermitian objective_{1};
  bool maximize_ = false;
};

enum class Status { kOptimal, kInfeasible, kUnbounded, kNumericalFailure };

const char* to_string(Status s);

struct Settings {
  int max_iterations = 200;
  /// Relative duality gap target, gap / (1 + |objective|).
  double gap_tolerance = 1e-8;
  /// Relative primal and dual residual target.
  double feasibility_tolerance = 1e-9;
  /// Minimum eigenvalue accepted on PSD blocks at termination.
  double psd_tolerance = 1e-9;
  /// One line per iteration on stderr.
  bool verbose = false;
};

struct Solution {
  Status status = Status::kNumericalFailure;
  Assignment values;
  double objective = 0.0;
  double duality_gap = 0.0;  // relative to 1 + |objective|
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;

  bool optimal() const { return status == Status::kOptimal; }
  HermitianMatrix matrix(Var v) const;
  double scalar(Var v) const;
};

/// Solves the problem. Pure: no state is shared between calls.
Solution solve(const Problem& problem, const Settings& settings = {});

/// Smallest eigenvalue of every PSD constraint evaluated at `values`.
std::vector<double> constraint_min_eigenvalues(const Problem& problem,
                                               const Assignment& values);

}  // namespace secrate::sdp
