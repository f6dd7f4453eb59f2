#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "sme/errors.hpp"
#include "sme/rng.hpp"

namespace sme {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Dense symmetric matrix; symmetrized on construction so symmetry is exact.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& a);
  static SymMatrix identity(Eigen::Index d);
  static SymMatrix from_diagonal(const Vector& diag);

  const Matrix& mat() const { return m_; }
  Eigen::Index size() const { return m_.rows(); }
  Vector diagonal() const { return m_.diagonal(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

double inf_norm(const Matrix& a);

// Symmetric PSD square root via eigendecomposition. Eigenvalues in
// [-tol, 0) are clamped to 0; below -tol throws EigenvalueBelowTolerance.
// tol < 0 selects the default 1e-10 * ||S||_inf.
SymMatrix sym_sqrt(const SymMatrix& s, double tol = -1.0);

// (S^{1/2})^{-1}; throws SingularCovariance if min eigenvalue <= tol.
SymMatrix sym_sqrt_inv(const SymMatrix& s, double tol = -1.0);

Vector hadamard(const Vector& a, const Vector& b);

// d iid standard normals from the given stream.
Vector gaussian_vector(rng::RngStream& stream, Eigen::Index d);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

// Least-squares line through (log tau_i, log err_i). All inputs must be
// strictly positive; needs at least two points.
LineFit loglog_slope(std::span<const double> taus,
                     std::span<const double> errors);

bool all_finite(const Vector& v);
void require_finite(const Vector& v, const char* what, long step_index);

}  // namespace sme
