#include "sme/numerics.hpp"

#include <cmath>

namespace sme {

SymMatrix::SymMatrix(const Matrix& a) {
  if (a.rows() != a.cols())
    throw LengthMismatch("SymMatrix: input is not square");
  m_ = 0.5 * (a + a.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index d) {
  return SymMatrix(Matrix::Identity(d, d));
}

SymMatrix SymMatrix::from_diagonal(const Vector& diag) {
  return SymMatrix(Matrix(diag.asDiagonal()));
}

double inf_norm(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

namespace {
Eigen::SelfAdjointEigenSolver<Matrix> decompose(const SymMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.mat());
  if (es.info() != Eigen::Success)
    throw Error("sym_sqrt: eigendecomposition failed");
  return es;
}

double default_tol(const SymMatrix& s, double tol) {
  return tol >= 0.0 ? tol : 1e-10 * std::max(1e-300, inf_norm(s.mat()));
}
}  // namespace

SymMatrix sym_sqrt(const SymMatrix& s, double tol) {
  tol = default_tol(s, tol);
  const auto es = decompose(s);
  Vector ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -tol)
      throw EigenvalueBelowTolerance("sym_sqrt: eigenvalue " +
                                     std::to_string(ev(i)) + " below -" +
                                     std::to_string(tol));
    ev(i) = ev(i) > 0.0 ? std::sqrt(ev(i)) : 0.0;
  }
  return SymMatrix(es.eigenvectors() * ev.asDiagonal() *
                   es.eigenvectors().transpose());
}

SymMatrix sym_sqrt_inv(const SymMatrix& s, double tol) {
  tol = default_tol(s, tol);
  const auto es = decompose(s);
  Vector ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) <= tol)
      throw SingularCovariance("sym_sqrt_inv: eigenvalue " +
                               std::to_string(ev(i)) + " <= " +
                               std::to_string(tol));
    ev(i) = 1.0 / std::sqrt(ev(i));
  }
  return SymMatrix(es.eigenvectors() * ev.asDiagonal() *
                   es.eigenvectors().transpose());
}

Vector hadamard(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw LengthMismatch("hadamard: lengths " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  return a.cwiseProduct(b);
}

Vector gaussian_vector(rng::RngStream& stream, Eigen::Index d) {
  Vector v(d);
  stream.normal_fill(std::span<double>(v.data(), static_cast<size_t>(d)));
  return v;
}

LineFit loglog_slope(std::span<const double> taus,
                     std::span<const double> errors) {
  const std::size_t n = taus.size();
  if (n != errors.size())
    throw LengthMismatch("loglog_slope: size mismatch");
  if (n < 2) throw NonPositiveInput("loglog_slope: need at least 2 points");
  double sx = 0, sy = 0;
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(taus[i] > 0.0) || !(errors[i] > 0.0))
      throw NonPositiveInput("loglog_slope: inputs must be > 0");
    xs[i] = std::log(taus[i]);
    ys[i] = std::log(errors[i]);
    sx += xs[i];
    sy += ys[i];
  }
  const double xbar = sx / n, ybar = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  if (sxx == 0.0)
    throw NonPositiveInput("loglog_slope: all tau values identical");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  if (n > 2) {
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
      ss_res += r * r;
    }
    fit.slope_stderr = std::sqrt(ss_res / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

bool all_finite(const Vector& v) { return v.allFinite(); }

void require_finite(const Vector& v, const char* what, long step_index) {
  if (!v.allFinite()) throw NonFiniteState(what, step_index);
}

}  // namespace sme
