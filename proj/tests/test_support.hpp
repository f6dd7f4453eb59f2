#pragma once

#include "sme/problem.hpp"

namespace sme::testing {

// Quadratic loss with an explicit Hessian and noise covariance factor:
// f_gamma(theta) = 1/2 (theta - gamma)^T H (theta - gamma), gamma ~ N(0, C),
// population law (gamma_bar = 0). Lets tests pin H = I, d = 1 etc. exactly.
class SimpleQuadratic : public LossModel {
 public:
  SimpleQuadratic(Matrix h, Matrix c)
      : h_(std::move(h)), c_(std::move(c)) {
    sigma_ = SymMatrix(h_ * c_ * h_);
    sigma_sqrt_ = sym_sqrt(sigma_);
    m_ = SymMatrix(2.0 * sigma_.mat().cwiseProduct(sigma_.mat()));
    m_sqrt_ = sym_sqrt(m_);
    c_sqrt_ = sym_sqrt(SymMatrix(c_));
  }

  Eigen::Index dim() const override { return h_.rows(); }
  Vector grad_f(const Vector& theta) const override { return h_ * theta; }
  Vector hess_mul(const Vector&, const Vector& v) const override {
    return h_ * v;
  }
  Matrix hessian(const Vector&) const override { return h_; }
  Vector third_contract(const Vector&, const Matrix&) const override {
    return Vector::Zero(dim());
  }
  SymMatrix sigma(const Vector&) const override { return sigma_; }
  Vector sigma_d(const Vector&) const override { return sigma_.diagonal(); }
  SymMatrix sigma_sqrt(const Vector&) const override { return sigma_sqrt_; }
  SymMatrix sigma_sqrt_inv(const Vector&) const override {
    return sym_sqrt_inv(sigma_);
  }
  Matrix grad_sigma_d(const Vector&) const override {
    return Matrix::Zero(dim(), dim());
  }
  SymMatrix d_sigma_sqrt(const Vector&, int) const override {
    return SymMatrix(Matrix::Zero(dim(), dim()));
  }
  SymMatrix d2_sigma_sqrt(const Vector&, int, int) const override {
    return SymMatrix(Matrix::Zero(dim(), dim()));
  }
  SymMatrix m_matrix(const Vector&) const override { return m_; }
  SymMatrix m_sqrt(const Vector&) const override { return m_sqrt_; }
  Vector sample_deviation(const Vector&, int batch,
                          rng::RngStream& stream) const override {
    Vector acc = Vector::Zero(dim());
    for (int i = 0; i < batch; ++i)
      acc -= h_ * (c_sqrt_.mat() * gaussian_vector(stream, dim()));
    return acc / batch;
  }
  bool constant_sigma() const override { return true; }
  bool constant_curvature() const override { return true; }

 private:
  Matrix h_, c_;
  SymMatrix sigma_, sigma_sqrt_, m_, m_sqrt_, c_sqrt_;
};

inline SimpleQuadratic scalar_problem(double h, double c = 1.0) {
  Matrix hm(1, 1), cm(1, 1);
  hm << h;
  cm << c;
  return SimpleQuadratic(hm, cm);
}

inline Matrix random_psd(int d, std::uint64_t seed) {
  rng::RngStream st(seed, rng::kSpaceProblem);
  Matrix a(d, d);
  for (int j = 0; j < d; ++j) a.col(j) = gaussian_vector(st, d);
  return a.transpose() * a;
}

inline Vector random_vector(int d, std::uint64_t seed) {
  rng::RngStream st(seed, rng::kSpaceProblem, 99);
  return gaussian_vector(st, d);
}

}  // namespace sme::testing
