#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "sme/numerics.hpp"

namespace sme {

// Loss-model capabilities the discrete dynamics and SDE coefficients need:
// gradients, Hessian actions, the gradient-noise covariance Sigma and the
// squared-noise covariance M, with their square roots and derivatives.
class LossModel {
 public:
  virtual ~LossModel() = default;

  virtual Eigen::Index dim() const = 0;

  virtual Vector grad_f(const Vector& theta) const = 0;
  virtual Vector hess_mul(const Vector& theta, const Vector& v) const = 0;
  virtual Matrix hessian(const Vector& theta) const = 0;
  // sum_{h,k} w(h,k) * grad(d^2_{h,k} f)(theta)
  virtual Vector third_contract(const Vector& theta, const Matrix& w) const = 0;

  virtual SymMatrix sigma(const Vector& theta) const = 0;
  virtual Vector sigma_d(const Vector& theta) const = 0;
  virtual SymMatrix sigma_sqrt(const Vector& theta) const = 0;
  virtual SymMatrix sigma_sqrt_inv(const Vector& theta) const = 0;
  // Jacobian of sigma_d: (i,j) = d_j Sigma_d,i
  virtual Matrix grad_sigma_d(const Vector& theta) const = 0;
  virtual SymMatrix d_sigma_sqrt(const Vector& theta, int h) const = 0;
  virtual SymMatrix d2_sigma_sqrt(const Vector& theta, int h, int k) const = 0;

  virtual SymMatrix m_matrix(const Vector& theta) const = 0;
  virtual SymMatrix m_sqrt(const Vector& theta) const = 0;

  // One draw of (1/B) sum_i (grad f_{gamma_i}(theta) - grad f(theta)) over
  // B uniform dataset indices. Mean over the index law is exactly zero.
  virtual Vector sample_deviation(const Vector& theta, int batch,
                                  rng::RngStream& stream) const = 0;

  // Coefficient caching hints for the SDE builders.
  virtual bool constant_sigma() const { return false; }
  virtual bool constant_curvature() const { return false; }
};

enum class DataMode { Empirical, Population };
enum class MMode { GaussianAnalytic, Empirical };

struct ProblemOptions {
  int d = 6;
  std::uint64_t h_seed = 1;
  std::uint64_t data_seed = 2;
  long dataset_size = 128000;
  DataMode mode = DataMode::Empirical;
  MMode m_mode = MMode::GaussianAnalytic;
};

// f_gamma(theta) = 1/2 (theta-gamma)^T H (theta-gamma) - 1/2 Tr(H) with
// gamma ~ N(0, I) from a fixed synthetic dataset. H = A^T A / d + 0.1 I for
// a seeded standard-normal A, so H is strictly positive definite and
// Sigma^{1/2} is invertible. Sigma is constant in theta, hence every
// Sigma-derivative and the third-derivative contraction vanish.
class QuadraticGaussianProblem final : public LossModel {
 public:
  explicit QuadraticGaussianProblem(const ProblemOptions& opts);

  Eigen::Index dim() const override { return h_.rows(); }
  Vector grad_f(const Vector& theta) const override;
  Vector hess_mul(const Vector& theta, const Vector& v) const override;
  Matrix hessian(const Vector& theta) const override;
  Vector third_contract(const Vector& theta, const Matrix& w) const override;

  SymMatrix sigma(const Vector& theta) const override;
  Vector sigma_d(const Vector& theta) const override;
  SymMatrix sigma_sqrt(const Vector& theta) const override;
  SymMatrix sigma_sqrt_inv(const Vector& theta) const override;
  Matrix grad_sigma_d(const Vector& theta) const override;
  SymMatrix d_sigma_sqrt(const Vector& theta, int h) const override;
  SymMatrix d2_sigma_sqrt(const Vector& theta, int h, int k) const override;

  SymMatrix m_matrix(const Vector& theta) const override;
  SymMatrix m_sqrt(const Vector& theta) const override;

  Vector sample_deviation(const Vector& theta, int batch,
                          rng::RngStream& stream) const override;
  // Full pass over the dataset instead of sampling; identically ~0.
  Vector deviation_full_pass() const;

  bool constant_sigma() const override { return true; }
  bool constant_curvature() const override { return true; }

  // Empirical objective mean_j f_{gamma_j}(theta) (population: E_gamma).
  double loss(const Vector& theta) const;

  const Matrix& h_matrix() const { return h_; }
  const Matrix& dataset() const { return data_; }
  const Vector& dataset_mean() const { return data_mean_; }
  const ProblemOptions& options() const { return opts_; }

  void save_dataset(const std::string& path) const;
  // Reads header + payload; throws Error on format mismatch.
  static Matrix load_dataset(const std::string& path, ProblemOptions* meta);

 private:
  ProblemOptions opts_;
  Matrix h_;
  Matrix data_;       // d x M samples (empirical mode)
  Vector data_mean_;  // gamma-bar (zero in population mode)
  Matrix dev_;        // columns -H (gamma_j - gamma_bar)
  Matrix c_hat_;      // sampling-law covariance of gamma
  SymMatrix sigma_, m_;
  Vector sigma_d_;
  SymMatrix sigma_sqrt_, m_sqrt_;
};

QuadraticGaussianProblem generate_problem(int d, std::uint64_t h_seed,
                                          std::uint64_t data_seed,
                                          long dataset_size);

}  // namespace sme
