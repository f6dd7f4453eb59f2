#pragma once

#include <memory>

#include "sme/discrete.hpp"

namespace sme {

struct SdeMeta {
  Optimizer optimizer;
  Regime regime;
  int order;
};

// Time-dependent drift plus block diffusion over two independent Brownian
// drivers: W carries the gradient noise, B the squared-gradient
// fluctuation. Order-1 models have diffusion_B == 0; order-1 balistic
// models are pure ODEs (both diffusions zero).
class SdeModel {
 public:
  virtual ~SdeModel() = default;

  Eigen::Index state_dim() const { return state_dim_; }
  Eigen::Index noise_dim() const { return d_; }
  double t_start() const { return t_start_; }
  const SdeMeta& meta() const { return meta_; }
  bool has_W() const { return has_w_; }
  bool has_B() const { return has_b_; }

  virtual void drift(double t, const Vector& x, Vector& out) const = 0;
  // out is state_dim x d; zero rows for blocks the driver does not touch.
  virtual void diffusion_W(double t, const Vector& x, Matrix& out) const = 0;
  virtual void diffusion_B(double t, const Vector& x, Matrix& out) const = 0;

 protected:
  SdeModel(SdeMeta meta, Eigen::Index d, Eigen::Index state_dim,
           double t_start, bool has_w, bool has_b)
      : meta_(meta), d_(d), state_dim_(state_dim), t_start_(t_start),
        has_w_(has_w), has_b_(has_b) {}
  SdeMeta meta_;
  Eigen::Index d_, state_dim_;
  double t_start_;
  bool has_w_, has_b_;
};

// Builders for the eight continuous models. Adam models require
// t_start > 0 (the bias-correction ratio is singular at t = 0) and are
// meant to start from the deterministically computed second iterate.
// Order-2 models are written for lambda = 1; generalized_lambda = true
// enables the lambda-scaled coefficients (validated by the one-step
// moment oracle, not by the paper's displays).
std::unique_ptr<SdeModel> build_order1(Optimizer opt, Regime regime,
                                       const Hyper& h, const LossModel& problem,
                                       double t_start = 0.0);
std::unique_ptr<SdeModel> build_order2(Optimizer opt, Regime regime,
                                       const Hyper& h, const LossModel& problem,
                                       double t_start = 0.0,
                                       bool generalized_lambda = false);
std::unique_ptr<SdeModel> build_model(int order, Optimizer opt, Regime regime,
                                      const Hyper& h, const LossModel& problem,
                                      double t_start = 0.0,
                                      bool generalized_lambda = false);

// Order-tau diffusion corrections of the batch-equivalent order-2 RMSprop
// model. Lambda1's last term needs Sigma^{1/2} invertible; it is formed
// only when the d Sigma^{1/2} factors are nonzero (never for constant
// Sigma).
Matrix eval_lambda1(const LossModel& problem, const Vector& theta,
                    const Vector& u, const Hyper& h);
Matrix eval_lambda2(const LossModel& problem, const Vector& theta,
                    const Vector& u, const Hyper& h);

}  // namespace sme
