#include "sme/sde_models.hpp"

#include <cmath>

namespace sme {

namespace {

// Shared problem-coefficient access with caching for constant Sigma /
// constant curvature (the quadratic problem hits the cached paths only).
class FieldsBase : public SdeModel {
 protected:
  FieldsBase(SdeMeta meta, const Hyper& h, const LossModel& pr,
             double t_start, Eigen::Index blocks, bool has_w, bool has_b)
      : SdeModel(meta, pr.dim(), pr.dim() * blocks, t_start, has_w, has_b),
        pr_(&pr),
        h_(h),
        sched_(h.lambda1, h.lambda2, h.tau, h.epsilon, h.phi_threshold),
        const_sigma_(pr.constant_sigma()) {
    if (const_sigma_) {
      const Vector z = Vector::Zero(d_);
      sig_ = pr.sigma(z).mat();
      sigd_ = pr.sigma_d(z);
      sqs_ = pr.sigma_sqrt(z).mat();
      sqm_ = pr.m_sqrt(z).mat();
    }
  }

  Vector pvec(const Vector& u) const {
    const double eps = h_.epsilon, c = h_.phi_threshold;
    return u.unaryExpr(
        [eps, c](double v) { return 1.0 / (std::sqrt(phi(v, c)) + eps); });
  }
  // phi'(u)/sqrt(phi(u)); vanishes on the clamped branch.
  Vector rvec(const Vector& u) const {
    const double c = h_.phi_threshold;
    return u.unaryExpr([c](double v) {
      return phi_prime(v, c) / std::sqrt(phi(v, c));
    });
  }
  Vector sigma_d_at(const Vector& th) const {
    return const_sigma_ ? sigd_ : pr_->sigma_d(th);
  }
  Matrix sigma_at(const Vector& th) const {
    return const_sigma_ ? sig_ : pr_->sigma(th).mat();
  }
  Matrix sigma_sqrt_at(const Vector& th) const {
    return const_sigma_ ? sqs_ : pr_->sigma_sqrt(th).mat();
  }
  Matrix m_sqrt_at(const Vector& th) const {
    return const_sigma_ ? sqm_ : pr_->m_sqrt(th).mat();
  }
  Vector jvec(const Vector& th, const Vector& grad) const {
    return grad.cwiseProduct(grad) +
           (h_.sigma * h_.sigma) * sigma_d_at(th);
  }
  // grad J . v = 2 diag(grad f) Hess v + sigma^2 grad Sigma_d . v
  Vector gradJ_mul(const Vector& th, const Vector& grad,
                   const Vector& v) const {
    Vector out = 2.0 * grad.cwiseProduct(pr_->hess_mul(th, v));
    if (!const_sigma_)
      out.noalias() += (h_.sigma * h_.sigma) * (pr_->grad_sigma_d(th) * v);
    return out;
  }

  const LossModel* pr_;
  Hyper h_;
  ScheduleFns sched_;
  bool const_sigma_;
  Matrix sig_, sqs_, sqm_;
  Vector sigd_;
};

void zero_out(Matrix& out, Eigen::Index rows, Eigen::Index cols) {
  out.resize(rows, cols);
  out.setZero();
}

// ---------------------------------------------------------------- order 1

class Order1RmspropBalistic final : public FieldsBase {
 public:
  Order1RmspropBalistic(const Hyper& h, const LossModel& pr, double t0)
      : FieldsBase({Optimizer::RMSprop, Regime::Balistic, 1}, h, pr, t0, 2,
                   false, false) {}

  void drift(double, const Vector& x, Vector& out) const override {
    const auto th = x.head(d_);
    const auto u = x.tail(d_);
    const Vector grad = pr_->grad_f(th);
    out.resize(state_dim_);
    out.head(d_) = -grad.cwiseProduct(pvec(u));
    out.tail(d_) = h_.lambda0 * (jvec(th, grad) - u);
  }
  void diffusion_W(double, const Vector&, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
  }
  void diffusion_B(double, const Vector&, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
  }
};

class Order1AdamBalistic final : public FieldsBase {
 public:
  Order1AdamBalistic(const Hyper& h, const LossModel& pr, double t0)
      : FieldsBase({Optimizer::Adam, Regime::Balistic, 1}, h, pr, t0, 3,
                   false, false) {}

  void drift(double t, const Vector& x, Vector& out) const override {
    const auto th = x.head(d_);
    const auto m = x.segment(d_, d_);
    const auto u = x.tail(d_);
    const Vector grad = pr_->grad_f(th);
    out.resize(state_dim_);
    out.head(d_) = -sched_.Gamma(t) * m.cwiseProduct(sched_.Q(t, u));
    out.segment(d_, d_) = h_.lambda1 * (grad - m);
    out.tail(d_) = h_.lambda2 * (jvec(th, grad) - u);
  }
  void diffusion_W(double, const Vector&, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
  }
  void diffusion_B(double, const Vector&, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
  }
};

class Order1RmspropBatch final : public FieldsBase {
 public:
  Order1RmspropBatch(const Hyper& h, const LossModel& pr, double t0)
      : FieldsBase({Optimizer::RMSprop, Regime::BatchEquivalent, 1}, h, pr, t0,
                   2, true, false) {}

  void drift(double, const Vector& x, Vector& out) const override {
    const auto th = x.head(d_);
    const auto u = x.tail(d_);
    const Vector grad = pr_->grad_f(th);
    out.resize(state_dim_);
    out.head(d_) = -grad.cwiseProduct(pvec(u));
    out.tail(d_) =
        h_.lambda0 * (h_.sigma * h_.sigma * sigma_d_at(th) - u);
  }
  void diffusion_W(double, const Vector& x, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
    const auto th = x.head(d_);
    const auto u = x.tail(d_);
    out.topRows(d_) = -h_.sigma * pvec(u).asDiagonal() * sigma_sqrt_at(th);
  }
  void diffusion_B(double, const Vector&, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
  }
};

class Order1AdamBatch final : public FieldsBase {
 public:
  Order1AdamBatch(const Hyper& h, const LossModel& pr, double t0)
      : FieldsBase({Optimizer::Adam, Regime::BatchEquivalent, 1}, h, pr, t0, 3,
                   true, false) {}

  void drift(double t, const Vector& x, Vector& out) const override {
    const auto th = x.head(d_);
    const auto m = x.segment(d_, d_);
    const auto u = x.tail(d_);
    const Vector grad = pr_->grad_f(th);
    out.resize(state_dim_);
    out.head(d_) = -sched_.Gamma(t) * m.cwiseProduct(sched_.Q(t, u));
    out.segment(d_, d_) = h_.lambda1 * (grad - m);
    out.tail(d_) =
        h_.lambda2 * (h_.sigma * h_.sigma * sigma_d_at(th) - u);
  }
  void diffusion_W(double, const Vector& x, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
    out.middleRows(d_, d_) = (h_.lambda1 * h_.sigma) * sigma_sqrt_at(x.head(d_));
  }
  void diffusion_B(double, const Vector&, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
  }
};

// ---------------------------------------------------------------- order 2

class Order2RmspropBalistic final : public FieldsBase {
 public:
  Order2RmspropBalistic(const Hyper& h, const LossModel& pr, double t0)
      : FieldsBase({Optimizer::RMSprop, Regime::Balistic, 2}, h, pr, t0, 2,
                   true, true) {}

  void drift(double, const Vector& x, Vector& out) const override {
    const auto th = x.head(d_);
    const auto u = x.tail(d_);
    const Vector grad = pr_->grad_f(th);
    const Vector p = pvec(u);
    const Vector j = jvec(th, grad);
    const double tau = h_.tau, l0 = h_.lambda0;
    out.resize(state_dim_);
    // theta: -grad.P - tau/2 [ P Hess (P grad) + (l0/2) P^2 (phi'/sqrt phi) (J-u) grad ]
    const Vector hess_term = p.cwiseProduct(
        pr_->hess_mul(th, p.cwiseProduct(grad)));
    const Vector clamp_term = 0.5 * l0 *
        p.cwiseProduct(p).cwiseProduct(rvec(u)).cwiseProduct(j - u)
            .cwiseProduct(grad);
    out.head(d_) =
        -grad.cwiseProduct(p) - 0.5 * tau * (hess_term + clamp_term);
    // u: l0 (J-u) + tau/2 [ l0^2 (J-u) + l0 gradJ (grad.P) ]
    out.tail(d_) = l0 * (j - u) +
                   0.5 * tau *
                       (l0 * l0 * (j - u) +
                        l0 * gradJ_mul(th, grad, grad.cwiseProduct(p)));
  }
  void diffusion_W(double, const Vector& x, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
    const auto th = x.head(d_);
    const auto u = x.tail(d_);
    const Vector grad = pr_->grad_f(th);
    const double st = std::sqrt(h_.tau);
    const Matrix sq = sigma_sqrt_at(th);
    out.topRows(d_) = (st * h_.sigma) * pvec(u).asDiagonal() * sq;
    out.bottomRows(d_) =
        (-2.0 * st * h_.lambda0 * h_.sigma) * grad.asDiagonal() * sq;
  }
  void diffusion_B(double, const Vector& x, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
    out.bottomRows(d_) = (std::sqrt(h_.tau) * h_.lambda0 * h_.sigma *
                          h_.sigma) * m_sqrt_at(x.head(d_));
  }
};

class Order2AdamBalistic final : public FieldsBase {
 public:
  Order2AdamBalistic(const Hyper& h, const LossModel& pr, double t0)
      : FieldsBase({Optimizer::Adam, Regime::Balistic, 2}, h, pr, t0, 3, true,
                   true) {}

  void drift(double t, const Vector& x, Vector& out) const override {
    const auto th = x.head(d_);
    const auto m = x.segment(d_, d_);
    const auto u = x.tail(d_);
    const Vector grad = pr_->grad_f(th);
    const Vector q = sched_.Q(t, u);
    const Vector j = jvec(th, grad);
    const double gam = sched_.Gamma(t);
    const double tau = h_.tau, l1 = h_.lambda1, l2 = h_.lambda2;
    out.resize(state_dim_);
    const Vector mq = m.cwiseProduct(q);
    // theta: -Gamma m.Q + tau/2 [ l1 Gamma (m-grad).Q + m . dt(Gamma Q)(u) ]
    //        - tau l2/4 Gamma Q^2 (phi'/sqrt phi) m (J-u)
    out.head(d_) =
        -gam * mq +
        0.5 * tau *
            (l1 * gam * (m - grad).cwiseProduct(q) +
             m.cwiseProduct(sched_.dt_GammaQ(t, u))) -
        0.25 * tau * l2 * gam *
            q.cwiseProduct(q).cwiseProduct(rvec(u)).cwiseProduct(m)
                .cwiseProduct(j - u);
    out.segment(d_, d_) =
        l1 * (grad - m) +
        0.5 * tau *
            (l1 * l1 * (grad - m) + l1 * gam * pr_->hess_mul(th, mq));
    out.tail(d_) =
        l2 * (j - u) +
        0.5 * tau * (l2 * l2 * (j - u) + l2 * gam * gradJ_mul(th, grad, mq));
  }
  void diffusion_W(double, const Vector& x, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
    const auto th = x.head(d_);
    const Vector grad = pr_->grad_f(th);
    const double st = std::sqrt(h_.tau);
    const Matrix sq = sigma_sqrt_at(th);
    out.middleRows(d_, d_) = (-st * h_.lambda1 * h_.sigma) * sq;
    out.bottomRows(d_) =
        (-2.0 * st * h_.lambda2 * h_.sigma) * grad.asDiagonal() * sq;
  }
  void diffusion_B(double, const Vector& x, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
    out.bottomRows(d_) = (std::sqrt(h_.tau) * h_.lambda2 * h_.sigma *
                          h_.sigma) * m_sqrt_at(x.head(d_));
  }
};

class Order2RmspropBatch final : public FieldsBase {
 public:
  Order2RmspropBatch(const Hyper& h, const LossModel& pr, double t0)
      : FieldsBase({Optimizer::RMSprop, Regime::BatchEquivalent, 2}, h, pr, t0,
                   2, true, true) {}

  void drift(double, const Vector& x, Vector& out) const override {
    const auto th = x.head(d_);
    const auto u = x.tail(d_);
    const Vector grad = pr_->grad_f(th);
    const Vector p = pvec(u);
    const double tau = h_.tau, l0 = h_.lambda0, s2 = h_.sigma * h_.sigma;
    const Vector sd = sigma_d_at(th);
    out.resize(state_dim_);

    const Vector hess_term =
        p.cwiseProduct(pr_->hess_mul(th, p.cwiseProduct(grad)));
    const Vector clamp_term = 0.5 * l0 *
        p.cwiseProduct(p).cwiseProduct(rvec(u))
            .cwiseProduct(s2 * sd - u).cwiseProduct(grad);
    out.head(d_) = -grad.cwiseProduct(p) - 0.5 * tau * (hess_term + clamp_term);
    if (!pr_->constant_curvature()) {
      const Matrix w =
          (p * p.transpose()).cwiseProduct(sigma_at(th));
      out.head(d_) -= tau * s2 * p.cwiseProduct(pr_->third_contract(th, w));
    }

    out.tail(d_) = l0 * (s2 * sd - u) + tau * l0 * grad.cwiseProduct(grad) +
                   0.5 * tau * l0 * l0 * (s2 * sd - u);
    if (!const_sigma_) {
      out.tail(d_) -= 0.5 * tau * l0 * s2 *
                      (pr_->grad_sigma_d(th) * grad.cwiseProduct(p));
      // - tau^2 sigma^4 / 2 * sum_hk P_h P_k Sigma_hk d2_hk Sigma_d
      const Matrix sig = sigma_at(th);
      Vector acc = Vector::Zero(d_);
      for (int hh = 0; hh < d_; ++hh)
        for (int kk = 0; kk < d_; ++kk) {
          const double w = p(hh) * p(kk) * sig(hh, kk);
          if (w == 0.0) continue;
          // d2 Sigma = d2S S + dS dS + dS dS + S d2S with S = Sigma^{1/2}
          const Matrix dsh = pr_->d_sigma_sqrt(th, hh).mat();
          const Matrix dsk = pr_->d_sigma_sqrt(th, kk).mat();
          const Matrix d2s = pr_->d2_sigma_sqrt(th, hh, kk).mat();
          const Matrix s = sigma_sqrt_at(th);
          acc += w * (d2s * s + dsh * dsk + dsk * dsh + s * d2s).diagonal();
        }
      out.tail(d_) -= 0.5 * tau * tau * s2 * s2 * acc;
    }
  }
  void diffusion_W(double, const Vector& x, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
    const auto th = x.head(d_);
    const auto u = x.tail(d_);
    const double tau = h_.tau;
    out.topRows(d_) = h_.sigma * pvec(u).asDiagonal() * sigma_sqrt_at(th) +
                      tau * eval_lambda1(*pr_, th, u, h_);
    out.bottomRows(d_) = tau * eval_lambda2(*pr_, th, u, h_);
  }
  void diffusion_B(double, const Vector& x, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
    out.bottomRows(d_) = (std::sqrt(h_.tau) * h_.lambda0 * h_.sigma *
                          h_.sigma) * m_sqrt_at(x.head(d_));
  }
};

class Order2AdamBatch final : public FieldsBase {
 public:
  Order2AdamBatch(const Hyper& h, const LossModel& pr, double t0)
      : FieldsBase({Optimizer::Adam, Regime::BatchEquivalent, 2}, h, pr, t0, 3,
                   true, true) {}

  void drift(double t, const Vector& x, Vector& out) const override {
    const auto th = x.head(d_);
    const auto m = x.segment(d_, d_);
    const auto u = x.tail(d_);
    const Vector grad = pr_->grad_f(th);
    const Vector q = sched_.Q(t, u);
    const double gam = sched_.Gamma(t);
    const double tau = h_.tau, l1 = h_.lambda1, l2 = h_.lambda2;
    const double s2 = h_.sigma * h_.sigma;
    const Vector sd = sigma_d_at(th);
    const Vector mq = m.cwiseProduct(q);
    out.resize(state_dim_);
    out.head(d_) =
        -gam * mq +
        0.5 * tau *
            (l1 * gam * (m - grad).cwiseProduct(q) +
             m.cwiseProduct(sched_.dt_GammaQ(t, u))) -
        0.25 * tau * l2 * gam *
            q.cwiseProduct(q).cwiseProduct(rvec(u)).cwiseProduct(m)
                .cwiseProduct(s2 * sd - u);
    out.segment(d_, d_) =
        l1 * (grad - m) +
        0.5 * tau * (l1 * l1 * (grad - m) + l1 * gam * pr_->hess_mul(th, mq));
    out.tail(d_) = l2 * (s2 * sd - u) + tau * l2 * grad.cwiseProduct(grad) +
                   0.5 * tau * l2 * l2 * (s2 * sd - u);
    if (!const_sigma_)
      out.tail(d_) +=
          0.5 * tau * l2 * s2 * gam * (pr_->grad_sigma_d(th) * mq);
  }
  void diffusion_W(double t, const Vector& x, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
    const auto th = x.head(d_);
    const auto m = x.segment(d_, d_);
    const auto u = x.tail(d_);
    const Vector grad = pr_->grad_f(th);
    const double tau = h_.tau, gam = sched_.Gamma(t);
    const Vector q = sched_.Q(t, u);
    const Matrix sq = sigma_sqrt_at(th);
    out.topRows(d_) =
        (0.5 * tau * h_.lambda1 * h_.sigma * gam) * q.asDiagonal() * sq;
    Matrix mrow = sq;
    if (!const_sigma_) {
      const Vector mq = m.cwiseProduct(q);
      for (int hh = 0; hh < d_; ++hh)
        mrow += (0.5 * tau * gam * mq(hh)) * pr_->d_sigma_sqrt(th, hh).mat();
    }
    out.middleRows(d_, d_) = (-h_.lambda1 * h_.sigma) * mrow;
    out.bottomRows(d_) =
        (-2.0 * tau * h_.lambda2 * h_.sigma) * grad.asDiagonal() * sq;
  }
  void diffusion_B(double, const Vector& x, Matrix& out) const override {
    zero_out(out, state_dim_, d_);
    out.bottomRows(d_) = (std::sqrt(h_.tau) * h_.lambda2 * h_.sigma *
                          h_.sigma) * m_sqrt_at(x.head(d_));
  }
};

void check_adam_start(Optimizer opt, double t_start) {
  if (opt == Optimizer::Adam && !(t_start > 0.0))
    throw InvalidStart("adam continuous models need t_start > 0");
}

}  // namespace

Matrix eval_lambda1(const LossModel& pr, const Vector& theta, const Vector& u,
                    const Hyper& h) {
  const Eigen::Index d = pr.dim();
  const double c = h.phi_threshold, eps = h.epsilon;
  const double s = h.sigma, s2 = s * s;
  const Vector p = u.unaryExpr(
      [eps, c](double v) { return 1.0 / (std::sqrt(phi(v, c)) + eps); });
  const Vector grad = pr.grad_f(theta);
  const Vector sd = pr.sigma_d(theta);
  const Matrix sq = pr.sigma_sqrt(theta).mat();

  // (1/2) sigma grad_theta(grad f . P) diag(P) Sigma^{1/2}
  Matrix out = (0.5 * s) * (p.asDiagonal() * pr.hessian(theta)) *
               p.asDiagonal() * sq;
  // -(lambda0/4) diag(P^2 phi'/(2 sqrt phi) (sigma^2 Sigma_d - u)) Sigma^{1/2}
  const Vector half_r = u.unaryExpr([c](double v) {
    return phi_prime(v, c) / (2.0 * std::sqrt(phi(v, c)));
  });
  const Vector w2 =
      p.cwiseProduct(p).cwiseProduct(half_r).cwiseProduct(s2 * sd - u);
  out -= (0.25 * h.lambda0) * w2.asDiagonal() * sq;

  if (!pr.constant_sigma()) {
    const Matrix sig = pr.sigma(theta).mat();
    std::vector<Matrix> ds(d);
    for (int hh = 0; hh < d; ++hh) ds[hh] = pr.d_sigma_sqrt(theta, hh).mat();
    for (int hh = 0; hh < d; ++hh)
      out -= (0.5 * s * p(hh) * grad(hh)) * (p.asDiagonal() * ds[hh]);
    Matrix quad = Matrix::Zero(d, d);
    Matrix cross = Matrix::Zero(d, d);
    for (int hh = 0; hh < d; ++hh)
      for (int kk = 0; kk < d; ++kk) {
        const double w = p(hh) * p(kk) * sig(hh, kk);
        if (w == 0.0) continue;
        quad += w * (p.asDiagonal() * pr.d2_sigma_sqrt(theta, hh, kk).mat());
        cross += w * (ds[hh] * ds[kk]);
      }
    out += (s2 * s) * quad;
    if (inf_norm(cross) > 0.0) {
      // (diag(P) Sigma^{1/2})^{-1} = Sigma^{-1/2} diag(1/P)
      const Matrix inv =
          pr.sigma_sqrt_inv(theta).mat() * p.cwiseInverse().asDiagonal();
      out += (s2 * s) * inv * cross;
    }
  }
  return out;
}

Matrix eval_lambda2(const LossModel& pr, const Vector& theta, const Vector& u,
                    const Hyper& h) {
  const double s = h.sigma;
  const Matrix sq = pr.sigma_sqrt(theta).mat();
  Matrix out = (-2.0 * s) * pr.grad_f(theta).asDiagonal() * sq;
  if (!pr.constant_sigma()) {
    const double c = h.phi_threshold, eps = h.epsilon;
    const Vector p = u.unaryExpr(
        [eps, c](double v) { return 1.0 / (std::sqrt(phi(v, c)) + eps); });
    out -= (0.5 * s * s * s) * pr.grad_sigma_d(theta) * p.asDiagonal() * sq;
  }
  return h.lambda0 * out;
}

std::unique_ptr<SdeModel> build_order1(Optimizer opt, Regime regime,
                                       const Hyper& h, const LossModel& pr,
                                       double t_start) {
  check_adam_start(opt, t_start);
  if (opt == Optimizer::RMSprop) {
    if (regime == Regime::Balistic)
      return std::make_unique<Order1RmspropBalistic>(h, pr, t_start);
    return std::make_unique<Order1RmspropBatch>(h, pr, t_start);
  }
  if (regime == Regime::Balistic)
    return std::make_unique<Order1AdamBalistic>(h, pr, t_start);
  return std::make_unique<Order1AdamBatch>(h, pr, t_start);
}

std::unique_ptr<SdeModel> build_order2(Optimizer opt, Regime regime,
                                       const Hyper& h, const LossModel& pr,
                                       double t_start, bool generalized_lambda) {
  check_adam_start(opt, t_start);
  if (!generalized_lambda) {
    const bool unit = h.lambda0 == 1.0 && h.lambda1 == 1.0 && h.lambda2 == 1.0;
    if (!unit)
      throw ValidationError(
          "order-2 models are stated for lambda = 1; enable "
          "generalized_lambda to use other values");
  }
  if (opt == Optimizer::RMSprop) {
    if (regime == Regime::Balistic)
      return std::make_unique<Order2RmspropBalistic>(h, pr, t_start);
    return std::make_unique<Order2RmspropBatch>(h, pr, t_start);
  }
  if (regime == Regime::Balistic)
    return std::make_unique<Order2AdamBalistic>(h, pr, t_start);
  return std::make_unique<Order2AdamBatch>(h, pr, t_start);
}

std::unique_ptr<SdeModel> build_model(int order, Optimizer opt, Regime regime,
                                      const Hyper& h, const LossModel& pr,
                                      double t_start, bool generalized_lambda) {
  if (order == 1) return build_order1(opt, regime, h, pr, t_start);
  if (order == 2)
    return build_order2(opt, regime, h, pr, t_start, generalized_lambda);
  throw ValidationError("order must be 1 or 2");
}

}  // namespace sme
