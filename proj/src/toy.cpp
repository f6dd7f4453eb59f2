#include "sme/toy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "sme/simulate.hpp"

namespace sme {

double draw_xi(XiLaw law, rng::RngStream& stream) {
  if (law == XiLaw::StandardNormal) return stream.normal();
  return std::sqrt(3.0) * (2.0 * stream.uniform01() - 1.0);
}

namespace {
double lerp_path(const std::vector<double>& partial, double t) {
  const long n = static_cast<long>(partial.size()) - 1;
  const double tn = t * static_cast<double>(n);
  long j = static_cast<long>(std::floor(tn));
  if (j < 0) j = 0;
  if (j >= n) return partial.back();
  const double frac = tn - static_cast<double>(j);
  return partial[j] + frac * (partial[j + 1] - partial[j]);
}
}  // namespace

double ToyPaths::b_at(double t) const { return lerp_path(b_partial, t); }
double ToyPaths::w_at(double t) const { return lerp_path(w_partial, t); }

ToyPaths toy_build(const ToyNoiseConfig& config, rng::RngStream& stream) {
  if (config.n < 1) throw ValidationError("toy: n >= 1 required");
  const double sq_tau = std::sqrt(1.0 / static_cast<double>(config.n));
  const double kappa = std::sqrt(config.kappa_sq());
  ToyPaths paths;
  paths.b_partial.resize(config.n + 1);
  paths.w_partial.resize(config.n + 1);
  paths.b_partial[0] = paths.w_partial[0] = 0.0;
  for (long j = 0; j < config.n; ++j) {
    const double xi = draw_xi(config.xi_law, stream);
    paths.b_partial[j + 1] = paths.b_partial[j] + sq_tau * xi;
    paths.w_partial[j + 1] =
        paths.w_partial[j] + sq_tau / kappa * (xi * xi - 1.0);
  }
  return paths;
}

double ks_statistic_normal(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-samples[i] / std::numbers::sqrt2);
    const double hi = static_cast<double>(i + 1) / n - cdf;
    const double lo = cdf - static_cast<double>(i) / n;
    d = std::max({d, hi, lo});
  }
  return d;
}

double ks_critical_value(long n, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double sn = std::sqrt(static_cast<double>(n));
  return c / (sn + 0.12 + 0.11 / sn);
}

ToyStats toy_tests(const ToyNoiseConfig& config, long n_replicas,
                   std::uint64_t seed, int threads) {
  if (n_replicas < 2) throw ValidationError("toy: n_replicas >= 2 required");
  const std::vector<double> qv_times{0.25, 0.5, 0.75, 1.0};
  // Per replica: B_1, W_1, covariation, QV(B) at qv_times, pooled moment
  // sums for corr(b, omega) and Var(xi^2).
  // Values: [b1, w1, cov, qv x4, sum_b, sum_bb, sum_w, sum_ww, sum_bw,
  //          sum_x2, sum_x4]
  const int n_vals = 14;
  const std::vector<double> one_time{1.0};
  // Endpoints are written at disjoint replica indices; no synchronization
  // needed and the KS inputs stay thread-count invariant.
  std::vector<double> b_end(n_replicas), w_end(n_replicas);

  auto replica = [&](long r, std::span<double> out) {
    rng::RngStream stream(seed, rng::kSpaceToy, r);
    const double tau = 1.0 / static_cast<double>(config.n);
    const double sq_tau = std::sqrt(tau);
    const double kappa = std::sqrt(config.kappa_sq());
    double b = 0, w = 0, cov = 0, qv = 0;
    double sb = 0, sbb = 0, sw = 0, sww = 0, sbw = 0, sx2 = 0, sx4 = 0;
    std::array<double, 4> qv_at{};
    std::size_t next_qv = 0;
    for (long j = 0; j < config.n; ++j) {
      const double xi = draw_xi(config.xi_law, stream);
      const double bj = sq_tau * xi;
      const double wj = sq_tau / kappa * (xi * xi - 1.0);
      b += bj;
      w += wj;
      cov += bj * wj;
      qv += bj * bj;
      sb += bj;
      sbb += bj * bj;
      sw += wj;
      sww += wj * wj;
      sbw += bj * wj;
      sx2 += xi * xi;
      sx4 += xi * xi * xi * xi;
      while (next_qv < qv_times.size() &&
             static_cast<double>(j + 1) >=
                 qv_times[next_qv] * static_cast<double>(config.n)) {
        qv_at[next_qv] = qv;
        ++next_qv;
      }
    }
    out[0] = b;
    out[1] = w;
    out[2] = cov;
    for (int i = 0; i < 4; ++i) out[3 + i] = qv_at[i];
    out[7] = sb;
    out[8] = sbb;
    out[9] = sw;
    out[10] = sww;
    out[11] = sbw;
    out[12] = sx2;
    out[13] = sx4;
    b_end[r] = b;
    w_end[r] = w;
  };

  const EnsembleStats st =
      ensemble_reduce(replica, n_replicas, one_time, n_vals, threads);

  ToyStats res;
  res.n = config.n;
  res.replicas = n_replicas;
  const double pairs =
      static_cast<double>(config.n) * static_cast<double>(n_replicas);
  const double mb = st.mean(0, 7) / config.n;   // mean over pooled pairs
  const double mw = st.mean(0, 9) / config.n;
  const double vb = st.mean(0, 8) / config.n - mb * mb;
  const double vw = st.mean(0, 10) / config.n - mw * mw;
  const double cbw = st.mean(0, 11) / config.n - mb * mw;
  res.corr_b_omega = cbw / std::sqrt(vb * vw);
  res.corr_bound = 4.0 / std::sqrt(pairs);
  res.ks_b = ks_statistic_normal(b_end);
  res.ks_w = ks_statistic_normal(w_end);
  res.ks_critical_1pct = ks_critical_value(n_replicas, 0.01);
  res.covariation_mean = st.mean(0, 2);
  res.covariation_se = st.sem(0, 2);
  res.qv_times = qv_times;
  for (int i = 0; i < 4; ++i) {
    res.qv_mean.push_back(st.mean(0, 3 + i));
    res.qv_se.push_back(st.sem(0, 3 + i));
  }
  // Var(xi^2) per replica = mean(xi^4) - mean(xi^2)^2; mean/se across them.
  const double m2 = st.mean(0, 12) / config.n;
  const double m4 = st.mean(0, 13) / config.n;
  res.var_xi_sq_mean = m4 - m2 * m2;
  // se dominated by the fourth-moment average
  res.var_xi_sq_se = st.sem(0, 13) / config.n;
  return res;
}

}  // namespace sme
