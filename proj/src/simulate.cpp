#include "sme/simulate.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace sme {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SME_LAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

long IntegrationPlan::n_steps() const {
  return std::llround((t_end - t_start) / dt);
}

void IntegrationPlan::validate(double tau) const {
  if (!(dt > 0)) throw ValidationError("plan: dt must be > 0");
  if (dt > tau + 1e-15) throw ValidationError("plan: dt <= tau required");
  if (!(t_end >= t_start)) throw ValidationError("plan: t_end >= t_start");
  for (double t : record_times)
    if (t < t_start - 1e-12 || t > t_end + 1e-12)
      throw ValidationError("plan: record time outside [t_start, t_end]");
}

void integrate_path(
    const SdeModel& model, const Vector& x0, const IntegrationPlan& plan,
    rng::RngStream& w_stream, rng::RngStream& b_stream,
    const std::function<void(int, double, const Vector&)>& on_record) {
  const Eigen::Index n = model.state_dim();
  const Eigen::Index d = model.noise_dim();
  const double dt = plan.dt;
  const double sq_dt = std::sqrt(dt);
  const long n_steps = plan.n_steps();

  std::vector<long> record_step(plan.record_times.size());
  for (std::size_t i = 0; i < plan.record_times.size(); ++i)
    record_step[i] = std::llround((plan.record_times[i] - plan.t_start) / dt);

  Vector x = x0;
  Vector drift(n), xi(d);
  Matrix dw(n, d), db(n, d);
  std::size_t next_rec = 0;

  auto record_due = [&](long step) {
    while (next_rec < record_step.size() && record_step[next_rec] <= step) {
      if (!x.allFinite()) throw NonFiniteState("sde state", step);
      const double t = plan.t_start + static_cast<double>(step) * dt;
      on_record(static_cast<int>(next_rec), t, x);
      ++next_rec;
    }
  };

  record_due(0);
  const bool use_w = model.has_W();
  const bool use_b = model.has_B();
  for (long s = 0; s < n_steps && next_rec < record_step.size(); ++s) {
    const double t = plan.t_start + static_cast<double>(s) * dt;
    model.drift(t, x, drift);
    if (use_w) model.diffusion_W(t, x, dw);
    if (use_b) model.diffusion_B(t, x, db);
    x.noalias() += dt * drift;
    if (use_w) {
      w_stream.normal_fill(std::span<double>(xi.data(), xi.size()));
      x.noalias() += sq_dt * (dw * xi);
    }
    if (use_b) {
      b_stream.normal_fill(std::span<double>(xi.data(), xi.size()));
      x.noalias() += sq_dt * (db * xi);
    }
    record_due(s + 1);
  }
}

namespace {
constexpr long kBlock = 256;

struct KahanAcc {
  std::vector<double> sum, comp;
  explicit KahanAcc(std::size_t n) : sum(n, 0.0), comp(n, 0.0) {}
  void add(std::size_t i, double v) {
    const double y = v - comp[i];
    const double t = sum[i] + y;
    comp[i] = (t - sum[i]) - y;
    sum[i] = t;
  }
};
}  // namespace

EnsembleStats ensemble_reduce(
    const std::function<void(long, std::span<double>)>& path_values,
    long n_paths, const std::vector<double>& times, int n_fns, int threads) {
  if (n_paths < 1) throw ValidationError("ensemble: n_paths >= 1 required");
  const std::size_t n_vals = times.size() * static_cast<std::size_t>(n_fns);
  const long n_blocks = (n_paths + kBlock - 1) / kBlock;
  threads = std::min<long>(resolve_threads(threads), n_blocks);

  std::vector<KahanAcc> block_sum(n_blocks, KahanAcc(n_vals));
  std::vector<KahanAcc> block_sq(n_blocks, KahanAcc(n_vals));
  std::atomic<long> next_block{0};
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&]() {
    std::vector<double> vals(n_vals);
    try {
      for (;;) {
        const long b = next_block.fetch_add(1);
        if (b >= n_blocks) break;
        const long begin = b * kBlock;
        const long end = std::min(n_paths, begin + kBlock);
        for (long p = begin; p < end; ++p) {
          path_values(p, std::span<double>(vals));
          for (std::size_t i = 0; i < n_vals; ++i) {
            block_sum[b].add(i, vals[i]);
            block_sq[b].add(i, vals[i] * vals[i]);
          }
        }
      }
    } catch (...) {
      std::scoped_lock lk(error_mu);
      if (!first_error) first_error = std::current_exception();
      next_block.store(n_blocks);
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // Serial reduction in block order keeps results thread-count invariant.
  KahanAcc total(n_vals), total_sq(n_vals);
  for (long b = 0; b < n_blocks; ++b)
    for (std::size_t i = 0; i < n_vals; ++i) {
      total.add(i, block_sum[b].sum[i]);
      total_sq.add(i, block_sq[b].sum[i]);
    }

  EnsembleStats stats;
  stats.times = times;
  stats.n_paths = n_paths;
  const auto n_times = static_cast<Eigen::Index>(times.size());
  stats.mean.resize(n_times, n_fns);
  stats.sem.resize(n_times, n_fns);
  const double n = static_cast<double>(n_paths);
  for (Eigen::Index ti = 0; ti < n_times; ++ti)
    for (int fi = 0; fi < n_fns; ++fi) {
      const std::size_t i = static_cast<std::size_t>(ti) * n_fns + fi;
      const double mean = total.sum[i] / n;
      stats.mean(ti, fi) = mean;
      if (n_paths > 1) {
        double var = (total_sq.sum[i] - n * mean * mean) / (n - 1.0);
        if (var < 0.0) var = 0.0;
        stats.sem(ti, fi) = std::sqrt(var / n);
      } else {
        stats.sem(ti, fi) = 0.0;
      }
    }
  return stats;
}

}  // namespace sme
