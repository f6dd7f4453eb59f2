#pragma once

#include <functional>
#include <vector>

#include "sme/sde_models.hpp"

namespace sme {

// Resolves worker count: explicit request, else SME_LAB_THREADS, else
// hardware concurrency.
int resolve_threads(int requested = 0);

struct IntegrationPlan {
  double dt = 0.0;  // default tau^2, set by callers
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<double> record_times;

  long n_steps() const;
  void validate(double tau) const;
};

// Euler(-Maruyama) over [t_start, t_end]; dW, dB are independent N(0, dt I)
// draws from the two streams. States are recorded at the grid points
// nearest each record time (on_record is called in time order).
void integrate_path(
    const SdeModel& model, const Vector& x0, const IntegrationPlan& plan,
    rng::RngStream& w_stream, rng::RngStream& b_stream,
    const std::function<void(int record_index, double t, const Vector& x)>&
        on_record);

struct EnsembleStats {
  std::vector<double> times;
  Matrix mean;  // n_times x n_fns
  Matrix sem;   // standard error of the mean, same shape
  long n_paths = 0;
};

// Per-path evaluator writes n_times*n_fns values (time-major) into out.
// Reduction is blocked with compensated summation and a fixed block order,
// so results are bitwise identical for any thread count.
EnsembleStats ensemble_reduce(
    const std::function<void(long path, std::span<double> out)>& path_values,
    long n_paths, const std::vector<double>& times, int n_fns, int threads);

}  // namespace sme
