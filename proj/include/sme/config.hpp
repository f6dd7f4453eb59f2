#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sme/discrete.hpp"

namespace sme {

// Flat `key = value` sections: [problem], [optimizer], [simulation],
// [analysis]. '#' starts a comment, booleans are true/false, lists are
// comma-separated. Unknown sections or keys are rejected. Grammar is
// documented in docs/config.md.
struct ExperimentConfig {
  // [problem]
  int d = 6;
  long dataset_size = 128000;
  std::uint64_t seed_problem = 1;
  std::uint64_t seed_dataset = 2;
  DataMode data_mode = DataMode::Empirical;
  MMode m_mode = MMode::GaussianAnalytic;

  // [optimizer]
  Optimizer optimizer = Optimizer::RMSprop;
  Regime regime = Regime::Balistic;
  // unset -> resolved by order: order-1 uses (0.5, 1, 0.5), order-2 uses 1.
  std::optional<double> lambda0, lambda1, lambda2;
  double epsilon = 1e-6;
  double sigma = 1.0;
  NoiseMode noise_mode = NoiseMode::Dataset;
  int batch_b0 = 1;
  bool generalized_lambda = false;

  // [simulation]
  int order = 1;
  double tau = 0.125;
  std::vector<double> tau_list;  // strictly decreasing when present
  double horizon_T = 10.0;
  std::optional<double> t_start;        // required for Adam, >= 2 tau
  std::optional<double> dt;             // default tau^2
  std::optional<double> phi_threshold;  // default tau
  std::uint64_t seed_discrete = 11;
  std::uint64_t seed_continuous = 12;
  long paths_discrete = 0;    // 0 -> path-count schedule
  long paths_continuous = 0;  // 0 -> path-count schedule
  int threads = 0;

  // [analysis]
  std::vector<std::string> test_functions;  // empty -> defaults
  double stderr_gate = 0.25;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& c);
// Throws ValidationError naming the violated invariant.
void validate_config(const ExperimentConfig& c);

// eta = tau (balistic) or sqrt(tau) (batch-equivalent).
double derive_eta(Regime regime, double tau);

// Resolved hyperparameters for a given tau (lambda defaults by order,
// phi_threshold defaults to tau).
Hyper make_hyper(const ExperimentConfig& c, double tau);

// Per-run path-count schedule:
//   order 1: min(max(100 sqrt(T) tau^-2, 1e4), 1e7)
//   order 2: min(max(100 sqrt(T) tau^-4, 1e5), 1e7)
long default_paths(int order, double horizon_T, double tau);

std::string read_text_file(const std::string& path);

}  // namespace sme
