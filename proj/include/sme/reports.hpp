#pragma once

#include <json.hpp>
#include <ostream>

#include "sme/analysis.hpp"
#include "sme/config.hpp"
#include "sme/toy.hpp"

namespace sme {

std::string version_string();

// Everything that determines a run's outputs. The hash goes into the first
// line of every CSV; timestamps live only in the sidecar JSON so reruns
// with identical inputs produce identical CSV bytes.
struct RunManifest {
  std::string subcommand;
  std::string config_text;
  std::vector<std::string> args;
  std::vector<std::string> outputs;

  std::string hash_hex() const;
  nlohmann::json to_json(double wall_seconds,
                         const std::string& started_at,
                         const std::string& finished_at) const;
};

std::string csv_double(double v);  // shortest round-trip formatting

void write_series_csv(std::ostream& out, const std::string& manifest_hash,
                      const EnsembleStats& stats,
                      const std::vector<std::string>& fn_names);

void write_weak_error_csv(std::ostream& out, const std::string& manifest_hash,
                          const WeakErrorResult& we);

// Spec columns: tau, max_error, stderr, n_paths_d, n_paths_c; one block
// per test function introduced by a "# fn=..." comment line.
void write_sweep_csv(std::ostream& out, const std::string& manifest_hash,
                     const SweepResult& sweep);

// One object per test function: {experiment, params, rows[], slope, stderr}.
nlohmann::json sweep_to_json(const std::string& experiment,
                             const nlohmann::json& params,
                             const SweepResult& sweep);

nlohmann::json weak_error_to_json(const std::string& experiment,
                                  const nlohmann::json& params,
                                  const WeakErrorResult& we);

nlohmann::json series_to_json(const std::string& experiment,
                              const nlohmann::json& params,
                              const EnsembleStats& stats,
                              const std::vector<std::string>& fn_names);

nlohmann::json toy_to_json(const ToyStats& stats);

}  // namespace sme
