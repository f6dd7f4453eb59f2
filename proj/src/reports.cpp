#include "sme/reports.hpp"

#include <cstdio>

namespace sme {

std::string version_string() {
#ifdef SME_GIT_DESCRIBE
  return SME_GIT_DESCRIBE;
#else
  return "unknown";
#endif
}

namespace {
std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ull;
  }
  return h;
}
}  // namespace

std::string RunManifest::hash_hex() const {
  std::uint64_t h = 0xCBF29CE484222325ull;
  h = fnv1a(h, subcommand);
  h = fnv1a(h, config_text);
  h = fnv1a(h, version_string());
  for (const auto& a : args) h = fnv1a(h, a);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json RunManifest::to_json(double wall_seconds,
                                    const std::string& started_at,
                                    const std::string& finished_at) const {
  return nlohmann::json{{"subcommand", subcommand},
                        {"version", version_string()},
                        {"manifest_hash", hash_hex()},
                        {"config", config_text},
                        {"args", args},
                        {"outputs", outputs},
                        {"started_at", started_at},
                        {"finished_at", finished_at},
                        {"wall_clock_seconds", wall_seconds}};
}

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_series_csv(std::ostream& out, const std::string& manifest_hash,
                      const EnsembleStats& stats,
                      const std::vector<std::string>& fn_names) {
  out << "# manifest=" << manifest_hash << "\n";
  out << "t";
  for (const auto& n : fn_names) out << ",E[" << n << "],se_" << n;
  out << "\n";
  for (std::size_t ti = 0; ti < stats.times.size(); ++ti) {
    out << csv_double(stats.times[ti]);
    for (Eigen::Index f = 0; f < stats.mean.cols(); ++f)
      out << ',' << csv_double(stats.mean(static_cast<Eigen::Index>(ti), f))
          << ',' << csv_double(stats.sem(static_cast<Eigen::Index>(ti), f));
    out << "\n";
  }
}

void write_weak_error_csv(std::ostream& out, const std::string& manifest_hash,
                          const WeakErrorResult& we) {
  out << "# manifest=" << manifest_hash << "\n";
  out << "t";
  for (const auto& n : we.fn_names) out << ",error_" << n << ",stderr_" << n;
  out << "\n";
  for (std::size_t ti = 0; ti < we.times.size(); ++ti) {
    out << csv_double(we.times[ti]);
    for (Eigen::Index f = 0; f < we.error.cols(); ++f)
      out << ',' << csv_double(we.error(static_cast<Eigen::Index>(ti), f))
          << ',' << csv_double(we.se(static_cast<Eigen::Index>(ti), f));
    out << "\n";
  }
  for (std::size_t f = 0; f < we.fn_names.size(); ++f)
    out << "# max_error_" << we.fn_names[f] << "="
        << csv_double(we.max_error[f]) << " stderr="
        << csv_double(we.se_at_max[f]) << " t=" << csv_double(we.t_at_max[f])
        << "\n";
}

void write_sweep_csv(std::ostream& out, const std::string& manifest_hash,
                     const SweepResult& sweep) {
  out << "# manifest=" << manifest_hash << "\n";
  for (const auto& series : sweep.series) {
    out << "# fn=" << series.fn_name;
    if (series.fit)
      out << " slope=" << csv_double(series.fit->slope)
          << " stderr=" << csv_double(series.fit->slope_stderr);
    if (series.flagged) out << " flagged=1";
    out << "\n";
    out << "tau,max_error,stderr,n_paths_d,n_paths_c\n";
    for (const auto& pt : series.points)
      out << csv_double(pt.tau) << ',' << csv_double(pt.max_error) << ','
          << csv_double(pt.stderr_val) << ',' << pt.n_paths_d << ','
          << pt.n_paths_c << "\n";
  }
}

nlohmann::json sweep_to_json(const std::string& experiment,
                             const nlohmann::json& params,
                             const SweepResult& sweep) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& series : sweep.series) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& pt : series.points)
      rows.push_back({{"tau", pt.tau},
                      {"max_error", pt.max_error},
                      {"stderr", pt.stderr_val},
                      {"n_paths_d", pt.n_paths_d},
                      {"n_paths_c", pt.n_paths_c},
                      {"used_in_fit", pt.used_in_fit}});
    nlohmann::json obj{{"experiment", experiment + ":" + series.fn_name},
                       {"params", params},
                       {"rows", rows}};
    obj["slope"] = series.fit ? nlohmann::json(series.fit->slope)
                              : nlohmann::json();
    obj["stderr"] = series.fit ? nlohmann::json(series.fit->slope_stderr)
                               : nlohmann::json();
    obj["flagged"] = series.flagged;
    arr.push_back(obj);
  }
  return arr;
}

nlohmann::json weak_error_to_json(const std::string& experiment,
                                  const nlohmann::json& params,
                                  const WeakErrorResult& we) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t f = 0; f < we.fn_names.size(); ++f) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t ti = 0; ti < we.times.size(); ++ti)
      rows.push_back(
          {{"t", we.times[ti]},
           {"error", we.error(static_cast<Eigen::Index>(ti),
                              static_cast<Eigen::Index>(f))},
           {"stderr", we.se(static_cast<Eigen::Index>(ti),
                            static_cast<Eigen::Index>(f))}});
    arr.push_back({{"experiment", experiment + ":" + we.fn_names[f]},
                   {"params", params},
                   {"rows", rows},
                   {"max_error", we.max_error[f]},
                   {"stderr", we.se_at_max[f]},
                   {"t_at_max", we.t_at_max[f]},
                   {"n_paths_d", we.n_paths_d},
                   {"n_paths_c", we.n_paths_c}});
  }
  return arr;
}

nlohmann::json series_to_json(const std::string& experiment,
                              const nlohmann::json& params,
                              const EnsembleStats& stats,
                              const std::vector<std::string>& fn_names) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t ti = 0; ti < stats.times.size(); ++ti) {
    nlohmann::json row{{"t", stats.times[ti]}};
    for (std::size_t f = 0; f < fn_names.size(); ++f) {
      row["E[" + fn_names[f] + "]"] =
          stats.mean(static_cast<Eigen::Index>(ti), static_cast<Eigen::Index>(f));
      row["se_" + fn_names[f]] =
          stats.sem(static_cast<Eigen::Index>(ti), static_cast<Eigen::Index>(f));
    }
    rows.push_back(row);
  }
  return nlohmann::json{{"experiment", experiment},
                        {"params", params},
                        {"rows", rows},
                        {"n_paths", stats.n_paths}};
}

nlohmann::json toy_to_json(const ToyStats& s) {
  return nlohmann::json{
      {"n", s.n},
      {"replicas", s.replicas},
      {"corr", s.corr_b_omega},
      {"corr_bound", s.corr_bound},
      {"ks_b", s.ks_b},
      {"ks_w", s.ks_w},
      {"ks_critical_1pct", s.ks_critical_1pct},
      {"covariation_mean", s.covariation_mean},
      {"covariation_se", s.covariation_se},
      {"qv_times", s.qv_times},
      {"qv_mean", s.qv_mean},
      {"qv_se", s.qv_se},
      {"var_xi_sq_mean", s.var_xi_sq_mean},
      {"var_xi_sq_se", s.var_xi_sq_se}};
}

}  // namespace sme
