#include "sme/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sme {

namespace {
std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, int line) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (...) {
    throw ParseError("expected number, got '" + v + "'", line);
  }
  if (pos != v.size()) throw ParseError("trailing junk in number '" + v + "'", line);
  return x;
}

long parse_long(const std::string& v, int line) {
  const double x = parse_double(v, line);
  if (x != std::floor(x)) throw ParseError("expected integer, got '" + v + "'", line);
  return static_cast<long>(x);
}

std::uint64_t parse_u64(const std::string& v, int line) {
  try {
    return std::stoull(v);
  } catch (...) {
    throw ParseError("expected unsigned integer, got '" + v + "'", line);
  }
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ParseError("expected true/false, got '" + v + "'", line);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}
}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos)
      raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no);
      section = line.substr(1, line.size() - 2);
      if (section != "problem" && section != "optimizer" &&
          section != "simulation" && section != "analysis")
        throw ParseError("unknown section [" + section + "]", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ParseError("empty key or value", line_no);
    if (section.empty()) throw ParseError("key outside any [section]", line_no);

    auto unknown = [&]() -> ParseError {
      return ParseError("unknown key '" + key + "' in [" + section + "]",
                        line_no);
    };

    if (section == "problem") {
      if (key == "d") c.d = static_cast<int>(parse_long(val, line_no));
      else if (key == "dataset_size") c.dataset_size = parse_long(val, line_no);
      else if (key == "seed_problem") c.seed_problem = parse_u64(val, line_no);
      else if (key == "seed_dataset") c.seed_dataset = parse_u64(val, line_no);
      else if (key == "data_mode") {
        if (val == "empirical") c.data_mode = DataMode::Empirical;
        else if (val == "population") c.data_mode = DataMode::Population;
        else throw ParseError("data_mode: empirical|population", line_no);
      } else if (key == "m_mode") {
        if (val == "gaussian-analytic") c.m_mode = MMode::GaussianAnalytic;
        else if (val == "empirical") c.m_mode = MMode::Empirical;
        else throw ParseError("m_mode: gaussian-analytic|empirical", line_no);
      } else throw unknown();
    } else if (section == "optimizer") {
      if (key == "name") {
        if (val == "rmsprop") c.optimizer = Optimizer::RMSprop;
        else if (val == "adam") c.optimizer = Optimizer::Adam;
        else throw ParseError("name: rmsprop|adam", line_no);
      } else if (key == "regime") {
        if (val == "balistic") c.regime = Regime::Balistic;
        else if (val == "batch-equivalent") c.regime = Regime::BatchEquivalent;
        else throw ParseError("regime: balistic|batch-equivalent", line_no);
      } else if (key == "lambda0") c.lambda0 = parse_double(val, line_no);
      else if (key == "lambda1") c.lambda1 = parse_double(val, line_no);
      else if (key == "lambda2") c.lambda2 = parse_double(val, line_no);
      else if (key == "epsilon") c.epsilon = parse_double(val, line_no);
      else if (key == "sigma") c.sigma = parse_double(val, line_no);
      else if (key == "noise_mode") {
        if (val == "dataset") c.noise_mode = NoiseMode::Dataset;
        else if (val == "gaussian-surrogate")
          c.noise_mode = NoiseMode::GaussianSurrogate;
        else throw ParseError("noise_mode: dataset|gaussian-surrogate", line_no);
      } else if (key == "batch_b0")
        c.batch_b0 = static_cast<int>(parse_long(val, line_no));
      else if (key == "generalized_lambda")
        c.generalized_lambda = parse_bool(val, line_no);
      else throw unknown();
    } else if (section == "simulation") {
      if (key == "order") c.order = static_cast<int>(parse_long(val, line_no));
      else if (key == "tau") c.tau = parse_double(val, line_no);
      else if (key == "tau_list") {
        c.tau_list.clear();
        for (const auto& item : split_list(val))
          c.tau_list.push_back(parse_double(item, line_no));
      } else if (key == "horizon_T") c.horizon_T = parse_double(val, line_no);
      else if (key == "t_start") c.t_start = parse_double(val, line_no);
      else if (key == "dt") c.dt = parse_double(val, line_no);
      else if (key == "phi_threshold")
        c.phi_threshold = parse_double(val, line_no);
      else if (key == "seed_discrete") c.seed_discrete = parse_u64(val, line_no);
      else if (key == "seed_continuous")
        c.seed_continuous = parse_u64(val, line_no);
      else if (key == "paths_discrete") c.paths_discrete = parse_long(val, line_no);
      else if (key == "paths_continuous")
        c.paths_continuous = parse_long(val, line_no);
      else if (key == "threads")
        c.threads = static_cast<int>(parse_long(val, line_no));
      else throw unknown();
    } else {  // analysis
      if (key == "test_functions") c.test_functions = split_list(val);
      else if (key == "stderr_gate") c.stderr_gate = parse_double(val, line_no);
      else throw unknown();
    }
  }
  return c;
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "[problem]\n";
  out << "d = " << c.d << "\n";
  out << "dataset_size = " << c.dataset_size << "\n";
  out << "seed_problem = " << c.seed_problem << "\n";
  out << "seed_dataset = " << c.seed_dataset << "\n";
  out << "data_mode = "
      << (c.data_mode == DataMode::Empirical ? "empirical" : "population")
      << "\n";
  out << "m_mode = "
      << (c.m_mode == MMode::GaussianAnalytic ? "gaussian-analytic"
                                              : "empirical")
      << "\n";
  out << "[optimizer]\n";
  out << "name = " << to_string(c.optimizer) << "\n";
  out << "regime = " << to_string(c.regime) << "\n";
  if (c.lambda0) out << "lambda0 = " << *c.lambda0 << "\n";
  if (c.lambda1) out << "lambda1 = " << *c.lambda1 << "\n";
  if (c.lambda2) out << "lambda2 = " << *c.lambda2 << "\n";
  out << "epsilon = " << c.epsilon << "\n";
  out << "sigma = " << c.sigma << "\n";
  out << "noise_mode = "
      << (c.noise_mode == NoiseMode::Dataset ? "dataset" : "gaussian-surrogate")
      << "\n";
  out << "batch_b0 = " << c.batch_b0 << "\n";
  out << "generalized_lambda = " << (c.generalized_lambda ? "true" : "false")
      << "\n";
  out << "[simulation]\n";
  out << "order = " << c.order << "\n";
  out << "tau = " << c.tau << "\n";
  if (!c.tau_list.empty()) {
    out << "tau_list = ";
    for (std::size_t i = 0; i < c.tau_list.size(); ++i)
      out << (i ? "," : "") << c.tau_list[i];
    out << "\n";
  }
  out << "horizon_T = " << c.horizon_T << "\n";
  if (c.t_start) out << "t_start = " << *c.t_start << "\n";
  if (c.dt) out << "dt = " << *c.dt << "\n";
  if (c.phi_threshold) out << "phi_threshold = " << *c.phi_threshold << "\n";
  out << "seed_discrete = " << c.seed_discrete << "\n";
  out << "seed_continuous = " << c.seed_continuous << "\n";
  out << "paths_discrete = " << c.paths_discrete << "\n";
  out << "paths_continuous = " << c.paths_continuous << "\n";
  out << "threads = " << c.threads << "\n";
  out << "[analysis]\n";
  if (!c.test_functions.empty()) {
    out << "test_functions = ";
    for (std::size_t i = 0; i < c.test_functions.size(); ++i)
      out << (i ? "," : "") << c.test_functions[i];
    out << "\n";
  }
  out << "stderr_gate = " << c.stderr_gate << "\n";
  return out.str();
}

double derive_eta(Regime regime, double tau) {
  if (!(tau > 0 && tau < 1))
    throw ValidationError("derive_eta: tau in (0,1) required");
  return regime == Regime::Balistic ? tau : std::sqrt(tau);
}

Hyper make_hyper(const ExperimentConfig& c, double tau) {
  Hyper h;
  const bool order2_defaults = c.order == 2;
  h.lambda0 = c.lambda0.value_or(order2_defaults ? 1.0 : 0.5);
  h.lambda1 = c.lambda1.value_or(1.0);
  h.lambda2 = c.lambda2.value_or(order2_defaults ? 1.0 : 0.5);
  h.epsilon = c.epsilon;
  h.sigma = c.sigma;
  h.tau = tau;
  h.horizon_T = c.horizon_T;
  h.phi_threshold = c.phi_threshold.value_or(tau);
  return h;
}

long default_paths(int order, double horizon_T, double tau) {
  const double base = 100.0 * std::sqrt(horizon_T);
  const double raw = order == 1 ? base / (tau * tau)
                                : base / (tau * tau * tau * tau);
  const double floor_n = order == 1 ? 1e4 : 1e5;
  return static_cast<long>(std::min(1e7, std::max(floor_n, raw)));
}

void validate_config(const ExperimentConfig& c) {
  if (c.d < 1) throw ValidationError("d >= 1 required");
  if (c.dataset_size < 1) throw ValidationError("dataset_size >= 1 required");
  if (c.order != 1 && c.order != 2) throw ValidationError("order must be 1 or 2");
  if (c.batch_b0 < 1) throw ValidationError("batch_b0 >= 1 required");
  if (!(c.stderr_gate > 0)) throw ValidationError("stderr_gate > 0 required");

  std::vector<double> taus = c.tau_list.empty()
                                 ? std::vector<double>{c.tau}
                                 : c.tau_list;
  for (std::size_t i = 1; i < c.tau_list.size(); ++i)
    if (!(c.tau_list[i] < c.tau_list[i - 1]))
      throw ValidationError("tau_list must be strictly decreasing");
  for (double tau : taus) {
    const Hyper h = make_hyper(c, tau);
    h.validate();
    if (c.dt && !(*c.dt > 0 && *c.dt <= tau))
      throw ValidationError("dt in (0, tau] required");
  }
  if (c.optimizer == Optimizer::Adam) {
    if (!c.t_start)
      throw ValidationError(
          "adam requires t_start (continuous schedules are singular at t=0); "
          "use t_start >= 2*tau");
    for (double tau : taus)
      if (!(*c.t_start >= 2.0 * tau - 1e-12))
        throw ValidationError("t_start >= 2*tau required for adam");
  }
  if (c.generalized_lambda && c.order != 2)
    throw ValidationError("generalized_lambda applies to order-2 runs only");
  for (const auto& name : c.test_functions) {
    const bool adam = c.optimizer == Optimizer::Adam;
    if (name != "f1" && name != "f2" && !(adam && name == "f3"))
      throw ValidationError("unknown test function '" + name + "'");
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace sme
