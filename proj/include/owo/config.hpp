#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "owo/baselines.hpp"

namespace owo {

// Flat key=value experiment description; every field has a default, unknown
// or duplicate keys are rejected with the offending line named.
struct ExperimentConfig {
  std::string algorithm = "owo_fmtl";  // owo_fmtl | srl | cws

  double alpha = 1.0;
  double u_min = 1.0;
  // both default to u_min + loss_sup(env), which keeps the lower utility
  // clamp from ever binding
  std::optional<double> u_max;
  std::optional<double> loss_cap;

  EnvConfig env;

  // schedule overrides; g_theta defaults to the analytic weighted-gradient
  // sup, d_star to the full diameter of Theta
  std::optional<double> g_theta;
  std::optional<double> d_star;
  double gamma_exponent = -1.0;  // negative selects 1 + 1/alpha

  std::string update_order = "dual_then_primal";
  bool dual_warm_start = false;

  SolverConfig solver;

  // empty: equal weights emulating plain average-loss MTL, clamped into the
  // dual box
  std::vector<double> cws_weights;
  bool cws_outer_loop = true;

  std::vector<int> sweep_m = {4, 8, 16, 32, 64, 128};
  std::vector<double> sweep_alpha = {1.0, 2.0};
  std::vector<std::string> sweep_regimes = {"stochastic", "adversarial"};
  std::vector<std::uint64_t> sweep_seeds = {1, 2, 3, 4, 5};

  std::string out_dir = "out";
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// `name` prefixes diagnostics ("name:line: message")
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& name = "config");
ExperimentConfig load_config(const std::string& path);

// Everything a run needs, with defaults materialized
struct RunSetup {
  EngineConfig engine;
  EnvConfig env;
  std::string algorithm;
  BaselineSpec baseline;  // meaningful for srl/cws only
};

RunSetup resolve(const ExperimentConfig& cfg);

// Full key=value echo (defaults materialized) plus schema versions; parses
// back into an equivalent config, which is the reproducibility contract
std::string manifest_text(const ExperimentConfig& cfg);

}  // namespace owo
