// Batch front-end: named experiments driven by a JSON config, deterministic
// seeding, CSV + manifest emission.  Exit codes: 0 success, 2 config
// validation failure, 3 numerical failure (blow-up / CG / contraction).

#pragma once

#include "nlsc/spectral.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace nlsc {

struct ExperimentConfig {
  std::string experiment = "simulate";
  int n = 64;            // grid modes
  double dt = 1e-3;
  double t_end = 1.0;
  double lambda = 1.0;
  // control/damping geometry: bump supported on (omega_lo, omega_hi) with
  // transition layers of width transition * (omega_hi - omega_lo)
  double omega_lo = 0.0;
  double omega_hi = 1.5707963267948966;
  double transition = 0.25;
  // knobs shared across experiments
  double amplitude = 1.0;
  double threshold = 5e-3;
  double tol = 1e-6;
  double cg_tol = 1e-10;
  int ensemble = 20;
  int n_obs = 8;
  int samples = 200;
  int k_mode = 3;
  double s = 0.0;
  double b = 0.625;
  double bprime = 0.375;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  // JSON round trip (throws std::invalid_argument on malformed input)
  static ExperimentConfig from_json_string(const std::string& text);
  static ExperimentConfig from_json_file(const std::string& path);
  std::string to_json_string() const;

  // empty on success, else human-readable problems
  std::vector<std::string> validate() const;
};

// Known experiment names, in dispatch order.
const std::vector<std::string>& experiment_names();

// Shipped configs, one per acceptance scenario; throws on unknown name.
ExperimentConfig preset(const std::string& name);
const std::vector<std::string>& preset_names();

// Run the experiment: artifacts under config.out_dir (manifest.json plus
// CSVs, written atomically).  Returns the exit code.
int run_experiment(const ExperimentConfig& config);

// Deterministic random field with independent complex Gaussian coefficients,
// rescaled to the requested l2 norm.
SpectralField random_field(const TorusGrid& grid, std::mt19937_64& rng, double norm);

// Atomic text write (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace nlsc
