#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cbso/config.hpp"
#include "cbso/driver.hpp"

namespace cbso {

// Problem plus driver settings resolved from a configuration.
struct Experiment {
  std::unique_ptr<BilevelProblem> problem;
  CbsoConfig cbso;
  std::string track;
  std::string problem_name;
  // Probe settings (0 disables envelope probes).
  int probe_every = 0;
  double probe_lambda = 0.5;
  int probe_solver_iters = 300;
  double probe_solver_eta = 0.5;
  int probe_y_grid = 1501;
  double fit_window_lo = 20.0;
  double fit_window_hi = 0.0;  // 0 = up to T
  int checkpoint_every = 0;
};

Experiment build_experiment(const Config& cfg);

// Executes cmd_run into out_dir (run.jsonl, metrics.csv, summary.csv,
// config_resolved.ini, checkpoint.bin); returns the final state.
CbsoState execute_run(const Config& cfg, const std::string& out_dir);

// Exit-code contract: 0 success, 1 failed checks, 2 configuration or input
// errors, 3 numerical blow-up (non-finite iterates / divergence).
int exit_code_for_error(const Error& e);

// Entry point shared by the binary and the in-process CLI tests.
int cli_main(int argc, const char* const* argv);

}  // namespace cbso
