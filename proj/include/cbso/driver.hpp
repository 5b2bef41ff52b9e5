#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cbso/problem.hpp"

namespace cbso {

struct CbsoConfig {
  int T = 100;  // outer iterations
  int K = 10;   // inner updates per outer iteration
  int B = 32;   // batch size
  int H = 50;   // rollout horizon
  PenaltyCoefficients coeffs;
  StepSchedule outer_schedule = StepSchedule::outer_power(0.1, 0.5);
  StepSchedule inner_schedule = StepSchedule::inner_harmonic(0.1);
  bool warm_start_inner = true;
  std::uint64_t seed = 0;
  // Common random numbers across the y and z inner legs (variance-coupling
  // ablation); independent draws by default.
  bool shared_inner_batch = false;
  // Evaluation batch used for the logged f value on the RLHF track.
  int eval_batch = 64;
  std::optional<ParamVector> x0, y0, z0;
};

struct InnerStepRecord {
  int t = 0;
  int k = 0;
  double step = 0.0;
  double tau_y = 0.0;
  double tau_z = 0.0;
  double h1_grad_norm = 0.0;
  double h2_grad_norm = 0.0;
  // Objective values at the post-update iterates (f batch-evaluated on the
  // RLHF track).
  double h1_value = 0.0;
  double h2_value = 0.0;
};

struct CbsoState {
  ParamVector x, y, z;
  std::int64_t t = 0;
  std::vector<RunRecord> log;
};

struct InnerLoopResult {
  ParamVector y, z;
  std::vector<InnerStepRecord> trace;
  double last_tau_y = 0.0;
  double last_tau_z = 0.0;
};

// Optional sinks; wall-clock timing is reported through the record but is
// not part of the determinism contract.
struct RunHooks {
  std::function<void(const RunRecord&)> on_record;
  std::function<void(const InnerStepRecord&)> on_inner_record;
  std::function<void(const CbsoState&)> on_checkpoint;
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  bool collect_inner_trace = false;
  // Probe callback returning an envelope gradient norm for iterate x at
  // outer step t, scheduled by the caller (empty = no probes).
  std::function<std::optional<double>(const ParamVector&, std::int64_t)>
      envelope_probe;
};

// K subgradient steps on y (objective h1) and z (objective h2) from the
// given starts; raises NonFiniteIterate with a diagnostic on blow-up.
InnerLoopResult run_inner_loop(const ParamVector& x, const ParamVector& y0,
                               const ParamVector& z0, const CbsoConfig& cfg,
                               const BilevelProblem& problem, std::int64_t t,
                               const RunHooks& hooks = {});

// Full driver: T outer iterations of (inner loop, outer subgradient step),
// one RunRecord per iteration.
CbsoState run_cbso(const CbsoConfig& cfg, const BilevelProblem& problem,
                   const RunHooks& hooks = {});

// Fixed-layout little-endian checkpoint with a versioned header.
void save_checkpoint(const std::string& path, const CbsoState& state);
CbsoState load_checkpoint(const std::string& path);

}  // namespace cbso
