#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cbso/cmdp.hpp"
#include "cbso/core.hpp"

namespace cbso {

using ScalarObjective = std::function<double(const ParamVector&)>;
using SubgradientFn = std::function<ParamVector(const ParamVector&)>;

struct ProxSolverConfig {
  int max_iters = 2000;
  StepSchedule steps = StepSchedule::inner_harmonic(0.1);
  double divergence_bound = 1e8;
};

struct MoreauProbeResult {
  ParamVector query_point;
  double lambda = 0.0;
  ParamVector prox_point;
  double envelope_value = 0.0;
  double envelope_grad_norm = 0.0;
  int solver_iters = 0;
  double residual = 0.0;  // last accepted step movement
};

// Approximate minimizer of f(v) + ||x-v||^2/(2*lambda) by subgradient
// descent from x with best-iterate tracking. The envelope value can never
// exceed f(x) because x itself is a candidate.
MoreauProbeResult prox_point(const ScalarObjective& objective,
                             const SubgradientFn& subgrad,
                             const ParamVector& x, double lambda,
                             const ProxSolverConfig& cfg);

struct EnvelopeGapRow {
  ParamVector point;
  double gap = 0.0;    // f(x) - envelope estimate
  double bound = 0.0;  // L^2 * lambda / 2 + tolerance
  bool ok = false;
};

struct EnvelopeGapReport {
  std::vector<EnvelopeGapRow> rows;
  bool all_ok = true;
};

// Checks f(x) - f_lambda(x) <= L^2 lambda/2 + tolerance at each point.
EnvelopeGapReport check_envelope_gap(const ScalarObjective& objective,
                                     const SubgradientFn& subgrad,
                                     double lipschitz_l, double lambda,
                                     const std::vector<ParamVector>& points,
                                     const ProxSolverConfig& solver,
                                     double tolerance = 1e-6);

// max over sampled pairs of -<g_u - g_v, u - v>/||u-v||^2, clamped at 0;
// pairs closer than 1e-10 are skipped as degenerate.
double estimate_hypomonotonicity(const SubgradientFn& subgrad,
                                 const ParamVector& lo, const ParamVector& hi,
                                 int n_pairs, RngStream stream);

struct ArgminEquivalenceReport {
  double f_min = 0.0;
  double envelope_min = 0.0;
  double value_gap = 0.0;
  // Hausdorff distance between the near-optimal sets of f and its envelope.
  double argmin_set_distance = 0.0;
  double cell = 0.0;
  bool ok = false;
};

// 1-D dense-grid check that inf f_lambda = inf f and the minimizer sets
// coincide within a grid cell. The discrete envelope is computed exactly by
// an O(n^2) inf-convolution over the grid.
ArgminEquivalenceReport check_argmin_equivalence(const ScalarObjective& f,
                                                 double lambda, double lo,
                                                 double hi, int n_points);

// L_hat = max over y-pairs of ||gx(y1) - gx(y2)|| / ||y1 - y2|| for a fixed
// x-gradient map; degenerate pairs skipped.
double cross_lipschitz_estimate(
    const std::function<ParamVector(const ParamVector&)>& grad_x_at_y,
    const ParamVector& y_lo, const ParamVector& y_hi, int n_pairs,
    RngStream stream);

struct TauMismatchRow {
  double offset = 0.0;  // h(y) - c0 gap being probed
  int batch = 0;
  double rate = 0.0;  // empirical P(indicator(h) != indicator(h_hat))
};

// Empirical indicator-disagreement frequencies; for each offset the
// threshold is placed at h_exact(y) - offset.
std::vector<TauMismatchRow> tau_mismatch_rate(
    const CmdpSpec& mdp, const SoftmaxPolicy& policy,
    const std::vector<double>& offsets, const std::vector<int>& batch_sizes,
    int trials, int horizon, int n_rollouts_per_q, RngStream stream);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int n_points = 0;
};

// Least-squares fit of log(value) on log(t) over t in [window_lo, window_hi].
RateFit fit_rate(const std::vector<std::pair<double, double>>& series,
                 double window_lo, double window_hi);

// ----- Named property-check suite (CLI `check` command) -----

struct CheckRow {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::string note;
};

struct CheckSuiteResult {
  std::vector<CheckRow> rows;
  bool all_pass = true;
};

// Probe functions with declared constants for the analysis checks.
struct ProbeFunction {
  std::string name;
  ScalarObjective f;
  SubgradientFn subgrad;
  int dim = 1;
  double lipschitz_l = 0.0;  // declared L on the probe domain (0 = none)
  double pl_mu = 0.0;        // PL constant when known (0 = unknown)
  double lo = -3.0, hi = 3.0;
};

std::vector<ProbeFunction> probe_catalog();

// Runs the named suite ("default", "envelope", "hypomono", "argmin",
// "cross", or "" for nothing). Unknown names raise ConfigError.
CheckSuiteResult run_check_suite(const std::string& suite,
                                 std::uint64_t seed = 0);

std::string check_table_to_text(const CheckSuiteResult& result);

}  // namespace cbso
