// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are fixed here, not configurable.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "cbso/analysis.hpp"
#include "cbso/cli.hpp"
#include "cbso/driver.hpp"
#include "cbso/logging.hpp"
#include "cbso/synthetic.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace cbso;
using namespace cbso::testing;

namespace {

struct CriterionResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::vector<CriterionResult> g_results;

template <typename Fn>
void run_criterion(const std::string& name, Fn&& fn) {
  CriterionResult res;
  res.name = name;
  const auto start = std::chrono::steady_clock::now();
  try {
    std::ostringstream detail;
    res.pass = fn(detail);
    res.detail = detail.str();
  } catch (const std::exception& e) {
    res.pass = false;
    res.detail = std::string("exception: ") + e.what();
  }
  res.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  std::printf("[%s] %-28s (%.1fs) %s\n", res.pass ? "PASS" : "FAIL",
              res.name.c_str(), res.seconds, res.detail.c_str());
  std::fflush(stdout);
  g_results.push_back(std::move(res));
}

ParamVector sc(double v) {
  ParamVector p(1);
  p[0] = v;
  return p;
}

// ---------------------------------------------------------------------------
// Criterion 1: estimator unbiasedness on a random 5-state/3-action CMDP.
// Mean over 1e5 samples within 3*stderr + analytic truncation bias of the
// exact-oracle gradient (enumeration for the preference loss at horizon 2,
// dynamic-programming oracles elsewhere).
// ---------------------------------------------------------------------------
bool criterion_estimators(std::ostream& out) {
  const CmdpSpec mdp = small_random_mdp(501, 5, 3, 0.9);
  Rng rng(make_stream(501, "acc/points"));
  const SoftmaxPolicy pol{rng.normal_vector(mdp.policy_dim(), 0.5)};
  const SoftmaxPolicy ref{ParamVector::Zero(mdp.policy_dim())};
  const LinearClippedReward rx{rng.normal_vector(mdp.reward_dim(), 0.4), 25.0};
  Annotator ann;
  ann.mode = AnnotatorMode::BradleyTerry;
  ann.true_reward = rng.normal_vector(mdp.n_sa(), 1.0);
  const int n = 100000;
  bool all = true;

  double max_score = 0.0;
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      max_score = std::max(max_score, grad_log_prob(mdp, pol, s, a).norm());

  // (Eq. 15) Preference-loss score estimator, exact enumeration at H = 2.
  {
    const int h = 2;
    const Eigen::VectorXd oracle =
        exact_grad_y_preference_loss(mdp, rx, pol, ann, h);
    EstimatorOptions opts;
    opts.batch_size = 1;
    opts.horizon = h;
    opts.use_baseline = false;
    const auto stats = vector_stats(
        [&](int i) {
          return grad_y_f_hat(mdp, rx, pol, ann, opts,
                              make_stream(501, "acc/f", i))
              .vector;
        },
        n);
    const double err = (stats.mean - oracle).norm();
    const double tol = 3.0 * stats.stderr_norm;
    out << "f_y err=" << err << "<=" << tol << "; ";
    all = all && err <= tol;
  }

  const int h_long = 150;
  const double trunc_q = std::pow(mdp.gamma, h_long) / (1.0 - mdp.gamma);

  // (Eq. 16) Inner-loss estimator with the regularizer term active.
  {
    EstimatorOptions opts;
    opts.batch_size = 1;
    opts.horizon = h_long;
    const Eigen::VectorXd target =
        -occupancy_score_q(mdp, pol, reward_table(mdp, rx));
    const auto stats = vector_stats(
        [&](int i) {
          return grad_y_g_hat(mdp, rx, pol, 0.5, ref, opts,
                              make_stream(501, "acc/g", i))
              .vector;
        },
        n);
    const double err = (stats.mean - target).norm();
    const double tol =
        3.0 * stats.stderr_norm +
        trunc_q * reward_table(mdp, rx).lpNorm<Eigen::Infinity>() * max_score;
    out << "g_y err=" << err << "<=" << tol << "; ";
    all = all && err <= tol;
  }

  // (Eq. 17) Hinge subgradient at a surely-infeasible threshold.
  {
    EstimatorOptions opts;
    opts.batch_size = 4;
    opts.horizon = h_long;
    const double c0 = occupancy_weighted_q(mdp, pol, mdp.cost) - 50.0;
    const Eigen::VectorXd target = occupancy_score_q(mdp, pol, mdp.cost);
    const auto stats = vector_stats(
        [&](int i) {
          return subgrad_y_hplus_hat(mdp, pol, c0, opts,
                                     make_stream(501, "acc/hp", i))
              .vector;
        },
        n / 4);
    const double err = (stats.mean - target).norm();
    const double tol =
        3.0 * stats.stderr_norm +
        trunc_q * mdp.cost.lpNorm<Eigen::Infinity>() * max_score;
    out << "hplus_y err=" << err << "<=" << tol << "; ";
    all = all && err <= tol;
  }

  // (Eq. 20) Pathwise preference-loss x-gradient, enumeration at H = 2.
  {
    const int h = 2;
    const Eigen::VectorXd oracle =
        exact_grad_x_preference_loss(mdp, rx, pol, ann, h);
    const auto stats = vector_stats(
        [&](int i) {
          const auto pairs = sample_preference_batch(
              mdp, pol, ann, 1, h, make_stream(501, "acc/fx", i));
          return grad_x_f_hat(mdp, rx, pairs).vector;
        },
        n);
    const double err = (stats.mean - oracle).norm();
    const double tol = 3.0 * stats.stderr_norm;
    out << "f_x err=" << err << "<=" << tol << "; ";
    all = all && err <= tol;
  }

  // (Eq. 21) Discounted feature-sum estimator.
  {
    EstimatorOptions opts;
    opts.batch_size = 1;
    opts.horizon = h_long;
    const Eigen::VectorXd target = grad_x_inner_g(mdp, rx, pol);
    double max_feat = 0.0;
    for (int sa = 0; sa < mdp.n_sa(); ++sa)
      max_feat = std::max(max_feat, mdp.reward_features.row(sa).norm());
    const auto stats = vector_stats(
        [&](int i) {
          return grad_x_g_hat(mdp, rx, pol, opts,
                              make_stream(501, "acc/gx", i))
              .vector;
        },
        n);
    const double err = (stats.mean - target).norm();
    const double tol = 3.0 * stats.stderr_norm + trunc_q * max_feat;
    out << "g_x err=" << err << "<=" << tol;
    all = all && err <= tol;
  }
  return all;
}

// ---------------------------------------------------------------------------
// Criterion 2: quadratic prox within 1e-8 of x/(1+lambda); |v| envelope
// within 1e-6 of the Huber closed form at 100 points.
// ---------------------------------------------------------------------------
bool criterion_prox(std::ostream& out) {
  ScalarObjective quad = [](const ParamVector& v) {
    return 0.5 * v.squaredNorm();
  };
  SubgradientFn quad_g = [](const ParamVector& v) { return v.eval(); };
  ProxSolverConfig qsolver;
  qsolver.max_iters = 500;
  qsolver.steps = StepSchedule::constant(0.3);
  Rng rng(make_stream(502, "acc/prox"));
  double worst_prox = 0.0;
  for (int i = 0; i < 25; ++i) {
    const ParamVector x = rng.normal_vector(3, 1.5);
    const double lambda = (i % 2 == 0) ? 0.5 : 1.0;
    const auto probe = prox_point(quad, quad_g, x, lambda, qsolver);
    worst_prox =
        std::max(worst_prox, (probe.prox_point - x / (1.0 + lambda)).norm());
  }

  ScalarObjective absf = [](const ParamVector& v) { return std::abs(v[0]); };
  SubgradientFn absg = [](const ParamVector& v) {
    ParamVector g(1);
    g[0] = v[0] > 0 ? 1.0 : (v[0] < 0 ? -1.0 : 0.0);
    return g;
  };
  const double lambda = 1.0;
  ProxSolverConfig asolver;
  asolver.max_iters = 300000;
  asolver.steps = StepSchedule::inner_harmonic(2.0 * lambda);
  double worst_env = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double xv = -3.0 + 6.0 * i / 99.0;
    const auto probe = prox_point(absf, absg, sc(xv), lambda, asolver);
    const double huber = std::abs(xv) <= lambda
                             ? xv * xv / (2.0 * lambda)
                             : std::abs(xv) - lambda / 2.0;
    worst_env = std::max(worst_env, std::abs(probe.envelope_value - huber));
  }
  out << "quad prox err=" << worst_prox << "<=1e-8; huber err=" << worst_env
      << "<=1e-6";
  return worst_prox <= 1e-8 && worst_env <= 1e-6;
}

// ---------------------------------------------------------------------------
// Criterion 3: envelope property suite (envelope gap, hypomonotonicity vs
// smoothness, argmin equivalence, cross-Lipschitz stability).
// ---------------------------------------------------------------------------
bool criterion_property_suite(std::ostream& out) {
  bool all = true;

  ScalarObjective absf = [](const ParamVector& v) { return std::abs(v[0]); };
  SubgradientFn absg = [](const ParamVector& v) {
    ParamVector g(1);
    g[0] = v[0] > 0 ? 1.0 : (v[0] < 0 ? -1.0 : 0.0);
    return g;
  };
  ProxSolverConfig solver;
  solver.max_iters = 200000;
  solver.steps = StepSchedule::inner_harmonic(1.0);
  std::vector<ParamVector> pts;
  for (int i = 0; i < 25; ++i) pts.push_back(sc(-3.0 + 0.25 * i));
  const auto gap = check_envelope_gap(absf, absg, 1.0, 0.5, pts, solver, 1e-6);
  out << "envelope gap " << (gap.all_ok ? "ok" : "VIOLATED") << "; ";
  all = all && gap.all_ok;

  SubgradientFn cosg = [](const ParamVector& v) {
    ParamVector g(1);
    g[0] = std::cos(v[0]);
    return g;
  };
  const double rho = estimate_hypomonotonicity(cosg, sc(-10.0), sc(10.0),
                                               10000, make_stream(503, "rho"));
  out << "rho_hat(sin)=" << rho << "<=1+1e-6; ";
  all = all && rho <= 1.0 + 1e-6;

  ScalarObjective dw = [](const ParamVector& v) {
    const double d = v[0] * v[0] - 1.0;
    return d * d;
  };
  const auto argmin = check_argmin_equivalence(dw, 0.1, -2.0, 2.0, 2001);
  out << "argmin dist=" << argmin.argmin_set_distance << "<=cell("
      << argmin.cell << "); ";
  all = all && argmin.ok;

  const SyntheticProblem p1 = make_problem("P1");
  const auto k = validate_penalty_coefficients(0.1, 0.01, 1.0, p1.c0);
  ParamVector x_fixed = sc(0.7);
  auto grad_map = [&](const ParamVector& y) {
    return (p1.f_x(x_fixed, y) + p1.g_x(x_fixed, y) / k.sigma1).eval();
  };
  const double l_a = cross_lipschitz_estimate(grad_map, p1.y_lo, p1.y_hi, 4000,
                                              make_stream(503, "cl", 1));
  const double l_b = cross_lipschitz_estimate(grad_map, p1.y_lo, p1.y_hi, 4000,
                                              make_stream(503, "cl", 2));
  const double spread = std::abs(l_a - l_b) / std::max(l_a, l_b);
  out << "L_hat=" << l_a << " spread=" << spread << "<=0.10";
  all = all && std::isfinite(l_a) && std::isfinite(l_b) && spread <= 0.10;
  return all;
}

// Shared schedule for the synthetic penalty runs.
CbsoConfig synthetic_run_config(const SyntheticProblem& spec,
                                std::uint64_t seed) {
  CbsoConfig cfg;
  cfg.T = 400;
  cfg.K = 100;
  cfg.B = 64;
  cfg.H = 10;
  cfg.coeffs = validate_penalty_coefficients(0.1, 0.01, 1.0, spec.c0);
  cfg.inner_schedule = StepSchedule::inner_harmonic(0.1);
  cfg.outer_schedule = StepSchedule::outer_power(0.15, 0.5);
  cfg.seed = seed;
  if (spec.dim_x == 1) {
    cfg.x0 = sc(0.5);
    cfg.y0 = sc(0.5);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Criterion 4: penalty violation bounds hold at the final iterates on
// P1-P3 with exact grid sup-norms, >= 9/10 seeds per problem.
// ---------------------------------------------------------------------------
bool criterion_violation_bounds(std::ostream& out) {
  bool all = true;
  for (const auto& name : synthetic_catalog_names()) {
    const SyntheticProblem spec = make_problem(name);
    const auto k = validate_penalty_coefficients(0.1, 0.01, 1.0, spec.c0);
    const GridResolution res{spec.dim_x == 1 ? 161 : 41,
                             spec.dim_y == 1 ? 321 : 81};
    const auto oracle = grid_bilevel_oracle(spec, k, res);
    const auto bounds = violation_bounds(oracle.c_f, oracle.c_g, k);
    int pass = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      SyntheticBilevelProblem prob(spec);
      const auto state = run_cbso(synthetic_run_config(spec, seed), prob);
      const double hp_y = hinge(spec.h(state.y), spec.c0);
      const double hp_z = hinge(spec.h(state.z), spec.c0);
      const double g_gap =
          spec.g(state.x, state.y) - spec.g(state.x, state.z);
      if (hp_z <= bounds.hplus_z + 1e-9 && g_gap <= bounds.g_gap + 1e-9 &&
          hp_y <= bounds.hplus_y + 1e-9)
        ++pass;
    }
    out << name << "=" << pass << "/10 ";
    all = all && pass >= 9;
  }
  return all;
}

// ---------------------------------------------------------------------------
// Criterion 5: P1 recovery with the shipped reference configuration,
// |x_T - best_x| <= 0.1 in >= 8/10 seeds.
// ---------------------------------------------------------------------------
bool criterion_recovery(std::ostream& out) {
  const Config cfg = Config::from_file(std::string(CBSO_SOURCE_DIR) +
                                       "/configs/p1_reference.ini");
  const SyntheticProblem spec = make_problem("P1");
  const auto k = validate_penalty_coefficients(
      cfg.get_double("penalty.sigma1"), cfg.get_double("penalty.sigma2"),
      cfg.get_double("penalty.sigma3"), spec.c0);
  const auto oracle = grid_bilevel_oracle(spec, k, GridResolution{201, 401});
  out << "oracle best_x=" << oracle.best_x[0] << "; ";
  int pass = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Config child = cfg;
    child.set("run.seed", std::to_string(seed));
    Experiment exp = build_experiment(child);
    const auto state = run_cbso(exp.cbso, *exp.problem);
    const double err = std::abs(state.x[0] - oracle.best_x[0]);
    worst = std::max(worst, err);
    if (err <= 0.1) ++pass;
  }
  out << "pass=" << pass << "/10 worst|x-x*|=" << worst;
  return pass >= 8;
}

// ---------------------------------------------------------------------------
// Criterion 6: log-log slope of the running average of probed squared
// envelope gradient norms over t in [20, 400] is <= -0.3 (a = 1/2), after
// subtracting the per-probe solver residual floor.
// ---------------------------------------------------------------------------
bool criterion_rate_fit(std::ostream& out) {
  const SyntheticProblem spec = make_problem("P1");
  const auto k = validate_penalty_coefficients(0.1, 0.01, 1.0, spec.c0);
  const PhiOracle oracle = make_synthetic_phi_oracle(spec, k, 3001);
  const double rho = estimate_hypomonotonicity(
      oracle.subgrad, spec.x_lo, spec.x_hi, 400, make_stream(506, "rho"));
  const double lambda = 0.5 / std::max(rho, 1e-6);
  ProxSolverConfig solver;
  solver.max_iters = 400;
  solver.steps = StepSchedule::inner_harmonic(0.5);

  SyntheticBilevelProblem prob(spec);
  CbsoConfig cfg = synthetic_run_config(spec, 1);
  std::vector<std::pair<double, double>> series;
  double acc = 0.0;
  int count = 0;
  RunHooks hooks;
  hooks.envelope_probe = [&](const ParamVector& x, std::int64_t t)
      -> std::optional<double> {
    if (t % 5 != 0) return std::nullopt;
    const auto probe =
        prox_point(oracle.value, oracle.subgrad, x, lambda, solver);
    const double floor =
        (probe.residual / lambda) * (probe.residual / lambda);
    const double corrected = std::max(
        probe.envelope_grad_norm * probe.envelope_grad_norm - floor, 0.0);
    acc += corrected;
    ++count;
    series.emplace_back(static_cast<double>(t + 1), acc / count);
    return probe.envelope_grad_norm;
  };
  run_cbso(cfg, prob, hooks);
  const RateFit fit = fit_rate(series, 20.0, 400.0);
  out << "lambda=" << lambda << " slope=" << fit.slope
      << "<=-0.3 r2=" << fit.r_squared;
  return fit.slope <= -0.3;
}

// ---------------------------------------------------------------------------
// Criterion 7: RLHF track on a 6-state CMDP with a hidden true reward and
// Bradley-Terry annotator. Final policy recovers >= 20% of the attainable
// exact-value gap and satisfies h(y_T) <= c0 + eps_lambda, >= 8/10 seeds.
// ---------------------------------------------------------------------------
bool criterion_rlhf(std::ostream& out) {
  RandomCmdpOptions mopts;
  mopts.n_states = 6;
  mopts.n_actions = 3;
  mopts.reward_dim = 4;
  mopts.policy_dim = 8;
  mopts.gamma = 0.9;
  CmdpSpec mdp = random_cmdp(mopts, make_stream(7, "cmdp/generate"));

  Rng rng(make_stream(7, "rlhf/true_reward"));
  ParamVector x_true(mdp.reward_dim());
  for (int i = 0; i < x_true.size(); ++i) x_true[i] = rng.normal();
  x_true /= x_true.norm();
  const Eigen::VectorXd r_true =
      (mdp.reward_features * x_true).cwiseMin(5.0).cwiseMax(-5.0);

  const SoftmaxPolicy y_init{ParamVector::Zero(mdp.policy_dim())};
  mdp.c0 = occupancy_weighted_q(mdp, y_init, mdp.cost) + 1.0;

  Annotator ann{AnnotatorMode::BradleyTerry, r_true};
  RlhfProblemOptions popts;
  popts.beta = 0.0;
  popts.r_max = 5.0;
  CmdpRlhfProblem prob(mdp, ann, popts);

  const double j0 = exact_value(mdp, y_init, r_true);
  const double j_star = optimal_value(mdp, r_true);
  const double gap = j_star - j0;

  // Violation bound constants estimated by max over an evaluation grid of
  // parameter draws (the loss and inner objective have no closed-form
  // sup-norms here).
  double c_f = 0.0, c_g = 0.0;
  const SoftmaxPolicy ref{ParamVector::Zero(mdp.policy_dim())};
  for (int i = 0; i < 200; ++i) {
    Rng grid(make_stream(507, "acc/bounds", i));
    const LinearClippedReward rxs{grid.normal_vector(mdp.reward_dim(), 2.5),
                                  popts.r_max};
    const SoftmaxPolicy py{grid.normal_vector(mdp.policy_dim(), 2.0)};
    const auto pairs = sample_preference_batch(mdp, py, ann, 16, 50,
                                               make_stream(507, "acc/bp", i));
    c_f = std::max(c_f, std::abs(outer_loss_f(mdp, rxs, pairs)));
    c_g = std::max(c_g, std::abs(inner_g_exact(mdp, rxs, py, 0.0, ref)));
  }
  const auto coeffs = validate_penalty_coefficients(0.1, 0.01, 1.0, mdp.c0);
  const double eps = epsilon_lambda(c_f, c_g, coeffs);
  out << "gap=" << gap << " eps_lambda=" << eps << "; ";

  int pass = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CbsoConfig cfg;
    cfg.T = 150;
    cfg.K = 15;
    cfg.B = 32;
    cfg.H = 50;
    cfg.coeffs = coeffs;
    cfg.inner_schedule = StepSchedule::inner_harmonic(0.06);
    cfg.outer_schedule = StepSchedule::outer_power(0.025, 0.5);
    cfg.seed = seed;
    const auto state = run_cbso(cfg, prob);
    const double jt = exact_value(mdp, SoftmaxPolicy{state.y}, r_true);
    const double ht =
        occupancy_weighted_q(mdp, SoftmaxPolicy{state.y}, mdp.cost);
    if (jt - j0 >= 0.2 * gap && ht <= mdp.c0 + eps) ++pass;
  }
  out << "pass=" << pass << "/10";
  return pass >= 8;
}

// ---------------------------------------------------------------------------
// Criterion 8: indicator mismatch rate at B=256 never exceeds the rate at
// B=16 across a 7-point boundary-offset sweep, 1000 trials each.
// ---------------------------------------------------------------------------
bool criterion_tau_mismatch(std::ostream& out) {
  const CmdpSpec mdp = small_random_mdp(508, 5, 3, 0.9);
  Rng rng(make_stream(508, "acc/tau"));
  const SoftmaxPolicy pol{rng.normal_vector(mdp.policy_dim(), 0.4)};
  // Scale the offsets by the measured single-sample spread of the h
  // estimate so the sweep brackets the threshold noise.
  double m = 0.0, m2 = 0.0;
  const int warm = 2000;
  for (int i = 0; i < warm; ++i) {
    const auto [s, a] =
        sample_occupancy_pair(mdp, pol, 80, make_stream(508, "w", i));
    const double q = mc_q_estimate(mdp, pol, mdp.cost, s, a, 80, 1,
                                   make_stream(508, "q", i));
    m += q;
    m2 += q * q;
  }
  m /= warm;
  const double s16 = std::sqrt(m2 / warm - m * m) / 4.0;  // batch-16 spread
  const std::vector<double> offsets = {-4 * s16, -1 * s16, -0.25 * s16,
                                       0.25 * s16, 1 * s16, 4 * s16, 12 * s16};
  const auto rows = tau_mismatch_rate(mdp, pol, offsets, {16, 256}, 1000, 80,
                                      1, make_stream(508, "tm"));
  bool all = true;
  double worst = -1.0;
  for (size_t i = 0; i + 1 < rows.size(); i += 2) {
    const double excess = rows[i + 1].rate - rows[i].rate;
    worst = std::max(worst, excess);
    all = all && rows[i + 1].rate <= rows[i].rate;
  }
  out << "offsets=7 worst(r256-r16)=" << worst << "<=0";
  return all;
}

// ---------------------------------------------------------------------------
// Criterion 9: byte-identical metrics files across two identical runs.
// ---------------------------------------------------------------------------
bool criterion_determinism(std::ostream& out) {
  namespace fs = std::filesystem;
  Config cfg = Config::from_file(std::string(CBSO_SOURCE_DIR) +
                                 "/configs/p1_reference.ini");
  cfg.set("run.T", "25");
  cfg.set("run.K", "20");
  cfg.set("run.B", "16");
  const std::string base = "/tmp/cbso_acceptance_determinism";
  fs::remove_all(base);
  execute_run(cfg, base + "/a");
  execute_run(cfg, base + "/b");
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  const bool metrics_equal =
      slurp(base + "/a/metrics.csv") == slurp(base + "/b/metrics.csv");
  const bool ckpt_equal =
      slurp(base + "/a/checkpoint.bin") == slurp(base + "/b/checkpoint.bin");
  fs::remove_all(base);
  out << "metrics byte-identical=" << (metrics_equal ? "yes" : "NO")
      << " checkpoint byte-identical=" << (ckpt_equal ? "yes" : "NO");
  return metrics_equal && ckpt_equal;
}

}  // namespace

int main() {
  std::printf("=== acceptance suite ===\n");
  run_criterion("1 estimator unbiasedness", criterion_estimators);
  run_criterion("2 prox/envelope exactness", criterion_prox);
  run_criterion("3 envelope property suite", criterion_property_suite);
  run_criterion("4 violation bounds", criterion_violation_bounds);
  run_criterion("5 bilevel recovery", criterion_recovery);
  run_criterion("6 rate fit", criterion_rate_fit);
  run_criterion("7 rlhf track sanity", criterion_rlhf);
  run_criterion("8 tau mismatch monotone", criterion_tau_mismatch);
  run_criterion("9 determinism", criterion_determinism);

  int failures = 0;
  for (const auto& res : g_results)
    if (!res.pass) ++failures;
  std::printf("=== %zu criteria, %d failed ===\n", g_results.size(), failures);
  return failures == 0 ? 0 : 1;
}
