#include "cbso/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cbso/estimators.hpp"
#include "cbso/synthetic.hpp"

namespace cbso {

MoreauProbeResult prox_point(const ScalarObjective& objective,
                             const SubgradientFn& subgrad,
                             const ParamVector& x, double lambda,
                             const ProxSolverConfig& cfg) {
  require(lambda > 0.0, ErrorCode::ConfigError, "lambda must be positive");
  auto prox_objective = [&](const ParamVector& v) {
    return objective(v) + (x - v).squaredNorm() / (2.0 * lambda);
  };
  ParamVector v = x;
  ParamVector best = x;
  double best_val = prox_objective(x);
  double residual = 0.0;
  int iters = 0;
  for (int k = 0; k < cfg.max_iters; ++k) {
    const ParamVector step_dir = subgrad(v) + (v - x) / lambda;
    const ParamVector next = v - cfg.steps(k) * step_dir;
    if (!all_finite(next) || next.norm() > cfg.divergence_bound)
      throw Error(ErrorCode::Diverged, "prox solver diverged");
    residual = (next - v).norm();
    v = next;
    ++iters;
    const double val = prox_objective(v);
    // Ties advance to the later iterate: once value differences fall below
    // double precision the latest iterate is the more converged one.
    if (val <= best_val) {
      best_val = val;
      best = v;
    }
  }
  MoreauProbeResult res;
  res.query_point = x;
  res.lambda = lambda;
  res.prox_point = best;
  res.envelope_value = best_val;
  res.envelope_grad_norm = (x - best).norm() / lambda;
  res.solver_iters = iters;
  res.residual = residual;
  return res;
}

EnvelopeGapReport check_envelope_gap(const ScalarObjective& objective,
                                     const SubgradientFn& subgrad,
                                     double lipschitz_l, double lambda,
                                     const std::vector<ParamVector>& points,
                                     const ProxSolverConfig& solver,
                                     double tolerance) {
  EnvelopeGapReport report;
  const double bound = lipschitz_l * lipschitz_l * lambda / 2.0 + tolerance;
  for (const auto& p : points) {
    const MoreauProbeResult probe =
        prox_point(objective, subgrad, p, lambda, solver);
    EnvelopeGapRow row;
    row.point = p;
    row.gap = objective(p) - probe.envelope_value;
    row.bound = bound;
    row.ok = row.gap <= bound;
    report.all_ok = report.all_ok && row.ok;
    report.rows.push_back(std::move(row));
  }
  return report;
}

double estimate_hypomonotonicity(const SubgradientFn& subgrad,
                                 const ParamVector& lo, const ParamVector& hi,
                                 int n_pairs, RngStream stream) {
  require(n_pairs >= 1, ErrorCode::ConfigError, "need at least one pair");
  Rng rng(stream);
  const int dim = static_cast<int>(lo.size());
  double rho = 0.0;
  for (int i = 0; i < n_pairs; ++i) {
    ParamVector u(dim), w(dim);
    for (int d = 0; d < dim; ++d) {
      u[d] = rng.uniform(lo[d], hi[d]);
      w[d] = rng.uniform(lo[d], hi[d]);
    }
    const double dist2 = (u - w).squaredNorm();
    if (dist2 < 1e-10 * 1e-10) continue;  // degenerate pair
    const double inner = (subgrad(u) - subgrad(w)).dot(u - w);
    rho = std::max(rho, -inner / dist2);
  }
  return rho;
}

ArgminEquivalenceReport check_argmin_equivalence(const ScalarObjective& f,
                                                 double lambda, double lo,
                                                 double hi, int n_points) {
  require(n_points >= 3, ErrorCode::ConfigError, "grid too small");
  const double cell = (hi - lo) / static_cast<double>(n_points - 1);
  std::vector<double> xs(n_points), fv(n_points), env(n_points);
  ParamVector p(1);
  for (int i = 0; i < n_points; ++i) {
    xs[i] = lo + cell * i;
    p[0] = xs[i];
    fv[i] = f(p);
  }
  // Exact discrete inf-convolution on the grid.
  for (int i = 0; i < n_points; ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_points; ++j) {
      const double d = xs[i] - xs[j];
      m = std::min(m, fv[j] + d * d / (2.0 * lambda));
    }
    env[i] = m;
  }
  ArgminEquivalenceReport rep;
  rep.cell = cell;
  rep.f_min = *std::min_element(fv.begin(), fv.end());
  rep.envelope_min = *std::min_element(env.begin(), env.end());
  rep.value_gap = std::abs(rep.f_min - rep.envelope_min);

  const double tol = 1e-9 * (1.0 + std::abs(rep.f_min));
  auto near_optimal = [&](const std::vector<double>& vals, double vmin) {
    std::vector<double> pts;
    for (int i = 0; i < n_points; ++i)
      if (vals[i] <= vmin + tol) pts.push_back(xs[i]);
    return pts;
  };
  const auto set_f = near_optimal(fv, rep.f_min);
  const auto set_e = near_optimal(env, rep.envelope_min);
  auto directed = [](const std::vector<double>& a,
                     const std::vector<double>& b) {
    double worst = 0.0;
    for (double pa : a) {
      double nearest = std::numeric_limits<double>::infinity();
      for (double pb : b) nearest = std::min(nearest, std::abs(pa - pb));
      worst = std::max(worst, nearest);
    }
    return worst;
  };
  rep.argmin_set_distance = std::max(directed(set_f, set_e),
                                     directed(set_e, set_f));
  rep.ok = rep.value_gap <= tol && rep.argmin_set_distance <= cell + 1e-12;
  return rep;
}

double cross_lipschitz_estimate(
    const std::function<ParamVector(const ParamVector&)>& grad_x_at_y,
    const ParamVector& y_lo, const ParamVector& y_hi, int n_pairs,
    RngStream stream) {
  require(n_pairs >= 1, ErrorCode::ConfigError, "need at least one pair");
  Rng rng(stream);
  const int dim = static_cast<int>(y_lo.size());
  double l_hat = 0.0;
  for (int i = 0; i < n_pairs; ++i) {
    ParamVector y1(dim), y2(dim);
    for (int d = 0; d < dim; ++d) {
      y1[d] = rng.uniform(y_lo[d], y_hi[d]);
      y2[d] = rng.uniform(y_lo[d], y_hi[d]);
    }
    const double dist = (y1 - y2).norm();
    if (dist < 1e-10) continue;
    l_hat = std::max(l_hat, (grad_x_at_y(y1) - grad_x_at_y(y2)).norm() / dist);
  }
  return l_hat;
}

std::vector<TauMismatchRow> tau_mismatch_rate(
    const CmdpSpec& mdp, const SoftmaxPolicy& policy,
    const std::vector<double>& offsets, const std::vector<int>& batch_sizes,
    int trials, int horizon, int n_rollouts_per_q, RngStream stream) {
  require(trials >= 100, ErrorCode::ConfigError,
          "mismatch rates need >= 100 trials");
  const double h_exact_value = occupancy_weighted_q(mdp, policy, mdp.cost);
  std::vector<TauMismatchRow> rows;
  for (std::size_t oi = 0; oi < offsets.size(); ++oi) {
    const double offset = offsets[oi];
    const double threshold = h_exact_value - offset;
    const bool true_indicator = h_exact_value > threshold;
    for (std::size_t bi = 0; bi < batch_sizes.size(); ++bi) {
      const int b = batch_sizes[bi];
      int mismatches = 0;
      for (int trial = 0; trial < trials; ++trial) {
        double h_hat = 0.0;
        for (int i = 0; i < b; ++i) {
          const RngStream occ =
              substream(stream, "tm/occ",
                        (oi * batch_sizes.size() + bi) * 1000003 + trial, i);
          const auto [s, a] = sample_occupancy_pair(mdp, policy, horizon, occ);
          h_hat += mc_q_estimate(mdp, policy, mdp.cost, s, a, horizon,
                                 n_rollouts_per_q, substream(occ, "tm/q"));
        }
        h_hat /= static_cast<double>(b);
        if ((h_hat > threshold) != true_indicator) ++mismatches;
      }
      rows.push_back(
          TauMismatchRow{offset, b, static_cast<double>(mismatches) / trials});
    }
  }
  return rows;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& series,
                 double window_lo, double window_hi) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [t, v] : series) {
    if (t < window_lo || t > window_hi) continue;
    if (!(v > 0.0) || !(t > 0.0)) continue;
    pts.emplace_back(std::log(t), std::log(v));
  }
  require(pts.size() >= 2, ErrorCode::EmptyWindow,
          "rate fit window contains fewer than two usable points");
  const double n = static_cast<double>(pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& [a, b] : pts) {
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
    syy += b * b;
  }
  RateFit fit;
  fit.n_points = static_cast<int>(pts.size());
  const double denom = n * sxx - sx * sx;
  require(std::abs(denom) > 1e-14, ErrorCode::EmptyWindow,
          "rate fit window is degenerate in t");
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0.0, ss_tot = 0.0;
  const double mean_y = sy / n;
  for (const auto& [a, b] : pts) {
    const double pred = fit.intercept + fit.slope * a;
    ss_res += (b - pred) * (b - pred);
    ss_tot += (b - mean_y) * (b - mean_y);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

std::vector<ProbeFunction> probe_catalog() {
  std::vector<ProbeFunction> cat;
  {
    ProbeFunction f;
    f.name = "quadratic";
    f.f = [](const ParamVector& v) { return 0.5 * v.squaredNorm(); };
    f.subgrad = [](const ParamVector& v) { return v.eval(); };
    f.lipschitz_l = 3.0;  // on [-3,3]
    f.pl_mu = 1.0;
    cat.push_back(std::move(f));
  }
  {
    ProbeFunction f;
    f.name = "abs";
    f.f = [](const ParamVector& v) { return std::abs(v[0]); };
    f.subgrad = [](const ParamVector& v) {
      ParamVector g(1);
      g[0] = v[0] > 0.0 ? 1.0 : (v[0] < 0.0 ? -1.0 : 0.0);
      return g;
    };
    f.lipschitz_l = 1.0;
    cat.push_back(std::move(f));
  }
  {
    ProbeFunction f;
    f.name = "neg_quadratic";
    f.f = [](const ParamVector& v) { return -0.5 * v.squaredNorm(); };
    f.subgrad = [](const ParamVector& v) { return (-v).eval(); };
    cat.push_back(std::move(f));
  }
  {
    ProbeFunction f;
    f.name = "sine";
    f.f = [](const ParamVector& v) { return std::sin(v[0]); };
    f.subgrad = [](const ParamVector& v) {
      ParamVector g(1);
      g[0] = std::cos(v[0]);
      return g;
    };
    f.lipschitz_l = 1.0;
    f.lo = -10.0;
    f.hi = 10.0;
    cat.push_back(std::move(f));
  }
  {
    ProbeFunction f;
    f.name = "double_well";
    f.f = [](const ParamVector& v) {
      const double d = v[0] * v[0] - 1.0;
      return d * d;
    };
    f.subgrad = [](const ParamVector& v) {
      ParamVector g(1);
      g[0] = 4.0 * v[0] * (v[0] * v[0] - 1.0);
      return g;
    };
    f.lo = -2.0;
    f.hi = 2.0;
    cat.push_back(std::move(f));
  }
  return cat;
}

namespace {

const ProbeFunction& probe_by_name(const std::vector<ProbeFunction>& cat,
                                   const std::string& name) {
  for (const auto& p : cat)
    if (p.name == name) return p;
  throw Error(ErrorCode::UnknownProblem, "unknown probe function: " + name);
}

ProxSolverConfig quadratic_solver() {
  ProxSolverConfig cfg;
  cfg.max_iters = 400;
  // 1/curvature of the prox objective for the unit quadratic with the
  // smallest lambda used below.
  cfg.steps = StepSchedule::constant(0.3);
  return cfg;
}

ProxSolverConfig nonsmooth_solver(double lambda, int iters = 400000) {
  ProxSolverConfig cfg;
  cfg.max_iters = iters;
  cfg.steps = StepSchedule::inner_harmonic(2.0 * lambda);
  return cfg;
}

}  // namespace

CheckSuiteResult run_check_suite(const std::string& suite,
                                 std::uint64_t seed) {
  CheckSuiteResult result;
  if (suite.empty()) return result;
  const bool all = suite == "default";
  const bool want_prox = all || suite == "prox";
  const bool want_envelope = all || suite == "envelope";
  const bool want_hypo = all || suite == "hypomono";
  const bool want_argmin = all || suite == "argmin";
  const bool want_cross = all || suite == "cross";
  const bool want_tau = all || suite == "tau";
  const bool planted = suite == "selftest-fail";
  require(want_prox || want_envelope || want_hypo || want_argmin ||
              want_cross || want_tau || planted,
          ErrorCode::ConfigError, "unknown check suite: " + suite);

  const auto cat = probe_catalog();
  auto push = [&](CheckRow row) {
    result.all_pass = result.all_pass && row.pass;
    result.rows.push_back(std::move(row));
  };

  if (want_prox) {
    const auto& quad = probe_by_name(cat, "quadratic");
    Rng rng(make_stream(seed, "check/prox"));
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      ParamVector x = rng.normal_vector(3, 1.5);
      const double lambda = (i % 2 == 0) ? 0.5 : 1.0;
      const auto probe =
          prox_point(quad.f, quad.subgrad, x, lambda, quadratic_solver());
      worst = std::max(
          worst, (probe.prox_point - x / (1.0 + lambda)).norm());
    }
    push({"prox_quadratic_closed_form", worst, 1e-8, worst <= 1e-8, ""});

    const auto& absf = probe_by_name(cat, "abs");
    const double lambda = 1.0;
    double worst_env = 0.0;
    for (int i = 0; i < 100; ++i) {
      ParamVector x(1);
      x[0] = -3.0 + 6.0 * i / 99.0;
      const auto probe =
          prox_point(absf.f, absf.subgrad, x, lambda, nonsmooth_solver(lambda));
      const double huber = std::abs(x[0]) <= lambda
                               ? x[0] * x[0] / (2.0 * lambda)
                               : std::abs(x[0]) - lambda / 2.0;
      worst_env = std::max(worst_env, std::abs(probe.envelope_value - huber));
    }
    push({"prox_abs_huber_envelope", worst_env, 1e-6, worst_env <= 1e-6, ""});
  }

  if (want_envelope || planted) {
    const auto& absf = probe_by_name(cat, "abs");
    const double lambda = 0.5;
    std::vector<ParamVector> points;
    for (int i = 0; i < 25; ++i) {
      ParamVector p(1);
      p[0] = -3.0 + 6.0 * i / 24.0;
      points.push_back(p);
    }
    const double declared_l = planted ? 0.5 : absf.lipschitz_l;
    const auto report = check_envelope_gap(absf.f, absf.subgrad, declared_l,
                                           lambda, points,
                                           nonsmooth_solver(lambda, 200000));
    double worst_gap = 0.0;
    for (const auto& row : report.rows) worst_gap = std::max(worst_gap, row.gap);
    push({planted ? "envelope_gap_abs_planted_wrong_L" : "envelope_gap_abs",
          worst_gap, declared_l * declared_l * lambda / 2.0 + 1e-6,
          report.all_ok, planted ? "deliberately wrong L" : ""});
  }

  if (want_envelope) {
    // PL constant of the envelope of the unit quadratic: mu/(1+mu*lambda).
    const auto& quad = probe_by_name(cat, "quadratic");
    const double lambda = 0.5;
    const double mu_env = quad.pl_mu / (1.0 + quad.pl_mu * lambda);
    double worst_ratio = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 10; ++i) {
      ParamVector x(1);
      x[0] = 0.3 * i;
      const auto probe =
          prox_point(quad.f, quad.subgrad, x, lambda, quadratic_solver());
      const double grad2 =
          probe.envelope_grad_norm * probe.envelope_grad_norm;
      const double subopt = probe.envelope_value;  // f* = 0
      if (subopt > 1e-12) worst_ratio = std::min(worst_ratio, grad2 / subopt);
    }
    push({"envelope_pl_quadratic", worst_ratio, 2.0 * mu_env * (1.0 - 1e-6),
          worst_ratio >= 2.0 * mu_env * (1.0 - 1e-6),
          "measured min ||grad||^2/(f_lambda - f*)"});

    // Envelope gradient varies continuously under small query perturbations.
    const auto& dw = probe_by_name(cat, "double_well");
    const double lam = 0.1;  // weak-convexity modulus of (v^2-1)^2 is 4
    double worst_jump = 0.0;
    for (int i = 0; i < 10; ++i) {
      ParamVector x(1), x2(1);
      x[0] = -1.8 + 0.4 * i;
      x2[0] = x[0] + 1e-4;
      const auto p1 = prox_point(dw.f, dw.subgrad, x, lam,
                                 nonsmooth_solver(lam, 100000));
      const auto p2 = prox_point(dw.f, dw.subgrad, x2, lam,
                                 nonsmooth_solver(lam, 100000));
      worst_jump = std::max(
          worst_jump, std::abs(p1.envelope_grad_norm - p2.envelope_grad_norm));
    }
    push({"envelope_grad_continuity_double_well", worst_jump, 0.01,
          worst_jump <= 0.01, "1e-4 query perturbation"});
  }

  if (want_hypo) {
    const auto& quad = probe_by_name(cat, "quadratic");
    ParamVector lo = ParamVector::Constant(2, -3.0);
    ParamVector hi = ParamVector::Constant(2, 3.0);
    const double rho_quad = estimate_hypomonotonicity(
        quad.subgrad, lo, hi, 2000, make_stream(seed, "check/hypo-q"));
    push({"hypomono_quadratic", rho_quad, 1e-9, rho_quad <= 1e-9, ""});

    const auto& neg = probe_by_name(cat, "neg_quadratic");
    const double rho_neg = estimate_hypomonotonicity(
        neg.subgrad, lo, hi, 2000, make_stream(seed, "check/hypo-n"));
    push({"hypomono_neg_quadratic", rho_neg, 1.0 + 1e-9,
          std::abs(rho_neg - 1.0) <= 1e-9, "expect exactly 1"});

    const auto& sine = probe_by_name(cat, "sine");
    ParamVector slo(1), shi(1);
    slo[0] = sine.lo;
    shi[0] = sine.hi;
    const double rho_sin = estimate_hypomonotonicity(
        sine.subgrad, slo, shi, 10000, make_stream(seed, "check/hypo-s"));
    push({"hypomono_sine_L_smooth", rho_sin, sine.lipschitz_l + 1e-6,
          rho_sin <= sine.lipschitz_l + 1e-6, "rho_hat <= L"});
  }

  if (want_argmin) {
    const auto& dw = probe_by_name(cat, "double_well");
    const auto rep_dw = check_argmin_equivalence(dw.f, 0.1, -2.0, 2.0, 2001);
    push({"argmin_equivalence_double_well", rep_dw.argmin_set_distance,
          rep_dw.cell, rep_dw.ok, "two global minima"});
    auto quad1 = [](const ParamVector& v) { return 0.5 * v[0] * v[0]; };
    const auto rep_q = check_argmin_equivalence(quad1, 0.5, -3.0, 3.0, 2001);
    push({"argmin_equivalence_quadratic", rep_q.argmin_set_distance, rep_q.cell,
          rep_q.ok, ""});
    const auto& absf = probe_by_name(cat, "abs");
    const auto rep_a = check_argmin_equivalence(absf.f, 1.0, -3.0, 3.0, 2001);
    push({"argmin_equivalence_abs", rep_a.argmin_set_distance, rep_a.cell,
          rep_a.ok, ""});
  }

  if (want_cross) {
    const SyntheticProblem p1 = make_problem("P1");
    const auto k = validate_penalty_coefficients(0.1, 0.01, 1.0, p1.c0);
    ParamVector x(1);
    x[0] = 0.7;
    auto grad_map = [&](const ParamVector& y) {
      return (p1.f_x(x, y) + p1.g_x(x, y) / k.sigma1).eval();
    };
    const double l_a = cross_lipschitz_estimate(
        grad_map, p1.y_lo, p1.y_hi, 4000, make_stream(seed, "check/cross", 1));
    const double l_b = cross_lipschitz_estimate(
        grad_map, p1.y_lo, p1.y_hi, 4000, make_stream(seed, "check/cross", 2));
    const double spread = std::abs(l_a - l_b) / std::max(l_a, l_b);
    push({"cross_lipschitz_stability", spread, 0.10,
          std::isfinite(l_a) && std::isfinite(l_b) && spread <= 0.10,
          "two seeds, relative spread"});
  }

  if (want_tau) {
    const CmdpSpec mdp =
        random_cmdp(RandomCmdpOptions{}, make_stream(seed, "check/tau-mdp"));
    SoftmaxPolicy pol{ParamVector::Zero(mdp.policy_dim())};
    const std::vector<double> offsets = {-0.5, -0.1, 0.1, 0.5};
    const std::vector<int> batches = {16, 256};
    const auto rows = tau_mismatch_rate(mdp, pol, offsets, batches, 300, 60, 1,
                                        make_stream(seed, "check/tau"));
    bool monotone = true;
    double worst_excess = 0.0;
    for (size_t i = 0; i + 1 < rows.size(); i += 2) {
      const double small_b = rows[i].rate, big_b = rows[i + 1].rate;
      worst_excess = std::max(worst_excess, big_b - small_b);
      monotone = monotone && big_b <= small_b;
    }
    push({"tau_mismatch_monotone_in_B", worst_excess, 0.0, monotone,
          "rate(B=256) - rate(B=16) per offset"});
  }

  return result;
}

std::string check_table_to_text(const CheckSuiteResult& result) {
  std::ostringstream out;
  out << "check,measured,bound,verdict,note\n";
  char buf[40];
  for (const auto& row : result.rows) {
    out << row.name << ",";
    std::snprintf(buf, sizeof(buf), "%.10g", row.measured);
    out << buf << ",";
    std::snprintf(buf, sizeof(buf), "%.10g", row.bound);
    out << buf << "," << (row.pass ? "pass" : "FAIL") << "," << row.note
        << "\n";
  }
  return out.str();
}

}  // namespace cbso
