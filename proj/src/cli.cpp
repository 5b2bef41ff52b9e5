#include "cbso/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cbso/analysis.hpp"
#include "cbso/logging.hpp"
#include "cbso/synthetic.hpp"

namespace cbso {

namespace fs = std::filesystem;

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::IoError, "cannot write: " + path);
  out << text;
}

ParamVector parse_vector(const Config& cfg, const std::string& key, int dim) {
  const auto vals = cfg.get_double_list(key);
  require(static_cast<int>(vals.size()) == dim, ErrorCode::ConfigError,
          key + " must have " + std::to_string(dim) + " entries");
  return Eigen::Map<const ParamVector>(vals.data(), dim);
}

Eigen::VectorXd hidden_true_reward(const CmdpSpec& mdp, double scale,
                                   double r_max, std::uint64_t seed) {
  Rng rng(make_stream(seed, "rlhf/true_reward"));
  ParamVector x_true(mdp.reward_dim());
  for (int i = 0; i < mdp.reward_dim(); ++i) x_true[i] = rng.normal();
  x_true *= scale / x_true.norm();
  Eigen::VectorXd table = mdp.reward_features * x_true;
  return table.array().min(r_max).max(-r_max);
}

}  // namespace

Experiment build_experiment(const Config& cfg) {
  Experiment exp;
  exp.track = cfg.get_string("run.track");
  double problem_c0 = 0.0;

  if (exp.track == "synthetic") {
    exp.problem_name = cfg.get_string("run.problem");
    SyntheticProblem spec = make_problem(exp.problem_name);
    spec.sigma_f = cfg.get_double("synthetic.sigma_f", spec.sigma_f);
    spec.sigma_g = cfg.get_double("synthetic.sigma_g", spec.sigma_g);
    spec.sigma_h = cfg.get_double("synthetic.sigma_h", spec.sigma_h);
    if (cfg.has("penalty.c0")) spec.c0 = cfg.get_double("penalty.c0");
    problem_c0 = spec.c0;
    auto problem = std::make_unique<SyntheticBilevelProblem>(spec);
    if (cfg.has("synthetic.x0"))
      exp.cbso.x0 = parse_vector(cfg, "synthetic.x0", spec.dim_x);
    if (cfg.has("synthetic.y0"))
      exp.cbso.y0 = parse_vector(cfg, "synthetic.y0", spec.dim_y);
    exp.problem = std::move(problem);
  } else if (exp.track == "cmdp_rlhf") {
    CmdpSpec mdp;
    if (cfg.has("cmdp.file")) {
      mdp = load_cmdp_file(cfg.get_string("cmdp.file"));
    } else {
      RandomCmdpOptions opts;
      opts.n_states = static_cast<int>(cfg.get_int("cmdp.n_states", 6));
      opts.n_actions = static_cast<int>(cfg.get_int("cmdp.n_actions", 3));
      opts.reward_dim = static_cast<int>(cfg.get_int("cmdp.d_r", 4));
      opts.policy_dim = static_cast<int>(cfg.get_int("cmdp.d_p", 8));
      opts.gamma = cfg.get_double("cmdp.gamma", 0.9);
      opts.cost_bound = cfg.get_double("cmdp.cost_bound", 1.0);
      opts.c0 = cfg.get_double("cmdp.c0", 0.0);
      const std::uint64_t mdp_seed =
          static_cast<std::uint64_t>(cfg.get_int("cmdp.mdp_seed", 7));
      mdp = random_cmdp(opts, make_stream(mdp_seed, "cmdp/generate"));
    }
    if (cfg.has("penalty.c0")) mdp.c0 = cfg.get_double("penalty.c0");
    problem_c0 = mdp.c0;
    exp.problem_name = "cmdp";

    RlhfProblemOptions opts;
    opts.beta = cfg.get_double("rlhf.beta", 0.0);
    opts.r_max = cfg.get_double("rlhf.r_max", 5.0);
    opts.n_rollouts_per_q =
        static_cast<int>(cfg.get_int("rlhf.n_rollouts_per_q", 1));
    opts.score_baseline = cfg.get_bool("rlhf.score_baseline", true);

    Annotator annotator;
    const std::string mode = cfg.get_string("rlhf.annotator", "bt");
    if (mode == "bt")
      annotator.mode = AnnotatorMode::BradleyTerry;
    else if (mode == "ground_truth")
      annotator.mode = AnnotatorMode::GroundTruth;
    else
      throw Error(ErrorCode::ConfigError, "unknown annotator: " + mode);
    annotator.true_reward = hidden_true_reward(
        mdp, cfg.get_double("rlhf.true_reward_scale", 1.0), opts.r_max,
        static_cast<std::uint64_t>(cfg.get_int("cmdp.mdp_seed", 7)));
    exp.problem =
        std::make_unique<CmdpRlhfProblem>(std::move(mdp), annotator, opts);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown track: " + exp.track);
  }

  exp.cbso.T = static_cast<int>(cfg.get_int("run.T"));
  exp.cbso.K = static_cast<int>(cfg.get_int("run.K"));
  exp.cbso.B = static_cast<int>(cfg.get_int("run.B"));
  exp.cbso.H = static_cast<int>(cfg.get_int("run.H", 50));
  exp.cbso.eval_batch = static_cast<int>(cfg.get_int("run.eval_batch", 64));
  exp.cbso.seed = static_cast<std::uint64_t>(cfg.get_int("run.seed", 0));
  exp.cbso.warm_start_inner = cfg.get_bool("run.warm_start_inner", true);
  exp.cbso.shared_inner_batch =
      cfg.get_bool("run.shared_inner_batch", false);
  exp.cbso.coeffs = validate_penalty_coefficients(
      cfg.get_double("penalty.sigma1"), cfg.get_double("penalty.sigma2"),
      cfg.get_double("penalty.sigma3"), problem_c0);
  exp.cbso.outer_schedule =
      StepSchedule::outer_power(cfg.get_double("schedule.outer_c", 0.1),
                                cfg.get_double("schedule.outer_a", 0.5));
  exp.cbso.inner_schedule =
      StepSchedule::inner_harmonic(cfg.get_double("schedule.inner_eta", 0.1));

  exp.probe_every = static_cast<int>(cfg.get_int("probe.every", 0));
  // probe.lambda is either a number or "auto" (0.5 / estimated
  // hypomonotonicity of the penalty objective).
  exp.probe_lambda =
      cfg.get_string("probe.lambda", "auto") == "auto"
          ? 0.0
          : cfg.get_double("probe.lambda");
  exp.probe_solver_iters =
      static_cast<int>(cfg.get_int("probe.solver_iters", 300));
  exp.probe_solver_eta = cfg.get_double("probe.solver_eta", 0.5);
  exp.probe_y_grid = static_cast<int>(cfg.get_int("probe.y_grid", 1501));
  exp.fit_window_lo = cfg.get_double("probe.fit_lo", 20.0);
  exp.fit_window_hi = cfg.get_double("probe.fit_hi", 0.0);
  exp.checkpoint_every =
      static_cast<int>(cfg.get_int("checkpoint.every", 0));
  return exp;
}

namespace {

// Envelope probe over the synthetic penalty objective; returns nothing on
// the RLHF track (probes there need their own nested optimization budget
// and are configured off by default).
std::function<std::optional<double>(const ParamVector&, std::int64_t)>
make_probe_hook(const Experiment& exp) {
  if (exp.probe_every <= 0) return {};
  if (exp.track != "synthetic") return {};
  auto* synth = dynamic_cast<SyntheticBilevelProblem*>(exp.problem.get());
  if (synth == nullptr) return {};
  const PhiOracle oracle = make_synthetic_phi_oracle(
      synth->spec(), exp.cbso.coeffs, exp.probe_y_grid);
  ProxSolverConfig solver;
  solver.max_iters = exp.probe_solver_iters;
  solver.steps = StepSchedule::inner_harmonic(exp.probe_solver_eta);
  double lambda = exp.probe_lambda;
  if (lambda <= 0.0) {
    const double rho = estimate_hypomonotonicity(
        oracle.subgrad, synth->spec().x_lo, synth->spec().x_hi, 400,
        make_stream(exp.cbso.seed, "probe/rho"));
    lambda = 0.5 / std::max(rho, 1e-6);
  }
  const int every = exp.probe_every;
  return [oracle, solver, lambda, every](const ParamVector& x,
                                         std::int64_t t)
             -> std::optional<double> {
    if (t % every != 0) return std::nullopt;
    const auto probe =
        prox_point(oracle.value, oracle.subgrad, x, lambda, solver);
    return probe.envelope_grad_norm;
  };
}

std::string summary_csv(const Experiment& exp, const CbsoState& state,
                        double initial_true_value, double final_true_value,
                        bool has_true_values,
                        const std::optional<RateFit>& fit) {
  std::ostringstream out;
  out << "key,value\n";
  const RunRecord& last = state.log.back();
  out << "final_phi_grad_norm," << format_double(last.phi_hat_grad_norm)
      << "\n";
  out << "final_h_of_y," << format_double(last.h_of_y) << "\n";
  out << "final_violation,"
      << format_double(hinge(last.h_of_y, exp.cbso.coeffs.c0)) << "\n";
  out << "final_h1," << format_double(last.h1_value) << "\n";
  out << "final_h2," << format_double(last.h2_value) << "\n";
  for (int i = 0; i < state.x.size(); ++i)
    out << "final_x" << i << "," << format_double(state.x[i]) << "\n";
  if (has_true_values) {
    out << "initial_true_value," << format_double(initial_true_value) << "\n";
    out << "final_true_value," << format_double(final_true_value) << "\n";
  }
  if (fit.has_value()) {
    out << "rate_slope," << format_double(fit->slope) << "\n";
    out << "rate_r_squared," << format_double(fit->r_squared) << "\n";
  }
  return out.str();
}

}  // namespace

CbsoState execute_run(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  Experiment exp = build_experiment(cfg);
  write_text_file(out_dir + "/config_resolved.ini", cfg.echo());

  RunHooks hooks;
  hooks.checkpoint_every = exp.checkpoint_every;
  hooks.on_checkpoint = [&](const CbsoState& s) {
    save_checkpoint(out_dir + "/checkpoint.bin", s);
  };
  hooks.envelope_probe = make_probe_hook(exp);
  std::ofstream inner_log;
  if (cfg.get_bool("run.log_inner", false)) {
    inner_log.open(out_dir + "/inner.jsonl", std::ios::trunc);
    require(inner_log.good(), ErrorCode::IoError,
            "cannot write inner log in " + out_dir);
    hooks.on_inner_record = [&inner_log](const InnerStepRecord& rec) {
      inner_log << inner_record_to_json(rec) << "\n";
    };
  }

  // Exact value of the initial policy under the hidden reward, for
  // improvement reporting on the RLHF track.
  double initial_true_value = 0.0, final_true_value = 0.0;
  bool has_true_values = false;
  const auto* rlhf = dynamic_cast<const CmdpRlhfProblem*>(exp.problem.get());
  if (rlhf != nullptr) {
    const ParamVector y_init =
        exp.cbso.y0.value_or(exp.problem->initial_y());
    initial_true_value = exact_value(rlhf->mdp(), SoftmaxPolicy{y_init},
                                     rlhf->annotator().true_reward);
    has_true_values = true;
  }

  const CbsoState state = run_cbso(exp.cbso, *exp.problem, hooks);

  if (rlhf != nullptr)
    final_true_value = exact_value(rlhf->mdp(), SoftmaxPolicy{state.y},
                                   rlhf->annotator().true_reward);

  write_run_log(out_dir + "/run.jsonl", state.log);
  write_metrics(out_dir + "/metrics.csv", state.log);

  std::optional<RateFit> fit;
  if (exp.probe_every > 0) {
    // Running average of squared probed envelope gradient norms.
    std::vector<std::pair<double, double>> series;
    double acc = 0.0;
    int count = 0;
    for (const auto& rec : state.log) {
      if (!rec.envelope_grad_norm.has_value()) continue;
      acc += (*rec.envelope_grad_norm) * (*rec.envelope_grad_norm);
      ++count;
      series.emplace_back(static_cast<double>(rec.t + 1), acc / count);
    }
    const double hi =
        exp.fit_window_hi > 0 ? exp.fit_window_hi : exp.cbso.T;
    try {
      fit = fit_rate(series, exp.fit_window_lo, hi);
    } catch (const Error&) {
      // Not enough probes in the window; summary simply omits the fit.
    }
  }
  write_text_file(out_dir + "/summary.csv",
                  summary_csv(exp, state, initial_true_value, final_true_value,
                              has_true_values, fit));
  return state;
}

int exit_code_for_error(const Error& e) {
  switch (e.code()) {
    case ErrorCode::NonFiniteIterate:
    case ErrorCode::Diverged:
      return 3;
    default:
      return 2;
  }
}

namespace {

std::string default_out_dir(const Config& cfg, const std::string& command) {
  const char* root = std::getenv("CBSO_OUT_ROOT");
  const std::string base = root != nullptr ? root : "out";
  const std::string track = cfg.get_string("run.track", "none");
  const std::string problem = cfg.get_string("run.problem", "default");
  const std::string seed = cfg.get_string("run.seed", "0");
  return base + "/" + command + "_" + track + "_" + problem + "_seed" + seed;
}

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::int64_t seed = -1;
};

Config resolve_config(const CommonArgs& args, bool required = true) {
  Config cfg;
  if (!args.config_path.empty()) {
    cfg = Config::from_file(args.config_path);
  } else if (required) {
    throw Error(ErrorCode::ConfigError, "--config is required");
  }
  for (const auto& ov : args.overrides) cfg.apply_override(ov);
  if (args.seed >= 0) cfg.set("run.seed", std::to_string(args.seed));
  return cfg;
}

int cmd_run(const CommonArgs& args) {
  const Config cfg = resolve_config(args);
  const std::string out =
      args.out_dir.empty() ? default_out_dir(cfg, "run") : args.out_dir;
  const CbsoState state = execute_run(cfg, out);
  std::cout << "run complete: T=" << state.t << " out=" << out << "\n";
  return 0;
}

int cmd_check(const CommonArgs& args, const std::string& suite) {
  Config cfg;
  if (!args.config_path.empty()) cfg = Config::from_file(args.config_path);
  for (const auto& ov : args.overrides) cfg.apply_override(ov);
  const std::uint64_t seed =
      args.seed >= 0 ? static_cast<std::uint64_t>(args.seed) : 0;
  const CheckSuiteResult result = run_check_suite(suite, seed);
  const std::string table = check_table_to_text(result);
  std::cout << table;
  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    write_text_file(args.out_dir + "/checks.csv", table);
  }
  return result.all_pass ? 0 : 1;
}

std::string axis_to_key(const std::string& axis) {
  if (axis == "sigma1") return "penalty.sigma1";
  if (axis == "sigma2") return "penalty.sigma2";
  if (axis == "sigma3") return "penalty.sigma3";
  if (axis == "a") return "schedule.outer_a";
  if (axis == "B") return "run.B";
  if (axis == "K") return "run.K";
  if (axis.find('.') != std::string::npos) return axis;
  throw Error(ErrorCode::ConfigError, "unknown sweep axis: " + axis);
}

int cmd_sweep(const CommonArgs& args, const std::string& axis,
              const std::string& values_csv) {
  const Config base = resolve_config(args);
  const std::string key = axis_to_key(axis);
  std::vector<std::string> values;
  {
    std::string v = values_csv;
    for (char& c : v)
      if (c == ',') c = ' ';
    std::istringstream in(v);
    std::string tok;
    while (in >> tok) values.push_back(tok);
  }
  require(!values.empty(), ErrorCode::ConfigError, "sweep values are empty");
  const std::string out =
      args.out_dir.empty() ? default_out_dir(base, "sweep") : args.out_dir;
  fs::create_directories(out);

  // Exact sup-norms for the violation bound column come from the grid
  // oracle on the synthetic track and from explicit config on the RLHF one.
  double c_f = base.get_double("bounds.c_f", -1.0);
  double c_g = base.get_double("bounds.c_g", -1.0);
  if (base.get_string("run.track") == "synthetic" && (c_f < 0 || c_g < 0)) {
    const SyntheticProblem spec = make_problem(base.get_string("run.problem"));
    const auto k0 = validate_penalty_coefficients(
        base.get_double("penalty.sigma1"), base.get_double("penalty.sigma2"),
        base.get_double("penalty.sigma3"), spec.c0);
    const auto oracle =
        grid_bilevel_oracle(spec, k0, GridResolution{101, 201});
    c_f = oracle.c_f;
    c_g = oracle.c_g;
  }

  std::ostringstream summary;
  summary << "axis,value,final_phi_grad_norm,final_h_of_y,final_violation,"
             "eps_lambda,rate_slope\n";
  for (const auto& value : values) {
    Config child = base;
    child.set(key, value);
    const std::string child_dir = out + "/" + axis + "_" + value;
    const CbsoState state = execute_run(child, child_dir);
    const RunRecord& last = state.log.back();
    const auto coeffs = validate_penalty_coefficients(
        child.get_double("penalty.sigma1"), child.get_double("penalty.sigma2"),
        child.get_double("penalty.sigma3"), 0.0);
    summary << axis << "," << value << ","
            << format_double(last.phi_hat_grad_norm) << ","
            << format_double(last.h_of_y) << ",";
    // Threshold comes from the child run's own problem.
    double c0 = 0.0;
    {
      const Experiment exp = build_experiment(child);
      c0 = exp.cbso.coeffs.c0;
    }
    summary << format_double(hinge(last.h_of_y, c0)) << ",";
    if (c_f >= 0 && c_g >= 0)
      summary << format_double(epsilon_lambda(c_f, c_g, coeffs));
    summary << ",";
    // Rate slope when this child probed the envelope.
    std::ifstream child_summary(child_dir + "/summary.csv");
    std::string line;
    std::string slope;
    while (std::getline(child_summary, line)) {
      if (line.rfind("rate_slope,", 0) == 0) slope = line.substr(11);
    }
    summary << slope << "\n";
  }
  write_text_file(out + "/sweep_summary.csv", summary.str());
  std::cout << summary.str();
  return 0;
}

int cmd_oracle(const CommonArgs& args) {
  const Config cfg = resolve_config(args);
  require(cfg.get_string("run.track") == "synthetic", ErrorCode::ConfigError,
          "oracle command requires the synthetic track");
  const std::string name = cfg.get_string("run.problem");
  SyntheticProblem spec = make_problem(name);
  if (cfg.has("penalty.c0")) spec.c0 = cfg.get_double("penalty.c0");
  const auto coeffs = validate_penalty_coefficients(
      cfg.get_double("penalty.sigma1"), cfg.get_double("penalty.sigma2"),
      cfg.get_double("penalty.sigma3"), spec.c0);
  GridResolution res;
  res.x_points_per_dim = static_cast<int>(cfg.get_int(
      "oracle.x_points", spec.dim_x == 1 ? 201 : 61));
  res.y_points_per_dim = static_cast<int>(cfg.get_int(
      "oracle.y_points", spec.dim_y == 1 ? 401 : 121));
  const std::string out =
      args.out_dir.empty() ? default_out_dir(cfg, "oracle") : args.out_dir;
  fs::create_directories(out);
  std::ostringstream fname;
  fname << out << "/oracle_" << name << "_" << res.x_points_per_dim << "x"
        << res.y_points_per_dim << "_" << coeffs.sigma1 << "_" << coeffs.sigma2
        << "_" << coeffs.sigma3 << ".csv";
  if (fs::exists(fname.str())) {
    std::cout << "oracle cached: " << fname.str() << "\n";
    return 0;
  }
  const GridOracleResult oracle = grid_bilevel_oracle(spec, coeffs, res);
  write_text_file(fname.str(), grid_oracle_to_csv(oracle));
  std::cout << "oracle best_x =";
  for (int i = 0; i < oracle.best_x.size(); ++i)
    std::cout << " " << oracle.best_x[i];
  std::cout << "  (bilevel best_x =";
  for (int i = 0; i < oracle.best_x_bilevel.size(); ++i)
    std::cout << " " << oracle.best_x_bilevel[i];
  std::cout << ")\n";
  return 0;
}

int cmd_export(const CommonArgs& args, const std::string& log_path) {
  require(!log_path.empty(), ErrorCode::ConfigError, "--log is required");
  require(fs::exists(log_path), ErrorCode::IoError,
          "run log not found: " + log_path);
  const auto log = read_run_log(log_path);
  const std::string out = args.out_dir.empty() ? "." : args.out_dir;
  fs::create_directories(out);
  write_metrics(out + "/metrics.csv", log);
  write_text_file(out + "/long.csv", long_table(log));
  std::cout << "exported " << log.size() << " records to " << out << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Constrained bilevel subgradient optimization workbench"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string suite = "default";
  std::string axis, values, log_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "configuration file");
    sub->add_option("--set", args.overrides,
                    "override section.key=value (repeatable)");
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--seed", args.seed, "run seed override");
  };

  CLI::App* run = app.add_subcommand("run", "execute one experiment");
  add_common(run);
  CLI::App* check = app.add_subcommand("check", "run the property suite");
  add_common(check);
  check->add_option("--suite", suite, "suite name (default, prox, envelope, "
                                      "hypomono, argmin, cross, tau)");
  CLI::App* sweep = app.add_subcommand("sweep", "grid over one parameter");
  add_common(sweep);
  sweep->add_option("--axis", axis, "sweep axis (sigma1|sigma2|sigma3|a|B|K)")
      ->required();
  sweep->add_option("--values", values, "comma-separated values")->required();
  CLI::App* oracle = app.add_subcommand("oracle", "grid ground-truth tables");
  add_common(oracle);
  CLI::App* exp = app.add_subcommand("export", "convert run logs to tables");
  add_common(exp);
  exp->add_option("--log", log_path, "run.jsonl to export")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(args);
    if (check->parsed()) return cmd_check(args, suite);
    if (sweep->parsed()) return cmd_sweep(args, axis, values);
    if (oracle->parsed()) return cmd_oracle(args);
    if (exp->parsed()) return cmd_export(args, log_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for_error(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace cbso
