#include "cbso/driver.hpp"

#include <bit>
#include <chrono>
#include <cstring>
#include <fstream>

namespace cbso {

namespace {

void check_finite(const ParamVector& v, const char* label, std::int64_t t,
                  int k) {
  if (!all_finite(v)) {
    throw Error(ErrorCode::NonFiniteIterate,
                std::string("non-finite iterate in ") + label + " at t=" +
                    std::to_string(t) + " k=" + std::to_string(k));
  }
}

}  // namespace

InnerLoopResult run_inner_loop(const ParamVector& x, const ParamVector& y0,
                               const ParamVector& z0, const CbsoConfig& cfg,
                               const BilevelProblem& problem, std::int64_t t,
                               const RunHooks& hooks) {
  InnerLoopResult res;
  res.y = y0;
  res.z = z0;
  for (int k = 0; k < cfg.K; ++k) {
    const std::uint64_t tu = static_cast<std::uint64_t>(t);
    const std::uint64_t ku = static_cast<std::uint64_t>(k);
    // Independent streams per estimator leg; the shared-batch ablation uses
    // common random numbers for the y and z legs.
    const RngStream f_stream = make_stream(cfg.seed, "inner/f", tu, ku);
    const RngStream gy_stream = make_stream(cfg.seed, "inner/g_y", tu, ku);
    const RngStream hy_stream = make_stream(cfg.seed, "inner/hplus_y", tu, ku);
    const RngStream gz_stream =
        cfg.shared_inner_batch ? gy_stream
                               : make_stream(cfg.seed, "inner/g_z", tu, ku);
    const RngStream hz_stream =
        cfg.shared_inner_batch ? hy_stream
                               : make_stream(cfg.seed, "inner/hplus_z", tu, ku);

    const SubgradientSample f_part =
        problem.grad_y_f(x, res.y, cfg.B, cfg.H, f_stream);
    const SubgradientSample g_part_y =
        problem.grad_y_g(x, res.y, cfg.B, cfg.H, gy_stream);
    const SubgradientSample hp_part_y =
        problem.subgrad_y_hplus(res.y, cfg.B, cfg.H, hy_stream);
    const SubgradientSample d1 =
        compose_y_h1(f_part, g_part_y, hp_part_y, cfg.coeffs);

    const SubgradientSample g_part_z =
        problem.grad_y_g(x, res.z, cfg.B, cfg.H, gz_stream);
    const SubgradientSample hp_part_z =
        problem.subgrad_y_hplus(res.z, cfg.B, cfg.H, hz_stream);
    const SubgradientSample d2 = compose_y_h2(g_part_z, hp_part_z, cfg.coeffs);

    const double beta_k = cfg.inner_schedule(k);
    res.y -= beta_k * d1.vector;
    res.z -= beta_k * d2.vector;
    if (problem.has_box()) {
      problem.project_y(res.y);
      problem.project_y(res.z);
    }
    check_finite(res.y, "y update", t, k);
    check_finite(res.z, "z update", t, k);
    res.last_tau_y = hp_part_y.tau;
    res.last_tau_z = hp_part_z.tau;

    if (hooks.collect_inner_trace || hooks.on_inner_record) {
      InnerStepRecord rec;
      rec.t = static_cast<int>(t);
      rec.k = k;
      rec.step = beta_k;
      rec.tau_y = hp_part_y.tau;
      rec.tau_z = hp_part_z.tau;
      rec.h1_grad_norm = d1.vector.norm();
      rec.h2_grad_norm = d2.vector.norm();
      const double f_val =
          problem.f_eval(x, res.y, cfg.eval_batch, cfg.H,
                         make_stream(cfg.seed, "inner/eval_f", tu, ku));
      rec.h1_value = h1_compose(f_val, problem.g_exact(x, res.y),
                                hinge(problem.h_exact(res.y), cfg.coeffs.c0),
                                cfg.coeffs)
                         .value;
      rec.h2_value = h2_compose(problem.g_exact(x, res.z),
                                hinge(problem.h_exact(res.z), cfg.coeffs.c0),
                                cfg.coeffs)
                         .value;
      if (hooks.collect_inner_trace) res.trace.push_back(rec);
      if (hooks.on_inner_record) hooks.on_inner_record(rec);
    }
  }
  return res;
}

CbsoState run_cbso(const CbsoConfig& cfg, const BilevelProblem& problem,
                   const RunHooks& hooks) {
  require(cfg.T >= 1 && cfg.K >= 1 && cfg.B >= 1 && cfg.H >= 1,
          ErrorCode::ConfigError, "T, K, B, H must all be >= 1");
  CbsoState state;
  state.x = cfg.x0.value_or(problem.initial_x());
  state.y = cfg.y0.value_or(problem.initial_y());
  state.z = cfg.z0.value_or(state.y);
  require(state.x.size() == problem.dim_x() &&
              state.y.size() == problem.dim_y() &&
              state.z.size() == problem.dim_y(),
          ErrorCode::ConfigError, "initial iterate dimension mismatch");

  const auto t_start = std::chrono::steady_clock::now();
  for (std::int64_t t = 0; t < cfg.T; ++t) {
    const std::uint64_t tu = static_cast<std::uint64_t>(t);
    const ParamVector y_start =
        cfg.warm_start_inner ? state.y : cfg.y0.value_or(problem.initial_y());
    const ParamVector z_start =
        cfg.warm_start_inner ? state.z : cfg.z0.value_or(state.y);
    const InnerLoopResult inner =
        run_inner_loop(state.x, y_start, z_start, cfg, problem, t, hooks);
    state.y = inner.y;
    state.z = inner.z;

    const SubgradientSample fx = problem.grad_x_f(
        state.x, state.y, cfg.B, cfg.H, make_stream(cfg.seed, "outer/f_x", tu));
    const SubgradientSample gx_y = problem.grad_x_g(
        state.x, state.y, cfg.B, cfg.H, make_stream(cfg.seed, "outer/g_x_y", tu));
    const SubgradientSample gx_z = problem.grad_x_g(
        state.x, state.z, cfg.B, cfg.H, make_stream(cfg.seed, "outer/g_x_z", tu));
    const SubgradientSample phi_x = compose_x_phi(fx, gx_y, gx_z, cfg.coeffs);

    const double eta_t = cfg.outer_schedule(t);
    state.x -= eta_t * phi_x.vector;
    if (problem.has_box()) problem.project_x(state.x);
    check_finite(state.x, "x update", t, -1);

    RunRecord rec;
    rec.t = t;
    rec.phi_hat_grad_norm = phi_x.vector.norm();
    rec.h_of_y = problem.h_exact(state.y);
    const double f_val =
        problem.f_eval(state.x, state.y, cfg.eval_batch, cfg.H,
                       make_stream(cfg.seed, "eval/f", tu));
    const double g_val_y = problem.g_exact(state.x, state.y);
    const double g_val_z = problem.g_exact(state.x, state.z);
    const double hp_y = hinge(rec.h_of_y, cfg.coeffs.c0);
    const double hp_z = hinge(problem.h_exact(state.z), cfg.coeffs.c0);
    rec.h1_value = h1_compose(f_val, g_val_y, hp_y, cfg.coeffs).value;
    rec.h2_value = h2_compose(g_val_z, hp_z, cfg.coeffs).value;
    if (hooks.envelope_probe)
      rec.envelope_grad_norm = hooks.envelope_probe(state.x, t);
    rec.wall_clock_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t_start)
                            .count();
    state.log.push_back(rec);
    if (hooks.on_record) hooks.on_record(rec);

    state.t = t + 1;
    if (hooks.on_checkpoint && hooks.checkpoint_every > 0 &&
        (t + 1) % hooks.checkpoint_every == 0) {
      hooks.on_checkpoint(state);
    }
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint(state);
  return state;
}

namespace {
constexpr char kCheckpointMagic[8] = {'C', 'B', 'S', 'O', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint layout assumes a little-endian host");

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_raw(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

void save_checkpoint(const std::string& path, const CbsoState& state) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::IoError, "cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_raw(out, kCheckpointVersion);
  write_raw(out, std::uint32_t{0});
  write_raw(out, state.t);
  const std::int64_t dx = state.x.size(), dy = state.y.size();
  write_raw(out, dx);
  write_raw(out, dy);
  out.write(reinterpret_cast<const char*>(state.x.data()), dx * sizeof(double));
  out.write(reinterpret_cast<const char*>(state.y.data()), dy * sizeof(double));
  out.write(reinterpret_cast<const char*>(state.z.data()), dy * sizeof(double));
  require(out.good(), ErrorCode::IoError, "checkpoint write failed: " + path);
}

CbsoState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  require(std::memcmp(magic, kCheckpointMagic, sizeof(magic)) == 0,
          ErrorCode::IoError, "bad checkpoint magic: " + path);
  std::uint32_t version = 0, reserved = 0;
  read_raw(in, version);
  read_raw(in, reserved);
  require(version == kCheckpointVersion, ErrorCode::IoError,
          "unsupported checkpoint version");
  CbsoState state;
  std::int64_t dx = 0, dy = 0;
  read_raw(in, state.t);
  read_raw(in, dx);
  read_raw(in, dy);
  state.x.resize(dx);
  state.y.resize(dy);
  state.z.resize(dy);
  in.read(reinterpret_cast<char*>(state.x.data()), dx * sizeof(double));
  in.read(reinterpret_cast<char*>(state.y.data()), dy * sizeof(double));
  in.read(reinterpret_cast<char*>(state.z.data()), dy * sizeof(double));
  require(in.good(), ErrorCode::IoError, "checkpoint read failed: " + path);
  return state;
}

}  // namespace cbso
