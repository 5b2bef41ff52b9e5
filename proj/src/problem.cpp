#include "cbso/problem.hpp"

namespace cbso {

namespace {

// Mean of `batch` independent oracle draws, one substream per index.
SubgradientSample averaged_noise_grad(
    const SyntheticProblem& p, GradSelector which, const ParamVector& x,
    const ParamVector& y, int batch, RngStream stream, const char* tag) {
  require(batch >= 1, ErrorCode::ConfigError, "batch size must be >= 1");
  ParamVector acc;
  for (int i = 0; i < batch; ++i) {
    const ParamVector draw = noisy_grad(p, which, x, y, substream(stream, tag, i));
    if (i == 0)
      acc = draw;
    else
      acc += draw;
  }
  SubgradientSample out;
  out.vector = acc / static_cast<double>(batch);
  out.batch_size = batch;
  return out;
}

}  // namespace

SyntheticBilevelProblem::SyntheticBilevelProblem(SyntheticProblem problem,
                                                 ParamVector x0, ParamVector y0)
    : problem_(std::move(problem)), x0_(std::move(x0)), y0_(std::move(y0)) {}

SyntheticBilevelProblem::SyntheticBilevelProblem(SyntheticProblem problem)
    : problem_(std::move(problem)) {
  x0_ = 0.5 * (problem_.x_lo + problem_.x_hi);
  y0_ = 0.5 * (problem_.y_lo + problem_.y_hi);
}

SubgradientSample SyntheticBilevelProblem::grad_y_f(const ParamVector& x,
                                                    const ParamVector& y,
                                                    int batch, int,
                                                    RngStream stream) const {
  return averaged_noise_grad(problem_, GradSelector::FY, x, y, batch, stream,
                             "fy");
}

SubgradientSample SyntheticBilevelProblem::grad_y_g(const ParamVector& x,
                                                    const ParamVector& y,
                                                    int batch, int,
                                                    RngStream stream) const {
  return averaged_noise_grad(problem_, GradSelector::GY, x, y, batch, stream,
                             "gy");
}

SubgradientSample SyntheticBilevelProblem::subgrad_y_hplus(
    const ParamVector& y, int batch, int, RngStream stream) const {
  require(batch >= 1, ErrorCode::ConfigError, "batch size must be >= 1");
  SubgradientSample out;
  out.batch_size = batch;
  ParamVector acc = ParamVector::Zero(problem_.dim_y);
  double tau = 0.0;
  for (int i = 0; i < batch; ++i)
    acc += noisy_subgrad_hplus(problem_, y, substream(stream, "hp", i), &tau);
  out.vector = acc / static_cast<double>(batch);
  out.tau = tau;
  return out;
}

SubgradientSample SyntheticBilevelProblem::grad_x_f(const ParamVector& x,
                                                    const ParamVector& y,
                                                    int batch, int,
                                                    RngStream stream) const {
  return averaged_noise_grad(problem_, GradSelector::FX, x, y, batch, stream,
                             "fx");
}

SubgradientSample SyntheticBilevelProblem::grad_x_g(const ParamVector& x,
                                                    const ParamVector& y,
                                                    int batch, int,
                                                    RngStream stream) const {
  return averaged_noise_grad(problem_, GradSelector::GX, x, y, batch, stream,
                             "gx");
}

double SyntheticBilevelProblem::h_exact(const ParamVector& y) const {
  return problem_.h(y);
}

double SyntheticBilevelProblem::g_exact(const ParamVector& x,
                                        const ParamVector& y) const {
  return problem_.g(x, y);
}

double SyntheticBilevelProblem::f_eval(const ParamVector& x,
                                       const ParamVector& y, int, int,
                                       RngStream) const {
  return problem_.f(x, y);
}

void SyntheticBilevelProblem::project_x(ParamVector& x) const {
  x = x.cwiseMax(problem_.x_lo).cwiseMin(problem_.x_hi);
}

void SyntheticBilevelProblem::project_y(ParamVector& y) const {
  y = y.cwiseMax(problem_.y_lo).cwiseMin(problem_.y_hi);
}

CmdpRlhfProblem::CmdpRlhfProblem(CmdpSpec mdp, Annotator annotator,
                                 RlhfProblemOptions options)
    : mdp_(std::move(mdp)),
      annotator_(std::move(annotator)),
      options_(options) {
  validate_cmdp(mdp_);
  require(annotator_.true_reward.size() == mdp_.n_sa(), ErrorCode::ConfigError,
          "annotator reward table shape mismatch");
  // Reference policy: uniform logits.
  reference_.params = ParamVector::Zero(mdp_.policy_dim());
}

LinearClippedReward CmdpRlhfProblem::reward_at(const ParamVector& x) const {
  return LinearClippedReward{x, options_.r_max};
}

SoftmaxPolicy CmdpRlhfProblem::policy_at(const ParamVector& y) const {
  return SoftmaxPolicy{y};
}

EstimatorOptions CmdpRlhfProblem::estimator_options(int batch,
                                                    int horizon) const {
  EstimatorOptions opts;
  opts.batch_size = batch;
  opts.horizon = horizon;
  opts.n_rollouts_per_q = options_.n_rollouts_per_q;
  opts.use_baseline = options_.score_baseline;
  return opts;
}

SubgradientSample CmdpRlhfProblem::grad_y_f(const ParamVector& x,
                                            const ParamVector& y, int batch,
                                            int horizon,
                                            RngStream stream) const {
  return grad_y_f_hat(mdp_, reward_at(x), policy_at(y), annotator_,
                      estimator_options(batch, horizon), stream);
}

SubgradientSample CmdpRlhfProblem::grad_y_g(const ParamVector& x,
                                            const ParamVector& y, int batch,
                                            int horizon,
                                            RngStream stream) const {
  return grad_y_g_hat(mdp_, reward_at(x), policy_at(y), options_.beta,
                      reference_, estimator_options(batch, horizon), stream);
}

SubgradientSample CmdpRlhfProblem::subgrad_y_hplus(const ParamVector& y,
                                                   int batch, int horizon,
                                                   RngStream stream) const {
  return subgrad_y_hplus_hat(mdp_, policy_at(y), mdp_.c0,
                             estimator_options(batch, horizon), stream);
}

SubgradientSample CmdpRlhfProblem::grad_x_f(const ParamVector& x,
                                            const ParamVector& y, int batch,
                                            int horizon,
                                            RngStream stream) const {
  const auto pairs = sample_preference_batch(mdp_, policy_at(y), annotator_,
                                             batch, horizon, stream);
  return grad_x_f_hat(mdp_, reward_at(x), pairs);
}

SubgradientSample CmdpRlhfProblem::grad_x_g(const ParamVector& x,
                                            const ParamVector& y, int batch,
                                            int horizon,
                                            RngStream stream) const {
  return grad_x_g_hat(mdp_, reward_at(x), policy_at(y),
                      estimator_options(batch, horizon), stream);
}

double CmdpRlhfProblem::h_exact(const ParamVector& y) const {
  return constraint_h_exact(mdp_, policy_at(y));
}

double CmdpRlhfProblem::g_exact(const ParamVector& x,
                                const ParamVector& y) const {
  return inner_g_exact(mdp_, reward_at(x), policy_at(y), options_.beta,
                       reference_);
}

double CmdpRlhfProblem::f_eval(const ParamVector& x, const ParamVector& y,
                               int batch, int horizon,
                               RngStream stream) const {
  const auto pairs = sample_preference_batch(mdp_, policy_at(y), annotator_,
                                             batch, horizon, stream);
  return outer_loss_f(mdp_, reward_at(x), pairs);
}

ParamVector CmdpRlhfProblem::initial_x() const {
  return ParamVector::Zero(mdp_.reward_dim());
}

ParamVector CmdpRlhfProblem::initial_y() const {
  return ParamVector::Zero(mdp_.policy_dim());
}

}  // namespace cbso
