#include "cbso/estimators.hpp"

namespace cbso {

SubgradientSample grad_y_f_hat(const CmdpSpec& mdp,
                               const LinearClippedReward& reward,
                               const SoftmaxPolicy& policy,
                               const Annotator& annotator,
                               const EstimatorOptions& opts, RngStream stream) {
  const int b = opts.batch_size;
  require(b >= 1, ErrorCode::ConfigError, "batch size must be >= 1");
  std::vector<double> losses(b);
  std::vector<Eigen::VectorXd> scores(b);
  for (int i = 0; i < b; ++i) {
    const PreferencePair pair = sample_preference_pair(
        mdp, policy, annotator, opts.horizon, substream(stream, "pair", i));
    losses[i] = pair_loss(mdp, reward, pair);
    scores[i] = pair.d0.log_prob_grad_accum + pair.d1.log_prob_grad_accum;
  }
  double loss_sum = 0.0;
  for (double l : losses) loss_sum += l;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(mdp.policy_dim());
  for (int i = 0; i < b; ++i) {
    double baseline = 0.0;
    if (opts.use_baseline && b > 1)
      baseline = (loss_sum - losses[i]) / static_cast<double>(b - 1);
    g += (losses[i] - baseline) * scores[i];
  }
  SubgradientSample out;
  out.vector = g / static_cast<double>(b);
  out.batch_size = b;
  out.horizon = opts.horizon;
  return out;
}

SubgradientSample grad_y_g_hat(const CmdpSpec& mdp,
                               const LinearClippedReward& reward,
                               const SoftmaxPolicy& policy, double beta,
                               const SoftmaxPolicy& reference,
                               const EstimatorOptions& opts, RngStream stream) {
  // The regularizer's y-gradient is grad_y log pi_y; the reference policy
  // only shifts the value, not the gradient.
  (void)reference;
  const int b = opts.batch_size;
  require(b >= 1 && opts.horizon >= 1, ErrorCode::ConfigError,
          "batch size and horizon must be >= 1");
  const Eigen::VectorXd r_table = reward_table(mdp, reward);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(mdp.policy_dim());
  for (int i = 0; i < b; ++i) {
    const auto [s, a] = sample_occupancy_pair(mdp, policy, opts.horizon,
                                              substream(stream, "occ", i));
    const double q_hat =
        mc_q_estimate(mdp, policy, r_table, s, a, opts.horizon,
                      opts.n_rollouts_per_q, substream(stream, "q", i));
    g -= grad_log_prob(mdp, policy, s, a) * q_hat;
  }
  if (beta != 0.0) {
    for (int j = 0; j < b; ++j) {
      const Trajectory traj = sample_trajectory(mdp, policy, opts.horizon,
                                                substream(stream, "kl", j));
      double discount = 1.0;
      for (const auto& [s, a] : traj.steps) {
        // grad_y log(pi_y/pi_ref) = grad_y log pi_y.
        g -= beta * discount * grad_log_prob(mdp, policy, s, a);
        discount *= mdp.gamma;
      }
    }
  }
  SubgradientSample out;
  out.vector = g / static_cast<double>(b);
  out.batch_size = b;
  out.horizon = opts.horizon;
  out.n_rollouts_per_q = opts.n_rollouts_per_q;
  return out;
}

SubgradientSample subgrad_y_hplus_hat(const CmdpSpec& mdp,
                                      const SoftmaxPolicy& policy, double c0,
                                      const EstimatorOptions& opts,
                                      RngStream stream) {
  const int b = opts.batch_size;
  require(b >= 1 && opts.horizon >= 1, ErrorCode::ConfigError,
          "batch size and horizon must be >= 1");
  Eigen::VectorXd score_q = Eigen::VectorXd::Zero(mdp.policy_dim());
  double h_hat = 0.0;
  for (int i = 0; i < b; ++i) {
    const auto [s, a] = sample_occupancy_pair(mdp, policy, opts.horizon,
                                              substream(stream, "occ", i));
    const double q_hat =
        mc_q_estimate(mdp, policy, mdp.cost, s, a, opts.horizon,
                      opts.n_rollouts_per_q, substream(stream, "q", i));
    h_hat += q_hat;
    score_q += grad_log_prob(mdp, policy, s, a) * q_hat;
  }
  h_hat /= static_cast<double>(b);
  double tau;
  if (h_hat > c0)
    tau = 1.0;
  else if (h_hat < c0)
    tau = 0.0;
  else
    tau = 0.5;
  SubgradientSample out;
  out.vector = tau * score_q / static_cast<double>(b);
  out.batch_size = b;
  out.horizon = opts.horizon;
  out.tau = tau;
  out.n_rollouts_per_q = opts.n_rollouts_per_q;
  return out;
}

SubgradientSample grad_x_f_hat(const CmdpSpec& mdp,
                               const LinearClippedReward& reward,
                               const std::vector<PreferencePair>& pairs) {
  SubgradientSample out;
  out.vector = grad_x_outer_loss(mdp, reward, pairs);
  out.batch_size = static_cast<int>(pairs.size());
  out.horizon =
      pairs.empty() ? 0 : static_cast<int>(pairs.front().d0.steps.size());
  return out;
}

SubgradientSample grad_x_g_hat(const CmdpSpec& mdp,
                               const LinearClippedReward& reward,
                               const SoftmaxPolicy& policy,
                               const EstimatorOptions& opts, RngStream stream) {
  const int b = opts.batch_size;
  require(b >= 1 && opts.horizon >= 1, ErrorCode::ConfigError,
          "batch size and horizon must be >= 1");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(mdp.reward_dim());
  for (int j = 0; j < b; ++j) {
    const Trajectory traj = sample_trajectory(mdp, policy, opts.horizon,
                                              substream(stream, "traj", j));
    double discount = 1.0;
    for (const auto& [s, a] : traj.steps) {
      g -= discount * reward_grad_x(mdp, reward, s, a);
      discount *= mdp.gamma;
    }
  }
  SubgradientSample out;
  out.vector = g / static_cast<double>(b);
  out.batch_size = b;
  out.horizon = opts.horizon;
  return out;
}

namespace {

SubgradientSample weighted_sum(
    std::initializer_list<std::pair<double, const SubgradientSample*>> parts) {
  SubgradientSample out;
  bool first = true;
  for (const auto& [w, part] : parts) {
    if (first) {
      out.vector = w * part->vector;
      out.batch_size = part->batch_size;
      out.horizon = part->horizon;
      out.n_rollouts_per_q = part->n_rollouts_per_q;
      first = false;
    } else {
      out.vector += w * part->vector;
    }
  }
  return out;
}

}  // namespace

SubgradientSample compose_y_h1(const SubgradientSample& f_part,
                               const SubgradientSample& g_part,
                               const SubgradientSample& hplus_part,
                               const PenaltyCoefficients& k) {
  SubgradientSample out = weighted_sum({{1.0, &f_part},
                                        {1.0 / k.sigma1, &g_part},
                                        {1.0 / (k.sigma1 * k.sigma3),
                                         &hplus_part}});
  out.tau = hplus_part.tau;
  out.n_rollouts_per_q = hplus_part.n_rollouts_per_q;
  return out;
}

SubgradientSample compose_y_h2(const SubgradientSample& g_part,
                               const SubgradientSample& hplus_part,
                               const PenaltyCoefficients& k) {
  SubgradientSample out =
      weighted_sum({{1.0, &g_part}, {1.0 / k.sigma2, &hplus_part}});
  out.tau = hplus_part.tau;
  out.n_rollouts_per_q = hplus_part.n_rollouts_per_q;
  return out;
}

SubgradientSample compose_x_phi(const SubgradientSample& f_part,
                                const SubgradientSample& g_at_y,
                                const SubgradientSample& g_at_z,
                                const PenaltyCoefficients& k) {
  return weighted_sum({{1.0, &f_part},
                       {1.0 / k.sigma1, &g_at_y},
                       {-1.0 / k.sigma1, &g_at_z}});
}

}  // namespace cbso
