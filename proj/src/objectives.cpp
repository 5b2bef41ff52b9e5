#include "cbso/objectives.hpp"

#include <cmath>

namespace cbso {

double trajectory_return(const CmdpSpec& mdp, const LinearClippedReward& reward,
                         const Trajectory& d) {
  double total = 0.0;
  for (const auto& [s, a] : d.steps) total += reward_value(mdp, reward, s, a);
  return total;
}

double trajectory_signal_return(const CmdpSpec& mdp,
                                const Eigen::Ref<const Eigen::VectorXd>& signal,
                                const Trajectory& d) {
  double total = 0.0;
  for (const auto& [s, a] : d.steps) total += signal[mdp.sa(s, a)];
  return total;
}

double bt_prob(double r_a, double r_b) {
  const double diff = r_a - r_b;
  // p(|diff|) lands in [1/2, 1], so 1 - p is exact and the two orderings
  // sum to one bit-exactly.
  const double p = 1.0 / (1.0 + std::exp(-std::abs(diff)));
  return diff >= 0.0 ? p : 1.0 - p;
}

double log_sigmoid(double u) {
  if (u >= 0.0) return -std::log1p(std::exp(-u));
  return u - std::log1p(std::exp(u));
}

double pair_loss(const CmdpSpec& mdp, const LinearClippedReward& reward,
                 const PreferencePair& pair) {
  const double r0 = trajectory_return(mdp, reward, pair.d0);
  const double r1 = trajectory_return(mdp, reward, pair.d1);
  // -log P(preferred beats other); log P(d0 > d1) = log_sigmoid(r0 - r1).
  return -(pair.l0 * log_sigmoid(r0 - r1) + pair.l1 * log_sigmoid(r1 - r0));
}

double outer_loss_f(const CmdpSpec& mdp, const LinearClippedReward& reward,
                    const std::vector<PreferencePair>& pairs) {
  require(!pairs.empty(), ErrorCode::ConfigError,
          "preference batch must be nonempty");
  double total = 0.0;
  for (const auto& pair : pairs) total += pair_loss(mdp, reward, pair);
  return total / static_cast<double>(pairs.size());
}

namespace {

Eigen::VectorXd trajectory_reward_grad(const CmdpSpec& mdp,
                                       const LinearClippedReward& reward,
                                       const Trajectory& d) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(mdp.reward_dim());
  for (const auto& [s, a] : d.steps) g += reward_grad_x(mdp, reward, s, a);
  return g;
}

}  // namespace

Eigen::VectorXd grad_x_pair_loss(const CmdpSpec& mdp,
                                 const LinearClippedReward& reward,
                                 const PreferencePair& pair) {
  const double r0 = trajectory_return(mdp, reward, pair.d0);
  const double r1 = trajectory_return(mdp, reward, pair.d1);
  const double u = r1 - r0;
  // loss = -(l1 log sigmoid(u) + l0 log sigmoid(-u));
  // d loss/du = -(l1 sigmoid(-u) - l0 sigmoid(u)).
  const double dl_du =
      -(pair.l1 * (1.0 - 1.0 / (1.0 + std::exp(-u))) -
        pair.l0 * (1.0 / (1.0 + std::exp(-u))));
  const Eigen::VectorXd du_dx =
      trajectory_reward_grad(mdp, reward, pair.d1) -
      trajectory_reward_grad(mdp, reward, pair.d0);
  return dl_du * du_dx;
}

Eigen::VectorXd grad_x_outer_loss(const CmdpSpec& mdp,
                                  const LinearClippedReward& reward,
                                  const std::vector<PreferencePair>& pairs) {
  require(!pairs.empty(), ErrorCode::ConfigError,
          "preference batch must be nonempty");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(mdp.reward_dim());
  for (const auto& pair : pairs) g += grad_x_pair_loss(mdp, reward, pair);
  return g / static_cast<double>(pairs.size());
}

PreferencePair sample_preference_pair(const CmdpSpec& mdp,
                                      const SoftmaxPolicy& policy,
                                      const Annotator& annotator, int horizon,
                                      RngStream stream) {
  PreferencePair pair;
  pair.d0 = sample_trajectory(
      mdp, policy, horizon,
      RngStream{stream.master_seed, splitmix64(stream.stream_id ^ 0x0d0)});
  pair.d1 = sample_trajectory(
      mdp, policy, horizon,
      RngStream{stream.master_seed, splitmix64(stream.stream_id ^ 0x0d1)});
  const double t0 = trajectory_signal_return(mdp, annotator.true_reward, pair.d0);
  const double t1 = trajectory_signal_return(mdp, annotator.true_reward, pair.d1);
  Rng rng(RngStream{stream.master_seed, splitmix64(stream.stream_id ^ 0x1ab)});
  bool prefer_d1;
  if (annotator.mode == AnnotatorMode::GroundTruth) {
    prefer_d1 = t0 == t1 ? (rng.uniform() < 0.5) : (t1 > t0);
  } else {
    prefer_d1 = rng.uniform() < bt_prob(t1, t0);
  }
  pair.l1 = prefer_d1 ? 1 : 0;
  pair.l0 = 1 - pair.l1;
  return pair;
}

std::vector<PreferencePair> sample_preference_batch(
    const CmdpSpec& mdp, const SoftmaxPolicy& policy,
    const Annotator& annotator, int batch, int horizon, RngStream stream) {
  std::vector<PreferencePair> pairs;
  pairs.reserve(batch);
  for (int i = 0; i < batch; ++i) {
    pairs.push_back(sample_preference_pair(
        mdp, policy, annotator, horizon,
        RngStream{stream.master_seed,
                  splitmix64(stream.stream_id + 0x9e3779b9 * (i + 1))}));
  }
  return pairs;
}

Eigen::VectorXd kl_ratio_table(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                               const SoftmaxPolicy& reference) {
  Eigen::VectorXd table(mdp.n_sa());
  for (int s = 0; s < mdp.n_states; ++s) {
    const Eigen::VectorXd p = action_probs(mdp, policy, s);
    const Eigen::VectorXd q = action_probs(mdp, reference, s);
    for (int a = 0; a < mdp.n_actions; ++a)
      table[mdp.sa(s, a)] = std::log(p[a]) - std::log(q[a]);
  }
  return table;
}

double inner_g_exact(const CmdpSpec& mdp, const LinearClippedReward& reward,
                     const SoftmaxPolicy& policy, double beta,
                     const SoftmaxPolicy& reference) {
  double g = -exact_value(mdp, policy, reward_table(mdp, reward));
  if (beta != 0.0)
    g -= beta * exact_value(mdp, policy, kl_ratio_table(mdp, policy, reference));
  return g;
}

Eigen::VectorXd grad_x_inner_g(const CmdpSpec& mdp,
                               const LinearClippedReward& reward,
                               const SoftmaxPolicy& policy) {
  const Eigen::VectorXd nu = exact_occupancy(mdp, policy);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(mdp.reward_dim());
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      const int sa = mdp.sa(s, a);
      if (nu[sa] == 0.0) continue;
      g -= nu[sa] * reward_grad_x(mdp, reward, s, a);
    }
  return g / (1.0 - mdp.gamma);
}

double constraint_h_exact(const CmdpSpec& mdp, const SoftmaxPolicy& policy) {
  return occupancy_weighted_q(mdp, policy, mdp.cost);
}

double hinge(double v, double c0) { return std::max(v - c0, 0.0); }

ObjectiveValue h1_compose(double f, double g, double hplus,
                          const PenaltyCoefficients& k) {
  ObjectiveValue out;
  out.components["f"] = f;
  out.components["g"] = g;
  out.components["hplus"] = hplus;
  out.value = f + (g + hplus / k.sigma3) / k.sigma1;
  return out;
}

ObjectiveValue h2_compose(double g, double hplus,
                          const PenaltyCoefficients& k) {
  ObjectiveValue out;
  out.components["g"] = g;
  out.components["hplus"] = hplus;
  out.value = g + hplus / k.sigma2;
  return out;
}

ObjectiveValue phi_compose(const ObjectiveValue& h1, const ObjectiveValue& h2,
                           const PenaltyCoefficients& k) {
  ObjectiveValue out;
  out.components["h1"] = h1.value;
  out.components["h2"] = h2.value;
  out.value = h1.value - h2.value / k.sigma1;
  return out;
}

ObjectiveValue rlhf_h1_value(const CmdpSpec& mdp,
                             const LinearClippedReward& reward,
                             const SoftmaxPolicy& policy,
                             const std::vector<PreferencePair>& pairs,
                             double beta, const SoftmaxPolicy& reference,
                             const PenaltyCoefficients& k) {
  const double f = outer_loss_f(mdp, reward, pairs);
  const double g = inner_g_exact(mdp, reward, policy, beta, reference);
  const double hp = hinge(constraint_h_exact(mdp, policy), k.c0);
  return h1_compose(f, g, hp, k);
}

ObjectiveValue rlhf_h2_value(const CmdpSpec& mdp,
                             const LinearClippedReward& reward,
                             const SoftmaxPolicy& policy, double beta,
                             const SoftmaxPolicy& reference,
                             const PenaltyCoefficients& k) {
  const double g = inner_g_exact(mdp, reward, policy, beta, reference);
  const double hp = hinge(constraint_h_exact(mdp, policy), k.c0);
  return h2_compose(g, hp, k);
}

}  // namespace cbso
