#pragma once

#include <vector>

#include "cbso/core.hpp"
#include "cbso/objectives.hpp"

namespace cbso {

// Estimated (sub)gradient with the metadata describing how it was drawn.
struct SubgradientSample {
  Eigen::VectorXd vector;
  int batch_size = 0;
  int horizon = 0;
  // Hinge indicator value used ({0, 1/2, 1}); 0 for hinge-free estimators.
  double tau = 0.0;
  int n_rollouts_per_q = 0;
};

struct EstimatorOptions {
  int batch_size = 32;
  int horizon = 50;
  int n_rollouts_per_q = 1;
  // Leave-one-out batch-mean baseline for the preference score estimator;
  // keeps the estimator exactly unbiased while cutting variance.
  bool use_baseline = true;
};

// Score-function estimator of the y-gradient of the preference loss:
// average over pairs of (loss_i - baseline_i) * (score(d0) + score(d1)).
SubgradientSample grad_y_f_hat(const CmdpSpec& mdp,
                               const LinearClippedReward& reward,
                               const SoftmaxPolicy& policy,
                               const Annotator& annotator,
                               const EstimatorOptions& opts, RngStream stream);

// Occupancy-sampled score-times-Q estimator of the inner-loss y-gradient,
// plus the discounted trajectory term for the reference-policy regularizer.
// Q-hats use rollouts independent of the occupancy sample.
SubgradientSample grad_y_g_hat(const CmdpSpec& mdp,
                               const LinearClippedReward& reward,
                               const SoftmaxPolicy& policy, double beta,
                               const SoftmaxPolicy& reference,
                               const EstimatorOptions& opts, RngStream stream);

// Hinge subgradient: tau(h_hat) * batch mean of score * Q_cost, where
// h_hat is the same batch's mean cost Q estimate and tau is 1 above the
// threshold, 0 below, 1/2 on exact equality.
SubgradientSample subgrad_y_hplus_hat(const CmdpSpec& mdp,
                                      const SoftmaxPolicy& policy, double c0,
                                      const EstimatorOptions& opts,
                                      RngStream stream);

// Pathwise x-gradient of the batch preference loss (the trajectory
// distribution does not depend on x, so this is exact given the batch).
SubgradientSample grad_x_f_hat(const CmdpSpec& mdp,
                               const LinearClippedReward& reward,
                               const std::vector<PreferencePair>& pairs);

// Discounted clipped-reward feature sums along sampled trajectories,
// sign-flipped.
SubgradientSample grad_x_g_hat(const CmdpSpec& mdp,
                               const LinearClippedReward& reward,
                               const SoftmaxPolicy& policy,
                               const EstimatorOptions& opts, RngStream stream);

// Inner-update directions: d_y h1 = d_y f + (d_y g + d_y h+ / sigma3)/sigma1
// and d_y h2 = d_y g + d_y h+ / sigma2. Metadata comes from the components
// (tau from the hinge part).
SubgradientSample compose_y_h1(const SubgradientSample& f_part,
                               const SubgradientSample& g_part,
                               const SubgradientSample& hplus_part,
                               const PenaltyCoefficients& k);
SubgradientSample compose_y_h2(const SubgradientSample& g_part,
                               const SubgradientSample& hplus_part,
                               const PenaltyCoefficients& k);

// Outer direction: d_x phi = d_x f(x,y) + (d_x g(x,y) - d_x g(x,z))/sigma1.
SubgradientSample compose_x_phi(const SubgradientSample& f_part,
                                const SubgradientSample& g_at_y,
                                const SubgradientSample& g_at_z,
                                const PenaltyCoefficients& k);

}  // namespace cbso
