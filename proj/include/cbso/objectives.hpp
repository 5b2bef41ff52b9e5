#pragma once

#include <map>
#include <string>
#include <vector>

#include "cbso/cmdp.hpp"
#include "cbso/core.hpp"

namespace cbso {

// Trajectory pair with one-hot preference labels (l0 + l1 = 1).
struct PreferencePair {
  Trajectory d0;
  Trajectory d1;
  int l0 = 0;
  int l1 = 1;
};

// Scalar objective plus its named sub-terms so decompositions can be
// recombined and checked.
struct ObjectiveValue {
  double value = 0.0;
  std::map<std::string, double> components;
};

// Preference labeling rule applied to sampled trajectory pairs.
enum class AnnotatorMode { GroundTruth, BradleyTerry };

struct Annotator {
  AnnotatorMode mode = AnnotatorMode::BradleyTerry;
  // Hidden true reward per (s,a) used to judge pairs.
  Eigen::VectorXd true_reward;
};

// Undiscounted sum of clipped rewards along the trajectory.
double trajectory_return(const CmdpSpec& mdp, const LinearClippedReward& reward,
                         const Trajectory& d);

double trajectory_signal_return(const CmdpSpec& mdp,
                                const Eigen::Ref<const Eigen::VectorXd>& signal,
                                const Trajectory& d);

// P(a beats b) = exp(r_a)/(exp(r_a)+exp(r_b)), computed in log domain;
// bt_prob(a,b) + bt_prob(b,a) == 1 exactly.
double bt_prob(double r_a, double r_b);

// log(sigmoid(u)) without overflow.
double log_sigmoid(double u);

// Negative log Bradley-Terry likelihood of one labeled pair.
double pair_loss(const CmdpSpec& mdp, const LinearClippedReward& reward,
                 const PreferencePair& pair);

// Mean pair_loss over the batch; always >= 0, equals log 2 when all
// returns are tied.
double outer_loss_f(const CmdpSpec& mdp, const LinearClippedReward& reward,
                    const std::vector<PreferencePair>& pairs);

// Pathwise gradient of pair_loss in the reward parameters.
Eigen::VectorXd grad_x_pair_loss(const CmdpSpec& mdp,
                                 const LinearClippedReward& reward,
                                 const PreferencePair& pair);
Eigen::VectorXd grad_x_outer_loss(const CmdpSpec& mdp,
                                  const LinearClippedReward& reward,
                                  const std::vector<PreferencePair>& pairs);

// Samples one labeled pair: both trajectories from pi_y, label from the
// annotator (ground-truth comparison or Bradley-Terry draw on true returns).
PreferencePair sample_preference_pair(const CmdpSpec& mdp,
                                      const SoftmaxPolicy& policy,
                                      const Annotator& annotator, int horizon,
                                      RngStream stream);
std::vector<PreferencePair> sample_preference_batch(
    const CmdpSpec& mdp, const SoftmaxPolicy& policy,
    const Annotator& annotator, int batch, int horizon, RngStream stream);

// Per-(s,a) table of log(pi_y/pi_ref).
Eigen::VectorXd kl_ratio_table(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                               const SoftmaxPolicy& reference);

// Exact inner objective: -(discounted return of r_x) - beta * (discounted
// sum of log(pi_y/pi_ref)), both from the initial distribution.
double inner_g_exact(const CmdpSpec& mdp, const LinearClippedReward& reward,
                     const SoftmaxPolicy& policy, double beta,
                     const SoftmaxPolicy& reference);

// Exact x-gradient of inner_g_exact: minus the occupancy-weighted clipped
// reward feature sum (the KL term carries no x-dependence).
Eigen::VectorXd grad_x_inner_g(const CmdpSpec& mdp,
                               const LinearClippedReward& reward,
                               const SoftmaxPolicy& policy);

// Constraint value h(y): occupancy-weighted expected cost Q-value. This is
// the exact counterpart of the batch estimate used by the hinge subgradient,
// so threshold comparisons agree between the two.
double constraint_h_exact(const CmdpSpec& mdp, const SoftmaxPolicy& policy);

// max(v - c0, 0).
double hinge(double v, double c0);

// h1 = f + (g + hplus/sigma3)/sigma1, from already-evaluated parts.
ObjectiveValue h1_compose(double f, double g, double hplus,
                          const PenaltyCoefficients& k);
// h2 = g + hplus/sigma2.
ObjectiveValue h2_compose(double g, double hplus,
                          const PenaltyCoefficients& k);
// phi = h1(x,y) - h2(x,z)/sigma1.
ObjectiveValue phi_compose(const ObjectiveValue& h1, const ObjectiveValue& h2,
                           const PenaltyCoefficients& k);

// Full RLHF-track evaluations. f is the batch-empirical preference loss
// (the population value would need trajectory enumeration); g and the hinge
// are exact.
ObjectiveValue rlhf_h1_value(const CmdpSpec& mdp,
                             const LinearClippedReward& reward,
                             const SoftmaxPolicy& policy,
                             const std::vector<PreferencePair>& pairs,
                             double beta, const SoftmaxPolicy& reference,
                             const PenaltyCoefficients& k);
ObjectiveValue rlhf_h2_value(const CmdpSpec& mdp,
                             const LinearClippedReward& reward,
                             const SoftmaxPolicy& policy, double beta,
                             const SoftmaxPolicy& reference,
                             const PenaltyCoefficients& k);

}  // namespace cbso
