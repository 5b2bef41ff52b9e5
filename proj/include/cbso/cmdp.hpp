#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cbso/common.hpp"
#include "cbso/rng.hpp"

namespace cbso {

// Finite CMDP. Tables are indexed by the flat pair index sa = s*n_actions + a.
struct CmdpSpec {
  int n_states = 0;
  int n_actions = 0;
  // (S*A) x S; row sa is the distribution of the next state.
  Eigen::MatrixXd transition;
  // Cost table over sa, entries in [-cost_bound, cost_bound].
  Eigen::VectorXd cost;
  double cost_bound = 1.0;
  double gamma = 0.9;
  Eigen::VectorXd initial_dist;  // over states
  double c0 = 0.0;
  // Linear reward features, (S*A) x d_r.
  Eigen::MatrixXd reward_features;
  // Policy logit features, (S*A) x d_p.
  Eigen::MatrixXd policy_features;

  int sa(int s, int a) const { return s * n_actions + a; }
  int n_sa() const { return n_states * n_actions; }
  int reward_dim() const { return static_cast<int>(reward_features.cols()); }
  int policy_dim() const { return static_cast<int>(policy_features.cols()); }
};

// Throws ConfigError when stochasticity/bound invariants are broken.
void validate_cmdp(const CmdpSpec& mdp);

// pi_y(a|s) = softmax over a of y . psi(s,a). Strictly positive.
struct SoftmaxPolicy {
  ParamVector params;
};

// r_x(s,a) = clip(x . phi(s,a), -r_max, r_max).
struct LinearClippedReward {
  ParamVector params;
  double r_max = 1.0;
};

Eigen::VectorXd action_probs(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                             int s);
// psi(s,a) - sum_a' pi(a'|s) psi(s,a'), the score of log pi_y(a|s).
Eigen::VectorXd grad_log_prob(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                              int s, int a);
// All conditionals stacked into a (S*A) vector, pi(a|s) at index sa.
Eigen::VectorXd policy_table(const CmdpSpec& mdp, const SoftmaxPolicy& policy);

double reward_value(const CmdpSpec& mdp, const LinearClippedReward& reward,
                    int s, int a);
Eigen::VectorXd reward_table(const CmdpSpec& mdp,
                             const LinearClippedReward& reward);
// d r_x(s,a)/dx: phi(s,a) where |x.phi| < r_max, zero where clipped
// (Clarke selection at the boundary).
Eigen::VectorXd reward_grad_x(const CmdpSpec& mdp,
                              const LinearClippedReward& reward, int s, int a);

struct Trajectory {
  std::vector<std::pair<int, int>> steps;  // (state, action), length H
  // sum_t grad_y log pi_y(a_t|s_t), accumulated while sampling.
  ParamVector log_prob_grad_accum;
};

// ----- Exact dynamic-programming oracles -----

// Solves (I - gamma T) q = signal over the joint (s,a) chain; residual is
// checked to 1e-10 and SingularSystem is raised on numerical corruption.
Eigen::VectorXd exact_q(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                        const Eigen::Ref<const Eigen::VectorXd>& signal);

// Normalized discounted occupancy over (s,a): entries >= 0, sums to 1.
Eigen::VectorXd exact_occupancy(const CmdpSpec& mdp,
                                const SoftmaxPolicy& policy);

// Discounted return from the initial distribution,
// E[sum_t gamma^t signal(s_t,a_t)].
double exact_value(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                   const Eigen::Ref<const Eigen::VectorXd>& signal);

// sum_{s,a} occupancy(s,a) * Q_signal(s,a); this is the quantity the
// batch estimate h_hat concentrates at.
double occupancy_weighted_q(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                            const Eigen::Ref<const Eigen::VectorXd>& signal);

// Exact policy gradient of exact_value: sum_{s,a} D(s,a) grad_log_pi Q with
// the unnormalized occupancy D = occupancy/(1-gamma).
Eigen::VectorXd exact_policy_gradient(
    const CmdpSpec& mdp, const SoftmaxPolicy& policy,
    const Eigen::Ref<const Eigen::VectorXd>& signal);

// sum_{s,a} occupancy(s,a) grad_log_pi(a|s) Q_signal(s,a); equals
// (1-gamma) * exact_policy_gradient and is the exact mean of the
// occupancy-sampled score-times-Q estimators.
Eigen::VectorXd occupancy_score_q(
    const CmdpSpec& mdp, const SoftmaxPolicy& policy,
    const Eigen::Ref<const Eigen::VectorXd>& signal);

// Best attainable exact_value over deterministic policies (value iteration);
// used as the reference point for improvement measurements.
double optimal_value(const CmdpSpec& mdp,
                     const Eigen::Ref<const Eigen::VectorXd>& signal,
                     int max_iters = 10000, double tol = 1e-12);

// ----- Monte-Carlo sampling -----

Trajectory sample_trajectory(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                             int horizon, RngStream stream);

// Draws t ~ Geometric(1-gamma) capped at horizon-1, rolls out t steps and
// returns (s_t, a_t); converges to the discounted occupancy as horizon grows.
std::pair<int, int> sample_occupancy_pair(const CmdpSpec& mdp,
                                          const SoftmaxPolicy& policy,
                                          int horizon, RngStream stream);

// Mean over rollouts of sum_{t<H} gamma^t signal started at (s,a);
// truncation bias is at most gamma^H max|signal|/(1-gamma).
double mc_q_estimate(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                     const Eigen::Ref<const Eigen::VectorXd>& signal, int s,
                     int a, int horizon, int n_rollouts, RngStream stream);

// ----- Construction and serialization -----

struct RandomCmdpOptions {
  int n_states = 5;
  int n_actions = 3;
  int reward_dim = 4;
  int policy_dim = 6;
  double gamma = 0.9;
  double cost_bound = 1.0;
  double c0 = 0.0;
};

// Dirichlet(1) transition rows, features uniform in [-1,1], costs uniform
// in [-cost_bound, cost_bound].
CmdpSpec random_cmdp(const RandomCmdpOptions& opts, RngStream stream);

std::string cmdp_to_text(const CmdpSpec& mdp);
CmdpSpec cmdp_from_text(const std::string& text);
CmdpSpec load_cmdp_file(const std::string& path);
void save_cmdp_file(const CmdpSpec& mdp, const std::string& path);

}  // namespace cbso
