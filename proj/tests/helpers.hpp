#pragma once

#include <functional>

#include "cbso/cmdp.hpp"

namespace cbso::testing {

// Single state, `n_actions` self-loop actions, tabular-ish policy features.
inline CmdpSpec single_state_mdp(int n_actions, double gamma) {
  CmdpSpec mdp;
  mdp.n_states = 1;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  mdp.transition = Eigen::MatrixXd::Ones(n_actions, 1);
  mdp.cost = Eigen::VectorXd::Zero(n_actions);
  mdp.initial_dist = Eigen::VectorXd::Ones(1);
  mdp.reward_features = Eigen::MatrixXd::Identity(n_actions, n_actions);
  mdp.policy_features = Eigen::MatrixXd::Identity(n_actions, n_actions);
  validate_cmdp(mdp);
  return mdp;
}

// Two states, one action, deterministic cycle s0 -> s1 -> s0.
inline CmdpSpec two_state_cycle(double gamma) {
  CmdpSpec mdp;
  mdp.n_states = 2;
  mdp.n_actions = 1;
  mdp.gamma = gamma;
  mdp.transition.resize(2, 2);
  mdp.transition << 0.0, 1.0, 1.0, 0.0;
  mdp.cost = Eigen::VectorXd::Zero(2);
  mdp.initial_dist.resize(2);
  mdp.initial_dist << 1.0, 0.0;
  mdp.reward_features = Eigen::MatrixXd::Identity(2, 2);
  mdp.policy_features = Eigen::MatrixXd::Identity(2, 2);
  validate_cmdp(mdp);
  return mdp;
}

inline CmdpSpec small_random_mdp(std::uint64_t seed, int n_states = 5,
                                 int n_actions = 3, double gamma = 0.9) {
  RandomCmdpOptions opts;
  opts.n_states = n_states;
  opts.n_actions = n_actions;
  opts.gamma = gamma;
  return random_cmdp(opts, make_stream(seed, "test/mdp"));
}

// Central finite difference of a scalar function of a vector.
inline Eigen::VectorXd central_diff(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& v, double step = 1e-6) {
  Eigen::VectorXd g(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    Eigen::VectorXd hi = v, lo = v;
    hi[i] += step;
    lo[i] -= step;
    g[i] = (f(hi) - f(lo)) / (2.0 * step);
  }
  return g;
}

// Mean and standard error of repeated vector-valued draws.
struct VectorStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stderr_per_coord;
  double stderr_norm = 0.0;  // sqrt(sum of per-coordinate stderr^2)
};

inline VectorStats vector_stats(
    const std::function<Eigen::VectorXd(int)>& draw, int n) {
  Eigen::VectorXd sum, sumsq;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd v = draw(i);
    if (i == 0) {
      sum = v;
      sumsq = v.cwiseProduct(v);
    } else {
      sum += v;
      sumsq += v.cwiseProduct(v);
    }
  }
  VectorStats out;
  out.mean = sum / n;
  Eigen::VectorXd var =
      (sumsq / n - out.mean.cwiseProduct(out.mean)) * (n / double(n - 1));
  var = var.cwiseMax(0.0);
  out.stderr_per_coord = (var / n).cwiseSqrt();
  out.stderr_norm = std::sqrt(out.stderr_per_coord.squaredNorm());
  return out;
}

}  // namespace cbso::testing
