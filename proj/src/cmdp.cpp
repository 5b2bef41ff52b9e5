#include "cbso/cmdp.hpp"

#include <Eigen/LU>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cbso {

namespace {

constexpr double kStochasticTol = 1e-12;

// Joint chain over (s,a): T[sa, s'a'] = P(s'|s,a) pi(a'|s').
Eigen::MatrixXd joint_kernel(const CmdpSpec& mdp, const SoftmaxPolicy& policy) {
  const int n = mdp.n_sa();
  const Eigen::VectorXd pi = policy_table(mdp, policy);
  Eigen::MatrixXd t(n, n);
  for (int sa = 0; sa < n; ++sa) {
    for (int s2 = 0; s2 < mdp.n_states; ++s2) {
      const double p = mdp.transition(sa, s2);
      for (int a2 = 0; a2 < mdp.n_actions; ++a2) {
        t(sa, mdp.sa(s2, a2)) = p * pi[mdp.sa(s2, a2)];
      }
    }
  }
  return t;
}

Eigen::VectorXd initial_sa_dist(const CmdpSpec& mdp,
                                const SoftmaxPolicy& policy) {
  const Eigen::VectorXd pi = policy_table(mdp, policy);
  Eigen::VectorXd mu0(mdp.n_sa());
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      mu0[mdp.sa(s, a)] = mdp.initial_dist[s] * pi[mdp.sa(s, a)];
  return mu0;
}

}  // namespace

void validate_cmdp(const CmdpSpec& mdp) {
  require(mdp.n_states >= 1 && mdp.n_actions >= 1, ErrorCode::ConfigError,
          "cmdp needs at least one state and action");
  require(mdp.transition.rows() == mdp.n_sa() &&
              mdp.transition.cols() == mdp.n_states,
          ErrorCode::ConfigError, "transition table shape mismatch");
  require(mdp.cost.size() == mdp.n_sa(), ErrorCode::ConfigError,
          "cost table shape mismatch");
  require(mdp.initial_dist.size() == mdp.n_states, ErrorCode::ConfigError,
          "initial distribution shape mismatch");
  require(mdp.gamma > 0.0 && mdp.gamma < 1.0, ErrorCode::ConfigError,
          "gamma must lie in (0,1)");
  for (int sa = 0; sa < mdp.n_sa(); ++sa) {
    require(mdp.transition.row(sa).minCoeff() >= 0.0, ErrorCode::ConfigError,
            "transition probabilities must be nonnegative");
    require(std::abs(mdp.transition.row(sa).sum() - 1.0) <= kStochasticTol,
            ErrorCode::ConfigError, "transition row does not sum to one");
    require(std::abs(mdp.cost[sa]) <= mdp.cost_bound + kStochasticTol,
            ErrorCode::ConfigError, "cost exceeds declared bound");
  }
  require(mdp.initial_dist.minCoeff() >= 0.0 &&
              std::abs(mdp.initial_dist.sum() - 1.0) <= kStochasticTol,
          ErrorCode::ConfigError, "initial distribution is not a distribution");
  require(mdp.reward_features.rows() == mdp.n_sa() &&
              mdp.policy_features.rows() == mdp.n_sa(),
          ErrorCode::ConfigError, "feature table shape mismatch");
}

Eigen::VectorXd action_probs(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                             int s) {
  Eigen::VectorXd logits(mdp.n_actions);
  for (int a = 0; a < mdp.n_actions; ++a)
    logits[a] = mdp.policy_features.row(mdp.sa(s, a)).dot(policy.params);
  const double m = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - m).exp();
  p /= p.sum();
  return p;
}

Eigen::VectorXd grad_log_prob(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                              int s, int a) {
  const Eigen::VectorXd p = action_probs(mdp, policy, s);
  Eigen::VectorXd g = mdp.policy_features.row(mdp.sa(s, a)).transpose();
  for (int a2 = 0; a2 < mdp.n_actions; ++a2)
    g -= p[a2] * mdp.policy_features.row(mdp.sa(s, a2)).transpose();
  return g;
}

Eigen::VectorXd policy_table(const CmdpSpec& mdp,
                             const SoftmaxPolicy& policy) {
  Eigen::VectorXd table(mdp.n_sa());
  for (int s = 0; s < mdp.n_states; ++s) {
    const Eigen::VectorXd p = action_probs(mdp, policy, s);
    for (int a = 0; a < mdp.n_actions; ++a) table[mdp.sa(s, a)] = p[a];
  }
  return table;
}

double reward_value(const CmdpSpec& mdp, const LinearClippedReward& reward,
                    int s, int a) {
  const double v = mdp.reward_features.row(mdp.sa(s, a)).dot(reward.params);
  return std::clamp(v, -reward.r_max, reward.r_max);
}

Eigen::VectorXd reward_table(const CmdpSpec& mdp,
                             const LinearClippedReward& reward) {
  Eigen::VectorXd r = mdp.reward_features * reward.params;
  return r.array().min(reward.r_max).max(-reward.r_max);
}

Eigen::VectorXd reward_grad_x(const CmdpSpec& mdp,
                              const LinearClippedReward& reward, int s,
                              int a) {
  const double pre = mdp.reward_features.row(mdp.sa(s, a)).dot(reward.params);
  if (std::abs(pre) < reward.r_max)
    return mdp.reward_features.row(mdp.sa(s, a)).transpose();
  return Eigen::VectorXd::Zero(mdp.reward_dim());
}

Eigen::VectorXd exact_q(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                        const Eigen::Ref<const Eigen::VectorXd>& signal) {
  require(signal.allFinite(), ErrorCode::SingularSystem,
          "signal table must be finite");
  const int n = mdp.n_sa();
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(n, n) - mdp.gamma * joint_kernel(mdp, policy);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  const Eigen::VectorXd q = lu.solve(signal);
  const double residual = (system * q - signal).norm();
  require(q.allFinite() && residual <= 1e-10 * (1.0 + signal.norm()),
          ErrorCode::SingularSystem, "q-value linear solve failed");
  return q;
}

Eigen::VectorXd exact_occupancy(const CmdpSpec& mdp,
                                const SoftmaxPolicy& policy) {
  const int n = mdp.n_sa();
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(n, n) -
      mdp.gamma * joint_kernel(mdp, policy).transpose();
  const Eigen::VectorXd rhs = (1.0 - mdp.gamma) * initial_sa_dist(mdp, policy);
  Eigen::VectorXd nu = system.partialPivLu().solve(rhs);
  require(nu.allFinite() && std::abs(nu.sum() - 1.0) <= 1e-10,
          ErrorCode::SingularSystem, "occupancy solve failed");
  // Clamp tiny negative round-off so the result is a distribution.
  nu = nu.array().max(0.0);
  nu /= nu.sum();
  return nu;
}

double exact_value(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                   const Eigen::Ref<const Eigen::VectorXd>& signal) {
  const Eigen::VectorXd q = exact_q(mdp, policy, signal);
  return initial_sa_dist(mdp, policy).dot(q);
}

double occupancy_weighted_q(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                            const Eigen::Ref<const Eigen::VectorXd>& signal) {
  return exact_occupancy(mdp, policy).dot(exact_q(mdp, policy, signal));
}

Eigen::VectorXd occupancy_score_q(
    const CmdpSpec& mdp, const SoftmaxPolicy& policy,
    const Eigen::Ref<const Eigen::VectorXd>& signal) {
  const Eigen::VectorXd nu = exact_occupancy(mdp, policy);
  const Eigen::VectorXd q = exact_q(mdp, policy, signal);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(mdp.policy_dim());
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      const int sa = mdp.sa(s, a);
      if (nu[sa] == 0.0) continue;
      g += nu[sa] * q[sa] * grad_log_prob(mdp, policy, s, a);
    }
  return g;
}

Eigen::VectorXd exact_policy_gradient(
    const CmdpSpec& mdp, const SoftmaxPolicy& policy,
    const Eigen::Ref<const Eigen::VectorXd>& signal) {
  return occupancy_score_q(mdp, policy, signal) / (1.0 - mdp.gamma);
}

double optimal_value(const CmdpSpec& mdp,
                     const Eigen::Ref<const Eigen::VectorXd>& signal,
                     int max_iters, double tol) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(mdp.n_states);
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd next(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < mdp.n_actions; ++a) {
        const int sa = mdp.sa(s, a);
        best = std::max(best,
                        signal[sa] + mdp.gamma * mdp.transition.row(sa).dot(v));
      }
      next[s] = best;
    }
    const double delta = (next - v).lpNorm<Eigen::Infinity>();
    v = next;
    if (delta < tol) break;
  }
  return mdp.initial_dist.dot(v);
}

Trajectory sample_trajectory(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                             int horizon, RngStream stream) {
  Rng rng(stream);
  Trajectory traj;
  traj.steps.reserve(horizon);
  traj.log_prob_grad_accum = Eigen::VectorXd::Zero(mdp.policy_dim());
  int s = rng.categorical(mdp.initial_dist);
  for (int t = 0; t < horizon; ++t) {
    const Eigen::VectorXd p = action_probs(mdp, policy, s);
    const int a = rng.categorical(p);
    traj.steps.emplace_back(s, a);
    traj.log_prob_grad_accum += grad_log_prob(mdp, policy, s, a);
    s = rng.categorical(mdp.transition.row(mdp.sa(s, a)));
  }
  return traj;
}

std::pair<int, int> sample_occupancy_pair(const CmdpSpec& mdp,
                                          const SoftmaxPolicy& policy,
                                          int horizon, RngStream stream) {
  Rng rng(stream);
  const int t_stop = rng.truncated_geometric(mdp.gamma, horizon - 1);
  int s = rng.categorical(mdp.initial_dist);
  int a = rng.categorical(action_probs(mdp, policy, s));
  for (int t = 0; t < t_stop; ++t) {
    s = rng.categorical(mdp.transition.row(mdp.sa(s, a)));
    a = rng.categorical(action_probs(mdp, policy, s));
  }
  return {s, a};
}

double mc_q_estimate(const CmdpSpec& mdp, const SoftmaxPolicy& policy,
                     const Eigen::Ref<const Eigen::VectorXd>& signal, int s,
                     int a, int horizon, int n_rollouts, RngStream stream) {
  Rng rng(stream);
  double total = 0.0;
  for (int r = 0; r < n_rollouts; ++r) {
    int cs = s;
    int ca = a;
    double acc = 0.0;
    double discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
      acc += discount * signal[mdp.sa(cs, ca)];
      discount *= mdp.gamma;
      if (t + 1 < horizon) {
        cs = rng.categorical(mdp.transition.row(mdp.sa(cs, ca)));
        ca = rng.categorical(action_probs(mdp, policy, cs));
      }
    }
    total += acc;
  }
  return total / n_rollouts;
}

CmdpSpec random_cmdp(const RandomCmdpOptions& opts, RngStream stream) {
  Rng rng(stream);
  CmdpSpec mdp;
  mdp.n_states = opts.n_states;
  mdp.n_actions = opts.n_actions;
  mdp.gamma = opts.gamma;
  mdp.cost_bound = opts.cost_bound;
  mdp.c0 = opts.c0;
  const int n = mdp.n_sa();
  mdp.transition.resize(n, opts.n_states);
  for (int sa = 0; sa < n; ++sa) {
    Eigen::VectorXd row(opts.n_states);
    for (int s2 = 0; s2 < opts.n_states; ++s2) {
      double u = rng.uniform();
      while (u <= 0.0) u = rng.uniform();
      row[s2] = -std::log(u);  // Dirichlet(1) via normalized exponentials
    }
    row /= row.sum();
    // Renormalize once more so the sum is exactly representable near 1.
    mdp.transition.row(sa) = row / row.sum();
  }
  mdp.cost.resize(n);
  for (int sa = 0; sa < n; ++sa)
    mdp.cost[sa] = rng.uniform(-opts.cost_bound, opts.cost_bound);
  Eigen::VectorXd init(opts.n_states);
  for (int s = 0; s < opts.n_states; ++s) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    init[s] = -std::log(u);
  }
  init /= init.sum();
  mdp.initial_dist = init / init.sum();
  mdp.reward_features.resize(n, opts.reward_dim);
  for (int sa = 0; sa < n; ++sa)
    for (int j = 0; j < opts.reward_dim; ++j)
      mdp.reward_features(sa, j) = rng.uniform(-1.0, 1.0);
  mdp.policy_features.resize(n, opts.policy_dim);
  for (int sa = 0; sa < n; ++sa)
    for (int j = 0; j < opts.policy_dim; ++j)
      mdp.policy_features(sa, j) = rng.uniform(-1.0, 1.0);
  validate_cmdp(mdp);
  return mdp;
}

namespace {

void write_row(std::ostream& out, const char* key,
               const Eigen::Ref<const Eigen::VectorXd>& v) {
  out << key << " =";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), " %.17g", v[i]);
    out << buf;
  }
  out << "\n";
}

}  // namespace

std::string cmdp_to_text(const CmdpSpec& mdp) {
  std::ostringstream out;
  out << "[cmdp]\n";
  out << "n_states = " << mdp.n_states << "\n";
  out << "n_actions = " << mdp.n_actions << "\n";
  out << "d_r = " << mdp.reward_dim() << "\n";
  out << "d_p = " << mdp.policy_dim() << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", mdp.gamma);
  out << "gamma = " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", mdp.c0);
  out << "c0 = " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", mdp.cost_bound);
  out << "cost_bound = " << buf << "\n";
  write_row(out, "initial_dist", mdp.initial_dist);
  write_row(out, "cost", mdp.cost);
  for (int sa = 0; sa < mdp.n_sa(); ++sa)
    write_row(out, ("transition_row_" + std::to_string(sa)).c_str(),
              mdp.transition.row(sa));
  for (int sa = 0; sa < mdp.n_sa(); ++sa)
    write_row(out, ("reward_features_row_" + std::to_string(sa)).c_str(),
              mdp.reward_features.row(sa));
  for (int sa = 0; sa < mdp.n_sa(); ++sa)
    write_row(out, ("policy_features_row_" + std::to_string(sa)).c_str(),
              mdp.policy_features.row(sa));
  return out.str();
}

namespace {

std::vector<double> parse_values(const std::string& rhs) {
  std::istringstream in(rhs);
  std::vector<double> vals;
  double v;
  while (in >> v) vals.push_back(v);
  return vals;
}

}  // namespace

CmdpSpec cmdp_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  CmdpSpec mdp;
  int d_r = 0, d_p = 0;
  std::vector<std::pair<std::string, std::string>> entries;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  auto find_scalar = [&](const std::string& key) -> std::string {
    for (const auto& [k, v] : entries)
      if (k == key) return v;
    throw Error(ErrorCode::ConfigError, "cmdp file missing key: " + key);
  };
  mdp.n_states = std::stoi(find_scalar("n_states"));
  mdp.n_actions = std::stoi(find_scalar("n_actions"));
  d_r = std::stoi(find_scalar("d_r"));
  d_p = std::stoi(find_scalar("d_p"));
  mdp.gamma = std::stod(find_scalar("gamma"));
  mdp.c0 = std::stod(find_scalar("c0"));
  mdp.cost_bound = std::stod(find_scalar("cost_bound"));
  const int n = mdp.n_sa();
  mdp.transition.resize(n, mdp.n_states);
  mdp.reward_features.resize(n, d_r);
  mdp.policy_features.resize(n, d_p);
  auto fill_row = [&](Eigen::MatrixXd& m, int row, const std::string& key) {
    const auto vals = parse_values(find_scalar(key));
    require(static_cast<Eigen::Index>(vals.size()) == m.cols(),
            ErrorCode::ConfigError, "cmdp row length mismatch at " + key);
    for (Eigen::Index i = 0; i < m.cols(); ++i) m(row, i) = vals[i];
  };
  {
    const auto vals = parse_values(find_scalar("initial_dist"));
    require(static_cast<int>(vals.size()) == mdp.n_states,
            ErrorCode::ConfigError, "initial_dist length mismatch");
    mdp.initial_dist =
        Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
  }
  {
    const auto vals = parse_values(find_scalar("cost"));
    require(static_cast<int>(vals.size()) == n, ErrorCode::ConfigError,
            "cost length mismatch");
    mdp.cost = Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
  }
  for (int sa = 0; sa < n; ++sa)
    fill_row(mdp.transition, sa, "transition_row_" + std::to_string(sa));
  for (int sa = 0; sa < n; ++sa)
    fill_row(mdp.reward_features, sa,
             "reward_features_row_" + std::to_string(sa));
  for (int sa = 0; sa < n; ++sa)
    fill_row(mdp.policy_features, sa,
             "policy_features_row_" + std::to_string(sa));
  validate_cmdp(mdp);
  return mdp;
}

CmdpSpec load_cmdp_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoError, "cannot open cmdp file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return cmdp_from_text(buf.str());
}

void save_cmdp_file(const CmdpSpec& mdp, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoError, "cannot write cmdp file: " + path);
  out << cmdp_to_text(mdp);
}

}  // namespace cbso
