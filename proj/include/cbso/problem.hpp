#pragma once

#include <memory>

#include "cbso/estimators.hpp"
#include "cbso/synthetic.hpp"

namespace cbso {

// What the driver needs from either track: the five estimator hooks of the
// algorithm, exact diagnostics for logging, and optional parameter bounds.
class BilevelProblem {
 public:
  virtual ~BilevelProblem() = default;

  virtual int dim_x() const = 0;
  virtual int dim_y() const = 0;

  virtual SubgradientSample grad_y_f(const ParamVector& x, const ParamVector& y,
                                     int batch, int horizon,
                                     RngStream stream) const = 0;
  virtual SubgradientSample grad_y_g(const ParamVector& x, const ParamVector& y,
                                     int batch, int horizon,
                                     RngStream stream) const = 0;
  virtual SubgradientSample subgrad_y_hplus(const ParamVector& y, int batch,
                                            int horizon,
                                            RngStream stream) const = 0;
  virtual SubgradientSample grad_x_f(const ParamVector& x, const ParamVector& y,
                                     int batch, int horizon,
                                     RngStream stream) const = 0;
  virtual SubgradientSample grad_x_g(const ParamVector& x, const ParamVector& y,
                                     int batch, int horizon,
                                     RngStream stream) const = 0;

  // Exact diagnostics (desk scale keeps these affordable). f may need an
  // evaluation batch on the RLHF track, hence the stream.
  virtual double h_exact(const ParamVector& y) const = 0;
  virtual double g_exact(const ParamVector& x, const ParamVector& y) const = 0;
  virtual double f_eval(const ParamVector& x, const ParamVector& y, int batch,
                        int horizon, RngStream stream) const = 0;

  virtual ParamVector initial_x() const = 0;
  virtual ParamVector initial_y() const = 0;

  // Parameter box, when the problem declares one; iterates are projected
  // back onto it after each update.
  virtual bool has_box() const { return false; }
  virtual void project_x(ParamVector&) const {}
  virtual void project_y(ParamVector&) const {}
};

// Synthetic track: exact gradients plus Gaussian oracle noise; batch size B
// averages B independent oracle draws.
class SyntheticBilevelProblem : public BilevelProblem {
 public:
  SyntheticBilevelProblem(SyntheticProblem problem, ParamVector x0,
                          ParamVector y0);
  explicit SyntheticBilevelProblem(SyntheticProblem problem);

  const SyntheticProblem& spec() const { return problem_; }

  int dim_x() const override { return problem_.dim_x; }
  int dim_y() const override { return problem_.dim_y; }
  SubgradientSample grad_y_f(const ParamVector& x, const ParamVector& y,
                             int batch, int horizon,
                             RngStream stream) const override;
  SubgradientSample grad_y_g(const ParamVector& x, const ParamVector& y,
                             int batch, int horizon,
                             RngStream stream) const override;
  SubgradientSample subgrad_y_hplus(const ParamVector& y, int batch,
                                    int horizon,
                                    RngStream stream) const override;
  SubgradientSample grad_x_f(const ParamVector& x, const ParamVector& y,
                             int batch, int horizon,
                             RngStream stream) const override;
  SubgradientSample grad_x_g(const ParamVector& x, const ParamVector& y,
                             int batch, int horizon,
                             RngStream stream) const override;
  double h_exact(const ParamVector& y) const override;
  double g_exact(const ParamVector& x, const ParamVector& y) const override;
  double f_eval(const ParamVector& x, const ParamVector& y, int batch,
                int horizon, RngStream stream) const override;
  ParamVector initial_x() const override { return x0_; }
  ParamVector initial_y() const override { return y0_; }
  bool has_box() const override { return true; }
  void project_x(ParamVector& x) const override;
  void project_y(ParamVector& y) const override;

 private:
  SyntheticProblem problem_;
  ParamVector x0_, y0_;
};

struct RlhfProblemOptions {
  double beta = 0.0;
  double r_max = 5.0;
  int n_rollouts_per_q = 1;
  bool score_baseline = true;
};

// RLHF track: reward learning against a hidden true reward through
// preference batches, policy optimization through the sampled estimators.
class CmdpRlhfProblem : public BilevelProblem {
 public:
  CmdpRlhfProblem(CmdpSpec mdp, Annotator annotator,
                  RlhfProblemOptions options);

  const CmdpSpec& mdp() const { return mdp_; }
  const Annotator& annotator() const { return annotator_; }
  const SoftmaxPolicy& reference_policy() const { return reference_; }
  const RlhfProblemOptions& options() const { return options_; }
  LinearClippedReward reward_at(const ParamVector& x) const;
  SoftmaxPolicy policy_at(const ParamVector& y) const;

  int dim_x() const override { return mdp_.reward_dim(); }
  int dim_y() const override { return mdp_.policy_dim(); }
  SubgradientSample grad_y_f(const ParamVector& x, const ParamVector& y,
                             int batch, int horizon,
                             RngStream stream) const override;
  SubgradientSample grad_y_g(const ParamVector& x, const ParamVector& y,
                             int batch, int horizon,
                             RngStream stream) const override;
  SubgradientSample subgrad_y_hplus(const ParamVector& y, int batch,
                                    int horizon,
                                    RngStream stream) const override;
  SubgradientSample grad_x_f(const ParamVector& x, const ParamVector& y,
                             int batch, int horizon,
                             RngStream stream) const override;
  SubgradientSample grad_x_g(const ParamVector& x, const ParamVector& y,
                             int batch, int horizon,
                             RngStream stream) const override;
  double h_exact(const ParamVector& y) const override;
  double g_exact(const ParamVector& x, const ParamVector& y) const override;
  double f_eval(const ParamVector& x, const ParamVector& y, int batch,
                int horizon, RngStream stream) const override;
  ParamVector initial_x() const override;
  ParamVector initial_y() const override;

 private:
  EstimatorOptions estimator_options(int batch, int horizon) const;
  CmdpSpec mdp_;
  Annotator annotator_;
  RlhfProblemOptions options_;
  SoftmaxPolicy reference_;
};

}  // namespace cbso
