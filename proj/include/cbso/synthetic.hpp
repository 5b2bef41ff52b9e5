#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cbso/common.hpp"
#include "cbso/core.hpp"
#include "cbso/rng.hpp"

namespace cbso {

// Low-dimensional nonconvex test problem with exact functions/gradients and
// declared oracle noise levels. Registered problems pass a finite-difference
// gate on every gradient.
struct SyntheticProblem {
  std::string name;
  int dim_x = 1;
  int dim_y = 1;
  std::function<double(const ParamVector&, const ParamVector&)> f;
  std::function<double(const ParamVector&, const ParamVector&)> g;
  std::function<double(const ParamVector&)> h;
  std::function<ParamVector(const ParamVector&, const ParamVector&)> f_x;
  std::function<ParamVector(const ParamVector&, const ParamVector&)> f_y;
  std::function<ParamVector(const ParamVector&, const ParamVector&)> g_x;
  std::function<ParamVector(const ParamVector&, const ParamVector&)> g_y;
  std::function<ParamVector(const ParamVector&)> h_y;
  double c0 = 0.0;
  double sigma_f = 0.05;
  double sigma_g = 0.05;
  double sigma_h = 0.05;
  ParamVector x_lo, x_hi, y_lo, y_hi;  // domain box
};

std::vector<std::string> synthetic_catalog_names();

// Builds a catalog problem; raises UnknownProblem for anything else. Every
// construction re-runs the gradient/finite-difference registration gate.
SyntheticProblem make_problem(const std::string& name);

enum class GradSelector { FX, FY, GX, GY, HY };

// Exact gradient plus zero-mean Gaussian noise at the declared sigma. The
// hinge variant multiplies by tau computed from the exact h (the constraint
// value itself is assumed known here).
ParamVector noisy_grad(const SyntheticProblem& p, GradSelector which,
                       const ParamVector& x, const ParamVector& y,
                       RngStream stream);
// tau(h(y)) * (h_y(y) + noise), tau from exact h.
ParamVector noisy_subgrad_hplus(const SyntheticProblem& p, const ParamVector& y,
                                RngStream stream, double* tau_out = nullptr);

struct GridResolution {
  int x_points_per_dim = 201;
  int y_points_per_dim = 401;
};

// Exhaustive ground truth on the domain box.
struct GridOracleResult {
  Eigen::MatrixXd x_points;        // n_x rows, dim_x cols (full lattice)
  Eigen::MatrixXd y_feasible_star; // constrained argmin of g with h < c0
  Eigen::MatrixXd y_penalty_star;  // argmin_y h1(x, y)
  Eigen::MatrixXd z_penalty_star;  // argmin_z h2(x, z)
  Eigen::VectorXd phi;             // h1(x, y_pen) - h2(x, z_pen)/sigma1
  Eigen::VectorXd f_at_feasible;   // f(x, y_feasible_star)
  Eigen::VectorXd h1_min;
  Eigen::VectorXd h2_min;
  ParamVector best_x;              // argmin of phi over the lattice
  ParamVector best_x_bilevel;      // argmin of f(x, y_feasible_star(x))
  double c_f = 0.0;                // sup |f| over the box lattice
  double c_g = 0.0;
  double c_h = 0.0;                // max|h| + |c0|
  double feasibility_margin = 0.0; // half the grid h-resolution
};

GridOracleResult grid_bilevel_oracle(const SyntheticProblem& p,
                                     const PenaltyCoefficients& k,
                                     const GridResolution& res);

std::string grid_oracle_to_csv(const GridOracleResult& r);

// Exact phi(x) = min_y h1 - min_z h2 / sigma1 by dense scan over the y box,
// with its envelope-theorem x-gradient. Ground truth for probe tests.
struct PhiOracle {
  std::function<double(const ParamVector&)> value;
  std::function<ParamVector(const ParamVector&)> subgrad;
};
PhiOracle make_synthetic_phi_oracle(const SyntheticProblem& p,
                                    const PenaltyCoefficients& k,
                                    int y_points_per_dim = 1501);

}  // namespace cbso
