#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbso/common.hpp"

namespace cbso {

// Validated penalty configuration for the three-coefficient objective
// f + (g + h+/sigma3)/sigma1 - (1/sigma1) min_z (g + h+/sigma2).
struct PenaltyCoefficients {
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double sigma3 = 0.0;
  double c0 = 0.0;
  // Set when sigma3 <= sigma2: the violation bound derivation wants
  // sigma3 >> sigma2, but the algorithm still runs (useful for ablations).
  bool sigma_order_warning = false;
};

PenaltyCoefficients validate_penalty_coefficients(double sigma1, double sigma2,
                                                  double sigma3, double c0);

// Three-term violation bound: max{2*Cg*s2, 2*Cf*s1 + 2*Cg*(s2/s3),
// 2*Cf*s1*s3 + 2*Cg*s3}.
double epsilon_lambda(double c_f, double c_g, const PenaltyCoefficients& k);

// Per-term values, in the order {hplus(z), g-gap, hplus(y)} bounds.
struct ViolationBounds {
  double hplus_z;
  double g_gap;
  double hplus_y;
};
ViolationBounds violation_bounds(double c_f, double c_g,
                                 const PenaltyCoefficients& k);

// eps' = (1/sigma1) * eps_lambda * (1 + 1/sigma2) + eps.
double epsilon_prime(double eps_lambda, double sigma1, double sigma2,
                     double eps);

enum class ScheduleKind { OuterPower, InnerHarmonic, Constant };

// step(t) = c_a/(1+t)^a  |  step(k) = eta/(k+1)  |  step(.) = value.
class StepSchedule {
 public:
  static StepSchedule outer_power(double c_a, double a);
  static StepSchedule inner_harmonic(double eta);
  static StepSchedule constant(double value);

  double operator()(std::int64_t index) const;
  ScheduleKind kind() const { return kind_; }
  double scale() const { return scale_; }
  double exponent() const { return exponent_; }

 private:
  StepSchedule(ScheduleKind kind, double scale, double exponent)
      : kind_(kind), scale_(scale), exponent_(exponent) {}
  ScheduleKind kind_;
  double scale_;
  double exponent_;
};

// One log row per outer iteration.
struct RunRecord {
  std::int64_t t = 0;
  double phi_hat_grad_norm = 0.0;
  double h_of_y = 0.0;
  double h1_value = 0.0;
  double h2_value = 0.0;
  std::optional<double> envelope_grad_norm;
  // Timing only; excluded from determinism comparisons and metrics tables.
  std::int64_t wall_clock_ms = 0;
};

}  // namespace cbso
