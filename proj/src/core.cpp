#include "cbso/core.hpp"

#include <algorithm>
#include <cmath>

#include "cbso/rng.hpp"

namespace cbso {

PenaltyCoefficients validate_penalty_coefficients(double sigma1, double sigma2,
                                                  double sigma3, double c0) {
  require(sigma1 > 0.0 && sigma2 > 0.0 && sigma3 > 0.0,
          ErrorCode::NonPositiveCoefficient,
          "penalty coefficients must be strictly positive");
  require(std::isfinite(sigma1) && std::isfinite(sigma2) &&
              std::isfinite(sigma3) && std::isfinite(c0),
          ErrorCode::NonPositiveCoefficient,
          "penalty coefficients must be finite");
  require(sigma2 != sigma3, ErrorCode::EqualSigmas,
          "sigma3 must differ from sigma2");
  PenaltyCoefficients k;
  k.sigma1 = sigma1;
  k.sigma2 = sigma2;
  k.sigma3 = sigma3;
  k.c0 = c0;
  k.sigma_order_warning = (sigma3 <= sigma2);
  return k;
}

ViolationBounds violation_bounds(double c_f, double c_g,
                                 const PenaltyCoefficients& k) {
  ViolationBounds b;
  b.hplus_z = 2.0 * c_g * k.sigma2;
  b.g_gap = 2.0 * c_f * k.sigma1 + 2.0 * c_g * (k.sigma2 / k.sigma3);
  b.hplus_y = 2.0 * c_f * k.sigma1 * k.sigma3 + 2.0 * c_g * k.sigma3;
  return b;
}

double epsilon_lambda(double c_f, double c_g, const PenaltyCoefficients& k) {
  const ViolationBounds b = violation_bounds(c_f, c_g, k);
  return std::max({b.hplus_z, b.g_gap, b.hplus_y});
}

double epsilon_prime(double eps_lambda, double sigma1, double sigma2,
                     double eps) {
  return (1.0 / sigma1) * eps_lambda * (1.0 + 1.0 / sigma2) + eps;
}

StepSchedule StepSchedule::outer_power(double c_a, double a) {
  require(c_a > 0.0, ErrorCode::BadExponent, "step scale must be positive");
  require(a > 0.0 && a < 1.0, ErrorCode::BadExponent,
          "outer power exponent must lie in (0,1)");
  return StepSchedule(ScheduleKind::OuterPower, c_a, a);
}

StepSchedule StepSchedule::inner_harmonic(double eta) {
  require(eta > 0.0, ErrorCode::BadExponent, "eta must be positive");
  return StepSchedule(ScheduleKind::InnerHarmonic, eta, 1.0);
}

StepSchedule StepSchedule::constant(double value) {
  // Zero is allowed: a frozen-iterate schedule is useful in tests.
  require(value >= 0.0, ErrorCode::BadExponent, "step must be nonnegative");
  return StepSchedule(ScheduleKind::Constant, value, 0.0);
}

double StepSchedule::operator()(std::int64_t index) const {
  switch (kind_) {
    case ScheduleKind::OuterPower:
      return scale_ / std::pow(1.0 + static_cast<double>(index), exponent_);
    case ScheduleKind::InnerHarmonic:
      return scale_ / static_cast<double>(index + 1);
    case ScheduleKind::Constant:
      return scale_;
  }
  return scale_;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_stream_id(std::string_view component_tag,
                               std::uint64_t i0, std::uint64_t i1,
                               std::uint64_t i2) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a offset basis
  for (unsigned char c : component_tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h = splitmix64(h ^ splitmix64(i0));
  h = splitmix64(h ^ splitmix64(i1 + 0x51ed2701));
  h = splitmix64(h ^ splitmix64(i2 + 0xa3c59ac2));
  return h;
}

Rng::Rng(RngStream stream) {
  state_ = splitmix64(splitmix64(stream.master_seed) ^ stream.stream_id);
  inc_ = splitmix64(stream.stream_id + 0x632be59bd9b4e019ULL) | 1ULL;
  // Decorrelate nearby stream ids.
  next_u64();
  next_u64();
}

std::uint64_t Rng::next_u64() {
  state_ = state_ * 6364136223846793005ULL + inc_;
  std::uint64_t x = state_;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

Eigen::VectorXd Rng::normal_vector(int dim, double sigma) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = sigma * normal();
  return v;
}

int Rng::categorical(const Eigen::Ref<const Eigen::VectorXd>& probs) {
  const double u = uniform();
  double acc = 0.0;
  const int n = static_cast<int>(probs.size());
  for (int i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return n - 1;
}

int Rng::truncated_geometric(double gamma, int max_value) {
  if (gamma <= 0.0) return 0;
  double u = uniform();
  while (u <= 0.0) u = uniform();
  const double t = std::floor(std::log(u) / std::log(gamma));
  if (t >= static_cast<double>(max_value)) return max_value;
  return static_cast<int>(t);
}

}  // namespace cbso
