#include <doctest.h>

#include "cbso/core.hpp"
#include "cbso/rng.hpp"

using namespace cbso;

TEST_SUITE("core") {

TEST_CASE("penalty coefficient validation") {
  const auto k = validate_penalty_coefficients(0.1, 0.01, 1.0, 0.0);
  CHECK(k.sigma1 == 0.1);
  CHECK_FALSE(k.sigma_order_warning);

  CHECK_THROWS_AS(validate_penalty_coefficients(0.1, 0.5, 0.5, 0.0), Error);
  try {
    validate_penalty_coefficients(0.1, 0.5, 0.5, 0.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EqualSigmas);
  }

  const auto warned = validate_penalty_coefficients(0.1, 1.0, 0.01, 0.0);
  CHECK(warned.sigma_order_warning);

  try {
    validate_penalty_coefficients(-1.0, 0.5, 1.0, 0.0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveCoefficient);
  }
}

TEST_CASE("epsilon_lambda three-term max") {
  const auto k1 = validate_penalty_coefficients(0.1, 0.01, 1.0, 0.0);
  CHECK(epsilon_lambda(1.0, 1.0, k1) == doctest::Approx(2.2).epsilon(1e-12));

  CHECK(epsilon_lambda(0.0, 0.0, k1) == 0.0);

  const auto k2 = validate_penalty_coefficients(0.01, 0.001, 0.01, 0.0);
  CHECK(epsilon_lambda(1.0, 1.0, k2) == doctest::Approx(0.22).epsilon(1e-12));

  const auto b = violation_bounds(1.0, 1.0, k1);
  CHECK(b.hplus_z == doctest::Approx(0.02));
  CHECK(b.g_gap == doctest::Approx(0.22));
  CHECK(b.hplus_y == doctest::Approx(2.2));
}

TEST_CASE("epsilon_prime formula") {
  CHECK(epsilon_prime(0.0, 1.0, 1.0, 0.0) == 0.0);
  CHECK(epsilon_prime(2.2, 0.1, 0.01, 0.05) ==
        doctest::Approx(2222.05).epsilon(1e-12));
  CHECK(epsilon_prime(1.0, 1.0, 1.0, 0.0) == doctest::Approx(2.0));
}

TEST_CASE("epsilon_lambda monotonicity") {
  Rng rng(make_stream(11, "test/monotone"));
  for (int i = 0; i < 200; ++i) {
    const double cf = rng.uniform(0.0, 5.0);
    const double cg = rng.uniform(0.0, 5.0);
    double s1 = rng.uniform(0.01, 2.0);
    double s2 = rng.uniform(0.01, 2.0);
    double s3 = rng.uniform(0.01, 2.0);
    if (s2 == s3) s3 += 0.1;
    const auto k = validate_penalty_coefficients(s1, s2, s3, 0.0);
    const double base = epsilon_lambda(cf, cg, k);
    const double bump = rng.uniform(0.0, 1.0);
    CHECK(epsilon_lambda(cf + bump, cg, k) >= base);
    CHECK(epsilon_lambda(cf, cg + bump, k) >= base);
    auto bumped = [&](double a, double b, double c) {
      return epsilon_lambda(cf, cg,
                            validate_penalty_coefficients(a, b, c, 0.0));
    };
    CHECK(bumped(s1 + bump, s2, s3) >= base - 1e-15);
    if (s2 + bump != s3) CHECK(bumped(s1, s2 + bump, s3) >= base - 1e-15);
  }

  // The bound is NOT monotone in sigma3: the middle term decreases in
  // sigma3 and can dominate. Pin one counterexample so the behavior is
  // documented rather than assumed.
  const auto lo = validate_penalty_coefficients(10.0, 1.0, 0.1, 0.0);
  const auto hi = validate_penalty_coefficients(10.0, 1.0, 0.2, 0.0);
  CHECK(epsilon_lambda(1.0, 1.0, lo) == doctest::Approx(40.0));
  CHECK(epsilon_lambda(1.0, 1.0, hi) == doctest::Approx(30.0));
  CHECK(epsilon_lambda(1.0, 1.0, hi) < epsilon_lambda(1.0, 1.0, lo));
}

TEST_CASE("step schedules") {
  const auto outer = StepSchedule::outer_power(0.1, 0.5);
  CHECK(outer(0) == doctest::Approx(0.1));
  CHECK(outer(3) == doctest::Approx(0.05));

  const auto inner = StepSchedule::inner_harmonic(2.0);
  CHECK(inner(0) == 2.0);
  CHECK(inner(1) == 1.0);
  CHECK(inner(3) == 0.5);

  try {
    StepSchedule::outer_power(0.1, 1.5);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadExponent);
  }

  // Strictly decreasing toward zero.
  for (const auto& sched : {outer, inner}) {
    double prev = sched(0);
    for (int t = 1; t <= 2000; ++t) {
      const double cur = sched(t);
      CHECK(cur < prev);
      prev = cur;
    }
    CHECK(sched(1000000) < 1e-2);
  }
}

TEST_CASE("rng streams are deterministic and distinct") {
  const RngStream s1 = make_stream(42, "component", 3, 7);
  Rng a(s1), b(s1);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c(make_stream(42, "component", 3, 8));
  int same = 0;
  Rng a2(s1);
  for (int i = 0; i < 100; ++i)
    if (a2.next_u64() == c.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("rng uniform and normal have sane moments") {
  Rng rng(make_stream(7, "moments"));
  const int n = 200000;
  double su = 0, suu = 0, sn = 0, snn = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const double z = rng.normal();
    su += u;
    suu += u * u;
    sn += z;
    snn += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(suu / n - 0.25 == doctest::Approx(1.0 / 12).epsilon(0.05));
  CHECK(sn / n == doctest::Approx(0.0).epsilon(1.0).scale(0.01));
  CHECK(snn / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("categorical matches probabilities") {
  Rng rng(make_stream(9, "cat"));
  Eigen::VectorXd p(3);
  p << 0.2, 0.5, 0.3;
  Eigen::Vector3d counts = Eigen::Vector3d::Zero();
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[rng.categorical(p)] += 1.0;
  for (int j = 0; j < 3; ++j)
    CHECK(counts[j] / n == doctest::Approx(p[j]).epsilon(0.03));
}

TEST_CASE("truncated geometric matches the capped law") {
  Rng rng(make_stream(10, "geom"));
  const double gamma = 0.7;
  const int cap = 6;
  std::vector<int> counts(cap + 1, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[rng.truncated_geometric(gamma, cap)];
  for (int t = 0; t < cap; ++t) {
    const double expect = (1.0 - gamma) * std::pow(gamma, t);
    CHECK(static_cast<double>(counts[t]) / n ==
          doctest::Approx(expect).epsilon(0.05));
  }
  const double tail = std::pow(gamma, cap);
  CHECK(static_cast<double>(counts[cap]) / n ==
        doctest::Approx(tail).epsilon(0.05));
}

}  // TEST_SUITE
