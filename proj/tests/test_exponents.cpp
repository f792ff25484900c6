#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <random>

#include "subtk/exponents.hpp"

using namespace subtk;

namespace {

// exact rational arithmetic for the regression goldens
struct Rat {
  std::int64_t num = 0, den = 1;
  Rat(std::int64_t n, std::int64_t d) : num(n), den(d) { reduce(); }
  void reduce() {
    std::int64_t g = std::gcd(std::abs(num), std::abs(den));
    if (g) { num /= g; den /= g; }
    if (den < 0) { num = -num; den = -den; }
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

ProblemParams base_params() {
  ProblemParams q;
  q.p = 2.5;
  q.mu = 4.0;
  q.sigma = 0.0;
  q.beta = 0.0;
  q.nu_tilde = 3.0;
  q.theta_exp = 2.0;
  q.kappa = 1.0;
  q.n = 2;
  q.d = 1;
  q.R0 = 1.0;
  return q;
}

// bisection threshold of a boolean condition in p on (2, pmax)
template <typename Cond>
double bisect_threshold(ProblemParams q, Cond cond, double pmax) {
  double lo = 2.0 + 1e-13, hi = pmax - 1e-13;
  q.p = lo;
  REQUIRE(cond(q));
  q.p = hi;
  if (cond(q)) return hi;  // condition holds on the whole range
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    q.p = mid;
    if (cond(q))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("condition A1 examples") {
  auto q = base_params();
  q.p = 2.2;
  CHECK(condition_A1(q));  // 2*2.2/(2*0.2) - 1.5 = 9.5 > 4/3
  q.p = 3.5;
  CHECK_FALSE(condition_A1(q));  // 7/3 - 3/2 < 4/3
  q.p = sup_p_A1(q);
  CHECK_FALSE(condition_A1(q));  // strict at the endpoint
}

TEST_CASE("condition A2 examples") {
  auto q = base_params();
  q.p = 3.0;
  CHECK(condition_A2(q));
  q.p = 4.0;
  CHECK_FALSE(condition_A2(q));  // equality fails the strict inequality
  q.p = 5.0;
  CHECK_FALSE(condition_A2(q));

  q.sigma = 3.5;  // mu - sigma - 1 < 0
  CHECK_THROWS_AS(condition_A2(q), invariant_error);
}

TEST_CASE("sup_p endpoints: rational goldens") {
  auto q = base_params();
  CHECK(sup_p_A1(q) == doctest::Approx(Rat(34, 11).value()).epsilon(1e-15));
  CHECK(sup_p_A2(q) == doctest::Approx(4.0).epsilon(1e-15));

  // the family mu = p, sigma = 3p/4 - 1: endpoints are p-independent
  for (double p : {2.2, 2.4, 3.0}) {
    ProblemParams e = base_params();
    e.p = p;
    e.mu = p;
    e.sigma = 0.75 * p - 1.0;
    CHECK(sup_p_A1(e) == doctest::Approx(Rat(22, 9).value()).epsilon(1e-14));
    CHECK(sup_p_A2(e) == doctest::Approx(Rat(12, 5).value()).epsilon(1e-14));
    CHECK(range_gap(e) > 0.0);  // first range is the wider one here
  }

  // algebraic identities: sup_A1 = 2s/(s-2) with s = nu + theta*mu/m,
  // sup_A2 = 2t/(t-2) with t = nu*mu/m
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    ProblemParams e = base_params();
    e.nu_tilde = 3.0 + 3.0 * u01(rng);
    e.theta_exp = 2.0 + (e.nu_tilde - 2.0) * u01(rng);
    e.mu = 2.0 + 4.0 * u01(rng);
    e.sigma = (e.mu - 1.0) * 0.95 * u01(rng);
    double m = e.mu - e.sigma - 1.0;
    double s = e.nu_tilde + e.theta_exp * e.mu / m;
    double t = e.nu_tilde * e.mu / m;
    CHECK(sup_p_A1(e) == doctest::Approx(2 * s / (s - 2)).epsilon(1e-12));
    CHECK(sup_p_A2(e) == doctest::Approx(2 * t / (t - 2)).epsilon(1e-12));
  }

  // theta = nu collapse: reduces to the historical endpoint with mu - sigma - 1
  ProblemParams c = base_params();
  c.theta_exp = c.nu_tilde;
  c.sigma = 0.0;
  double lhs = sup_p_A1(c);
  double mu = c.mu, nu = c.nu_tilde;
  double rhs = (mu * nu + (mu - 1.0) * (nu + 2.0)) / (mu * nu + (mu - 1.0) * (nu - 2.0)) + 1.0;
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
}

TEST_CASE("thresholds match bisection over 1000 random draws") {
  std::mt19937_64 rng(20240815);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    ProblemParams q = base_params();
    q.nu_tilde = 3.0 + 4.0 * u01(rng);
    q.n = 2;
    q.theta_exp = q.n + (q.nu_tilde - q.n) * u01(rng);
    q.mu = 2.0 + 1e-3 + 5.0 * u01(rng);
    q.sigma = (q.mu - 1.0 - 1e-6) * u01(rng);
    double crit = 2.0 * q.nu_tilde / (q.nu_tilde - 2.0);

    double s1 = sup_p_A1(q);
    double s2 = sup_p_A2(q);
    // both endpoints sit strictly below the critical exponent
    CHECK(s1 < crit);
    CHECK(s2 < crit);

    double b1 = bisect_threshold(q, [](const ProblemParams& r) { return condition_A1(r); }, crit);
    double b2 = bisect_threshold(q, [](const ProblemParams& r) { return condition_A2(r); }, crit);
    CHECK(std::abs(b1 - s1) <= 1e-10 * s1);
    CHECK(std::abs(b2 - s2) <= 1e-10 * s2);

    // the gap formula has the sign of (sigma+1) nu - theta mu and matches
    // direct subtraction
    double g = range_gap(q);
    double direct = s1 - s2;
    CHECK(g == doctest::Approx(direct).epsilon(1e-12));
    double key = (q.sigma + 1.0) * q.nu_tilde - q.theta_exp * q.mu;
    if (key > 1e-12) CHECK(g > 0.0);
    if (key < -1e-12) CHECK(g < 0.0);

    // monotone in theta
    ProblemParams q2 = q;
    q2.theta_exp = std::min(q.nu_tilde, q.theta_exp + 0.3 * (q.nu_tilde - q.theta_exp) + 1e-9);
    CHECK(sup_p_A1(q2) <= s1 + 1e-14);
  }
}

TEST_CASE("range gap sign examples") {
  auto q = base_params();  // (sigma+1) nu - theta mu = 3 - 8 < 0
  CHECK(range_gap(q) < 0.0);
  CHECK(sup_p_A1(q) < sup_p_A2(q));

  ProblemParams e = base_params();
  e.mu = e.p = 2.4;
  e.sigma = 0.75 * 2.4 - 1.0;
  CHECK(range_gap(e) > 0.0);

  // theta = nu, sigma = 0, nu < nu*mu forces a negative numerator
  ProblemParams c = base_params();
  c.theta_exp = c.nu_tilde;
  c.sigma = 0.0;
  CHECK(range_gap(c) < 0.0);
}

TEST_CASE("classical ranges") {
  auto r3 = classical_ranges(3, 4.0);
  CHECK(r3.bahri_lions == doctest::Approx(4.0));
  CHECK(r3.bahri_berestycki == doctest::Approx((13.0 + std::sqrt(73.0)) / 8.0).epsilon(1e-15));
  CHECK_THROWS_AS(classical_ranges(2, 4.0), std::domain_error);

  // all three endpoints approach 2 for large n
  auto rbig = classical_ranges(4000, 3.0);
  CHECK(rbig.bahri_berestycki == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(rbig.rabinowitz == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(rbig.bahri_lions == doctest::Approx(2.0).epsilon(1e-2));
}

TEST_CASE("rabinowitz fixed point equals the closed form") {
  // n = 3: fixed point of 4p^2 - 13p + 6 = 0 on (2, 6)
  CHECK(rabinowitz_fixed_point(3) == doctest::Approx((13.0 + std::sqrt(73.0)) / 8.0).epsilon(1e-10));
  CHECK(rabinowitz_fixed_point(4) ==
        doctest::Approx((18.0 + std::sqrt(132.0)) / 12.0).epsilon(1e-10));
  for (int n = 3; n <= 10; ++n) {
    double fp = rabinowitz_fixed_point(n);
    double closed = classical_ranges(n, 3.0).bahri_berestycki;
    CHECK(std::abs(fp - closed) <= 1e-8);
    CHECK(closed < (2.0 * n - 2.0) / (n - 2.0));
  }
}

TEST_CASE("params validation") {
  auto q = base_params();
  CHECK_NOTHROW(q.validate());
  q.sigma = 3.2;
  CHECK_THROWS_AS(q.validate(), invariant_error);
  q = base_params();
  q.p = 7.0;  // above the critical exponent for nu = 3
  CHECK_THROWS_AS(q.validate(), invariant_error);
  q = base_params();
  q.theta_exp = 1.0;  // below n
  CHECK_THROWS_AS(q.validate(), invariant_error);
}
