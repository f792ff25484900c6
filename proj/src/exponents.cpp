#include "subtk/exponents.hpp"

#include <cmath>
#include <string>

namespace subtk {

void ProblemParams::validate() const {
  if (!(mu > 2.0))
    throw invariant_error("H3_MU", "mu must exceed 2 (superquadraticity), got " + std::to_string(mu));
  if (!(sigma >= 0.0 && sigma < mu - 1.0))
    throw invariant_error("H4_SIGMA",
                          "perturbation growth must satisfy 0 <= sigma < mu - 1, got sigma = " +
                              std::to_string(sigma) + ", mu = " + std::to_string(mu));
  if (!(beta >= 0.0)) throw invariant_error("H4_BETA", "beta must be >= 0");
  if (!(nu_tilde >= 3.0))
    throw invariant_error("NU_RANGE", "nu_tilde must be >= 3, got " + std::to_string(nu_tilde));
  if (!(p > 2.0 && p < 2.0 * nu_tilde / (nu_tilde - 2.0)))
    throw invariant_error("H2_P", "p must lie in (2, 2 nu/(nu-2)) = (2, " +
                                      std::to_string(2.0 * nu_tilde / (nu_tilde - 2.0)) +
                                      "), got " + std::to_string(p));
  if (!(n >= 1)) throw invariant_error("DIM", "ambient dimension must be >= 1");
  if (!(theta_exp >= n && theta_exp <= nu_tilde))
    throw invariant_error("L_THETA", "theta must satisfy n <= theta <= nu_tilde, got " +
                                         std::to_string(theta_exp));
  if (!(kappa >= 0.0)) throw invariant_error("L_KAPPA", "kappa must be >= 0");
  if (!(d >= 0 && d <= n - 1) && d != 0)
    throw invariant_error("L_D", "d must satisfy 0 <= d <= n-1");
  if (!(R0 > 0.0)) throw invariant_error("H3_R0", "R0 must be positive");
}

namespace {

double margin(const ProblemParams& q) {
  double m = q.mu - q.sigma - 1.0;
  if (!(m > 0.0))
    throw invariant_error("H4_SIGMA", "mu - sigma - 1 must be positive, got " + std::to_string(m));
  return m;
}

}  // namespace

bool condition_A1(const ProblemParams& q) {
  double m = margin(q);
  if (!(q.p > 2.0)) throw invariant_error("H2_P", "condition A1 needs p > 2");
  // denominators cleared (all positive), exact at rational data
  return (2.0 * q.p - q.nu_tilde * (q.p - 2.0)) * m > q.theta_exp * q.mu * (q.p - 2.0);
}

bool condition_A2(const ProblemParams& q) {
  double m = margin(q);
  if (!(q.p > 2.0)) throw invariant_error("H2_P", "condition A2 needs p > 2");
  return 2.0 * q.p * m > q.nu_tilde * q.mu * (q.p - 2.0);
}

double sup_p_A1(const ProblemParams& q) {
  double m = margin(q);
  double num = q.theta_exp * q.mu + (q.nu_tilde + 2.0) * m;
  double den = q.theta_exp * q.mu + (q.nu_tilde - 2.0) * m;
  return num / den + 1.0;
}

double sup_p_A2(const ProblemParams& q) {
  double m = margin(q);
  double num = q.mu * q.nu_tilde + 2.0 * m;
  double den = q.mu * q.nu_tilde - 2.0 * m;
  if (!(den > 0.0))
    throw invariant_error("A2_DEGENERATE", "mu nu - 2(mu - sigma - 1) must be positive");
  return num / den + 1.0;
}

double range_gap(const ProblemParams& q) {
  double m = margin(q);
  double d1 = q.theta_exp * q.mu + (q.nu_tilde - 2.0) * m;
  double d2 = q.mu * q.nu_tilde - 2.0 * m;
  if (d1 == 0.0 || d2 == 0.0)
    throw invariant_error("GAP_DEGENERATE", "range_gap denominator vanished (theta*mu + (nu-2)m = " +
                                                std::to_string(d1) + ", mu*nu - 2m = " +
                                                std::to_string(d2) + ")");
  return 4.0 * m * ((q.sigma + 1.0) * q.nu_tilde - q.theta_exp * q.mu) / (d1 * d2);
}

ClassicalRanges classical_ranges(int n, double mu) {
  if (n < 3) throw std::domain_error("classical_ranges: requires n >= 3");
  if (!(mu > 2.0)) throw std::domain_error("classical_ranges: requires mu > 2");
  ClassicalRanges r;
  double nn = n;
  r.bahri_berestycki = (5.0 * nn - 2.0 + std::sqrt(9.0 * nn * nn - 4.0 * nn + 4.0)) / (4.0 * (nn - 1.0));
  r.rabinowitz = (mu * nn + (mu - 1.0) * (nn + 2.0)) / (mu * nn + (mu - 1.0) * (nn - 2.0)) + 1.0;
  r.bahri_lions = (2.0 * nn - 2.0) / (nn - 2.0);
  return r;
}

double rabinowitz_fixed_point(int n) {
  if (n < 3) throw std::domain_error("rabinowitz_fixed_point: requires n >= 3");
  double nn = n;
  auto h = [nn](double p) {
    return (p * nn + (p - 1.0) * (nn + 2.0)) / (p * nn + (p - 1.0) * (nn - 2.0)) + 1.0;
  };
  auto f = [&](double p) { return h(p) - p; };
  double lo = 2.0 + 1e-12, hi = 2.0 * nn / (nn - 2.0) - 1e-12;
  double flo = f(lo), fhi = f(hi);
  if (!(flo > 0.0 && fhi < 0.0))
    throw std::runtime_error("rabinowitz_fixed_point: no root bracketed on (2, 2n/(n-2))");
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if (fm > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-14 * hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace subtk
