#pragma once

#include <stdexcept>

namespace subtk {

/// Parameters of the semilinear problem and of the eigenvalue lower bound
/// lambda_k >= C k^{2/theta} (ln k)^{-kappa}. kappa and d ride along for the
/// spectral fitting; the exponent formulas ignore them.
struct ProblemParams {
  double p = 0;         // growth of f, 2 < p < 2 nu/(nu-2)
  double mu = 0;        // superquadraticity exponent, mu > 2
  double sigma = 0;     // perturbation growth, 0 <= sigma < mu - 1
  double beta = 0;      // perturbation amplitude, >= 0
  double nu_tilde = 0;  // non-isotropic dimension, >= 3
  double theta_exp = 0; // effective Weyl dimension theta, n <= theta <= nu_tilde
  double kappa = 0;     // log correction in the eigenvalue bound, >= 0
  int n = 0;            // ambient dimension
  int d = 0;            // log-correction integer, 0 <= d <= n-1
  double R0 = 1.0;      // superquadraticity threshold

  /// Throws std::invalid_argument naming the violated hypothesis.
  void validate() const;
};

class invariant_error : public std::invalid_argument {
 public:
  invariant_error(const std::string& code, const std::string& what)
      : std::invalid_argument(what), code_(code) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// 2p/(theta (p-2)) - nu/theta > mu/(mu - sigma - 1), evaluated exactly.
bool condition_A1(const ProblemParams& params);

/// 2p/(nu (p-2)) > mu/(mu - sigma - 1).
bool condition_A2(const ProblemParams& params);

/// Upper endpoint of the admissible p-range equivalent to condition A1:
///   (theta mu + (nu+2) m) / (theta mu + (nu-2) m) + 1,    m = mu - sigma - 1,
/// which equals 2s/(s-2) with s = nu + theta mu / m.
double sup_p_A1(const ProblemParams& params);

/// Upper endpoint equivalent to condition A2:
///   (mu nu + 2m) / (mu nu - 2m) + 1  =  2t/(t-2),   t = nu mu / m.
double sup_p_A2(const ProblemParams& params);

/// Signed difference sup_p_A1 - sup_p_A2 via the closed form
///   4 m ((sigma+1) nu - theta mu) / ((theta mu + (nu-2) m)(mu nu - 2m)).
/// Its sign is the sign of (sigma+1) nu - theta mu.
double range_gap(const ProblemParams& params);

struct ClassicalRanges {
  double bahri_berestycki = 0;  // (5n-2+sqrt(9n^2-4n+4))/(4(n-1))
  double rabinowitz = 0;        // (mu n+(mu-1)(n+2))/(mu n+(mu-1)(n-2)) + 1
  double bahri_lions = 0;       // (2n-2)/(n-2)
};

ClassicalRanges classical_ranges(int n, double mu);

/// Solves p = h(p) for the rabinowitz endpoint h with mu = p, by bisection
/// on (2, 2n/(n-2)). The fixed point coincides with the bahri_berestycki
/// endpoint.
double rabinowitz_fixed_point(int n);

}  // namespace subtk
