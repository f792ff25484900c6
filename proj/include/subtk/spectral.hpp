#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "subtk/operator.hpp"

namespace subtk {

struct Spectrum {
  Eigen::VectorXd eigenvalues;   // ascending, of the pencil (A, W)
  Eigen::MatrixXd eigenvectors;  // W-orthonormal columns; first keep_vectors of them
  Eigen::VectorXd residuals;     // ||(A/w) v - lambda v|| / ||v|| per pair
  double weight = 0;
  int krylov_dim = 0;
};

struct EigenOptions {
  int k = 10;
  double tol = 1e-9;       // residual <= tol * max(1, lambda)
  int max_krylov = 0;      // 0 = automatic
  int block = 2;           // block width; raise for clustered spectra
  std::uint64_t seed = 12345;
  int keep_vectors = -1;   // -1 keeps all k
  double shift_hint = 0;   // optional guess for an upper bound on lambda_k
};

/// k smallest eigenpairs of the mass-scaled operator via shift-invert block
/// Lanczos with full reorthogonalization. The returned list is certified
/// against an LDL^T inertia count at a spectral gap near its top; throws
/// std::runtime_error carrying the best residuals on non-convergence.
Spectrum smallest_eigenpairs(const DiscreteOperator& op, const EigenOptions& opts = {});

/// Number of eigenvalues of the mass-scaled operator strictly below
/// `shift`, by the inertia of an LDL^T factorization (with tiny jitter
/// retries, then a dense fallback on small problems).
int count_eigenvalues_below(const Eigen::SparseMatrix<double>& s, double shift);

struct WeylFit {
  double a_hat = 0;  // power exponent
  double b_hat = 0;  // log exponent (power-log model only)
  double c_hat = 0;  // multiplicative constant
  double r2 = 0;
  int k_min = 0, k_max = 0;
  bool power_log = false;
};

enum class WeylModel { kPowerOnly, kPowerLog };

/// Least squares of ln lambda_k on (ln k, ln ln k) over the window. The two
/// regressors are nearly collinear on short windows, so the log coefficient
/// is diagnostic rather than a calibrated estimate.
WeylFit weyl_fit(const Eigen::VectorXd& eigenvalues, WeylModel model, int k_min, int k_max);

/// Default saturation guard: keep the bottom 70% of a computed list.
int default_fit_top(int computed);

struct PoincareCheck {
  bool positive = false;
  double lambda1 = 0;
  double min_rayleigh_margin = 0;  // min over random u of (R(u) - lambda1)
};

/// lambda1 > tol_pos plus Rayleigh-quotient spot checks on random vectors.
PoincareCheck verify_poincare(const Spectrum& spectrum, const DiscreteOperator& op,
                              double tol_pos = 1e-12, int n_samples = 10,
                              std::uint64_t seed = 99);

/// Number of negative Dirichlet eigenvalues of A + diag(v) W for v <= 0;
/// strictly below -tol_neg, tol_neg < 0 selecting the ||.||_1 * eps scaling.
int clr_count(const DiscreteOperator& laplacian, const Eigen::VectorXd& v,
              double tol_neg = -1.0);

struct ClrScaling {
  double slope = 0;
  double theoretical_cap = 0;  // nu_tilde / 2, supplied by the caller
  std::vector<double> t_values;
  std::vector<int> counts;
  int fit_lo = 0, fit_hi = 0;  // indices used for the slope
};

/// Counts N(t) for the potentials t * v_shape and fits the log-log slope
/// over the largest window with counts >= 2 and below the saturation
/// fraction of the matrix dimension.
ClrScaling clr_scaling_fit(const DiscreteOperator& laplacian, const Eigen::VectorXd& v_shape,
                           const std::vector<double>& t_values, double nu_tilde,
                           double sat_fraction = 0.1);

}  // namespace subtk
