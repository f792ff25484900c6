#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "subtk/operator.hpp"
#include "subtk/spectral.hpp"

namespace subtk {

/// Nonlinearity of the semilinear problem: f(x,u) = B |u|^{p-2} u (odd,
/// superlinear) plus the perturbation g(x,u) = beta |u|^sigma + alpha(x).
struct NonlinearitySpec {
  double B = 1.0;
  double p = 4.0;
  double beta = 0.0;
  double sigma = 0.0;
  Eigen::VectorXd alpha;  // node samples of alpha(x); empty means zero
  double R0 = 1.0;

  double mu() const { return p; }  // superquadraticity exponent of the power f
  bool has_g(int n_nodes) const {
    return beta != 0.0 || (alpha.size() == n_nodes && alpha.cwiseAbs().maxCoeff() > 0.0);
  }
  double alpha_at(int i) const { return alpha.size() > i ? alpha[i] : 0.0; }

  double f(double u) const;
  double F(double u) const;       // primitive of f
  double fprime(double u) const;
  double g(double a, double u) const;
  double G(double a, double u) const;  // primitive of g
  double gprime(double u) const;

  /// Validates the structural hypotheses; throws std::invalid_argument.
  void validate(int n_nodes) const;
};

/// Constants of the superquadraticity chain F + a2 >= a1 |u|^mu and
/// (1/mu)(u f + a3) >= F + a2, re-verified by sampling on [-10 R0, 10 R0].
struct GrowthConstants {
  double gamma0 = 0;
  double a1 = 0;
  double a2 = 0;
  double a3 = 0;
  double A0 = 1.0;  // bound constant of the critical-point estimate; fitted
  double R0 = 1.0;
};

GrowthConstants growth_constants(const NonlinearitySpec& spec);

/// Smooth cutoff: 1 on (-inf, 1], 0 on [2, inf), strictly decreasing in
/// between with derivative inside (-2, 0). Built from the exp(-c/t) smooth
/// step; the derivative bound is verified by dense sampling at construction.
class CutoffChi {
 public:
  CutoffChi();
  double operator()(double xi) const;
  double derivative(double xi) const;
  double sampled_min_derivative() const { return min_derivative_; }

 private:
  double min_derivative_ = 0;
};

double energy(const Eigen::VectorXd& u, const NonlinearitySpec& spec,
              const DiscreteOperator& op);
Eigen::VectorXd gradient(const Eigen::VectorXd& u, const NonlinearitySpec& spec,
                         const DiscreteOperator& op);
/// Full second variation A - W diag(f'(u) + g'(u)).
Eigen::SparseMatrix<double> hessian_energy(const Eigen::VectorXd& u,
                                           const NonlinearitySpec& spec,
                                           const DiscreteOperator& op);
/// Second variation of the unperturbed power functional:
/// A - (p-1) B diag(|u|^{p-2}) W.
DiscreteOperator hessian_power_functional(const Eigen::VectorXd& u,
                                          const NonlinearitySpec& spec,
                                          const DiscreteOperator& op);

struct ModifiedEnergy {
  double e1 = 0;
  double e = 0;
  double psi = 0;
  double theta = 0;
  double qval = 0;
  double integral_f_a2 = 0;  // integral of F + a2
  double integral_g = 0;     // integral of G
};
ModifiedEnergy modified_energy(const Eigen::VectorXd& u, const NonlinearitySpec& spec,
                               const GrowthConstants& c, const CutoffChi& chi,
                               const DiscreteOperator& op);

struct ModifiedGradient {
  Eigen::VectorXd grad;
  double t1 = 0;
  double t2 = 0;
  double psi = 0;
  double theta = 0;
};
/// (1 + T1) A u - (1 + T2) W f - (psi + T1) W g, with T1, T2 vanishing
/// wherever the cutoff is locally constant.
ModifiedGradient modified_gradient(const Eigen::VectorXd& u, const NonlinearitySpec& spec,
                                   const GrowthConstants& c, const CutoffChi& chi,
                                   const DiscreteOperator& op);

double symmetry_defect(const Eigen::VectorXd& u, const NonlinearitySpec& spec,
                       const GrowthConstants& c, const CutoffChi& chi,
                       const DiscreteOperator& op);

struct MorseIndices {
  int m = 0;       // eigenvalues < -tol
  int m_star = 0;  // eigenvalues <= +tol
};
MorseIndices morse_indices(const DiscreteOperator& hessian, double tol = -1.0);

struct CriticalPointRecord {
  Eigen::VectorXd u;
  double energy = 0;
  double modified_energy = 0;
  double residual = 0;
  int morse = 0;
  int morse_star = 0;
  double identity_gap = 0;  // virial chain re-evaluated; roundoff at critical points
  double ratio_bound = 0;   // integral(F + a2) / sqrt(E^2 + 1)
  int k_label = 0;          // index of the seeding eigenvector ray
  int sign_changes = -1;    // interior zero count (1d grids only)
};

struct SolveOptions {
  double tol = 1e-11;    // gradient tolerance, scaled by max(1, ||A u||)
  int max_descent = 300;
  int max_newton = 80;
  double sep = 1e-3;     // L2 distance under which two solutions coincide
  double deflate_strength = 1.0;
  std::uint64_t seed = 2024;
};

/// Numerical mountain-pass point: ray maximization from the seed direction,
/// energy descent projected back onto the ray-maximum set, then Newton
/// refinement of DE(u) = 0. `exclusions` deflates previously found
/// solutions. Throws std::runtime_error carrying the best residual when the
/// iteration cap is hit.
CriticalPointRecord mountain_pass_search(const NonlinearitySpec& spec,
                                         const DiscreteOperator& op,
                                         const Eigen::VectorXd& init,
                                         const SolveOptions& opts = {},
                                         const std::vector<Eigen::VectorXd>* exclusions = nullptr);

struct MultiSolutionResult {
  std::vector<CriticalPointRecord> records;  // sorted by energy
  bool complete = false;                     // K distinct points found
  std::vector<double> seed_radii;            // radius rule per level
};

/// Deflated searches seeded along the first K eigenvector rays, with the
/// radius rule R_k = lambda_k^{r/(2(p-2))}, r = nu (1 - p (nu-2)/(2 nu)).
MultiSolutionResult multi_solution_search(const NonlinearitySpec& spec,
                                          const DiscreteOperator& op,
                                          const Spectrum& spectrum, int k_count,
                                          const SolveOptions& opts, double nu_tilde);

struct IdentityDiagnostics {
  double identity_gap = 0;   // E - 1/2<DE,u> - virial integrals; zero up to roundoff
  double virial_gap = 0;     // |E - virial integrals| = |<DE,u>|/2
  double half_deu = 0;       // 1/2 <DE(u), u>
  double ratio_bound = 0;    // integral(F + a2) / sqrt(E^2 + 1)
};
IdentityDiagnostics critical_point_identities(const Eigen::VectorXd& u,
                                              const NonlinearitySpec& spec,
                                              const GrowthConstants& c,
                                              const DiscreteOperator& op);

/// A0 = 2 x the largest observed bound ratio over accepted critical points,
/// so the cutoff is identically 1 there.
double fit_A0(const std::vector<CriticalPointRecord>& records);

/// Interior sign changes of a node vector on a 1d grid.
int count_sign_changes(const Eigen::VectorXd& u);

}  // namespace subtk
