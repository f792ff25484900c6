#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "subtk/expr.hpp"

namespace subtk {

/// Smooth vector field X = sum_j comp[j] d/dx_j with coefficients in the
/// exact ring.
struct VectorField {
  int dim = 0;
  std::vector<CoefficientExpr> comp;

  static VectorField zero(int dim);
  /// d/dx_axis
  static VectorField axis(int dim, int axis);

  Eigen::VectorXd eval(const Eigen::VectorXd& x) const;
  bool is_zero() const;
  std::string str() const;

  /// One component string per axis (the config/text grammar form).
  static VectorField parse(const std::vector<std::string>& components);
};

/// Exact Lie bracket [X, Y]_j = sum_k (X_k d_k Y_j - Y_k d_k X_j).
/// Throws std::invalid_argument on dimension mismatch.
VectorField lie_bracket(const VectorField& x, const VectorField& y);

/// Left-normed iterated bracket layers. layers[j-1] holds every bracket of
/// length <= j together with its formation word; layer j-1 is a prefix of
/// layer j. By the Jacobi identity the left-normed brackets span the same
/// flag subspaces V_j as all iterated brackets, so ranks computed from the
/// layers are the flag dimensions.
struct BracketEntry {
  std::string word;  // e.g. "[1,[2,3]]"
  int length = 1;
  VectorField field;
};

struct BracketFlag {
  int dim = 0;
  int max_len = 0;
  // entries, sorted by length; entries_upto[j] = number of entries of
  // length <= j (entries_upto[0] = 0)
  std::vector<BracketEntry> entries;
  std::vector<int> entries_upto;

  /// Extends the layers in place up to max_len >= current.
  void extend(const std::vector<VectorField>& fields, int new_max_len);
};

BracketFlag build_bracket_flag(const std::vector<VectorField>& fields, int max_len);

inline constexpr double kDefaultRankTol = 1e-9;

/// Flag dimensions nu_1(x) <= ... <= nu_maxLen(x): numerical rank of the
/// matrix of all brackets of length <= j evaluated at x (singular values
/// above rank_tol times the largest).
std::vector<int> flag_dimensions(const BracketFlag& flag, const Eigen::VectorXd& x,
                                 int max_len, double rank_tol = kDefaultRankTol);
std::vector<int> flag_dimensions(const std::vector<VectorField>& fields,
                                 const Eigen::VectorXd& x, int max_len,
                                 double rank_tol = kDefaultRankTol);

/// Smallest j such that brackets of length <= j span R^n at every sample
/// point. Throws std::runtime_error naming the first offending point if the
/// span is not reached within max_len_cap.
int hormander_index(const std::vector<VectorField>& fields,
                    const std::vector<Eigen::VectorXd>& sample_points,
                    int max_len_cap = 6, double rank_tol = kDefaultRankTol);

/// Pointwise homogeneous dimension nu(x) = sum_{j<=Q} j (nu_j - nu_{j-1}).
int pointwise_dimension(const BracketFlag& flag, const Eigen::VectorXd& x, int q,
                        double rank_tol = kDefaultRankTol);
int pointwise_dimension(const std::vector<VectorField>& fields,
                        const Eigen::VectorXd& x, int q,
                        double rank_tol = kDefaultRankTol);

struct MetivierReport {
  int q = 0;                                    // Hormander index over the samples
  int nu_tilde = 0;                             // max of nu(x) over samples
  std::vector<std::pair<Eigen::VectorXd, int>> nu_of_x;
  bool metivier_condition_holds = false;        // nu(x) constant over samples
  std::vector<Eigen::VectorXd> witness_points;  // where nu(x) attains the max
  // The max over a closure can live on measure-zero sets; a sampled maximum
  // is only a certified lower bound.
  std::string note;
};

/// nu_tilde over samples()  union  extra_points. extra_points exist so
/// callers can inject suspected degeneracy loci that uniform sampling
/// misses.
MetivierReport generalized_metivier_index(const std::vector<VectorField>& fields,
                                          const std::vector<Eigen::VectorXd>& samples,
                                          const std::vector<Eigen::VectorXd>& extra_points,
                                          double rank_tol = kDefaultRankTol,
                                          int max_len_cap = 6);

/// 2 nu / (nu - 2); domain error for nu <= 2.
double critical_exponent(double nu_tilde);

}  // namespace subtk
