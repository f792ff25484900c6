#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace subtk {

/// One term c * x^pow * exp(lin . x) of a coefficient expression.
struct ExprTerm {
  double coeff = 0.0;
  std::vector<unsigned> pow;  // monomial exponents, one per axis
  std::vector<double> lin;    // exponential rates, one per axis
};

/// Exact coefficient ring: finite sums c * x^alpha * exp(lambda . x).
///
/// The ring is closed under addition, multiplication and partial
/// differentiation, which is all the bracket calculus needs. Terms are
/// kept canonical (sorted by (pow, lin), merged, zero coefficients
/// dropped), so structural cancellations like [X, X] come out exactly
/// zero.
class CoefficientExpr {
 public:
  CoefficientExpr() = default;
  explicit CoefficientExpr(int dim) : dim_(dim) {}

  static CoefficientExpr zero(int dim) { return CoefficientExpr(dim); }
  static CoefficientExpr constant(int dim, double c);
  /// x_axis (0-based axis)
  static CoefficientExpr coordinate(int dim, int axis);

  int dim() const { return dim_; }
  const std::vector<ExprTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  CoefficientExpr operator+(const CoefficientExpr& o) const;
  CoefficientExpr operator-(const CoefficientExpr& o) const;
  CoefficientExpr operator*(const CoefficientExpr& o) const;
  CoefficientExpr scaled(double s) const;

  /// d/dx_axis, exact in the ring.
  CoefficientExpr derivative(int axis) const;

  double eval(const Eigen::VectorXd& x) const;

  /// Canonical text form; parse(str()) reproduces the expression exactly.
  std::string str() const;

  /// Parses the grammar documented in the README (sums of terms
  /// `c * x1^a1 * ... * exp(l1*x1+...+ln*xn)`). Throws std::invalid_argument
  /// with a position-annotated message on malformed input.
  static CoefficientExpr parse(const std::string& text, int dim);

  /// Appends a raw term and restores canonical form.
  void add_term(ExprTerm t);

 private:
  void normalize();

  int dim_ = 0;
  std::vector<ExprTerm> terms_;
};

}  // namespace subtk
