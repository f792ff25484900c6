#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "subtk/grid.hpp"
#include "subtk/vector_field.hpp"

namespace subtk {

/// Staggered first-order discretization of one vector field. Each
/// coefficient term a_j d/dx_j contributes one row per lattice gap in
/// direction j adjacent to an interior node, with the coefficient evaluated
/// at the gap midpoint and zero Dirichlet extension across the boundary and
/// masked-out nodes. Rows carry at most two entries.
///
/// For fields with a single active axis (the gradient, Grushin-type
/// weights, all packaged examples) u^T (B^T W B) u reproduces the quadrature
/// of the squared field derivative exactly; for fields mixing several axes
/// the per-term rows realize the split form sum_j |a_j d_j u|^2.
struct DiscreteFieldOp {
  Eigen::SparseMatrix<double> B;  // staggered samples x interior nodes
  std::vector<int> row_axis;      // direction of each row's gap
  std::vector<Eigen::VectorXd> row_midpoint;
  std::shared_ptr<const Grid> grid;
};

/// A = sum_i B_i^T W B_i with W = (cell volume) I; symmetric positive
/// semidefinite by construction.
struct DiscreteOperator {
  Eigen::SparseMatrix<double> A;
  double weight = 0;  // quadrature weight per node
  std::shared_ptr<const Grid> grid;

  /// Mass-normalized application, (A/weight) u.
  Eigen::VectorXd apply_normalized(const Eigen::VectorXd& u) const { return A * u / weight; }
};

DiscreteFieldOp discretize_field(const VectorField& field, std::shared_ptr<const Grid> grid);

DiscreteOperator assemble_laplacian(const std::vector<VectorField>& fields,
                                    std::shared_ptr<const Grid> grid);

/// A + diag(V) W for a node-sampled potential; rejects non-finite entries.
DiscreteOperator assemble_schrodinger(const DiscreteOperator& op, const Eigen::VectorXd& v);

struct NodeNorms {
  double l2 = 0;
  double hx1 = 0;
  double lq = 0;
};

/// Quadrature-weighted L2, H1_X and Lq norms of a node vector.
NodeNorms norms(const Eigen::VectorXd& u, const DiscreteOperator& op, double q);

/// Samples a scalar function at every interior node.
Eigen::VectorXd sample_nodes(const Grid& grid,
                             const std::function<double(const Eigen::VectorXd&)>& f);

}  // namespace subtk
