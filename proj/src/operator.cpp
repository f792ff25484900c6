#include "subtk/operator.hpp"

#include <cmath>
#include <stdexcept>

namespace subtk {

DiscreteFieldOp discretize_field(const VectorField& field, std::shared_ptr<const Grid> grid) {
  if (field.dim != grid->dim())
    throw std::invalid_argument("discretize_field: field/grid dimension mismatch");
  const int dim = grid->dim();
  const auto& npts = grid->points_per_axis();

  DiscreteFieldOp op;
  op.grid = grid;
  std::vector<Eigen::Triplet<double>> trips;
  int nrows = 0;

  for (int axis = 0; axis < dim; ++axis) {
    if (field.comp[axis].is_zero()) continue;
    const double h = grid->h()[axis];
    // iterate transverse lattice x gaps along this axis
    std::vector<int> idx(dim, 0);
    const int gaps = npts[axis] + 1;
    // odometer over all axes with the active axis replaced by the gap index
    std::vector<int> shape(npts.begin(), npts.end());
    shape[axis] = gaps;
    long total = 1;
    for (int s : shape) total *= s;
    for (long f = 0; f < total; ++f) {
      long rem = f;
      for (int j = dim - 1; j >= 0; --j) {
        idx[j] = static_cast<int>(rem % shape[j]);
        rem /= shape[j];
      }
      const int g = idx[axis];
      std::vector<int> a = idx, b = idx;
      a[axis] = g - 1;
      b[axis] = g;
      const int ia = grid->node_id(a);
      const int ib = (g < npts[axis]) ? grid->node_id(b) : -1;
      if (ia < 0 && ib < 0) continue;

      Eigen::VectorXd mid(dim);
      for (int j = 0; j < dim; ++j)
        mid[j] = grid->spec().lo[j] + grid->h()[j] * (idx[j] + 1);
      mid[axis] = grid->spec().lo[axis] + h * (g + 0.5);
      const double c = field.comp[axis].eval(mid) / h;
      if (c == 0.0) continue;

      if (ia >= 0) trips.emplace_back(nrows, ia, -c);
      if (ib >= 0) trips.emplace_back(nrows, ib, c);
      op.row_axis.push_back(axis);
      op.row_midpoint.push_back(mid);
      ++nrows;
    }
  }
  if (grid->num_nodes() == 0) throw std::invalid_argument("discretize_field: empty interior");
  op.B.resize(nrows, grid->num_nodes());
  op.B.setFromTriplets(trips.begin(), trips.end());
  return op;
}

DiscreteOperator assemble_laplacian(const std::vector<VectorField>& fields,
                                    std::shared_ptr<const Grid> grid) {
  DiscreteOperator op;
  op.grid = grid;
  op.weight = grid->cell_volume();
  Eigen::SparseMatrix<double> acc(grid->num_nodes(), grid->num_nodes());
  for (const auto& f : fields) {
    auto b = discretize_field(f, grid);
    Eigen::SparseMatrix<double> bt = b.B.transpose();
    acc += bt * b.B;
  }
  acc *= op.weight;
  // enforce exact symmetry of the assembled form
  Eigen::SparseMatrix<double> at = acc.transpose();
  op.A = 0.5 * (acc + at);
  op.A.makeCompressed();
  return op;
}

DiscreteOperator assemble_schrodinger(const DiscreteOperator& base, const Eigen::VectorXd& v) {
  if (v.size() != base.A.rows())
    throw std::invalid_argument("assemble_schrodinger: potential size mismatch");
  if (!v.allFinite())
    throw std::invalid_argument("assemble_schrodinger: potential has non-finite entries");
  DiscreteOperator op = base;
  Eigen::SparseMatrix<double> d(v.size(), v.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(v.size());
  for (int i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) trips.emplace_back(i, i, v[i] * base.weight);
  d.setFromTriplets(trips.begin(), trips.end());
  op.A = base.A + d;
  op.A.makeCompressed();
  return op;
}

NodeNorms norms(const Eigen::VectorXd& u, const DiscreteOperator& op, double q) {
  if (u.size() != op.A.rows()) throw std::invalid_argument("norms: size mismatch");
  if (q < 1.0) throw std::invalid_argument("norms: Lq norm needs q >= 1");
  NodeNorms r;
  const double w = op.weight;
  r.l2 = std::sqrt(w * u.squaredNorm());
  r.hx1 = std::sqrt(w * u.squaredNorm() + u.dot(op.A * u));
  double s = 0.0;
  for (int i = 0; i < u.size(); ++i) s += std::pow(std::abs(u[i]), q);
  r.lq = std::pow(w * s, 1.0 / q);
  return r;
}

Eigen::VectorXd sample_nodes(const Grid& grid,
                             const std::function<double(const Eigen::VectorXd&)>& f) {
  Eigen::VectorXd v(grid.num_nodes());
  for (int i = 0; i < grid.num_nodes(); ++i) v[i] = f(grid.node_position(i));
  return v;
}

}  // namespace subtk
