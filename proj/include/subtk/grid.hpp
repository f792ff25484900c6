#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace subtk {

/// Axis-aligned box with per-axis resolution and an interior mask.
struct GridSpec {
  Eigen::VectorXd lo, hi;
  std::vector<int> resolution;  // cells per axis, >= 3
  /// Interior predicate for node positions; empty selects the whole box.
  std::function<bool(const Eigen::VectorXd&)> mask;
};

/// Realized grid: unknowns live at the interior lattice points
/// lo_j + h_j (i+1), i = 0..resolution_j - 2, filtered by the mask. The
/// boundary and every masked-out node carry the zero Dirichlet extension.
class Grid {
 public:
  static std::shared_ptr<const Grid> create(const GridSpec& spec);

  int dim() const { return dim_; }
  const Eigen::VectorXd& h() const { return h_; }
  double cell_volume() const { return weight_; }
  int num_nodes() const { return n_interior_; }
  const std::vector<int>& points_per_axis() const { return npts_; }

  /// Interior id of the lattice point with the given per-axis indices, or -1.
  int node_id(const std::vector<int>& idx) const;
  /// Per-axis lattice indices of an interior node.
  const std::vector<int>& node_coords(int id) const { return coords_[id]; }
  Eigen::VectorXd node_position(int id) const;
  Eigen::VectorXd position(const std::vector<int>& idx) const;

  const GridSpec& spec() const { return spec_; }

 private:
  GridSpec spec_;
  int dim_ = 0;
  std::vector<int> npts_;  // interior lattice points per axis
  Eigen::VectorXd h_;
  double weight_ = 0;
  int n_interior_ = 0;
  std::vector<int> index_;                // flattened lattice -> id or -1
  std::vector<std::vector<int>> coords_;  // id -> per-axis indices

  int flat(const std::vector<int>& idx) const;
};

}  // namespace subtk
