#include "subtk/grid.hpp"

#include <deque>
#include <stdexcept>

namespace subtk {

int Grid::flat(const std::vector<int>& idx) const {
  int f = 0;
  for (int j = 0; j < dim_; ++j) {
    if (idx[j] < 0 || idx[j] >= npts_[j]) return -1;
    f = f * npts_[j] + idx[j];
  }
  return f;
}

int Grid::node_id(const std::vector<int>& idx) const {
  int f = flat(idx);
  return f < 0 ? -1 : index_[f];
}

Eigen::VectorXd Grid::position(const std::vector<int>& idx) const {
  Eigen::VectorXd x(dim_);
  for (int j = 0; j < dim_; ++j) x[j] = spec_.lo[j] + h_[j] * (idx[j] + 1);
  return x;
}

Eigen::VectorXd Grid::node_position(int id) const { return position(coords_[id]); }

std::shared_ptr<const Grid> Grid::create(const GridSpec& spec) {
  auto g = std::make_shared<Grid>();
  g->spec_ = spec;
  g->dim_ = static_cast<int>(spec.resolution.size());
  if (g->dim_ < 1) throw std::invalid_argument("grid: needs at least one axis");
  if (spec.lo.size() != g->dim_ || spec.hi.size() != g->dim_)
    throw std::invalid_argument("grid: box and resolution dimension mismatch");
  g->h_.resize(g->dim_);
  g->weight_ = 1.0;
  long total = 1;
  for (int j = 0; j < g->dim_; ++j) {
    if (spec.resolution[j] < 3)
      throw std::invalid_argument("grid: resolution must be >= 3 per axis");
    if (!(spec.hi[j] > spec.lo[j])) throw std::invalid_argument("grid: empty box");
    g->npts_.push_back(spec.resolution[j] - 1);
    g->h_[j] = (spec.hi[j] - spec.lo[j]) / spec.resolution[j];
    g->weight_ *= g->h_[j];
    total *= g->npts_[j];
  }

  g->index_.assign(total, -1);
  std::vector<int> idx(g->dim_, 0);
  for (long f = 0; f < total; ++f) {
    long rem = f;
    for (int j = g->dim_ - 1; j >= 0; --j) {
      idx[j] = static_cast<int>(rem % g->npts_[j]);
      rem /= g->npts_[j];
    }
    if (!spec.mask || spec.mask(g->position(idx))) {
      g->index_[f] = g->n_interior_++;
      g->coords_.push_back(idx);
    }
  }
  if (g->n_interior_ == 0) throw std::invalid_argument("grid: mask yields an empty interior");

  // connectivity sweep over face neighbors
  std::vector<char> seen(g->n_interior_, 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  int reached = 1;
  while (!queue.empty()) {
    int id = queue.front();
    queue.pop_front();
    std::vector<int> c = g->coords_[id];
    for (int j = 0; j < g->dim_; ++j)
      for (int s : {-1, 1}) {
        c[j] += s;
        int nb = g->node_id(c);
        c[j] -= s;
        if (nb >= 0 && !seen[nb]) {
          seen[nb] = 1;
          ++reached;
          queue.push_back(nb);
        }
      }
  }
  if (reached != g->n_interior_)
    throw std::invalid_argument("grid: masked interior is not connected (" +
                                std::to_string(reached) + " of " +
                                std::to_string(g->n_interior_) + " nodes reachable)");
  return g;
}

}  // namespace subtk
