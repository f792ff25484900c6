#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "subtk/io.hpp"
#include "subtk/operator.hpp"

using namespace subtk;

namespace {

std::shared_ptr<const Grid> interval_grid(int res) {
  GridSpec s;
  s.lo = Eigen::VectorXd::Constant(1, 0.0);
  s.hi = Eigen::VectorXd::Constant(1, 1.0);
  s.resolution = {res};
  return Grid::create(s);
}

std::shared_ptr<const Grid> square_grid(int res, double lo = 0.0, double hi = 1.0) {
  GridSpec s;
  s.lo = Eigen::VectorXd::Constant(2, lo);
  s.hi = Eigen::VectorXd::Constant(2, hi);
  s.resolution = {res, res};
  return Grid::create(s);
}

std::vector<VectorField> gradient_fields(int dim) {
  std::vector<VectorField> fs;
  for (int j = 0; j < dim; ++j) fs.push_back(VectorField::axis(dim, j));
  return fs;
}

std::vector<VectorField> grushin_fields() {
  return {VectorField::parse({"1", "0"}), VectorField::parse({"0", "x1"})};
}

}  // namespace

TEST_CASE("grid: masks, connectivity, validation") {
  auto g = square_grid(8);
  CHECK(g->num_nodes() == 49);
  CHECK(g->cell_volume() == doctest::Approx(1.0 / 64));

  GridSpec disk;
  disk.lo = Eigen::VectorXd::Constant(2, -1.0);
  disk.hi = Eigen::VectorXd::Constant(2, 1.0);
  disk.resolution = {16, 16};
  disk.mask = [](const Eigen::VectorXd& x) { return x.squaredNorm() < 1.0; };
  auto gd = Grid::create(disk);
  CHECK(gd->num_nodes() < 15 * 15);
  CHECK(gd->num_nodes() > 120);

  GridSpec bad = disk;
  bad.mask = [](const Eigen::VectorXd& x) { return false; };
  CHECK_THROWS_AS(Grid::create(bad), std::invalid_argument);

  // two disjoint blobs are rejected
  GridSpec split = disk;
  split.mask = [](const Eigen::VectorXd& x) { return std::abs(x[0]) > 0.5; };
  CHECK_THROWS_AS(Grid::create(split), std::invalid_argument);

  GridSpec coarse = disk;
  coarse.resolution = {2, 2};
  CHECK_THROWS_AS(Grid::create(coarse), std::invalid_argument);
}

TEST_CASE("1d gradient: classical tridiagonal stencil") {
  const int res = 10;
  auto g = interval_grid(res);
  auto op = assemble_laplacian(gradient_fields(1), g);
  const double h = 1.0 / res;
  // A/w has entries (-1, 2, -1)/h^2
  Eigen::MatrixXd dense = Eigen::MatrixXd(op.A) / op.weight;
  for (int i = 0; i < g->num_nodes(); ++i) {
    CHECK(dense(i, i) == doctest::Approx(2.0 / (h * h)).epsilon(1e-14));
    if (i + 1 < g->num_nodes())
      CHECK(dense(i, i + 1) == doctest::Approx(-1.0 / (h * h)).epsilon(1e-14));
  }
}

TEST_CASE("2d gradient reduces to the 5-point stencil") {
  const int res = 8;
  auto g = square_grid(res);
  auto op = assemble_laplacian(gradient_fields(2), g);
  const double h = 1.0 / res;
  Eigen::MatrixXd dense = Eigen::MatrixXd(op.A) / op.weight;
  // interior row: 4/h^2 diagonal, -1/h^2 on the four face neighbors, nothing else
  std::vector<int> c{3, 3};
  int id = g->node_id(c);
  CHECK(dense(id, id) == doctest::Approx(4.0 / (h * h)));
  int count_nonzero = 0;
  for (int j = 0; j < dense.cols(); ++j)
    if (dense(id, j) != 0.0) ++count_nonzero;
  CHECK(count_nonzero == 5);
}

TEST_CASE("x1 d2 applied to u = x2 gives x1 on interior gaps") {
  auto g = square_grid(12, -1.0, 1.0);
  auto field = VectorField::parse({"0", "x1"});
  auto bop = discretize_field(field, g);
  Eigen::VectorXd u = sample_nodes(*g, [](const Eigen::VectorXd& x) { return x[1]; });
  Eigen::VectorXd bu = bop.B * u;
  for (int r = 0; r < bu.size(); ++r) {
    // rows touching the boundary see the zero extension instead of u = x2
    const auto& mid = bop.row_midpoint[r];
    if (std::abs(mid[1]) > 1.0 - 2.0 / 12) continue;
    CHECK(bu[r] == doctest::Approx(mid[0]).epsilon(1e-12));
  }
}

TEST_CASE("consistency order on a smooth function") {
  // sup error of B u against the symbolic field term at the gap midpoints;
  // midpoint-staggered differences are second order
  auto field = VectorField::parse({"exp(x2)", "0"});
  auto exact = [](const Eigen::VectorXd& x) {
    return std::exp(x[1]) * M_PI * std::cos(M_PI * x[0]) * std::sin(M_PI * x[1]);
  };
  std::vector<double> errs;
  for (int res : {16, 32, 64}) {
    auto g = square_grid(res);
    auto bop = discretize_field(field, g);
    Eigen::VectorXd u = sample_nodes(*g, [](const Eigen::VectorXd& x) {
      return std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]);
    });
    Eigen::VectorXd bu = bop.B * u;
    double e = 0.0;
    for (int r = 0; r < bu.size(); ++r)
      e = std::max(e, std::abs(bu[r] - exact(bop.row_midpoint[r])));
    errs.push_back(e);
  }
  CHECK(errs[0] / errs[1] > 3.4);  // ratio ~4 per halving
  CHECK(errs[1] / errs[2] > 3.4);
}

TEST_CASE("grushin stencil row") {
  const int res = 8;
  auto g = square_grid(res, -1.0, 1.0);
  auto op = assemble_laplacian(grushin_fields(), g);
  const double h = 2.0 / res;
  Eigen::MatrixXd dense = Eigen::MatrixXd(op.A) / op.weight;
  // hand expansion at an interior node x = (x1, x2): the x2-couplings carry
  // x1^2 evaluated at the node (the x2-gap midpoint shares its x1)
  std::vector<int> c{2, 3};
  int id = g->node_id(c);
  double x1 = g->node_position(id)[0];
  std::vector<int> up = c;
  ++up[1];
  CHECK(dense(id, g->node_id(up)) == doctest::Approx(-x1 * x1 / (h * h)).epsilon(1e-13));
  CHECK(dense(id, id) == doctest::Approx((2.0 + 2.0 * x1 * x1) / (h * h)).epsilon(1e-13));
}

TEST_CASE("assembled operator: symmetry, psd, quadratic form identity") {
  auto g = square_grid(14, -1.0, 1.0);
  auto fields = grushin_fields();
  auto op = assemble_laplacian(fields, g);

  Eigen::SparseMatrix<double> at = op.A.transpose();
  CHECK((Eigen::MatrixXd(op.A) - Eigen::MatrixXd(at)).cwiseAbs().maxCoeff() == 0.0);

  std::vector<DiscreteFieldOp> bops;
  for (const auto& f : fields) bops.push_back(discretize_field(f, g));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  double scale = Eigen::MatrixXd(op.A).cwiseAbs().maxCoeff();
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd u(g->num_nodes());
    for (int i = 0; i < u.size(); ++i) u[i] = nd(rng);
    double quad = u.dot(op.A * u);
    CHECK(quad >= -1e-12 * scale * u.squaredNorm());
    double parts = 0.0;
    for (const auto& b : bops) parts += (b.B * u).squaredNorm() * op.weight;
    CHECK(quad == doctest::Approx(parts).epsilon(1e-12));
  }
}

TEST_CASE("schrodinger assembly") {
  auto g = interval_grid(16);
  auto op = assemble_laplacian(gradient_fields(1), g);

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(g->num_nodes());
  auto same = assemble_schrodinger(op, zero);
  CHECK((Eigen::MatrixXd(same.A) - Eigen::MatrixXd(op.A)).cwiseAbs().maxCoeff() == 0.0);

  // constant shift moves every Rayleigh quotient by exactly c
  const double c = 3.25;
  auto shifted = assemble_schrodinger(op, Eigen::VectorXd::Constant(g->num_nodes(), c));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd u(g->num_nodes());
    for (int i = 0; i < u.size(); ++i) u[i] = nd(rng);
    double r0 = u.dot(op.A * u) / (op.weight * u.squaredNorm());
    double r1 = u.dot(shifted.A * u) / (op.weight * u.squaredNorm());
    CHECK(r1 - r0 == doctest::Approx(c).epsilon(1e-12));
  }

  Eigen::VectorXd badv = zero;
  badv[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(assemble_schrodinger(op, badv), std::invalid_argument);
}

TEST_CASE("field op rows stay within the sparsity bound") {
  auto g = square_grid(10, -1.0, 1.0);
  for (const auto& f : {VectorField::parse({"exp(x2)", "0"}), VectorField::parse({"0", "x1"})}) {
    auto bop = discretize_field(f, g);
    Eigen::SparseMatrix<double, Eigen::RowMajor> rm(bop.B);
    for (int r = 0; r < rm.rows(); ++r) {
      int nz = 0;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rm, r); it; ++it) ++nz;
      CHECK(nz <= 2 * g->dim() + 1);
    }
  }
}

TEST_CASE("norms") {
  auto g = interval_grid(64);
  auto op = assemble_laplacian(gradient_fields(1), g);

  Eigen::VectorXd ones = Eigen::VectorXd::Ones(g->num_nodes());
  auto n1 = norms(ones, op, 2.0);
  CHECK(n1.l2 == doctest::Approx(1.0).epsilon(2.0 / 64));
  CHECK(n1.hx1 >= n1.l2);

  Eigen::VectorXd s = sample_nodes(*g, [](const Eigen::VectorXd& x) {
    return std::sin(M_PI * x[0]);
  });
  auto n2 = norms(s, op, 2.0);
  CHECK(n2.l2 == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));

  // Lq of sin(pi x) on (0,1): (integral sin^q)^(1/q), q = 4 gives (3/8)^(1/4)
  auto n4 = norms(s, op, 4.0);
  CHECK(n4.lq == doctest::Approx(std::pow(3.0 / 8.0, 0.25)).epsilon(1e-4));

  CHECK_THROWS_AS(norms(s, op, 0.5), std::invalid_argument);
}

TEST_CASE("matrix market round-trip") {
  auto g = square_grid(6, -1.0, 1.0);
  auto op = assemble_laplacian(grushin_fields(), g);
  std::string path = "mm_test.mtx";
  write_matrix_market(path, op.A, true);
  auto back = read_matrix_market(path);
  CHECK((Eigen::MatrixXd(op.A) - Eigen::MatrixXd(back)).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("node vector file round-trip") {
  Eigen::VectorXd v(5);
  v << 1.0, -2.5, 3.25, 0.0, 1e-300;
  write_node_vector("vec_test.bin", v);
  auto back = read_node_vector("vec_test.bin");
  CHECK((v - back).cwiseAbs().maxCoeff() == 0.0);
  std::remove("vec_test.bin");
}
