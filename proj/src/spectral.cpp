#include "subtk/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace subtk {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

SpMat mass_scaled(const DiscreteOperator& op) {
  SpMat s = op.A;
  s *= 1.0 / op.weight;
  return s;
}

double max_abs_entry(const SpMat& s) {
  double scale = 1.0;
  for (int k = 0; k < s.outerSize(); ++k)
    for (SpMat::InnerIterator it(s, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  return scale;
}

// Orthonormalizes the columns of w against the first m columns of basis
// (two passes), then among themselves; deficient directions are replaced by
// fresh random vectors so the recurrence survives invariant subspaces.
void ortho_block(const Eigen::MatrixXd& basis, int m, Eigen::MatrixXd& w,
                 std::mt19937_64& rng) {
  const double drop_tol = 1e-10;
  std::normal_distribution<double> nd;
  for (int pass = 0; pass < 2; ++pass)
    if (m > 0) w.noalias() -= basis.leftCols(m) * (basis.leftCols(m).transpose() * w);
  for (int c = 0; c < w.cols(); ++c) {
    for (int tries = 0; tries < 3; ++tries) {
      for (int p = 0; p < c; ++p) w.col(c) -= w.col(p).dot(w.col(c)) * w.col(p);
      double nrm = w.col(c).norm();
      if (nrm > drop_tol) {
        w.col(c) /= nrm;
        break;
      }
      for (int i = 0; i < w.rows(); ++i) w(i, c) = nd(rng);
      if (m > 0)
        for (int pass = 0; pass < 2; ++pass)
          w.col(c) -= basis.leftCols(m) * (basis.leftCols(m).transpose() * w.col(c));
    }
  }
}

struct ShiftedFactor {
  Eigen::SimplicialLDLT<SpMat> ldlt;
  double sigma = 0;
  int negatives = 0;  // eigenvalues of s strictly below sigma
};

// Factors s - sigma I, with tiny jitter retries around zero pivots.
std::unique_ptr<ShiftedFactor> factor_shifted(const SpMat& s, double sigma, double scale) {
  const int n = static_cast<int>(s.rows());
  SpMat id(n, n);
  id.setIdentity();
  for (int attempt = 0; attempt < 4; ++attempt) {
    double jitter = attempt == 0 ? 0.0 : scale * 1e-13 * attempt;
    auto f = std::make_unique<ShiftedFactor>();
    f->sigma = sigma + jitter;
    SpMat m = s - f->sigma * id;
    f->ldlt.compute(m);
    if (f->ldlt.info() != Eigen::Success) continue;
    const auto& d = f->ldlt.vectorD();
    bool clean = true;
    for (int i = 0; i < d.size(); ++i) {
      if (!std::isfinite(d[i]) || d[i] == 0.0) {
        clean = false;
        break;
      }
      if (d[i] < 0.0) ++f->negatives;
    }
    if (clean) return f;
  }
  return nullptr;
}

struct SlicePairs {
  std::vector<double> values;      // ascending within the slice window
  std::vector<double> residuals;   // recurrence-based estimates
  Eigen::MatrixXd vectors;         // columns as requested (may be 0 cols)
  int krylov = 0;
};

// Block Lanczos on (s - sigma)^{-1}; returns every eigenvalue of s inside
// [lo, hi), of which there are `expected` by the boundary inertia counts.
SlicePairs slice_eigenpairs(const SpMat& s, const ShiftedFactor& f, double lo, double hi,
                            int expected, const EigenOptions& opts, bool want_vectors,
                            std::mt19937_64& rng) {
  const int n = static_cast<int>(s.rows());
  const int b = std::max(1, opts.block);
  int m_max = std::min(n, std::max(4 * expected + 16 * b + 64, 128));
  m_max = ((m_max + b - 1) / b) * b;

  Eigen::MatrixXd basis(n, m_max);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m_max, m_max);
  std::normal_distribution<double> nd;
  {
    Eigen::MatrixXd w(n, b);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < b; ++c) w(i, c) = nd(rng);
    ortho_block(basis, 0, w, rng);
    basis.leftCols(b) = w;
  }

  int m = b;
  Eigen::MatrixXd last_beta = Eigen::MatrixXd::Zero(b, b);
  std::vector<int> chosen;
  Eigen::VectorXd theta;
  Eigen::MatrixXd small;
  Eigen::VectorXd eta;
  double worst = std::numeric_limits<double>::infinity();

  while (true) {
    const int step = std::max(4 * b, ((expected / 2 + b - 1) / b) * b);
    const int target = std::min(m_max, m + step);
    while (m < target) {
      Eigen::MatrixXd vj = basis.middleCols(m - b, b);
      Eigen::MatrixXd opv = f.ldlt.solve(vj);
      Eigen::MatrixXd alpha = vj.transpose() * opv;
      t.block(m - b, m - b, b, b) = 0.5 * (alpha + alpha.transpose());
      Eigen::MatrixXd w = opv;
      ortho_block(basis, m, w, rng);
      last_beta.noalias() = w.transpose() * opv;
      basis.middleCols(m, b) = w;
      t.block(m, m - b, b, b) = last_beta;
      t.block(m - b, m, b, b) = last_beta.transpose();
      m += b;
    }

    const int mp = m - b;  // completed part of the recurrence
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t.topLeftCorner(mp, mp));
    if (es.info() != Eigen::Success)
      throw std::runtime_error("slice_eigenpairs: projected eigensolve failed");

    // Ritz pairs landing inside the window, with recurrence residuals
    theta = es.eigenvalues();
    chosen.clear();
    std::vector<std::pair<double, int>> inside;
    for (int i = 0; i < mp; ++i) {
      const double th = theta[i];
      if (th == 0.0) continue;
      const double lambda = f.sigma + 1.0 / th;
      if (lambda >= lo && lambda < hi) inside.emplace_back(lambda, i);
    }
    std::sort(inside.begin(), inside.end());
    bool ok = static_cast<int>(inside.size()) >= expected;
    if (ok) {
      eta.resize(expected);
      worst = 0.0;
      for (int q = 0; q < expected; ++q) {
        const int i = inside[q].second;
        Eigen::VectorXd bottom = es.eigenvectors().col(i).tail(b);
        // relative accuracy of 1/(lambda - sigma)
        eta[q] = (last_beta * bottom).norm() / std::max(std::abs(theta[i]), 1e-300);
        worst = std::max(worst, eta[q]);
        if (!(eta[q] <= opts.tol)) ok = false;
      }
    }
    if (ok) {
      small.resize(mp, expected);
      SlicePairs out;
      out.values.resize(expected);
      out.residuals.resize(expected);
      for (int q = 0; q < expected; ++q) {
        out.values[q] = inside[q].first;
        out.residuals[q] = eta[q] * std::abs(inside[q].first - f.sigma);
        small.col(q) = es.eigenvectors().col(inside[q].second);
      }
      if (want_vectors) out.vectors.noalias() = basis.leftCols(mp) * small;
      out.krylov = m;
      return out;
    }
    if (m >= m_max) {
      std::ostringstream msg;
      msg << "slice_eigenpairs: not converged (window [" << lo << ", " << hi << "), expected "
          << expected << ", found " << inside.size() << " candidates, krylov " << m
          << ", worst residual " << worst << ")";
      throw std::runtime_error(msg.str());
    }
  }
}

}  // namespace

int count_eigenvalues_below(const SpMat& s, double shift) {
  auto f = factor_shifted(s, shift, max_abs_entry(s));
  if (f) return f->negatives;
  const int n = static_cast<int>(s.rows());
  if (n <= 4096) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(s),
                                                      Eigen::EigenvaluesOnly);
    return static_cast<int>((es.eigenvalues().array() < shift).count());
  }
  throw std::runtime_error("count_eigenvalues_below: factorization failed repeatedly");
}

Spectrum smallest_eigenpairs(const DiscreteOperator& op, const EigenOptions& opts) {
  const int n = static_cast<int>(op.A.rows());
  const int k = opts.k;
  if (k < 1 || k >= n)
    throw std::invalid_argument("smallest_eigenpairs: need 1 <= k < dimension");

  const SpMat s = mass_scaled(op);
  const double scale = max_abs_entry(s);
  std::mt19937_64 rng(opts.seed);
  const int keep = opts.keep_vectors < 0 ? k : std::min(opts.keep_vectors, k);

  // Locate an upper shift holding at least k eigenvalues, by inertia.
  double hi = opts.shift_hint > 0 ? opts.shift_hint : 1.0;
  auto fhi = factor_shifted(s, hi, scale);
  if (!fhi) throw std::runtime_error("smallest_eigenpairs: factorization failed");
  int probes = 0;
  std::vector<std::pair<double, int>> count_samples;  // (shift, count)
  count_samples.emplace_back(hi, fhi->negatives);
  while (fhi->negatives < k) {
    hi *= 8.0;
    if (++probes > 60) throw std::runtime_error("smallest_eigenpairs: upper bound search failed");
    fhi = factor_shifted(s, hi, scale);
    if (!fhi) throw std::runtime_error("smallest_eigenpairs: factorization failed");
    count_samples.emplace_back(hi, fhi->negatives);
  }
  // tighten from above so the top slice is not absurdly wide
  {
    double lo_b = count_samples.size() > 1 ? count_samples[count_samples.size() - 2].first : 0.0;
    while (fhi->negatives > std::max(2 * k, k + 16) && hi - lo_b > 1e-6 * hi) {
      double mid = 0.5 * (hi + lo_b);
      auto fm = factor_shifted(s, mid, scale);
      if (!fm) break;
      count_samples.emplace_back(mid, fm->negatives);
      if (fm->negatives >= k) {
        hi = mid;
        fhi = std::move(fm);
      } else {
        lo_b = mid;
      }
    }
  }
  const int total_found = fhi->negatives;

  // Slice boundaries, placed by interpolating the probed counts and verified
  // by their own factorizations (the verification doubles as the count
  // certificate for every slice).
  const int slice_target = 72;
  const int nslices = std::max(1, (total_found + slice_target - 1) / slice_target);
  std::sort(count_samples.begin(), count_samples.end());
  std::vector<double> bounds{0.0};
  std::vector<int> counts{0};
  for (int j = 1; j < nslices; ++j) {
    const int want = (total_found * j) / nslices;
    // piecewise-linear inverse of the sampled count curve
    double guess = hi * want / std::max(1, total_found);
    for (size_t q = 1; q < count_samples.size(); ++q) {
      if (count_samples[q].second >= want && count_samples[q - 1].second <= want) {
        const auto& [s0, c0] = count_samples[q - 1];
        const auto& [s1, c1] = count_samples[q];
        guess = c1 == c0 ? s0 : s0 + (s1 - s0) * double(want - c0) / double(c1 - c0);
        break;
      }
    }
    guess = std::min(std::max(guess, bounds.back() + 1e-9 * hi), hi * (1.0 - 1e-12));
    auto fb = factor_shifted(s, guess, scale);
    if (!fb) throw std::runtime_error("smallest_eigenpairs: boundary factorization failed");
    if (fb->negatives > counts.back()) {
      bounds.push_back(guess);
      counts.push_back(fb->negatives);
    }
  }
  bounds.push_back(hi);
  counts.push_back(total_found);

  // Harvest each slice with a shifted inverse at its midpoint.
  Spectrum out;
  out.weight = op.weight;
  std::vector<double> vals, resids;
  Eigen::MatrixXd kept(n, keep);
  int kept_cols = 0;
  for (size_t j = 0; j + 1 < bounds.size(); ++j) {
    const double lo_s = bounds[j], hi_s = bounds[j + 1];
    const int expected = counts[j + 1] - counts[j];
    if (expected == 0) continue;
    const bool want_vec = kept_cols < keep && static_cast<int>(vals.size()) < keep;
    const double sigma = 0.5 * (lo_s + hi_s);
    auto fs = factor_shifted(s, sigma, scale);
    if (!fs) throw std::runtime_error("smallest_eigenpairs: slice factorization failed");
    SlicePairs pairs = slice_eigenpairs(s, *fs, lo_s, hi_s, expected, opts, want_vec, rng);
    for (int q = 0; q < expected; ++q) {
      vals.push_back(pairs.values[q]);
      resids.push_back(pairs.residuals[q]);
      if (want_vec && kept_cols < keep) kept.col(kept_cols++) = pairs.vectors.col(q);
    }
    out.krylov_dim = std::max(out.krylov_dim, pairs.krylov);
  }

  if (static_cast<int>(vals.size()) < k)
    throw std::runtime_error("smallest_eigenpairs: slicing lost eigenvalues");
  out.eigenvalues = Eigen::Map<Eigen::VectorXd>(vals.data(), k);
  out.residuals = Eigen::Map<Eigen::VectorXd>(resids.data(), k);
  out.eigenvectors.resize(n, std::min(keep, kept_cols));
  for (int i = 0; i < out.eigenvectors.cols(); ++i) {
    Eigen::VectorXd v = kept.col(i);
    const double lam = out.eigenvalues[i];
    out.residuals[i] = (s * v - lam * v).norm() / v.norm();
    out.eigenvectors.col(i) = v / (std::sqrt(op.weight) * v.norm());
  }
  return out;
}

int default_fit_top(int computed) { return std::max(1, (computed * 7) / 10); }

WeylFit weyl_fit(const Eigen::VectorXd& eigenvalues, WeylModel model, int k_min, int k_max) {
  if (k_min < 3) throw std::invalid_argument("weyl_fit: k_min must be >= 3 (needs ln k > 1)");
  if (k_max > eigenvalues.size())
    throw std::invalid_argument("weyl_fit: window exceeds the computed spectrum");
  const int len = k_max - k_min + 1;
  if (len < 20) throw std::invalid_argument("weyl_fit: window must contain at least 20 points");

  const bool plog = model == WeylModel::kPowerLog;
  const int cols = plog ? 3 : 2;
  Eigen::MatrixXd x(len, cols);
  Eigen::VectorXd y(len);
  for (int i = 0; i < len; ++i) {
    const int k = k_min + i;
    const double lam = eigenvalues[k - 1];
    if (!(lam > 0)) throw std::invalid_argument("weyl_fit: non-positive eigenvalue in window");
    x(i, 0) = 1.0;
    x(i, 1) = std::log(static_cast<double>(k));
    if (plog) x(i, 2) = std::log(std::log(static_cast<double>(k)));
    y[i] = std::log(lam);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < cols) throw std::runtime_error("weyl_fit: degenerate regression");
  Eigen::VectorXd coef = qr.solve(y);

  WeylFit fit;
  fit.c_hat = std::exp(coef[0]);
  fit.a_hat = coef[1];
  fit.b_hat = plog ? coef[2] : 0.0;
  fit.k_min = k_min;
  fit.k_max = k_max;
  fit.power_log = plog;
  const double ss_res = (y - x * coef).squaredNorm();
  const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

PoincareCheck verify_poincare(const Spectrum& spectrum, const DiscreteOperator& op,
                              double tol_pos, int n_samples, std::uint64_t seed) {
  PoincareCheck c;
  c.lambda1 = spectrum.eigenvalues[0];
  c.positive = c.lambda1 > tol_pos;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  double margin = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < n_samples; ++rep) {
    Eigen::VectorXd u(op.A.rows());
    for (int i = 0; i < u.size(); ++i) u[i] = nd(rng);
    double r = u.dot(op.A * u) / (op.weight * u.squaredNorm());
    margin = std::min(margin, r - c.lambda1);
  }
  c.min_rayleigh_margin = margin;
  if (margin < -1e-9 * std::max(1.0, c.lambda1)) c.positive = false;
  return c;
}

int clr_count(const DiscreteOperator& laplacian, const Eigen::VectorXd& v, double tol_neg) {
  if (v.size() != laplacian.A.rows()) throw std::invalid_argument("clr_count: size mismatch");
  for (int i = 0; i < v.size(); ++i)
    if (v[i] > 0.0) throw std::invalid_argument("clr_count: potential must be <= 0 nodewise");
  DiscreteOperator schrod = assemble_schrodinger(laplacian, v);
  SpMat s = schrod.A;
  s *= 1.0 / schrod.weight;
  if (tol_neg < 0) {
    Eigen::VectorXd colsum = Eigen::VectorXd::Zero(s.cols());
    for (int k = 0; k < s.outerSize(); ++k)
      for (SpMat::InnerIterator it(s, k); it; ++it) colsum[it.col()] += std::abs(it.value());
    tol_neg = colsum.maxCoeff() * std::numeric_limits<double>::epsilon();
  }
  return count_eigenvalues_below(s, -tol_neg);
}

ClrScaling clr_scaling_fit(const DiscreteOperator& laplacian, const Eigen::VectorXd& v_shape,
                           const std::vector<double>& t_values, double nu_tilde,
                           double sat_fraction) {
  if (t_values.size() < 2 || !std::is_sorted(t_values.begin(), t_values.end()))
    throw std::invalid_argument("clr_scaling_fit: need an increasing t grid");
  ClrScaling r;
  r.theoretical_cap = nu_tilde / 2.0;
  r.t_values = t_values;
  const double sat = sat_fraction * static_cast<double>(laplacian.A.rows());
  for (double t : t_values) r.counts.push_back(clr_count(laplacian, t * v_shape));

  std::vector<double> lt, lc;
  int lo = -1, hi = -1;
  for (size_t i = 0; i < r.counts.size(); ++i) {
    if (r.counts[i] >= 2 && r.counts[i] <= sat) {
      if (lo < 0) lo = static_cast<int>(i);
      hi = static_cast<int>(i);
      lt.push_back(std::log(t_values[i]));
      lc.push_back(std::log(static_cast<double>(r.counts[i])));
    }
  }
  if (lt.size() < 2)
    throw std::runtime_error("clr_scaling_fit: fewer than two usable counts; increase t range");
  const int len = static_cast<int>(lt.size());
  double mx = 0, my = 0;
  for (int i = 0; i < len; ++i) {
    mx += lt[i];
    my += lc[i];
  }
  mx /= len;
  my /= len;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < len; ++i) {
    sxy += (lt[i] - mx) * (lc[i] - my);
    sxx += (lt[i] - mx) * (lt[i] - mx);
  }
  if (sxx == 0) throw std::runtime_error("clr_scaling_fit: degenerate t window");
  r.slope = sxy / sxx;
  r.fit_lo = lo;
  r.fit_hi = hi;
  return r;
}

}  // namespace subtk
