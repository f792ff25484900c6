#include "subtk/variational.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace subtk {

// ---------------------------------------------------------------------------
// Nonlinearity
// ---------------------------------------------------------------------------

double NonlinearitySpec::f(double u) const { return B * std::pow(std::abs(u), p - 2.0) * u; }
double NonlinearitySpec::F(double u) const { return B * std::pow(std::abs(u), p) / p; }
double NonlinearitySpec::fprime(double u) const {
  return (p - 1.0) * B * std::pow(std::abs(u), p - 2.0);
}
double NonlinearitySpec::g(double a, double u) const {
  return beta * std::pow(std::abs(u), sigma) + a;
}
double NonlinearitySpec::G(double a, double u) const {
  double su = u >= 0 ? 1.0 : -1.0;
  return beta * su * std::pow(std::abs(u), sigma + 1.0) / (sigma + 1.0) + a * u;
}
double NonlinearitySpec::gprime(double u) const {
  if (beta == 0.0 || sigma == 0.0) return 0.0;
  double au = std::max(std::abs(u), 1e-12);
  return beta * sigma * std::pow(au, sigma - 1.0) * (u >= 0 ? 1.0 : -1.0);
}

void NonlinearitySpec::validate(int n_nodes) const {
  if (!(B > 0.0)) throw std::invalid_argument("nonlinearity: B must be positive");
  if (!(p > 2.0)) throw std::invalid_argument("nonlinearity: p must exceed 2");
  if (!(beta >= 0.0)) throw std::invalid_argument("nonlinearity: beta must be >= 0");
  if (!(sigma >= 0.0 && sigma < mu() - 1.0))
    throw std::invalid_argument("nonlinearity: needs 0 <= sigma < mu - 1");
  if (!(R0 > 0.0)) throw std::invalid_argument("nonlinearity: R0 must be positive");
  if (alpha.size() != 0 && alpha.size() != n_nodes)
    throw std::invalid_argument("nonlinearity: alpha sample size mismatch");
  if (alpha.size() && !alpha.allFinite())
    throw std::invalid_argument("nonlinearity: alpha has non-finite samples");
}

GrowthConstants growth_constants(const NonlinearitySpec& spec) {
  GrowthConstants c;
  c.R0 = spec.R0;
  // power nonlinearity: F(R0) = F(-R0) = B R0^p / p and mu = p
  c.gamma0 = std::pow(spec.R0, -spec.mu()) * spec.F(spec.R0);
  c.a1 = c.gamma0;
  c.a2 = 0.0;
  c.a3 = 0.0;
  c.A0 = 1.0;

  const double mu = spec.mu();
  for (int i = 0; i <= 2000; ++i) {
    const double u = -10.0 * spec.R0 + i * (20.0 * spec.R0 / 2000.0);
    const double lhs1 = spec.F(u) + c.a2;
    const double pow_term = c.a1 * std::pow(std::abs(u), mu);
    if (lhs1 < pow_term - 1e-12 * (1.0 + pow_term))
      throw std::invalid_argument("growth_constants: sampled violation of F + a2 >= a1 |u|^mu");
    const double lhs2 = (u * spec.f(u) + c.a3) / mu;
    if (lhs2 < lhs1 - 1e-12 * (1.0 + std::abs(lhs1)))
      throw std::invalid_argument(
          "growth_constants: sampled violation of (uf + a3)/mu >= F + a2");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Cutoff
// ---------------------------------------------------------------------------

namespace {

constexpr double kChiSteepness = 0.75;

double smooth_bump(double t) { return t > 0.0 ? std::exp(-kChiSteepness / t) : 0.0; }
double smooth_bump_deriv(double t) {
  return t > 0.0 ? std::exp(-kChiSteepness / t) * kChiSteepness / (t * t) : 0.0;
}

}  // namespace

CutoffChi::CutoffChi() {
  // build-time verification of the derivative bound on a dense grid
  double mind = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const double xi = 0.5 + 2.0 * i / 10000.0;
    const double d = derivative(xi);
    const double v = (*this)(xi);
    if (!(v >= 0.0 && v <= 1.0)) throw std::logic_error("cutoff: range violation");
    if (d > 0.0) throw std::logic_error("cutoff: not monotone nonincreasing");
    if (d <= -2.0) throw std::logic_error("cutoff: derivative leaves (-2, 0)");
    mind = std::min(mind, d);
  }
  if (!((*this)(1.0) == 1.0 && (*this)(2.0) == 0.0))
    throw std::logic_error("cutoff: plateau values wrong");
  min_derivative_ = mind;
}

double CutoffChi::operator()(double xi) const {
  if (xi <= 1.0) return 1.0;
  if (xi >= 2.0) return 0.0;
  const double a = smooth_bump(2.0 - xi);
  const double b = smooth_bump(xi - 1.0);
  return a / (a + b);
}

double CutoffChi::derivative(double xi) const {
  if (xi <= 1.0 || xi >= 2.0) return 0.0;
  const double a = smooth_bump(2.0 - xi);
  const double b = smooth_bump(xi - 1.0);
  const double ap = -smooth_bump_deriv(2.0 - xi);
  const double bp = smooth_bump_deriv(xi - 1.0);
  const double s = a + b;
  return (ap * b - a * bp) / (s * s);
}

// ---------------------------------------------------------------------------
// Functionals
// ---------------------------------------------------------------------------

double energy(const Eigen::VectorXd& u, const NonlinearitySpec& spec,
              const DiscreteOperator& op) {
  const double w = op.weight;
  double nl = 0.0;
  for (int i = 0; i < u.size(); ++i)
    nl += spec.F(u[i]) + spec.G(spec.alpha_at(i), u[i]);
  return 0.5 * u.dot(op.A * u) - w * nl;
}

Eigen::VectorXd gradient(const Eigen::VectorXd& u, const NonlinearitySpec& spec,
                         const DiscreteOperator& op) {
  Eigen::VectorXd r = op.A * u;
  const double w = op.weight;
  for (int i = 0; i < u.size(); ++i)
    r[i] -= w * (spec.f(u[i]) + spec.g(spec.alpha_at(i), u[i]));
  return r;
}

Eigen::SparseMatrix<double> hessian_energy(const Eigen::VectorXd& u,
                                           const NonlinearitySpec& spec,
                                           const DiscreteOperator& op) {
  Eigen::SparseMatrix<double> h = op.A;
  Eigen::SparseMatrix<double> d(u.size(), u.size());
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < u.size(); ++i) {
    const double v = spec.fprime(u[i]) + spec.gprime(u[i]);
    if (v != 0.0) trips.emplace_back(i, i, -op.weight * v);
  }
  d.setFromTriplets(trips.begin(), trips.end());
  h += d;
  return h;
}

DiscreteOperator hessian_power_functional(const Eigen::VectorXd& u,
                                          const NonlinearitySpec& spec,
                                          const DiscreteOperator& op) {
  Eigen::VectorXd v(u.size());
  for (int i = 0; i < u.size(); ++i)
    v[i] = -(spec.p - 1.0) * spec.B * std::pow(std::abs(u[i]), spec.p - 2.0);
  return assemble_schrodinger(op, v);
}

ModifiedEnergy modified_energy(const Eigen::VectorXd& u, const NonlinearitySpec& spec,
                               const GrowthConstants& c, const CutoffChi& chi,
                               const DiscreteOperator& op) {
  if (!(c.A0 > 0.0)) throw std::invalid_argument("modified_energy: needs A0 > 0");
  ModifiedEnergy r;
  const double w = op.weight;
  double int_f = 0.0, int_g = 0.0, quad = 0.5 * u.dot(op.A * u);
  for (int i = 0; i < u.size(); ++i) {
    int_f += spec.F(u[i]);
    int_g += spec.G(spec.alpha_at(i), u[i]);
  }
  int_f *= w;
  int_g *= w;
  r.e = quad - int_f - int_g;
  r.integral_f_a2 = int_f + c.a2 * w * static_cast<double>(u.size());
  r.integral_g = int_g;
  r.qval = 2.0 * c.A0 * std::sqrt(r.e * r.e + 1.0);
  r.theta = r.integral_f_a2 / r.qval;
  r.psi = chi(r.theta);
  r.e1 = quad - int_f - r.psi * int_g;
  return r;
}

ModifiedGradient modified_gradient(const Eigen::VectorXd& u, const NonlinearitySpec& spec,
                                   const GrowthConstants& c, const CutoffChi& chi,
                                   const DiscreteOperator& op) {
  ModifiedGradient r;
  const ModifiedEnergy me = modified_energy(u, spec, c, chi, op);
  const double w = op.weight;
  const double chi_p = chi.derivative(me.theta);
  const double q = me.qval;
  r.psi = me.psi;
  r.theta = me.theta;
  r.t1 = chi_p * std::pow(2.0 * c.A0, 2) / (q * q) * me.e * me.theta * me.integral_g;
  r.t2 = chi_p / q * me.integral_g + r.t1;

  r.grad = (1.0 + r.t1) * (op.A * u);
  for (int i = 0; i < u.size(); ++i) {
    r.grad[i] -= (1.0 + r.t2) * w * spec.f(u[i]);
    r.grad[i] -= (me.psi + r.t1) * w * spec.g(spec.alpha_at(i), u[i]);
  }
  return r;
}

double symmetry_defect(const Eigen::VectorXd& u, const NonlinearitySpec& spec,
                       const GrowthConstants& c, const CutoffChi& chi,
                       const DiscreteOperator& op) {
  const double e1 = modified_energy(u, spec, c, chi, op).e1;
  const double e1m = modified_energy(-u, spec, c, chi, op).e1;
  return std::abs(e1 - e1m);
}

MorseIndices morse_indices(const DiscreteOperator& hessian, double tol) {
  Eigen::SparseMatrix<double> s = hessian.A;
  s *= 1.0 / hessian.weight;
  if (tol < 0) {
    Eigen::VectorXd colsum = Eigen::VectorXd::Zero(s.cols());
    for (int k = 0; k < s.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(s, k); it; ++it)
        colsum[it.col()] += std::abs(it.value());
    tol = colsum.maxCoeff() * 1e3 * std::numeric_limits<double>::epsilon();
  }
  MorseIndices mi;
  mi.m = count_eigenvalues_below(s, -tol);
  mi.m_star = count_eigenvalues_below(s, tol);
  return mi;
}

IdentityDiagnostics critical_point_identities(const Eigen::VectorXd& u,
                                              const NonlinearitySpec& spec,
                                              const GrowthConstants& c,
                                              const DiscreteOperator& op) {
  IdentityDiagnostics d;
  const double w = op.weight;
  const double e = energy(u, spec, op);
  const Eigen::VectorXd de = gradient(u, spec, op);
  d.half_deu = 0.5 * de.dot(u);
  double virial = 0.0, int_f = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    const double a = spec.alpha_at(i);
    virial += 0.5 * u[i] * spec.f(u[i]) - spec.F(u[i]);
    virial += 0.5 * u[i] * spec.g(a, u[i]) - spec.G(a, u[i]);
    int_f += spec.F(u[i]);
  }
  virial *= w;
  d.identity_gap = e - d.half_deu - virial;
  d.virial_gap = std::abs(e - virial);
  d.ratio_bound = (int_f * w + c.a2 * w * static_cast<double>(u.size())) /
                  std::sqrt(e * e + 1.0);
  return d;
}

double fit_A0(const std::vector<CriticalPointRecord>& records) {
  double m = 0.5;
  for (const auto& r : records) m = std::max(m, r.ratio_bound);
  return 2.0 * m;
}

int count_sign_changes(const Eigen::VectorXd& u) {
  const double floor = 1e-8 * u.cwiseAbs().maxCoeff();
  int changes = 0;
  double last = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    if (std::abs(u[i]) <= floor) continue;
    if (last != 0.0 && u[i] * last < 0.0) ++changes;
    last = u[i];
  }
  return changes;
}

// ---------------------------------------------------------------------------
// Critical point search
// ---------------------------------------------------------------------------

namespace {

// largest maximizer of t -> E(t v) on (0, t_cap]; geometric scan + golden
double ray_maximum(const Eigen::VectorXd& v, const NonlinearitySpec& spec,
                   const DiscreteOperator& op, double t_cap) {
  auto phi = [&](double t) { return energy(t * v, spec, op); };
  double best_t = 0.0, best = 0.0;
  double lo = 0.0, hi = 0.0;
  for (double t = 1e-4; t <= t_cap; t *= 1.35) {
    const double val = phi(t);
    if (val > best) {
      best = val;
      best_t = t;
    }
    if (best_t > 0.0 && val < 0.0 && val < best) {
      hi = t;
      break;
    }
  }
  if (best_t == 0.0) return 0.0;  // no positive bump on this ray
  lo = best_t / 1.35 / 1.35;
  if (hi == 0.0) hi = t_cap;
  // golden-section refinement of the maximizer
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::max(lo, 1e-8), b = hi;
  double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
  double f1 = phi(c1), f2 = phi(c2);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * b; ++it) {
    if (f1 < f2) {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + gr * (b - a);
      f2 = phi(c2);
    } else {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - gr * (b - a);
      f1 = phi(c1);
    }
  }
  return 0.5 * (a + b);
}

double l2_dist(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double w) {
  return std::sqrt(w) * (a - b).norm();
}

// deflation bump and its gradient
double deflation_value(const Eigen::VectorXd& u, const std::vector<Eigen::VectorXd>& excl,
                       double w, double strength, double delta, double emag) {
  double p = 0.0;
  for (const auto& e : excl) {
    const double d2 = w * (u - e).squaredNorm();
    p += strength * emag * delta * delta / (d2 + delta * delta);
  }
  return p;
}

Eigen::VectorXd deflation_gradient(const Eigen::VectorXd& u,
                                   const std::vector<Eigen::VectorXd>& excl, double w,
                                   double strength, double delta, double emag) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(u.size());
  for (const auto& e : excl) {
    const double d2 = w * (u - e).squaredNorm();
    const double den = (d2 + delta * delta);
    g -= strength * emag * delta * delta * 2.0 * w / (den * den) * (u - e);
  }
  return g;
}

}  // namespace

CriticalPointRecord mountain_pass_search(const NonlinearitySpec& spec,
                                         const DiscreteOperator& op,
                                         const Eigen::VectorXd& init,
                                         const SolveOptions& opts,
                                         const std::vector<Eigen::VectorXd>* exclusions) {
  const int n = static_cast<int>(op.A.rows());
  spec.validate(n);
  if (init.size() != n) throw std::invalid_argument("mountain_pass_search: bad init size");
  const double w = op.weight;

  std::vector<Eigen::VectorXd> excl;
  if (exclusions) {
    for (const auto& e : *exclusions) {
      excl.push_back(e);
      if (!spec.has_g(n)) excl.push_back(-e);  // even functional: exclude the mirror too
    }
  }

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> precond(op.A);
  if (precond.info() != Eigen::Success)
    throw std::runtime_error("mountain_pass_search: preconditioner factorization failed");

  // phase 0: scale the seed to the energy maximum along its ray
  Eigen::VectorXd dir = init / (std::sqrt(w) * init.norm());
  double t0 = ray_maximum(dir, spec, op, 1e8);
  if (t0 <= 0.0)
    throw std::runtime_error("mountain_pass_search: no positive energy bump along the seed ray");
  Eigen::VectorXd u = t0 * dir;

  const double delta = std::max(opts.sep, 1e-6);
  const double emag = std::max(1.0, std::abs(energy(u, spec, op)));

  auto is_excluded = [&](const Eigen::VectorXd& cand) {
    for (const auto& e : excl)
      if (l2_dist(cand, e, w) <= opts.sep) return true;
    return false;
  };

  // damped Newton on DE(u) = 0; throws on stall or non-convergence
  auto run_newton = [&](Eigen::VectorXd x) {
    double res = gradient(x, spec, op).norm();
    for (int it = 0; it < opts.max_newton; ++it) {
      const Eigen::VectorXd de = gradient(x, spec, op);
      res = de.norm();
      const double scale = std::max(1.0, (op.A * x).norm());
      if (res <= opts.tol * scale) break;
      Eigen::SparseMatrix<double> h = hessian_energy(x, spec, op);
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> hf(h);
      if (hf.info() != Eigen::Success)
        throw std::runtime_error("mountain_pass_search: hessian factorization failed");
      const Eigen::VectorXd delta_x = hf.solve(de);
      double step = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 30; ++ls) {
        Eigen::VectorXd cand = x - step * delta_x;
        if (gradient(cand, spec, op).norm() < res * (1.0 - 0.25 * step)) {
          x = cand;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) {
        std::ostringstream msg;
        msg << "mountain_pass_search: newton stalled at residual " << res;
        throw std::runtime_error(msg.str());
      }
    }
    res = gradient(x, spec, op).norm();
    const double scale = std::max(1.0, (op.A * x).norm());
    if (!(res <= opts.tol * scale)) {
      std::ostringstream msg;
      msg << "mountain_pass_search: residual " << res << " above tolerance " << opts.tol * scale;
      throw std::runtime_error(msg.str());
    }
    if (std::sqrt(w) * x.norm() < 1e-10)
      throw std::runtime_error("mountain_pass_search: collapsed to the trivial solution");
    return x;
  };

  // preconditioned descent on the deflated energy, rescaled to the ray
  // maximum after every step so iterates stay on the mountain ridge
  auto run_descent = [&](Eigen::VectorXd x, int budget) {
    double merit_prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < budget; ++it) {
      Eigen::VectorXd de = gradient(x, spec, op);
      if (!excl.empty()) de += deflation_gradient(x, excl, w, opts.deflate_strength, delta, emag);
      const double scale = std::max(1.0, (op.A * x).norm());
      if (de.norm() <= 1e-4 * scale) break;  // hand off to Newton

      Eigen::VectorXd d = precond.solve(de);
      double step = 1.0;
      const double merit0 = energy(x, spec, op) +
                            deflation_value(x, excl, w, opts.deflate_strength, delta, emag);
      bool moved = false;
      for (int ls = 0; ls < 40; ++ls) {
        Eigen::VectorXd cand = x - step * d;
        const double tc = ray_maximum(cand / std::max(1e-300, std::sqrt(w) * cand.norm()),
                                      spec, op, 1e8);
        if (tc > 0.0) {
          cand = tc * cand / (std::sqrt(w) * cand.norm());
          const double merit = energy(cand, spec, op) +
                               deflation_value(cand, excl, w, opts.deflate_strength, delta, emag);
          if (merit < merit0 - 1e-12 * std::abs(merit0)) {
            x = cand;
            moved = true;
            break;
          }
        }
        step *= 0.5;
      }
      if (!moved) break;  // ridge minimum reached at this resolution
      if (std::abs(merit_prev - merit0) <= 1e-13 * std::abs(merit0)) break;
      merit_prev = merit0;
    }
    return x;
  };

  // The seed ray already selects the right symmetry class, so Newton from
  // the ray maximum is tried first; the deflated ridge descent is the
  // escape hatch when that lands on an excluded solution.
  bool have = false;
  if (excl.empty()) u = run_newton(run_descent(u, std::min(20, opts.max_descent)));
  else {
    try {
      Eigen::VectorXd direct = run_newton(u);
      if (!is_excluded(direct) && !(!spec.has_g(n) && is_excluded(-direct))) {
        u = direct;
        have = true;
      }
    } catch (const std::runtime_error&) {
    }
    if (!have) {
      u = run_newton(run_descent(u, opts.max_descent));
      if (is_excluded(u) || (!spec.has_g(n) && is_excluded(-u)))
        throw std::runtime_error("mountain_pass_search: converged onto an excluded solution");
    }
  }
  const double res = gradient(u, spec, op).norm();

  // deterministic sign convention for the even case
  if (!spec.has_g(n)) {
    int imax = 0;
    u.cwiseAbs().maxCoeff(&imax);
    if (u[imax] < 0) u = -u;
  }

  CriticalPointRecord rec;
  rec.u = u;
  rec.energy = energy(u, spec, op);
  rec.residual = res;
  auto hess = hessian_power_functional(u, spec, op);
  auto mi = morse_indices(hess);
  rec.morse = mi.m;
  rec.morse_star = mi.m_star;
  if (op.grid && op.grid->dim() == 1) rec.sign_changes = count_sign_changes(u);
  GrowthConstants gc = growth_constants(spec);
  auto diag = critical_point_identities(u, spec, gc, op);
  rec.identity_gap = diag.virial_gap;
  rec.ratio_bound = diag.ratio_bound;
  rec.modified_energy = rec.energy;  // coincides once A0 is fitted
  return rec;
}

MultiSolutionResult multi_solution_search(const NonlinearitySpec& spec,
                                          const DiscreteOperator& op,
                                          const Spectrum& spectrum, int k_count,
                                          const SolveOptions& opts, double nu_tilde) {
  if (spectrum.eigenvectors.cols() < k_count)
    throw std::invalid_argument("multi_solution_search: spectrum holds too few eigenvectors");
  const int n = static_cast<int>(op.A.rows());
  const double w = op.weight;
  MultiSolutionResult out;

  // radius rule R_k >= lambda_k^{r/(2(p-2))}, r = nu (1 - p/(2 nu/(nu-2)))
  const double crit = 2.0 * nu_tilde / (nu_tilde - 2.0);
  const double r_exp = nu_tilde * (1.0 - spec.p / crit);
  double r_prev = 0.0;
  for (int k = 1; k <= k_count; ++k) {
    double rk = std::pow(std::max(spectrum.eigenvalues[k - 1], 1.0),
                         r_exp / (2.0 * (spec.p - 2.0)));
    rk = std::max(rk, r_prev);
    r_prev = rk;
    out.seed_radii.push_back(rk);
  }

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> nd;
  std::vector<Eigen::VectorXd> found;
  for (int k = 1; k <= k_count; ++k) {
    Eigen::VectorXd seed = spectrum.eigenvectors.col(k - 1);
    SolveOptions local = opts;
    bool accepted = false;
    for (int attempt = 0; attempt < 3 && !accepted; ++attempt) {
      Eigen::VectorXd v = seed;
      if (attempt > 0) {
        Eigen::VectorXd noise(n);
        for (int i = 0; i < n; ++i) noise[i] = nd(rng);
        v += 0.15 * attempt * noise * (seed.norm() / noise.norm());
        local.deflate_strength = opts.deflate_strength * std::pow(4.0, attempt);
      }
      CriticalPointRecord rec;
      try {
        rec = mountain_pass_search(spec, op, v, local, &found);
      } catch (const std::runtime_error&) {
        continue;
      }
      bool dup = false;
      for (const auto& f : found) {
        if (l2_dist(rec.u, f, w) <= opts.sep || (!spec.has_g(n) && l2_dist(-rec.u, f, w) <= opts.sep))
          dup = true;
      }
      if (dup) continue;
      rec.k_label = k;
      found.push_back(rec.u);
      out.records.push_back(std::move(rec));
      accepted = true;
    }
  }

  std::sort(out.records.begin(), out.records.end(),
            [](const CriticalPointRecord& a, const CriticalPointRecord& b) {
              if (a.energy != b.energy) return a.energy < b.energy;
              return a.u.norm() < b.u.norm();
            });
  out.complete = static_cast<int>(out.records.size()) == k_count;
  return out;
}

}  // namespace subtk
