#include "subtk/vector_field.hpp"

#include <algorithm>
#include <stdexcept>

#include <Eigen/SVD>

namespace subtk {

VectorField VectorField::zero(int dim) {
  VectorField f;
  f.dim = dim;
  f.comp.assign(dim, CoefficientExpr::zero(dim));
  return f;
}

VectorField VectorField::axis(int dim, int axis) {
  VectorField f = zero(dim);
  f.comp[axis] = CoefficientExpr::constant(dim, 1.0);
  return f;
}

Eigen::VectorXd VectorField::eval(const Eigen::VectorXd& x) const {
  Eigen::VectorXd v(dim);
  for (int j = 0; j < dim; ++j) v[j] = comp[j].eval(x);
  return v;
}

bool VectorField::is_zero() const {
  return std::all_of(comp.begin(), comp.end(),
                     [](const CoefficientExpr& c) { return c.is_zero(); });
}

std::string VectorField::str() const {
  std::string out = "(";
  for (int j = 0; j < dim; ++j) {
    if (j) out += "; ";
    out += comp[j].str();
  }
  return out + ")";
}

VectorField VectorField::parse(const std::vector<std::string>& components) {
  VectorField f;
  f.dim = static_cast<int>(components.size());
  for (const auto& s : components) f.comp.push_back(CoefficientExpr::parse(s, f.dim));
  return f;
}

VectorField lie_bracket(const VectorField& x, const VectorField& y) {
  if (x.dim != y.dim)
    throw std::invalid_argument("lie_bracket: dimension mismatch (" +
                                std::to_string(x.dim) + " vs " + std::to_string(y.dim) + ")");
  const int n = x.dim;
  VectorField r = VectorField::zero(n);
  for (int j = 0; j < n; ++j) {
    CoefficientExpr acc = CoefficientExpr::zero(n);
    for (int k = 0; k < n; ++k) {
      acc = acc + x.comp[k] * y.comp[j].derivative(k);
      acc = acc - y.comp[k] * x.comp[j].derivative(k);
    }
    r.comp[j] = acc;
  }
  return r;
}

void BracketFlag::extend(const std::vector<VectorField>& fields, int new_max_len) {
  if (entries_upto.empty()) entries_upto.push_back(0);
  if (max_len == 0 && new_max_len >= 1) {
    for (size_t i = 0; i < fields.size(); ++i) {
      BracketEntry e;
      e.word = std::to_string(i + 1);
      e.length = 1;
      e.field = fields[i];
      entries.push_back(std::move(e));
    }
    entries_upto.push_back(static_cast<int>(entries.size()));
    max_len = 1;
  }
  while (max_len < new_max_len) {
    const int lo = entries_upto[max_len - 1];
    const int hi = entries_upto[max_len];
    // new length = max_len + 1: [X_i, B] for every B of length max_len
    std::vector<BracketEntry> fresh;
    for (int idx = lo; idx < hi; ++idx) {
      for (size_t i = 0; i < fields.size(); ++i) {
        BracketEntry e;
        e.word = "[" + std::to_string(i + 1) + "," + entries[idx].word + "]";
        e.length = max_len + 1;
        e.field = lie_bracket(fields[i], entries[idx].field);
        fresh.push_back(std::move(e));
      }
    }
    for (auto& e : fresh) entries.push_back(std::move(e));
    entries_upto.push_back(static_cast<int>(entries.size()));
    ++max_len;
  }
}

BracketFlag build_bracket_flag(const std::vector<VectorField>& fields, int max_len) {
  if (fields.empty()) throw std::invalid_argument("build_bracket_flag: no fields");
  BracketFlag flag;
  flag.dim = fields[0].dim;
  for (const auto& f : fields)
    if (f.dim != flag.dim)
      throw std::invalid_argument("build_bracket_flag: fields of mixed dimension");
  flag.extend(fields, max_len);
  return flag;
}

namespace {

int numerical_rank(const Eigen::MatrixXd& m, double rank_tol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > rank_tol * sv[0]) ++r;
  return r;
}

}  // namespace

std::vector<int> flag_dimensions(const BracketFlag& flag, const Eigen::VectorXd& x,
                                 int max_len, double rank_tol) {
  if (max_len < 1) throw std::invalid_argument("flag_dimensions: maxLen must be >= 1");
  if (max_len > flag.max_len)
    throw std::invalid_argument("flag_dimensions: flag only extends to length " +
                                std::to_string(flag.max_len));
  const int n = flag.dim;
  Eigen::MatrixXd rows(flag.entries_upto[max_len], n);
  for (int i = 0; i < flag.entries_upto[max_len]; ++i)
    rows.row(i) = flag.entries[i].field.eval(x).transpose();
  std::vector<int> nu(max_len);
  for (int j = 1; j <= max_len; ++j)
    nu[j - 1] = numerical_rank(rows.topRows(flag.entries_upto[j]), rank_tol);
  return nu;
}

std::vector<int> flag_dimensions(const std::vector<VectorField>& fields,
                                 const Eigen::VectorXd& x, int max_len, double rank_tol) {
  return flag_dimensions(build_bracket_flag(fields, max_len), x, max_len, rank_tol);
}

int hormander_index(const std::vector<VectorField>& fields,
                    const std::vector<Eigen::VectorXd>& sample_points,
                    int max_len_cap, double rank_tol) {
  if (sample_points.empty())
    throw std::invalid_argument("hormander_index: empty sample set");
  const int n = fields[0].dim;
  BracketFlag flag = build_bracket_flag(fields, 1);
  std::vector<const Eigen::VectorXd*> pending;
  for (const auto& p : sample_points) pending.push_back(&p);
  for (int j = 1; j <= max_len_cap; ++j) {
    flag.extend(fields, j);
    std::vector<const Eigen::VectorXd*> still;
    for (const auto* p : pending) {
      auto nu = flag_dimensions(flag, *p, j, rank_tol);
      if (nu[j - 1] < n) still.push_back(p);
    }
    pending = std::move(still);
    if (pending.empty()) {
      // smallest j: earlier layers left at least one point unspanned by
      // construction of the sweep
      return j;
    }
  }
  std::string pt = "(";
  for (int i = 0; i < pending.front()->size(); ++i) {
    if (i) pt += ", ";
    pt += std::to_string((*pending.front())[i]);
  }
  pt += ")";
  throw std::runtime_error("Hörmander condition not verified at point " + pt +
                           " within bracket length cap " + std::to_string(max_len_cap));
}

int pointwise_dimension(const BracketFlag& flag, const Eigen::VectorXd& x, int q,
                        double rank_tol) {
  auto nu = flag_dimensions(flag, x, q, rank_tol);
  int prev = 0, s = 0;
  for (int j = 1; j <= q; ++j) {
    s += j * (nu[j - 1] - prev);
    prev = nu[j - 1];
  }
  return s;
}

int pointwise_dimension(const std::vector<VectorField>& fields, const Eigen::VectorXd& x,
                        int q, double rank_tol) {
  return pointwise_dimension(build_bracket_flag(fields, q), x, q, rank_tol);
}

MetivierReport generalized_metivier_index(const std::vector<VectorField>& fields,
                                          const std::vector<Eigen::VectorXd>& samples,
                                          const std::vector<Eigen::VectorXd>& extra_points,
                                          double rank_tol, int max_len_cap) {
  std::vector<Eigen::VectorXd> pts = samples;
  pts.insert(pts.end(), extra_points.begin(), extra_points.end());
  if (pts.empty())
    throw std::invalid_argument("generalized_metivier_index: no sample points");

  MetivierReport rep;
  rep.q = hormander_index(fields, pts, max_len_cap, rank_tol);
  BracketFlag flag = build_bracket_flag(fields, rep.q);

  int nu_min = 0;
  for (const auto& p : pts) {
    int nu = pointwise_dimension(flag, p, rep.q, rank_tol);
    rep.nu_of_x.emplace_back(p, nu);
    rep.nu_tilde = std::max(rep.nu_tilde, nu);
    nu_min = nu_min == 0 ? nu : std::min(nu_min, nu);
  }
  for (const auto& [p, nu] : rep.nu_of_x)
    if (nu == rep.nu_tilde) rep.witness_points.push_back(p);
  rep.metivier_condition_holds = (nu_min == rep.nu_tilde);
  rep.note = "nu_tilde is a lower bound certified at the sampled points";
  return rep;
}

double critical_exponent(double nu_tilde) {
  if (!(nu_tilde > 2.0))
    throw std::domain_error("critical_exponent: requires nu_tilde > 2, got " +
                            std::to_string(nu_tilde));
  return 2.0 * nu_tilde / (nu_tilde - 2.0);
}

}  // namespace subtk
