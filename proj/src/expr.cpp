#include "subtk/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace subtk {

namespace {

int cmp_key(const ExprTerm& a, const ExprTerm& b) {
  if (a.pow != b.pow) return a.pow < b.pow ? -1 : 1;
  if (a.lin != b.lin) return a.lin < b.lin ? -1 : 1;
  return 0;
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

CoefficientExpr CoefficientExpr::constant(int dim, double c) {
  CoefficientExpr e(dim);
  ExprTerm t;
  t.coeff = c;
  t.pow.assign(dim, 0);
  t.lin.assign(dim, 0.0);
  e.add_term(std::move(t));
  return e;
}

CoefficientExpr CoefficientExpr::coordinate(int dim, int axis) {
  CoefficientExpr e(dim);
  ExprTerm t;
  t.coeff = 1.0;
  t.pow.assign(dim, 0);
  t.pow[axis] = 1;
  t.lin.assign(dim, 0.0);
  e.add_term(std::move(t));
  return e;
}

void CoefficientExpr::add_term(ExprTerm t) {
  terms_.push_back(std::move(t));
  normalize();
}

void CoefficientExpr::normalize() {
  std::sort(terms_.begin(), terms_.end(),
            [](const ExprTerm& a, const ExprTerm& b) { return cmp_key(a, b) < 0; });
  std::vector<ExprTerm> out;
  for (auto& t : terms_) {
    if (!out.empty() && cmp_key(out.back(), t) == 0)
      out.back().coeff += t.coeff;
    else
      out.push_back(std::move(t));
  }
  std::erase_if(out, [](const ExprTerm& t) { return t.coeff == 0.0; });
  terms_ = std::move(out);
}

CoefficientExpr CoefficientExpr::operator+(const CoefficientExpr& o) const {
  CoefficientExpr r(dim_);
  r.terms_ = terms_;
  r.terms_.insert(r.terms_.end(), o.terms_.begin(), o.terms_.end());
  r.normalize();
  return r;
}

CoefficientExpr CoefficientExpr::operator-(const CoefficientExpr& o) const {
  return *this + o.scaled(-1.0);
}

CoefficientExpr CoefficientExpr::scaled(double s) const {
  CoefficientExpr r(dim_);
  r.terms_ = terms_;
  for (auto& t : r.terms_) t.coeff *= s;
  r.normalize();
  return r;
}

CoefficientExpr CoefficientExpr::operator*(const CoefficientExpr& o) const {
  CoefficientExpr r(dim_);
  for (const auto& a : terms_)
    for (const auto& b : o.terms_) {
      ExprTerm t;
      t.coeff = a.coeff * b.coeff;
      t.pow.resize(dim_);
      t.lin.resize(dim_);
      for (int j = 0; j < dim_; ++j) {
        t.pow[j] = a.pow[j] + b.pow[j];
        t.lin[j] = a.lin[j] + b.lin[j];
      }
      r.terms_.push_back(std::move(t));
    }
  r.normalize();
  return r;
}

CoefficientExpr CoefficientExpr::derivative(int axis) const {
  CoefficientExpr r(dim_);
  for (const auto& t : terms_) {
    if (t.pow[axis] > 0) {
      ExprTerm d = t;
      d.coeff *= static_cast<double>(t.pow[axis]);
      d.pow[axis] -= 1;
      r.terms_.push_back(std::move(d));
    }
    if (t.lin[axis] != 0.0) {
      ExprTerm d = t;
      d.coeff *= t.lin[axis];
      r.terms_.push_back(std::move(d));
    }
  }
  r.normalize();
  return r;
}

double CoefficientExpr::eval(const Eigen::VectorXd& x) const {
  double s = 0.0;
  for (const auto& t : terms_) {
    double v = t.coeff;
    double e = 0.0;
    for (int j = 0; j < dim_; ++j) {
      for (unsigned q = 0; q < t.pow[j]; ++q) v *= x[j];
      e += t.lin[j] * x[j];
    }
    s += v * std::exp(e);
  }
  return s;
}

std::string CoefficientExpr::str() const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& t : terms_) {
    double c = t.coeff;
    if (first) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    first = false;
    double mag = std::abs(c);

    std::vector<std::string> factors;
    for (int j = 0; j < dim_; ++j) {
      if (t.pow[j] == 0) continue;
      std::string f = "x" + std::to_string(j + 1);
      if (t.pow[j] > 1) f += "^" + std::to_string(t.pow[j]);
      factors.push_back(std::move(f));
    }
    bool has_exp = false;
    for (int j = 0; j < dim_; ++j)
      if (t.lin[j] != 0.0) has_exp = true;
    if (has_exp) {
      std::string arg;
      bool afirst = true;
      for (int j = 0; j < dim_; ++j) {
        if (t.lin[j] == 0.0) continue;
        double l = t.lin[j];
        if (afirst) {
          if (l < 0) arg += "-";
        } else {
          arg += l < 0 ? " - " : " + ";
        }
        afirst = false;
        double lm = std::abs(l);
        if (lm != 1.0) arg += fmt_double(lm) + "*";
        arg += "x" + std::to_string(j + 1);
      }
      factors.push_back("exp(" + arg + ")");
    }

    std::string body;
    if (mag != 1.0 || factors.empty()) body = fmt_double(mag);
    for (const auto& f : factors) {
      if (!body.empty()) body += "*";
      body += f;
    }
    out += body;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

class Parser {
 public:
  Parser(const std::string& s, int dim) : s_(s), dim_(dim) {}

  CoefficientExpr run() {
    CoefficientExpr e = parse_sum();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("parse error at position " + std::to_string(pos_) +
                                " in \"" + s_ + "\": " + what);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  double parse_number() {
    skip_ws();
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("expected a number");
    pos_ += static_cast<size_t>(end - begin);
    return v;
  }

  int parse_var() {
    // "x<k>", 1-based axis index
    skip_ws();
    if (peek() != 'x') fail("expected a variable x<k>");
    ++pos_;
    if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_])))
      fail("expected an axis index after 'x'");
    int k = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
      k = 10 * k + (s_[pos_++] - '0');
    if (k < 1 || k > dim_) fail("axis x" + std::to_string(k) + " out of range for dimension " + std::to_string(dim_));
    return k - 1;
  }

  CoefficientExpr parse_sum() {
    CoefficientExpr acc = CoefficientExpr::zero(dim_);
    bool first = true;
    while (true) {
      double sign = 1.0;
      if (eat('+')) {
      } else if (eat('-')) {
        sign = -1.0;
      } else if (!first) {
        break;
      }
      acc = acc + parse_term().scaled(sign);
      first = false;
      char c = peek();
      if (c != '+' && c != '-') break;
    }
    return acc;
  }

  CoefficientExpr parse_term() {
    ExprTerm t;
    t.coeff = 1.0;
    t.pow.assign(dim_, 0);
    t.lin.assign(dim_, 0.0);
    bool any = false;
    while (true) {
      char c = peek();
      if (c == 'x') {
        int a = parse_var();
        unsigned p = 1;
        if (eat('^')) {
          double pv = parse_number();
          if (pv < 0 || pv != std::floor(pv)) fail("monomial powers must be non-negative integers");
          p = static_cast<unsigned>(pv);
        }
        t.pow[a] += p;
        any = true;
      } else if (c == 'e' && s_.compare(pos_, 4, "exp(") == 0) {
        pos_ += 4;
        parse_linear(t);
        if (!eat(')')) fail("expected ')' closing exp(");
        any = true;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        t.coeff *= parse_number();
        any = true;
      } else {
        fail("expected a factor (number, x<k>, or exp(...))");
      }
      if (!eat('*')) break;
    }
    if (!any) fail("empty term");
    CoefficientExpr e(dim_);
    e.add_term(std::move(t));
    return e;
  }

  void parse_linear(ExprTerm& t) {
    // sum of [c*]x<k> and bare constants inside exp(); a constant c folds
    // into the coefficient as e^c.
    bool first = true;
    while (true) {
      skip_ws();
      double sign = 1.0;
      if (eat('+')) {
      } else if (eat('-')) {
        sign = -1.0;
      } else if (!first) {
        break;
      }
      first = false;
      char c = peek();
      if (c == 'x') {
        int a = parse_var();
        t.lin[a] += sign;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        double v = parse_number();
        if (eat('*')) {
          int a = parse_var();
          t.lin[a] += sign * v;
        } else {
          t.coeff *= std::exp(sign * v);
        }
      } else {
        fail("expected a linear term inside exp(...)");
      }
      char nc = peek();
      if (nc != '+' && nc != '-') break;
    }
  }

  const std::string& s_;
  int dim_;
  size_t pos_ = 0;
};

}  // namespace

CoefficientExpr CoefficientExpr::parse(const std::string& text, int dim) {
  // "0" parses to the empty sum via the generic path (a single zero term is
  // dropped by normalization).
  return Parser(text, dim).run();
}

}  // namespace subtk
