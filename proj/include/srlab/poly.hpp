#ifndef SRLAB_POLY_HPP
#define SRLAB_POLY_HPP

/**
 * @file poly.hpp
 * @brief Multivariate polynomials and polynomial vector fields.
 *
 * Built-in model frames are polynomial, which gives exact anchor
 * derivatives, exact field Jacobians and exact (symbolic) Lie brackets.
 */

#include "srlab/types.hpp"

#include <map>
#include <utility>
#include <vector>

namespace srlab {

struct PolyTerm {
  double coeff = 0.0;
  std::vector<int> exps;  // one exponent per chart coordinate
};

class Poly {
 public:
  Poly() = default;
  explicit Poly(int nvars) : nvars_(nvars) {}

  int nvars() const { return nvars_; }
  const std::vector<PolyTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  Poly& add_term(double c, std::vector<int> e) {
    require(static_cast<int>(e.size()) == nvars_, "Poly: exponent arity mismatch");
    if (c != 0.0) terms_.push_back({c, std::move(e)});
    normalize();
    return *this;
  }

  double eval(const Vec& q) const {
    double s = 0.0;
    for (const auto& t : terms_) {
      double m = t.coeff;
      for (int j = 0; j < nvars_; ++j) {
        for (int k = 0; k < t.exps[j]; ++k) m *= q[j];
      }
      s += m;
    }
    return s;
  }

  Poly partial(int var) const {
    Poly out(nvars_);
    for (const auto& t : terms_) {
      if (t.exps[var] == 0) continue;
      PolyTerm d = t;
      d.coeff *= d.exps[var];
      d.exps[var] -= 1;
      out.terms_.push_back(std::move(d));
    }
    out.normalize();
    return out;
  }

  friend Poly operator+(const Poly& a, const Poly& b) {
    require(a.nvars_ == b.nvars_, "Poly: arity mismatch");
    Poly out(a.nvars_);
    out.terms_ = a.terms_;
    out.terms_.insert(out.terms_.end(), b.terms_.begin(), b.terms_.end());
    out.normalize();
    return out;
  }

  friend Poly operator-(const Poly& a, const Poly& b) { return a + (b * -1.0); }

  friend Poly operator*(const Poly& a, double s) {
    Poly out = a;
    for (auto& t : out.terms_) t.coeff *= s;
    out.normalize();
    return out;
  }

  friend Poly operator*(const Poly& a, const Poly& b) {
    require(a.nvars_ == b.nvars_, "Poly: arity mismatch");
    Poly out(a.nvars_);
    for (const auto& ta : a.terms_) {
      for (const auto& tb : b.terms_) {
        PolyTerm t;
        t.coeff = ta.coeff * tb.coeff;
        t.exps.resize(a.nvars_);
        for (int j = 0; j < a.nvars_; ++j) t.exps[j] = ta.exps[j] + tb.exps[j];
        out.terms_.push_back(std::move(t));
      }
    }
    out.normalize();
    return out;
  }

 private:
  void normalize() {
    std::map<std::vector<int>, double> acc;
    for (const auto& t : terms_) acc[t.exps] += t.coeff;
    terms_.clear();
    for (auto& [e, c] : acc) {
      if (std::abs(c) > 1e-300) terms_.push_back({c, e});
    }
  }

  int nvars_ = 0;
  std::vector<PolyTerm> terms_;
};

/// Polynomial vector field on the chart, with exact Jacobian.
class PolyVectorField {
 public:
  PolyVectorField() = default;
  explicit PolyVectorField(int n) : n_(n), comp_(n, Poly(n)) {}

  int dim() const { return n_; }
  Poly& component(int i) { return comp_.at(i); }
  const Poly& component(int i) const { return comp_.at(i); }

  Vec eval(const Vec& q) const {
    Vec v(n_);
    for (int i = 0; i < n_; ++i) v[i] = comp_[i].eval(q);
    return v;
  }

  Mat jacobian(const Vec& q) const {
    Mat J(n_, n_);
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) J(i, j) = comp_[i].partial(j).eval(q);
    }
    return J;
  }

  bool is_zero() const {
    for (const auto& c : comp_) {
      if (!c.is_zero()) return false;
    }
    return true;
  }

  friend PolyVectorField operator+(const PolyVectorField& a, const PolyVectorField& b) {
    require(a.n_ == b.n_, "PolyVectorField: dim mismatch");
    PolyVectorField out(a.n_);
    for (int i = 0; i < a.n_; ++i) out.comp_[i] = a.comp_[i] + b.comp_[i];
    return out;
  }

  friend PolyVectorField operator*(const PolyVectorField& a, double s) {
    PolyVectorField out = a;
    for (auto& c : out.comp_) c = c * s;
    return out;
  }

 private:
  int n_ = 0;
  std::vector<Poly> comp_;
};

/// Exact Lie bracket [X,Y] = dY·X − dX·Y of polynomial fields.
inline PolyVectorField poly_bracket(const PolyVectorField& X, const PolyVectorField& Y) {
  require(X.dim() == Y.dim(), "poly_bracket: dim mismatch");
  const int n = X.dim();
  PolyVectorField out(n);
  for (int i = 0; i < n; ++i) {
    Poly acc(n);
    for (int j = 0; j < n; ++j) {
      acc = acc + Y.component(i).partial(j) * X.component(j);
      acc = acc - X.component(i).partial(j) * Y.component(j);
    }
    out.component(i) = acc;
  }
  return out;
}

}  // namespace srlab

#endif  // SRLAB_POLY_HPP
