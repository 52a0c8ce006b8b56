#ifndef SRLAB_MODEL_HPP
#define SRLAB_MODEL_HPP

/**
 * @file model.hpp
 * @brief Chart-level sub-Riemannian structure: anchored control bundle plus
 *        fiber metric, with the pointwise linear-algebra operations.
 *
 * A Model holds the anchor q -> xi_q (n x h), the metric q -> g_q (h x h,
 * SPD) and their q-derivatives as callables. Models built from polynomial
 * frames get exact derivatives; hand-rolled models may supply only the
 * directional derivatives and have the adjoint forms assembled from them.
 */

#include "srlab/numerics.hpp"
#include "srlab/poly.hpp"
#include "srlab/types.hpp"

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace srlab {

struct Model {
  int n = 0;  ///< chart (state) dimension
  int h = 0;  ///< control dimension
  std::string name;

  /// q -> xi_q, the n x h anchor matrix.
  std::function<Mat(const Vec&)> anchor;
  /// (q,u,dq) -> d_q(xi_q u) . dq, an n-vector.
  std::function<Vec(const Vec&, const Vec&, const Vec&)> anchor_deriv;
  /// (q,u,p) -> (d_q(xi_q u))^* p, an n-covector.
  std::function<Vec(const Vec&, const Vec&, const Vec&)> anchor_deriv_adj;
  /// q -> g_q, the h x h SPD metric matrix.
  std::function<Mat(const Vec&)> metric;
  /// (q,u,v,dq) -> d_q(g_q(u,v)) . dq, a scalar.
  std::function<double(const Vec&, const Vec&, const Vec&, const Vec&)> metric_deriv;
  /// (q,u,v) -> d_q(g_q(u,v)) as an n-covector.
  std::function<Vec(const Vec&, const Vec&, const Vec&)> metric_grad;

  /// Optional analytic horizontal frame; field j spans control direction e_j.
  std::vector<PolyVectorField> frame;

  bool has_frame() const { return !frame.empty(); }
};

/// Fills anchor_deriv_adj / metric_grad from the directional forms when a
/// hand-rolled model omits them (n basis sweeps per call).
inline void finish_model(Model& m) {
  if (!m.anchor_deriv_adj) {
    auto deriv = m.anchor_deriv;
    const int n = m.n;
    m.anchor_deriv_adj = [deriv, n](const Vec& q, const Vec& u, const Vec& p) {
      Vec out(n);
      Vec e = Vec::Zero(n);
      for (int i = 0; i < n; ++i) {
        e[i] = 1.0;
        out[i] = deriv(q, u, e).dot(p);
        e[i] = 0.0;
      }
      return out;
    };
  }
  if (!m.metric_grad) {
    auto deriv = m.metric_deriv;
    const int n = m.n;
    m.metric_grad = [deriv, n](const Vec& q, const Vec& u, const Vec& v) {
      Vec out(n);
      Vec e = Vec::Zero(n);
      for (int i = 0; i < n; ++i) {
        e[i] = 1.0;
        out[i] = deriv(q, u, v, e);
        e[i] = 0.0;
      }
      return out;
    };
  }
}

/// Model from a polynomial frame and a constant SPD metric (identity when
/// omitted). All derivatives are exact.
inline Model frame_model(std::string name, std::vector<PolyVectorField> fields, Mat metric = Mat()) {
  require(!fields.empty(), "frame_model: empty frame");
  const int n = fields.front().dim();
  const int h = static_cast<int>(fields.size());
  for (const auto& f : fields) require(f.dim() == n, "frame_model: mixed field dims");
  if (metric.size() == 0) metric = Mat::Identity(h, h);
  require(metric.rows() == h && metric.cols() == h, "frame_model: metric size");

  auto shared = std::make_shared<const std::vector<PolyVectorField>>(fields);
  Model m;
  m.n = n;
  m.h = h;
  m.name = std::move(name);
  m.frame = *shared;
  m.anchor = [shared, n, h](const Vec& q) {
    Mat xi(n, h);
    for (int j = 0; j < h; ++j) xi.col(j) = (*shared)[j].eval(q);
    return xi;
  };
  m.anchor_deriv = [shared, n, h](const Vec& q, const Vec& u, const Vec& dq) {
    Vec out = Vec::Zero(n);
    for (int j = 0; j < h; ++j) {
      if (u[j] != 0.0) out += u[j] * ((*shared)[j].jacobian(q) * dq);
    }
    return out;
  };
  m.anchor_deriv_adj = [shared, n, h](const Vec& q, const Vec& u, const Vec& p) {
    Vec out = Vec::Zero(n);
    for (int j = 0; j < h; ++j) {
      if (u[j] != 0.0) out += u[j] * ((*shared)[j].jacobian(q).transpose() * p);
    }
    return out;
  };
  Mat g0 = metric;
  m.metric = [g0](const Vec&) { return g0; };
  m.metric_deriv = [](const Vec&, const Vec&, const Vec&, const Vec&) { return 0.0; };
  const int nn = n;
  m.metric_grad = [nn](const Vec&, const Vec&, const Vec&) { return Vec(Vec::Zero(nn)); };
  return m;
}

// ---------------------------------------------------------------------------
// Pointwise operations
// ---------------------------------------------------------------------------

/// xi_q u, the horizontal tangent vector generated by control u.
inline Vec anchor_apply(const Model& m, const Vec& q, const Vec& u) {
  require(q.size() == m.n && u.size() == m.h, "anchor_apply: dimension mismatch");
  return m.anchor(q) * u;
}

/// xi_q^* p, the dual control; <xi_q u, p> = <u, xi_q^* p>.
inline Vec anchor_adjoint(const Model& m, const Vec& q, const Vec& p) {
  require(q.size() == m.n && p.size() == m.n, "anchor_adjoint: dimension mismatch");
  return m.anchor(q).transpose() * p;
}

/// Evaluates g_q as a matrix (convenience wrapper).
inline Mat metric_eval(const Model& m, const Vec& q) {
  require(q.size() == m.n, "metric_eval: dimension mismatch");
  return m.metric(q);
}

/// Solves g_q(u, .) = w for u via Cholesky; failure means the stored metric
/// is not SPD, which is a model bug rather than a numerical edge case.
inline Vec metric_solve(const Model& m, const Vec& q, const Vec& w) {
  require(q.size() == m.n && w.size() == m.h, "metric_solve: dimension mismatch");
  Eigen::LLT<Mat> llt(m.metric(q));
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("metric_solve: metric not SPD (model bug) for model " + m.name);
  }
  return llt.solve(w);
}

struct SeminormResult {
  double value = 0.0;     ///< min-g-norm over the preimage (valid when finite)
  bool finite = false;    ///< false when w is outside the numerical range of xi_q
  double residual = 0.0;  ///< residual of the best range approximation
};

/// n_q(w)^2 = inf { g_q(u,u) : xi_q u = w }. Returns the +infinity flag when
/// the relative residual of the best approximation exceeds 1e-9.
inline SeminormResult seminorm(const Model& m, const Vec& q, const Vec& w) {
  require(q.size() == m.n && w.size() == m.n, "seminorm: dimension mismatch");
  const double wn = w.norm();
  if (wn == 0.0) return {0.0, true, 0.0};
  const Mat xi = m.anchor(q);
  Eigen::LLT<Mat> llt(m.metric(q));
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("seminorm: metric not SPD (model bug)");
  }
  // Substitute v = L^T u so the g-norm becomes Euclidean: minimize |v| over
  // (xi L^{-T}) v = w, solved as a min-norm least-squares problem.
  const Mat L = llt.matrixL();
  Mat B = Mat(L.transpose()).triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(xi);
  Eigen::JacobiSVD<Mat> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);
  const Vec v = svd.solve(w);
  const double resid = (B * v - w).norm();
  SeminormResult out;
  out.residual = resid;
  out.finite = resid <= 1e-9 * wn;
  out.value = out.finite ? v.norm() : std::numeric_limits<double>::infinity();
  return out;
}

/// Least-g-norm control with xi_q u ~= w in the least-squares sense (drops
/// any out-of-range component of w). Used for straight-line initialization.
inline Vec least_norm_control(const Model& m, const Vec& q, const Vec& w) {
  const Mat xi = m.anchor(q);
  Eigen::LLT<Mat> llt(m.metric(q));
  const Mat L = llt.matrixL();
  Mat B = Mat(L.transpose()).triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(xi);
  Eigen::JacobiSVD<Mat> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);
  const Vec v = svd.solve(w);
  return Mat(L.transpose()).triangularView<Eigen::Upper>().solve(v);
}

struct ModelCheckReport {
  bool ok = true;
  double min_metric_eig = std::numeric_limits<double>::infinity();
  double max_anchor_deriv_err = 0.0;
  double max_metric_deriv_err = 0.0;
  double max_duality_err = 0.0;
  std::string detail;
};

/// Probabilistic Model invariants: SPD metric on samples, and agreement of
/// anchor_deriv / metric_deriv with central finite differences (step 1e-5).
inline ModelCheckReport check_model(const Model& m, int samples = 16, uint64_t seed = 7,
                                    double fd_step = 1e-5, double tol = 1e-6) {
  ModelCheckReport rep;
  Rng rng = make_rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Vec q = normal_vec(rng, m.n, 0.5);
    const Vec u = normal_vec(rng, m.h);
    const Vec v = normal_vec(rng, m.h);
    const Vec p = normal_vec(rng, m.n);
    const Vec dq = unit_sphere(rng, m.n);

    Eigen::SelfAdjointEigenSolver<Mat> eig(m.metric(q));
    rep.min_metric_eig = std::min(rep.min_metric_eig, eig.eigenvalues().minCoeff());

    const Vec fd_anchor =
        (anchor_apply(m, q + fd_step * dq, u) - anchor_apply(m, q - fd_step * dq, u)) / (2 * fd_step);
    const Vec an = m.anchor_deriv(q, u, dq);
    rep.max_anchor_deriv_err =
        std::max(rep.max_anchor_deriv_err, (fd_anchor - an).norm() / std::max(1.0, fd_anchor.norm()));

    const double fd_metric = (u.dot(m.metric(q + fd_step * dq) * v) - u.dot(m.metric(q - fd_step * dq) * v)) /
                             (2 * fd_step);
    const double md = m.metric_deriv(q, u, v, dq);
    rep.max_metric_deriv_err =
        std::max(rep.max_metric_deriv_err, std::abs(fd_metric - md) / std::max(1.0, std::abs(fd_metric)));

    const double lhs = anchor_apply(m, q, u).dot(p);
    const double rhs = u.dot(anchor_adjoint(m, q, p));
    rep.max_duality_err =
        std::max(rep.max_duality_err, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  rep.ok = rep.min_metric_eig > 0 && rep.max_anchor_deriv_err <= tol && rep.max_metric_deriv_err <= tol &&
           rep.max_duality_err <= 1e-12;
  if (!rep.ok) rep.detail = "model invariant violated for " + m.name;
  return rep;
}

}  // namespace srlab

#endif  // SRLAB_MODEL_HPP
