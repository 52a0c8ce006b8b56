#ifndef SRLAB_DYNAMICS_HPP
#define SRLAB_DYNAMICS_HPP

/**
 * @file dynamics.hpp
 * @brief Horizontal systems on a chart: integration of q' = xi_q u, the
 *        endpoint map with its differential (variational equation) and
 *        adjoint (costate equation), action/length, extremal residuals.
 *
 * Controls are piecewise constant on a uniform grid over [0,1]; each grid
 * interval is integrated with a fixed number of RK4 substeps. The adjoint
 * returns per-interval averages of the dual control, which is the exact L^2
 * pairing partner of piecewise-constant variations up to integrator error.
 */

#include "srlab/model.hpp"
#include "srlab/numerics.hpp"
#include "srlab/types.hpp"

#include <utility>
#include <vector>

namespace srlab {

/// Piecewise-constant control on the uniform m-grid over [0,1].
struct ControlPath {
  Mat values;  // m x h

  int steps() const { return static_cast<int>(values.rows()); }
  int controls() const { return static_cast<int>(values.cols()); }

  static ControlPath zero(int m, int h) { return {Mat::Zero(m, h)}; }
  static ControlPath constant(int m, const Vec& u) {
    Mat v(m, u.size());
    v.rowwise() = u.transpose();
    return {v};
  }
  /// Sampled from a continuous control at interval midpoints.
  template <class F>
  static ControlPath sampled(int m, int h, F&& f) {
    Mat v(m, h);
    for (int k = 0; k < m; ++k) {
      const Vec uk = f((k + 0.5) / m);
      v.row(k) = uk.transpose();
    }
    return {v};
  }

  /// Grid L^2 inner product of two dual/primal control paths.
  static double grid_dot(const ControlPath& a, const ControlPath& b) {
    require(a.values.rows() == b.values.rows() && a.values.cols() == b.values.cols(),
            "grid_dot: grid mismatch");
    return a.values.cwiseProduct(b.values).sum() / a.steps();
  }
  double grid_norm() const { return std::sqrt(values.squaredNorm() / steps()); }
};

/// Time-sampled state path on the control grid (m+1 nodes).
struct Trajectory {
  Vec times;   // m+1
  Mat states;  // (m+1) x n

  Vec endpoint() const { return states.row(states.rows() - 1).transpose(); }
};

/// Time-sampled covector path on the control grid (m+1 nodes).
struct CostatePath {
  Vec times;      // m+1
  Mat covectors;  // (m+1) x n
};

namespace detail {

inline void check_state(const Vec& q, double t) {
  if (!q.allFinite() || q.norm() > kBlowupNorm) {
    throw IntegrationError("trajectory blow-up", t);
  }
}

}  // namespace detail

/// Integrates q' = xi_q u from q0 with classical RK4 (steps_per_interval
/// substeps per control interval). Deterministic given inputs.
inline Trajectory trajectory(const Model& model, const Vec& q0, const ControlPath& u,
                             int steps_per_interval = 4) {
  require(q0.size() == model.n, "trajectory: q0 dimension");
  require(u.controls() == model.h, "trajectory: control dimension");
  require(u.steps() >= 1 && steps_per_interval >= 1, "trajectory: grid");
  require(u.values.allFinite() && q0.allFinite(), "trajectory: non-finite input");
  const int m = u.steps();
  const double dt = 1.0 / m;
  const double hs = dt / steps_per_interval;
  Trajectory tr;
  tr.times = Vec::LinSpaced(m + 1, 0.0, 1.0);
  tr.states.resize(m + 1, model.n);
  Vec q = q0;
  tr.states.row(0) = q.transpose();
  for (int k = 0; k < m; ++k) {
    const Vec uk = u.values.row(k).transpose();
    auto f = [&](const Vec& x) { return Vec(model.anchor(x) * uk); };
    for (int s = 0; s < steps_per_interval; ++s) {
      q = rk4_step(f, q, hs);
      detail::check_state(q, k * dt + (s + 1) * hs);
    }
    tr.states.row(k + 1) = q.transpose();
  }
  return tr;
}

/// Final trajectory point E(q0, u).
inline Vec endpoint(const Model& model, const Vec& q0, const ControlPath& u,
                    int steps_per_interval = 4) {
  return trajectory(model, q0, u, steps_per_interval).endpoint();
}

/// Action 1/2 int g(u,u) dt with left-endpoint quadrature on the control grid
/// (matching the piecewise-constant controls).
inline double action(const Model& model, const Trajectory& tr, const ControlPath& u) {
  const int m = u.steps();
  double acc = 0.0;
  for (int k = 0; k < m; ++k) {
    const Vec qk = tr.states.row(k).transpose();
    const Vec uk = u.values.row(k).transpose();
    acc += uk.dot(model.metric(qk) * uk);
  }
  return 0.5 * acc / m;
}

inline double action(const Model& model, const Vec& q0, const ControlPath& u,
                     int steps_per_interval = 4) {
  return action(model, trajectory(model, q0, u, steps_per_interval), u);
}

/// Length int sqrt(g(u,u)) dt on the same grid quadrature.
inline double length(const Model& model, const Trajectory& tr, const ControlPath& u) {
  const int m = u.steps();
  double acc = 0.0;
  for (int k = 0; k < m; ++k) {
    const Vec qk = tr.states.row(k).transpose();
    const Vec uk = u.values.row(k).transpose();
    acc += std::sqrt(std::max(0.0, uk.dot(model.metric(qk) * uk)));
  }
  return acc / m;
}

inline double length(const Model& model, const Vec& q0, const ControlPath& u,
                     int steps_per_interval = 4) {
  return length(model, trajectory(model, q0, u, steps_per_interval), u);
}

/// dE(u).du via the variational equation dq' = d_q(xi u).dq + xi du,
/// integrated jointly with the base trajectory. Linear in du.
inline Vec endpoint_diff(const Model& model, const Vec& q0, const ControlPath& u,
                         const ControlPath& du, int steps_per_interval = 4) {
  require(u.steps() == du.steps() && u.controls() == du.controls(),
          "endpoint_diff: grids of u and du must match");
  const int n = model.n;
  const int m = u.steps();
  const double hs = 1.0 / m / steps_per_interval;
  Vec x(2 * n);
  x.head(n) = q0;
  x.tail(n).setZero();
  for (int k = 0; k < m; ++k) {
    const Vec uk = u.values.row(k).transpose();
    const Vec duk = du.values.row(k).transpose();
    auto f = [&](const Vec& s) {
      const Vec q = s.head(n);
      const Vec dq = s.tail(n);
      const Mat xi = model.anchor(q);
      Vec out(2 * n);
      out.head(n) = xi * uk;
      out.tail(n) = model.anchor_deriv(q, uk, dq) + xi * duk;
      return out;
    };
    for (int s = 0; s < steps_per_interval; ++s) {
      x = rk4_step(f, x, hs);
      detail::check_state(x, (k * steps_per_interval + s + 1) * hs);
    }
  }
  return x.tail(n);
}

struct AdjointResult {
  CostatePath costate;
  ControlPath rep;  // per-interval averages of lambda*g(u,.) - xi^* p
};

/// Backward costate sweep for the lambda-extremal expression
///   lambda dA(u) - dE(u)^* p1,
/// whose L^2 representative is t -> lambda g_{q}(u, .) - xi_q^* p along the
/// trajectory, with p solving p' = -(d_q(xi u))^* p + (lambda/2) d_q g(u,u),
/// p(1) = p1. The returned rep holds per-interval averages of the integrand.
inline AdjointResult adjoint_rep(const Model& model, const Trajectory& tr, const ControlPath& u,
                                 const Vec& p1, double lambda, int steps_per_interval = 4) {
  require(p1.size() == model.n, "adjoint_rep: p1 dimension");
  const int n = model.n;
  const int h = model.h;
  const int m = u.steps();
  const double dt = 1.0 / m;
  const double hs = dt / steps_per_interval;
  AdjointResult out;
  out.costate.times = tr.times;
  out.costate.covectors.resize(m + 1, n);
  out.rep.values.resize(m, h);
  Vec p = p1;
  out.costate.covectors.row(m) = p.transpose();
  for (int k = m - 1; k >= 0; --k) {
    const Vec uk = u.values.row(k).transpose();
    // Re-anchor the backward state on the stored forward node to keep the
    // costate consistent with the forward pass.
    Vec x(2 * n + h);
    x.head(n) = tr.states.row(k + 1).transpose();
    x.segment(n, n) = p;
    x.tail(h).setZero();
    auto f = [&](const Vec& s) {
      const Vec q = s.head(n);
      const Vec pp = s.segment(n, n);
      Vec out_state(2 * n + h);
      out_state.head(n) = model.anchor(q) * uk;
      Vec pdot = -model.anchor_deriv_adj(q, uk, pp);
      if (lambda != 0.0) pdot += 0.5 * lambda * model.metric_grad(q, uk, uk);
      out_state.segment(n, n) = pdot;
      Vec integrand = -(model.anchor(q).transpose() * pp);
      if (lambda != 0.0) integrand += lambda * (model.metric(q) * uk);
      out_state.tail(h) = integrand;
      return out_state;
    };
    for (int s = 0; s < steps_per_interval; ++s) {
      x = rk4_step(f, x, -hs);
      detail::check_state(x, (k + 1) * dt - (s + 1) * hs);
    }
    p = x.segment(n, n);
    out.costate.covectors.row(k) = p.transpose();
    // Backward accumulation over [t_k, t_{k+1}] picks up a sign.
    out.rep.values.row(k) = (-x.tail(h) / dt).transpose();
  }
  return out;
}

/// Costate path and the L^2 representative of dE(u)^* p1,
/// namely t -> xi_{q(t)}^* p(t) (per-interval averages).
inline AdjointResult endpoint_adjoint(const Model& model, const Vec& q0, const ControlPath& u,
                                      const Vec& p1, int steps_per_interval = 4) {
  const Trajectory tr = trajectory(model, q0, u, steps_per_interval);
  AdjointResult res = adjoint_rep(model, tr, u, p1, 0.0, steps_per_interval);
  res.rep.values = -res.rep.values;  // lambda = 0 integrand is -xi^* p
  return res;
}

/// Grid-L^2 norm of t -> lambda g_q(u,.) - xi_q^* p with p(1) = p1; zero iff
/// (u, p1) satisfies the lambda-extremal condition on the grid.
inline double extremal_residual(const Model& model, const Vec& q0, const ControlPath& u,
                                const Vec& p1, double lambda, int steps_per_interval = 4) {
  require(lambda == 0.0 || lambda == 1.0, "extremal_residual: lambda in {0,1}");
  const Trajectory tr = trajectory(model, q0, u, steps_per_interval);
  const AdjointResult res = adjoint_rep(model, tr, u, p1, lambda, steps_per_interval);
  return res.rep.grid_norm();
}

}  // namespace srlab

#endif  // SRLAB_DYNAMICS_HPP
