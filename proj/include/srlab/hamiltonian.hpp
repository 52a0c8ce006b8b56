#ifndef SRLAB_HAMILTONIAN_HPP
#define SRLAB_HAMILTONIAN_HPP

/**
 * @file hamiltonian.hpp
 * @brief Normal Hamiltonian h(q,p) = 1/2 g(u(q,p),u(q,p)) with
 *        u(q,p) = G^{-1} xi^* p, its symplectic gradient, geodesic shooting,
 *        the exponential map and two-point shooting BVPs.
 *
 * Plain RK4 is used instead of a symplectic scheme: trajectories are short
 * and conservation is monitored by tests rather than enforced.
 */

#include "srlab/dynamics.hpp"
#include "srlab/model.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace srlab {

struct PhasePoint {
  Vec q;
  Vec p;
};

/// Solution samples of the normal Hamiltonian flow, with the realized
/// control u(t) = u(q(t), p(t)) recorded at every node.
struct PhaseTrajectory {
  double T = 1.0;
  Vec times;  // steps+1 nodes in [0, T]
  Mat q;      // (steps+1) x n
  Mat p;      // (steps+1) x n
  Mat u;      // (steps+1) x h

  int steps() const { return static_cast<int>(times.size()) - 1; }
  PhasePoint initial() const { return {q.row(0).transpose(), p.row(0).transpose()}; }
  PhasePoint final() const {
    const int m = steps();
    return {q.row(m).transpose(), p.row(m).transpose()};
  }
};

/// u(q,p) = G_q^{-1} xi_q^* p, the unique solution of d_u H^1 = 0.
inline Vec normal_control(const Model& m, const Vec& q, const Vec& p) {
  return metric_solve(m, q, anchor_adjoint(m, q, p));
}

/// h(q,p) = 1/2 g_q(u(q,p), u(q,p)) >= 0.
inline double normal_hamiltonian(const Model& m, const Vec& q, const Vec& p) {
  const Vec w = anchor_adjoint(m, q, p);
  const Vec u = metric_solve(m, q, w);
  return 0.5 * u.dot(w);
}

/// Symplectic gradient of h in canonical coordinates:
///   qdot = xi_q u,  pdot = 1/2 d_q g(u,u) - (d_q xi_q u)^* p,  u = u(q,p).
inline std::pair<Vec, Vec> symplectic_gradient(const Model& m, const Vec& q, const Vec& p) {
  const Vec u = normal_control(m, q, p);
  Vec qdot = m.anchor(q) * u;
  Vec pdot = 0.5 * m.metric_grad(q, u, u) - m.anchor_deriv_adj(q, u, p);
  return {std::move(qdot), std::move(pdot)};
}

namespace detail {

inline Vec phase_rhs(const Model& m, const Vec& x) {
  const int n = m.n;
  auto [qd, pd] = symplectic_gradient(m, x.head(n), x.tail(n));
  Vec out(2 * n);
  out.head(n) = qd;
  out.tail(n) = pd;
  return out;
}

inline Vec flow_phase(const Model& m, const Vec& q0, const Vec& p0, double T, int steps) {
  Vec x(2 * m.n);
  x.head(m.n) = q0;
  x.tail(m.n) = p0;
  const double hs = T / steps;
  auto f = [&](const Vec& s) { return phase_rhs(m, s); };
  for (int k = 0; k < steps; ++k) {
    x = rk4_step(f, x, hs);
    check_state(x, (k + 1) * hs);
  }
  return x;
}

}  // namespace detail

/// RK4 on the normal Hamiltonian system from (q0, p0) over [0, T].
inline PhaseTrajectory geodesic_shoot(const Model& m, const Vec& q0, const Vec& p0, double T,
                                      int steps) {
  require(q0.size() == m.n && p0.size() == m.n, "geodesic_shoot: dimensions");
  require(steps >= 1, "geodesic_shoot: steps >= 1");
  PhaseTrajectory tr;
  tr.T = T;
  tr.times = Vec::LinSpaced(steps + 1, 0.0, T);
  tr.q.resize(steps + 1, m.n);
  tr.p.resize(steps + 1, m.n);
  tr.u.resize(steps + 1, m.h);
  Vec x(2 * m.n);
  x.head(m.n) = q0;
  x.tail(m.n) = p0;
  const double hs = T / steps;
  auto f = [&](const Vec& s) { return detail::phase_rhs(m, s); };
  for (int k = 0;; ++k) {
    tr.q.row(k) = x.head(m.n).transpose();
    tr.p.row(k) = x.tail(m.n).transpose();
    tr.u.row(k) = normal_control(m, x.head(m.n), x.tail(m.n)).transpose();
    if (k == steps) break;
    x = rk4_step(f, x, hs);
    detail::check_state(x, (k + 1) * hs);
  }
  return tr;
}

/// exp_{q0}(p0): endpoint of the normal flow at T = 1.
inline Vec exp_map(const Model& m, const Vec& q0, const Vec& p0, int steps = 1000) {
  return detail::flow_phase(m, q0, p0, 1.0, steps).head(m.n);
}

/// Converts a shot phase trajectory to a piecewise-constant ControlPath on
/// [0,1] (interval-averaged controls, time-rescaled by T).
inline ControlPath to_control_path(const PhaseTrajectory& tr) {
  const int m = tr.steps();
  Mat v(m, tr.u.cols());
  for (int k = 0; k < m; ++k) {
    v.row(k) = 0.5 * tr.T * (tr.u.row(k) + tr.u.row(k + 1));
  }
  return {v};
}

struct BvpOptions {
  double tol = 1e-9;       ///< endpoint residual for success
  int max_iter = 100;
  double fd_step = 1e-6;   ///< scaled by max(1, |p0|)
  double lm_init = 1e-4;   ///< initial Levenberg damping
  double lm_up = 10.0;     ///< damping increase on rejection
  double lm_down = 0.25;   ///< damping decrease on acceptance
  int shoot_steps = 1000;
};

struct BvpResult {
  bool success = false;
  Vec p0;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<double> residual_history;
  std::string message;
  PhaseTrajectory trajectory;
};

/// Damped Gauss-Newton / Levenberg-Marquardt on F(p0) = exp(q0, p0) - q1
/// with finite-difference Jacobian. Returns the best iterate either way.
inline BvpResult shoot_bvp(const Model& m, const Vec& q0, const Vec& q1, const Vec& p0_init,
                           const BvpOptions& opt = {}) {
  require(q0.size() == m.n && q1.size() == m.n && p0_init.size() == m.n, "shoot_bvp: dimensions");
  require(p0_init.allFinite(), "shoot_bvp: p0_init must be finite");
  const int n = m.n;
  auto residual_of = [&](const Vec& p0) -> Vec {
    return exp_map(m, q0, p0, opt.shoot_steps) - q1;
  };

  BvpResult out;
  Vec p = p0_init;
  Vec r;
  try {
    r = residual_of(p);
  } catch (const IntegrationError& e) {
    out.message = std::string("initial shot blew up: ") + e.what();
    out.p0 = p;
    return out;
  }
  double rn = r.norm();
  out.p0 = p;
  out.residual = rn;
  out.residual_history.push_back(rn);
  double lm = opt.lm_init;

  for (int it = 0; it < opt.max_iter && rn > opt.tol; ++it) {
    out.iterations = it + 1;
    const double step = opt.fd_step * std::max(1.0, p.norm());
    Mat J(n, n);
    bool jac_ok = true;
    for (int j = 0; j < n; ++j) {
      Vec pj = p;
      pj[j] += step;
      try {
        J.col(j) = (residual_of(pj) - r) / step;
      } catch (const IntegrationError&) {
        jac_ok = false;
        break;
      }
    }
    if (!jac_ok) {
      out.message = "finite-difference Jacobian blew up";
      break;
    }
    const Mat JtJ = J.transpose() * J;
    const Vec g = J.transpose() * r;
    bool accepted = false;
    for (int inner = 0; inner < 10; ++inner) {
      Mat A = JtJ;
      A.diagonal().array() += lm * (JtJ.diagonal().array().abs() + 1e-12);
      const Vec dp = A.ldlt().solve(-g);
      Vec p_try = p + dp;
      double rn_try = std::numeric_limits<double>::infinity();
      Vec r_try;
      try {
        r_try = residual_of(p_try);
        rn_try = r_try.norm();
      } catch (const IntegrationError&) {
      }
      if (rn_try < rn) {
        p = std::move(p_try);
        r = std::move(r_try);
        rn = rn_try;
        lm = std::max(1e-12, lm * opt.lm_down);
        accepted = true;
        break;
      }
      lm *= opt.lm_up;  // singular or overshooting Jacobian: damp harder
    }
    out.residual_history.push_back(rn);
    if (rn < out.residual) {
      out.residual = rn;
      out.p0 = p;
    }
    if (!accepted) {
      out.message = "no descent step accepted (damping exhausted)";
      break;
    }
  }

  out.success = out.residual <= opt.tol;
  if (out.message.empty() && !out.success) out.message = "max iterations reached";
  out.trajectory = geodesic_shoot(m, q0, out.p0, 1.0, opt.shoot_steps);
  return out;
}

struct MinimalityReport {
  bool pass = false;
  int trials = 0;
  double magnitude = 0.0;
  double base_action = 0.0;
  double min_action_delta = 0.0;
  double threshold = 0.0;          ///< second-order tolerance (negative)
  double max_endpoint_drift = 0.0;
};

/// Empirical local-minimality check of a candidate control: random control
/// perturbations are projected onto the numerical kernel of dE(u) (least
/// squares through the endpoint-adjoint Gram), re-integrated, and the
/// minimum action difference reported. The projected steepest-descent
/// direction of the action is always included as trial 0, so non-extremal
/// controls fail at first order.
inline MinimalityReport verify_local_minimality(const Model& m, const Vec& q0,
                                                const ControlPath& u, int trials,
                                                double magnitude, uint64_t seed = 17,
                                                int steps_per_interval = 4,
                                                double scale_hint = 1.0) {
  const int grid = u.steps();
  const int h = u.controls();
  const Trajectory tr = trajectory(m, q0, u, steps_per_interval);
  const Vec e0 = tr.endpoint();
  const double a0 = action(m, tr, u);

  // Row space of dE(u): duals of the n basis covectors.
  std::vector<ControlPath> duals;
  duals.reserve(m.n);
  Mat gram(m.n, m.n);
  for (int i = 0; i < m.n; ++i) {
    Vec ei = Vec::Zero(m.n);
    ei[i] = 1.0;
    duals.push_back(adjoint_rep(m, tr, u, ei, 0.0, steps_per_interval).rep);
    duals.back().values = -duals.back().values;  // xi^* p convention
  }
  for (int i = 0; i < m.n; ++i) {
    for (int j = 0; j <= i; ++j) {
      gram(i, j) = gram(j, i) = ControlPath::grid_dot(duals[i], duals[j]);
    }
  }
  Eigen::JacobiSVD<Mat> svd(gram, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);

  auto project_kernel = [&](const ControlPath& d) {
    Vec b(m.n);
    for (int i = 0; i < m.n; ++i) b[i] = ControlPath::grid_dot(duals[i], d);
    const Vec coef = svd.solve(b);
    ControlPath out = d;
    for (int i = 0; i < m.n; ++i) out.values -= coef[i] * duals[i].values;
    return out;
  };

  // dA(u) representative (lambda = 1, p1 = 0).
  ControlPath grad_a = adjoint_rep(m, tr, u, Vec::Zero(m.n), 1.0, steps_per_interval).rep;

  MinimalityReport rep;
  rep.trials = trials;
  rep.magnitude = magnitude;
  rep.base_action = a0;
  rep.min_action_delta = std::numeric_limits<double>::infinity();
  rep.threshold = -20.0 * magnitude * magnitude * std::max({1.0, a0, scale_hint});

  Rng rng = make_rng(seed);
  for (int t = 0; t < trials; ++t) {
    ControlPath d{Mat(grid, h)};
    if (t == 0) {
      d.values = -grad_a.values;
    } else {
      for (int k = 0; k < grid; ++k) {
        d.values.row(k) = normal_vec(rng, h).transpose();
      }
    }
    ControlPath dk = project_kernel(d);
    const double dn = dk.grid_norm();
    if (dn < 1e-14) continue;
    dk.values *= magnitude / dn;
    ControlPath u_try = u;
    u_try.values += dk.values;
    const Trajectory tr_try = trajectory(m, q0, u_try, steps_per_interval);
    const double delta = action(m, tr_try, u_try) - a0;
    rep.min_action_delta = std::min(rep.min_action_delta, delta);
    rep.max_endpoint_drift = std::max(rep.max_endpoint_drift, (tr_try.endpoint() - e0).norm());
  }
  if (!std::isfinite(rep.min_action_delta)) rep.min_action_delta = 0.0;  // zero geodesic
  rep.pass = rep.min_action_delta >= rep.threshold;
  return rep;
}

/// Convenience wrapper for shot trajectories.
inline MinimalityReport verify_local_minimality(const Model& m, const Vec& q0,
                                                const PhaseTrajectory& shot, int trials,
                                                double magnitude, uint64_t seed = 17,
                                                int steps_per_interval = 4) {
  const double p1n = shot.p.row(shot.steps()).norm();
  return verify_local_minimality(m, q0, to_control_path(shot), trials, magnitude, seed,
                                 steps_per_interval, p1n);
}

/// Max deviation of h(q(t), p(t)) from its initial value along a shot.
inline double hamiltonian_drift(const Model& m, const PhaseTrajectory& tr) {
  const double h0 = normal_hamiltonian(m, tr.q.row(0).transpose(), tr.p.row(0).transpose());
  double drift = 0.0;
  for (int k = 0; k <= tr.steps(); ++k) {
    const double hk = normal_hamiltonian(m, tr.q.row(k).transpose(), tr.p.row(k).transpose());
    drift = std::max(drift, std::abs(hk - h0));
  }
  return drift;
}

}  // namespace srlab

#endif  // SRLAB_HAMILTONIAN_HPP
