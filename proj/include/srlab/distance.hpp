#ifndef SRLAB_DISTANCE_HPP
#define SRLAB_DISTANCE_HPP

/**
 * @file distance.hpp
 * @brief Sub-Riemannian distance by adjoint-gradient optimal control
 *        (quadratic-penalty homotopy) and by multistart shooting, the
 *        normal/abnormal/unclassified extremal classifier, and ball-box
 *        exponent fits.
 */

#include "srlab/dynamics.hpp"
#include "srlab/hamiltonian.hpp"
#include "srlab/model.hpp"
#include "srlab/numerics.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace srlab {

struct DistanceOptions {
  int m = 256;                   ///< control grid of the direct method
  int steps_per_interval = 4;
  std::vector<double> penalty_schedule = {1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7};
  int steps_per_stage = 200;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  double tol_ep = 1e-6;          ///< endpoint feasibility in chart units
  int multistarts = 16;
  int bvp_steps = 2048;          ///< flow resolution of the shooting leg
  uint64_t seed = 1;
  bool run_direct = true;
  bool run_shooting = true;
};

struct SolverDiagnostics {
  int iterations = 0;
  std::vector<double> penalty_history;
  double final_grad_norm = 0.0;
  double endpoint_error = std::numeric_limits<double>::infinity();
  std::string message;
};

struct DistanceResult {
  bool success = false;
  double distance = std::numeric_limits<double>::infinity();
  ControlPath control;
  double endpoint_error = std::numeric_limits<double>::infinity();
  std::string method;  ///< direct | shooting | best-of
  SolverDiagnostics diag;
};

namespace detail {

/// Straight-chart-line control via per-step least-g-norm solves. When part
/// of the displacement is outside the anchor range, a loop-shaped wiggle is
/// added on top; its harmonic pattern, sign and amplitude are picked by a
/// deterministic grid search over the initial endpoint error, so targets
/// reachable only through brackets do not start on the zero-control saddle.
inline ControlPath direct_init(const Model& m, const Vec& q0, const Vec& q1, int grid) {
  const Vec delta = q1 - q0;
  ControlPath u = ControlPath::zero(grid, m.h);
  for (int k = 0; k < grid; ++k) {
    const double t = (k + 0.5) / grid;
    const Vec qline = q0 + t * delta;
    u.values.row(k) = least_norm_control(m, qline, delta).transpose();
  }
  const Vec in_range = anchor_apply(m, q0, least_norm_control(m, q0, delta));
  const double resid = (delta - in_range).norm();
  if (resid < 1e-14) return u;

  // Closed-loop harmonic shapes per control pair: (cos, sin) excites the
  // first bracket layer, (cos, cos 2.) the second.
  auto shape = [&](int which, int a, double t) {
    const bool even = (a % 2 == 0);
    if (which == 0) return even ? std::cos(2 * M_PI * t) : std::sin(2 * M_PI * t);
    return even ? std::cos(2 * M_PI * t) : std::cos(4 * M_PI * t);
  };
  double best_err = std::numeric_limits<double>::infinity();
  ControlPath best = u;
  for (int which = 0; which < 2; ++which) {
    for (double amp = 0.25; amp <= 16.0; amp *= std::sqrt(2.0)) {
      for (double sign : {1.0, -1.0}) {
        ControlPath cand = u;
        for (int k = 0; k < grid; ++k) {
          const double t = (k + 0.5) / grid;
          for (int a = 0; a < m.h; ++a) cand.values(k, a) += sign * amp * shape(which, a, t);
        }
        double err = std::numeric_limits<double>::infinity();
        try {
          err = (trajectory(m, q0, cand, 2).endpoint() - q1).norm();
        } catch (const IntegrationError&) {
        }
        if (err < best_err) {
          best_err = err;
          best = std::move(cand);
        }
      }
    }
  }
  return best;
}

}  // namespace detail

/// Minimizes A(u) + mu_k |E(u) - q1|^2 by Armijo gradient descent with the
/// adjoint-assembled gradient, increasing mu tenfold per stage.
inline DistanceResult distance_direct(const Model& model, const Vec& q0, const Vec& q1,
                                      const DistanceOptions& opt = {}) {
  require(opt.m >= 8, "distance_direct: m >= 8");
  require(q0.size() == model.n && q1.size() == model.n, "distance_direct: dimensions");
  DistanceResult out;
  out.method = "direct";

  if ((q1 - q0).norm() == 0.0) {
    out.success = true;
    out.distance = 0.0;
    out.control = ControlPath::zero(opt.m, model.h);
    out.endpoint_error = 0.0;
    return out;
  }

  const ControlPath fresh = detail::direct_init(model, q0, q1, opt.m);
  ControlPath u = fresh;
  const int spi = opt.steps_per_interval;
  double alpha = 0.1;
  int total_iters = 0;

  auto objective = [&](const ControlPath& c, double mu, double* ep_err) {
    const Trajectory tr = trajectory(model, q0, c, spi);
    const double err = (tr.endpoint() - q1).norm();
    if (ep_err) *ep_err = err;
    return action(model, tr, c) + mu * err * err;
  };

  double ep_err = std::numeric_limits<double>::infinity();
  double grad_norm = 0.0;
  for (double mu : opt.penalty_schedule) {
    out.diag.penalty_history.push_back(mu);
    // Small penalty weights can contract the control toward the zero-control
    // saddle; restart the stage from the fresh init whenever that scores
    // better under the current weight.
    {
      double ep_cur = 0.0, ep_new = 0.0;
      const double j_cur = objective(u, mu, &ep_cur);
      const double j_new = objective(fresh, mu, &ep_new);
      if (j_new < j_cur) {
        u = fresh;
        alpha = 0.1;
      }
    }
    double j_prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt.steps_per_stage; ++it) {
      ++total_iters;
      const Trajectory tr = trajectory(model, q0, u, spi);
      const Vec err_vec = tr.endpoint() - q1;
      ep_err = err_vec.norm();
      const double j0 = action(model, tr, u) + mu * ep_err * ep_err;
      if (ep_err <= 0.3 * opt.tol_ep) break;
      if (j_prev - j0 < 1e-12 * std::max(1.0, j0) && it > 0) break;  // stage converged
      j_prev = j0;
      // Gradient representative of A + mu*|E-q1|^2: lambda=1 costate with
      // p(1) = -2 mu (E - q1).
      const ControlPath grad = adjoint_rep(model, tr, u, Vec(-2.0 * mu * err_vec), 1.0, spi).rep;
      grad_norm = grad.grid_norm();
      if (grad_norm < 1e-10 * std::max(1.0, j0)) break;
      bool accepted = false;
      alpha = std::min(alpha * 2.0, 1e2);
      while (alpha > 1e-16) {
        ControlPath u_try = u;
        u_try.values -= alpha * grad.values;
        double ep_try = 0.0;
        double j_try = std::numeric_limits<double>::infinity();
        try {
          j_try = objective(u_try, mu, &ep_try);
        } catch (const IntegrationError&) {
        }
        if (j_try <= j0 - opt.armijo_c * alpha * grad_norm * grad_norm) {
          u = std::move(u_try);
          ep_err = ep_try;
          accepted = true;
          break;
        }
        alpha *= opt.backtrack;
      }
      if (!accepted) break;  // stage stagnated at line-search resolution
    }
    if (ep_err <= 0.3 * opt.tol_ep) break;
  }

  const Trajectory tr = trajectory(model, q0, u, spi);
  out.control = u;
  out.distance = length(model, tr, u);
  out.endpoint_error = (tr.endpoint() - q1).norm();
  out.success = out.endpoint_error <= opt.tol_ep;
  out.diag.iterations = total_iters;
  out.diag.final_grad_norm = grad_norm;
  out.diag.endpoint_error = out.endpoint_error;
  if (!out.success) {
    out.diag.message = "penalty schedule exhausted: endpoint error " +
                       std::to_string(out.endpoint_error) + ", grad " + std::to_string(grad_norm);
  }
  return out;
}

namespace detail {

/// Deterministic multistart covectors: a linearized least-squares start plus
/// seeded directions over a radius ladder scaled by the chart distance.
inline std::vector<Vec> shooting_starts(const Model& m, const Vec& q0, const Vec& q1,
                                        int count, uint64_t seed) {
  std::vector<Vec> starts;
  starts.reserve(count);
  const Vec delta = q1 - q0;
  {
    const Mat xi = m.anchor(q0);
    Eigen::LLT<Mat> llt(m.metric(q0));
    const Mat K = xi * llt.solve(Mat(xi.transpose()));
    Eigen::JacobiSVD<Mat> svd(K, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    starts.push_back(svd.solve(delta));
  }
  Rng rng = make_rng(seed);
  const double scale = std::max(1.0, delta.norm());
  const double radii[4] = {1.0, 2.0, 4.0, 8.0};
  int k = 0;
  while (static_cast<int>(starts.size()) < count) {
    const Vec dir = unit_sphere(rng, m.n);
    starts.push_back(dir * (radii[k % 4] * scale));
    ++k;
  }
  return starts;
}

}  // namespace detail

/// Multistart shooting leg: inverts the exponential map toward q1 and keeps
/// the shortest start that meets the endpoint tolerance.
inline DistanceResult distance_shooting(const Model& model, const Vec& q0, const Vec& q1,
                                        const DistanceOptions& opt = {}) {
  DistanceResult out;
  out.method = "shooting";
  if ((q1 - q0).norm() == 0.0) {
    out.success = true;
    out.distance = 0.0;
    out.control = ControlPath::zero(opt.m, model.h);
    out.endpoint_error = 0.0;
    return out;
  }
  const auto starts = detail::shooting_starts(model, q0, q1, opt.multistarts, opt.seed);
  // Search phase on a coarse flow; the winner is re-polished at full
  // resolution before the control path is extracted.
  BvpOptions search;
  search.shoot_steps = 512;
  search.max_iter = 40;
  struct Leg {
    bool ok = false;
    double len = std::numeric_limits<double>::infinity();
    Vec p0;
  };
  std::vector<Leg> legs(starts.size());
  parallel_for(static_cast<int>(starts.size()), [&](int i) {
    BvpResult r;
    try {
      r = shoot_bvp(model, q0, q1, starts[i], search);
    } catch (const IntegrationError&) {
      return;
    }
    if (r.residual > opt.tol_ep) return;
    legs[i] = {true, std::sqrt(2.0 * normal_hamiltonian(model, q0, r.p0)), r.p0};
  });
  int best = -1;
  for (int i = 0; i < static_cast<int>(legs.size()); ++i) {
    if (legs[i].ok && (best < 0 || legs[i].len < legs[best].len)) best = i;
  }
  if (best < 0) {
    out.diag.message = "no multistart converged within tolerance";
    return out;
  }
  // Replay error of the extracted piecewise-constant control shrinks like
  // steps^-2; double the polish resolution until the replay meets tol_ep.
  BvpOptions polish;
  polish.max_iter = 40;
  for (int steps = opt.bvp_steps; steps <= 4 * opt.bvp_steps; steps *= 2) {
    polish.shoot_steps = steps;
    const BvpResult refined = shoot_bvp(model, q0, q1, legs[best].p0, polish);
    out.control = to_control_path(refined.trajectory);
    const Trajectory tr = trajectory(model, q0, out.control, opt.steps_per_interval);
    out.distance = length(model, tr, out.control);
    out.endpoint_error = (tr.endpoint() - q1).norm();
    out.success = out.endpoint_error <= opt.tol_ep;
    if (out.success) break;
  }
  if (!out.success) out.diag.message = "polished control replay missed the tolerance";
  out.diag.endpoint_error = out.endpoint_error;
  out.diag.iterations = static_cast<int>(starts.size());
  return out;
}

/// Runs both methods and returns the shorter admissible result; a >2%
/// disagreement between the two is flagged in the diagnostics.
inline DistanceResult distance_best(const Model& model, const Vec& q0, const Vec& q1,
                                    const DistanceOptions& opt = {}) {
  DistanceResult direct, shooting;
  if (opt.run_direct) direct = distance_direct(model, q0, q1, opt);
  if (opt.run_shooting) shooting = distance_shooting(model, q0, q1, opt);

  DistanceResult out;
  out.method = "best-of";
  if (!direct.success && !shooting.success) {
    out.diag.message = "both methods failed; direct: " + direct.diag.message +
                       "; shooting: " + shooting.diag.message;
    return out;
  }
  const DistanceResult& winner =
      (!shooting.success || (direct.success && direct.distance < shooting.distance)) ? direct
                                                                                     : shooting;
  out.success = true;
  out.distance = winner.distance;
  out.control = winner.control;
  out.endpoint_error = winner.endpoint_error;
  out.diag = winner.diag;
  out.diag.message = "winner: " + winner.method;
  if (direct.success && shooting.success) {
    const double rel = std::abs(direct.distance - shooting.distance) /
                       std::max({direct.distance, shooting.distance, 1e-12});
    if (rel > 0.02) {
      out.diag.message += "; methods disagree by " + std::to_string(100 * rel) + "%";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Extremal classification
// ---------------------------------------------------------------------------

enum class ExtremalClass { Normal, Abnormal, Unclassified };

inline std::string to_string(ExtremalClass c) {
  switch (c) {
    case ExtremalClass::Normal: return "normal";
    case ExtremalClass::Abnormal: return "abnormal";
    default: return "unclassified";
  }
}

struct ExtremalCertificate {
  ExtremalClass cls = ExtremalClass::Unclassified;
  Vec p1;                       ///< multiplier (normal) or annihilator (abnormal)
  double normal_residual = std::numeric_limits<double>::infinity();
  double abnormal_sigma_min = std::numeric_limits<double>::infinity();
  Vec gram_spectrum;            ///< singular values of the adjoint Gram
  int gram_rank = 0;
};

/// Builds the discrete adjoint operator p1 -> dE(u)^* p1 column by column,
/// solves least squares dE^* p1 ~ dA for the normal test and inspects the
/// Gram spectrum for the abnormal test (sigma_min <= tol_rank * sigma_max).
inline ExtremalCertificate classify_extremal(const Model& model, const Vec& q0,
                                             const ControlPath& u, double tol = 1e-6,
                                             int steps_per_interval = 4,
                                             double tol_rank = 1e-8) {
  const Trajectory tr = trajectory(model, q0, u, steps_per_interval);
  const int n = model.n;
  std::vector<ControlPath> duals;
  duals.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vec ei = Vec::Zero(n);
    ei[i] = 1.0;
    ControlPath rep = adjoint_rep(model, tr, u, ei, 0.0, steps_per_interval).rep;
    rep.values = -rep.values;  // dE^* e_i representative is +xi^* p
    duals.push_back(std::move(rep));
  }
  Mat gram(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      gram(i, j) = gram(j, i) = ControlPath::grid_dot(duals[i], duals[j]);
    }
  }
  Eigen::JacobiSVD<Mat> svd(gram, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ExtremalCertificate cert;
  // Gram is dE dE^*; its singular values are squares of the operator's.
  cert.gram_spectrum = svd.singularValues().cwiseMax(0.0).cwiseSqrt();
  const double smax = cert.gram_spectrum[0];
  cert.abnormal_sigma_min = cert.gram_spectrum[n - 1];
  for (int i = 0; i < n; ++i) {
    if (cert.gram_spectrum[i] > tol_rank * smax) ++cert.gram_rank;
  }

  const ControlPath grad_a = adjoint_rep(model, tr, u, Vec::Zero(n), 1.0, steps_per_interval).rep;
  const double ga_norm = grad_a.grid_norm();

  if (ga_norm > 1e-10) {
    // Normal test: least-squares multiplier through the Gram.
    Vec b(n);
    for (int i = 0; i < n; ++i) b[i] = ControlPath::grid_dot(duals[i], grad_a);
    Eigen::JacobiSVD<Mat> gsvd(gram, Eigen::ComputeThinU | Eigen::ComputeThinV);
    gsvd.setThreshold(1e-12);
    const Vec p1 = gsvd.solve(b);
    ControlPath resid = grad_a;
    for (int i = 0; i < n; ++i) resid.values -= p1[i] * duals[i].values;
    cert.normal_residual = resid.grid_norm();
    if (cert.normal_residual <= tol * std::max(1.0, ga_norm)) {
      cert.cls = ExtremalClass::Normal;
      cert.p1 = p1;
      return cert;
    }
  } else {
    cert.normal_residual = ga_norm;  // degenerate dA; fall through to the rank test
  }

  if (cert.abnormal_sigma_min <= tol_rank * smax) {
    cert.cls = ExtremalClass::Abnormal;
    cert.p1 = svd.matrixU().col(n - 1);
    return cert;
  }
  cert.cls = ExtremalClass::Unclassified;
  return cert;
}

// ---------------------------------------------------------------------------
// Ball-box exponent fits
// ---------------------------------------------------------------------------

struct BallboxRow {
  double scale = 0.0;
  double distance = 0.0;
  bool success = false;
};

struct BallboxFit {
  double exponent = 0.0;
  double r2 = 0.0;
  int successes = 0;
  std::vector<BallboxRow> table;
  bool ok = false;  ///< at least 3 successful scales and a valid fit
};

/// Computes d(q0, q0 + s*direction) across scales and fits the slope of
/// log d against log s.
inline BallboxFit ballbox_fit(const Model& model, const Vec& q0, const Vec& direction,
                              const std::vector<double>& scales, const DistanceOptions& opt = {}) {
  require(direction.size() == model.n, "ballbox_fit: direction dimension");
  for (size_t i = 1; i < scales.size(); ++i) {
    require(scales[i] > 0 && scales[i] < scales[i - 1], "ballbox_fit: scales positive, decreasing");
  }
  BallboxFit out;
  out.table.resize(scales.size());
  parallel_for(static_cast<int>(scales.size()), [&](int i) {
    BallboxRow row;
    row.scale = scales[i];
    const Vec q1 = q0 + scales[i] * direction;
    const DistanceResult r = distance_best(model, q0, q1, opt);
    row.success = r.success && r.distance > 0;
    row.distance = r.distance;
    out.table[i] = row;
  });
  std::vector<double> xs, ys;
  for (const auto& row : out.table) {
    if (row.success) {
      xs.push_back(row.scale);
      ys.push_back(row.distance);
      ++out.successes;
    }
  }
  if (out.successes >= 3) {
    const LineFit fit = loglog_fit(xs, ys);
    out.exponent = fit.slope;
    out.r2 = fit.r2;
    out.ok = true;
  }
  return out;
}

}  // namespace srlab

#endif  // SRLAB_DISTANCE_HPP
