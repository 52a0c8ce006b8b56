#ifndef SRLAB_BRACKETS_HPP
#define SRLAB_BRACKETS_HPP

/**
 * @file brackets.hpp
 * @brief Lie-bracket machinery: iterated bracket spans and growth vectors
 *        (Chow-Rashevski rank test), commutator flows, and the constructive
 *        strong-CR steering planner.
 *
 * Bracket words index frame fields (1-based). A word I = (i_1,...,i_j)
 * denotes the iterated bracket X_I = [X_{i_j}, [... [X_{i_2}, X_{i_1}] ...]].
 *
 * The reparametrized commutator motion realizes
 *   Phi_I(u, q) = q + [X(u), X_I](q) + o(u)
 * as a concatenation of horizontal arcs: the standard group commutator with
 * exact inverse arc sequences, applied at scale t = |u|^{1/(i+1)} with field
 * amplitude u / |u|^{i/(i+1)}.
 */

#include "srlab/dynamics.hpp"
#include "srlab/model.hpp"
#include "srlab/numerics.hpp"
#include "srlab/poly.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace srlab {

/// A vector field as evaluation + Jacobian closures.
struct VectorField {
  std::function<Vec(const Vec&)> eval;
  std::function<Mat(const Vec&)> jac;
};

/// Frame field j (1-based) of a model with an analytic frame.
inline VectorField frame_field(const Model& m, int j) {
  require(m.has_frame(), "frame_field: model has no frame");
  require(j >= 1 && j <= m.h, "frame_field: index out of range");
  const PolyVectorField f = m.frame[j - 1];
  return {[f](const Vec& q) { return f.eval(q); }, [f](const Vec& q) { return f.jacobian(q); }};
}

/// Horizontal field X_u(q) = xi_q u for a constant control u. The Jacobian
/// is analytic when the model has a frame, otherwise central differences
/// with step 1e-5.
inline VectorField horizontal_field(const Model& m, const Vec& u) {
  require(u.size() == m.h, "horizontal_field: control dimension");
  if (m.has_frame()) {
    PolyVectorField f(m.n);
    for (int j = 0; j < m.h; ++j) {
      if (u[j] != 0.0) f = f + m.frame[j] * u[j];
    }
    return {[f](const Vec& q) { return f.eval(q); }, [f](const Vec& q) { return f.jacobian(q); }};
  }
  auto eval = [&m, u](const Vec& q) { return Vec(m.anchor(q) * u); };
  auto jac = [&m, u](const Vec& q) {
    const double step = 1e-5;
    Mat J(m.n, m.n);
    Vec e = Vec::Zero(m.n);
    for (int j = 0; j < m.n; ++j) {
      e[j] = step;
      J.col(j) = (m.anchor(q + e) * u - m.anchor(q - e) * u) / (2 * step);
      e[j] = 0.0;
    }
    return J;
  };
  return {eval, jac};
}

/// [X,Y](q) = dY(q) X(q) - dX(q) Y(q).
inline Vec lie_bracket(const VectorField& X, const VectorField& Y, const Vec& q) {
  return Y.jac(q) * X.eval(q) - X.jac(q) * Y.eval(q);
}

/// Exact polynomial field of the word bracket X_I.
inline PolyVectorField word_field(const Model& m, const std::vector<int>& word) {
  require(m.has_frame(), "word_field: model has no frame");
  require(!word.empty(), "word_field: empty word");
  for (int i : word) require(i >= 1 && i <= m.h, "word_field: index out of range");
  PolyVectorField f = m.frame[word[0] - 1];
  for (size_t k = 1; k < word.size(); ++k) {
    f = poly_bracket(m.frame[word[k] - 1], f);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Growth vectors
// ---------------------------------------------------------------------------

struct GrowthVector {
  int depth = 0;                ///< layers actually computed
  std::vector<int> ranks;       ///< r_i = dim Delta^i_q - dim Delta^{i-1}_q
  bool satisfied = false;       ///< cumulative rank == n (Chow-Rashevski at q)

  int total_rank() const {
    int s = 0;
    for (int r : ranks) s += r;
    return s;
  }
};

struct SpanResult {
  GrowthVector growth;
  std::vector<Mat> layer_bases;                 ///< orthonormal basis of Delta^i_q, cumulative
  std::vector<std::vector<int>> spanning_words; ///< greedy rank-increasing words, all layers
};

/// Iterates Delta^{i+1} = Delta^i + [Delta, Delta^i] on word brackets of the
/// frame and reports per-layer rank increments. Singular values below
/// rank_tol * sigma_max count as zero.
inline SpanResult bracket_span(const Model& m, const Vec& q, int depth, double rank_tol = 1e-9) {
  require(m.has_frame(), "bracket_span: model has no frame");
  require(depth >= 1, "bracket_span: depth >= 1");
  require(q.size() == m.n, "bracket_span: point dimension");

  SpanResult out;
  std::vector<PolyVectorField> layer_fields = m.frame;
  std::vector<std::vector<int>> layer_words;
  for (int j = 1; j <= m.h; ++j) layer_words.push_back({j});

  std::vector<Vec> all_values;
  Mat ortho(m.n, 0);  // greedy orthonormal spanning set
  int prev_rank = 0;

  for (int layer = 1; layer <= depth; ++layer) {
    for (size_t w = 0; w < layer_fields.size(); ++w) {
      const Vec v = layer_fields[w].eval(q);
      all_values.push_back(v);
      const double vn = v.norm();
      if (vn > 1e-12) {
        Vec res = v;
        if (ortho.cols() > 0) res -= ortho * (ortho.transpose() * v);
        if (res.norm() > std::max(rank_tol * vn, 1e-14)) {
          ortho.conservativeResize(Eigen::NoChange, ortho.cols() + 1);
          ortho.col(ortho.cols() - 1) = res.normalized();
          out.spanning_words.push_back(layer_words[w]);
        }
      }
    }
    // Rank via SVD of all values so far, per the stated tolerance rule.
    Mat V(m.n, static_cast<int>(all_values.size()));
    for (size_t c = 0; c < all_values.size(); ++c) V.col(static_cast<int>(c)) = all_values[c];
    Eigen::JacobiSVD<Mat> svd(V);
    const Vec sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) {
      if (sv[i] > rank_tol * sv[0]) ++rank;
    }
    out.growth.ranks.push_back(rank - prev_rank);
    prev_rank = rank;
    out.growth.depth = layer;
    {
      Eigen::JacobiSVD<Mat> svd_u(V, Eigen::ComputeThinU);
      out.layer_bases.push_back(svd_u.matrixU().leftCols(rank));
    }
    if (rank == m.n) {
      out.growth.satisfied = true;
      break;
    }
    if (layer == depth) break;
    // Next layer: bracket every frame field against the current layer words.
    std::vector<PolyVectorField> next_fields;
    std::vector<std::vector<int>> next_words;
    for (size_t w = 0; w < layer_fields.size(); ++w) {
      if (layer_fields[w].is_zero()) continue;
      for (int j = 1; j <= m.h; ++j) {
        PolyVectorField b = poly_bracket(m.frame[j - 1], layer_fields[w]);
        if (b.is_zero()) continue;
        std::vector<int> word = layer_words[w];
        word.push_back(j);
        next_fields.push_back(std::move(b));
        next_words.push_back(std::move(word));
      }
    }
    layer_fields = std::move(next_fields);
    layer_words = std::move(next_words);
    if (layer_fields.empty()) break;  // nilpotent: nothing new can appear
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commutator flows and bracket motions
// ---------------------------------------------------------------------------

/// Horizontal arc: constant control held for a (signed) duration.
struct Arc {
  Vec control;
  double duration = 0.0;
};

/// RK4 flow of the constant-control field along one arc.
inline Vec flow_arc(const Model& m, const Vec& q, const Arc& arc, int flow_steps = 32) {
  Vec x = q;
  const double hs = arc.duration / flow_steps;
  if (hs == 0.0) return x;
  auto f = [&](const Vec& s) { return Vec(m.anchor(s) * arc.control); };
  for (int k = 0; k < flow_steps; ++k) {
    x = rk4_step(f, x, hs);
    detail::check_state(x, (k + 1) * hs);
  }
  return x;
}

inline Vec flow_arcs(const Model& m, Vec q, const std::vector<Arc>& arcs, int flow_steps = 32) {
  for (const Arc& a : arcs) q = flow_arc(m, q, a, flow_steps);
  return q;
}

inline std::vector<Arc> inverse_arcs(const std::vector<Arc>& arcs) {
  std::vector<Arc> out(arcs.rbegin(), arcs.rend());
  for (Arc& a : out) a.duration = -a.duration;
  return out;
}

namespace detail {

inline Vec basis_control(int h, int j) {
  Vec e = Vec::Zero(h);
  e[j - 1] = 1.0;
  return e;
}

/// Arc sequence approximating the flow of t^j X_I (group commutator with
/// exact inverse arc sequences), in application order.
inline std::vector<Arc> commutator_arcs(int h, const std::vector<int>& word, double t) {
  require(!word.empty(), "commutator_arcs: empty word");
  if (word.size() == 1) return {{basis_control(h, word[0]), t}};
  std::vector<int> inner(word.begin(), word.end() - 1);
  const int a = word.back();
  const std::vector<Arc> A = commutator_arcs(h, inner, t);
  std::vector<Arc> out;
  out.reserve(2 * A.size() + 2);
  out.push_back({basis_control(h, a), t});
  out.insert(out.end(), A.begin(), A.end());
  out.push_back({basis_control(h, a), -t});
  const std::vector<Arc> Ainv = inverse_arcs(A);
  out.insert(out.end(), Ainv.begin(), Ainv.end());
  return out;
}

}  // namespace detail

/// phi_I^t = phi_{i_j}^t o ... o phi_{i_1}^t : plain composition of the
/// indexed frame flows, each for duration t.
inline Vec commutator_flow(const Model& m, const std::vector<int>& word, double t, const Vec& q,
                           int flow_steps = 32) {
  require(m.has_frame(), "commutator_flow: model has no frame");
  Vec x = q;
  for (int idx : word) {
    require(idx >= 1 && idx <= m.h, "commutator_flow: index out of range");
    x = flow_arc(m, x, {detail::basis_control(m.h, idx), t}, flow_steps);
  }
  return x;
}

/// Arc realization of the reparametrized commutator motion Phi_I(u, q).
inline std::vector<Arc> bracket_motion_arcs(const Model& m, const std::vector<int>& word,
                                            const Vec& u) {
  require(u.size() == m.h, "bracket_motion: control dimension");
  const double un = u.norm();
  if (un == 0.0) return {};
  if (word.empty()) return {{u, 1.0}};  // plain horizontal arc phi^1(u)
  const int i = static_cast<int>(word.size());
  const double t = std::pow(un, 1.0 / (i + 1));
  const Vec amp = u / std::pow(un, static_cast<double>(i) / (i + 1));
  const std::vector<Arc> C = detail::commutator_arcs(m.h, word, t);
  std::vector<Arc> out;
  out.reserve(2 * C.size() + 2);
  out.push_back({amp, 1.0});
  out.insert(out.end(), C.begin(), C.end());
  out.push_back({amp, -1.0});
  const std::vector<Arc> Cinv = inverse_arcs(C);
  out.insert(out.end(), Cinv.begin(), Cinv.end());
  return out;
}

/// Phi_I(u, q) = q + [X(u), X_I](q) + o(u), realized as horizontal arcs so
/// the result is reachable and its cost measurable.
inline Vec bracket_motion(const Model& m, const std::vector<int>& word, const Vec& u, const Vec& q,
                          int flow_steps = 32) {
  require(m.has_frame(), "bracket_motion: model has no frame");
  return flow_arcs(m, q, bracket_motion_arcs(m, word, u), flow_steps);
}

// ---------------------------------------------------------------------------
// Strong Chow-Rashevski steering
// ---------------------------------------------------------------------------

struct SteeringPlan {
  std::vector<std::vector<int>> words;  ///< empty word = direct horizontal arc
  std::vector<Vec> amplitudes;          ///< u_I per word (solver unknowns)
  std::vector<Arc> arcs;                ///< concatenated horizontal arcs
  ControlPath path;                     ///< uniform-grid realization on [0,1]
  Vec predicted_endpoint;
  double cost_bound = 0.0;              ///< sum_I |u_I|^{2/(i+1)}
};

struct SteerOptions {
  double tol = 1e-8;      ///< endpoint tolerance for success
  int max_iter = 80;
  int flow_steps = 32;    ///< RK4 steps per arc
  int arc_grid = 64;      ///< control-grid steps per arc in the assembled path
  int max_segments = 16;  ///< chart-line subdivision cap when Gauss-Newton stalls
  double fd_rel = 1e-4;
  double fd_min = 1e-7;
};

struct SteerResult {
  bool success = false;
  SteeringPlan plan;
  double endpoint_error = std::numeric_limits<double>::infinity();
  std::vector<double> residual_history;
  std::string message;
};

namespace detail {

inline Vec steering_map(const Model& m, const Vec& q0, const std::vector<std::vector<int>>& words,
                        const std::vector<Vec>& amps, int flow_steps) {
  Vec q = q0;
  for (size_t w = 0; w < words.size(); ++w) {
    if (amps[w].norm() == 0.0) continue;
    q = flow_arcs(m, q, bracket_motion_arcs(m, words[w], amps[w]), flow_steps);
  }
  return q;
}

/// d Phi(0): per word I and control basis e_a the column [X(e_a), X_I](q0)
/// (the anchor column itself for the empty word).
inline Mat steering_jacobian_at_zero(const Model& m, const Vec& q0,
                                     const std::vector<std::vector<int>>& words) {
  Mat J(m.n, static_cast<int>(words.size()) * m.h);
  const Mat xi = m.anchor(q0);
  int col = 0;
  for (const auto& word : words) {
    if (word.empty()) {
      J.block(0, col, m.n, m.h) = xi;
      col += m.h;
      continue;
    }
    const PolyVectorField XI = word_field(m, word);
    for (int a = 1; a <= m.h; ++a) {
      J.col(col++) = poly_bracket(m.frame[a - 1], XI).eval(q0);
    }
  }
  return J;
}

struct GnOutcome {
  bool success = false;
  std::vector<Vec> amps;
  Vec endpoint;
  double residual = std::numeric_limits<double>::infinity();
  std::vector<double> history;
};

inline GnOutcome gauss_newton_steer(const Model& m, const Vec& q0, const Vec& q1,
                                    const std::vector<std::vector<int>>& words,
                                    const SteerOptions& opt) {
  const int W = static_cast<int>(words.size());
  const int dim = W * m.h;
  auto unstack = [&](const Vec& x) {
    std::vector<Vec> amps(W);
    for (int w = 0; w < W; ++w) amps[w] = x.segment(w * m.h, m.h);
    return amps;
  };
  auto eval = [&](const Vec& x) {
    return steering_map(m, q0, words, unstack(x), opt.flow_steps);
  };

  GnOutcome out;
  Vec x = Vec::Zero(dim);
  Vec endpoint = q0;
  Vec r = endpoint - q1;
  double rn = r.norm();
  out.history.push_back(rn);
  Mat J = steering_jacobian_at_zero(m, q0, words);
  bool refreshed_this_round = false;

  auto fd_jacobian = [&](const Vec& at, const Vec& r_at) {
    Mat Jf(m.n, dim);
    for (int c = 0; c < dim; ++c) {
      const int w = c / m.h;
      Vec xp = at;
      const double eps = std::max(opt.fd_min, opt.fd_rel * unstack(at)[w].norm());
      xp[c] += eps;
      Jf.col(c) = (eval(xp) - r_at - q1) / eps;
    }
    return Jf;
  };

  for (int it = 0; it < opt.max_iter && rn > opt.tol; ++it) {
    Eigen::JacobiSVD<Mat> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    const Vec dx = svd.solve(-r);
    bool accepted = false;
    double alpha = 1.0;
    for (int bt = 0; bt < 8; ++bt) {
      const Vec x_try = x + alpha * dx;
      Vec ep_try;
      try {
        ep_try = eval(x_try);
      } catch (const IntegrationError&) {
        alpha *= 0.5;
        continue;
      }
      const double rn_try = (ep_try - q1).norm();
      if (rn_try < rn * (1.0 - 1e-4 * alpha) || rn_try <= opt.tol) {
        x = x_try;
        endpoint = ep_try;
        r = endpoint - q1;
        const double prev = rn;
        rn = rn_try;
        accepted = true;
        refreshed_this_round = false;
        // Slow contraction: the frozen bracket Jacobian is stale.
        if (rn > 0.5 * prev && rn > opt.tol) J = fd_jacobian(x, r);
        break;
      }
      alpha *= 0.5;
    }
    out.history.push_back(rn);
    if (!accepted) {
      if (refreshed_this_round) break;  // stalled even with a fresh Jacobian
      J = fd_jacobian(x, r);
      refreshed_this_round = true;
    }
  }
  out.success = rn <= opt.tol;
  out.amps = unstack(x);
  out.endpoint = endpoint;
  out.residual = rn;
  return out;
}

}  // namespace detail

/// Assembles the concatenated arcs into one uniform-grid ControlPath on
/// [0,1]: each arc gets an equal time slot with the control rescaled by its
/// duration, which reparametrizes the path exactly (length is unchanged).
inline ControlPath assemble_arc_path(const std::vector<Arc>& arcs, int h, int arc_grid = 64) {
  const int K = static_cast<int>(arcs.size());
  if (K == 0) return ControlPath::zero(1, h);
  Mat v(K * arc_grid, h);
  for (int k = 0; k < K; ++k) {
    const Vec scaled = arcs[k].control * (arcs[k].duration * K);
    for (int s = 0; s < arc_grid; ++s) v.row(k * arc_grid + s) = scaled.transpose();
  }
  return {v};
}

/// Gauss-Newton steering q0 -> q1 through the strong-CR map Phi(u), with
/// chart-line path subdivision as the fallback when a single segment stalls.
inline SteerResult steer(const Model& m, const Vec& q0, const Vec& q1,
                         const std::vector<std::vector<int>>& words, const SteerOptions& opt = {}) {
  require(m.has_frame(), "steer: model has no frame");
  require(q0.size() == m.n && q1.size() == m.n, "steer: dimensions");
  require(!words.empty(), "steer: no bracket words supplied");

  SteerResult out;
  out.plan.words = words;

  if ((q1 - q0).norm() == 0.0) {
    out.success = true;
    out.endpoint_error = 0.0;
    out.plan.amplitudes.assign(words.size(), Vec::Zero(m.h));
    out.plan.predicted_endpoint = q0;
    out.plan.path = ControlPath::zero(1, m.h);
    return out;
  }

  for (int segments = 1; segments <= opt.max_segments; segments *= 2) {
    std::vector<Arc> all_arcs;
    std::vector<Vec> all_amps;
    std::vector<std::vector<int>> all_words;
    std::vector<double> history;
    Vec q = q0;
    bool ok = true;
    for (int s = 0; s < segments && ok; ++s) {
      const Vec target = (s + 1 == segments)
                             ? q1
                             : Vec(q0 + (q1 - q0) * (static_cast<double>(s + 1) / segments));
      const auto gn = detail::gauss_newton_steer(m, q, target, words, opt);
      history.insert(history.end(), gn.history.begin(), gn.history.end());
      if (!gn.success) {
        ok = false;
        break;
      }
      for (size_t w = 0; w < words.size(); ++w) {
        if (gn.amps[w].norm() == 0.0) continue;
        const auto arcs = bracket_motion_arcs(m, words[w], gn.amps[w]);
        all_arcs.insert(all_arcs.end(), arcs.begin(), arcs.end());
        all_words.push_back(words[w]);
        all_amps.push_back(gn.amps[w]);
      }
      q = gn.endpoint;
    }
    out.residual_history = history;
    if (!ok) continue;

    out.success = true;
    out.endpoint_error = (q - q1).norm();
    out.plan.words = std::move(all_words);
    out.plan.amplitudes = std::move(all_amps);
    out.plan.arcs = std::move(all_arcs);
    out.plan.predicted_endpoint = q;
    out.plan.path = assemble_arc_path(out.plan.arcs, m.h, opt.arc_grid);
    out.plan.cost_bound = 0.0;
    for (size_t w = 0; w < out.plan.words.size(); ++w) {
      const double i = static_cast<double>(out.plan.words[w].size());
      out.plan.cost_bound += std::pow(out.plan.amplitudes[w].norm(), 2.0 / (i + 1.0));
    }
    return out;
  }
  out.message = "target outside convergence basin (subdivision exhausted)";
  return out;
}

struct CostCertificate {
  double measured_sq_length = 0.0;
  double bound = 0.0;
  double ratio = 1.0;  ///< empirical C' ; 1 for the zero plan
};

/// Re-integrates the plan and compares measured squared length against the
/// strong-CR cost bound sum_I |u_I|^{2/(i+1)}.
inline CostCertificate steering_cost_certificate(const Model& m, const Vec& q0,
                                                 const SteeringPlan& plan,
                                                 int steps_per_interval = 2) {
  CostCertificate out;
  out.bound = plan.cost_bound;
  if (plan.path.values.size() == 0 || plan.path.values.cwiseAbs().maxCoeff() == 0.0) {
    return out;  // zero plan
  }
  const double L = length(m, q0, plan.path, steps_per_interval);
  out.measured_sq_length = L * L;
  out.ratio = out.bound > 0 ? out.measured_sq_length / out.bound : 1.0;
  return out;
}

/// Steering word set derived from the greedy spanning words of bracket_span:
/// the empty word (direct arcs) plus the inner word of every spanning
/// bracket of depth >= 2.
inline std::vector<std::vector<int>> default_steering_words(const Model& m, const Vec& q,
                                                            int depth) {
  const SpanResult span = bracket_span(m, q, depth);
  std::vector<std::vector<int>> words;
  words.push_back({});
  for (const auto& w : span.spanning_words) {
    if (w.size() < 2) continue;
    std::vector<int> inner(w.begin(), w.end() - 1);
    if (std::find(words.begin(), words.end(), inner) == words.end()) words.push_back(inner);
  }
  return words;
}

}  // namespace srlab

#endif  // SRLAB_BRACKETS_HPP
