#ifndef SRLAB_PRODUCTS_HPP
#define SRLAB_PRODUCTS_HPP

/**
 * @file products.hpp
 * @brief Desk-scale surrogates for the infinite-dimensional phenomena:
 *        orbit structure of Heisenberg/Engel products through per-component
 *        distance sums with trend fits, and the elusive-geodesic spectral
 *        diagnostic on growing truncations.
 *
 * Infinite products are represented by N-sweeps plus fitted growth laws;
 * nothing here claims an infinite-dimensional statement, only finite-N
 * trends. Component distances are memoized (optionally on disk) because the
 * profiles re-query the same coordinates across N values.
 */

#include "srlab/catalog.hpp"
#include "srlab/distance.hpp"
#include "srlab/numerics.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace srlab {

enum class Quality { Fast, Oracle };

inline std::string to_string(Quality q) { return q == Quality::Fast ? "fast" : "oracle"; }

/// JSON-backed memo of component distances, keyed by coordinates rounded to
/// 1e-12 plus the quality tag. Read-mostly; single-writer commit per key.
class DistanceCache {
 public:
  DistanceCache() = default;
  explicit DistanceCache(std::string path) : path_(std::move(path)) { load(); }

  static std::string key_of(const Vec& coords, Quality q) {
    std::string key = to_string(q);
    char buf[32];
    for (int i = 0; i < coords.size(); ++i) {
      const double r = std::round(coords[i] * 1e12) / 1e12;
      std::snprintf(buf, sizeof(buf), "|%.17g", r);
      key += buf;
    }
    return key;
  }

  std::optional<double> lookup(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void store(const std::string& key, double value) {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_[key] = value;
  }

  void save() const {
    if (path_.empty()) return;
    nlohmann::json j;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      for (const auto& [k, v] : entries_) j[k] = v;
    }
    const std::string tmp = path_ + ".tmp";
    {
      std::ofstream out(tmp);
      out << j.dump(1) << "\n";
    }
    std::rename(tmp.c_str(), path_.c_str());
  }

  size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
  }

 private:
  void load() {
    std::ifstream in(path_);
    if (!in.good()) return;
    nlohmann::json j;
    in >> j;
    for (auto it = j.begin(); it != j.end(); ++it) entries_[it.key()] = it.value().get<double>();
  }

  std::string path_;
  mutable std::mutex mutex_;
  std::map<std::string, double> entries_;
};

namespace detail {

inline DistanceOptions quality_options(Quality q) {
  DistanceOptions opt;
  if (q == Quality::Oracle) {
    opt.m = 2048;
    opt.penalty_schedule = {1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9};
    opt.steps_per_stage = 300;
  }
  return opt;
}

inline double component_distance(const Model& model, const Vec& target, Quality q,
                                 DistanceCache* cache) {
  if (target.norm() == 0.0) return 0.0;
  const std::string key = model.name + DistanceCache::key_of(target, q);
  if (cache) {
    if (auto hit = cache->lookup(key)) return *hit;
  }
  const DistanceResult r =
      distance_best(model, Vec::Zero(model.n), target, quality_options(q));
  if (!r.success) {
    throw std::runtime_error("component distance solve failed for " + model.name);
  }
  if (cache) cache->store(key, r.distance);
  return r.distance;
}

}  // namespace detail

/// d_H(0, (x,y,z)) on the 3-dimensional Heisenberg group. The oracle quality
/// (fine grid, extended penalty schedule) is the provenance source for
/// derived per-component values.
inline double heisenberg_component_distance(double x, double y, double z,
                                            Quality quality = Quality::Fast,
                                            DistanceCache* cache = nullptr) {
  static const Model model = heisenberg3();
  Vec t(3);
  t << x, y, z;
  return detail::component_distance(model, t, quality, cache);
}

/// d_E(0, (x,y,z,w)) on the Engel group.
inline double engel_component_distance(double x, double y, double z, double w,
                                       Quality quality = Quality::Fast,
                                       DistanceCache* cache = nullptr) {
  static const Model model = engel();
  Vec t(4);
  t << x, y, z, w;
  return detail::component_distance(model, t, quality, cache);
}

/// Power-law coordinate sequence a_n = c * (n+1)^{-p} placed on one named
/// component of every factor group.
struct SequenceSpec {
  double c = 1.0;
  double p = 1.0;
  int component = 2;  ///< 0:x 1:y 2:z (3:w for Engel factors)
};

struct OrbitProfile {
  std::vector<int> N_values;
  std::vector<double> partial_sums;     ///< sum_{n<N} d(0, q_n)^2
  std::vector<double> component_sq;     ///< d(0, q_n)^2 for n < max(N)
  std::string verdict;                  ///< convergent | divergent-trend | inconclusive
  std::string fitted_law;
  double increment_exponent = 0.0;      ///< alpha in d_n^2 ~ c n^{-alpha}
  double increment_r2 = 0.0;
  double log_law_r2 = 0.0;              ///< only for the log-law branch
};

namespace detail {

/// Verdict from the fitted increment law d_n^2 ~ c (n+1)^{-alpha}:
/// alpha > 1 summable (convergent), alpha < 1 a positive-exponent power law
/// for the partial sums, alpha ~ 1 the log-law regime. A verdict requires
/// fit R^2 >= 0.99, otherwise the profile is inconclusive.
inline void fit_verdict(OrbitProfile& prof) {
  std::vector<double> xs, ys;
  for (size_t n = 0; n < prof.component_sq.size(); ++n) {
    if (prof.component_sq[n] > 0) {
      xs.push_back(static_cast<double>(n + 1));
      ys.push_back(prof.component_sq[n]);
    }
  }
  if (xs.size() < 3) {
    prof.verdict = "convergent";
    prof.fitted_law = "zero tail";
    return;
  }
  const LineFit fit = loglog_fit(xs, ys);
  prof.increment_exponent = -fit.slope;
  prof.increment_r2 = fit.r2;
  if (fit.r2 < 0.99) {
    prof.verdict = "inconclusive";
    prof.fitted_law = "no clean power law in the increments";
    return;
  }
  const double alpha = prof.increment_exponent;
  char law[128];
  if (alpha >= 1.15) {
    prof.verdict = "convergent";
    std::snprintf(law, sizeof(law), "increments ~ n^-%.3f (summable)", alpha);
    prof.fitted_law = law;
    return;
  }
  if (alpha <= 0.85) {
    prof.verdict = "divergent-trend";
    std::snprintf(law, sizeof(law), "partial sums ~ N^%.3f", 1.0 - alpha);
    prof.fitted_law = law;
    return;
  }
  // Borderline alpha ~ 1: try the log law on the partial sums.
  std::vector<double> lx, sy;
  for (size_t i = 0; i < prof.N_values.size(); ++i) {
    lx.push_back(std::log(static_cast<double>(prof.N_values[i])));
    sy.push_back(prof.partial_sums[i]);
  }
  const LineFit lfit = line_fit(lx, sy);
  prof.log_law_r2 = lfit.r2;
  if (lfit.r2 >= 0.99 && lfit.slope > 0) {
    prof.verdict = "divergent-trend";
    std::snprintf(law, sizeof(law), "partial sums ~ %.4g + %.4g log N", lfit.intercept, lfit.slope);
    prof.fitted_law = law;
  } else {
    prof.verdict = "inconclusive";
    prof.fitted_law = "neither summable nor log law at R^2 >= 0.99";
  }
}

template <class ComponentDistance>
OrbitProfile profile_impl(const SequenceSpec& spec, const std::vector<int>& N_list,
                          ComponentDistance&& dist_of) {
  require(!N_list.empty(), "orbit profile: empty N list");
  for (size_t i = 1; i < N_list.size(); ++i) {
    require(N_list[i] > N_list[i - 1], "orbit profile: N list must increase");
  }
  require(spec.p > 0 && std::isfinite(spec.c), "orbit profile: invalid sequence spec");
  const int n_max = N_list.back();
  OrbitProfile prof;
  prof.N_values = N_list;
  prof.component_sq.assign(n_max, 0.0);
  parallel_for(n_max, [&](int n) {
    const double a = spec.c * std::pow(n + 1.0, -spec.p);
    const double d = dist_of(a);
    prof.component_sq[n] = d * d;
  });
  double acc = 0.0;
  size_t next = 0;
  for (int n = 0; n < n_max; ++n) {
    acc += prof.component_sq[n];
    while (next < N_list.size() && N_list[next] == n + 1) {
      prof.partial_sums.push_back(acc);
      ++next;
    }
  }
  fit_verdict(prof);
  return prof;
}

}  // namespace detail

/// Partial sums sum_{n<N} d_H(0, q_n)^2 for the Heisenberg product, with a
/// trend verdict (surrogate of the l2 x l1 orbit description).
inline OrbitProfile orbit_profile(const SequenceSpec& spec, const std::vector<int>& N_list,
                                  Quality quality = Quality::Fast, DistanceCache* cache = nullptr) {
  require(spec.component >= 0 && spec.component <= 2, "orbit_profile: component in {x,y,z}");
  return detail::profile_impl(spec, N_list, [&](double a) {
    double x = 0, y = 0, z = 0;
    if (spec.component == 0) x = a;
    if (spec.component == 1) y = a;
    if (spec.component == 2) z = a;
    return heisenberg_component_distance(x, y, z, quality, cache);
  });
}

/// Engel-product variant; the w component activates the exponent-2/3 regime.
inline OrbitProfile engel_profile(const SequenceSpec& spec, const std::vector<int>& N_list,
                                  Quality quality = Quality::Fast, DistanceCache* cache = nullptr) {
  require(spec.component >= 0 && spec.component <= 3, "engel_profile: component in {x,y,z,w}");
  return detail::profile_impl(spec, N_list, [&](double a) {
    double c[4] = {0, 0, 0, 0};
    c[spec.component] = a;
    return engel_component_distance(c[0], c[1], c[2], c[3], quality, cache);
  });
}

// ---------------------------------------------------------------------------
// Elusive-geodesic spectral diagnostic
// ---------------------------------------------------------------------------

struct SpectrumRow {
  int N = 0;
  Vec leading;   ///< k largest singular values of the adjoint Gram
  Vec trailing;  ///< k smallest
  double sigma_min = 0.0;
  int rank = 0;
};

struct SpectrumTable {
  std::vector<SpectrumRow> rows;
};

/// For each N, lifts the base control componentwise to heisenberg_product(N)
/// with amplitudes (n+1)^{-amplitude_p}, normalizes to unit grid-L2 norm,
/// and reports the endpoint-adjoint Gram spectrum. The diagnostic is the
/// decay of sigma_min(N); no limit value is claimed.
inline SpectrumTable elusive_spectrum(const std::vector<int>& N_list, const ControlPath& base,
                                      double amplitude_p, int k, int steps_per_interval = 4,
                                      double rank_tol = 1e-8) {
  require(base.controls() == 2, "elusive_spectrum: base control must be a Heisenberg control");
  for (int N : N_list) {
    require(3 * N <= 600, "elusive_spectrum: N capped so 3N <= 600");
  }
  SpectrumTable out;
  out.rows.resize(N_list.size());
  parallel_for(static_cast<int>(N_list.size()), [&](int idx) {
    const int N = N_list[idx];
    const Model model = heisenberg_product(N);
    ControlPath lifted = ControlPath::zero(base.steps(), 2 * N);
    for (int b = 0; b < N; ++b) {
      const double amp = std::pow(b + 1.0, -amplitude_p);
      lifted.values.col(2 * b) = amp * base.values.col(0);
      lifted.values.col(2 * b + 1) = amp * base.values.col(1);
    }
    const double nn = lifted.grid_norm();
    if (nn > 0) lifted.values /= nn;

    const int n = model.n;
    const Trajectory tr = trajectory(model, Vec::Zero(n), lifted, steps_per_interval);
    std::vector<ControlPath> duals;
    duals.reserve(n);
    for (int i = 0; i < n; ++i) {
      Vec ei = Vec::Zero(n);
      ei[i] = 1.0;
      ControlPath rep = adjoint_rep(model, tr, lifted, ei, 0.0, steps_per_interval).rep;
      rep.values = -rep.values;
      duals.push_back(std::move(rep));
    }
    Mat gram(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        gram(i, j) = gram(j, i) = ControlPath::grid_dot(duals[i], duals[j]);
      }
    }
    Eigen::JacobiSVD<Mat> svd(gram);
    const Vec sv = svd.singularValues().cwiseMax(0.0).cwiseSqrt();
    SpectrumRow row;
    row.N = N;
    const int kk = std::min<int>(k, sv.size());
    row.leading = sv.head(kk);
    row.trailing = sv.tail(kk);
    row.sigma_min = sv[sv.size() - 1];
    for (int i = 0; i < sv.size(); ++i) {
      if (sv[i] > rank_tol * sv[0]) ++row.rank;
    }
    out.rows[idx] = std::move(row);
  });
  return out;
}

}  // namespace srlab

#endif  // SRLAB_PRODUCTS_HPP
