#ifndef SRLAB_NUMERICS_HPP
#define SRLAB_NUMERICS_HPP

/**
 * @file numerics.hpp
 * @brief Small shared numerics: RK4 stepper, least-squares line fits,
 *        deterministic RNG helpers and a slot-writing parallel_for.
 */

#include "srlab/types.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace srlab {

/// One classical RK4 step of x' = f(x); h may be negative (backward time).
template <class F>
Vec rk4_step(F&& f, const Vec& x, double h) {
  const Vec k1 = f(x);
  const Vec k2 = f(x + (0.5 * h) * k1);
  const Vec k3 = f(x + (0.5 * h) * k2);
  const Vec k4 = f(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y ~ intercept + slope*x with coefficient of
/// determination. Needs at least two distinct abscissae.
inline LineFit line_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, "line_fit: need >= 2 samples");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  require(sxx > 0, "line_fit: degenerate abscissae");
  LineFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ssr = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (out.intercept + out.slope * xs[i]);
    ssr += r * r;
  }
  out.r2 = (syy > 0) ? 1.0 - ssr / syy : 1.0;
  return out;
}

/// Fit y ~ c * x^slope through log-log least squares (x, y > 0).
inline LineFit loglog_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<double> lx, ly;
  lx.reserve(xs.size());
  ly.reserve(ys.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    require(xs[i] > 0 && ys[i] > 0, "loglog_fit: needs positive data");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  return line_fit(lx, ly);
}

using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t seed) { return Rng(seed); }

inline Vec normal_vec(Rng& rng, int n, double sigma = 1.0) {
  std::normal_distribution<double> d(0.0, sigma);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

inline Vec unit_sphere(Rng& rng, int n) {
  Vec v = normal_vec(rng, n);
  double nn = v.norm();
  while (nn < 1e-12) {
    v = normal_vec(rng, n);
    nn = v.norm();
  }
  return v / nn;
}

/// Worker-pool size: SRLAB_THREADS wins, otherwise hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("SRLAB_THREADS")) {
    const int k = std::atoi(env);
    if (k >= 1) return k;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(i) for i in [0, n). Each index writes only its own slot, so the
/// result is independent of the worker count.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), std::max(1, n));
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace srlab

#endif  // SRLAB_NUMERICS_HPP
