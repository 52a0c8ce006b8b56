#ifndef SRLAB_TESTS_SUPPORT_HPP
#define SRLAB_TESTS_SUPPORT_HPP

// Shared helpers for the test suites.

#include "srlab/catalog.hpp"
#include "srlab/model.hpp"

namespace srlab::testing {

/// Heisenberg anchor with the conformal metric g_q = exp(0.3 x) I. Exercises
/// the metric-derivative paths that vanish on the constant-metric built-ins.
inline Model heisenberg3_conformal() {
  Model base = heisenberg3();
  Model m;
  m.n = 3;
  m.h = 2;
  m.name = "heisenberg3_conformal";
  m.frame = base.frame;
  m.anchor = base.anchor;
  m.anchor_deriv = base.anchor_deriv;
  m.anchor_deriv_adj = base.anchor_deriv_adj;
  m.metric = [](const Vec& q) { return Mat(std::exp(0.3 * q[0]) * Mat::Identity(2, 2)); };
  m.metric_deriv = [](const Vec& q, const Vec& u, const Vec& v, const Vec& dq) {
    return 0.3 * dq[0] * std::exp(0.3 * q[0]) * u.dot(v);
  };
  finish_model(m);
  return m;
}

}  // namespace srlab::testing

#endif  // SRLAB_TESTS_SUPPORT_HPP
