#ifndef SRLAB_TYPES_HPP
#define SRLAB_TYPES_HPP

/**
 * @file types.hpp
 * @brief Chart-level scalar/vector aliases shared by every module.
 *
 * Everything lives in a single coordinate chart: points, covectors and
 * controls are plain dense vectors whose lengths are fixed by the model
 * (n for the chart, h for the control space).
 */

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace srlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Chart coordinates of a point q (length n).
using ChartPoint = Vec;
/// Fiber element u of the control bundle in a trivialization (length h).
using ControlVector = Vec;
/// Cotangent element p in chart coordinates (length n).
using Covector = Vec;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// Thrown when an integrated state leaves the trust region (norm > 1e12)
/// or turns non-finite; carries the first bad time.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t_bad)
      : std::runtime_error(what + " at t=" + std::to_string(t_bad)), t_bad_(t_bad) {}
  double bad_time() const { return t_bad_; }

 private:
  double t_bad_;
};

constexpr double kBlowupNorm = 1e12;

}  // namespace srlab

#endif  // SRLAB_TYPES_HPP
