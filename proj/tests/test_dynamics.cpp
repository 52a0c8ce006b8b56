#include <catch2/catch_amalgamated.hpp>

#include "srlab/catalog.hpp"
#include "srlab/dynamics.hpp"
#include "support.hpp"

using namespace srlab;

namespace {

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

/// Independent fine-grid oracle for the Heisenberg dynamics
///   x' = u, y' = v, z' = (v x - u y)/2,
/// integrating the same piecewise-constant control with tiny RK4 steps and
/// without going through the library's anchor machinery.
Vec heisenberg_oracle_endpoint(const Mat& controls, int substeps) {
  const int m = static_cast<int>(controls.rows());
  double x = 0, y = 0, z = 0;
  const double h = 1.0 / m / substeps;
  for (int k = 0; k < m; ++k) {
    const double u = controls(k, 0), v = controls(k, 1);
    for (int s = 0; s < substeps; ++s) {
      auto f = [&](double xx, double yy) {
        return std::array<double, 3>{u, v, 0.5 * (v * xx - u * yy)};
      };
      const auto k1 = f(x, y);
      const auto k2 = f(x + 0.5 * h * k1[0], y + 0.5 * h * k1[1]);
      const auto k3 = f(x + 0.5 * h * k2[0], y + 0.5 * h * k2[1]);
      const auto k4 = f(x + h * k3[0], y + h * k3[1]);
      x += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
      y += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
      z += h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
    }
  }
  return v3(x, y, z);
}

ControlPath circle_control(int m) {
  return ControlPath::sampled(m, 2, [](double t) {
    Vec u(2);
    u << std::cos(2 * M_PI * t), std::sin(2 * M_PI * t);
    return u;
  });
}

ControlPath random_control(Rng& rng, int m, int h, double sigma = 1.0) {
  ControlPath u = ControlPath::zero(m, h);
  for (int k = 0; k < m; ++k) u.values.row(k) = normal_vec(rng, h, sigma).transpose();
  return u;
}

}  // namespace

TEST_CASE("trajectory basics on heisenberg3") {
  const Model m = heisenberg3();
  // Constant u = (1,0): y stays 0, so z' = 0 and the path is a straight line.
  const Trajectory line =
      trajectory(m, Vec::Zero(3), ControlPath::constant(64, Vec(Vec::Unit(2, 0))));
  CHECK((line.endpoint() - v3(1, 0, 0)).norm() < 1e-12);
  CHECK(line.states.row(0).norm() == 0.0);

  const Trajectory rest = trajectory(m, v3(0.1, -2, 3), ControlPath::zero(16, 2));
  for (int k = 0; k <= 16; ++k) {
    CHECK((rest.states.row(k).transpose() - v3(0.1, -2, 3)).norm() == 0.0);
  }
}

TEST_CASE("circle control endpoint matches the fine-grid oracle") {
  const Model m = heisenberg3();
  const ControlPath u = circle_control(256);
  const Vec oracle = heisenberg_oracle_endpoint(u.values, 64);
  const Vec got = endpoint(m, Vec::Zero(3), u);
  CHECK((got - oracle).norm() <= 1e-8);

  // Continuum limit: the closed unit-speed circle ends at (0, 0, 1/(4*pi)),
  // the signed area swept by z' = (v x - u y)/2.
  const Vec fine = heisenberg_oracle_endpoint(circle_control(16384).values, 4);
  CHECK((fine - v3(0, 0, 1.0 / (4 * M_PI))).norm() < 2e-8);
  const Vec coarse = endpoint(m, Vec::Zero(3), circle_control(2048), 4);
  CHECK((coarse - v3(0, 0, 1.0 / (4 * M_PI))).norm() < 1e-6);
}

TEST_CASE("concatenating a control with its reversal returns home") {
  const Model m = heisenberg3();
  Rng rng = make_rng(4);
  const ControlPath u = random_control(rng, 32, 2);
  ControlPath cat = ControlPath::zero(64, 2);
  for (int k = 0; k < 32; ++k) {
    cat.values.row(k) = 2.0 * u.values.row(k);
    cat.values.row(63 - k) = -2.0 * u.values.row(k);
  }
  const Vec q0 = v3(0.3, 0.1, -0.2);
  CHECK((endpoint(m, q0, cat) - q0).norm() <= 1e-8);
}

TEST_CASE("action and length") {
  const Model m = heisenberg3();
  const Vec q0 = Vec::Zero(3);
  CHECK(action(m, q0, ControlPath::zero(16, 2)) == 0.0);
  CHECK(length(m, q0, ControlPath::zero(16, 2)) == 0.0);

  const ControlPath unit = ControlPath::constant(64, Vec(Vec::Unit(2, 0)));
  CHECK(action(m, q0, unit) == Catch::Approx(0.5).margin(1e-14));
  CHECK(length(m, q0, unit) == Catch::Approx(1.0).margin(1e-14));

  // Cauchy-Schwarz: L^2 <= 2A.
  Rng rng = make_rng(8);
  for (const Model& cm : default_catalog()) {
    const ControlPath u = random_control(rng, 32, cm.h);
    const Vec p0 = normal_vec(rng, cm.n, 0.3);
    const Trajectory tr = trajectory(cm, p0, u);
    const double A = action(cm, tr, u);
    const double L = length(cm, tr, u);
    CHECK(L * L <= 2 * A + 1e-10);
  }
}

TEST_CASE("reparametrization: double the rate, halve the time") {
  const Model m = srlab::testing::heisenberg3_conformal();
  Rng rng = make_rng(12);
  const ControlPath u = random_control(rng, 32, 2, 0.5);
  ControlPath fast = ControlPath::zero(64, 2);
  for (int k = 0; k < 32; ++k) fast.values.row(k) = 2.0 * u.values.row(k);
  const Vec q0 = v3(0.1, 0.2, 0.0);
  CHECK(length(m, q0, fast) == Catch::Approx(length(m, q0, u)).epsilon(1e-10));
  CHECK(action(m, q0, fast) == Catch::Approx(2.0 * action(m, q0, u)).epsilon(1e-10));
  CHECK((endpoint(m, q0, fast) - endpoint(m, q0, u)).norm() < 1e-10);
}

TEST_CASE("endpoint_diff: finite-difference oracle and linearity") {
  Rng rng = make_rng(21);
  for (const Model& m : default_catalog()) {
    const Vec q0 = normal_vec(rng, m.n, 0.3);
    const ControlPath u = random_control(rng, 24, m.h, 0.7);
    const ControlPath du = random_control(rng, 24, m.h, 0.7);

    CHECK(endpoint_diff(m, q0, u, ControlPath::zero(24, m.h)).norm() == 0.0);

    const double eps = 1e-5;
    ControlPath up = u, um = u;
    up.values += eps * du.values;
    um.values -= eps * du.values;
    const Vec fd = (endpoint(m, q0, up) - endpoint(m, q0, um)) / (2 * eps);
    const Vec an = endpoint_diff(m, q0, u, du);
    CHECK((fd - an).norm() <= 1e-5 * std::max(1.0, fd.norm()));

    // Linearity to 1e-10.
    const ControlPath dv = random_control(rng, 24, m.h);
    ControlPath combo = du;
    combo.values = 0.7 * du.values - 1.3 * dv.values;
    const Vec lhs = endpoint_diff(m, q0, u, combo);
    const Vec rhs = 0.7 * endpoint_diff(m, q0, u, du) - 1.3 * endpoint_diff(m, q0, u, dv);
    CHECK((lhs - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm()));
  }
  CHECK_THROWS_AS(endpoint_diff(heisenberg3(), Vec::Zero(3), ControlPath::zero(8, 2),
                                ControlPath::zero(16, 2)),
                  std::invalid_argument);
}

TEST_CASE("endpoint_diff with frozen anchor at u = 0") {
  const Model m = heisenberg3();
  Rng rng = make_rng(33);
  const Vec q0 = v3(0.4, -0.3, 0.7);
  const ControlPath du = random_control(rng, 16, 2);
  const Vec mean_du = du.values.colwise().mean().transpose();
  const Vec expected = anchor_apply(m, q0, mean_du);
  const Vec got = endpoint_diff(m, q0, ControlPath::zero(16, 2), du);
  CHECK((got - expected).norm() < 1e-12);
}

TEST_CASE("endpoint_adjoint: zero covector, hand-integrated costate") {
  const Model m = heisenberg3();
  const ControlPath u = ControlPath::constant(64, Vec(Vec::Unit(2, 0)));
  const auto zero = endpoint_adjoint(m, Vec::Zero(3), u, Vec::Zero(3));
  CHECK(zero.costate.covectors.norm() == 0.0);
  CHECK(zero.rep.values.norm() == 0.0);

  // u = (1,0), p(1) = (0,0,1): p_z is constant, p_y(t) = -(1-t)/2, p_x = 0,
  // and the dual control is (0, t - 1/2).
  const auto res = endpoint_adjoint(m, Vec::Zero(3), u, v3(0, 0, 1));
  for (int k = 0; k <= 64; ++k) {
    const double t = k / 64.0;
    CHECK(res.costate.covectors(k, 2) == Catch::Approx(1.0).margin(1e-12));
    CHECK(res.costate.covectors(k, 1) == Catch::Approx(-(1 - t) / 2).margin(1e-10));
    CHECK(res.costate.covectors(k, 0) == Catch::Approx(0.0).margin(1e-12));
  }
  for (int k = 0; k < 64; ++k) {
    const double tmid = (k + 0.5) / 64.0;
    CHECK(res.rep.values(k, 0) == Catch::Approx(0.0).margin(1e-12));
    CHECK(res.rep.values(k, 1) == Catch::Approx(tmid - 0.5).margin(1e-10));
  }
}

TEST_CASE("adjoint identity <dE du, p1> = <du, dual> across the catalog") {
  Rng rng = make_rng(55);
  auto models = default_catalog();
  models.push_back(srlab::testing::heisenberg3_conformal());
  for (const Model& m : models) {
    for (int s = 0; s < 4; ++s) {
      const Vec q0 = normal_vec(rng, m.n, 0.3);
      const ControlPath u = random_control(rng, 48, m.h, 0.6);
      const ControlPath du = random_control(rng, 48, m.h);
      const Vec p1 = normal_vec(rng, m.n);
      const double lhs = endpoint_diff(m, q0, u, du).dot(p1);
      const double rhs = ControlPath::grid_dot(du, endpoint_adjoint(m, q0, u, p1).rep);
      CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("extremal_residual edge cases") {
  const Model m = heisenberg3();
  const Vec q0 = v3(1, 2, 3);
  const ControlPath zero = ControlPath::zero(32, 2);
  CHECK(extremal_residual(m, q0, zero, Vec::Zero(3), 0.0) == 0.0);

  // lambda = 1, u = 0: the residual is exactly |xi^* p1| at the rest point.
  const Vec p1 = v3(0.3, -0.8, 0.5);
  const double expected = anchor_adjoint(m, q0, p1).norm();
  CHECK(extremal_residual(m, q0, zero, p1, 1.0) == Catch::Approx(expected).margin(1e-12));
  CHECK(expected > 0.1);

  CHECK_THROWS_AS(extremal_residual(m, q0, zero, p1, 0.5), std::invalid_argument);
}

TEST_CASE("integrator is exact on nilpotent piecewise-constant flows") {
  // With constant controls the Heisenberg coordinates are polynomials of
  // degree <= 2 in t, which RK4 reproduces exactly; the circle example can
  // only show roundoff.
  const Model m = heisenberg3();
  const ControlPath u = circle_control(64);
  const Vec reference = endpoint(m, Vec::Zero(3), u, 64);
  CHECK((endpoint(m, Vec::Zero(3), u, 1) - reference).norm() < 1e-13);
}

TEST_CASE("integrator order is at least 3.5 on a curved model") {
  // x' = u x^2 has the non-polynomial solution 1/(1/x0 - ut), so the RK4
  // order is observable. Step sweep against the exact endpoint.
  PolyVectorField f(1);
  f.component(0).add_term(1.0, {2});
  const Model m = frame_model("quadratic_line", {f});
  Vec q0(1);
  q0 << 1.0;
  Vec uc(1);
  uc << 0.5;
  const ControlPath u = ControlPath::constant(2, uc);
  const double exact = 2.0;  // 1/(1 - 0.5 t) at t = 1
  std::vector<double> errs;
  for (int spi : {1, 2, 4}) {
    errs.push_back(std::abs(endpoint(m, q0, u, spi)[0] - exact));
  }
  const double order1 = std::log2(errs[0] / errs[1]);
  const double order2 = std::log2(errs[1] / errs[2]);
  INFO("orders " << order1 << " " << order2);
  CHECK(order1 >= 3.5);
  CHECK(order2 >= 3.5);
}

TEST_CASE("blow-up is reported with the first bad time") {
  // One-dimensional x' = u x^2 from x0 = 1 with u = 3 escapes before t = 1
  // (the exact solution blows up at t = 1/3).
  PolyVectorField f(1);
  f.component(0).add_term(1.0, {2});
  const Model m = frame_model("quadratic_line", {f});
  Vec q0(1);
  q0 << 1.0;
  Vec u(1);
  u << 3.0;
  try {
    trajectory(m, q0, ControlPath::constant(64, u), 8);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(e.bad_time() > 0.0);
    CHECK(e.bad_time() < 1.0);
  }
}
