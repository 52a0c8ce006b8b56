#include <catch2/catch_amalgamated.hpp>

#include "srlab/brackets.hpp"
#include "srlab/catalog.hpp"

using namespace srlab;

namespace {

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

Vec v4(double a, double b, double c, double d) {
  Vec v(4);
  v << a, b, c, d;
  return v;
}

/// eval-only field wrapped with a central-difference Jacobian (step 1e-5).
VectorField fd_field(std::function<Vec(const Vec&)> eval, int n) {
  auto jac = [eval, n](const Vec& q) {
    const double step = 1e-5;
    Mat J(n, n);
    Vec e = Vec::Zero(n);
    for (int j = 0; j < n; ++j) {
      e[j] = step;
      J.col(j) = (eval(q + e) - eval(q - e)) / (2 * step);
      e[j] = 0.0;
    }
    return J;
  };
  return {eval, jac};
}

PolyVectorField random_poly_field(Rng& rng, int n, int max_deg = 2) {
  std::uniform_int_distribution<int> deg(0, max_deg);
  PolyVectorField f(n);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < 3; ++t) {
      std::vector<int> e(n, 0);
      int budget = deg(rng);
      std::uniform_int_distribution<int> var(0, n - 1);
      for (int d = 0; d < budget; ++d) e[var(rng)] += 1;
      f.component(i).add_term(normal_vec(rng, 1)[0], e);
    }
  }
  return f;
}

}  // namespace

TEST_CASE("lie_bracket on the Heisenberg frame") {
  const Model m = heisenberg3();
  const VectorField X = frame_field(m, 1);
  const VectorField Y = frame_field(m, 2);
  Rng rng = make_rng(5);
  for (int s = 0; s < 5; ++s) {
    const Vec q = normal_vec(rng, 3);
    CHECK((lie_bracket(X, Y, q) - v3(0, 0, 1)).norm() < 1e-14);
    CHECK(lie_bracket(X, X, q).norm() < 1e-14);
  }
}

TEST_CASE("Engel bracket table against hand-computed Jacobians") {
  const Model m = engel();
  const VectorField X1 = frame_field(m, 1);
  const VectorField X2 = frame_field(m, 2);
  Rng rng = make_rng(6);
  for (int s = 0; s < 5; ++s) {
    const Vec q = normal_vec(rng, 4);
    // X3 = [X1, X2] = (0, 0, 1, x).
    const Vec X3 = lie_bracket(X1, X2, q);
    CHECK((X3 - v4(0, 0, 1, q[0])).norm() < 1e-14);
    // The third-level bracket [X1, [X1, X2]] produces the d/dw direction.
    const PolyVectorField X3p = poly_bracket(m.frame[0], m.frame[1]);
    const VectorField X3f = {[X3p](const Vec& qq) { return X3p.eval(qq); },
                             [X3p](const Vec& qq) { return X3p.jacobian(qq); }};
    CHECK((lie_bracket(X1, X3f, q) - v4(0, 0, 0, 1)).norm() < 1e-14);
    CHECK(lie_bracket(X2, X3f, q).norm() < 1e-14);
  }
}

TEST_CASE("antisymmetry and Jacobi identity on random polynomial fields") {
  Rng rng = make_rng(77);
  const int n = 3;
  for (int s = 0; s < 6; ++s) {
    const PolyVectorField Xp = random_poly_field(rng, n);
    const PolyVectorField Yp = random_poly_field(rng, n);
    const PolyVectorField Zp = random_poly_field(rng, n);
    const VectorField X = {[Xp](const Vec& q) { return Xp.eval(q); },
                           [Xp](const Vec& q) { return Xp.jacobian(q); }};
    const VectorField Y = {[Yp](const Vec& q) { return Yp.eval(q); },
                           [Yp](const Vec& q) { return Yp.jacobian(q); }};
    const VectorField Z = {[Zp](const Vec& q) { return Zp.eval(q); },
                           [Zp](const Vec& q) { return Zp.jacobian(q); }};
    const Vec q = normal_vec(rng, n, 0.5);
    const double scale = std::max(1.0, lie_bracket(X, Y, q).norm());
    CHECK((lie_bracket(X, Y, q) + lie_bracket(Y, X, q)).norm() <= 1e-6 * scale);

    // Jacobi via nested FD fields (outer brackets need Jacobians of inner
    // brackets); looser tolerance.
    auto nest = [&](const VectorField& A, const VectorField& B) {
      return fd_field([A, B](const Vec& qq) { return lie_bracket(A, B, qq); }, n);
    };
    const Vec jacobi = lie_bracket(X, nest(Y, Z), q) + lie_bracket(Y, nest(Z, X), q) +
                       lie_bracket(Z, nest(X, Y), q);
    CHECK(jacobi.norm() <= 1e-4 * std::max(1.0, scale));
  }
}

TEST_CASE("growth vectors of the catalog models") {
  {
    const auto r = bracket_span(heisenberg3(), Vec::Zero(3), 2);
    CHECK(r.growth.ranks == std::vector<int>{2, 1});
    CHECK(r.growth.satisfied);
  }
  {
    const auto r = bracket_span(heisenberg3(), v3(0.3, -1, 2), 2);
    CHECK(r.growth.ranks == std::vector<int>{2, 1});
    CHECK(r.growth.satisfied);
  }
  {
    const auto r = bracket_span(engel(), Vec::Zero(4), 3);
    CHECK(r.growth.ranks == std::vector<int>{2, 1, 1});
    CHECK(r.growth.satisfied);
  }
  {
    const auto r = bracket_span(heisenberg_product(3), Vec::Zero(9), 2);
    CHECK(r.growth.ranks == std::vector<int>{6, 3});
    CHECK(r.growth.satisfied);
  }
  {
    const auto r = bracket_span(infinite_heisenberg_trunc(8), Vec::Zero(17), 2);
    CHECK(r.growth.ranks == std::vector<int>{16, 1});
    CHECK(r.growth.satisfied);
  }
}

TEST_CASE("growth vector is invariant under positive frame rescaling") {
  const Model base = heisenberg3();
  std::vector<PolyVectorField> scaled = {base.frame[0] * 2.0, base.frame[1] * 0.25};
  const Model m = frame_model("heisenberg3_scaled", scaled);
  const auto r = bracket_span(m, v3(0.1, 0.2, 0.3), 2);
  CHECK(r.growth.ranks == std::vector<int>{2, 1});
  CHECK(r.growth.satisfied);
}

TEST_CASE("bracket_span requires a frame") {
  Model m = heisenberg3();
  m.frame.clear();
  CHECK_THROWS_AS(bracket_span(m, Vec::Zero(3), 2), std::invalid_argument);
}

TEST_CASE("commutator_flow") {
  const Model m = heisenberg3();
  CHECK((commutator_flow(m, {}, 0.7, v3(1, 2, 3)) - v3(1, 2, 3)).norm() == 0.0);
  CHECK((commutator_flow(m, {1}, 1.0, Vec::Zero(3)) - v3(1, 0, 0)).norm() < 1e-13);

  // Group commutator of the two frame flows: (0,0,t^2) + o(t^2); the log-log
  // slope over a dyadic sweep confirms the exponent 2.
  std::vector<double> ts, zs;
  for (int k = 3; k <= 8; ++k) {
    const double t = std::pow(2.0, -k);
    Vec q = Vec::Zero(3);
    q = commutator_flow(m, {1}, t, q);
    q = commutator_flow(m, {2}, t, q);
    q = commutator_flow(m, {1}, -t, q);
    q = commutator_flow(m, {2}, -t, q);
    CHECK(std::abs(q[2] - t * t) <= 1e-3 * t * t);
    ts.push_back(t);
    zs.push_back(q.norm());
  }
  const LineFit fit = loglog_fit(ts, zs);
  CHECK(fit.slope == Catch::Approx(2.0).margin(0.01));
}

TEST_CASE("bracket_motion first-order expansion") {
  const Model hm = heisenberg3();
  CHECK((bracket_motion(hm, {1}, Vec::Zero(2), v3(1, 2, 3)) - v3(1, 2, 3)).norm() == 0.0);

  // Slope test at s = 1e-3 for every word of depth <= 3 with a nonvanishing
  // first-order motion, on both step-2 and step-3 models.
  const double s = 1e-3;
  for (const Model& m : {heisenberg3(), engel()}) {
    std::vector<std::vector<int>> words;
    for (int a = 1; a <= 2; ++a) {
      words.push_back({a});
      for (int b = 1; b <= 2; ++b) {
        words.push_back({a, b});
        for (int c = 1; c <= 2; ++c) words.push_back({a, b, c});
      }
    }
    const Vec q0 = Vec::Zero(m.n);
    for (const auto& word : words) {
      const PolyVectorField XI = word_field(m, word);
      for (int a = 1; a <= m.h; ++a) {
        const Vec dir = poly_bracket(m.frame[a - 1], XI).eval(q0);
        Vec u = Vec::Zero(m.h);
        u[a - 1] = s;
        const Vec motion = (bracket_motion(m, word, u, q0) - q0) / s;
        INFO(m.name << " word size " << word.size() << " control " << a);
        if (dir.norm() > 1e-9) {
          CHECK((motion - dir).norm() <= 0.05 * dir.norm());
        } else {
          CHECK(motion.norm() <= 0.05);  // vanishing bracket: motion is o(s)
        }
      }
    }
  }

  // Sign fixed by the flow-composition order: word (1) with u along e2 moves
  // along [Y, X](0) = -d/dz; cross-checked against lie_bracket.
  const Vec expected = lie_bracket(frame_field(hm, 2), frame_field(hm, 1), Vec::Zero(3));
  CHECK((expected - v3(0, 0, -1)).norm() < 1e-14);
  Vec u = Vec::Zero(2);
  u[1] = 1e-3;
  const Vec motion = (bracket_motion(hm, {1}, u, Vec::Zero(3))) / 1e-3;
  CHECK((motion - expected).norm() <= 0.05);
}

TEST_CASE("default_steering_words") {
  {
    const auto words = default_steering_words(heisenberg3(), Vec::Zero(3), 2);
    REQUIRE(words.size() == 2);
    CHECK(words[0].empty());
    CHECK(words[1] == std::vector<int>{1});
  }
  {
    const auto words = default_steering_words(engel(), Vec::Zero(4), 3);
    REQUIRE(words.size() == 3);
    CHECK(words[0].empty());
    CHECK(words[1] == std::vector<int>{1});
    CHECK(words[2] == (std::vector<int>{1, 2}));
  }
}

TEST_CASE("steer: trivial target, z-target, truncation target") {
  const Model m = heisenberg3();
  const std::vector<std::vector<int>> words = {{}, {1}};
  {
    const SteerResult r = steer(m, v3(1, 2, 3), v3(1, 2, 3), words);
    CHECK(r.success);
    CHECK(r.plan.cost_bound == 0.0);
    CHECK(r.endpoint_error == 0.0);
  }
  {
    const Vec q1 = v3(0, 0, 1e-3);
    const SteerResult r = steer(m, Vec::Zero(3), q1, words);
    REQUIRE(r.success);
    CHECK(r.endpoint_error <= 1e-6);
    // Replay the assembled control path through the integrator.
    const Vec replay = endpoint(m, Vec::Zero(3), r.plan.path);
    CHECK((replay - r.plan.predicted_endpoint).norm() <= 2e-8);
    // Measured squared length stays within a modest constant of the target.
    const auto cert = steering_cost_certificate(m, Vec::Zero(3), r.plan);
    CHECK(cert.measured_sq_length <= 30.0 * 1e-3);
    CHECK(cert.bound == Catch::Approx(1e-3).epsilon(0.05));
  }
  {
    const Model tm = infinite_heisenberg_trunc(8);
    Vec q1 = Vec::Zero(17);
    q1[16] = 5e-4;  // z perturbation only
    const auto twords = default_steering_words(tm, Vec::Zero(17), 2);
    const SteerResult r = steer(tm, Vec::Zero(17), q1, twords);
    REQUIRE(r.success);
    CHECK(r.endpoint_error <= 1e-6);
  }
}

TEST_CASE("steering cost certificate over an amplitude sweep") {
  const Model m = heisenberg3();
  const std::vector<std::vector<int>> words = {{}, {1}};
  std::vector<double> scales = {1e-1, 1e-2, 1e-3};
  std::vector<double> ratios;
  for (double s : scales) {
    const SteerResult r = steer(m, Vec::Zero(3), v3(0, 0, s), words);
    REQUIRE(r.success);
    const auto cert = steering_cost_certificate(m, Vec::Zero(3), r.plan);
    CHECK(cert.bound > 0);
    ratios.push_back(cert.ratio);
  }
  const LineFit fit = loglog_fit(scales, ratios);
  INFO("ratios " << ratios[0] << " " << ratios[1] << " " << ratios[2]);
  CHECK(std::abs(fit.slope) <= 0.1);  // no growth trend

  const CostCertificate zero = steering_cost_certificate(m, Vec::Zero(3), SteeringPlan{});
  CHECK(zero.measured_sq_length == 0.0);
  CHECK(zero.bound == 0.0);
  CHECK(zero.ratio == 1.0);
}
