#ifndef SRLAB_CATALOG_HPP
#define SRLAB_CATALOG_HPP

/**
 * @file catalog.hpp
 * @brief Built-in model families and the custom-model JSON loader.
 *
 * Conventions:
 *  - heisenberg3: frame X = d/dx - (y/2) d/dz, Y = d/dy + (x/2) d/dz on
 *    coordinates (x,y,z), orthonormal metric. Growth vector (2,1).
 *  - heisenberg_product(N): N independent copies on R^{3N}, block layout
 *    (x_1,y_1,z_1, ..., x_N,y_N,z_N).
 *  - engel: X1 = d/dx, X2 = d/dy + x d/dz + (x^2/2) d/dw on (x,y,z,w).
 *    Growth vector (2,1,1).
 *  - infinite_heisenberg_trunc(N): coordinates (x_1,y_1,...,x_N,y_N,z) with
 *    all N Heisenberg pairs sharing the single z; codimension 1 for any N.
 */

#include "srlab/model.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace srlab {

inline Model heisenberg3() {
  std::vector<PolyVectorField> f(2, PolyVectorField(3));
  // X = (1, 0, -y/2)
  f[0].component(0).add_term(1.0, {0, 0, 0});
  f[0].component(2).add_term(-0.5, {0, 1, 0});
  // Y = (0, 1, x/2)
  f[1].component(1).add_term(1.0, {0, 0, 0});
  f[1].component(2).add_term(0.5, {1, 0, 0});
  return frame_model("heisenberg3", std::move(f));
}

inline Model heisenberg_product(int N) {
  require(N >= 1, "heisenberg_product: N >= 1");
  const int n = 3 * N;
  std::vector<PolyVectorField> f(2 * N, PolyVectorField(n));
  auto e = [n](int idx) {
    std::vector<int> v(n, 0);
    v[idx] = 1;
    return v;
  };
  for (int b = 0; b < N; ++b) {
    const int x = 3 * b, y = 3 * b + 1, z = 3 * b + 2;
    f[2 * b].component(x).add_term(1.0, std::vector<int>(n, 0));
    f[2 * b].component(z).add_term(-0.5, e(y));
    f[2 * b + 1].component(y).add_term(1.0, std::vector<int>(n, 0));
    f[2 * b + 1].component(z).add_term(0.5, e(x));
  }
  return frame_model("heisenberg_product(" + std::to_string(N) + ")", std::move(f));
}

inline Model engel() {
  std::vector<PolyVectorField> f(2, PolyVectorField(4));
  // X1 = (1, 0, 0, 0)
  f[0].component(0).add_term(1.0, {0, 0, 0, 0});
  // X2 = (0, 1, x, x^2/2)
  f[1].component(1).add_term(1.0, {0, 0, 0, 0});
  f[1].component(2).add_term(1.0, {1, 0, 0, 0});
  f[1].component(3).add_term(0.5, {2, 0, 0, 0});
  return frame_model("engel", std::move(f));
}

inline Model infinite_heisenberg_trunc(int N) {
  require(N >= 1, "infinite_heisenberg_trunc: N >= 1");
  const int n = 2 * N + 1;
  const int z = 2 * N;
  std::vector<PolyVectorField> f(2 * N, PolyVectorField(n));
  auto e = [n](int idx) {
    std::vector<int> v(n, 0);
    v[idx] = 1;
    return v;
  };
  for (int b = 0; b < N; ++b) {
    const int x = 2 * b, y = 2 * b + 1;
    f[2 * b].component(x).add_term(1.0, std::vector<int>(n, 0));
    f[2 * b].component(z).add_term(-0.5, e(y));
    f[2 * b + 1].component(y).add_term(1.0, std::vector<int>(n, 0));
    f[2 * b + 1].component(z).add_term(0.5, e(x));
  }
  return frame_model("infinite_heisenberg_trunc(" + std::to_string(N) + ")", std::move(f));
}

/// Custom model from a JSON definition:
/// {
///   "name": "...", "n": 3, "h": 2,
///   "fields": [ field, ... ],            // h entries
///   "metric": [[...], ...]               // optional constant h x h SPD
/// }
/// where field = [ component, ... ] (n entries) and component is a list of
/// monomials {"c": coeff, "e": [exponents, length n]}.
inline Model custom_model(const nlohmann::json& def) {
  require(def.contains("n") && def.contains("h") && def.contains("fields"),
          "custom model: needs n, h, fields");
  const int n = def.at("n").get<int>();
  const int h = def.at("h").get<int>();
  require(n >= 1 && h >= 1, "custom model: dimensions must be positive");
  const auto& jf = def.at("fields");
  require(jf.is_array() && static_cast<int>(jf.size()) == h, "custom model: fields must list h fields");
  std::vector<PolyVectorField> fields;
  fields.reserve(h);
  for (const auto& field : jf) {
    require(field.is_array() && static_cast<int>(field.size()) == n,
            "custom model: each field needs n components");
    PolyVectorField F(n);
    for (int i = 0; i < n; ++i) {
      for (const auto& term : field.at(i)) {
        const double c = term.at("c").get<double>();
        const auto e = term.at("e").get<std::vector<int>>();
        require(static_cast<int>(e.size()) == n, "custom model: exponent arity");
        F.component(i).add_term(c, e);
      }
    }
    fields.push_back(std::move(F));
  }
  Mat g;
  if (def.contains("metric")) {
    const auto rows = def.at("metric").get<std::vector<std::vector<double>>>();
    require(static_cast<int>(rows.size()) == h, "custom model: metric rows");
    g.resize(h, h);
    for (int i = 0; i < h; ++i) {
      require(static_cast<int>(rows[i].size()) == h, "custom model: metric cols");
      for (int j = 0; j < h; ++j) g(i, j) = rows[i][j];
    }
  }
  std::string name = def.value("name", std::string("custom"));
  return frame_model(std::move(name), std::move(fields), g);
}

inline Model custom_model_from_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "custom model: cannot open " + path);
  nlohmann::json def;
  in >> def;
  return custom_model(def);
}

/// Catalog entry addressed by name + parameters, e.g.
/// {"name":"heisenberg_product","N":3} or {"name":"custom","path":"m.json"}.
inline Model make_model(const nlohmann::json& spec) {
  const std::string name = spec.at("name").get<std::string>();
  if (name == "heisenberg3") return heisenberg3();
  if (name == "heisenberg_product") return heisenberg_product(spec.at("N").get<int>());
  if (name == "engel") return engel();
  if (name == "infinite_heisenberg_trunc") return infinite_heisenberg_trunc(spec.at("N").get<int>());
  if (name == "custom") {
    if (spec.contains("definition")) return custom_model(spec.at("definition"));
    return custom_model_from_file(spec.at("path").get<std::string>());
  }
  throw std::invalid_argument("make_model: unknown model name '" + name + "'");
}

/// Small default catalog used by verification sweeps.
inline std::vector<Model> default_catalog() {
  std::vector<Model> out;
  out.push_back(heisenberg3());
  out.push_back(heisenberg_product(2));
  out.push_back(heisenberg_product(3));
  out.push_back(engel());
  out.push_back(infinite_heisenberg_trunc(4));
  return out;
}

}  // namespace srlab

#endif  // SRLAB_CATALOG_HPP
