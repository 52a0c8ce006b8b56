#ifndef SRLAB_IO_HPP
#define SRLAB_IO_HPP

/**
 * @file io.hpp
 * @brief CSV/JSON serialization of paths, plans and reports.
 *
 * Doubles are printed with %.17g so identical inputs give byte-identical
 * files. Writes go through a temp file + rename.
 */

#include "srlab/brackets.hpp"
#include "srlab/distance.hpp"
#include "srlab/dynamics.hpp"
#include "srlab/hamiltonian.hpp"
#include "srlab/products.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace srlab {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    require(out.good(), "cannot open for writing: " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string csv_of(const Mat& data, const std::vector<std::string>& header) {
  std::string out;
  for (size_t i = 0; i < header.size(); ++i) {
    out += (i ? "," : "") + header[i];
  }
  out += "\n";
  for (int r = 0; r < data.rows(); ++r) {
    for (int c = 0; c < data.cols(); ++c) {
      if (c) out += ",";
      out += fmt_double(data(r, c));
    }
    out += "\n";
  }
  return out;
}

inline std::string trajectory_csv(const Trajectory& tr) {
  Mat data(tr.states.rows(), tr.states.cols() + 1);
  data.col(0) = tr.times;
  data.rightCols(tr.states.cols()) = tr.states;
  std::vector<std::string> header{"t"};
  for (int i = 0; i < tr.states.cols(); ++i) header.push_back("q" + std::to_string(i));
  return csv_of(data, header);
}

inline std::string control_csv(const ControlPath& u) {
  const int m = u.steps();
  Mat data(m, u.controls() + 1);
  for (int k = 0; k < m; ++k) data(k, 0) = static_cast<double>(k) / m;
  data.rightCols(u.controls()) = u.values;
  std::vector<std::string> header{"t"};
  for (int i = 0; i < u.controls(); ++i) header.push_back("u" + std::to_string(i));
  return csv_of(data, header);
}

inline std::string phase_csv(const PhaseTrajectory& tr) {
  const int rows = static_cast<int>(tr.times.size());
  Mat data(rows, 1 + tr.q.cols() + tr.p.cols() + tr.u.cols());
  data.col(0) = tr.times;
  data.middleCols(1, tr.q.cols()) = tr.q;
  data.middleCols(1 + tr.q.cols(), tr.p.cols()) = tr.p;
  data.rightCols(tr.u.cols()) = tr.u;
  std::vector<std::string> header{"t"};
  for (int i = 0; i < tr.q.cols(); ++i) header.push_back("q" + std::to_string(i));
  for (int i = 0; i < tr.p.cols(); ++i) header.push_back("p" + std::to_string(i));
  for (int i = 0; i < tr.u.cols(); ++i) header.push_back("u" + std::to_string(i));
  return csv_of(data, header);
}

inline nlohmann::json to_json(const Vec& v) {
  nlohmann::json j = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

inline nlohmann::json to_json(const ControlPath& u) {
  nlohmann::json j;
  j["m"] = u.steps();
  j["h"] = u.controls();
  nlohmann::json rows = nlohmann::json::array();
  for (int k = 0; k < u.steps(); ++k) rows.push_back(to_json(Vec(u.values.row(k).transpose())));
  j["values"] = rows;
  return j;
}

inline nlohmann::json to_json(const Trajectory& tr) {
  nlohmann::json j;
  j["times"] = to_json(tr.times);
  nlohmann::json rows = nlohmann::json::array();
  for (int k = 0; k < tr.states.rows(); ++k) {
    rows.push_back(to_json(Vec(tr.states.row(k).transpose())));
  }
  j["states"] = rows;
  return j;
}

inline nlohmann::json to_json(const GrowthVector& g) {
  return nlohmann::json{{"depth", g.depth}, {"ranks", g.ranks}, {"satisfied", g.satisfied}};
}

inline nlohmann::json to_json(const SteeringPlan& plan) {
  nlohmann::json j;
  j["words"] = plan.words;
  nlohmann::json amps = nlohmann::json::array();
  for (const auto& a : plan.amplitudes) amps.push_back(to_json(a));
  j["amplitudes"] = amps;
  j["cost_bound"] = plan.cost_bound;
  j["predicted_endpoint"] = to_json(plan.predicted_endpoint);
  j["arc_count"] = plan.arcs.size();
  return j;
}

inline nlohmann::json to_json(const SolverDiagnostics& d) {
  return nlohmann::json{{"iterations", d.iterations},
                        {"penalty_history", d.penalty_history},
                        {"final_grad_norm", d.final_grad_norm},
                        {"endpoint_error", d.endpoint_error},
                        {"message", d.message}};
}

inline nlohmann::json to_json(const DistanceResult& r) {
  nlohmann::json j;
  j["success"] = r.success;
  j["distance"] = r.distance;
  j["endpoint_error"] = r.endpoint_error;
  j["method"] = r.method;
  j["diagnostics"] = to_json(r.diag);
  return j;
}

inline nlohmann::json to_json(const ExtremalCertificate& c) {
  nlohmann::json j;
  j["class"] = to_string(c.cls);
  j["normal_residual"] = c.normal_residual;
  j["abnormal_sigma_min"] = c.abnormal_sigma_min;
  j["gram_rank"] = c.gram_rank;
  j["gram_spectrum"] = to_json(c.gram_spectrum);
  if (c.p1.size() > 0) j["p1"] = to_json(c.p1);
  return j;
}

inline nlohmann::json to_json(const OrbitProfile& p) {
  nlohmann::json j;
  j["N"] = p.N_values;
  j["partial_sums"] = p.partial_sums;
  j["verdict"] = p.verdict;
  j["fitted_law"] = p.fitted_law;
  j["increment_exponent"] = p.increment_exponent;
  j["increment_r2"] = p.increment_r2;
  j["log_law_r2"] = p.log_law_r2;
  return j;
}

inline std::string orbit_csv(const OrbitProfile& p) {
  Mat data(p.N_values.size(), 2);
  for (size_t i = 0; i < p.N_values.size(); ++i) {
    data(i, 0) = p.N_values[i];
    data(i, 1) = p.partial_sums[i];
  }
  return csv_of(data, {"N", "partial_sum"});
}

inline std::string spectrum_csv(const SpectrumTable& t) {
  if (t.rows.empty()) return "N,sigma_min,rank\n";
  const int k = static_cast<int>(t.rows.front().leading.size());
  std::vector<std::string> header{"N", "sigma_min", "rank"};
  for (int i = 0; i < k; ++i) header.push_back("lead" + std::to_string(i));
  for (int i = 0; i < k; ++i) header.push_back("trail" + std::to_string(i));
  Mat data(t.rows.size(), 3 + 2 * k);
  for (size_t r = 0; r < t.rows.size(); ++r) {
    data(r, 0) = t.rows[r].N;
    data(r, 1) = t.rows[r].sigma_min;
    data(r, 2) = t.rows[r].rank;
    for (int i = 0; i < k; ++i) {
      data(r, 3 + i) = t.rows[r].leading[i];
      data(r, 3 + k + i) = t.rows[r].trailing[i];
    }
  }
  return csv_of(data, header);
}

}  // namespace srlab

#endif  // SRLAB_IO_HPP
