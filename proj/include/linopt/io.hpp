#pragma once

// JSON views of the library's value types. Matrices are row-major nested
// arrays; complex entries are [re, im] pairs.

#include <json.hpp>

#include "bounds.hpp"
#include "core.hpp"
#include "junta.hpp"
#include "optimizer.hpp"
#include "risk.hpp"
#include "training.hpp"

namespace linopt {

using Json = nlohmann::json;

inline Json to_json_value(const RealVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Json to_json_value(const RealMatrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json_value(RealVector(m.row(i).transpose())));
  return out;
}

inline Json to_json_value(const ComplexMatrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    out.push_back(std::move(row));
  }
  return out;
}

inline RealVector real_vector_from_json(const Json& j) {
  RealVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

inline RealMatrix real_matrix_from_json(const Json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  RealMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    detail::require_dims(static_cast<Eigen::Index>(j[r].size()) == cols, "ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline ComplexMatrix complex_matrix_from_json(const Json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  ComplexMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    detail::require_dims(static_cast<Eigen::Index>(j[r].size()) == cols, "ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = Complex(j[r][c][0].get<double>(), j[r][c][1].get<double>());
  }
  return m;
}

inline Json to_json_value(const JuntaSpec& s) {
  return {{"M", s.mode_count}, {"J", s.modes}, {"inner", to_json_value(complexify(s.inner).matrix())}};
}

inline JuntaSpec junta_spec_from_json(const Json& j) {
  JuntaSpec s;
  s.mode_count = j.at("M").get<int>();
  s.modes = j.at("J").get<ModeSet>();
  s.inner = realify(ComplexTransfer(complex_matrix_from_json(j.at("inner"))));
  return s;
}

inline Json to_json_value(const TrainingSet& s) {
  Json states = Json::array();
  for (const auto& x : s.states) states.push_back(to_json_value(x.components()));
  Json out = {{"scheme", to_string(s.scheme)},
              {"M", s.mode_count},
              {"E", s.energy},
              {"T", s.size()},
              {"seed", s.seed},
              {"states", std::move(states)}};
  if (s.parent) out["parent"] = to_json_value(*s.parent);
  return out;
}

inline TrainingSet training_set_from_json(const Json& j) {
  TrainingSet s;
  s.scheme = parse_scheme(j.at("scheme").get<std::string>());
  s.mode_count = j.at("M").get<int>();
  s.energy = j.at("E").get<double>();
  s.seed = j.value("seed", std::uint64_t{0});
  for (const auto& x : j.at("states")) {
    s.states.emplace_back(real_vector_from_json(x));
    detail::require_dims(s.states.back().mode_count() == s.mode_count, "state has the wrong size");
  }
  if (j.contains("parent")) s.parent = real_vector_from_json(j.at("parent"));
  return s;
}

inline Json to_json_value(const RiskReport& r) {
  Json out = {{"value", r.value}, {"per_term", r.per_term}, {"scheme", to_string(r.scheme)}};
  if (r.gradient) out["gradient"] = to_json_value(*r.gradient);
  if (r.standard_error) out["stderr"] = *r.standard_error;
  if (r.shots) out["shots"] = *r.shots;
  return out;
}

inline Json to_json_value(const OptimResult& r) {
  Json trajectory = Json::array();
  for (const auto& p : r.trajectory)
    trajectory.push_back({{"iteration", p.iteration}, {"risk", p.risk}, {"residual", p.residual}});
  return {{"g_final", to_json_value(r.g_final.matrix())},
          {"risk_final", r.risk_final},
          {"unitarity_residual", r.unitarity_residual},
          {"converged", r.converged},
          {"iterations_used", r.iterations_used},
          {"restart", r.restart},
          {"restarts_run", r.restarts_run},
          {"trajectory", std::move(trajectory)}};
}

inline Json to_json_value(const JuntaReport& r) {
  Json stages = Json::array();
  for (const auto& s : r.stages) {
    stages.push_back({{"stage", s.stage},
                      {"training_size", s.training_size},
                      {"energy", s.energy},
                      {"candidates", s.candidates},
                      {"candidate_minima", s.candidate_minima},
                      {"minimum", s.minimum},
                      {"selected", s.selected},
                      {"shortcut_checked", s.shortcut_checked},
                      {"shortcut_taken", s.shortcut_taken}});
  }
  return {{"junta", r.junta},
          {"stages", std::move(stages)},
          {"learned", to_json_value(r.learned.matrix())},
          {"final_risk", r.final_risk},
          {"energy_spent", r.energy_spent},
          {"terminated_stage", r.terminated_stage}};
}

inline Json to_json_value(const BoundReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"T", row.size},
                    {"bound", row.bound},
                    {"erm_gaps", row.erm_gaps},
                    {"uniform_gaps", row.uniform_gaps},
                    {"median_erm_gap", row.median_erm_gap},
                    {"median_uniform_gap", row.median_uniform_gap},
                    {"violations", row.violations},
                    {"failures", row.failures}});
  return {{"scheme", to_string(r.scheme)},
          {"M", r.mode_count},
          {"E", r.energy},
          {"delta", r.delta},
          {"rows", std::move(rows)},
          {"violation_fraction", r.violation_fraction},
          {"bound_value", r.bound_value}};
}

}  // namespace linopt
