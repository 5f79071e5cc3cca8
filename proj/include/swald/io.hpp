#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "swald/closed_testing.hpp"
#include "swald/error.hpp"
#include "swald/estimands.hpp"
#include "swald/intersection_tests.hpp"

namespace swald {

using nlohmann::json;

namespace detail {

inline Eigen::VectorXd vector_from_json(const json& j, const char* field) {
  if (!j.is_array()) throw ConfigError(std::string(field) + ": expected an array");
  Eigen::VectorXd v(Eigen::Index(j.size()));
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (!j[std::size_t(k)].is_number())
      throw ConfigError(std::string(field) + ": expected numbers");
    v[k] = j[std::size_t(k)].get<double>();
  }
  return v;
}

inline Eigen::MatrixXd matrix_from_json(const json& j, const char* field) {
  if (!j.is_array() || j.empty())
    throw ConfigError(std::string(field) + ": expected a 2-D array");
  const Eigen::Index rows = Eigen::Index(j.size());
  Eigen::MatrixXd m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::VectorXd row = vector_from_json(j[std::size_t(r)], field);
    if (r == 0)
      m.resize(rows, row.size());
    else if (row.size() != m.cols())
      throw ConfigError(std::string(field) + ": ragged rows");
    m.row(r) = row;
  }
  return m;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) arr.push_back(v[k]);
  return arr;
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) arr.push_back(vector_to_json(m.row(r)));
  return arr;
}

}  // namespace detail

// Fixture fields are frozen: n, theta_hat, covariance, covariance_kind,
// deltas, weights, alpha, draws, seed. covariance_kind disambiguates the
// asymptotic matrix (of sqrt(n)-scaled estimates) from the covariance of the
// estimates themselves.
inline EstimateSet estimate_set_from_json(const json& j) {
  for (const char* field : {"n", "theta_hat", "covariance", "covariance_kind"})
    if (!j.contains(field))
      throw ConfigError(std::string("estimate input: missing field ") + field);
  const long n = j["n"].get<long>();
  if (n < 1) throw ConfigError("estimate input: n must be positive");
  const Eigen::VectorXd theta = detail::vector_from_json(j["theta_hat"], "theta_hat");
  Eigen::MatrixXd cov = detail::matrix_from_json(j["covariance"], "covariance");
  const std::string kind = j["covariance_kind"].get<std::string>();
  if (kind == "per_estimate")
    cov *= double(n);
  else if (kind != "asymptotic")
    throw ConfigError("covariance_kind must be 'asymptotic' or 'per_estimate'");
  std::vector<std::string> names;
  if (j.contains("names")) names = j["names"].get<std::vector<std::string>>();
  return EstimateSet(n, theta, SymMatrix(cov), std::nullopt, names);
}

// Influence CSV: header row of hypothesis names, then one row per subject.
inline std::pair<Eigen::MatrixXd, std::vector<std::string>> influence_from_csv(
    std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("influence CSV: empty stream");
  std::vector<std::string> names;
  {
    std::stringstream header(line);
    std::string cellv;
    while (std::getline(header, cellv, ',')) names.push_back(cellv);
  }
  if (names.empty()) throw ConfigError("influence CSV: empty header");
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cellv;
    std::size_t cols = 0;
    while (std::getline(ss, cellv, ',')) {
      try {
        values.push_back(std::stod(cellv));
      } catch (const std::exception&) {
        throw ConfigError("influence CSV: non-numeric cell '" + cellv + "'");
      }
      ++cols;
    }
    if (cols != names.size()) throw ConfigError("influence CSV: ragged row");
    ++rows;
  }
  if (rows < 2) throw TooFewRowsError("influence CSV: need at least 2 rows");
  Eigen::MatrixXd m(Eigen::Index(rows), Eigen::Index(names.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = values[std::size_t(r) * names.size() + std::size_t(c)];
  return {m, names};
}

struct AnalysisInput {
  EstimateSet est;
  Eigen::VectorXd deltas;
  Eigen::VectorXd weights;
  double alpha = 0.025;
  long draws = 10000;
  std::optional<std::uint64_t> seed;
  // covariance echo for round-tripping
  Eigen::MatrixXd covariance;
  std::string covariance_kind;
};

inline AnalysisInput analysis_input_from_json(const json& j) {
  EstimateSet est = estimate_set_from_json(j);
  const Eigen::Index dim = est.size();
  AnalysisInput input{std::move(est),
                      Eigen::VectorXd::Zero(dim),
                      Eigen::VectorXd::Constant(dim, 1.0 / double(dim)),
                      0.025,
                      10000,
                      std::nullopt,
                      detail::matrix_from_json(j["covariance"], "covariance"),
                      j["covariance_kind"].get<std::string>()};
  if (j.contains("deltas")) input.deltas = detail::vector_from_json(j["deltas"], "deltas");
  if (j.contains("weights"))
    input.weights = detail::vector_from_json(j["weights"], "weights");
  if (j.contains("alpha")) input.alpha = j["alpha"].get<double>();
  if (j.contains("draws")) input.draws = j["draws"].get<long>();
  if (j.contains("seed")) input.seed = j["seed"].get<std::uint64_t>();
  if (input.deltas.size() != dim || input.weights.size() != dim)
    throw ConfigError("analysis input: deltas/weights length disagrees with theta_hat");
  return input;
}

inline json analysis_echo_json(const AnalysisInput& input) {
  json j;
  j["n"] = input.est.n();
  j["theta_hat"] = detail::vector_to_json(input.est.theta_hat());
  j["covariance"] = detail::matrix_to_json(input.covariance);
  j["covariance_kind"] = input.covariance_kind;
  j["deltas"] = detail::vector_to_json(input.deltas);
  j["weights"] = detail::vector_to_json(input.weights);
  j["alpha"] = input.alpha;
  j["draws"] = input.draws;
  if (input.seed) j["seed"] = *input.seed;
  j["names"] = input.est.names();
  return j;
}

inline json test_result_to_json(const TestResult& res) {
  json j;
  j["statistic"] = res.statistic;
  j["p_value"] = res.p_value;
  j["method"] = method_name(res.method);
  if (res.mc) {
    j["draws"] = res.mc->draws;
    j["seed"] = res.mc->seed;
  }
  if (res.mc_std_error) j["mc_std_error"] = *res.mc_std_error;
  return j;
}

inline json report_to_json(const ClosedTestReport& report) {
  json j;
  j["alpha"] = report.alpha;
  j["method"] = report.method == ClosureMethod::sw ? "sw" : "minp";
  j["names"] = report.names;
  json subsets = json::object();
  for (const auto& [mask, res] : report.subset_results)
    subsets[subset_key(mask)] = test_result_to_json(res);
  j["subsets"] = subsets;
  j["adjusted_p"] = detail::vector_to_json(report.adjusted_p);
  json rejected = json::array();
  for (bool r : report.rejected) rejected.push_back(r);
  j["rejected"] = rejected;
  j["consonant"] = report.consonant;
  return j;
}

// Human-readable closure table grouped 1-way / 2-way / ... / J-way.
inline std::string report_table(const ClosedTestReport& report) {
  std::ostringstream out;
  out << "Closed testing ("
      << (report.method == ClosureMethod::sw ? "signed Wald" : "min-p")
      << "), alpha = " << report.alpha << "\n\n";
  out << "Adjusted p-values:\n";
  char buf[160];
  for (Eigen::Index k = 0; k < report.adjusted_p.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "  %-10s %.6f%s\n", report.names[std::size_t(k)].c_str(),
                  report.adjusted_p[k],
                  report.rejected[std::size_t(k)] ? "  [rejected]" : "");
    out << buf;
  }
  out << "\nRaw p-values for intersection hypotheses:\n";
  for (int size = 1; size <= int(report.j); ++size) {
    out << " " << size << "-way intersections\n";
    for (const auto& [mask, res] : report.subset_results) {
      if (std::popcount(mask) != size) continue;
      std::string label = "{";
      bool first = true;
      for (int index : subset_indices(mask)) {
        if (!first) label += ",";
        label += report.names[std::size_t(index)];
        first = false;
      }
      label += "}";
      std::snprintf(buf, sizeof(buf), "  %-28s statistic = %10.5f   p = %.6f\n",
                    label.c_str(), res.statistic, res.p_value);
      out << buf;
    }
  }
  out << "\nConsonant: " << (report.consonant ? "yes" : "no") << "\n";
  return out.str();
}

}  // namespace swald
