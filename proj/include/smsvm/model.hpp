#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "smsvm/objective.hpp"

namespace smsvm {

constexpr int kModelSchemaVersion = 1;

struct Model {
  Vector w;
  Standardizer standardizer;
  bool bias_augmented = true;
  Hyperparams hyperparams;
  std::string solver_tag = "smsvm";  // smsvm | sgd-nesterov | sgd-adadelta | sgd-adam

  Index raw_features() const { return standardizer.cols(); }

  void validate() const {
    const Index expected = standardizer.cols() + (bias_augmented ? 1 : 0);
    if (w.size() != expected) {
      throw std::invalid_argument("model: weight dimension inconsistent with standardizer");
    }
  }
};

// sign(w^T x~) with sign(0) = +1; x is a raw feature vector.
inline double predict(const Model& m, const Vector& x) {
  if (x.size() != m.raw_features()) throw std::invalid_argument("predict: dimension mismatch");
  double score = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    score += m.w[j] * (x[j] - m.standardizer.means[j]) / m.standardizer.stds[j];
  }
  if (m.bias_augmented) score += m.w[x.size()];
  return score >= 0.0 ? 1.0 : -1.0;
}

inline double accuracy(const Model& m, const Dataset& d) {
  Index correct = 0;
  for (Index i = 0; i < d.rows(); ++i) {
    if (predict(m, d.X.row(i).transpose()) == d.y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(d.rows());
}

namespace detail {

// 17 significant digits round-trip a double exactly
inline std::string decimal17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_decimal(const std::string& s) {
  double v = 0;
  if (!smsvm::detail::parse_double(s, v)) throw std::runtime_error("model: bad decimal string '" + s + "'");
  return v;
}

}  // namespace detail

inline void save_model(const Model& m, const std::string& path) {
  m.validate();
  nlohmann::ordered_json j;
  j["schema_version"] = kModelSchemaVersion;
  j["solver_tag"] = m.solver_tag;
  j["bias_augmented"] = m.bias_augmented;
  j["hyperparams"] = {
      {"lambda", m.hyperparams.lambda}, {"mu", m.hyperparams.mu},
      {"alpha0", m.hyperparams.alpha0}, {"alpha_min", m.hyperparams.alpha_min},
      {"beta", m.hyperparams.beta},     {"eta", m.hyperparams.eta},
      {"c1", m.hyperparams.c1},         {"s_min", m.hyperparams.s_min},
  };
  j["means"] = nlohmann::ordered_json::array();
  j["stds"] = nlohmann::ordered_json::array();
  for (Index t = 0; t < m.standardizer.cols(); ++t) {
    j["means"].push_back(detail::decimal17(m.standardizer.means[t]));
    j["stds"].push_back(detail::decimal17(m.standardizer.stds[t]));
  }
  j["weights"] = nlohmann::ordered_json::array();
  for (Index t = 0; t < m.w.size(); ++t) j["weights"].push_back(detail::decimal17(m.w[t]));

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("model parse error at byte " + std::to_string(e.byte) + " in " + path +
                             ": " + e.what());
  }

  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
    throw std::runtime_error("model: missing schema_version");
  }
  const int version = j["schema_version"].get<int>();
  if (version != kModelSchemaVersion) {
    throw std::runtime_error("model: unsupported schema version " + std::to_string(version) +
                             " (expected " + std::to_string(kModelSchemaVersion) + ")");
  }

  Model m;
  m.solver_tag = j.at("solver_tag").get<std::string>();
  m.bias_augmented = j.at("bias_augmented").get<bool>();
  const auto& hp = j.at("hyperparams");
  m.hyperparams.lambda = hp.at("lambda").get<double>();
  m.hyperparams.mu = hp.at("mu").get<double>();
  m.hyperparams.alpha0 = hp.at("alpha0").get<double>();
  m.hyperparams.alpha_min = hp.at("alpha_min").get<double>();
  m.hyperparams.beta = hp.at("beta").get<double>();
  m.hyperparams.eta = hp.at("eta").get<double>();
  m.hyperparams.c1 = hp.at("c1").get<double>();
  m.hyperparams.s_min = hp.at("s_min").get<double>();

  const auto& means = j.at("means");
  const auto& stds = j.at("stds");
  if (means.size() != stds.size()) throw std::runtime_error("model: means/stds length mismatch");
  m.standardizer.means = Vector(static_cast<Index>(means.size()));
  m.standardizer.stds = Vector(static_cast<Index>(stds.size()));
  for (Index t = 0; t < m.standardizer.means.size(); ++t) {
    m.standardizer.means[t] = detail::parse_decimal(means[static_cast<std::size_t>(t)].get<std::string>());
    m.standardizer.stds[t] = detail::parse_decimal(stds[static_cast<std::size_t>(t)].get<std::string>());
  }
  const auto& weights = j.at("weights");
  m.w = Vector(static_cast<Index>(weights.size()));
  for (Index t = 0; t < m.w.size(); ++t) {
    m.w[t] = detail::parse_decimal(weights[static_cast<std::size_t>(t)].get<std::string>());
  }
  m.validate();
  return m;
}

}  // namespace smsvm
