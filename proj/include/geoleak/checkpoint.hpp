#pragma once

#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "geoleak/error.hpp"
#include "geoleak/model.hpp"
#include "geoleak/pipeline.hpp"

namespace geoleak {

// Everything needed to resume or reproduce a run: architecture, weights,
// optimizer state, normalization, and the pipeline settings that shaped
// the training data. JSON with full-precision doubles; save -> load ->
// forward is bit-identical.
struct Checkpoint {
  ModelConfig model;
  ModelParams params;
  AdamState adam;
  NormalizationBounds norm;
  std::map<std::string, std::string> pipeline_meta;
};

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json j;
  j["shape"] = {m.rows(), m.cols()};
  auto& data = j["data"] = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return j;
}

inline void matrix_from_json(const nlohmann::json& j, const std::string& name,
                             Eigen::MatrixXd& m) {
  if (!j.contains("shape") || !j.contains("data"))
    throw errors::io("checkpoint array '" + name + "' missing shape/data");
  const auto rows = j["shape"][0].get<Eigen::Index>();
  const auto cols = j["shape"][1].get<Eigen::Index>();
  if (rows != m.rows() || cols != m.cols()) {
    throw errors::config_mismatch(
        "checkpoint array '" + name + "' has shape (" + std::to_string(rows) +
        "," + std::to_string(cols) + "), model expects (" +
        std::to_string(m.rows()) + "," + std::to_string(m.cols()) + ")");
  }
  const auto& data = j["data"];
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw errors::io("checkpoint array '" + name + "' has wrong length");
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++].get<double>();
}

inline nlohmann::json params_to_json(const ModelParams& p) {
  nlohmann::json j = nlohmann::json::object();
  p.for_each_array([&](const std::string& name, const Eigen::MatrixXd& m) {
    j[name] = matrix_to_json(m);
  });
  return j;
}

inline void params_from_json(const nlohmann::json& j, ModelParams& p) {
  p.for_each_array([&](const std::string& name, Eigen::MatrixXd& m) {
    if (!j.contains(name))
      throw errors::io("checkpoint missing parameter array '" + name + "'");
    matrix_from_json(j[name], name, m);
  });
}

}  // namespace detail

inline nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  return nlohmann::json{
      {"n_ts", cfg.n_ts},           {"n_cnn", cfg.n_cnn},
      {"w_cnn", cfg.w_cnn},         {"n_g", cfg.n_g},
      {"n_f", cfg.n_f},             {"k", cfg.k},
      {"learning_rate", cfg.learning_rate},
      {"adam_beta1", cfg.adam_beta1},
      {"adam_beta2", cfg.adam_beta2},
      {"adam_eps", cfg.adam_eps},
      {"max_epochs", cfg.max_epochs},
      {"patience", cfg.patience},
      {"seed", cfg.seed}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.n_ts = j.at("n_ts").get<int>();
  cfg.n_cnn = j.at("n_cnn").get<int>();
  cfg.w_cnn = j.at("w_cnn").get<int>();
  cfg.n_g = j.at("n_g").get<std::vector<int>>();
  cfg.n_f = j.at("n_f").get<int>();
  cfg.k = j.at("k").get<int>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.adam_beta1 = j.at("adam_beta1").get<double>();
  cfg.adam_beta2 = j.at("adam_beta2").get<double>();
  cfg.adam_eps = j.at("adam_eps").get<double>();
  cfg.max_epochs = j.at("max_epochs").get<int>();
  cfg.patience = j.at("patience").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  nlohmann::json j;
  j["format"] = "geoleak-checkpoint";
  j["version"] = 1;
  j["model_config"] = model_config_to_json(ck.model);
  j["normalization"] = {{"lat_min", ck.norm.lat_min},
                        {"lat_max", ck.norm.lat_max},
                        {"lon_min", ck.norm.lon_min},
                        {"lon_max", ck.norm.lon_max}};
  j["pipeline"] = ck.pipeline_meta;
  j["params"] = detail::params_to_json(ck.params);
  j["adam"] = {{"timestep", ck.adam.timestep},
               {"m", detail::params_to_json(ck.adam.m)},
               {"v", detail::params_to_json(ck.adam.v)}};
  std::ofstream out(path);
  if (!out) throw errors::io("cannot write checkpoint: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw errors::io("write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw errors::io("cannot open checkpoint: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw errors::io("checkpoint is not valid JSON: " + path);
  if (!j.contains("format") || j["format"] != "geoleak-checkpoint" ||
      !j.contains("version") || j["version"].get<int>() != 1) {
    throw errors::io("unsupported checkpoint format in " + path);
  }
  Checkpoint ck;
  ck.model = model_config_from_json(j.at("model_config"));
  ck.model.validate();
  const auto& n = j.at("normalization");
  ck.norm = NormalizationBounds{n.at("lat_min").get<double>(),
                                n.at("lat_max").get<double>(),
                                n.at("lon_min").get<double>(),
                                n.at("lon_max").get<double>()};
  if (j.contains("pipeline")) {
    for (const auto& [k, v] : j.at("pipeline").items())
      ck.pipeline_meta[k] = v.get<std::string>();
  }
  ck.params = zero_params(ck.model);
  detail::params_from_json(j.at("params"), ck.params);
  ck.adam = make_adam_state(ck.model);
  ck.adam.timestep = j.at("adam").at("timestep").get<long>();
  detail::params_from_json(j.at("adam").at("m"), ck.adam.m);
  detail::params_from_json(j.at("adam").at("v"), ck.adam.v);
  return ck;
}

}  // namespace geoleak
