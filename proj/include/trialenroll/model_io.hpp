#pragma once

// Self-describing model documents for the DCN and the logistic baseline.

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "trialenroll/evaluation.hpp"
#include "trialenroll/features.hpp"
#include "trialenroll/model.hpp"

namespace trialenroll {

enum class ModelKind { Dcn, Logistic };

struct SavedModel {
  ModelKind kind = ModelKind::Dcn;
  std::optional<ModelParams> dcn;
  std::optional<LogisticModel> logistic;
  std::optional<FeatureSchema> schema;
  std::optional<AdamWState> optimizer;
  nlohmann::json training = nlohmann::json::object();  // config and run facts

  Scorer scorer() const {
    if (kind == ModelKind::Dcn) return dcn_scorer(*dcn);
    return logistic_scorer(*logistic);
  }
};

inline nlohmann::json to_json(const SavedModel& m) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = m.kind == ModelKind::Dcn ? "dcn" : "logistic";
  if (m.kind == ModelKind::Dcn) {
    j["dims"] = to_json(m.dcn->dims());
    j["parameters"] = params_to_json(*m.dcn);
  } else {
    j["logistic"] = to_json(*m.logistic);
  }
  if (m.schema) j["schema"] = to_json(*m.schema);
  if (m.optimizer) {
    j["optimizer"] = {{"step", m.optimizer->step}, {"m", m.optimizer->m}, {"v", m.optimizer->v}};
  }
  j["training"] = m.training;
  return j;
}

// Rejects unknown versions and any parameter block whose shape disagrees
// with the recorded dims.
inline SavedModel model_from_json(const nlohmann::json& j) {
  SavedModel m;
  try {
    if (j.at("format_version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorKind::DimensionMismatch, "unsupported model format_version");
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "dcn") {
      m.kind = ModelKind::Dcn;
      m.dcn = params_from_json(j.at("parameters"), dims_from_json(j.at("dims")));
    } else if (kind == "logistic") {
      m.kind = ModelKind::Logistic;
      m.logistic = logistic_from_json(j.at("logistic"));
    } else {
      throw Error(ErrorKind::InvalidConfig, "unknown model kind " + kind);
    }
    if (j.contains("schema")) m.schema = schema_from_json(j["schema"]);
    if (j.contains("optimizer")) {
      AdamWState s;
      s.step = j["optimizer"].at("step").get<long>();
      s.m = j["optimizer"].at("m").get<Vector>();
      s.v = j["optimizer"].at("v").get<Vector>();
      if (m.dcn && (s.m.size() != m.dcn->values().size() || s.v.size() != s.m.size())) {
        throw Error(ErrorKind::DimensionMismatch, "optimizer state size");
      }
      m.optimizer = std::move(s);
    }
    if (j.contains("training")) m.training = j["training"];
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::DimensionMismatch, std::string("model document: ") + e.what());
  }
  if (m.schema) {
    const std::size_t width = m.dcn ? m.dcn->dims().cross_width : m.logistic->weights.size();
    if (width != m.schema->cross_width) {
      throw Error(ErrorKind::DimensionMismatch, "model cross width disagrees with its schema");
    }
  }
  return m;
}

inline void save_model(const SavedModel& m, const std::filesystem::path& path) {
  write_json_file(path, to_json(m));
}

inline SavedModel load_model(const std::filesystem::path& path) {
  return model_from_json(read_json_file(path));
}

}  // namespace trialenroll
