// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <json.hpp>

#include "peprank/dataset.hpp"
#include "peprank/synth.hpp"
#include "peprank/train.hpp"

namespace peprank {

/// Everything a run can be configured with. Every key is optional in the
/// JSON document; missing keys keep the defaults below.
struct RunConfig {
  std::string profile = "desk";  // "desk" or "full": base values for train/model
  TrainConfig train = TrainConfig::desk();
  PreprocessConfig preprocess;
  PrecursorTolerance precursor;
  SynthConfig synth;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const ModelConfig& c);
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const RunConfig& c);

/// Overlays keys from `j` onto `base`; unknown keys throw DataError.
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

}  // namespace peprank
