// SPDX-License-Identifier: Apache-2.0
#include "peprank/config.hpp"

#include <fstream>
#include <set>

#include "peprank/errors.hpp"

namespace peprank {

namespace {

using nlohmann::json;

// Copies j[key] into `field` when present and checks the JSON type.
template <typename T>
void read(const json& j, const char* key, T& field) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!it->is_number_unsigned()) throw DataError("");
    } else if constexpr (std::is_same_v<T, int>) {
      if (!it->is_number_integer()) throw DataError("");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw DataError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw DataError("");
    }
    field = it->get<T>();
  } catch (const std::exception&) {
    throw DataError(std::string("config key '") + key + "' has the wrong type: " + it->dump());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& section) {
  if (!j.is_object()) throw DataError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw DataError("unknown config key '" + section + "." + key + "'");
}

}  // namespace

json to_json(const ModelConfig& c) {
  return {{"d", c.d},           {"encoder_layers", c.encoder_layers},
          {"mixer_layers", c.mixer_layers}, {"n_heads", c.n_heads},
          {"ff_dim", c.ff_dim}, {"dropout", c.dropout},
          {"lambda", c.lambda}, {"max_len", c.max_len},
          {"max_charge", c.max_charge}};
}

json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"clip_norm", c.clip_norm},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"warmup_epochs", c.warmup_epochs},
          {"workers", c.workers},
          {"max_seconds", c.max_seconds}};
}

json to_json(const RunConfig& c) {
  return {{"profile", c.profile},
          {"seed", c.seed},
          {"model", to_json(c.train.model)},
          {"train", to_json(c.train)},
          {"preprocess", {{"min_mz", c.preprocess.min_mz}, {"max_mz", c.preprocess.max_mz},
                          {"max_peaks", c.preprocess.max_peaks}}},
          {"precursor", {{"mz_da", c.precursor.mz_da}, {"ppm", c.precursor.ppm}}},
          {"synth", {{"min_len", c.synth.min_len},
                     {"max_len", c.synth.max_len},
                     {"peak_dropout", c.synth.peak_dropout},
                     {"noise_min", c.synth.noise_min},
                     {"noise_max", c.synth.noise_max},
                     {"charge_min", c.synth.charge_min},
                     {"charge_max", c.synth.charge_max},
                     {"mutants", c.synth.mutants},
                     {"similarity_scale", c.synth.similarity_scale}}}};
}

ModelConfig model_config_from_json(const json& j, ModelConfig c) {
  reject_unknown(j, {"d", "encoder_layers", "mixer_layers", "n_heads", "ff_dim", "dropout", "lambda", "max_len",
                     "max_charge"},
                 "model");
  read(j, "d", c.d);
  read(j, "encoder_layers", c.encoder_layers);
  read(j, "mixer_layers", c.mixer_layers);
  read(j, "n_heads", c.n_heads);
  read(j, "ff_dim", c.ff_dim);
  read(j, "dropout", c.dropout);
  read(j, "lambda", c.lambda);
  read(j, "max_len", c.max_len);
  read(j, "max_charge", c.max_charge);
  c.validate();
  return c;
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  reject_unknown(j, {"lr", "weight_decay", "beta1", "beta2", "eps", "clip_norm", "batch_size", "epochs",
                     "warmup_epochs", "workers", "max_seconds"},
                 "train");
  read(j, "lr", c.lr);
  read(j, "weight_decay", c.weight_decay);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "eps", c.eps);
  read(j, "clip_norm", c.clip_norm);
  read(j, "batch_size", c.batch_size);
  read(j, "epochs", c.epochs);
  read(j, "warmup_epochs", c.warmup_epochs);
  read(j, "workers", c.workers);
  read(j, "max_seconds", c.max_seconds);
  return c;
}

RunConfig run_config_from_json(const json& j) {
  reject_unknown(j, {"profile", "seed", "model", "train", "preprocess", "precursor", "synth"}, "config");
  RunConfig c;
  read(j, "profile", c.profile);
  if (c.profile == "full") {
    c.train = TrainConfig::full();
  } else if (c.profile != "desk") {
    throw DataError("unknown profile '" + c.profile + "' (expected desk or full)");
  }
  read(j, "seed", c.seed);
  if (j.contains("model")) c.train.model = model_config_from_json(j["model"], c.train.model);
  if (j.contains("train")) c.train = train_config_from_json(j["train"], c.train);
  if (j.contains("preprocess")) {
    const auto& p = j["preprocess"];
    reject_unknown(p, {"min_mz", "max_mz", "max_peaks"}, "preprocess");
    read(p, "min_mz", c.preprocess.min_mz);
    read(p, "max_mz", c.preprocess.max_mz);
    read(p, "max_peaks", c.preprocess.max_peaks);
  }
  if (j.contains("precursor")) {
    const auto& p = j["precursor"];
    reject_unknown(p, {"mz_da", "ppm"}, "precursor");
    read(p, "mz_da", c.precursor.mz_da);
    read(p, "ppm", c.precursor.ppm);
  }
  if (j.contains("synth")) {
    const auto& s = j["synth"];
    reject_unknown(s, {"min_len", "max_len", "peak_dropout", "noise_min", "noise_max", "charge_min", "charge_max",
                       "mutants", "similarity_scale"},
                   "synth");
    read(s, "min_len", c.synth.min_len);
    read(s, "max_len", c.synth.max_len);
    read(s, "peak_dropout", c.synth.peak_dropout);
    read(s, "noise_min", c.synth.noise_min);
    read(s, "noise_max", c.synth.noise_max);
    read(s, "charge_min", c.synth.charge_min);
    read(s, "charge_max", c.synth.charge_max);
    read(s, "mutants", c.synth.mutants);
    read(s, "similarity_scale", c.synth.similarity_scale);
  }
  c.train.validate();
  c.synth.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config '" + path + "': " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace peprank
