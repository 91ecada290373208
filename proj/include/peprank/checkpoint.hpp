// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "peprank/model.hpp"

namespace peprank {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: "RNKV", u32 version, u64 config length + JSON config (model
/// config, mass table, seed, step), u64 parameter count, then per parameter
/// u32 name length + name, u32 rank + u64 dims, little-endian f64 values.
struct Checkpoint {
  ModelConfig config;
  MassTable table;
  ag::ParameterStore params;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
};

void save_checkpoint(std::ostream& out, const RerankModel& model, std::uint64_t seed, std::uint64_t step);
void save_checkpoint_file(const std::string& path, const RerankModel& model, std::uint64_t seed,
                          std::uint64_t step);

/// Throws DataError on bad magic, version or truncation.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint_file(const std::string& path);

/// Rebuilds the model; throws ShapeError naming the first parameter whose
/// shape disagrees with the stored config.
RerankModel model_from_checkpoint(Checkpoint checkpoint);

}  // namespace peprank
