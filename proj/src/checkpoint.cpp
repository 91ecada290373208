// SPDX-License-Identifier: Apache-2.0
#include "peprank/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "peprank/config.hpp"
#include "peprank/errors.hpp"

namespace peprank {

namespace {

constexpr std::array<char, 4> kMagic{'R', 'N', 'K', 'V'};

template <typename T>
void put(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw DataError(std::string("checkpoint truncated while reading ") + what);
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

std::string get_bytes(std::istream& in, std::uint64_t n, const char* what) {
  std::string s;
  if (n > (1ULL << 32)) throw DataError(std::string("checkpoint: implausible length for ") + what);
  s.resize(n);
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n)))
    throw DataError(std::string("checkpoint truncated while reading ") + what);
  return s;
}

}  // namespace

void save_checkpoint(std::ostream& out, const RerankModel& model, std::uint64_t seed, std::uint64_t step) {
  nlohmann::json cfg;
  cfg["model"] = to_json(model.config());
  cfg["seed"] = seed;
  cfg["step"] = step;
  auto tokens = nlohmann::json::array();
  for (std::size_t i = 0; i < model.table().size(); ++i)
    tokens.push_back({model.table().token(i), model.table().mass_at(i)});
  cfg["mass_table"] = tokens;
  const std::string text = cfg.dump();

  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  const auto& entries = model.params().entries();
  put<std::uint64_t>(out, entries.size());
  for (const auto& e : entries) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    const auto& shape = e.tensor.shape();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
    for (auto dim : shape) put<std::uint64_t>(out, dim);
    for (double v : e.tensor.values()) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw DataError("failed to write checkpoint");
}

void save_checkpoint_file(const std::string& path, const RerankModel& model, std::uint64_t seed,
                          std::uint64_t step) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  save_checkpoint(out, model, seed, step);
}

Checkpoint load_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw DataError("not a checkpoint: bad magic bytes");
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  const auto text = get_bytes(in, get<std::uint64_t>(in, "config length"), "config");
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  Checkpoint ck;
  try {
    ck.config = model_config_from_json(cfg.at("model"));
    ck.seed = cfg.at("seed").get<std::uint64_t>();
    ck.step = cfg.at("step").get<std::uint64_t>();
    std::vector<std::pair<std::string, double>> entries;
    for (const auto& t : cfg.at("mass_table")) entries.emplace_back(t.at(0).get<std::string>(), t.at(1).get<double>());
    ck.table = MassTable::from_entries(std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint config is incomplete: ") + e.what());
  }
  const auto count = get<std::uint64_t>(in, "parameter count");
  for (std::uint64_t p = 0; p < count; ++p) {
    const auto name = get_bytes(in, get<std::uint32_t>(in, "name length"), "parameter name");
    const auto rank = get<std::uint32_t>(in, "rank");
    if (rank > 8) throw DataError("checkpoint: implausible rank for '" + name + "'");
    ag::Shape shape(rank);
    for (auto& dim : shape) dim = get<std::uint64_t>(in, "shape");
    const std::size_t n = ag::numel(shape);
    if (n > (1ULL << 31)) throw DataError("checkpoint: implausible size for '" + name + "'");
    std::vector<double> values(n);
    for (auto& v : values) v = std::bit_cast<double>(get<std::uint64_t>(in, name.c_str()));
    ck.params.add_values(name, std::move(shape), std::move(values));
  }
  return ck;
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in);
}

RerankModel model_from_checkpoint(Checkpoint checkpoint) {
  return RerankModel(checkpoint.config, std::move(checkpoint.table), std::move(checkpoint.params));
}

}  // namespace peprank
