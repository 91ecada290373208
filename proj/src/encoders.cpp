// SPDX-License-Identifier: Apache-2.0
#include "peprank/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "peprank/errors.hpp"

namespace peprank {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct RowPlan {
  std::vector<std::size_t> first_index;   // into [residue; cls; pad_lo]
  std::vector<std::size_t> second_index;  // into [charge; pad_hi; zero]
  std::vector<double> sinusoids;          // [rows * width, d/2]
  ag::Mask mask;
};

// Builds the index plan for a c x width grid of candidate tokens.
RowPlan plan_rows(const std::vector<Peptide>& candidates, std::size_t width,
                  const Precursor& precursor, const MassTable& table,
                  const EmbeddingConfig& config) {
  const std::size_t half = config.d / 2;
  const std::size_t vocab = table.size();
  if (precursor.charge < 1 || static_cast<std::size_t>(precursor.charge) > config.max_charge)
    throw DomainError("precursor charge " + std::to_string(precursor.charge) +
                      " outside the learned charge range 1.." + std::to_string(config.max_charge));
  const auto prec_sin = mass_sinusoid(precursor.neutral_mass, config.d_prec());

  RowPlan plan;
  const std::size_t cells = candidates.size() * width;
  plan.first_index.resize(cells);
  plan.second_index.resize(cells);
  plan.sinusoids.assign(cells * half, 0.0);
  plan.mask.assign(cells, 0);
  const std::size_t charge_row = static_cast<std::size_t>(precursor.charge) - 1;
  const std::size_t pad_hi_row = config.max_charge;
  const std::size_t zero_row = config.max_charge + 1;

  for (std::size_t r = 0; r < candidates.size(); ++r) {
    const auto& pep = candidates[r];
    const auto prefix = cumulative_masses(pep, table, Direction::kPrefix);
    const auto suffix = cumulative_masses(pep, table, Direction::kSuffix);
    for (std::size_t pos = 0; pos < width; ++pos) {
      const std::size_t cell = r * width + pos;
      double* sin_out = plan.sinusoids.data() + cell * half;
      if (pos == 0) {
        plan.first_index[cell] = vocab;  // CLS
        plan.second_index[cell] = charge_row;
        std::copy(prec_sin.begin(), prec_sin.end(), sin_out);
        plan.mask[cell] = 1;
      } else if (pos <= pep.size()) {
        plan.first_index[cell] = table.require_index(pep[pos - 1]);
        plan.second_index[cell] = zero_row;
        const auto ps = mass_sinusoid(prefix[pos - 1], config.d_prefix());
        const auto ss = mass_sinusoid(suffix[pos - 1], config.d_suffix());
        std::copy(ps.begin(), ps.end(), sin_out);
        std::copy(ss.begin(), ss.end(), sin_out + ps.size());
        plan.mask[cell] = 1;
      } else {
        plan.first_index[cell] = vocab + 1;  // pad
        plan.second_index[cell] = pad_hi_row;
      }
    }
  }
  return plan;
}

ag::Tensor embed_rows(const std::vector<Peptide>& candidates, std::size_t width,
                      const Precursor& precursor, const MassTable& table,
                      const EmbeddingParams& params, const EmbeddingConfig& config,
                      ag::Mask* mask_out) {
  const std::size_t half = config.d / 2;
  if (params.residue.dim(0) != table.size())
    throw ShapeError("residue embedding has " + std::to_string(params.residue.dim(0)) +
                     " rows but the mass table has " + std::to_string(table.size()) + " tokens");
  auto plan = plan_rows(candidates, width, precursor, table, config);
  const auto pad_lo = ag::slice(params.pad, 1, 0, half);
  const auto pad_hi = ag::slice(params.pad, 1, half, half);
  const auto first_table = ag::concat({params.residue, params.cls, pad_lo}, 0);
  const auto second_table = ag::concat({params.charge, pad_hi, ag::Tensor::zeros({1, half})}, 0);
  const std::size_t cells = plan.first_index.size();
  const auto first = ag::gather_rows(first_table, plan.first_index);
  const auto second = ag::add(ag::gather_rows(second_table, plan.second_index),
                              ag::Tensor::from({cells, half}, std::move(plan.sinusoids)));
  if (mask_out) *mask_out = std::move(plan.mask);
  return ag::concat({first, second}, 1);
}

}  // namespace

void EmbeddingConfig::validate() const {
  if (d == 0 || d % 4 != 0) throw DomainError("model dimension must be a positive multiple of 4");
  if ((d / 4) % 2 != 0) throw DomainError("d/4 must be even so every sinusoid block has sin/cos pairs");
  if (!(mu_min > 0.0) || !(mu_max > mu_min)) throw DomainError("need 0 < mu_min < mu_max");
  if (max_len == 0) throw DomainError("max_len must be positive");
  if (max_charge == 0) throw DomainError("max_charge must be positive");
}

std::vector<ag::ParamSpec> embedding_layout(const EmbeddingConfig& config, std::size_t vocab) {
  config.validate();
  const std::size_t d = config.d;
  return {
      {"embed.intensity.w", {1, d}, "xavier"},
      {"embed.intensity.b", {d}, "zeros"},
      {"embed.residue", {vocab, d / 2}, "normal:0.5"},
      {"embed.cls", {1, d / 2}, "normal:0.5"},
      {"embed.charge", {config.max_charge, d / 2}, "normal:0.5"},
      {"embed.pad", {1, d}, "normal:0.5"},
      {"embed.position", {config.max_len + 1, d}, "normal:0.1"},
  };
}

EmbeddingParams EmbeddingParams::create(ag::ParameterStore& store, const EmbeddingConfig& config,
                                        std::size_t vocab, std::mt19937_64& rng) {
  store.add_all(embedding_layout(config, vocab), rng);
  return bind(store);
}

EmbeddingParams EmbeddingParams::bind(const ag::ParameterStore& store) {
  return {store.get("embed.intensity.w"), store.get("embed.intensity.b"), store.get("embed.residue"),
          store.get("embed.cls"),         store.get("embed.charge"),      store.get("embed.pad"),
          store.get("embed.position")};
}

std::vector<double> mz_sinusoid(double mu, const EmbeddingConfig& config) {
  if (!(mu >= config.mu_min && mu <= config.mu_max))
    throw DomainError("m/z " + std::to_string(mu) + " outside [" + std::to_string(config.mu_min) +
                      ", " + std::to_string(config.mu_max) + "]");
  const std::size_t d = config.d;
  const double base = config.mu_max / config.mu_min;
  const double arg0 = kTwoPi * mu / config.mu_min;
  std::vector<double> out(d);
  for (std::size_t k = 0; 2 * k < d; ++k) {
    const double arg = arg0 / std::pow(base, double(k) / double(d));
    out[2 * k] = std::sin(arg);
    if (2 * k + 1 < d) out[2 * k + 1] = std::cos(arg);
  }
  return out;
}

std::vector<double> mass_sinusoid(double mass, std::size_t dim) {
  if (dim % 2 != 0) throw DomainError("mass_sinusoid: dimension must be even, got " + std::to_string(dim));
  if (!(mass >= 0.0)) throw DomainError("mass_sinusoid: mass must be non-negative");
  std::vector<double> out(dim);
  for (std::size_t k = 0; 2 * k < dim; ++k) {
    const double arg = kTwoPi * mass / std::pow(10000.0, double(k) / double(dim));
    out[2 * k] = std::sin(arg);
    out[2 * k + 1] = std::cos(arg);
  }
  return out;
}

ag::Tensor embed_spectrum(const ProcessedSpectrum& spectrum, const EmbeddingParams& params,
                          const EmbeddingConfig& config) {
  const std::size_t k = spectrum.size();
  if (k == 0) throw DomainError("embed_spectrum: spectrum has no peaks");
  std::vector<double> sin(k * config.d);
  for (std::size_t i = 0; i < k; ++i) {
    const auto row = mz_sinusoid(spectrum.mz[i], config);
    std::copy(row.begin(), row.end(), sin.begin() + i * config.d);
  }
  const auto intensity = ag::Tensor::from({k, 1}, spectrum.intensity);
  return ag::add(ag::linear(intensity, params.intensity_w, params.intensity_b),
                 ag::Tensor::from({k, config.d}, std::move(sin)));
}

ag::Tensor embed_candidate(const Peptide& peptide, const Precursor& precursor,
                           const MassTable& table, const EmbeddingParams& params,
                           const EmbeddingConfig& config) {
  if (peptide.empty()) throw DataError("embed_candidate: empty peptide");
  return embed_rows({peptide}, peptide.size() + 1, precursor, table, params, config, nullptr);
}

ag::Mask MsaBatch::residue_mask() const {
  ag::Mask out;
  out.reserve(rows * (width - 1));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t pos = 1; pos < width; ++pos) out.push_back(mask[r * width + pos]);
  return out;
}

MsaBatch assemble_msa(const std::vector<Peptide>& candidates, const Precursor& precursor,
                      const MassTable& table, const EmbeddingParams& params,
                      const EmbeddingConfig& config) {
  if (candidates.empty()) throw DataError("assemble_msa: no candidates");
  std::size_t longest = 0;
  for (const auto& c : candidates) {
    if (c.empty()) throw DataError("assemble_msa: empty candidate peptide");
    if (c.size() > config.max_len)
      throw DataError("candidate '" + c.render() + "' has " + std::to_string(c.size()) +
                      " residues, more than max_len " + std::to_string(config.max_len));
    longest = std::max(longest, c.size());
  }
  MsaBatch batch;
  batch.rows = candidates.size();
  batch.width = longest + 1;
  auto grid = embed_rows(candidates, batch.width, precursor, table, params, config, &batch.mask);
  std::vector<std::size_t> positions(batch.rows * batch.width);
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i % batch.width;
  grid = ag::add(grid, ag::gather_rows(params.position, positions));
  batch.embeddings = ag::reshape(grid, {batch.rows, batch.width, config.d});
  return batch;
}

}  // namespace peprank
