// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "peprank/mass.hpp"
#include "peprank/spectrum.hpp"
#include "peprank/tensor.hpp"

namespace peprank {

struct EmbeddingConfig {
  std::size_t d = 64;
  double mu_min = 50.5;
  double mu_max = 4500.0;
  std::size_t max_len = 32;    // residues per candidate; positions = max_len + 1
  std::size_t max_charge = 10; // learned charge vocabulary is 1..max_charge

  std::size_t d_res() const { return d / 2; }
  std::size_t d_prefix() const { return d / 4; }
  std::size_t d_suffix() const { return d / 4; }
  std::size_t d_prec() const { return d / 2; }

  void validate() const;
};

/// Learned tensors used by the embedding layer. All are views into a
/// ParameterStore.
struct EmbeddingParams {
  ag::Tensor intensity_w;  // [1, d]
  ag::Tensor intensity_b;  // [d]
  ag::Tensor residue;      // [V, d/2]
  ag::Tensor cls;          // [1, d/2]
  ag::Tensor charge;       // [max_charge, d/2]
  ag::Tensor pad;          // [1, d]
  ag::Tensor position;     // [max_len + 1, d]

  static EmbeddingParams create(ag::ParameterStore& store, const EmbeddingConfig& config,
                                std::size_t vocab, std::mt19937_64& rng);
  static EmbeddingParams bind(const ag::ParameterStore& store);
};

std::vector<ag::ParamSpec> embedding_layout(const EmbeddingConfig& config, std::size_t vocab);

/// Component 2k = sin((2 pi mu / mu_min) / (mu_max / mu_min)^(k / d)),
/// component 2k + 1 = cos of the same argument.
std::vector<double> mz_sinusoid(double mu, const EmbeddingConfig& config);

/// Component 2k = sin(2 pi m / 10000^(k / dim)), 2k + 1 = cos(...).
std::vector<double> mass_sinusoid(double mass, std::size_t dim);

/// [k, d]: m/z sinusoid plus a learned affine map of the normalized intensity.
ag::Tensor embed_spectrum(const ProcessedSpectrum& spectrum, const EmbeddingParams& params,
                          const EmbeddingConfig& config);

/// [len + 1, d]: CLS row followed by one row per residue (no positional term).
ag::Tensor embed_candidate(const Peptide& peptide, const Precursor& precursor,
                           const MassTable& table, const EmbeddingParams& params,
                           const EmbeddingConfig& config);

struct MsaBatch {
  ag::Tensor embeddings;  // [c, width, d]
  ag::Mask mask;          // [c * width], 1 = real token (CLS always 1)
  std::size_t rows = 0;   // c
  std::size_t width = 0;  // longest candidate + 1

  /// Mask over residue positions 1..width-1 -> [c * (width - 1)].
  ag::Mask residue_mask() const;
};

/// Stacks candidates into a padded grid and adds the per-column positional
/// embedding. There is no per-row embedding, so permuting the candidates
/// permutes the rows of the result.
MsaBatch assemble_msa(const std::vector<Peptide>& candidates, const Precursor& precursor,
                      const MassTable& table, const EmbeddingParams& params,
                      const EmbeddingConfig& config);

}  // namespace peprank
