// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "peprank/encoders.hpp"
#include "peprank/mass.hpp"
#include "peprank/spectrum.hpp"
#include "peprank/tensor.hpp"

namespace peprank {

struct ModelConfig {
  std::size_t d = 64;
  std::size_t encoder_layers = 2;
  std::size_t mixer_layers = 2;
  std::size_t n_heads = 4;
  std::size_t ff_dim = 128;
  double dropout = 0.0;
  double lambda = 0.5;  // weight of the PMD term in the joint loss
  std::size_t max_len = 32;
  std::size_t max_charge = 10;

  EmbeddingConfig embedding() const;
  void validate() const;

  /// 8 + 8 layers, 8 heads, d = 512, ff 1024, dropout 0.3, max_len 100.
  static ModelConfig full();
  /// d = 64, 2 + 2 layers, 4 heads, ff 128, no dropout.
  static ModelConfig desk();
  /// d = 16, 1 + 1 layers, 2 heads; used by the gradient checks.
  static ModelConfig tiny();

  bool operator==(const ModelConfig&) const = default;
};

/// Counts attention-score entries (query/key pairs, summed over independent
/// sequences, not multiplied by the head count).
struct AttentionCounter {
  std::uint64_t scores = 0;
};

struct ForwardContext {
  bool training = false;
  std::mt19937_64* rng = nullptr;  // required when training with dropout > 0
  AttentionCounter* counter = nullptr;
};

struct ModelOutput {
  ag::Tensor pmd_pred;  // [c]
  ag::Tensor rmd_pred;  // [c, L]; position j is residue j + 1 of the grid
  ag::Mask rmd_mask;    // [c * L]
};

/// Learned weights of one attention sublayer.
struct AttentionParams {
  ag::Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};

/// Scaled dot-product attention with `heads` heads. queries [N, T, d],
/// keys/values [N, S, d]; key_mask has N * S entries (empty = all valid).
ag::Tensor multi_head_attention(const ag::Tensor& queries, const ag::Tensor& keys_values,
                                const ag::Mask& key_mask, const AttentionParams& params,
                                std::size_t heads, AttentionCounter* counter);

class RerankModel {
 public:
  /// Fresh parameters drawn from `seed`.
  RerankModel(ModelConfig config, MassTable table, std::uint64_t seed);
  /// Adopts existing parameters (checkpoint load); shapes are verified.
  RerankModel(ModelConfig config, MassTable table, ag::ParameterStore params);

  const ModelConfig& config() const { return config_; }
  const MassTable& table() const { return table_; }
  ag::ParameterStore& params() { return params_; }
  const ag::ParameterStore& params() const { return params_; }
  const EmbeddingParams& embedding() const { return embedding_; }

  /// Pre-norm self-attention stack over peaks: [k, d] -> [k, d].
  ag::Tensor spectrum_encoder(const ag::Tensor& e0, const ForwardContext& ctx) const;

  /// One mixer layer: row attention, column attention, cross attention to the
  /// spectrum features, then feed-forward. s: [c, width, d], spectrum: [k, d].
  ag::Tensor axial_block(std::size_t layer, const ag::Tensor& s, const ag::Mask& mask,
                         const ag::Tensor& spectrum, const ForwardContext& ctx) const;

  ModelOutput predict_heads(const ag::Tensor& s_final, const MsaBatch& batch) const;

  ModelOutput forward(const ProcessedSpectrum& spectrum, const std::vector<Peptide>& candidates,
                      const ForwardContext& ctx) const;
  /// Same as forward() with an already assembled (possibly modified) batch.
  ModelOutput forward_batch(const ProcessedSpectrum& spectrum, const MsaBatch& batch,
                            const ForwardContext& ctx) const;

  /// Parameter names, shapes and initializers implied by a config and
  /// vocabulary size, in creation order.
  static std::vector<ag::ParamSpec> parameter_layout(const ModelConfig& config, std::size_t vocab);

 private:
  AttentionParams attention(const std::string& prefix) const;
  ag::Tensor feed_forward(const std::string& prefix, const ag::Tensor& x, const ForwardContext& ctx) const;
  ag::Tensor norm(const std::string& prefix, const ag::Tensor& x) const;
  ag::Tensor drop(const ag::Tensor& x, const ForwardContext& ctx) const;

  ModelConfig config_;
  MassTable table_;
  ag::ParameterStore params_;
  EmbeddingParams embedding_;
};

/// lambda * rmse(pmd) + (1 - lambda) * rmse(rmd over unmasked residues).
ag::Tensor joint_loss(const ModelOutput& output, const std::vector<double>& pmd_targets,
                      const std::vector<double>& rmd_targets, double lambda);

enum class BaselineObjective { kPointwise, kPairwise, kListwise };

/// Reranking objectives over candidate scores with binary relevance labels.
ag::Tensor baseline_loss(BaselineObjective objective, const ag::Tensor& scores,
                         const std::vector<double>& labels);

/// Index of the lowest predicted PMD; ties go to the lowest index.
std::size_t rerank_select(std::span<const double> pmd_pred);

}  // namespace peprank
