// SPDX-License-Identifier: Apache-2.0
#include "peprank/model.hpp"

#include <cmath>

#include "peprank/errors.hpp"

namespace peprank {

namespace {

void append_attention(std::vector<ag::ParamSpec>& out, const std::string& p, std::size_t d) {
  out.push_back({p + ".ln.g", {d}, "ones"});
  out.push_back({p + ".ln.b", {d}, "zeros"});
  for (const char* w : {"q", "k", "v", "o"}) {
    out.push_back({p + ".w" + w, {d, d}, "xavier"});
    out.push_back({p + ".b" + w, {d}, "zeros"});
  }
}

void append_feed_forward(std::vector<ag::ParamSpec>& out, const std::string& p, std::size_t d,
                         std::size_t ff) {
  out.push_back({p + ".ln.g", {d}, "ones"});
  out.push_back({p + ".ln.b", {d}, "zeros"});
  out.push_back({p + ".w1", {d, ff}, "xavier"});
  out.push_back({p + ".b1", {ff}, "zeros"});
  out.push_back({p + ".w2", {ff, d}, "xavier"});
  out.push_back({p + ".b2", {d}, "zeros"});
}

// [N, T, d] -> [N * heads, T, d / heads]
ag::Tensor split_heads(const ag::Tensor& x, std::size_t heads) {
  const std::size_t n = x.dim(0), t = x.dim(1), d = x.dim(2);
  auto y = ag::reshape(x, {n, t, heads, d / heads});
  y = ag::permute(y, {0, 2, 1, 3});
  return ag::reshape(y, {n * heads, t, d / heads});
}

// [N * heads, T, dh] -> [N, T, heads * dh]
ag::Tensor merge_heads(const ag::Tensor& x, std::size_t n, std::size_t heads) {
  const std::size_t t = x.dim(1), dh = x.dim(2);
  auto y = ag::reshape(x, {n, heads, t, dh});
  y = ag::permute(y, {0, 2, 1, 3});
  return ag::reshape(y, {n, t, heads * dh});
}

}  // namespace

EmbeddingConfig ModelConfig::embedding() const {
  EmbeddingConfig e;
  e.d = d;
  e.max_len = max_len;
  e.max_charge = max_charge;
  return e;
}

void ModelConfig::validate() const {
  embedding().validate();
  if (n_heads == 0 || d % n_heads != 0)
    throw DomainError("d = " + std::to_string(d) + " is not divisible by n_heads = " + std::to_string(n_heads));
  if (ff_dim == 0) throw DomainError("ff_dim must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw DomainError("dropout must lie in [0, 1)");
}

ModelConfig ModelConfig::full() {
  ModelConfig c;
  c.d = 512;
  c.encoder_layers = 8;
  c.mixer_layers = 8;
  c.n_heads = 8;
  c.ff_dim = 1024;
  c.dropout = 0.3;
  c.max_len = 100;
  return c;
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.d = 16;
  c.encoder_layers = 1;
  c.mixer_layers = 1;
  c.n_heads = 2;
  c.ff_dim = 32;
  c.max_len = 8;
  return c;
}

ag::Tensor multi_head_attention(const ag::Tensor& queries, const ag::Tensor& keys_values,
                                const ag::Mask& key_mask, const AttentionParams& p,
                                std::size_t heads, AttentionCounter* counter) {
  if (queries.rank() != 3 || keys_values.rank() != 3)
    throw ShapeError("attention: queries and keys must be rank 3");
  const std::size_t n = queries.dim(0), t = queries.dim(1), d = queries.dim(2);
  const std::size_t s = keys_values.dim(1);
  if (keys_values.dim(0) != n || keys_values.dim(2) != d)
    throw ShapeError("attention: queries " + ag::shape_str(queries.shape()) + " vs keys " +
                     ag::shape_str(keys_values.shape()));
  if (!key_mask.empty() && key_mask.size() != n * s)
    throw ShapeError("attention: key mask has " + std::to_string(key_mask.size()) + " entries, need " +
                     std::to_string(n * s));
  if (heads == 0 || d % heads != 0) throw ShapeError("attention: d not divisible by heads");
  if (counter) counter->scores += static_cast<std::uint64_t>(n) * t * s;

  const auto q = split_heads(ag::linear(queries, p.wq, p.bq), heads);
  const auto k = split_heads(ag::linear(keys_values, p.wk, p.bk), heads);
  const auto v = split_heads(ag::linear(keys_values, p.wv, p.bv), heads);
  const double inv_sqrt = 1.0 / std::sqrt(double(d / heads));
  const auto logits = ag::scale(ag::matmul(q, k, false, true), inv_sqrt);  // [n*h, t, s]

  ag::Mask mask(n * heads * t * s, 1);
  if (!key_mask.empty()) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t h = 0; h < heads; ++h)
        for (std::size_t a = 0; a < t; ++a)
          for (std::size_t b = 0; b < s; ++b)
            mask[((i * heads + h) * t + a) * s + b] = key_mask[i * s + b];
  }
  const auto probs = ag::softmax_masked(logits, mask);
  const auto mixed = merge_heads(ag::matmul(probs, v), n, heads);
  return ag::linear(mixed, p.wo, p.bo);
}

std::vector<ag::ParamSpec> RerankModel::parameter_layout(const ModelConfig& config, std::size_t vocab) {
  config.validate();
  auto out = embedding_layout(config.embedding(), vocab);
  const std::size_t d = config.d;
  for (std::size_t i = 0; i < config.encoder_layers; ++i) {
    const std::string p = "enc." + std::to_string(i);
    append_attention(out, p + ".attn", d);
    append_feed_forward(out, p + ".ff", d, config.ff_dim);
  }
  out.push_back({"enc.final.g", {d}, "ones"});
  out.push_back({"enc.final.b", {d}, "zeros"});
  for (std::size_t i = 0; i < config.mixer_layers; ++i) {
    const std::string p = "mix." + std::to_string(i);
    append_attention(out, p + ".row", d);
    append_attention(out, p + ".col", d);
    append_attention(out, p + ".cross", d);
    append_feed_forward(out, p + ".ff", d, config.ff_dim);
  }
  out.push_back({"mix.final.g", {d}, "ones"});
  out.push_back({"mix.final.b", {d}, "zeros"});
  out.push_back({"head.pmd.w", {d, 1}, "xavier"});
  out.push_back({"head.pmd.b", {1}, "zeros"});
  out.push_back({"head.rmd.w", {d, 1}, "xavier"});
  out.push_back({"head.rmd.b", {1}, "zeros"});
  return out;
}

RerankModel::RerankModel(ModelConfig config, MassTable table, std::uint64_t seed)
    : config_(config), table_(std::move(table)) {
  std::mt19937_64 rng(seed);
  params_.add_all(parameter_layout(config_, table_.size()), rng);
  embedding_ = EmbeddingParams::bind(params_);
}

RerankModel::RerankModel(ModelConfig config, MassTable table, ag::ParameterStore params)
    : config_(config), table_(std::move(table)), params_(std::move(params)) {
  const auto layout = parameter_layout(config_, table_.size());
  for (const auto& spec : layout) {
    if (!params_.contains(spec.name)) throw ShapeError("parameter '" + spec.name + "' is missing");
    const auto& shape = params_.get(spec.name).shape();
    if (shape != spec.shape)
      throw ShapeError("parameter '" + spec.name + "' has shape " + ag::shape_str(shape) +
                       " but the config implies " + ag::shape_str(spec.shape));
  }
  if (params_.size() != layout.size())
    throw ShapeError("store holds " + std::to_string(params_.size()) + " parameters, config implies " +
                     std::to_string(layout.size()));
  embedding_ = EmbeddingParams::bind(params_);
}

AttentionParams RerankModel::attention(const std::string& p) const {
  return {params_.get(p + ".wq"), params_.get(p + ".bq"), params_.get(p + ".wk"), params_.get(p + ".bk"),
          params_.get(p + ".wv"), params_.get(p + ".bv"), params_.get(p + ".wo"), params_.get(p + ".bo")};
}

ag::Tensor RerankModel::norm(const std::string& p, const ag::Tensor& x) const {
  return ag::layer_norm(x, params_.get(p + ".g"), params_.get(p + ".b"));
}

ag::Tensor RerankModel::drop(const ag::Tensor& x, const ForwardContext& ctx) const {
  if (!ctx.training || config_.dropout == 0.0) return x;
  if (!ctx.rng) throw DomainError("training with dropout needs a random generator");
  return ag::dropout(x, config_.dropout, true, *ctx.rng);
}

ag::Tensor RerankModel::feed_forward(const std::string& p, const ag::Tensor& x,
                                     const ForwardContext& ctx) const {
  const auto h = norm(p + ".ln", x);
  const auto inner = drop(ag::gelu(ag::linear(h, params_.get(p + ".w1"), params_.get(p + ".b1"))), ctx);
  return ag::add(x, drop(ag::linear(inner, params_.get(p + ".w2"), params_.get(p + ".b2")), ctx));
}

ag::Tensor RerankModel::spectrum_encoder(const ag::Tensor& e0, const ForwardContext& ctx) const {
  if (e0.rank() != 2 || e0.dim(1) != config_.d)
    throw ShapeError("spectrum_encoder: expected [k, " + std::to_string(config_.d) + "], got " +
                     ag::shape_str(e0.shape()));
  const std::size_t k = e0.dim(0);
  auto x = ag::reshape(e0, {1, k, config_.d});
  for (std::size_t i = 0; i < config_.encoder_layers; ++i) {
    const std::string p = "enc." + std::to_string(i);
    const auto h = norm(p + ".attn.ln", x);
    x = ag::add(x, drop(multi_head_attention(h, h, {}, attention(p + ".attn"), config_.n_heads, ctx.counter), ctx));
    x = feed_forward(p + ".ff", x, ctx);
  }
  return ag::reshape(norm("enc.final", x), {k, config_.d});
}

ag::Tensor RerankModel::axial_block(std::size_t layer, const ag::Tensor& s, const ag::Mask& mask,
                                    const ag::Tensor& spectrum, const ForwardContext& ctx) const {
  if (s.rank() != 3 || s.dim(2) != config_.d)
    throw ShapeError("axial_block: expected [c, width, d], got " + ag::shape_str(s.shape()));
  const std::size_t c = s.dim(0), w = s.dim(1), d = config_.d;
  if (mask.size() != c * w) throw ShapeError("axial_block: mask size does not match the grid");
  if (spectrum.rank() != 2 || spectrum.dim(1) != d)
    throw ShapeError("axial_block: spectrum features must be [k, d]");
  const std::string p = "mix." + std::to_string(layer);
  const std::size_t heads = config_.n_heads;

  // Row attention: each candidate over its own positions.
  auto x = s;
  {
    const auto h = norm(p + ".row.ln", x);
    x = ag::add(x, drop(multi_head_attention(h, h, mask, attention(p + ".row"), heads, ctx.counter), ctx));
  }
  // Column attention: each position across candidates.
  {
    ag::Mask col_mask(w * c);
    for (std::size_t r = 0; r < c; ++r)
      for (std::size_t j = 0; j < w; ++j) col_mask[j * c + r] = mask[r * w + j];
    const auto h = ag::permute(norm(p + ".col.ln", x), {1, 0, 2});
    const auto a = multi_head_attention(h, h, col_mask, attention(p + ".col"), heads, ctx.counter);
    x = ag::add(x, drop(ag::permute(a, {1, 0, 2}), ctx));
  }
  // Cross attention: every token queries the spectrum features.
  {
    const auto h = ag::reshape(norm(p + ".cross.ln", x), {1, c * w, d});
    const auto kv = ag::reshape(spectrum, {1, spectrum.dim(0), d});
    const auto a = multi_head_attention(h, kv, {}, attention(p + ".cross"), heads, ctx.counter);
    x = ag::add(x, drop(ag::reshape(a, {c, w, d}), ctx));
  }
  return feed_forward(p + ".ff", x, ctx);
}

ModelOutput RerankModel::predict_heads(const ag::Tensor& s_final, const MsaBatch& batch) const {
  if (s_final.rank() != 3 || s_final.dim(0) != batch.rows || s_final.dim(1) != batch.width ||
      s_final.dim(2) != config_.d)
    throw ShapeError("predict_heads: features " + ag::shape_str(s_final.shape()) + " do not match the batch");
  const std::size_t c = batch.rows, len = batch.width - 1;
  ModelOutput out;
  const auto cls = ag::reshape(ag::slice(s_final, 1, 0, 1), {c, config_.d});
  out.pmd_pred = ag::reshape(ag::linear(cls, params_.get("head.pmd.w"), params_.get("head.pmd.b")), {c});
  const auto residues = ag::slice(s_final, 1, 1, len);
  out.rmd_pred = ag::reshape(ag::linear(residues, params_.get("head.rmd.w"), params_.get("head.rmd.b")), {c, len});
  out.rmd_mask = batch.residue_mask();
  return out;
}

ModelOutput RerankModel::forward_batch(const ProcessedSpectrum& spectrum, const MsaBatch& batch,
                                       const ForwardContext& ctx) const {
  const auto e = spectrum_encoder(embed_spectrum(spectrum, embedding_, config_.embedding()), ctx);
  auto s = batch.embeddings;
  for (std::size_t i = 0; i < config_.mixer_layers; ++i) s = axial_block(i, s, batch.mask, e, ctx);
  return predict_heads(norm("mix.final", s), batch);
}

ModelOutput RerankModel::forward(const ProcessedSpectrum& spectrum, const std::vector<Peptide>& candidates,
                                 const ForwardContext& ctx) const {
  const auto batch = assemble_msa(candidates, spectrum.precursor, table_, embedding_, config_.embedding());
  return forward_batch(spectrum, batch, ctx);
}

ag::Tensor joint_loss(const ModelOutput& output, const std::vector<double>& pmd_targets,
                      const std::vector<double>& rmd_targets, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("joint_loss: lambda must lie in [0, 1]");
  if (pmd_targets.size() != output.pmd_pred.numel())
    throw ShapeError("joint_loss: " + std::to_string(pmd_targets.size()) + " PMD targets for " +
                     std::to_string(output.pmd_pred.numel()) + " predictions");
  if (rmd_targets.size() != output.rmd_pred.numel())
    throw ShapeError("joint_loss: " + std::to_string(rmd_targets.size()) + " RMD targets for " +
                     std::to_string(output.rmd_pred.numel()) + " predictions");
  const auto pmd = ag::rmse(output.pmd_pred, ag::Tensor::from(output.pmd_pred.shape(), pmd_targets));
  const auto rmd =
      ag::rmse(output.rmd_pred, ag::Tensor::from(output.rmd_pred.shape(), rmd_targets), output.rmd_mask);
  return ag::add(ag::scale(pmd, lambda), ag::scale(rmd, 1.0 - lambda));
}

ag::Tensor baseline_loss(BaselineObjective objective, const ag::Tensor& scores,
                         const std::vector<double>& labels) {
  switch (objective) {
    case BaselineObjective::kPointwise: return ag::bce_with_logits_sum(scores, labels);
    case BaselineObjective::kPairwise: return ag::pairwise_logistic(scores, labels);
    case BaselineObjective::kListwise: return ag::listwise_softmax_ce(scores, labels);
  }
  throw DomainError("unknown baseline objective");
}

std::size_t rerank_select(std::span<const double> pmd_pred) {
  if (pmd_pred.empty()) throw DataError("rerank_select: no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < pmd_pred.size(); ++i)
    if (pmd_pred[i] < pmd_pred[best]) best = i;
  return best;
}

}  // namespace peprank
