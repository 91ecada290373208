// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "peprank/errors.hpp"
#include "peprank/model.hpp"
#include "test_helpers.hpp"

using namespace peprank;
using testutil::pep;

namespace {

ProcessedSpectrum toy_spectrum(std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mz(60.0, 1500.0), in(0.1, 1.0);
  RawSpectrum raw;
  raw.spectrum_id = "toy";
  raw.precursor = Precursor::from_mz(600.0, 2);
  for (std::size_t i = 0; i < k; ++i) raw.peaks.push_back({mz(rng), in(rng)});
  std::sort(raw.peaks.begin(), raw.peaks.end(), [](auto& a, auto& b) { return a.mz < b.mz; });
  return *preprocess_spectrum(raw);
}

std::vector<double> vec(const ag::Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TEST_CASE("config presets validate") {
  CHECK_NOTHROW(ModelConfig::full().validate());
  CHECK_NOTHROW(ModelConfig::desk().validate());
  CHECK_NOTHROW(ModelConfig::tiny().validate());
  CHECK(ModelConfig::full().d == 512);
  CHECK(ModelConfig::full().n_heads == 8);
  auto bad = ModelConfig::desk();
  bad.n_heads = 3;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = ModelConfig::desk();
  bad.lambda = 1.5;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("forward shapes and determinism") {
  const RerankModel m(ModelConfig::tiny(), MassTable::default_table(), 3);
  const auto s = toy_spectrum(12, 1);
  const std::vector<Peptide> c{pep("GAVK"), pep("PEP"), pep("WW")};
  const auto out = m.forward(s, c, {});
  CHECK(out.pmd_pred.shape() == ag::Shape{3});
  CHECK(out.rmd_pred.shape() == ag::Shape{3, 4});
  CHECK(out.rmd_mask == ag::Mask{1, 1, 1, 1, 1, 1, 1, 0, 1, 1, 0, 0});
  CHECK(vec(m.forward(s, c, {}).pmd_pred) == vec(out.pmd_pred));
  const RerankModel same(ModelConfig::tiny(), MassTable::default_table(), 3);
  CHECK(vec(same.forward(s, c, {}).pmd_pred) == vec(out.pmd_pred));
}

TEST_CASE("candidate permutation permutes the outputs") {
  const RerankModel m(ModelConfig::desk(), MassTable::default_table(), 5);
  const auto s = toy_spectrum(20, 2);
  const std::vector<Peptide> c{pep("GAVKLM"), pep("PEPTIDE"), pep("WWK"), pep("SSTTR")};
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  std::vector<Peptide> pc;
  for (auto i : perm) pc.push_back(c[i]);
  const auto a = m.forward(s, c, {});
  const auto b = m.forward(s, pc, {});
  const std::size_t len = a.rmd_pred.dim(1);
  for (std::size_t r = 0; r < perm.size(); ++r) {
    CHECK(std::abs(b.pmd_pred.at(r) - a.pmd_pred.at(perm[r])) < 1e-9);
    for (std::size_t j = 0; j < len; ++j)
      if (a.rmd_mask[perm[r] * len + j])
        CHECK(std::abs(b.rmd_pred.at(r * len + j) - a.rmd_pred.at(perm[r] * len + j)) < 1e-9);
  }
}

TEST_CASE("pad values do not reach real outputs") {
  RerankModel m(ModelConfig::desk(), MassTable::default_table(), 6);
  const auto s = toy_spectrum(15, 3);
  const std::vector<Peptide> c{pep("GAVKLMR"), pep("PEP"), pep("WWKD")};
  const auto a = m.forward(s, c, {});
  auto pad = m.params().get("embed.pad");
  for (auto& v : pad.mutable_values()) v += 3.0;
  const auto b = m.forward(s, c, {});
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(a.pmd_pred.at(i) - b.pmd_pred.at(i)) < 1e-12);
  for (std::size_t i = 0; i < a.rmd_mask.size(); ++i)
    if (a.rmd_mask[i]) CHECK(std::abs(a.rmd_pred.at(i) - b.rmd_pred.at(i)) < 1e-12);
}

TEST_CASE("attention work matches the axial count") {
  const auto cfg = ModelConfig::desk();
  const RerankModel m(cfg, MassTable::default_table(), 7);
  for (auto [k, c, len] : {std::tuple<std::size_t, std::size_t, std::size_t>{10, 2, 5}, {25, 4, 9}, {7, 6, 3}}) {
    const auto s = toy_spectrum(k, k);
    std::vector<Peptide> cands;
    for (std::size_t r = 0; r < c; ++r) {
      Peptide p;
      p.residues.assign(r == 0 ? len : 1 + r % len, "G");
      cands.push_back(p);
    }
    AttentionCounter counter;
    ForwardContext ctx;
    ctx.counter = &counter;
    m.forward(s, cands, ctx);
    const std::uint64_t w = len + 1;
    const std::uint64_t expect = cfg.encoder_layers * k * k + cfg.mixer_layers * (c * w * w + w * c * c + c * w * k);
    CHECK(counter.scores == expect);
  }
}

TEST_CASE("multi-head attention with one head equals a hand computation") {
  std::mt19937_64 rng(8);
  ag::ParameterStore st;
  const std::size_t d = 2;
  for (const char* n : {"wq", "wk", "wv", "wo"}) st.add(n, {d, d}, "xavier", rng);
  for (const char* n : {"bq", "bk", "bv", "bo"}) st.add(n, {d}, "normal:0.1", rng);
  AttentionParams p{st.get("wq"), st.get("bq"), st.get("wk"), st.get("bk"),
                    st.get("wv"), st.get("bv"), st.get("wo"), st.get("bo")};
  const auto x = ag::Tensor::from({1, 2, 2}, {0.3, -0.4, 1.1, 0.2});
  const auto out = multi_head_attention(x, x, {1, 0}, p, 1, nullptr);
  // With the second key masked, every query attends to token 0 only.
  auto lin = [](const double* v, const ag::Tensor& w, const ag::Tensor& b) {
    return std::array<double, 2>{v[0] * w.at(0) + v[1] * w.at(2) + b.at(0), v[0] * w.at(1) + v[1] * w.at(3) + b.at(1)};
  };
  const double x0[2] = {0.3, -0.4};
  const auto v0 = lin(x0, p.wv, p.bv);
  const auto o = lin(v0.data(), p.wo, p.bo);
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(out.at(t * 2) == doctest::Approx(o[0]).epsilon(1e-13));
    CHECK(out.at(t * 2 + 1) == doctest::Approx(o[1]).epsilon(1e-13));
  }
}

TEST_CASE("tiny model gradient check") {
  RerankModel m(ModelConfig::tiny(), MassTable::from_entries({{"G", 57.02146}, {"A", 71.03711}, {"K", 128.09496}}), 9);
  const auto s = toy_spectrum(4, 9);
  const std::vector<Peptide> c{pep("GAK"), pep("AG")};
  const std::vector<double> pmd_t{0.0, 0.8};
  const std::vector<double> rmd_t{0, 0, 0, 14.0, -14.0, 0};
  std::vector<ag::Tensor> inputs;
  for (const auto& e : m.params().entries()) inputs.push_back(e.tensor);
  const double err = ag::grad_check([&] { return joint_loss(m.forward(s, c, {}), pmd_t, rmd_t, 0.5); }, inputs);
  CHECK(err < 1e-5);
}

TEST_CASE("joint loss against a scalar oracle") {
  ModelOutput o;
  o.pmd_pred = ag::Tensor::from({2}, {0.5, 1.0});
  o.rmd_pred = ag::Tensor::from({2, 2}, {1.0, 2.0, 3.0, 99.0});
  o.rmd_mask = {1, 1, 1, 0};
  const double pmd = std::sqrt((0.25 + 0.0) / 2.0);
  const double rmd = std::sqrt((1.0 + 4.0 + 0.0) / 3.0);
  const auto l = joint_loss(o, {0.0, 1.0}, {0.0, 0.0, 3.0, 0.0}, 0.3);
  CHECK(l.item() == doctest::Approx(0.3 * pmd + 0.7 * rmd).epsilon(1e-14));
  CHECK_THROWS_AS(joint_loss(o, {0.0}, {0, 0, 0, 0}, 0.5), ShapeError);
  CHECK_THROWS_AS(joint_loss(o, {0.0, 1.0}, {0, 0, 0, 0}, 1.5), DomainError);
}

TEST_CASE("baseline objectives dispatch") {
  const auto s = ag::Tensor::from({3}, {1.0, -1.0, 0.5});
  const std::vector<double> y{1, 0, 0};
  CHECK(baseline_loss(BaselineObjective::kPointwise, s, y).item() == ag::bce_with_logits_sum(s, y).item());
  CHECK(baseline_loss(BaselineObjective::kPairwise, s, y).item() == ag::pairwise_logistic(s, y).item());
  CHECK(baseline_loss(BaselineObjective::kListwise, s, y).item() == ag::listwise_softmax_ce(s, y).item());
}

TEST_CASE("rerank selection takes the lowest PMD and the first on ties") {
  const std::vector<double> a{0.4, 0.1, 0.3};
  CHECK(rerank_select(a) == 1);
  const std::vector<double> tie{0.2, 0.1, 0.1};
  CHECK(rerank_select(tie) == 1);
  CHECK_THROWS_AS(rerank_select(std::vector<double>{}), DataError);
}

TEST_CASE("adopting a parameter store checks shapes") {
  const RerankModel m(ModelConfig::tiny(), MassTable::default_table(), 1);
  ag::ParameterStore copy;
  for (const auto& e : m.params().entries()) {
    auto shape = e.tensor.shape();
    if (e.name == "head.pmd.w") shape = {shape[0] + 1, 1};
    copy.add_values(e.name, shape, std::vector<double>(ag::numel(shape), 0.0));
  }
  try {
    RerankModel bad(ModelConfig::tiny(), MassTable::default_table(), std::move(copy));
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("head.pmd.w") != std::string::npos);
  }
}
