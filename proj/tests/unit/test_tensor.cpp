// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "peprank/errors.hpp"
#include "peprank/tensor.hpp"

using namespace peprank;
using namespace peprank::ag;

namespace {

Tensor rand_t(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

// Weighted sum with fixed weights so every output coordinate matters.
Tensor probe(const Tensor& t) {
  std::vector<double> w(t.numel());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(0.7 * double(i) + 0.3);
  return sum(mul(t, Tensor::from(t.shape(), w)));
}

constexpr double kTol = 1e-6;

}  // namespace

TEST_CASE("basic values") {
  const auto a = Tensor::from({2, 2}, {1, 2, 3, 4});
  const auto b = Tensor::from({2}, {10, 20});
  CHECK(add(a, b).values()[3] == 24);
  CHECK(sub(a, a).values()[1] == 0);
  CHECK(mul(a, b).values()[2] == 30);
  CHECK(scale(a, 2).values()[0] == 2);
  const auto m = matmul(a, a);
  CHECK(std::vector<double>(m.values().begin(), m.values().end()) == std::vector<double>{7, 10, 15, 22});
  const auto mt = matmul(a, a, true, false);  // a^T a
  CHECK(std::vector<double>(mt.values().begin(), mt.values().end()) == std::vector<double>{10, 14, 14, 20});
  CHECK(transpose(a).values()[1] == 3);
  CHECK(sum(a).item() == 10);
  CHECK(mean(a).item() == 2.5);
  CHECK(relu(Tensor::from({2}, {-1, 2})).values()[0] == 0);
  CHECK(gelu(Tensor::from({1}, {0.0})).item() == 0.0);
  CHECK(gelu(Tensor::from({1}, {1.0})).item() == doctest::Approx(0.8413447460685429).epsilon(1e-12));
  const auto sl = slice(a, 1, 1, 1);
  CHECK(sl.shape() == Shape{2, 1});
  CHECK(sl.values()[1] == 4);
  const auto cat = concat({a, a}, 1);
  CHECK(cat.shape() == Shape{2, 4});
  CHECK(cat.values()[4] == 3);
  const auto parts = split(cat, 1, {1, 3});
  CHECK(parts[1].shape() == Shape{2, 3});
  CHECK(gather_rows(a, {1, 1, 0}).values()[4] == 1);
}

TEST_CASE("shape errors") {
  const auto a = Tensor::zeros({2, 3});
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
  CHECK_THROWS_AS(add(a, Tensor::zeros({2})), ShapeError);
  CHECK_THROWS_AS(reshape(a, {5}), ShapeError);
  CHECK_THROWS_AS(gather_rows(a, {2}), ShapeError);
  CHECK_THROWS_AS(softmax_masked(a, {1, 1}), ShapeError);
  CHECK_THROWS_AS(softmax_masked(a, {0, 0, 0, 1, 1, 1}), ShapeError);
  CHECK_THROWS_AS(rmse(a, a, std::vector<std::uint8_t>(6, 0)), ShapeError);
}

TEST_CASE("masked softmax gives exact zeros") {
  const auto s = softmax_masked(Tensor::from({2, 3}, {1, 2, 3, 0, 0, 5}), {1, 0, 1, 1, 1, 0});
  CHECK(s.values()[1] == 0.0);
  CHECK(s.values()[5] == 0.0);
  CHECK(s.values()[3] == doctest::Approx(0.5));
  CHECK(s.values()[0] + s.values()[2] == doctest::Approx(1.0));
}

TEST_CASE("layer norm normalizes each row") {
  std::mt19937_64 rng(1);
  const auto x = rand_t({3, 8}, rng, -5, 5);
  const auto y = layer_norm(x, Tensor::full({8}, 1.0), Tensor::zeros({8}));
  for (std::size_t r = 0; r < 3; ++r) {
    double m = 0, v = 0;
    for (std::size_t j = 0; j < 8; ++j) m += y.values()[r * 8 + j];
    m /= 8;
    for (std::size_t j = 0; j < 8; ++j) v += std::pow(y.values()[r * 8 + j] - m, 2);
    CHECK(std::abs(m) < 1e-12);
    CHECK(v / 8 == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("rmse with a mask") {
  const auto p = Tensor::from({4}, {1, 2, 3, 100});
  const auto t = Tensor::from({4}, {0, 0, 0, 0});
  CHECK(rmse(p, t, {1, 1, 1, 0}).item() == doctest::Approx(std::sqrt(14.0 / 3.0)).epsilon(1e-15));
  CHECK(rmse(p, p).item() == 0.0);
}

TEST_CASE("ranking objectives match direct formulas") {
  const std::vector<double> s{0.3, -1.2, 2.0};
  const std::vector<double> y{0, 1, 0};
  const auto t = Tensor::from({3}, s);
  auto sp = [](double x) { return std::log(1 + std::exp(x)); };
  double bce = 0;
  for (int j = 0; j < 3; ++j) bce += sp(s[j]) - y[j] * s[j];
  CHECK(bce_with_logits_sum(t, y).item() == doctest::Approx(bce).epsilon(1e-12));
  CHECK(pairwise_logistic(t, y).item() == doctest::Approx(sp(0.3 + 1.2) + sp(2.0 + 1.2)).epsilon(1e-12));
  const double z = std::exp(0.3) + std::exp(-1.2) + std::exp(2.0);
  CHECK(listwise_softmax_ce(t, y).item() == doctest::Approx(-std::log(std::exp(-1.2) / z)).epsilon(1e-12));
  CHECK_THROWS_AS(listwise_softmax_ce(t, {0, 0, 0}), DomainError);
  CHECK_THROWS_AS(bce_with_logits_sum(t, {0, 2, 0}), DomainError);
  CHECK(pairwise_logistic(t, {1, 1, 1}).item() == 0.0);
}

TEST_CASE("gradient checks for every op") {
  std::mt19937_64 rng(11);
  const auto a = rand_t({3, 4}, rng);
  const auto b = rand_t({3, 4}, rng);
  const auto v = rand_t({4}, rng);
  const auto w = rand_t({4, 5}, rng);
  const auto bias = rand_t({5}, rng);
  const auto x3 = rand_t({2, 3, 4}, rng);
  const auto y3 = rand_t({2, 4, 3}, rng);
  const auto sq = rand_t({4, 4}, rng);

  CHECK(grad_check([&] { return probe(add(a, b)); }, {a, b}) < kTol);
  CHECK(grad_check([&] { return probe(add(a, v)); }, {a, v}) < kTol);
  CHECK(grad_check([&] { return probe(sub(a, v)); }, {a, v}) < kTol);
  CHECK(grad_check([&] { return probe(mul(a, b)); }, {a, b}) < kTol);
  CHECK(grad_check([&] { return probe(mul(a, v)); }, {a, v}) < kTol);
  CHECK(grad_check([&] { return probe(scale(a, -1.7)); }, {a}) < kTol);
  CHECK(grad_check([&] { return probe(matmul(a, w)); }, {a, w}) < kTol);
  CHECK(grad_check([&] { return probe(matmul(a, b, false, true)); }, {a, b}) < kTol);
  CHECK(grad_check([&] { return probe(matmul(a, b, true, false)); }, {a, b}) < kTol);
  CHECK(grad_check([&] { return probe(matmul(sq, sq, true, true)); }, {sq}) < kTol);
  CHECK(grad_check([&] { return probe(matmul(x3, y3)); }, {x3, y3}) < kTol);
  CHECK(grad_check([&] { return probe(matmul(x3, x3, false, true)); }, {x3}) < kTol);
  CHECK(grad_check([&] { return probe(transpose(x3)); }, {x3}) < kTol);
  CHECK(grad_check([&] { return probe(permute(x3, {1, 0, 2})); }, {x3}) < kTol);
  CHECK(grad_check([&] { return probe(permute(x3, {2, 0, 1})); }, {x3}) < kTol);
  CHECK(grad_check([&] { return probe(reshape(x3, {4, 6})); }, {x3}) < kTol);
  CHECK(grad_check([&] { return probe(concat({a, b}, 0)); }, {a, b}) < kTol);
  CHECK(grad_check([&] { return probe(concat({a, b}, 1)); }, {a, b}) < kTol);
  CHECK(grad_check([&] { return probe(slice(x3, 2, 1, 2)); }, {x3}) < kTol);
  CHECK(grad_check([&] { return probe(split(a, 1, {1, 3})[1]); }, {a}) < kTol);
  CHECK(grad_check([&] { return sum(mul(a, a)); }, {a}) < kTol);
  CHECK(grad_check([&] { return mean(mul(a, b)); }, {a, b}) < kTol);
  CHECK(grad_check([&] { return probe(relu(add(a, Tensor::full({4}, 0.05)))); }, {a}) < kTol);
  CHECK(grad_check([&] { return probe(gelu(a)); }, {a}) < kTol);
  CHECK(grad_check([&] { return probe(linear(a, w, bias)); }, {a, w, bias}) < kTol);
  CHECK(grad_check([&] { return probe(linear(x3, w, bias)); }, {x3, w, bias}) < kTol);
  const auto g = rand_t({4}, rng, 0.5, 1.5);
  CHECK(grad_check([&] { return probe(layer_norm(a, g, v)); }, {a, g, v}) < kTol);
  const Mask m{1, 0, 1, 1, 1, 1, 0, 1, 0, 0, 0, 1};
  CHECK(grad_check([&] { return probe(softmax_masked(a, m)); }, {a}) < kTol);
  CHECK(grad_check([&] { return rmse(a, b, m); }, {a, b}) < kTol);
  CHECK(grad_check([&] { return rmse(a, b); }, {a, b}) < kTol);
  CHECK(grad_check([&] { return probe(gather_rows(a, {2, 0, 2})); }, {a}) < kTol);
  const auto s = rand_t({5}, rng, -2, 2);
  const std::vector<double> labels{0, 1, 0, 1, 0};
  CHECK(grad_check([&] { return bce_with_logits_sum(s, labels); }, {s}) < kTol);
  CHECK(grad_check([&] { return pairwise_logistic(s, labels); }, {s}) < kTol);
  CHECK(grad_check([&] { return listwise_softmax_ce(s, labels); }, {s}) < kTol);
  CHECK(grad_check([&] { std::mt19937_64 r(9); return probe(dropout(a, 0.4, true, r)); }, {a}) < kTol);
}

TEST_CASE("gradients accumulate over shared subexpressions") {
  const auto x = Tensor::from({1}, {3.0}, true);
  const auto y = add(mul(x, x), x);  // x^2 + x
  sum(y).backward();
  CHECK(x.grad()[0] == 7.0);
}

TEST_CASE("no-grad guard skips recording") {
  const auto x = Tensor::from({2}, {1, 2}, true);
  {
    NoGradGuard guard;
    CHECK_FALSE(grad_enabled());
    const auto y = mul(x, x);
    CHECK_FALSE(y.requires_grad());
  }
  CHECK(grad_enabled());
  CHECK(mul(x, x).requires_grad());
}

TEST_CASE("dropout is identity in eval mode and scales in training") {
  std::mt19937_64 rng(1);
  const auto x = Tensor::full({1000}, 1.0);
  CHECK(dropout(x, 0.5, false, rng).node() == x.node());
  const auto y = dropout(x, 0.5, true, rng);
  std::size_t zeros = 0;
  for (double v : y.values()) {
    CHECK((v == 0.0 || v == 2.0));
    zeros += v == 0.0;
  }
  CHECK(zeros > 400);
  CHECK(zeros < 600);
  CHECK_THROWS_AS(dropout(x, 1.0, true, rng), DomainError);
}

TEST_CASE("parameter store") {
  std::mt19937_64 rng(2);
  ParameterStore st;
  st.add("w", {3, 4}, "xavier", rng);
  st.add("b", {4}, "zeros", rng);
  st.add("n", {2}, "normal:0.1", rng);
  CHECK(st.size() == 3);
  CHECK(st.total_values() == 18);
  const double bound = std::sqrt(6.0 / 7.0);
  for (double v : st.get("w").values()) CHECK(std::abs(v) <= bound);
  CHECK_THROWS_AS(st.add("w", {1}, "zeros", rng), DomainError);
  CHECK_THROWS_AS(st.add("q", {1}, "bogus", rng), DomainError);
  CHECK_THROWS_AS(st.get("missing"), DomainError);

  const auto flat = st.flat_values();
  CHECK(flat.size() == 18);
  CHECK(st.flat_grads() == std::vector<double>(18, 0.0));
  std::vector<double> ones(18, 1.0);
  st.set_flat_values(ones);
  CHECK(st.get("b").values()[2] == 1.0);
  ParameterStore other;
  std::mt19937_64 rng2(2);
  other.add("w", {3, 4}, "xavier", rng2);
  other.add("b", {4}, "zeros", rng2);
  other.add("n", {2}, "normal:0.1", rng2);
  CHECK(other.flat_values() == flat);  // same seed, same values
  other.copy_values_from(st);
  CHECK(other.flat_values() == ones);
}
