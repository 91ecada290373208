// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace peprank::ag {

using Shape = std::vector<std::size_t>;
using Mask = std::vector<std::uint8_t>;  // 1 = keep

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until something flows into it
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& grad_buffer();
};

/// Handle to a node of the computation graph. Copies share the node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  double item() const;
  double at(std::size_t flat_index) const { return node_->value.at(flat_index); }

  /// Zeros when no gradient reached this tensor.
  std::vector<double> grad() const;
  void zero_grad() { node_->grad.clear(); }

  bool requires_grad() const { return node_->requires_grad; }
  const char* op() const { return node_->op; }
  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

  /// Reverse-mode accumulation from this scalar.
  void backward() const;

 private:
  std::shared_ptr<Node> node_;
};

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

void backward(const Tensor& loss);

// Elementwise. `b` may also have a shape equal to a trailing suffix of a's
// shape, in which case it is broadcast over the leading axes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

/// op(a) * op(b) for rank-2 operands, or batched over the leading axis for
/// rank-3 operands with equal batch size.
Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a = false, bool transpose_b = false);
Tensor transpose(const Tensor& a);  // swaps the last two axes
Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes);
Tensor reshape(const Tensor& a, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length);
std::vector<Tensor> split(const Tensor& a, std::size_t axis, const std::vector<std::size_t>& sizes);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);

/// x [..., in] * w [in, out] + b [out].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
/// Normalizes over the last axis.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
/// Softmax over the last axis; masked entries get probability exactly 0.
/// `mask` has one entry per logit. Throws on a fully masked row.
Tensor softmax_masked(const Tensor& logits, const Mask& mask);
/// Inverted dropout; identity when !training or rate == 0.
Tensor dropout(const Tensor& x, double rate, bool training, std::mt19937_64& rng);
/// sqrt(mean over unmasked entries of (pred - target)^2); empty mask = all.
Tensor rmse(const Tensor& pred, const Tensor& target, const Mask& mask = {});
/// Rows of `table` [V, w] selected by index -> [n, w].
Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& indices);

// Reranking objectives over candidate scores [c] with binary labels.
Tensor bce_with_logits_sum(const Tensor& scores, const std::vector<double>& labels);
Tensor pairwise_logistic(const Tensor& scores, const std::vector<double>& labels);
Tensor listwise_softmax_ce(const Tensor& scores, const std::vector<double>& labels);

struct ParamSpec {
  std::string name;
  Shape shape;
  std::string init;  // "zeros", "ones", "xavier", or "normal:<std>"
};

/// Named trainable tensors; insertion order is the serialization order.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    std::string init;
  };

  Tensor add(const std::string& name, Shape shape, const std::string& init, std::mt19937_64& rng);
  void add_all(const std::vector<ParamSpec>& specs, std::mt19937_64& rng);
  /// Adds a tensor with explicit values (checkpoint loading, tests).
  Tensor add_values(const std::string& name, Shape shape, std::vector<double> values,
                    const std::string& init = "loaded");

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t total_values() const;

  void zero_grad();
  std::vector<double> flat_values() const;
  std::vector<double> flat_grads() const;
  void set_flat_values(std::span<const double> values);
  void copy_values_from(const ParameterStore& other);

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Central-difference gradient check of scalar f with respect to `inputs`.
/// Returns max |analytic - numeric| / max(1, |numeric|) over all coordinates.
/// Throws if f is not deterministic.
double grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& inputs,
                  double h = 1e-5);

}  // namespace peprank::ag
