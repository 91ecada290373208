// SPDX-License-Identifier: Apache-2.0
#include "peprank/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "peprank/errors.hpp"

namespace peprank::ag {

namespace {

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<Node>;

Tensor make_result(Shape shape, std::vector<double> value, const char* op,
                   std::vector<NodePtr> parents, std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  if (g_grad_enabled) {
    const bool needs = std::any_of(parents.begin(), parents.end(),
                                   [](const NodePtr& p) { return p->requires_grad; });
    if (needs) {
      node->requires_grad = true;
      node->parents = std::move(parents);
      node->backward = std::move(backward_fn);
    }
  }
  return Tensor(std::move(node));
}

void require(bool cond, const std::string& what) {
  if (!cond) throw ShapeError(what);
}

bool is_suffix(const Shape& big, const Shape& small) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

// C[m,p] += op(A)[m,n] * op(B)[n,p]. A is stored [m,n] (or [n,m] when ta),
// B is stored [n,p] (or [p,n] when tb).
void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t p, const double* A,
          const double* B, double* C) {
  if (!ta && !tb) {
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = C + i * p;
      for (std::size_t k = 0; k < n; ++k) {
        const double a = A[i * n + k];
        const double* brow = B + k * p;
        for (std::size_t j = 0; j < p; ++j) crow[j] += a * brow[j];
      }
    }
  } else if (!ta && tb) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = A + i * n;
      for (std::size_t j = 0; j < p; ++j) {
        const double* brow = B + j * n;
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += arow[k] * brow[k];
        C[i * p + j] += acc;
      }
    }
  } else if (ta && !tb) {
    for (std::size_t k = 0; k < n; ++k) {
      const double* brow = B + k * p;
      for (std::size_t i = 0; i < m; ++i) {
        const double a = A[k * m + i];
        double* crow = C + i * p;
        for (std::size_t j = 0; j < p; ++j) crow[j] += a * brow[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += A[k * m + i] * B[j * n + k];
        C[i * p + j] += acc;
      }
  }
}

struct MatmulDims {
  std::size_t batch, m, n, p;
};

MatmulDims matmul_dims(const Shape& a, const Shape& b, bool ta, bool tb) {
  require(a.size() == b.size() && (a.size() == 2 || a.size() == 3),
          "matmul: operands must both be rank 2 or rank 3, got " + shape_str(a) + " and " +
              shape_str(b));
  const std::size_t off = a.size() - 2;
  MatmulDims d{};
  d.batch = off ? a[0] : 1;
  if (off) require(a[0] == b[0], "matmul: batch mismatch " + shape_str(a) + " vs " + shape_str(b));
  d.m = ta ? a[off + 1] : a[off];
  d.n = ta ? a[off] : a[off + 1];
  const std::size_t bn = tb ? b[off + 1] : b[off];
  d.p = tb ? b[off] : b[off + 1];
  require(d.n == bn, "matmul: inner dimension mismatch " + shape_str(a) + " vs " + shape_str(b));
  return d;
}

void batched_gemm(bool ta, bool tb, const MatmulDims& d, const double* A, const double* B,
                  double* C) {
  const std::size_t sa = d.m * d.n, sb = d.n * d.p, sc = d.m * d.p;
  for (std::size_t bi = 0; bi < d.batch; ++bi) gemm(ta, tb, d.m, d.n, d.p, A + bi * sa, B + bi * sb, C + bi * sc);
}

std::vector<std::size_t> strides_of(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void require_scores(const Tensor& scores, const std::vector<double>& labels, const char* what) {
  require(scores.rank() == 1, std::string(what) + ": scores must be rank 1");
  require(scores.numel() == labels.size(), std::string(what) + ": label count mismatch");
  for (double y : labels)
    if (y != 0.0 && y != 1.0) throw DomainError(std::string(what) + ": labels must be 0 or 1");
}

}  // namespace

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

std::vector<double>& Node::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = ag::numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  require(ag::numel(shape) == values.size(),
          "tensor: " + std::to_string(values.size()) + " values for shape " + shape_str(shape));
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from({}, {value}); }

double Tensor::item() const {
  require(numel() == 1, "item: tensor of shape " + shape_str(shape()) + " is not a scalar");
  return node_->value[0];
}

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(numel(), 0.0);
  return node_->grad;
}

void Tensor::backward() const { ag::backward(*this); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

void backward(const Tensor& loss) {
  require(loss.numel() == 1, "backward: loss must be a scalar, got shape " + shape_str(loss.shape()));
  if (!loss.requires_grad()) return;
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node(), 0}};
  visited.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

// ---------------------------------------------------------------- elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  require(is_suffix(a.shape(), b.shape()),
          "add: shape " + shape_str(b.shape()) + " does not broadcast to " + shape_str(a.shape()));
  const std::size_t inner = b.numel(), n = a.numel();
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < n; ++i) out[i] += bv[i % inner];
  return make_result(a.shape(), std::move(out), "add", {a.node_ptr(), b.node_ptr()}, [inner](Node& self) {
    const auto& g = self.grad;
    if (self.parents[0]->requires_grad) {
      auto& ga = self.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (self.parents[1]->requires_grad) {
      auto& gb = self.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % inner] += g[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
  require(is_suffix(a.shape(), b.shape()),
          "mul: shape " + shape_str(b.shape()) + " does not broadcast to " + shape_str(a.shape()));
  const std::size_t inner = b.numel(), n = a.numel();
  std::vector<double> out(n);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < n; ++i) out[i] = av[i] * bv[i % inner];
  return make_result(a.shape(), std::move(out), "mul", {a.node_ptr(), b.node_ptr()}, [inner](Node& self) {
    const auto& g = self.grad;
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (self.parents[0]->requires_grad) {
      auto& ga = self.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i % inner];
    }
    if (self.parents[1]->requires_grad) {
      auto& gb = self.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % inner] += g[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (auto& v : out) v *= factor;
  return make_result(a.shape(), std::move(out), "scale", {a.node_ptr()}, [factor](Node& self) {
    auto& ga = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * factor;
  });
}

// ------------------------------------------------------------------- matmul

Tensor matmul(const Tensor& a, const Tensor& b, bool ta, bool tb) {
  const auto d = matmul_dims(a.shape(), b.shape(), ta, tb);
  Shape out_shape = a.rank() == 3 ? Shape{d.batch, d.m, d.p} : Shape{d.m, d.p};
  std::vector<double> out(d.batch * d.m * d.p, 0.0);
  batched_gemm(ta, tb, d, a.values().data(), b.values().data(), out.data());
  return make_result(std::move(out_shape), std::move(out), "matmul", {a.node_ptr(), b.node_ptr()},
                     [d, ta, tb](Node& self) {
                       const Node& A = *self.parents[0];
                       const Node& B = *self.parents[1];
                       const double* G = self.grad.data();
                       // G is [m, p]; see the derivation for op(A) op(B).
                       if (A.requires_grad) {
                         auto& ga = self.parents[0]->grad_buffer();
                         const std::size_t sa = d.m * d.n, sb = d.n * d.p, sg = d.m * d.p;
                         for (std::size_t bi = 0; bi < d.batch; ++bi) {
                           if (!ta) {
                             // dA[m,n] = G[m,p] * op(B)^T
                             gemm(false, !tb, d.m, d.p, d.n, G + bi * sg, B.value.data() + bi * sb,
                                  ga.data() + bi * sa);
                           } else {
                             // dA[n,m] = op(B)[n,p] * G^T
                             gemm(tb, true, d.n, d.p, d.m, B.value.data() + bi * sb, G + bi * sg,
                                  ga.data() + bi * sa);
                           }
                         }
                       }
                       if (B.requires_grad) {
                         auto& gb = self.parents[1]->grad_buffer();
                         const std::size_t sa = d.m * d.n, sb = d.n * d.p, sg = d.m * d.p;
                         for (std::size_t bi = 0; bi < d.batch; ++bi) {
                           if (!tb) {
                             // dB[n,p] = op(A)^T * G
                             gemm(!ta, false, d.n, d.m, d.p, A.value.data() + bi * sa, G + bi * sg,
                                  gb.data() + bi * sb);
                           } else {
                             // dB[p,n] = G^T * op(A)
                             gemm(true, ta, d.p, d.m, d.n, G + bi * sg, A.value.data() + bi * sa,
                                  gb.data() + bi * sb);
                           }
                         }
                       }
                     });
}

Tensor transpose(const Tensor& a) {
  require(a.rank() >= 2, "transpose: rank must be at least 2");
  std::vector<std::size_t> axes(a.rank());
  std::iota(axes.begin(), axes.end(), 0);
  std::swap(axes[a.rank() - 1], axes[a.rank() - 2]);
  return permute(a, axes);
}

Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes) {
  const auto& in_shape = a.shape();
  require(axes.size() == in_shape.size(), "permute: axis count mismatch");
  std::vector<bool> seen(axes.size(), false);
  for (auto ax : axes) {
    require(ax < axes.size() && !seen[ax], "permute: axes must be a permutation");
    seen[ax] = true;
  }
  Shape out_shape(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) out_shape[i] = in_shape[axes[i]];
  const auto in_strides = strides_of(in_shape);
  // src_index[out flat index] -> input flat index
  const std::size_t n = a.numel();
  auto src = std::make_shared<std::vector<std::size_t>>(n);
  std::vector<std::size_t> idx(axes.size(), 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t s = 0;
    for (std::size_t i = 0; i < axes.size(); ++i) s += idx[i] * in_strides[axes[i]];
    (*src)[flat] = s;
    for (std::size_t i = axes.size(); i-- > 0;) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }
  std::vector<double> out(n);
  const auto av = a.values();
  for (std::size_t i = 0; i < n; ++i) out[i] = av[(*src)[i]];
  return make_result(std::move(out_shape), std::move(out), "permute", {a.node_ptr()}, [src](Node& self) {
    auto& ga = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[(*src)[i]] += self.grad[i];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  require(numel(shape) == a.numel(),
          "reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  std::vector<double> out(a.values().begin(), a.values().end());
  return make_result(std::move(shape), std::move(out), "reshape", {a.node_ptr()}, [](Node& self) {
    auto& ga = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  require(!parts.empty(), "concat: no inputs");
  const Shape& first = parts[0].shape();
  require(axis < first.size(), "concat: axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    require(p.rank() == first.size(), "concat: rank mismatch");
    for (std::size_t i = 0; i < first.size(); ++i)
      if (i != axis)
        require(p.dim(i) == first[i], "concat: shape mismatch " + shape_str(p.shape()) + " vs " +
                                          shape_str(first));
    out_shape[axis] += p.dim(axis);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];
  for (const auto& p : parts) widths.push_back(p.dim(axis) * inner);
  const std::size_t row = out_shape[axis] * inner;
  std::vector<double> out(numel(out_shape));
  std::vector<NodePtr> parents;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pv = parts[k].values();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(pv.data() + o * widths[k], widths[k], out.data() + o * row + offset);
    offset += widths[k];
    parents.push_back(parts[k].node_ptr());
  }
  return make_result(std::move(out_shape), std::move(out), "concat", std::move(parents),
                     [widths, outer, row](Node& self) {
                       std::size_t offset = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         if (self.parents[k]->requires_grad) {
                           auto& gp = self.parents[k]->grad_buffer();
                           for (std::size_t o = 0; o < outer; ++o)
                             for (std::size_t j = 0; j < widths[k]; ++j)
                               gp[o * widths[k] + j] += self.grad[o * row + offset + j];
                         }
                         offset += widths[k];
                       }
                     });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length) {
  require(axis < a.rank(), "slice: axis out of range");
  require(start + length <= a.dim(axis), "slice: range exceeds axis " + std::to_string(axis) +
                                             " of " + shape_str(a.shape()));
  Shape out_shape = a.shape();
  out_shape[axis] = length;
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= a.dim(i);
  for (std::size_t i = axis + 1; i < a.rank(); ++i) inner *= a.dim(i);
  const std::size_t row = a.dim(axis) * inner, width = length * inner, off = start * inner;
  std::vector<double> out(outer * width);
  const auto av = a.values();
  for (std::size_t o = 0; o < outer; ++o) std::copy_n(av.data() + o * row + off, width, out.data() + o * width);
  return make_result(std::move(out_shape), std::move(out), "slice", {a.node_ptr()},
                     [outer, row, width, off](Node& self) {
                       auto& ga = self.parents[0]->grad_buffer();
                       for (std::size_t o = 0; o < outer; ++o)
                         for (std::size_t j = 0; j < width; ++j) ga[o * row + off + j] += self.grad[o * width + j];
                     });
}

std::vector<Tensor> split(const Tensor& a, std::size_t axis, const std::vector<std::size_t>& sizes) {
  require(axis < a.rank(), "split: axis out of range");
  require(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == a.dim(axis),
          "split: sizes do not add up to the axis length");
  std::vector<Tensor> out;
  std::size_t start = 0;
  for (auto s : sizes) {
    out.push_back(slice(a, axis, start, s));
    start += s;
  }
  return out;
}

// --------------------------------------------------------------- reductions

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return make_result({}, {total}, "sum", {a.node_ptr()}, [](Node& self) {
    auto& ga = self.parents[0]->grad_buffer();
    for (auto& g : ga) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  require(a.numel() > 0, "mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

// -------------------------------------------------------------- activations

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return make_result(a.shape(), std::move(out), "relu", {a.node_ptr()}, [](Node& self) {
    auto& ga = self.parents[0]->grad_buffer();
    const auto& x = self.parents[0]->value;
    for (std::size_t i = 0; i < ga.size(); ++i)
      if (x[i] > 0.0) ga[i] += self.grad[i];
  });
}

Tensor gelu(const Tensor& a) {
  std::vector<double> out(a.numel());
  const auto x = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * normal_cdf(x[i]);
  return make_result(a.shape(), std::move(out), "gelu", {a.node_ptr()}, [](Node& self) {
    auto& ga = self.parents[0]->grad_buffer();
    const auto& x = self.parents[0]->value;
    for (std::size_t i = 0; i < ga.size(); ++i)
      ga[i] += self.grad[i] * (normal_cdf(x[i]) + x[i] * normal_pdf(x[i]));
  });
}

// -------------------------------------------------------------------- layers

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  require(w.rank() == 2, "linear: weight must be rank 2");
  require(x.rank() >= 1 && x.shape().back() == w.dim(0),
          "linear: input " + shape_str(x.shape()) + " does not match weight " + shape_str(w.shape()));
  require(b.rank() == 1 && b.dim(0) == w.dim(1), "linear: bias shape mismatch");
  const std::size_t rows = x.numel() / w.dim(0);
  Shape out_shape = x.shape();
  out_shape.back() = w.dim(1);
  const auto flat = reshape(x, {rows, w.dim(0)});
  return reshape(add(matmul(flat, w), b), std::move(out_shape));
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require(x.rank() >= 1, "layer_norm: scalar input");
  const std::size_t width = x.shape().back();
  require(gain.rank() == 1 && gain.dim(0) == width && bias.rank() == 1 && bias.dim(0) == width,
          "layer_norm: gain/bias must match the last axis " + std::to_string(width));
  const std::size_t rows = x.numel() / width;
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto rstd = std::make_shared<std::vector<double>>(rows);
  std::vector<double> out(x.numel());
  const auto xv = x.values();
  const auto gv = gain.values();
  const auto bv = bias.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * width;
    double mu = 0.0;
    for (std::size_t j = 0; j < width; ++j) mu += row[j];
    mu /= double(width);
    double var = 0.0;
    for (std::size_t j = 0; j < width; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= double(width);
    const double rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t j = 0; j < width; ++j) {
      const double h = (row[j] - mu) * rs;
      (*xhat)[r * width + j] = h;
      out[r * width + j] = h * gv[j] + bv[j];
    }
  }
  return make_result(x.shape(), std::move(out), "layer_norm",
                     {x.node_ptr(), gain.node_ptr(), bias.node_ptr()},
                     [xhat, rstd, width, rows](Node& self) {
                       const auto& g = self.grad;
                       const auto& gv = self.parents[1]->value;
                       if (self.parents[1]->requires_grad) {
                         auto& gg = self.parents[1]->grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i) gg[i % width] += g[i] * (*xhat)[i];
                       }
                       if (self.parents[2]->requires_grad) {
                         auto& gb = self.parents[2]->grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i) gb[i % width] += g[i];
                       }
                       if (self.parents[0]->requires_grad) {
                         auto& gx = self.parents[0]->grad_buffer();
                         const double n = double(width);
                         for (std::size_t r = 0; r < rows; ++r) {
                           double s1 = 0.0, s2 = 0.0;
                           for (std::size_t j = 0; j < width; ++j) {
                             const double dh = g[r * width + j] * gv[j];
                             s1 += dh;
                             s2 += dh * (*xhat)[r * width + j];
                           }
                           for (std::size_t j = 0; j < width; ++j) {
                             const double dh = g[r * width + j] * gv[j];
                             gx[r * width + j] +=
                                 (*rstd)[r] / n * (n * dh - s1 - (*xhat)[r * width + j] * s2);
                           }
                         }
                       }
                     });
}

Tensor softmax_masked(const Tensor& logits, const Mask& mask) {
  require(logits.rank() >= 1, "softmax_masked: scalar input");
  require(mask.size() == logits.numel(), "softmax_masked: mask has " + std::to_string(mask.size()) +
                                             " entries for " + std::to_string(logits.numel()) +
                                             " logits");
  const std::size_t width = logits.shape().back();
  const std::size_t rows = logits.numel() / width;
  std::vector<double> out(logits.numel(), 0.0);
  const auto lv = logits.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * width;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < width; ++j)
      if (mask[base + j]) mx = std::max(mx, lv[base + j]);
    if (mx == -std::numeric_limits<double>::infinity())
      throw ShapeError("softmax_masked: row " + std::to_string(r) + " is fully masked");
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j)
      if (mask[base + j]) total += (out[base + j] = std::exp(lv[base + j] - mx));
    for (std::size_t j = 0; j < width; ++j) out[base + j] /= total;
  }
  return make_result(logits.shape(), std::move(out), "softmax_masked", {logits.node_ptr()},
                     [width, rows](Node& self) {
                       auto& gl = self.parents[0]->grad_buffer();
                       const auto& p = self.value;
                       const auto& g = self.grad;
                       for (std::size_t r = 0; r < rows; ++r) {
                         const std::size_t base = r * width;
                         double dot = 0.0;
                         for (std::size_t j = 0; j < width; ++j) dot += p[base + j] * g[base + j];
                         for (std::size_t j = 0; j < width; ++j)
                           gl[base + j] += p[base + j] * (g[base + j] - dot);
                       }
                     });
}

Tensor dropout(const Tensor& x, double rate, bool training, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw DomainError("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  auto keep = std::make_shared<std::vector<double>>(x.numel());
  std::bernoulli_distribution coin(1.0 - rate);
  const double inv = 1.0 / (1.0 - rate);
  for (auto& k : *keep) k = coin(rng) ? inv : 0.0;
  std::vector<double> out(x.numel());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * (*keep)[i];
  return make_result(x.shape(), std::move(out), "dropout", {x.node_ptr()}, [keep](Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * (*keep)[i];
  });
}

Tensor rmse(const Tensor& pred, const Tensor& target, const Mask& mask) {
  require(pred.shape() == target.shape(),
          "rmse: prediction " + shape_str(pred.shape()) + " vs target " + shape_str(target.shape()));
  require(mask.empty() || mask.size() == pred.numel(), "rmse: mask size mismatch");
  const auto pv = pred.values();
  const auto tv = target.values();
  std::size_t count = 0;
  double sq = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    ++count;
    sq += (pv[i] - tv[i]) * (pv[i] - tv[i]);
  }
  if (count == 0) throw ShapeError("rmse: no unmasked elements");
  const double value = std::sqrt(sq / double(count));
  return make_result({}, {value}, "rmse", {pred.node_ptr(), target.node_ptr()},
                     [mask, count](Node& self) {
                       const double r = self.value[0];
                       if (r == 0.0) return;  // subgradient 0 at the minimum
                       const auto& pv = self.parents[0]->value;
                       const auto& tv = self.parents[1]->value;
                       const double k = self.grad[0] / (double(count) * r);
                       for (int side = 0; side < 2; ++side) {
                         if (!self.parents[side]->requires_grad) continue;
                         auto& gx = self.parents[side]->grad_buffer();
                         const double sign = side == 0 ? 1.0 : -1.0;
                         for (std::size_t i = 0; i < pv.size(); ++i)
                           if (mask.empty() || mask[i]) gx[i] += sign * k * (pv[i] - tv[i]);
                       }
                     });
}

Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& indices) {
  require(table.rank() == 2, "gather_rows: table must be rank 2");
  const std::size_t width = table.dim(1);
  std::vector<double> out(indices.size() * width);
  const auto tv = table.values();
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= table.dim(0))
      throw ShapeError("gather_rows: index " + std::to_string(indices[r]) + " out of range " +
                       std::to_string(table.dim(0)));
    std::copy_n(tv.data() + indices[r] * width, width, out.data() + r * width);
  }
  return make_result({indices.size(), width}, std::move(out), "gather_rows", {table.node_ptr()},
                     [indices, width](Node& self) {
                       auto& gt = self.parents[0]->grad_buffer();
                       for (std::size_t r = 0; r < indices.size(); ++r)
                         for (std::size_t j = 0; j < width; ++j)
                           gt[indices[r] * width + j] += self.grad[r * width + j];
                     });
}

// ------------------------------------------------------- ranking objectives

Tensor bce_with_logits_sum(const Tensor& scores, const std::vector<double>& labels) {
  require_scores(scores, labels, "bce_with_logits_sum");
  double total = 0.0;
  const auto s = scores.values();
  for (std::size_t j = 0; j < labels.size(); ++j) total += softplus(s[j]) - labels[j] * s[j];
  return make_result({}, {total}, "bce_with_logits_sum", {scores.node_ptr()}, [labels](Node& self) {
    auto& gs = self.parents[0]->grad_buffer();
    const auto& s = self.parents[0]->value;
    for (std::size_t j = 0; j < labels.size(); ++j) gs[j] += self.grad[0] * (sigmoid(s[j]) - labels[j]);
  });
}

Tensor pairwise_logistic(const Tensor& scores, const std::vector<double>& labels) {
  require_scores(scores, labels, "pairwise_logistic");
  double total = 0.0;
  const auto s = scores.values();
  for (std::size_t j = 0; j < labels.size(); ++j)
    for (std::size_t k = 0; k < labels.size(); ++k)
      if (labels[j] > labels[k]) total += softplus(s[k] - s[j]);
  return make_result({}, {total}, "pairwise_logistic", {scores.node_ptr()}, [labels](Node& self) {
    auto& gs = self.parents[0]->grad_buffer();
    const auto& s = self.parents[0]->value;
    for (std::size_t j = 0; j < labels.size(); ++j)
      for (std::size_t k = 0; k < labels.size(); ++k)
        if (labels[j] > labels[k]) {
          const double w = self.grad[0] * sigmoid(s[k] - s[j]);
          gs[k] += w;
          gs[j] -= w;
        }
  });
}

Tensor listwise_softmax_ce(const Tensor& scores, const std::vector<double>& labels) {
  require_scores(scores, labels, "listwise_softmax_ce");
  const double positives = std::accumulate(labels.begin(), labels.end(), 0.0);
  if (positives == 0.0) throw DomainError("listwise_softmax_ce: no positive label");
  const auto s = scores.values();
  const double mx = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double v : s) z += std::exp(v - mx);
  const double log_z = mx + std::log(z);
  double total = 0.0;
  for (std::size_t j = 0; j < labels.size(); ++j) total -= labels[j] / positives * (s[j] - log_z);
  return make_result({}, {total}, "listwise_softmax_ce", {scores.node_ptr()},
                     [labels, positives, log_z](Node& self) {
                       auto& gs = self.parents[0]->grad_buffer();
                       const auto& s = self.parents[0]->value;
                       for (std::size_t j = 0; j < labels.size(); ++j)
                         gs[j] += self.grad[0] * (std::exp(s[j] - log_z) - labels[j] / positives);
                     });
}

// ----------------------------------------------------------- ParameterStore

Tensor ParameterStore::add(const std::string& name, Shape shape, const std::string& init,
                           std::mt19937_64& rng) {
  const std::size_t n = numel(shape);
  std::vector<double> values(n, 0.0);
  if (init == "zeros") {
  } else if (init == "ones") {
    std::fill(values.begin(), values.end(), 1.0);
  } else if (init == "xavier") {
    require(shape.size() == 2, "xavier init needs a rank-2 shape for '" + name + "'");
    const double bound = std::sqrt(6.0 / double(shape[0] + shape[1]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : values) v = dist(rng);
  } else if (init.rfind("normal:", 0) == 0) {
    std::normal_distribution<double> dist(0.0, std::stod(init.substr(7)));
    for (auto& v : values) v = dist(rng);
  } else {
    throw DomainError("unknown initializer '" + init + "'");
  }
  return add_values(name, std::move(shape), std::move(values), init);
}

void ParameterStore::add_all(const std::vector<ParamSpec>& specs, std::mt19937_64& rng) {
  for (const auto& s : specs) add(s.name, s.shape, s.init, rng);
}

Tensor ParameterStore::add_values(const std::string& name, Shape shape, std::vector<double> values,
                                  const std::string& init) {
  if (index_.count(name)) throw DomainError("duplicate parameter '" + name + "'");
  auto t = Tensor::from(std::move(shape), std::move(values), true);
  index_[name] = entries_.size();
  entries_.push_back({name, t, init});
  return t;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw DomainError("unknown parameter '" + name + "'");
  return entries_[it->second].tensor;
}

std::size_t ParameterStore::total_values() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

std::vector<double> ParameterStore::flat_values() const {
  std::vector<double> out;
  out.reserve(total_values());
  for (const auto& e : entries_) out.insert(out.end(), e.tensor.values().begin(), e.tensor.values().end());
  return out;
}

std::vector<double> ParameterStore::flat_grads() const {
  std::vector<double> out;
  out.reserve(total_values());
  for (const auto& e : entries_) {
    const auto& g = e.tensor.node()->grad;
    if (g.empty()) {
      out.insert(out.end(), e.tensor.numel(), 0.0);
    } else {
      out.insert(out.end(), g.begin(), g.end());
    }
  }
  return out;
}

void ParameterStore::set_flat_values(std::span<const double> values) {
  require(values.size() == total_values(), "set_flat_values: size mismatch");
  std::size_t off = 0;
  for (auto& e : entries_) {
    auto dst = e.tensor.mutable_values();
    std::copy_n(values.data() + off, dst.size(), dst.data());
    off += dst.size();
  }
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  require(other.entries_.size() == entries_.size(), "copy_values_from: store mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    require(entries_[i].name == other.entries_[i].name &&
                entries_[i].tensor.shape() == other.entries_[i].tensor.shape(),
            "copy_values_from: parameter mismatch at '" + entries_[i].name + "'");
    auto dst = entries_[i].tensor.mutable_values();
    auto src = other.entries_[i].tensor.values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

// --------------------------------------------------------------- grad_check

double grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& inputs, double h) {
  for (const auto& t : inputs) t.node()->grad.clear();
  const Tensor loss = f();
  require(loss.numel() == 1, "grad_check: f must return a scalar");
  loss.backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs) analytic.push_back(t.grad());

  NoGradGuard no_grad;
  const double base = f().item();
  if (base != loss.item() || f().item() != base)
    throw DomainError("grad_check: f is not deterministic");

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto vals = inputs[k].node()->value.data();
    for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + h;
      const double up = f().item();
      vals[i] = saved - h;
      const double down = f().item();
      vals[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = std::abs(analytic[k][i] - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace peprank::ag
