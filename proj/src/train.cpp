// SPDX-License-Identifier: Apache-2.0
#include "peprank/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "peprank/errors.hpp"

namespace peprank {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double instance_grad(const RerankModel& model, const TrainingInstance& inst, std::uint64_t seed,
                     std::vector<double>& grad) {
  std::mt19937_64 rng(seed);
  ForwardContext ctx{true, &rng, nullptr};
  const auto out = model.forward(inst.spectrum, inst.candidates, ctx);
  const auto loss = joint_loss(out, inst.pmd_targets, inst.rmd_targets, model.config().lambda);
  auto& store = const_cast<RerankModel&>(model).params();
  store.zero_grad();
  loss.backward();
  grad = store.flat_grads();
  store.zero_grad();
  return loss.item();
}

// Worker w owns replica w; replica 0 is the primary model itself.
class GradientPool {
 public:
  GradientPool(const RerankModel& primary, std::size_t workers) : primary_(primary) {
    for (std::size_t w = 1; w < std::max<std::size_t>(workers, 1); ++w) {
      replicas_.push_back(std::make_unique<RerankModel>(primary.config(), primary.table(), 0));
      replicas_.back()->params().copy_values_from(primary.params());
    }
  }

  void sync() {
    for (auto& r : replicas_) r->params().copy_values_from(primary_.params());
  }

  double run(std::span<const TrainingInstance* const> batch, std::uint64_t seed, std::vector<double>* grad) {
    const std::size_t n = batch.size();
    if (n == 0) throw DataError("empty batch");
    std::vector<std::vector<double>> grads(n);
    std::vector<double> losses(n, 0.0);
    std::vector<std::exception_ptr> errors(replicas_.size() + 1);
    auto work = [&](std::size_t w) {
      const RerankModel& model = w == 0 ? primary_ : *replicas_[w - 1];
      try {
        for (std::size_t i = w; i < n; i += replicas_.size() + 1)
          losses[i] = instance_grad(model, *batch[i], mix_seed(seed, i), grads[i]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    };
    std::vector<std::thread> threads;
    for (std::size_t w = 1; w <= replicas_.size(); ++w) threads.emplace_back(work, w);
    work(0);
    for (auto& t : threads) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    double loss = 0.0;
    for (double l : losses) loss += l;
    if (grad) {
      grad->assign(grads[0].size(), 0.0);
      for (const auto& g : grads)
        for (std::size_t j = 0; j < g.size(); ++j) (*grad)[j] += g[j];
      for (auto& g : *grad) g /= double(n);
    }
    return loss / double(n);
  }

 private:
  const RerankModel& primary_;
  std::vector<std::unique_ptr<RerankModel>> replicas_;
};

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (!(lr > 0.0)) throw DomainError("lr must be positive");
  if (weight_decay < 0.0) throw DomainError("weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw DomainError("betas must be in [0, 1)");
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  if (!(clip_norm > 0.0)) throw DomainError("clip_norm must be positive");
  if (batch_size == 0) throw DomainError("batch_size must be positive");
  if (epochs == 0) throw DomainError("epochs must be positive");
  if (warmup_epochs < 0.0) throw DomainError("warmup_epochs must be non-negative");
  if (workers == 0) throw DomainError("workers must be positive");
  if (max_seconds < 0.0) throw DomainError("max_seconds must be non-negative");
}

TrainConfig TrainConfig::full() {
  TrainConfig c;
  c.model = ModelConfig::full();
  c.lr = 1e-4;
  c.weight_decay = 8e-5;
  c.batch_size = 256;
  c.epochs = 5;
  return c;
}

TrainConfig TrainConfig::desk() { return TrainConfig{}; }

double scheduled_lr(double base_lr, std::size_t step, std::size_t warmup_steps, std::size_t total_steps) {
  if (step < warmup_steps) return base_lr * double(step) / double(warmup_steps);
  if (total_steps <= warmup_steps) return base_lr;
  const double progress = std::min(1.0, double(step - warmup_steps) / double(total_steps - warmup_steps));
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double clip_global_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& g : grads) g *= f;
  }
  return norm;
}

AdamW::AdamW(std::size_t n, double beta1, double beta2, double eps, double weight_decay)
    : beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay), m_(n, 0.0), v_(n, 0.0) {}

void AdamW::step(std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw ShapeError("AdamW: parameter count changed");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, double(t_));
  const double c2 = 1.0 - std::pow(beta2_, double(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    const double update = (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    params[i] -= lr * (update + weight_decay_ * params[i]);
  }
}

double batch_loss_and_grad(const RerankModel& model, std::span<const TrainingInstance* const> batch,
                           std::uint64_t dropout_seed, std::size_t workers, std::vector<double>* grad) {
  GradientPool pool(model, workers);
  return pool.run(batch, dropout_seed, grad);
}

double instance_loss(const RerankModel& model, const TrainingInstance& inst) {
  ag::NoGradGuard guard;
  const auto out = model.forward(inst.spectrum, inst.candidates, {});
  return joint_loss(out, inst.pmd_targets, inst.rmd_targets, model.config().lambda).item();
}

TrainResult train(RerankModel& model, const std::vector<TrainingInstance>& data, const TrainConfig& config,
                  std::uint64_t seed, const StepCallback& on_step) {
  config.validate();
  if (data.empty()) throw DataError("training set is empty");
  if (!(model.config() == config.model)) throw DomainError("model and training configs disagree");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t per_epoch = (data.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total = per_epoch * config.epochs;
  const auto warmup = static_cast<std::size_t>(std::llround(config.warmup_epochs * double(per_epoch)));

  GradientPool pool(model, config.workers);
  AdamW opt(model.params().total_values(), config.beta1, config.beta2, config.eps, config.weight_decay);
  std::mt19937_64 shuffle_rng(seed);
  std::vector<std::size_t> order(data.size());
  std::vector<double> grad;
  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs && !result.stopped_early; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t b = 0; b < per_epoch; ++b) {
      const std::size_t lo = b * config.batch_size, hi = std::min(data.size(), lo + config.batch_size);
      std::vector<const TrainingInstance*> batch;
      for (std::size_t i = lo; i < hi; ++i) batch.push_back(&data[order[i]]);
      StepLog entry;
      entry.step = result.steps;
      entry.epoch = epoch;
      entry.lr = scheduled_lr(config.lr, result.steps, warmup, total);
      entry.loss = pool.run(batch, mix_seed(seed, result.steps), &grad);
      const bool finite_grad = std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); });
      if (!std::isfinite(entry.loss) || !finite_grad) {
        std::ostringstream msg;
        msg << "training diverged at step " << entry.step << " (epoch " << epoch << "): loss " << entry.loss
            << (finite_grad ? "" : ", non-finite gradient") << ", lr " << entry.lr;
        throw DivergenceError(msg.str());
      }
      entry.grad_norm = clip_global_norm(grad, config.clip_norm);
      auto values = model.params().flat_values();
      opt.step(values, grad, entry.lr);
      model.params().set_flat_values(values);
      pool.sync();
      ++result.steps;
      result.log.push_back(entry);
      if (on_step) on_step(entry);
      if (config.max_seconds > 0.0) {
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (elapsed >= config.max_seconds) {
          result.stopped_early = true;
          break;
        }
      }
    }
  }
  return result;
}

}  // namespace peprank
