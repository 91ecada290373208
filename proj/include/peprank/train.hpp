// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "peprank/dataset.hpp"
#include "peprank/model.hpp"

namespace peprank {

struct TrainConfig {
  ModelConfig model = ModelConfig::desk();
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.5;
  std::size_t batch_size = 16;
  std::size_t epochs = 30;
  double warmup_epochs = 1.0;
  std::size_t workers = 1;
  double max_seconds = 0.0;  // stop after the step that crosses this; 0 = no limit

  void validate() const;

  /// lr 1e-4, weight decay 8e-5, batch 256, 5 epochs, full-scale model.
  static TrainConfig full();
  /// lr 1e-3, batch 16, desk-scale model.
  static TrainConfig desk();
};

/// Linear warmup from 0 over `warmup_steps`, then cosine decay to 0 at
/// `total_steps`.
double scheduled_lr(double base_lr, std::size_t step, std::size_t warmup_steps, std::size_t total_steps);

/// Scales `grads` in place so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_global_norm(std::span<double> grads, double max_norm);

/// Adam with decoupled weight decay over a flat parameter vector.
class AdamW {
 public:
  AdamW(std::size_t n, double beta1, double beta2, double eps, double weight_decay);
  void step(std::span<double> params, std::span<const double> grads, double lr);
  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_, weight_decay_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

struct StepLog {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;       // mean joint loss of the batch before the update
  double grad_norm = 0.0;  // before clipping
};

struct TrainResult {
  std::vector<StepLog> log;
  std::size_t steps = 0;
  bool stopped_early = false;
};

using StepCallback = std::function<void(const StepLog&)>;

/// Mean joint loss and its gradient (flat, store order) over a batch. Each
/// instance gets its own graph; per-instance gradients are summed in batch
/// order so the result does not depend on the worker count.
double batch_loss_and_grad(const RerankModel& model, std::span<const TrainingInstance* const> batch,
                           std::uint64_t dropout_seed, std::size_t workers, std::vector<double>* grad);

/// Trains `model` in place.
TrainResult train(RerankModel& model, const std::vector<TrainingInstance>& data, const TrainConfig& config,
                  std::uint64_t seed, const StepCallback& on_step = {});

/// Evaluation-mode joint loss of one instance.
double instance_loss(const RerankModel& model, const TrainingInstance& inst);

}  // namespace peprank
