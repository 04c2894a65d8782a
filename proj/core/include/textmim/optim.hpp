// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "textmim/model.hpp"

namespace textmim::optim {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;
};

// AdamW with decoupled weight decay over a fixed trainable subset of a
// ParamStore. Decay applies to weight matrices and embeddings; biases and
// LayerNorm gains/offsets are exempt.
class AdamW {
 public:
  AdamW(model::ParamStore& store, std::vector<int> trainable_ids, const AdamWConfig& config);

  // `grads` is indexed by parameter id (as filled by GradSink); entries for
  // non-trainable parameters are ignored.
  void step(const std::vector<model::Mat>& grads, double lr_now);

  const std::vector<int>& trainable_ids() const { return ids_; }

 private:
  model::ParamStore& store_;
  std::vector<int> ids_;
  std::vector<bool> decay_;
  AdamWConfig cfg_;
  std::vector<model::Mat> m_;
  std::vector<model::Mat> v_;
  long long t_ = 0;
};

// base_lr under the linear batch-size scaling rule: base * batch / 256.
double scaled_lr(double base_lr, int batch_size);

// Linear warm-up then cosine decay to zero.
struct CosineSchedule {
  double base_lr = 1e-3;
  long long total_steps = 1;
  long long warmup_steps = 0;

  double lr_at(long long step) const {
    if (warmup_steps > 0 && step < warmup_steps)
      return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
    const double progress = total_steps <= warmup_steps
                                ? 1.0
                                : static_cast<double>(step - warmup_steps) /
                                      static_cast<double>(total_steps - warmup_steps);
    return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * std::min(1.0, progress)));
  }
};

}  // namespace textmim::optim
