// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "textmim/losses.hpp"
#include "textmim/model.hpp"
#include "textmim/optim.hpp"

namespace textmim::train {

struct TrainOptions {
  int epochs = 1;
  int batch_size = 32;
  double lr = 1e-3;
  double weight_decay = 0.05;
  double warmup_epochs = 0.5;
  int threads = 1;
  std::uint64_t seed = 0;
  int log_every = 20;  // steps between metric records; epoch ends always log
  // 1 marks a frozen parameter id: it enters each tape as a constant.
  std::vector<std::uint8_t> frozen_params;
};

// Complement of the trainable set, for TrainOptions::frozen_params.
std::vector<std::uint8_t> frozen_mask(int n_params, const std::vector<int>& trainable_ids);

// Builds one sample's loss graph on the given tape. `sample_rng` is derived
// from (seed, epoch, dataset index), so results never depend on batch
// composition or worker count.
using SampleLossFn =
    std::function<losses::LossReport<model::real>(model::Tape&, int index, Rng& sample_rng)>;

// Mini-batch AdamW loop: deterministic shuffling, fixed per-thread sample
// chunks merged in thread order, cosine schedule with warm-up. Metric records
// are line-delimited JSON without timestamps, so identical runs produce
// byte-identical logs. Throws on a non-finite loss.
void run_training(optim::AdamW& optimizer, const std::vector<int>& indices,
                  const TrainOptions& options, const SampleLossFn& loss_fn, std::ostream* log,
                  const std::function<void(int epoch)>& on_epoch_end = {});

}  // namespace textmim::train
