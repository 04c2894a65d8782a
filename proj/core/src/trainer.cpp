// SPDX-License-Identifier: Apache-2.0
#include "textmim/trainer.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "textmim/data.hpp"
#include "textmim/rng.hpp"

namespace textmim::train {

using nlohmann::json;

std::vector<std::uint8_t> frozen_mask(int n_params, const std::vector<int>& trainable_ids) {
  std::vector<std::uint8_t> mask(n_params, 1);
  for (int id : trainable_ids) mask.at(id) = 0;
  return mask;
}

namespace {

struct ThreadAccumulator {
  ad::GradSink<model::real> sink;
  double loss_sum = 0.0;
  std::map<std::string, double> component_sums;
  std::string error;
};

}  // namespace

void run_training(optim::AdamW& optimizer, const std::vector<int>& indices,
                  const TrainOptions& options, const SampleLossFn& loss_fn, std::ostream* log,
                  const std::function<void(int epoch)>& on_epoch_end) {
  if (indices.empty()) throw std::invalid_argument("run_training: empty index set");
  if (options.epochs < 1) throw std::invalid_argument("run_training: epochs must be >= 1");

  const long long steps_per_epoch =
      (static_cast<long long>(indices.size()) + options.batch_size - 1) / options.batch_size;
  optim::CosineSchedule schedule;
  schedule.base_lr = options.lr;
  schedule.total_steps = steps_per_epoch * options.epochs;
  schedule.warmup_steps = std::llround(options.warmup_epochs * static_cast<double>(steps_per_epoch));

  const int n_threads = std::max(1, options.threads);
  std::vector<ThreadAccumulator> accumulators(n_threads);
  const std::uint64_t sample_seed_base = derive_seed(options.seed, "sample");

  long long global_step = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const auto batches = data::make_batches(indices, options.batch_size, options.seed, epoch);
    for (std::size_t batch_i = 0; batch_i < batches.size(); ++batch_i) {
      const auto& batch = batches[batch_i].indices;
      const int b = static_cast<int>(batch.size());
      const std::uint64_t epoch_seed = derive_seed(sample_seed_base, static_cast<std::uint64_t>(epoch));

      auto work = [&](int tid, int begin, int end) {
        ThreadAccumulator& acc = accumulators[tid];
        try {
          model::Tape tape(&acc.sink);
          tape.set_frozen(options.frozen_params);
          for (int i = begin; i < end; ++i) {
            tape.reset();
            const int index = batch[i];
            Rng sample_rng(derive_seed(epoch_seed, static_cast<std::uint64_t>(index)));
            auto report = loss_fn(tape, index, sample_rng);
            const double loss_value = report.value(tape);
            acc.loss_sum += loss_value;
            for (const auto& [k, v] : report.components) acc.component_sums[k] += v;
            // Mean over the batch: scale each sample's gradient by 1/B.
            tape.backward(tape.scale(report.total, model::real(1.0 / b)));
          }
        } catch (const std::exception& e) {
          acc.error = e.what();
        }
      };

      for (auto& acc : accumulators) {
        acc.sink.clear();
        acc.loss_sum = 0;
        acc.component_sums.clear();
        acc.error.clear();
      }
      if (n_threads == 1 || b < 2) {
        work(0, 0, b);
      } else {
        std::vector<std::thread> pool;
        const int chunk = (b + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
          const int begin = t * chunk;
          const int end = std::min(b, begin + chunk);
          if (begin < end) pool.emplace_back(work, t, begin, end);
        }
        for (auto& th : pool) th.join();
      }
      for (const auto& acc : accumulators)
        if (!acc.error.empty()) throw std::runtime_error("training sample failed: " + acc.error);

      // Merge per-thread gradients in thread order, then step.
      std::vector<model::Mat> total_grads;
      double loss_total = 0.0;
      std::map<std::string, double> components;
      for (const auto& acc : accumulators) {
        acc.sink.add_to(total_grads);
        loss_total += acc.loss_sum;
        for (const auto& [k, v] : acc.component_sums) components[k] += v;
      }
      loss_total /= b;
      for (auto& [k, v] : components) v /= b;

      if (!std::isfinite(loss_total))
        throw std::runtime_error("non-finite loss " + std::to_string(loss_total) + " at epoch " +
                                 std::to_string(epoch) + " step " + std::to_string(global_step));

      const double lr_now = schedule.lr_at(global_step);
      optimizer.step(total_grads, lr_now);
      ++global_step;

      if (log && (global_step % options.log_every == 0 || batch_i + 1 == batches.size())) {
        json rec;
        rec["epoch"] = epoch;
        rec["step"] = global_step;
        rec["lr"] = lr_now;
        rec["loss_total"] = loss_total;
        for (const auto& [k, v] : components) rec[k] = v;
        (*log) << rec.dump() << '\n';
      }
    }
    if (on_epoch_end) on_epoch_end(epoch);
  }
  if (log) log->flush();
}

}  // namespace textmim::train
