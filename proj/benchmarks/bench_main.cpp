// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "textmim/harness.hpp"
#include "textmim/losses.hpp"
#include "textmim/model.hpp"
#include "textmim/pretrain_visual.hpp"
#include "textmim/synth.hpp"

using namespace textmim;

namespace {

model::ModelConfig bench_config() {
  model::ModelConfig cfg;
  cfg.channels = 1;
  cfg.height = 32;
  cfg.width = 64;
  cfg.patch_width = 4;
  cfg.enc_layers = 2;
  cfg.enc_dim = 64;
  cfg.enc_heads = 4;
  cfg.dec_layers = 2;
  cfg.dec_dim = 64;
  cfg.dec_heads = 4;
  cfg.num_queries = 10;
  cfg.vocab_size = 17;
  cfg.drop_path_rate = 0.0;
  return cfg;
}

Image bench_image(const model::ModelConfig& cfg) {
  Image img(cfg.channels, cfg.height, cfg.width);
  Rng rng(7);
  for (auto& v : img.v) v = static_cast<float>(rng.uniform());
  return img;
}

void BM_RecognizeForward(benchmark::State& state) {
  const auto cfg = bench_config();
  model::Parts parts;
  parts.encoder = parts.decoder = true;
  model::Model m(cfg, parts, 1);
  const Image img = bench_image(cfg);
  for (auto _ : state) {
    model::Tape tape;
    benchmark::DoNotOptimize(tape.value(m.forward_recognize(tape, img)));
  }
}
BENCHMARK(BM_RecognizeForward);

void BM_RecognizeForwardBackward(benchmark::State& state) {
  const auto cfg = bench_config();
  model::Parts parts;
  parts.encoder = parts.decoder = true;
  model::Model m(cfg, parts, 1);
  const Image img = bench_image(cfg);
  LabelSeq label;
  label.ids = {0, 1, 2, 3, 16, 16, 16, 16, 16, 16};
  label.true_length = 4;
  ad::GradSink<model::real> sink;
  for (auto _ : state) {
    sink.clear();
    model::Tape tape(&sink);
    auto report = losses::recognition_loss(tape, m.forward_recognize(tape, img), label);
    tape.backward(report.total);
    benchmark::DoNotOptimize(sink.grads.size());
  }
}
BENCHMARK(BM_RecognizeForwardBackward);

void BM_MimSampleLoss(benchmark::State& state) {
  const auto cfg = bench_config();
  model::Parts parts;
  parts.encoder = parts.mim_head = true;
  model::Model m(cfg, parts, 1);
  const Image img = bench_image(cfg);
  pretrain::VisualPretrainOptions opt;
  ad::GradSink<model::real> sink;
  Rng rng(3);
  for (auto _ : state) {
    sink.clear();
    model::Tape tape(&sink);
    const auto plan = pretrain::sample_patch_mask(cfg.n_patches(), 0.45, rng);
    auto report = pretrain::mim_sample_loss(tape, m, img, plan, opt);
    tape.backward(report.total);
    benchmark::DoNotOptimize(sink.grads.size());
  }
}
BENCHMARK(BM_MimSampleLoss);

void BM_CtcLoss(benchmark::State& state) {
  const int frames = 16, classes = 18;
  Rng rng(11);
  Eigen::MatrixXd logits(frames, classes);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits(i) = rng.normal(0, 1);
  const std::vector<int> target{1, 5, 2, 9, 1};
  for (auto _ : state) {
    ad::TapeD tape;
    auto loss = tape.ctc_nll(tape.input(logits), target, classes - 1);
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.value(loss)(0, 0));
  }
}
BENCHMARK(BM_CtcLoss);

void BM_RenderSample(benchmark::State& state) {
  const auto font = synth::make_procedural_font("bench", "abcdefgh", 5);
  synth::RenderStyle style;
  style.noise_sigma = 0.05;
  synth::CanvasSpec canvas;
  canvas.channels = 1;
  canvas.height = 32;
  canvas.width = 64;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(synth::render("abcdefg", font, style, canvas, seed++));
  }
}
BENCHMARK(BM_RenderSample);

}  // namespace

BENCHMARK_MAIN();
