// SPDX-License-Identifier: Apache-2.0
#include "textmim/pretrain_language.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "textmim/losses.hpp"

namespace textmim::pretrain {

std::vector<int> sample_char_mask(int length, double ratio, Rng& rng) {
  if (length < 1) throw std::invalid_argument("sample_char_mask: empty label");
  if (ratio <= 0.0 || ratio >= 1.0)
    throw std::invalid_argument("sample_char_mask: ratio must be in (0, 1)");
  const int n = std::max(1, static_cast<int>(std::lround(ratio * length)));
  auto picks = rng.sample_without_replacement(length, std::min(n, length));
  std::sort(picks.begin(), picks.end());
  return picks;
}

CharMaskPlan make_char_mask_plan(const std::vector<std::vector<int>>& char_patches, int n_patches,
                                 std::vector<int> masked_chars) {
  if (masked_chars.empty()) throw std::invalid_argument("make_char_mask_plan: empty char mask");
  for (int c : masked_chars)
    if (c < 0 || c >= static_cast<int>(char_patches.size()))
      throw std::out_of_range("make_char_mask_plan: char index out of range");

  auto build = [&](const std::vector<int>& chars) {
    std::set<int> patches;
    for (int c : chars) patches.insert(char_patches[c].begin(), char_patches[c].end());
    return patches;
  };
  std::set<int> masked_set = build(masked_chars);
  while (static_cast<int>(masked_set.size()) >= n_patches && masked_chars.size() > 1) {
    masked_chars.pop_back();
    masked_set = build(masked_chars);
  }
  if (static_cast<int>(masked_set.size()) >= n_patches)
    throw std::runtime_error(
        "make_char_mask_plan: a single masked character covers every patch; no visible context");

  CharMaskPlan plan;
  plan.masked_chars = std::move(masked_chars);
  plan.masked_patches.assign(masked_set.begin(), masked_set.end());
  for (int p = 0; p < n_patches; ++p)
    if (!masked_set.count(p)) plan.visible_patches.push_back(p);
  return plan;
}

losses::LossReport<model::real> milm_sample_loss(model::Tape& tape, const model::Model& m,
                                                 const data::Sample& sample, const Vocab& vocab,
                                                 const CharMaskPlan& plan,
                                                 const LanguagePretrainOptions& options) {
  const auto& cfg = m.config();
  const model::Mat patches = model::patchify(sample.image, cfg.patch_width);
  model::Var embedded = m.embed(tape, patches);

  model::Var features;
  if (options.masking_enabled) {
    std::vector<std::uint8_t> visible_mask(cfg.n_patches(), 0);
    for (int i : plan.visible_patches) visible_mask[i] = 1;
    model::Var reps = m.encode(tape, embedded, &visible_mask);
    // Zero representations replace the masked rows, then positions are added
    // to all rows; only afterwards does the decoder see the sequence.
    model::Var visible_rows = tape.rows_gather(reps, plan.visible_patches);
    features = tape.rows_scatter(visible_rows, cfg.n_patches(), plan.visible_patches);
  } else {
    features = m.encode(tape, embedded, nullptr);
  }
  model::Var memory = m.add_positions(tape, features);

  if (options.use_ctc) {
    model::Var frames = m.ctc_forward(tape, memory);
    std::vector<int> target_ids;
    target_ids.reserve(sample.text.size());
    for (char c : sample.text) target_ids.push_back(vocab.char_id(c));
    return losses::ctc_loss(tape, frames, target_ids, vocab.blank_id);
  }

  model::Var logits = m.decode(tape, memory);
  const LabelSeq label = encode_label(sample.text, vocab, cfg.num_queries);
  if (options.masking_enabled)
    return losses::masked_char_loss(tape, logits, label, plan.masked_chars);
  return losses::recognition_loss(tape, logits, label);
}

Checkpoint pretrain_decoder(model::Model& m, const std::string& parent_stage,
                            const std::string& parent_hash, const data::Dataset& dataset,
                            const std::vector<int>& indices, const Vocab& vocab,
                            const LanguagePretrainOptions& options, std::ostream* log) {
  if (!m.parts().encoder) throw std::invalid_argument("pretrain_decoder: model needs an encoder");
  if (options.use_ctc && !m.parts().ctc_head)
    throw std::invalid_argument("pretrain_decoder: CTC variant needs the CTC head");
  if (!options.use_ctc && !m.parts().decoder)
    throw std::invalid_argument("pretrain_decoder: model needs the query decoder");
  if (parent_stage == kStageScratch && !options.allow_unpretrained_encoder)
    throw std::invalid_argument(
        "pretrain_decoder: encoder is not visually pretrained; pass the explicit override for the "
        "language-only ablation");

  const auto encoder_ids = m.param_ids_with_prefix("enc.");
  const std::string encoder_hash_before = m.params().hash_of(encoder_ids);

  std::vector<int> trainable;
  if (options.use_ctc) {
    trainable = m.param_ids_with_prefix("ctc.");
  } else {
    trainable = m.param_ids_with_prefix("dec.");
    for (int id : m.param_ids_with_prefix("head.")) trainable.push_back(id);
  }
  if (!options.freeze_encoder)
    for (int id : encoder_ids) trainable.push_back(id);
  std::sort(trainable.begin(), trainable.end());

  optim::AdamWConfig adam;
  adam.lr = options.train.lr;
  adam.weight_decay = options.train.weight_decay;
  optim::AdamW opt(m.params(), trainable, adam);

  train::TrainOptions train_options = options.train;
  train_options.frozen_params = train::frozen_mask(m.params().size(), trainable);

  const auto loss_fn = [&](model::Tape& tape, int index,
                           Rng& rng) -> losses::LossReport<model::real> {
    const auto& sample = dataset.samples[index];
    CharMaskPlan plan;
    if (options.masking_enabled) {
      if (sample.char_patches.empty())
        throw std::runtime_error("pretrain_decoder: dataset was loaded without char patch sets");
      const auto masked_chars =
          sample_char_mask(static_cast<int>(sample.text.size()), options.char_mask_ratio, rng);
      plan = make_char_mask_plan(sample.char_patches, m.config().n_patches(), masked_chars);
    }
    return milm_sample_loss(tape, m, sample, vocab, plan, options);
  };
  train::run_training(opt, indices, train_options, loss_fn, log);

  if (options.freeze_encoder) {
    const std::string encoder_hash_after = m.params().hash_of(encoder_ids);
    if (encoder_hash_after != encoder_hash_before)
      throw std::logic_error("pretrain_decoder: frozen encoder drifted (" + encoder_hash_before +
                             " -> " + encoder_hash_after + ")");
  }

  Rng rng_out(derive_seed(options.train.seed, "stage_rng"));
  return Checkpoint::from_model(m, kStageLanguagePretrain, parent_hash,
                                rng_out.serialize_state());
}

}  // namespace textmim::pretrain
