// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "textmim/checkpoint.hpp"
#include "textmim/data.hpp"
#include "textmim/model.hpp"
#include "textmim/rng.hpp"
#include "textmim/trainer.hpp"
#include "textmim/vocab.hpp"

namespace textmim::pretrain {

// Character-level mask together with the patches it hides. Patch counts vary
// per sample: one character can span several patches.
struct CharMaskPlan {
  std::vector<int> masked_chars;     // indices into the label
  std::vector<int> masked_patches;   // sorted union of the chars' patch sets
  std::vector<int> visible_patches;  // sorted complement, never empty
};

// max(1, round(ratio * length)) distinct character indices.
std::vector<int> sample_char_mask(int length, double ratio, Rng& rng);

// Derives the patch-level mask from per-character patch sets. If hiding the
// chosen characters would hide every patch, characters are dropped from the
// end of the mask until at least one patch stays visible.
CharMaskPlan make_char_mask_plan(const std::vector<std::vector<int>>& char_patches, int n_patches,
                                 std::vector<int> masked_chars);

struct LanguagePretrainOptions {
  train::TrainOptions train;
  double char_mask_ratio = 0.15;
  // Serial pretraining keeps every encoder parameter bit-identical; the
  // retrain ablation turns this off.
  bool freeze_encoder = true;
  // The L-only ablation starts from a random (scratch) encoder.
  bool allow_unpretrained_encoder = false;
  // Without masking, the stage degenerates to supervised recognition on the
  // synthetic data (the no-mask ablation row).
  bool masking_enabled = true;
  // CTC-variant pretraining: predict the whole sequence with CTC loss.
  bool use_ctc = false;
};

// Masked-encode sample graph: masked-attention encoder pass, zero rows at the
// masked positions, positional embeddings re-added, then decoder + loss.
losses::LossReport<model::real> milm_sample_loss(model::Tape& tape, const model::Model& m,
                                                 const data::Sample& sample, const Vocab& vocab,
                                                 const CharMaskPlan& plan,
                                                 const LanguagePretrainOptions& options);

// Stage 2: optimizes the decoder (queries, blocks, classifier) -- or the CTC
// head in the variant -- under the masked-character objective. Hard-fails if
// any frozen encoder parameter drifts.
Checkpoint pretrain_decoder(model::Model& m, const std::string& parent_stage,
                            const std::string& parent_hash, const data::Dataset& dataset,
                            const std::vector<int>& indices, const Vocab& vocab,
                            const LanguagePretrainOptions& options, std::ostream* log);

}  // namespace textmim::pretrain
