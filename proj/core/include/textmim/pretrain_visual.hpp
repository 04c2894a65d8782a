// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <vector>

#include "textmim/checkpoint.hpp"
#include "textmim/data.hpp"
#include "textmim/model.hpp"
#include "textmim/rng.hpp"
#include "textmim/trainer.hpp"

namespace textmim::pretrain {

// Random-patch mask: masked and visible partition [0, total).
struct MaskPlan {
  int total = 0;
  std::vector<int> masked;   // sorted, size max(1, floor(ratio * total))
  std::vector<int> visible;  // sorted complement, never empty
};

MaskPlan sample_patch_mask(int n_patches, double ratio, Rng& rng);

struct VisualPretrainOptions {
  train::TrainOptions train;
  double mask_ratio = 0.45;
  double lambda = 0.05;  // weight of the latent alignment term
  // Default computes alignment targets by running the masked patches through
  // the encoder as their own visible set; the alternative runs the full
  // unmasked image.
  bool target_from_full_image = false;
};

// Builds the per-sample masked-image-modeling loss graph: masked-attention
// encoder pass over visible patches, latent regressor with mask queries,
// gradient-blocked alignment targets, pixel decoder against per-patch
// normalized pixels.
losses::LossReport<model::real> mim_sample_loss(model::Tape& tape, const model::Model& m,
                                                const Image& image, const MaskPlan& plan,
                                                const VisualPretrainOptions& options);

// Stage 1: optimizes encoder + MIM head (the model must not own a decoder);
// returns a visual_pretrain-tagged checkpoint.
Checkpoint pretrain_encoder(model::Model& m, const data::Dataset& dataset,
                            const std::vector<int>& indices, const VisualPretrainOptions& options,
                            std::ostream* log);

// Qualitative triptych grid (input / masked / reconstruction), one sample per
// row, written as a PPM image.
void reconstruct_dump(const model::Model& m, const data::Dataset& dataset,
                      const std::vector<int>& indices, double mask_ratio, std::uint64_t seed,
                      const std::filesystem::path& out_path);

}  // namespace textmim::pretrain
