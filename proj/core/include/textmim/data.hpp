// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "textmim/image.hpp"
#include "textmim/vocab.hpp"

namespace textmim::data {

enum class PreprocessMode { kLine, kWord };

struct TargetShape {
  int height = 32;
  int width = 128;
};

// Resize (and for line mode right-pad) an image to the target shape, carrying
// the character boxes through the same transform. `pad_level` fills the line-
// mode padding; use the sample background level. `patch_width` > 0 validates
// divisibility of the target width.
struct PreprocessResult {
  Image image;
  std::vector<CharBox> boxes;
};
PreprocessResult preprocess(const Image& image, const std::vector<CharBox>& boxes,
                            PreprocessMode mode, const TargetShape& target, float pad_level,
                            int patch_width = 0);

Image resize_bilinear(const Image& src, int out_h, int out_w);

// Patch indices whose column span overlaps each box. The threshold is one
// pixel of overlap; boxes narrower than two pixels (possible after a
// downscale) use half their own width so every box claims at least one patch.
std::vector<std::vector<int>> char_boxes_to_patch_indices(const std::vector<CharBox>& boxes,
                                                          int patch_width, int image_width);

// Small-angle rotation plus brightness shift; finetuning-only augmentation
// (boxes are not carried through).
struct AugmentOptions {
  bool enabled = false;
  double max_rotate_deg = 3.0;
  double max_brightness = 0.1;
};
Image augment(const Image& image, float fill_level, const AugmentOptions& options,
              std::uint64_t seed);

struct Sample {
  Image image;
  std::string text;
  std::vector<CharBox> boxes;
  std::vector<std::vector<int>> char_patches;  // filled when patch_width > 0
  float bg_level = 0.f;
  std::string font_id;
  std::uint64_t seed = 0;
};

struct LoadOptions {
  PreprocessMode mode = PreprocessMode::kWord;
  TargetShape target;
  int patch_width = 0;  // when > 0, also precompute char_patches
};

// A fully materialized dataset: every image preprocessed to a common shape.
struct Dataset {
  std::vector<Sample> samples;
  std::string alphabet;
  int channels = 0;
  TargetShape shape;
  // Contiguous index ranges derived from the recorded split fractions.
  int train_end = 0;
  int val_end = 0;

  static Dataset load(const std::filesystem::path& dir, const LoadOptions& options);

  std::vector<int> train_indices() const;
  std::vector<int> val_indices() const;
  std::vector<int> test_indices() const;
  std::vector<int> all_indices() const;
};

struct Batch {
  std::vector<int> indices;
};

// Deterministic epoch shuffling: batches depend only on (seed, epoch).
std::vector<Batch> make_batches(const std::vector<int>& indices, int batch_size,
                                std::uint64_t seed, int epoch);

}  // namespace textmim::data
