// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "textmim/image.hpp"
#include "textmim/rng.hpp"

namespace textmim::synth {

// Binary glyph bitmap, row-major height x width.
struct GlyphBitmap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  bool get(int y, int x) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  int popcount() const;
};

// A procedural bitmap font: every character of the alphabet maps to a fixed
// bitmap; all bitmaps share the glyph height, widths vary per character.
struct GlyphFont {
  std::string font_id;
  int glyph_height = 0;
  int baseline = 0;  // rows from glyph-band top to the baseline
  std::map<char, GlyphBitmap> glyphs;

  const GlyphBitmap& glyph(char c) const;
};

struct FontParams {
  int pattern_rows = 5;
  int pattern_cols = 3;
  int scale_x = 2;
  int scale_y = 2;
  // Minimum fraction of pattern bits two glyphs must differ in.
  double min_distinct_frac = 0.2;
};

// Deterministic per (font_id, alphabet, seed, params). Glyph patterns are
// re-drawn with a bumped salt until every pair is distinct enough and the
// first/last column of every glyph carries ink (so boxes stay tight).
GlyphFont make_procedural_font(const std::string& font_id, const std::string& alphabet,
                               std::uint64_t seed, const FontParams& params = {});

struct CorpusSpec {
  std::string alphabet;
  Eigen::MatrixXd bigram_weights;  // |alphabet| x |alphabet|, rows sum > 0
  int len_min = 1;
  int len_max = 1;
  int size = 0;  // default sample count for dataset-level plumbing

  void validate() const;
};

// First character uniform, then a bigram chain; deterministic given seed.
std::string sample_text(const CorpusSpec& spec, std::uint64_t seed);

struct RenderStyle {
  double bg_level = 1.0;
  double fg_level = 0.0;
  double noise_sigma = 0.0;
  int spacing_px = 1;
};

struct CanvasSpec {
  int channels = 3;  // 1 or 3
  int height = 32;
  int width = 128;
};

struct TextSample {
  Image image;
  std::string text;
  std::vector<CharBox> char_boxes;
  std::string font_id;
  std::uint64_t seed = 0;
  double bg_level = 0.0;
};

// Blit glyphs left to right on a flat background, add Gaussian pixel noise,
// clamp to [0,1]. Throws std::length_error when the text does not fit.
TextSample render(const std::string& text, const GlyphFont& font, const RenderStyle& style,
                  const CanvasSpec& canvas, std::uint64_t seed);

// Uniform style draw for dataset building; fg/bg intervals must be disjoint.
struct StyleRange {
  double bg_min = 0.8, bg_max = 1.0;
  double fg_min = 0.0, fg_max = 0.2;
  double noise_min = 0.0, noise_max = 0.0;
  int spacing_min = 1, spacing_max = 2;

  void validate() const;
  RenderStyle sample(Rng& rng) const;
};

struct BuildOptions {
  int size = 0;
  double train_frac = 1.0;
  double val_frac = 0.0;  // remainder is the test fraction
  int threads = 1;
  CanvasSpec canvas;
  StyleRange style;
};

// Renders `size` samples into out_dir/images/*.npy plus a line-delimited
// manifest and a meta file; returns the manifest path. Sample i depends only
// on (seed, i), so worker count never changes the output.
std::filesystem::path build_dataset(const CorpusSpec& spec, const std::vector<GlyphFont>& fonts,
                                    const BuildOptions& options,
                                    const std::filesystem::path& out_dir, std::uint64_t seed);

}  // namespace textmim::synth
