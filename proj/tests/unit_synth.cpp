// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "textmim/io.hpp"
#include "textmim/synth.hpp"

using namespace textmim;
using namespace textmim::synth;
namespace fs = std::filesystem;

namespace {

CorpusSpec single_symbol_spec() {
  CorpusSpec spec;
  spec.alphabet = "a";
  spec.bigram_weights = Eigen::MatrixXd::Ones(1, 1);
  spec.len_min = spec.len_max = 3;
  return spec;
}

fs::path temp_dir(const std::string& leaf) {
  auto dir = fs::temp_directory_path() / "textmim_unit_synth" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("single-symbol alphabet forces the output") {
  CHECK(sample_text(single_symbol_spec(), 0) == "aaa");
  CHECK(sample_text(single_symbol_spec(), 99) == "aaa");
}

TEST_CASE("deterministic bigram chain a->b->a") {
  CorpusSpec spec;
  spec.alphabet = "ab";
  spec.bigram_weights = Eigen::MatrixXd::Zero(2, 2);
  spec.bigram_weights(0, 1) = 1.0;  // a -> b
  spec.bigram_weights(1, 0) = 1.0;  // b -> a
  spec.len_min = spec.len_max = 4;
  for (std::uint64_t seed = 0; seed < 32; ++seed) {
    const std::string text = sample_text(spec, seed);
    if (text[0] == 'a') CHECK(text == "abab");
    if (text[0] == 'b') CHECK(text == "baba");
  }
}

TEST_CASE("sampling is reproducible bit-exactly") {
  CorpusSpec spec;
  spec.alphabet = "abcdefghijklmnop";
  spec.bigram_weights = Eigen::MatrixXd::Ones(16, 16);
  spec.len_min = 3;
  spec.len_max = 8;
  const std::string once = sample_text(spec, 7);
  const std::string twice = sample_text(spec, 7);
  CHECK(once == twice);
  CHECK(once.size() >= 3);
  CHECK(once.size() <= 8);
}

TEST_CASE("corpus validation rejects broken specs") {
  CorpusSpec spec = single_symbol_spec();
  spec.alphabet = "";
  spec.bigram_weights = Eigen::MatrixXd::Ones(0, 0);
  CHECK_THROWS(sample_text(spec, 0));

  spec = single_symbol_spec();
  spec.bigram_weights(0, 0) = 0.0;  // row sums to zero
  CHECK_THROWS(spec.validate());

  spec = single_symbol_spec();
  spec.len_min = 5;
  spec.len_max = 2;
  CHECK_THROWS(spec.validate());
}

TEST_CASE("procedural fonts: shared height, ink at the edges, distinct glyphs") {
  const std::string alphabet = "abcdefghijklmnop";
  for (int variant = 0; variant < 2; ++variant) {
    FontParams params;
    params.pattern_cols = 3 + variant;
    const GlyphFont font =
        make_procedural_font("font" + std::to_string(variant), alphabet, 11 + variant, params);
    std::set<std::vector<std::uint8_t>> seen;
    for (char c : alphabet) {
      const GlyphBitmap& g = font.glyph(c);
      CHECK(g.height == font.glyph_height);
      CHECK(g.width >= 1);
      bool left = false, right = false;
      for (int y = 0; y < g.height; ++y) {
        left = left || g.get(y, 0);
        right = right || g.get(y, g.width - 1);
      }
      CHECK(left);
      CHECK(right);
      seen.insert(g.bits);
    }
    CHECK(seen.size() == alphabet.size());
  }
  // same inputs, same font
  const GlyphFont a = make_procedural_font("f", "abc", 3);
  const GlyphFont b = make_procedural_font("f", "abc", 3);
  for (char c : std::string("abc")) CHECK(a.glyph(c).bits == b.glyph(c).bits);
}

TEST_CASE("noiseless render: fg exactly inside boxes, bg outside") {
  const GlyphFont font = make_procedural_font("f0", "ab", 5);
  RenderStyle style;
  style.bg_level = 0.9;
  style.fg_level = 0.1;
  style.noise_sigma = 0.0;
  style.spacing_px = 2;
  CanvasSpec canvas;
  canvas.channels = 1;
  canvas.height = 16;
  canvas.width = 48;

  const TextSample s = render("a", font, style, canvas, 5);
  REQUIRE(s.char_boxes.size() == 1);
  const auto& box = s.char_boxes[0];
  const GlyphBitmap& g = font.glyph('a');
  int fg_pixels = 0;
  for (int y = 0; y < canvas.height; ++y)
    for (int x = 0; x < canvas.width; ++x) {
      const float v = s.image.at(0, y, x);
      const bool inside = x >= box.x0 && x < box.x1 && y >= box.y0 && y < box.y1;
      if (inside) {
        const bool lit = g.get(y - static_cast<int>(box.y0), x - static_cast<int>(box.x0));
        CHECK(v == doctest::Approx(lit ? style.fg_level : style.bg_level));
        fg_pixels += lit ? 1 : 0;
      } else {
        CHECK(v == doctest::Approx(style.bg_level));
      }
    }
  CHECK(fg_pixels == g.popcount());
}

TEST_CASE("boxes are ordered left to right and abut or precede") {
  const GlyphFont font = make_procedural_font("f0", "ab", 5);
  RenderStyle style;
  style.spacing_px = 0;
  CanvasSpec canvas{1, 16, 64};
  const TextSample s = render("ab", font, style, canvas, 1);
  REQUIRE(s.char_boxes.size() == 2);
  CHECK(s.char_boxes[0].x1 <= s.char_boxes[1].x0);
}

TEST_CASE("foreground pixel count equals total set bits across glyphs") {
  const GlyphFont font = make_procedural_font("f0", "abc", 5);
  RenderStyle style;
  style.bg_level = 1.0;
  style.fg_level = 0.0;
  style.noise_sigma = 0.0;
  CanvasSpec canvas{1, 16, 64};
  const TextSample s = render("cab", font, style, canvas, 2);
  int expected = 0;
  for (char c : std::string("cab")) expected += font.glyph(c).popcount();
  int fg = 0;
  for (int y = 0; y < canvas.height; ++y)
    for (int x = 0; x < canvas.width; ++x)
      if (s.image.at(0, y, x) == 0.0f) ++fg;
  CHECK(fg == expected);
}

TEST_CASE("render determinism and channel replication") {
  const GlyphFont font = make_procedural_font("f0", "ab", 5);
  RenderStyle style;
  style.noise_sigma = 0.25;
  CanvasSpec canvas{3, 16, 48};
  const TextSample s1 = render("ab", font, style, canvas, 77);
  const TextSample s2 = render("ab", font, style, canvas, 77);
  CHECK(s1.image.v == s2.image.v);
  for (int y = 0; y < canvas.height; ++y)
    for (int x = 0; x < canvas.width; ++x) {
      CHECK(s1.image.at(0, y, x) == s1.image.at(1, y, x));
      CHECK(s1.image.at(0, y, x) == s1.image.at(2, y, x));
    }
  // clamped to [0,1] even with heavy noise
  for (float v : s1.image.v) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("render rejects text wider than the canvas") {
  const GlyphFont font = make_procedural_font("f0", "ab", 5);
  CanvasSpec narrow{1, 16, 10};
  CHECK_THROWS_AS(render("abab", font, {}, narrow, 0), std::length_error);
}

TEST_CASE("render rejects equal fg and bg") {
  const GlyphFont font = make_procedural_font("f0", "a", 5);
  RenderStyle style;
  style.bg_level = style.fg_level = 0.5;
  CHECK_THROWS(render("a", font, style, CanvasSpec{1, 16, 32}, 0));
}

TEST_CASE("box/pixel agreement under fuzzing (zero noise)") {
  const std::string alphabet = "abcdefgh";
  const GlyphFont f0 = make_procedural_font("f0", alphabet, 21);
  FontParams wide;
  wide.pattern_cols = 4;
  const GlyphFont f1 = make_procedural_font("f1", alphabet, 22, wide);
  CorpusSpec spec;
  spec.alphabet = alphabet;
  spec.bigram_weights = Eigen::MatrixXd::Ones(8, 8);
  spec.len_min = 1;
  spec.len_max = 6;
  CanvasSpec canvas{1, 24, 64};
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    RenderStyle style;
    style.bg_level = rng.uniform(0.6, 1.0);
    style.fg_level = rng.uniform(0.0, 0.4);
    style.noise_sigma = 0.0;
    style.spacing_px = static_cast<int>(rng.uniform_int(0, 3));
    const GlyphFont& font = rng.uniform() < 0.5 ? f0 : f1;
    const std::string text = sample_text(spec, derive_seed(91, std::uint64_t(i)));
    TextSample s;
    try {
      s = render(text, font, style, canvas, derive_seed(92, std::uint64_t(i)));
    } catch (const std::length_error&) {
      continue;  // text did not fit; fuzz draws another
    }
    CHECK(s.char_boxes.size() == text.size());
    for (std::size_t b = 0; b + 1 < s.char_boxes.size(); ++b)
      CHECK(s.char_boxes[b].x1 <= s.char_boxes[b + 1].x0);
    for (int y = 0; y < canvas.height; ++y)
      for (int x = 0; x < canvas.width; ++x) {
        if (s.image.at(0, y, x) == static_cast<float>(style.bg_level)) continue;
        bool inside_any = false;
        for (const auto& box : s.char_boxes)
          inside_any = inside_any || (x >= box.x0 && x < box.x1 && y >= box.y0 && y < box.y1);
        CHECK(inside_any);
      }
  }
}

TEST_CASE("build_dataset: cardinality, determinism modulo prefix, empty set") {
  CorpusSpec spec;
  spec.alphabet = "abcd";
  spec.bigram_weights = Eigen::MatrixXd::Ones(4, 4);
  spec.len_min = 1;
  spec.len_max = 4;
  const std::vector<GlyphFont> fonts{make_procedural_font("f0", spec.alphabet, 31)};
  BuildOptions options;
  options.size = 10;
  options.canvas = CanvasSpec{1, 16, 48};
  options.style.noise_min = 0.0;
  options.style.noise_max = 0.1;
  options.threads = 2;

  const auto dir_a = temp_dir("a");
  const auto dir_b = temp_dir("b");
  const auto manifest_a = build_dataset(spec, fonts, options, dir_a, 3);
  const auto manifest_b = build_dataset(spec, fonts, options, dir_b, 3);

  const std::string text_a = io::read_text_file(manifest_a);
  CHECK(text_a == io::read_text_file(manifest_b));  // relative paths only
  int lines = 0;
  for (char c : text_a) lines += c == '\n';
  CHECK(lines == 10);
  std::istringstream in(text_a);
  std::string line;
  while (std::getline(in, line)) {
    const auto rec = nlohmann::json::parse(line);
    CHECK(fs::exists(dir_a / rec.at("path").get<std::string>()));
  }

  // single-threaded build produces identical bytes
  options.threads = 1;
  const auto dir_c = temp_dir("c");
  build_dataset(spec, fonts, options, dir_c, 3);
  CHECK(io::read_text_file(dir_c / "manifest.jsonl") == text_a);

  options.size = 0;
  const auto dir_d = temp_dir("d");
  const auto manifest_d = build_dataset(spec, fonts, options, dir_d, 3);
  CHECK(io::read_text_file(manifest_d).empty());
}

TEST_CASE("style range validation") {
  StyleRange bad;
  bad.fg_min = 0.4;
  bad.fg_max = 0.9;  // overlaps bg [0.8, 1.0]
  CHECK_THROWS(bad.validate());
  StyleRange good;
  CHECK_NOTHROW(good.validate());
}
