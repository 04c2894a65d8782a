// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "textmim/data.hpp"
#include "textmim/synth.hpp"

using namespace textmim;
using namespace textmim::data;
namespace fs = std::filesystem;

namespace {

Image flat_image(int c, int h, int w, float level) { return Image(c, h, w, level); }

}  // namespace

TEST_CASE("line mode at identity scale: left half original, right half pad") {
  Image img(1, 32, 64);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 64; ++x) img.at(0, y, x) = static_cast<float>((y * 64 + x) % 7) / 7.f;
  const std::vector<CharBox> boxes{{4, 20, 8, 24}};
  const auto out = preprocess(img, boxes, PreprocessMode::kLine, {32, 128}, 0.25f, 4);
  CHECK(out.image.h == 32);
  CHECK(out.image.w == 128);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 64; ++x) CHECK(out.image.at(0, y, x) == img.at(0, y, x));
    for (int x = 64; x < 128; ++x) CHECK(out.image.at(0, y, x) == 0.25f);
  }
  CHECK(out.boxes[0].x0 == doctest::Approx(4));
  CHECK(out.boxes[0].x1 == doctest::Approx(20));
}

TEST_CASE("line mode downscales by the height ratio, boxes follow") {
  const Image img = flat_image(1, 64, 256, 0.5f);
  const std::vector<CharBox> boxes{{10, 20, 0, 64}};
  const auto out = preprocess(img, boxes, PreprocessMode::kLine, {32, 128}, 0.f, 4);
  CHECK(out.image.w == 128);
  CHECK(out.boxes[0].x0 == doctest::Approx(5.0));
  CHECK(out.boxes[0].x1 == doctest::Approx(10.0));
  CHECK(out.boxes[0].y1 == doctest::Approx(32.0));
}

TEST_CASE("line mode rejects an oversize image") {
  const Image img = flat_image(1, 16, 200, 0.f);  // scale 2 -> width 400 > 128
  CHECK_THROWS_AS(preprocess(img, {}, PreprocessMode::kLine, {32, 128}, 0.f, 4),
                  std::length_error);
}

TEST_CASE("word mode: anisotropic scale 1.28, right edge within bounds") {
  const Image img = flat_image(1, 32, 100, 0.f);
  const std::vector<CharBox> boxes{{90, 100, 4, 28}};
  const auto out = preprocess(img, boxes, PreprocessMode::kWord, {32, 128}, 0.f, 4);
  CHECK(out.image.w == 128);
  CHECK(out.boxes[0].x0 == doctest::Approx(90 * 1.28));
  CHECK(out.boxes[0].x1 == doctest::Approx(128.0));
  CHECK(out.boxes[0].x1 <= 128.0);
}

TEST_CASE("preprocess validates patch divisibility") {
  const Image img = flat_image(1, 32, 100, 0.f);
  CHECK_THROWS(preprocess(img, {}, PreprocessMode::kWord, {32, 130}, 0.f, 4));
  CHECK_NOTHROW(preprocess(img, {}, PreprocessMode::kWord, {32, 128}, 0.f, 0));
}

TEST_CASE("preprocess preserves left-to-right box order") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 40 + static_cast<int>(rng.uniform_index(200));
    const int h = 16 + static_cast<int>(rng.uniform_index(48));
    const Image img = flat_image(1, h, w, 0.f);
    std::vector<CharBox> boxes;
    double x = 1;
    while (x + 6 < w - 1) {
      boxes.push_back({x, x + 5, 2.0, h - 2.0});
      x += 5 + rng.uniform_index(4);
    }
    const auto mode = trial % 2 == 0 ? PreprocessMode::kWord : PreprocessMode::kLine;
    PreprocessResult out;
    try {
      out = preprocess(img, boxes, mode, {32, 128}, 0.f, 4);
    } catch (const std::length_error&) {
      continue;
    }
    for (std::size_t i = 0; i + 1 < out.boxes.size(); ++i)
      CHECK(out.boxes[i].x1 <= out.boxes[i + 1].x0 + 1e-9);
  }
}

TEST_CASE("box [8,16) with patch width 4 covers patches {2,3}") {
  const auto sets = char_boxes_to_patch_indices({{8, 16, 0, 8}}, 4, 32);
  CHECK(sets[0] == std::vector<int>{2, 3});
}

TEST_CASE("box [0,4) aligns exactly with patch 0") {
  const auto sets = char_boxes_to_patch_indices({{0, 4, 0, 8}}, 4, 32);
  CHECK(sets[0] == std::vector<int>{0});
}

TEST_CASE("box [3,5) spans two patches") {
  const auto sets = char_boxes_to_patch_indices({{3, 5, 0, 8}}, 4, 32);
  CHECK(sets[0] == std::vector<int>{0, 1});
}

TEST_CASE("sub-pixel boxes still claim at least one patch") {
  const auto sets = char_boxes_to_patch_indices({{3.8, 4.3, 0, 8}}, 4, 32);
  CHECK(!sets[0].empty());
  for (int p : sets[0]) {
    CHECK(p >= 0);
    CHECK(p < 8);
  }
}

TEST_CASE("patch sets always stay within [0, M)") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int pw = 2 + static_cast<int>(rng.uniform_index(4));
    const int m = 4 + static_cast<int>(rng.uniform_index(12));
    const int w = pw * m;
    std::vector<CharBox> boxes;
    double x = rng.uniform(0, 2.0);
    while (x + 1 < w) {
      const double bw = 1 + rng.uniform(0, 6.0);
      boxes.push_back({x, std::min<double>(x + bw, w), 0, 8});
      x += bw + rng.uniform(0, 2.0);
    }
    const auto sets = char_boxes_to_patch_indices(boxes, pw, w);
    REQUIRE(sets.size() == boxes.size());
    for (const auto& set : sets) {
      CHECK(!set.empty());
      for (int p : set) {
        CHECK(p >= 0);
        CHECK(p < m);
      }
    }
  }
}

TEST_CASE("augment is identity when disabled and deterministic when enabled") {
  Image img(1, 16, 32);
  Rng rng(3);
  for (auto& v : img.v) v = static_cast<float>(rng.uniform());
  AugmentOptions off;
  CHECK(augment(img, 0.5f, off, 1).v == img.v);

  AugmentOptions on;
  on.enabled = true;
  const Image a = augment(img, 0.5f, on, 42);
  const Image b = augment(img, 0.5f, on, 42);
  CHECK(a.v == b.v);
  CHECK(a.v != img.v);
}

TEST_CASE("dataset load: shapes, splits, batching determinism") {
  synth::CorpusSpec spec;
  spec.alphabet = "abcd";
  spec.bigram_weights = Eigen::MatrixXd::Ones(4, 4);
  spec.len_min = 1;
  spec.len_max = 3;
  const std::vector<synth::GlyphFont> fonts{synth::make_procedural_font("f0", spec.alphabet, 31)};
  synth::BuildOptions options;
  options.size = 20;
  options.canvas = synth::CanvasSpec{1, 16, 48};
  options.train_frac = 0.8;
  options.val_frac = 0.1;

  const auto dir = fs::temp_directory_path() / "textmim_unit_data" / "ds";
  fs::remove_all(dir);
  fs::create_directories(dir);
  synth::build_dataset(spec, fonts, options, dir, 17);

  LoadOptions load;
  load.mode = PreprocessMode::kWord;
  load.target = {16, 48};
  load.patch_width = 4;
  const Dataset ds = Dataset::load(dir, load);
  CHECK(ds.samples.size() == 20);
  CHECK(ds.train_indices().size() == 16);
  CHECK(ds.val_indices().size() == 2);
  CHECK(ds.test_indices().size() == 2);
  CHECK(ds.alphabet == "abcd");
  for (const auto& s : ds.samples) {
    CHECK(s.image.h == 16);
    CHECK(s.image.w == 48);
    CHECK(s.char_patches.size() == s.text.size());
  }

  const auto batches_a = make_batches(ds.train_indices(), 5, 99, 0);
  const auto batches_b = make_batches(ds.train_indices(), 5, 99, 0);
  const auto batches_c = make_batches(ds.train_indices(), 5, 99, 1);
  REQUIRE(batches_a.size() == 4);
  CHECK(batches_a[0].indices == batches_b[0].indices);
  CHECK(batches_a[0].indices != batches_c[0].indices);  // epoch changes the shuffle
  std::set<int> seen;
  for (const auto& b : batches_a) seen.insert(b.indices.begin(), b.indices.end());
  CHECK(seen.size() == 16);
}
