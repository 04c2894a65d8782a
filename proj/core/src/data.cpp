// SPDX-License-Identifier: Apache-2.0
#include "textmim/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "textmim/io.hpp"
#include "textmim/rng.hpp"

namespace textmim::data {

using nlohmann::json;

Image resize_bilinear(const Image& src, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize: bad target shape");
  Image dst(src.c, out_h, out_w);
  const double sy = static_cast<double>(src.h) / out_h;
  const double sx = static_cast<double>(src.w) / out_w;
  for (int c = 0; c < src.c; ++c) {
    for (int y = 0; y < out_h; ++y) {
      // Align sample points with pixel centers.
      const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.h - 1));
      const int y0 = static_cast<int>(fy);
      const int y1 = std::min(y0 + 1, src.h - 1);
      const double wy = fy - y0;
      for (int x = 0; x < out_w; ++x) {
        const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.w - 1));
        const int x0 = static_cast<int>(fx);
        const int x1 = std::min(x0 + 1, src.w - 1);
        const double wx = fx - x0;
        const double top = src.at(c, y0, x0) * (1 - wx) + src.at(c, y0, x1) * wx;
        const double bot = src.at(c, y1, x0) * (1 - wx) + src.at(c, y1, x1) * wx;
        dst.at(c, y, x) = static_cast<float>(top * (1 - wy) + bot * wy);
      }
    }
  }
  return dst;
}

PreprocessResult preprocess(const Image& image, const std::vector<CharBox>& boxes,
                            PreprocessMode mode, const TargetShape& target, float pad_level,
                            int patch_width) {
  if (patch_width > 0 && target.width % patch_width != 0)
    throw std::invalid_argument("preprocess: target width " + std::to_string(target.width) +
                                " is not divisible by patch width " + std::to_string(patch_width));
  PreprocessResult out;
  if (mode == PreprocessMode::kWord) {
    out.image = resize_bilinear(image, target.height, target.width);
    const double sx = static_cast<double>(target.width) / image.w;
    const double sy = static_cast<double>(target.height) / image.h;
    for (const auto& b : boxes)
      out.boxes.push_back(CharBox{b.x0 * sx, b.x1 * sx, b.y0 * sy, b.y1 * sy});
    return out;
  }

  // Line mode: aspect-preserving resize to the target height, then right-pad.
  const double scale = static_cast<double>(target.height) / image.h;
  const int resized_w = std::max(1, static_cast<int>(std::lround(image.w * scale)));
  if (resized_w > target.width)
    throw std::length_error("preprocess: line image resizes to width " +
                            std::to_string(resized_w) + " > target " +
                            std::to_string(target.width));
  Image resized = resize_bilinear(image, target.height, resized_w);
  out.image = Image(image.c, target.height, target.width, pad_level);
  for (int c = 0; c < image.c; ++c)
    for (int y = 0; y < target.height; ++y)
      for (int x = 0; x < resized_w; ++x) out.image.at(c, y, x) = resized.at(c, y, x);
  for (const auto& b : boxes)
    out.boxes.push_back(CharBox{b.x0 * scale, b.x1 * scale, b.y0 * scale, b.y1 * scale});
  return out;
}

std::vector<std::vector<int>> char_boxes_to_patch_indices(const std::vector<CharBox>& boxes,
                                                          int patch_width, int image_width) {
  if (patch_width < 1 || image_width % patch_width != 0)
    throw std::invalid_argument("char_boxes_to_patch_indices: patch width must divide image width");
  const int n_patches = image_width / patch_width;
  std::vector<std::vector<int>> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) {
    const double threshold = std::min(1.0, std::max(b.width() * 0.5, 1e-9));
    std::vector<int> indices;
    const int first = std::clamp(static_cast<int>(std::floor(b.x0 / patch_width)), 0, n_patches - 1);
    const int last = std::clamp(static_cast<int>(std::ceil(b.x1 / patch_width)), 0, n_patches);
    for (int p = first; p < last; ++p) {
      const double lo = std::max(b.x0, static_cast<double>(p) * patch_width);
      const double hi = std::min(b.x1, static_cast<double>(p + 1) * patch_width);
      if (hi - lo >= threshold) indices.push_back(p);
    }
    out.push_back(std::move(indices));
  }
  return out;
}

Image augment(const Image& image, float fill_level, const AugmentOptions& options,
              std::uint64_t seed) {
  if (!options.enabled) return image;
  Rng rng(seed);
  const double angle = rng.uniform(-options.max_rotate_deg, options.max_rotate_deg) *
                       std::numbers::pi / 180.0;
  const double brightness = rng.uniform(-options.max_brightness, options.max_brightness);
  const double cx = (image.w - 1) * 0.5;
  const double cy = (image.h - 1) * 0.5;
  const double ca = std::cos(angle), sa = std::sin(angle);
  Image out(image.c, image.h, image.w);
  for (int c = 0; c < image.c; ++c)
    for (int y = 0; y < image.h; ++y)
      for (int x = 0; x < image.w; ++x) {
        // inverse-rotate the destination pixel into the source frame
        const double dx = x - cx, dy = y - cy;
        const double sxf = ca * dx + sa * dy + cx;
        const double syf = -sa * dx + ca * dy + cy;
        double value = fill_level;
        if (sxf >= 0 && sxf <= image.w - 1 && syf >= 0 && syf <= image.h - 1) {
          const int x0 = static_cast<int>(sxf), y0 = static_cast<int>(syf);
          const int x1 = std::min(x0 + 1, image.w - 1), y1 = std::min(y0 + 1, image.h - 1);
          const double wx = sxf - x0, wy = syf - y0;
          const double top = image.at(c, y0, x0) * (1 - wx) + image.at(c, y0, x1) * wx;
          const double bot = image.at(c, y1, x0) * (1 - wx) + image.at(c, y1, x1) * wx;
          value = top * (1 - wy) + bot * wy;
        }
        out.at(c, y, x) = static_cast<float>(std::clamp(value + brightness, 0.0, 1.0));
      }
  return out;
}

Dataset Dataset::load(const std::filesystem::path& dir, const LoadOptions& options) {
  const auto manifest_path = dir / "manifest.jsonl";
  const auto meta_path = dir / "meta.json";
  json meta = json::parse(io::read_text_file(meta_path));

  Dataset ds;
  ds.alphabet = meta.at("alphabet").get<std::string>();
  ds.shape = options.target;

  std::istringstream manifest(io::read_text_file(manifest_path));
  std::string line;
  int lineno = 0;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec = json::parse(line);
    Sample s;
    s.text = rec.at("text").get<std::string>();
    s.font_id = rec.at("font_id").get<std::string>();
    s.seed = rec.at("seed").get<std::uint64_t>();
    s.bg_level = rec.value("bg_level", 0.0f);

    std::vector<CharBox> boxes;
    for (const auto& b : rec.at("char_boxes"))
      boxes.push_back(CharBox{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                              b.at(3).get<double>()});

    std::vector<std::size_t> shape;
    const auto image_path = dir / rec.at("path").get<std::string>();
    std::vector<float> pixels;
    try {
      pixels = io::load_npy(image_path, shape);
    } catch (const std::exception& e) {
      throw std::runtime_error("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    if (shape.size() != 3)
      throw std::runtime_error("image is not CHW: " + image_path.string());
    Image img;
    img.c = static_cast<int>(shape[0]);
    img.h = static_cast<int>(shape[1]);
    img.w = static_cast<int>(shape[2]);
    img.v = std::move(pixels);

    auto prepared = preprocess(img, boxes, options.mode, options.target, s.bg_level,
                               options.patch_width);
    s.image = std::move(prepared.image);
    s.boxes = std::move(prepared.boxes);
    if (options.patch_width > 0)
      s.char_patches =
          char_boxes_to_patch_indices(s.boxes, options.patch_width, options.target.width);
    if (ds.channels == 0) ds.channels = s.image.c;
    if (s.image.c != ds.channels)
      throw std::runtime_error("mixed channel counts in dataset: " + image_path.string());
    ds.samples.push_back(std::move(s));
  }

  const auto n = static_cast<int>(ds.samples.size());
  const double train_frac = meta.at("splits").at("train").get<double>();
  const double val_frac = meta.at("splits").at("val").get<double>();
  ds.train_end = static_cast<int>(std::lround(train_frac * n));
  ds.val_end = ds.train_end + static_cast<int>(std::lround(val_frac * n));
  ds.train_end = std::clamp(ds.train_end, 0, n);
  ds.val_end = std::clamp(ds.val_end, ds.train_end, n);
  return ds;
}

namespace {
std::vector<int> iota_range(int begin, int end) {
  std::vector<int> out;
  out.reserve(std::max(0, end - begin));
  for (int i = begin; i < end; ++i) out.push_back(i);
  return out;
}
}  // namespace

std::vector<int> Dataset::train_indices() const { return iota_range(0, train_end); }
std::vector<int> Dataset::val_indices() const { return iota_range(train_end, val_end); }
std::vector<int> Dataset::test_indices() const {
  return iota_range(val_end, static_cast<int>(samples.size()));
}
std::vector<int> Dataset::all_indices() const {
  return iota_range(0, static_cast<int>(samples.size()));
}

std::vector<Batch> make_batches(const std::vector<int>& indices, int batch_size,
                                std::uint64_t seed, int epoch) {
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
  std::vector<int> shuffled = indices;
  Rng rng(derive_seed(derive_seed(seed, "shuffle"), static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = shuffled.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(shuffled[i - 1], shuffled[j]);
  }
  std::vector<Batch> batches;
  for (std::size_t at = 0; at < shuffled.size(); at += batch_size) {
    Batch b;
    const auto end = std::min(shuffled.size(), at + batch_size);
    b.indices.assign(shuffled.begin() + at, shuffled.begin() + end);
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace textmim::data
