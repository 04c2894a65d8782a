// SPDX-License-Identifier: Apache-2.0
#include "textmim/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "textmim/io.hpp"
#include "textmim/rng.hpp"

namespace textmim::synth {

using nlohmann::json;

int GlyphBitmap::popcount() const {
  int n = 0;
  for (auto b : bits) n += b != 0;
  return n;
}

const GlyphBitmap& GlyphFont::glyph(char c) const {
  auto it = glyphs.find(c);
  if (it == glyphs.end())
    throw std::out_of_range(std::string("font '") + font_id + "' has no glyph for '" + c + "'");
  return it->second;
}

namespace {

// One candidate pattern; bits row-major pattern_rows x width_cells.
std::vector<std::uint8_t> draw_pattern(Rng& rng, int rows, int cols) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(rows) * cols);
  for (auto& b : bits) b = rng.uniform() < 0.5 ? 1 : 0;
  // Ink in the outermost columns keeps the glyph's horizontal extent tight.
  for (int c : {0, cols - 1}) {
    bool any = false;
    for (int r = 0; r < rows; ++r) any = any || bits[static_cast<std::size_t>(r) * cols + c];
    if (!any) bits[static_cast<std::size_t>(rng.uniform_index(rows)) * cols + c] = 1;
  }
  int set = 0;
  for (auto b : bits) set += b;
  if (set < rows) {  // too sparse to survive noise; densify deterministically
    for (int r = 0; r < rows && set < rows; ++r) {
      const int c = static_cast<int>(rng.uniform_index(cols));
      auto& b = bits[static_cast<std::size_t>(r) * cols + c];
      if (!b) {
        b = 1;
        ++set;
      }
    }
  }
  return bits;
}

int hamming(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  if (a.size() != b.size()) return 1 << 20;  // different widths count as distinct
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

GlyphBitmap upscale(const std::vector<std::uint8_t>& pattern, int rows, int cols, int sx, int sy) {
  GlyphBitmap g;
  g.width = cols * sx;
  g.height = rows * sy;
  g.bits.assign(static_cast<std::size_t>(g.width) * g.height, 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!pattern[static_cast<std::size_t>(r) * cols + c]) continue;
      for (int dy = 0; dy < sy; ++dy)
        for (int dx = 0; dx < sx; ++dx)
          g.bits[static_cast<std::size_t>(r * sy + dy) * g.width + (c * sx + dx)] = 1;
    }
  return g;
}

}  // namespace

GlyphFont make_procedural_font(const std::string& font_id, const std::string& alphabet,
                               std::uint64_t seed, const FontParams& params) {
  if (alphabet.empty()) throw std::invalid_argument("make_procedural_font: empty alphabet");
  if (params.pattern_rows < 1 || params.pattern_cols < 2)
    throw std::invalid_argument("make_procedural_font: pattern must be at least 1x2");

  GlyphFont font;
  font.font_id = font_id;
  font.glyph_height = params.pattern_rows * params.scale_y;
  font.baseline = font.glyph_height;

  std::vector<std::pair<char, std::vector<std::uint8_t>>> patterns;
  std::vector<int> widths;
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    const char c = alphabet[i];
    if (font.glyphs.count(c))
      throw std::invalid_argument(std::string("alphabet repeats character '") + c + "'");
    // Roughly half the characters are one cell narrower, so box widths vary.
    const std::uint64_t char_seed = derive_seed(seed, fnv1a64(font_id) ^ (std::uint64_t(c) << 32));
    Rng shape_rng(char_seed);
    const int cols = params.pattern_cols - (shape_rng.next_u64() % 2 == 0 ? 0 : 1);
    const int min_dist = std::max(
        1, static_cast<int>(params.min_distinct_frac * params.pattern_rows * cols));
    std::vector<std::uint8_t> pattern;
    for (std::uint64_t salt = 0;; ++salt) {
      Rng rng(derive_seed(char_seed, salt));
      pattern = draw_pattern(rng, params.pattern_rows, cols);
      bool ok = true;
      for (std::size_t j = 0; j < patterns.size() && ok; ++j)
        ok = hamming(pattern, patterns[j].second) >= min_dist;
      if (ok) break;
      if (salt > 10000)
        throw std::runtime_error("make_procedural_font: cannot find distinct glyph for '" +
                                 std::string(1, c) + "'");
    }
    patterns.emplace_back(c, pattern);
    widths.push_back(cols);
    font.glyphs[c] = upscale(pattern, params.pattern_rows, cols, params.scale_x, params.scale_y);
  }
  return font;
}

void CorpusSpec::validate() const {
  if (alphabet.empty()) throw std::invalid_argument("corpus: empty alphabet");
  const auto n = static_cast<Eigen::Index>(alphabet.size());
  if (bigram_weights.rows() != n || bigram_weights.cols() != n)
    throw std::invalid_argument("corpus: bigram_weights must be |alphabet|^2");
  if ((bigram_weights.array() < 0).any())
    throw std::invalid_argument("corpus: bigram weights must be non-negative");
  for (Eigen::Index r = 0; r < n; ++r)
    if (bigram_weights.row(r).sum() <= 0)
      throw std::invalid_argument("corpus: bigram row " + std::to_string(r) + " sums to zero");
  if (len_min < 1 || len_min > len_max)
    throw std::invalid_argument("corpus: need 1 <= len_min <= len_max");
}

std::string sample_text(const CorpusSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  const int n = static_cast<int>(spec.alphabet.size());
  const int len = static_cast<int>(rng.uniform_int(spec.len_min, spec.len_max));
  std::string out;
  out.reserve(len);
  int prev = static_cast<int>(rng.uniform_index(n));
  out.push_back(spec.alphabet[prev]);
  std::vector<double> row(n);
  for (int i = 1; i < len; ++i) {
    for (int j = 0; j < n; ++j) row[j] = spec.bigram_weights(prev, j);
    prev = rng.categorical(row);
    out.push_back(spec.alphabet[prev]);
  }
  return out;
}

TextSample render(const std::string& text, const GlyphFont& font, const RenderStyle& style,
                  const CanvasSpec& canvas, std::uint64_t seed) {
  if (text.empty()) throw std::invalid_argument("render: empty text");
  if (canvas.channels != 1 && canvas.channels != 3)
    throw std::invalid_argument("render: channels must be 1 or 3");
  if (style.fg_level == style.bg_level)
    throw std::invalid_argument("render: fg_level must differ from bg_level");
  if (style.spacing_px < 0) throw std::invalid_argument("render: negative spacing");
  if (font.glyph_height > canvas.height)
    throw std::invalid_argument("render: glyph band taller than canvas");

  constexpr int kMargin = 1;
  int width_needed = kMargin;
  for (std::size_t i = 0; i < text.size(); ++i) {
    width_needed += font.glyph(text[i]).width;
    if (i + 1 < text.size()) width_needed += style.spacing_px;
  }
  width_needed += kMargin;
  if (width_needed > canvas.width)
    throw std::length_error("render: text needs " + std::to_string(width_needed) +
                            " px but canvas is " + std::to_string(canvas.width) + " px wide");

  const int band_top = (canvas.height - font.glyph_height) / 2;
  std::vector<float> gray(static_cast<std::size_t>(canvas.height) * canvas.width,
                          static_cast<float>(style.bg_level));

  TextSample sample;
  sample.text = text;
  sample.font_id = font.font_id;
  sample.seed = seed;
  sample.bg_level = style.bg_level;

  int x = kMargin;
  for (char c : text) {
    const GlyphBitmap& g = font.glyph(c);
    for (int y = 0; y < g.height; ++y)
      for (int gx = 0; gx < g.width; ++gx)
        if (g.get(y, gx))
          gray[static_cast<std::size_t>(band_top + y) * canvas.width + (x + gx)] =
              static_cast<float>(style.fg_level);
    sample.char_boxes.push_back(CharBox{static_cast<double>(x), static_cast<double>(x + g.width),
                                        static_cast<double>(band_top),
                                        static_cast<double>(band_top + font.glyph_height)});
    x += g.width + style.spacing_px;
  }

  if (style.noise_sigma > 0) {
    Rng rng(derive_seed(seed, "render_noise"));
    for (auto& p : gray)
      p = static_cast<float>(p + rng.normal(0.0, style.noise_sigma));
  }
  for (auto& p : gray) p = std::clamp(p, 0.0f, 1.0f);

  sample.image = Image(canvas.channels, canvas.height, canvas.width);
  for (int ch = 0; ch < canvas.channels; ++ch)
    std::copy(gray.begin(), gray.end(),
              sample.image.v.begin() + static_cast<std::size_t>(ch) * gray.size());
  return sample;
}

void StyleRange::validate() const {
  if (bg_min > bg_max || fg_min > fg_max || noise_min > noise_max || spacing_min > spacing_max)
    throw std::invalid_argument("style range: inverted interval");
  if (noise_min < 0) throw std::invalid_argument("style range: negative noise");
  if (spacing_min < 0) throw std::invalid_argument("style range: negative spacing");
  const bool disjoint = fg_max < bg_min || bg_max < fg_min;
  if (!disjoint)
    throw std::invalid_argument("style range: fg and bg intervals overlap; contrast not guaranteed");
}

RenderStyle StyleRange::sample(Rng& rng) const {
  RenderStyle s;
  s.bg_level = rng.uniform(bg_min, bg_max);
  s.fg_level = rng.uniform(fg_min, fg_max);
  s.noise_sigma = rng.uniform(noise_min, noise_max);
  s.spacing_px = static_cast<int>(rng.uniform_int(spacing_min, spacing_max));
  return s;
}

std::filesystem::path build_dataset(const CorpusSpec& spec, const std::vector<GlyphFont>& fonts,
                                    const BuildOptions& options,
                                    const std::filesystem::path& out_dir, std::uint64_t seed) {
  spec.validate();
  options.style.validate();
  if (fonts.empty()) throw std::invalid_argument("build_dataset: no fonts");
  if (options.size < 0) throw std::invalid_argument("build_dataset: negative size");
  if (options.train_frac < 0 || options.val_frac < 0 ||
      options.train_frac + options.val_frac > 1.0 + 1e-12)
    throw std::invalid_argument("build_dataset: bad split fractions");

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) throw std::runtime_error("build_dataset: cannot create " + (out_dir / "images").string() +
                                   ": " + ec.message());

  std::vector<std::string> records(static_cast<std::size_t>(options.size));
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  auto worker = [&](int begin, int end) {
    for (int i = begin; i < end && !failed.load(); ++i) {
      try {
        const std::uint64_t sample_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
        Rng rng(derive_seed(sample_seed, "style"));
        const auto& font = fonts[rng.uniform_index(fonts.size())];
        const RenderStyle style = options.style.sample(rng);

        TextSample sample;
        bool rendered = false;
        for (std::uint64_t attempt = 0; attempt < 100 && !rendered; ++attempt) {
          const std::string text =
              sample_text(spec, derive_seed(sample_seed, std::uint64_t{1000} + attempt));
          try {
            sample = render(text, font, style, options.canvas, sample_seed);
            rendered = true;
          } catch (const std::length_error&) {
            // too wide for the canvas; draw a fresh string
          }
        }
        if (!rendered)
          throw std::runtime_error("sample " + std::to_string(i) +
                                   ": no text of the requested length fits the canvas");

        char name[32];
        std::snprintf(name, sizeof(name), "images/%06d.npy", i);
        io::save_npy(out_dir / name, sample.image.v,
                     {static_cast<std::size_t>(sample.image.c),
                      static_cast<std::size_t>(sample.image.h),
                      static_cast<std::size_t>(sample.image.w)});

        json rec;
        rec["path"] = name;
        rec["text"] = sample.text;
        json boxes = json::array();
        for (const auto& b : sample.char_boxes) boxes.push_back({b.x0, b.x1, b.y0, b.y1});
        rec["char_boxes"] = std::move(boxes);
        rec["font_id"] = sample.font_id;
        rec["seed"] = sample.seed;
        rec["bg_level"] = sample.bg_level;
        records[static_cast<std::size_t>(i)] = rec.dump();
      } catch (const std::exception& e) {
        std::scoped_lock lock(failure_mutex);
        failed = true;
        failure = e.what();
      }
    }
  };

  const int n_threads = std::max(1, options.threads);
  if (n_threads == 1 || options.size < 2) {
    worker(0, options.size);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (options.size + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(options.size, begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (failed) throw std::runtime_error("build_dataset: " + failure);

  std::ostringstream manifest;
  for (const auto& r : records) manifest << r << '\n';
  const auto manifest_path = out_dir / "manifest.jsonl";
  io::atomic_write_file(manifest_path, manifest.str());

  json meta;
  meta["size"] = options.size;
  meta["canvas"] = {{"channels", options.canvas.channels},
                    {"height", options.canvas.height},
                    {"width", options.canvas.width}};
  meta["splits"] = {{"train", options.train_frac},
                    {"val", options.val_frac},
                    {"test", 1.0 - options.train_frac - options.val_frac}};
  meta["alphabet"] = spec.alphabet;
  meta["seed"] = seed;
  io::atomic_write_file(out_dir / "meta.json", meta.dump(2) + "\n");
  return manifest_path;
}

}  // namespace textmim::synth
