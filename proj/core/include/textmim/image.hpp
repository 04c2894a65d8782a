// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace textmim {

// Dense CHW float image, values in [0, 1].
struct Image {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<float> v;

  Image() = default;
  Image(int channels, int height, int width, float fill = 0.f)
      : c(channels), h(height), w(width), v(static_cast<std::size_t>(channels) * height * width, fill) {}

  float& at(int ch, int y, int x) { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
  float at(int ch, int y, int x) const { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Image& o) const { return c == o.c && h == o.h && w == o.w; }
};

// Axis-aligned character box, x in [x0, x1), y in [y0, y1); pixel units of
// the image it belongs to (fractional after resizing).
struct CharBox {
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  double width() const { return x1 - x0; }
};

}  // namespace textmim
