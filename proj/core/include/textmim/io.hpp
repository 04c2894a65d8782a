// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace textmim::io {

// Little-endian float32 .npy, C-order. Shape is at most 3-D here; that covers
// images (C,H,W) and parameter matrices.
void save_npy(const std::filesystem::path& path, const std::vector<float>& data,
              const std::vector<std::size_t>& shape);
std::vector<float> load_npy(const std::filesystem::path& path, std::vector<std::size_t>& shape);

// Binary PPM (P6). `rgb` is H*W*3 bytes, row-major.
void save_ppm(const std::filesystem::path& path, const std::vector<std::uint8_t>& rgb, int height,
              int width);

std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_hex(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);

// Write via temp file + rename so readers never observe a partial file.
void atomic_write_file(const std::filesystem::path& path, const std::string& contents);
void atomic_write_file(const std::filesystem::path& path, const void* data, std::size_t size);

// Shortest decimal form that round-trips the exact double; keeps logged
// metrics bit-comparable across runs.
std::string format_double(double v);

}  // namespace textmim::io
