// SPDX-License-Identifier: Apache-2.0
#include "textmim/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace textmim::io {

namespace {

void write_all(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw std::runtime_error("short write: " + path.string());
}

}  // namespace

void save_npy(const std::filesystem::path& path, const std::vector<float>& data,
              const std::vector<std::size_t>& shape) {
  std::size_t count = 1;
  std::ostringstream shape_ss;
  shape_ss << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    count *= shape[i];
    shape_ss << shape[i];
    if (shape.size() == 1 || i + 1 < shape.size()) shape_ss << ',';
    if (i + 1 < shape.size()) shape_ss << ' ';
  }
  shape_ss << ')';
  if (count != data.size()) throw std::invalid_argument("save_npy: shape/data mismatch");

  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': " + shape_ss.str() + ", }";
  // Pad so that (magic + header) is a multiple of 64 bytes, newline-terminated.
  const std::size_t preamble = 10;
  std::size_t total = preamble + header.size() + 1;
  header.append((64 - total % 64) % 64, ' ');
  header.push_back('\n');

  std::string buf;
  buf.reserve(preamble + header.size() + data.size() * sizeof(float));
  buf += "\x93NUMPY";
  buf.push_back('\x01');
  buf.push_back('\x00');
  const auto hlen = static_cast<std::uint16_t>(header.size());
  buf.push_back(static_cast<char>(hlen & 0xff));
  buf.push_back(static_cast<char>(hlen >> 8));
  buf += header;
  buf.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(float));
  atomic_write_file(path, buf);
}

std::vector<float> load_npy(const std::filesystem::path& path, std::vector<std::size_t>& shape) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, "\x93NUMPY", 6) != 0)
    throw std::runtime_error("not an npy file: " + path.string());
  char ver[2];
  in.read(ver, 2);
  std::uint8_t lo = 0, hi = 0;
  in.read(reinterpret_cast<char*>(&lo), 1);
  in.read(reinterpret_cast<char*>(&hi), 1);
  const std::size_t hlen = static_cast<std::size_t>(lo) | (static_cast<std::size_t>(hi) << 8);
  std::string header(hlen, '\0');
  in.read(header.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw std::runtime_error("truncated npy header: " + path.string());

  if (header.find("'<f4'") == std::string::npos)
    throw std::runtime_error("npy: expected little-endian float32: " + path.string());
  if (header.find("'fortran_order': False") == std::string::npos)
    throw std::runtime_error("npy: expected C order: " + path.string());

  const auto open_paren = header.find('(');
  const auto close_paren = header.find(')', open_paren);
  if (open_paren == std::string::npos || close_paren == std::string::npos)
    throw std::runtime_error("npy: malformed shape: " + path.string());
  shape.clear();
  std::size_t pos = open_paren + 1;
  while (pos < close_paren) {
    while (pos < close_paren && (header[pos] == ' ' || header[pos] == ',')) ++pos;
    if (pos >= close_paren) break;
    std::size_t value = 0;
    const auto res = std::from_chars(header.data() + pos, header.data() + close_paren, value);
    if (res.ec != std::errc{}) throw std::runtime_error("npy: bad shape entry: " + path.string());
    shape.push_back(value);
    pos = static_cast<std::size_t>(res.ptr - header.data());
  }

  std::size_t count = 1;
  for (std::size_t d : shape) count *= d;
  std::vector<float> data(count);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw std::runtime_error("truncated npy data: " + path.string());
  return data;
}

void save_ppm(const std::filesystem::path& path, const std::vector<std::uint8_t>& rgb, int height,
              int width) {
  if (rgb.size() != static_cast<std::size_t>(height) * width * 3)
    throw std::invalid_argument("save_ppm: buffer size mismatch");
  std::ostringstream head;
  head << "P6\n" << width << ' ' << height << "\n255\n";
  std::string buf = head.str();
  buf.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
  atomic_write_file(path, buf);
}

std::string sha256_hex(const void* data, std::size_t size) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  if (EVP_Digest(data, size, digest, &digest_len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out(digest_len * 2, '0');
  for (unsigned int i = 0; i < digest_len; ++i) {
    out[2 * i] = hex[digest[i] >> 4];
    out[2 * i + 1] = hex[digest[i] & 0xf];
  }
  return out;
}

std::string sha256_hex(const std::string& text) { return sha256_hex(text.data(), text.size()); }

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
  auto tmp = path;
  tmp += ".tmp";
  write_all(tmp, data, size);
  std::filesystem::rename(tmp, path);
}

void atomic_write_file(const std::filesystem::path& path, const std::string& contents) {
  atomic_write_file(path, contents.data(), contents.size());
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace textmim::io
