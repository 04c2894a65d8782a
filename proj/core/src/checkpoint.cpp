// SPDX-License-Identifier: Apache-2.0
#include "textmim/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "textmim/io.hpp"

namespace textmim {

using nlohmann::json;

namespace {
constexpr char kMagic[8] = {'T', 'M', 'C', 'K', 'P', 'T', '0', '1'};
}

std::string Checkpoint::serialize() const {
  json header;
  header["config"] = config.to_json();
  header["stage"] = stage;
  header["parent_hash"] = parent_hash;
  header["rng_state"] = rng_state;
  json tensor_list = json::array();
  for (const auto& [name, value] : tensors)
    tensor_list.push_back({{"name", name}, {"rows", value.rows()}, {"cols", value.cols()}});
  header["tensors"] = std::move(tensor_list);

  const std::string header_text = header.dump();
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  const std::uint64_t hlen = header_text.size();
  out.append(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out += header_text;
  for (const auto& [name, value] : tensors)
    out.append(reinterpret_cast<const char*>(value.data()),
               static_cast<std::size_t>(value.size()) * sizeof(model::real));
  return out;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  io::atomic_write_file(path, serialize());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file (bad magic): " + path.string());
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string header_text(hlen, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw std::runtime_error("truncated checkpoint header: " + path.string());
  json header = json::parse(header_text);

  Checkpoint ckpt;
  ckpt.config = model::ModelConfig::from_json(header.at("config"));
  ckpt.stage = header.at("stage").get<std::string>();
  ckpt.parent_hash = header.at("parent_hash").get<std::string>();
  ckpt.rng_state = header.at("rng_state").get<std::string>();
  for (const auto& t : header.at("tensors")) {
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    model::Mat value(rows, cols);
    in.read(reinterpret_cast<char*>(value.data()),
            static_cast<std::streamsize>(value.size() * sizeof(model::real)));
    if (!in) throw std::runtime_error("truncated checkpoint tensors: " + path.string());
    ckpt.tensors.emplace_back(t.at("name").get<std::string>(), std::move(value));
  }
  return ckpt;
}

std::string Checkpoint::content_hash() const {
  const std::string bytes = serialize();
  return io::sha256_hex(bytes.data(), bytes.size());
}

std::string Checkpoint::tensors_hash(const std::string& prefix) const {
  std::vector<const std::pair<std::string, model::Mat>*> selected;
  for (const auto& t : tensors)
    if (t.first.rfind(prefix, 0) == 0) selected.push_back(&t);
  std::sort(selected.begin(), selected.end(),
            [](const auto* a, const auto* b) { return a->first < b->first; });
  std::string bytes;
  for (const auto* t : selected) {
    bytes += t->first;
    bytes.push_back('\0');
    bytes.append(reinterpret_cast<const char*>(t->second.data()),
                 static_cast<std::size_t>(t->second.size()) * sizeof(model::real));
  }
  return io::sha256_hex(bytes.data(), bytes.size());
}

Checkpoint Checkpoint::from_model(const model::Model& m, std::string stage,
                                  std::string parent_hash, std::string rng_state) {
  Checkpoint ckpt;
  ckpt.config = m.config();
  ckpt.stage = std::move(stage);
  ckpt.parent_hash = std::move(parent_hash);
  ckpt.rng_state = std::move(rng_state);
  ckpt.tensors = m.export_tensors();
  return ckpt;
}

}  // namespace textmim
