// SPDX-License-Identifier: Apache-2.0
#include "textmim/vocab.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "textmim/io.hpp"

namespace textmim {

namespace {
constexpr const char* kEosToken = "<eos>";
constexpr const char* kBlankToken = "<blank>";
}  // namespace

Vocab Vocab::from_chars(const std::string& chars, bool with_blank) {
  Vocab v;
  for (char c : chars) {
    for (const auto& e : v.entries)
      if (e.size() == 1 && e[0] == c)
        throw std::invalid_argument(std::string("duplicate vocab character '") + c + "'");
    v.entries.push_back(std::string(1, c));
  }
  if (v.entries.empty()) throw std::invalid_argument("vocab: empty alphabet");
  v.eos_id = static_cast<int>(v.entries.size());
  v.entries.push_back(kEosToken);
  if (with_blank) {
    v.blank_id = static_cast<int>(v.entries.size());
    v.entries.push_back(kBlankToken);
  }
  v.rebuild_index();
  return v;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ostringstream out;
  out << "#vocab eos=" << kEosToken;
  if (blank_id >= 0) out << " blank=" << kBlankToken;
  out << '\n';
  for (const auto& e : entries) out << e << '\n';
  io::atomic_write_file(path, out.str());
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::istringstream in(io::read_text_file(path));
  std::string header;
  if (!std::getline(in, header) || header.rfind("#vocab", 0) != 0)
    throw std::runtime_error("vocab file missing '#vocab' header: " + path.string());
  const bool wants_blank = header.find("blank=") != std::string::npos;
  Vocab v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == kEosToken) v.eos_id = static_cast<int>(v.entries.size());
    if (line == kBlankToken) v.blank_id = static_cast<int>(v.entries.size());
    v.entries.push_back(line);
  }
  if (v.eos_id < 0) throw std::runtime_error("vocab file has no <eos> entry: " + path.string());
  if (wants_blank && v.blank_id < 0)
    throw std::runtime_error("vocab header declares blank but list has none: " + path.string());
  v.rebuild_index();
  return v;
}

void Vocab::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.size() == 1) index_[e[0]] = static_cast<int>(i);
  }
}

int Vocab::char_id(char c) const {
  auto it = index_.find(c);
  if (it == index_.end())
    throw std::out_of_range(std::string("character '") + c + "' is not in the vocabulary");
  return it->second;
}

char Vocab::char_of(int id) const {
  if (id < 0 || id >= size() || entries[id].size() != 1)
    throw std::out_of_range("id " + std::to_string(id) + " is not a plain character");
  return entries[id][0];
}

LabelSeq encode_label(const std::string& text, const Vocab& vocab, int n_positions) {
  if (static_cast<int>(text.size()) > n_positions)
    throw std::invalid_argument("text of length " + std::to_string(text.size()) +
                                " does not fit in " + std::to_string(n_positions) + " positions");
  LabelSeq seq;
  seq.true_length = static_cast<int>(text.size());
  seq.ids.reserve(n_positions);
  for (char c : text) seq.ids.push_back(vocab.char_id(c));
  seq.ids.resize(n_positions, vocab.eos_id);
  return seq;
}

std::string decode_label(const std::vector<int>& ids, const Vocab& vocab) {
  std::string out;
  for (int id : ids) {
    if (id == vocab.eos_id) break;
    out.push_back(vocab.char_of(id));
  }
  return out;
}

std::vector<int> ctc_collapse(const std::vector<int>& frame_ids, int blank_id) {
  std::vector<int> out;
  int prev = blank_id;
  for (int id : frame_ids) {
    if (id != prev && id != blank_id) out.push_back(id);
    prev = id;
  }
  return out;
}

}  // namespace textmim
