// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace textmim {

// Character inventory with reserved end-of-sequence and (optionally) CTC
// blank ids. Ids are positions in the ordered entry list; the two reserved
// entries are always distinct from each other and from every character.
struct Vocab {
  std::vector<std::string> entries;  // single characters plus "<eos>" / "<blank>"
  int eos_id = -1;
  int blank_id = -1;  // -1 when the CTC variant is not in use

  static Vocab from_chars(const std::string& chars, bool with_blank);
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(entries.size()); }

  // Id of a plain character; throws naming the offending character when the
  // lookup fails.
  int char_id(char c) const;
  bool is_char(int id) const { return id != eos_id && id != blank_id && id >= 0 && id < size(); }
  char char_of(int id) const;

 private:
  void rebuild_index();
  std::unordered_map<char, int> index_;
};

// Label padded with EOS up to a fixed number of positions.
struct LabelSeq {
  std::vector<int> ids;  // length N; ids[0..true_length-1] are characters
  int true_length = 0;
};

LabelSeq encode_label(const std::string& text, const Vocab& vocab, int n_positions);

// Inverse of encode_label up to the first EOS.
std::string decode_label(const std::vector<int>& ids, const Vocab& vocab);

// Greedy CTC collapse: merge repeats, then drop blanks.
std::vector<int> ctc_collapse(const std::vector<int>& frame_ids, int blank_id);

}  // namespace textmim
