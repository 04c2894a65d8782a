// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace textmim {

// Flat declarative key=value file. Lines starting with '#' are comments;
// keys use dotted sections ("model.enc_dim"). Values keep their raw text and
// are converted on access so one file drives every stage.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::filesystem::path& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_str(const std::string& key, const std::string& fallback) const;
  std::string require_str(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // "key=value" pairs from the command line take precedence over the file.
  void apply_overrides(const std::vector<std::string>& overrides);

  // Canonical text form (sorted keys); hashed into reports so a run records
  // exactly the configuration it saw.
  std::string canonical_text() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace textmim
