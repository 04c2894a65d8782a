// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "textmim/model.hpp"

namespace textmim {

// Stage provenance tags form a chain: scratch -> visual_pretrain ->
// language_pretrain -> finetune. `parent_hash` is the content hash of the
// checkpoint a stage started from ("" for roots).
inline constexpr const char* kStageScratch = "scratch";
inline constexpr const char* kStageVisualPretrain = "visual_pretrain";
inline constexpr const char* kStageLanguagePretrain = "language_pretrain";
inline constexpr const char* kStageFinetune = "finetune";

struct Checkpoint {
  model::ModelConfig config;
  std::string stage;
  std::string parent_hash;
  std::string rng_state;
  std::vector<std::pair<std::string, model::Mat>> tensors;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  // SHA-256 of the serialized container (config, stage, lineage, tensors).
  std::string content_hash() const;
  // SHA-256 over the tensors whose name starts with `prefix` (name order).
  std::string tensors_hash(const std::string& prefix = "") const;

  static Checkpoint from_model(const model::Model& m, std::string stage, std::string parent_hash,
                               std::string rng_state);

 private:
  std::string serialize() const;
};

}  // namespace textmim
