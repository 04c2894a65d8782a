// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "textmim/ad.hpp"
#include "textmim/config.hpp"
#include "textmim/image.hpp"
#include "textmim/rng.hpp"

namespace textmim::model {

// Training scalar. Gradient-check suites for the losses instantiate the same
// templated code in double; the model itself always runs in float.
using real = float;
using Mat = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic>;
using Tape = ad::Tape<real>;
using Var = Tape::Var;
using GradSink = ad::GradSink<real>;

struct ModelConfig {
  int channels = 3;
  int height = 32;
  int width = 128;
  int patch_width = 4;

  int enc_layers = 4;
  int enc_dim = 128;
  int enc_heads = 4;

  int dec_layers = 2;
  int dec_dim = 128;
  int dec_heads = 4;
  int num_queries = 25;

  int vocab_size = 0;  // includes EOS (and blank for the CTC variant)
  double drop_path_rate = 0.1;

  bool ctc_enabled = false;
  int ctc_layers = 2;

  int mim_regressor_layers = 4;
  int mim_decoder_layers = 4;

  int n_patches() const { return width / patch_width; }
  int patch_dim() const { return channels * height * patch_width; }

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  static ModelConfig from_config(const Config& cfg);
  bool compatible_with(const ModelConfig& other) const;
};

// Vertical patchification: patch p covers columns [p*pw, (p+1)*pw) across all
// channels and rows; element order within a row vector is (c, y, x-offset).
// Exactly inverse to unpatchify.
Mat patchify(const Image& image, int patch_width);
Image unpatchify(const Mat& patches, int channels, int height, int patch_width);

// Named dense parameters; ids index both values and gradient sinks.
class ParamStore {
 public:
  int add(const std::string& name, Mat value);
  int index_of(const std::string& name) const;
  bool contains(const std::string& name) const { return by_name_.count(name) > 0; }
  Mat& value(int id) { return entries_[id].value; }
  const Mat& value(int id) const { return entries_[id].value; }
  const std::string& name(int id) const { return entries_[id].name; }
  int size() const { return static_cast<int>(entries_.size()); }
  std::vector<int> ids_with_prefix(const std::string& prefix) const;
  std::int64_t scalar_count(const std::vector<int>& ids) const;
  std::string hash_of(const std::vector<int>& ids) const;  // order: ascending id

 private:
  struct Entry {
    std::string name;
    Mat value;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> by_name_;
};

// Per-sample stochastic-depth decisions; one scale per residual branch in
// call order. Null plan (or rate 0) means every branch is kept unscaled.
struct DropPathPlan {
  double rate = 0.0;
  Rng* rng = nullptr;
  real next_scale() {
    if (rate <= 0.0 || rng == nullptr) return real(1);
    return rng->uniform() < rate ? real(0) : real(1.0 / (1.0 - rate));
  }
};

// Which sub-modules a model instance owns. Visual pretraining has no decoder
// or classifier at all; the recognizer has no MIM head.
struct Parts {
  bool encoder = true;
  bool decoder = false;
  bool ctc_head = false;
  bool mim_head = false;
};

class Model {
 public:
  Model(const ModelConfig& config, const Parts& parts, std::uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  const Parts& parts() const { return parts_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  // M x enc_dim embedded patches with positional embeddings added.
  Var embed(Tape& t, const Mat& patch_vectors) const;

  // ViT encoder; `visible`, when present, restricts attention keys to the
  // visible positions in every layer (masked attention). Output rows at
  // hidden positions are computed but carry no information from visible rows'
  // perspective: visible rows never attend to them.
  Var encode(Tape& t, Var embedded, const std::vector<std::uint8_t>* visible = nullptr,
             DropPathPlan* drop = nullptr) const;

  // Adds the positional embeddings to encoder output rows (decoder inputs see
  // positions again regardless of stage).
  Var add_positions(Tape& t, Var encoded) const;

  // Parallel character-query decoder; logits row l is character position l.
  Var decode(Tape& t, Var memory_with_pos, DropPathPlan* drop = nullptr) const;

  // CTC variant sequence head: self-attention stack over the (position-added)
  // encoder output, one frame per patch.
  Var ctc_forward(Tape& t, Var memory_with_pos, DropPathPlan* drop = nullptr) const;

  // patchify -> embed -> encode -> decode; the standard recognition path.
  Var forward_recognize(Tape& t, const Image& image, DropPathPlan* drop = nullptr) const;

  // MIM pieces (require mim_head):
  // latent regressor: predicts masked-position representations from visible
  // ones using a shared mask query plus the masked positions' embeddings.
  Var regress_masked(Tape& t, Var visible_reps, const std::vector<int>& visible_idx,
                     const std::vector<int>& masked_idx) const;
  // pixel decoder: masked-position representations to normalized patch pixels.
  Var decode_pixels(Tape& t, Var masked_reps) const;

  // Checkpoint plumbing.
  std::vector<std::pair<std::string, Mat>> export_tensors() const;
  // Copies tensors whose names match this model's parameters; returns the
  // names actually loaded. Missing names are left at their initialization.
  std::vector<std::string> import_tensors(
      const std::vector<std::pair<std::string, Mat>>& tensors);

  std::vector<int> param_ids_with_prefix(const std::string& prefix) const {
    return store_.ids_with_prefix(prefix);
  }
  std::int64_t param_count() const;

  // Closed-form parameter count (see model.cpp for the formula); asserted
  // against the actual store in tests.
  static std::int64_t expected_param_count(const ModelConfig& config, const Parts& parts);

 private:
  struct LinearP {
    int w = -1, b = -1;
  };
  struct NormP {
    int gamma = -1, beta = -1;
  };
  struct AttnP {
    LinearP q, k, v, o;
  };
  struct EncBlockP {
    NormP ln1;
    AttnP attn;
    NormP ln2;
    LinearP fc1, fc2;
  };
  struct DecBlockP {
    NormP ln1;
    AttnP self_attn;
    NormP ln2;
    AttnP cross_attn;
    NormP ln3;
    LinearP fc1, fc2;
  };
  struct CrossBlockP {
    NormP ln1;
    AttnP cross_attn;
    NormP ln2;
    LinearP fc1, fc2;
  };

  LinearP add_linear(const std::string& name, int in_dim, int out_dim, Rng& rng);
  NormP add_norm(const std::string& name, int dim);
  AttnP add_attn(const std::string& name, int q_dim, int kv_dim, int model_dim, Rng& rng);
  EncBlockP add_enc_block(const std::string& name, int dim, Rng& rng);
  DecBlockP add_dec_block(const std::string& name, int dim, int mem_dim, Rng& rng);
  CrossBlockP add_cross_block(const std::string& name, int dim, Rng& rng);

  Var linear(Tape& t, Var x, const LinearP& p) const;
  Var norm(Tape& t, Var x, const NormP& p) const;
  Var attention(Tape& t, Var x_q, Var x_kv, const AttnP& p, int heads,
                const std::vector<std::uint8_t>* visible_keys) const;
  Var enc_block(Tape& t, Var x, const EncBlockP& b, int heads,
                const std::vector<std::uint8_t>* visible, DropPathPlan* drop) const;
  Var ffn(Tape& t, Var x, const LinearP& fc1, const LinearP& fc2) const;

  ModelConfig cfg_;
  Parts parts_;
  ParamStore store_;

  // encoder
  LinearP patch_embed_;
  int pos_embed_ = -1;
  std::vector<EncBlockP> enc_blocks_;
  NormP enc_norm_;
  // decoder + classifier
  int queries_ = -1;
  std::vector<DecBlockP> dec_blocks_;
  NormP dec_norm_;
  LinearP head_;
  // ctc variant
  std::vector<EncBlockP> ctc_blocks_;
  NormP ctc_norm_;
  LinearP ctc_head_;
  // MIM pretraining head
  int mask_query_ = -1;
  std::vector<CrossBlockP> reg_blocks_;
  NormP reg_norm_;
  std::vector<EncBlockP> pix_blocks_;
  NormP pix_norm_;
  LinearP pix_proj_;
};

}  // namespace textmim::model
