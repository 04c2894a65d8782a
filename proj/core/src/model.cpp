// SPDX-License-Identifier: Apache-2.0
#include "textmim/model.hpp"

#include <cmath>
#include <stdexcept>

#include "textmim/io.hpp"

namespace textmim::model {

using nlohmann::json;

void ModelConfig::validate() const {
  if (channels != 1 && channels != 3)
    throw std::invalid_argument("model: channels must be 1 or 3");
  if (height < 1 || width < 1) throw std::invalid_argument("model: bad image shape");
  if (patch_width < 1 || width % patch_width != 0)
    throw std::invalid_argument("model: patch_width must divide image width");
  if (enc_layers < 1 || dec_layers < 1) throw std::invalid_argument("model: need >= 1 layer");
  if (enc_dim % enc_heads != 0)
    throw std::invalid_argument("model: enc_dim must be divisible by enc_heads");
  if (dec_dim % dec_heads != 0)
    throw std::invalid_argument("model: dec_dim must be divisible by dec_heads");
  if (num_queries < 1) throw std::invalid_argument("model: num_queries must be >= 1");
  if (vocab_size < 2) throw std::invalid_argument("model: vocab_size must be >= 2");
  if (drop_path_rate < 0 || drop_path_rate >= 1)
    throw std::invalid_argument("model: drop_path_rate must be in [0, 1)");
  if (ctc_enabled && ctc_layers < 1)
    throw std::invalid_argument("model: ctc_layers must be >= 1 when the CTC variant is enabled");
}

json ModelConfig::to_json() const {
  return json{{"channels", channels},
              {"height", height},
              {"width", width},
              {"patch_width", patch_width},
              {"enc_layers", enc_layers},
              {"enc_dim", enc_dim},
              {"enc_heads", enc_heads},
              {"dec_layers", dec_layers},
              {"dec_dim", dec_dim},
              {"dec_heads", dec_heads},
              {"num_queries", num_queries},
              {"vocab_size", vocab_size},
              {"drop_path_rate", drop_path_rate},
              {"ctc_enabled", ctc_enabled},
              {"ctc_layers", ctc_layers},
              {"mim_regressor_layers", mim_regressor_layers},
              {"mim_decoder_layers", mim_decoder_layers}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  c.channels = j.at("channels").get<int>();
  c.height = j.at("height").get<int>();
  c.width = j.at("width").get<int>();
  c.patch_width = j.at("patch_width").get<int>();
  c.enc_layers = j.at("enc_layers").get<int>();
  c.enc_dim = j.at("enc_dim").get<int>();
  c.enc_heads = j.at("enc_heads").get<int>();
  c.dec_layers = j.at("dec_layers").get<int>();
  c.dec_dim = j.at("dec_dim").get<int>();
  c.dec_heads = j.at("dec_heads").get<int>();
  c.num_queries = j.at("num_queries").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.drop_path_rate = j.at("drop_path_rate").get<double>();
  c.ctc_enabled = j.at("ctc_enabled").get<bool>();
  c.ctc_layers = j.at("ctc_layers").get<int>();
  c.mim_regressor_layers = j.at("mim_regressor_layers").get<int>();
  c.mim_decoder_layers = j.at("mim_decoder_layers").get<int>();
  return c;
}

ModelConfig ModelConfig::from_config(const Config& cfg) {
  ModelConfig c;
  c.channels = static_cast<int>(cfg.get_int("model.channels", c.channels));
  c.height = static_cast<int>(cfg.get_int("model.height", c.height));
  c.width = static_cast<int>(cfg.get_int("model.width", c.width));
  c.patch_width = static_cast<int>(cfg.get_int("model.patch_width", c.patch_width));
  c.enc_layers = static_cast<int>(cfg.get_int("model.enc_layers", c.enc_layers));
  c.enc_dim = static_cast<int>(cfg.get_int("model.enc_dim", c.enc_dim));
  c.enc_heads = static_cast<int>(cfg.get_int("model.enc_heads", c.enc_heads));
  c.dec_layers = static_cast<int>(cfg.get_int("model.dec_layers", c.dec_layers));
  c.dec_dim = static_cast<int>(cfg.get_int("model.dec_dim", c.dec_dim));
  c.dec_heads = static_cast<int>(cfg.get_int("model.dec_heads", c.dec_heads));
  c.num_queries = static_cast<int>(cfg.get_int("model.num_queries", c.num_queries));
  c.drop_path_rate = cfg.get_double("model.drop_path_rate", c.drop_path_rate);
  c.ctc_enabled = cfg.get_bool("model.ctc_enabled", c.ctc_enabled);
  c.ctc_layers = static_cast<int>(cfg.get_int("model.ctc_layers", c.ctc_layers));
  c.mim_regressor_layers =
      static_cast<int>(cfg.get_int("model.mim_regressor_layers", c.mim_regressor_layers));
  c.mim_decoder_layers =
      static_cast<int>(cfg.get_int("model.mim_decoder_layers", c.mim_decoder_layers));
  return c;
}

bool ModelConfig::compatible_with(const ModelConfig& o) const {
  return channels == o.channels && height == o.height && width == o.width &&
         patch_width == o.patch_width && enc_layers == o.enc_layers && enc_dim == o.enc_dim &&
         enc_heads == o.enc_heads && dec_layers == o.dec_layers && dec_dim == o.dec_dim &&
         dec_heads == o.dec_heads && num_queries == o.num_queries && vocab_size == o.vocab_size;
}

Mat patchify(const Image& image, int patch_width) {
  if (patch_width < 1 || image.w % patch_width != 0)
    throw std::invalid_argument("patchify: patch width must divide image width");
  const int m = image.w / patch_width;
  Mat out(m, static_cast<Eigen::Index>(image.c) * image.h * patch_width);
  for (int p = 0; p < m; ++p)
    for (int c = 0; c < image.c; ++c)
      for (int y = 0; y < image.h; ++y)
        for (int dx = 0; dx < patch_width; ++dx)
          out(p, (static_cast<Eigen::Index>(c) * image.h + y) * patch_width + dx) =
              image.at(c, y, p * patch_width + dx);
  return out;
}

Image unpatchify(const Mat& patches, int channels, int height, int patch_width) {
  const int m = static_cast<int>(patches.rows());
  if (patches.cols() != static_cast<Eigen::Index>(channels) * height * patch_width)
    throw std::invalid_argument("unpatchify: patch vector length mismatch");
  Image img(channels, height, m * patch_width);
  for (int p = 0; p < m; ++p)
    for (int c = 0; c < channels; ++c)
      for (int y = 0; y < height; ++y)
        for (int dx = 0; dx < patch_width; ++dx)
          img.at(c, y, p * patch_width + dx) =
              patches(p, (static_cast<Eigen::Index>(c) * height + y) * patch_width + dx);
  return img;
}

int ParamStore::add(const std::string& name, Mat value) {
  if (by_name_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  entries_.push_back(Entry{name, std::move(value)});
  by_name_[name] = static_cast<int>(entries_.size()) - 1;
  return static_cast<int>(entries_.size()) - 1;
}

int ParamStore::index_of(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::out_of_range("no parameter named " + name);
  return it->second;
}

std::vector<int> ParamStore::ids_with_prefix(const std::string& prefix) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (entries_[i].name.rfind(prefix, 0) == 0) out.push_back(i);
  return out;
}

std::int64_t ParamStore::scalar_count(const std::vector<int>& ids) const {
  std::int64_t n = 0;
  for (int id : ids) n += entries_[id].value.size();
  return n;
}

std::string ParamStore::hash_of(const std::vector<int>& ids) const {
  std::string bytes;
  for (int id : ids) {
    const Mat& m = entries_[id].value;
    bytes += entries_[id].name;
    bytes.push_back('\0');
    bytes.append(reinterpret_cast<const char*>(m.data()), m.size() * sizeof(real));
  }
  return io::sha256_hex(bytes.data(), bytes.size());
}

namespace {

Mat random_mat(Eigen::Index rows, Eigen::Index cols, Rng& rng, double stddev = 0.02) {
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<real>(rng.normal(0.0, stddev));
  return m;
}

}  // namespace

Model::LinearP Model::add_linear(const std::string& name, int in_dim, int out_dim, Rng& rng) {
  LinearP p;
  p.w = store_.add(name + ".weight", random_mat(in_dim, out_dim, rng));
  p.b = store_.add(name + ".bias", Mat::Zero(1, out_dim));
  return p;
}

Model::NormP Model::add_norm(const std::string& name, int dim) {
  NormP p;
  p.gamma = store_.add(name + ".gamma", Mat::Ones(1, dim));
  p.beta = store_.add(name + ".beta", Mat::Zero(1, dim));
  return p;
}

Model::AttnP Model::add_attn(const std::string& name, int q_dim, int kv_dim, int model_dim,
                             Rng& rng) {
  AttnP p;
  p.q = add_linear(name + ".q", q_dim, model_dim, rng);
  p.k = add_linear(name + ".k", kv_dim, model_dim, rng);
  p.v = add_linear(name + ".v", kv_dim, model_dim, rng);
  p.o = add_linear(name + ".o", model_dim, model_dim, rng);
  return p;
}

Model::EncBlockP Model::add_enc_block(const std::string& name, int dim, Rng& rng) {
  EncBlockP b;
  b.ln1 = add_norm(name + ".ln1", dim);
  b.attn = add_attn(name + ".attn", dim, dim, dim, rng);
  b.ln2 = add_norm(name + ".ln2", dim);
  b.fc1 = add_linear(name + ".fc1", dim, 4 * dim, rng);
  b.fc2 = add_linear(name + ".fc2", 4 * dim, dim, rng);
  return b;
}

Model::DecBlockP Model::add_dec_block(const std::string& name, int dim, int mem_dim, Rng& rng) {
  DecBlockP b;
  b.ln1 = add_norm(name + ".ln1", dim);
  b.self_attn = add_attn(name + ".self", dim, dim, dim, rng);
  b.ln2 = add_norm(name + ".ln2", dim);
  b.cross_attn = add_attn(name + ".cross", dim, mem_dim, dim, rng);
  b.ln3 = add_norm(name + ".ln3", dim);
  b.fc1 = add_linear(name + ".fc1", dim, 4 * dim, rng);
  b.fc2 = add_linear(name + ".fc2", 4 * dim, dim, rng);
  return b;
}

Model::CrossBlockP Model::add_cross_block(const std::string& name, int dim, Rng& rng) {
  CrossBlockP b;
  b.ln1 = add_norm(name + ".ln1", dim);
  b.cross_attn = add_attn(name + ".cross", dim, dim, dim, rng);
  b.ln2 = add_norm(name + ".ln2", dim);
  b.fc1 = add_linear(name + ".fc1", dim, 4 * dim, rng);
  b.fc2 = add_linear(name + ".fc2", 4 * dim, dim, rng);
  return b;
}

Model::Model(const ModelConfig& config, const Parts& parts, std::uint64_t init_seed)
    : cfg_(config), parts_(parts) {
  cfg_.validate();
  Rng rng(derive_seed(init_seed, "model_init"));

  if (parts_.encoder) {
    patch_embed_ = add_linear("enc.patch_embed", cfg_.patch_dim(), cfg_.enc_dim, rng);
    pos_embed_ = store_.add("enc.pos_embed", random_mat(cfg_.n_patches(), cfg_.enc_dim, rng));
    for (int i = 0; i < cfg_.enc_layers; ++i)
      enc_blocks_.push_back(add_enc_block("enc.block" + std::to_string(i), cfg_.enc_dim, rng));
    enc_norm_ = add_norm("enc.norm", cfg_.enc_dim);
  }
  if (parts_.decoder) {
    queries_ = store_.add("dec.queries", random_mat(cfg_.num_queries, cfg_.dec_dim, rng));
    for (int i = 0; i < cfg_.dec_layers; ++i)
      dec_blocks_.push_back(
          add_dec_block("dec.block" + std::to_string(i), cfg_.dec_dim, cfg_.enc_dim, rng));
    dec_norm_ = add_norm("dec.norm", cfg_.dec_dim);
    head_ = add_linear("head.classifier", cfg_.dec_dim, cfg_.vocab_size, rng);
  }
  if (parts_.ctc_head) {
    if (!cfg_.ctc_enabled) throw std::invalid_argument("ctc head requested but not enabled");
    for (int i = 0; i < cfg_.ctc_layers; ++i)
      ctc_blocks_.push_back(add_enc_block("ctc.block" + std::to_string(i), cfg_.enc_dim, rng));
    ctc_norm_ = add_norm("ctc.norm", cfg_.enc_dim);
    ctc_head_ = add_linear("ctc.classifier", cfg_.enc_dim, cfg_.vocab_size, rng);
  }
  if (parts_.mim_head) {
    mask_query_ = store_.add("mim.mask_query", random_mat(1, cfg_.enc_dim, rng));
    for (int i = 0; i < cfg_.mim_regressor_layers; ++i)
      reg_blocks_.push_back(
          add_cross_block("mim.regressor" + std::to_string(i), cfg_.enc_dim, rng));
    reg_norm_ = add_norm("mim.regressor_norm", cfg_.enc_dim);
    for (int i = 0; i < cfg_.mim_decoder_layers; ++i)
      pix_blocks_.push_back(add_enc_block("mim.pixdec" + std::to_string(i), cfg_.enc_dim, rng));
    pix_norm_ = add_norm("mim.pixdec_norm", cfg_.enc_dim);
    pix_proj_ = add_linear("mim.pixel_proj", cfg_.enc_dim, cfg_.patch_dim(), rng);
  }
}

Var Model::linear(Tape& t, Var x, const LinearP& p) const {
  return t.add_rowvec(t.matmul(x, t.param(p.w, store_.value(p.w))),
                      t.param(p.b, store_.value(p.b)));
}

Var Model::norm(Tape& t, Var x, const NormP& p) const {
  return t.layer_norm_rows(x, t.param(p.gamma, store_.value(p.gamma)),
                           t.param(p.beta, store_.value(p.beta)), real(1e-5));
}

Var Model::attention(Tape& t, Var x_q, Var x_kv, const AttnP& p, int heads,
                     const std::vector<std::uint8_t>* visible_keys) const {
  const Eigen::Index model_dim = store_.value(p.q.w).cols();
  const Eigen::Index head_dim = model_dim / heads;
  const real inv_sqrt = real(1.0 / std::sqrt(static_cast<double>(head_dim)));
  Var q = linear(t, x_q, p.q);
  Var k = linear(t, x_kv, p.k);
  Var v = linear(t, x_kv, p.v);
  std::vector<Var> outs;
  outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Var qh = t.cols_block(q, h * head_dim, head_dim);
    Var kh = t.cols_block(k, h * head_dim, head_dim);
    Var vh = t.cols_block(v, h * head_dim, head_dim);
    Var scores = t.scale(t.matmul(qh, t.transpose(kh)), inv_sqrt);
    Var weights = t.softmax_rows(scores, visible_keys ? *visible_keys
                                                      : std::vector<std::uint8_t>{});
    outs.push_back(t.matmul(weights, vh));
  }
  return linear(t, t.concat_cols(outs), p.o);
}

Var Model::ffn(Tape& t, Var x, const LinearP& fc1, const LinearP& fc2) const {
  return linear(t, t.gelu(linear(t, x, fc1)), fc2);
}

Var Model::enc_block(Tape& t, Var x, const EncBlockP& b, int heads,
                     const std::vector<std::uint8_t>* visible, DropPathPlan* drop) const {
  Var h = norm(t, x, b.ln1);
  Var a = attention(t, h, h, b.attn, heads, visible);
  x = t.add(x, drop ? t.scale(a, drop->next_scale()) : a);
  Var h2 = norm(t, x, b.ln2);
  Var f = ffn(t, h2, b.fc1, b.fc2);
  return t.add(x, drop ? t.scale(f, drop->next_scale()) : f);
}

Var Model::embed(Tape& t, const Mat& patch_vectors) const {
  if (patch_vectors.rows() != cfg_.n_patches() || patch_vectors.cols() != cfg_.patch_dim())
    throw std::invalid_argument("embed: patch matrix has wrong shape");
  Var x = linear(t, t.constant(patch_vectors), patch_embed_);
  return t.add(x, t.param(pos_embed_, store_.value(pos_embed_)));
}

Var Model::encode(Tape& t, Var embedded, const std::vector<std::uint8_t>* visible,
                  DropPathPlan* drop) const {
  if (!parts_.encoder) throw std::logic_error("model has no encoder");
  if (visible) {
    if (static_cast<int>(visible->size()) != cfg_.n_patches())
      throw std::invalid_argument("encode: mask length != patch count");
    int n_visible = 0;
    for (auto v : *visible) n_visible += v != 0;
    if (n_visible == 0) throw std::invalid_argument("encode: every position is masked");
  }
  Var x = embedded;
  for (const auto& b : enc_blocks_) x = enc_block(t, x, b, cfg_.enc_heads, visible, drop);
  return norm(t, x, enc_norm_);
}

Var Model::add_positions(Tape& t, Var encoded) const {
  return t.add(encoded, t.param(pos_embed_, store_.value(pos_embed_)));
}

Var Model::decode(Tape& t, Var memory_with_pos, DropPathPlan* drop) const {
  if (!parts_.decoder) throw std::logic_error("model has no decoder");
  if (t.cols(memory_with_pos) != cfg_.enc_dim)
    throw std::invalid_argument("decode: memory width != enc_dim");
  Var q = t.param(queries_, store_.value(queries_));
  for (const auto& b : dec_blocks_) {
    Var h = norm(t, q, b.ln1);
    Var a = attention(t, h, h, b.self_attn, cfg_.dec_heads, nullptr);
    q = t.add(q, drop ? t.scale(a, drop->next_scale()) : a);
    Var h2 = norm(t, q, b.ln2);
    Var c = attention(t, h2, memory_with_pos, b.cross_attn, cfg_.dec_heads, nullptr);
    q = t.add(q, drop ? t.scale(c, drop->next_scale()) : c);
    Var h3 = norm(t, q, b.ln3);
    Var f = ffn(t, h3, b.fc1, b.fc2);
    q = t.add(q, drop ? t.scale(f, drop->next_scale()) : f);
  }
  return linear(t, norm(t, q, dec_norm_), head_);
}

Var Model::ctc_forward(Tape& t, Var memory_with_pos, DropPathPlan* drop) const {
  if (!parts_.ctc_head) throw std::logic_error("model has no CTC head");
  Var x = memory_with_pos;
  for (const auto& b : ctc_blocks_) x = enc_block(t, x, b, cfg_.enc_heads, nullptr, drop);
  return linear(t, norm(t, x, ctc_norm_), ctc_head_);
}

Var Model::forward_recognize(Tape& t, const Image& image, DropPathPlan* drop) const {
  if (image.c != cfg_.channels || image.h != cfg_.height || image.w != cfg_.width)
    throw std::invalid_argument("forward_recognize: image shape mismatch");
  Var embedded = embed(t, patchify(image, cfg_.patch_width));
  Var encoded = encode(t, embedded, nullptr, drop);
  return decode(t, add_positions(t, encoded), drop);
}

Var Model::regress_masked(Tape& t, Var visible_reps, const std::vector<int>& visible_idx,
                          const std::vector<int>& masked_idx) const {
  if (!parts_.mim_head) throw std::logic_error("model has no MIM head");
  if (masked_idx.empty()) throw std::invalid_argument("regress_masked: empty mask");
  if (t.rows(visible_reps) != static_cast<Eigen::Index>(visible_idx.size()))
    throw std::invalid_argument("regress_masked: visible rep/index count mismatch");

  Var pos = t.param(pos_embed_, store_.value(pos_embed_));
  // Shared mask query, differentiated per position by the positional embedding.
  Var ones = t.constant(Mat::Ones(static_cast<Eigen::Index>(masked_idx.size()), 1));
  Var queries = t.add(t.matmul(ones, t.param(mask_query_, store_.value(mask_query_))),
                      t.rows_gather(pos, masked_idx));
  Var memory = t.add(visible_reps, t.rows_gather(pos, visible_idx));
  Var q = queries;
  for (const auto& b : reg_blocks_) {
    Var h = norm(t, q, b.ln1);
    q = t.add(q, attention(t, h, memory, b.cross_attn, cfg_.enc_heads, nullptr));
    Var h2 = norm(t, q, b.ln2);
    q = t.add(q, ffn(t, h2, b.fc1, b.fc2));
  }
  return norm(t, q, reg_norm_);
}

Var Model::decode_pixels(Tape& t, Var masked_reps) const {
  if (!parts_.mim_head) throw std::logic_error("model has no MIM head");
  Var x = masked_reps;
  for (const auto& b : pix_blocks_) x = enc_block(t, x, b, cfg_.enc_heads, nullptr, nullptr);
  return linear(t, norm(t, x, pix_norm_), pix_proj_);
}

std::vector<std::pair<std::string, Mat>> Model::export_tensors() const {
  std::vector<std::pair<std::string, Mat>> out;
  out.reserve(store_.size());
  for (int i = 0; i < store_.size(); ++i) out.emplace_back(store_.name(i), store_.value(i));
  return out;
}

std::vector<std::string> Model::import_tensors(
    const std::vector<std::pair<std::string, Mat>>& tensors) {
  std::vector<std::string> loaded;
  for (const auto& [name, value] : tensors) {
    if (!store_.contains(name)) continue;
    Mat& dst = store_.value(store_.index_of(name));
    if (dst.rows() != value.rows() || dst.cols() != value.cols())
      throw std::runtime_error("tensor shape mismatch for " + name);
    dst = value;
    loaded.push_back(name);
  }
  return loaded;
}

std::int64_t Model::param_count() const {
  std::int64_t n = 0;
  for (int i = 0; i < store_.size(); ++i) n += store_.value(i).size();
  return n;
}

// Closed form, per sub-module (d = dim, f = 4d FFN width, kv = key/value dim):
//   linear(in, out)      = in*out + out
//   norm(d)              = 2d
//   attn(q_dim, kv, d)   = linear(q_dim,d) + 2*linear(kv,d) + linear(d,d)
//   enc_block(d)         = 2*norm(d) + attn(d,d,d) + linear(d,4d) + linear(4d,d)
//   dec_block(d, m)      = 3*norm(d) + attn(d,d,d) + attn(d,m,d) + FFN as above
//   cross_block(d)       = 2*norm(d) + attn(d,d,d) + FFN as above
// encoder = linear(patch_dim, d) + M*d + L*enc_block(d) + norm(d)
// decoder = N*e + Ld*dec_block(e, d) + norm(e), head = linear(e, V)
// ctc     = Lc*enc_block(d) + norm(d) + linear(d, V)
// mim     = d + R*cross_block(d) + norm(d) + P*enc_block(d) + norm(d)
//           + linear(d, patch_dim)
std::int64_t Model::expected_param_count(const ModelConfig& c, const Parts& parts) {
  auto linear = [](std::int64_t in, std::int64_t out) { return in * out + out; };
  auto norm = [](std::int64_t d) { return 2 * d; };
  auto attn = [&](std::int64_t qd, std::int64_t kv, std::int64_t d) {
    return linear(qd, d) + 2 * linear(kv, d) + linear(d, d);
  };
  auto enc_block = [&](std::int64_t d) {
    return 2 * norm(d) + attn(d, d, d) + linear(d, 4 * d) + linear(4 * d, d);
  };
  const std::int64_t d = c.enc_dim, e = c.dec_dim;
  std::int64_t total = 0;
  if (parts.encoder)
    total += linear(c.patch_dim(), d) + static_cast<std::int64_t>(c.n_patches()) * d +
             c.enc_layers * enc_block(d) + norm(d);
  if (parts.decoder) {
    const std::int64_t dec_block =
        3 * norm(e) + attn(e, e, e) + attn(e, d, e) + linear(e, 4 * e) + linear(4 * e, e);
    total += static_cast<std::int64_t>(c.num_queries) * e + c.dec_layers * dec_block + norm(e) +
             linear(e, c.vocab_size);
  }
  if (parts.ctc_head) total += c.ctc_layers * enc_block(d) + norm(d) + linear(d, c.vocab_size);
  if (parts.mim_head) {
    const std::int64_t cross_block =
        2 * norm(d) + attn(d, d, d) + linear(d, 4 * d) + linear(4 * d, d);
    total += d + c.mim_regressor_layers * cross_block + norm(d) +
             c.mim_decoder_layers * enc_block(d) + norm(d) + linear(d, c.patch_dim());
  }
  return total;
}

}  // namespace textmim::model
