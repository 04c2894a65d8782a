// SPDX-License-Identifier: Apache-2.0
#include "textmim/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "textmim/io.hpp"
#include "textmim/losses.hpp"

namespace textmim::harness {

using nlohmann::json;

std::map<char, char> load_subst_table(const std::filesystem::path& path) {
  std::map<char, char> table;
  std::istringstream in(io::read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    // first and last non-space characters form the mapping
    const auto b = line.find_first_not_of(" \t");
    const auto e = line.find_last_not_of(" \t\r");
    if (b == std::string::npos || e <= b)
      throw std::runtime_error("substitution table line needs two characters: " + line);
    table[line[b]] = line[e];
  }
  return table;
}

std::string normalize_text(const std::string& text, const std::map<char, char>& subst,
                           const EvalOptions& options) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    auto it = subst.find(c);
    if (it != subst.end()) c = it->second;
    if (options.strip_spaces && c == ' ') continue;
    if (options.lowercase) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(c);
  }
  return out;
}

std::string greedy_decode(const model::Model& m, const Image& image, const Vocab& vocab) {
  model::Tape tape;  // no sink: pure evaluation
  const model::Mat logits = tape.value(m.forward_recognize(tape, image));
  std::vector<int> ids;
  ids.reserve(logits.rows());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    logits.row(r).maxCoeff(&best);
    ids.push_back(static_cast<int>(best));
  }
  return decode_label(ids, vocab);
}

std::string greedy_decode_ctc(const model::Model& m, const Image& image, const Vocab& vocab) {
  if (vocab.blank_id < 0) throw std::invalid_argument("greedy_decode_ctc: vocab has no blank");
  model::Tape tape;
  model::Var embedded = m.embed(tape, model::patchify(image, m.config().patch_width));
  model::Var memory = m.add_positions(tape, m.encode(tape, embedded, nullptr));
  const model::Mat frames = tape.value(m.ctc_forward(tape, memory));
  std::vector<int> frame_ids;
  frame_ids.reserve(frames.rows());
  for (Eigen::Index r = 0; r < frames.rows(); ++r) {
    Eigen::Index best = 0;
    frames.row(r).maxCoeff(&best);
    frame_ids.push_back(static_cast<int>(best));
  }
  std::string out;
  for (int id : ctc_collapse(frame_ids, vocab.blank_id)) {
    if (id == vocab.eos_id) break;
    out.push_back(vocab.char_of(id));
  }
  return out;
}

EvalReport evaluate(const model::Model& m, const data::Dataset& dataset,
                    const std::vector<int>& indices, const Vocab& vocab,
                    const EvalOptions& options, bool use_ctc, int threads) {
  if (indices.empty()) throw std::invalid_argument("evaluate: empty dataset");
  std::map<char, char> subst;
  if (options.subst_table) subst = load_subst_table(*options.subst_table);

  const int n = static_cast<int>(indices.size());
  const int n_threads = std::max(1, threads);
  std::vector<int> correct(n_threads, 0);
  std::vector<std::string> errors(n_threads);

  auto work = [&](int tid, int begin, int end) {
    try {
      for (int i = begin; i < end; ++i) {
        const auto& sample = dataset.samples[indices[i]];
        const std::string prediction = use_ctc ? greedy_decode_ctc(m, sample.image, vocab)
                                               : greedy_decode(m, sample.image, vocab);
        if (normalize_text(prediction, subst, options) ==
            normalize_text(sample.text, subst, options))
          ++correct[tid];
      }
    } catch (const std::exception& e) {
      errors[tid] = e.what();
    }
  };
  if (n_threads == 1) {
    work(0, 0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(work, t, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("evaluate: " + e);

  EvalReport report;
  report.n_samples = n;
  for (int c : correct) report.n_correct += c;
  report.accuracy = static_cast<double>(report.n_correct) / n;
  return report;
}

namespace {

losses::LossReport<model::real> supervised_sample_loss(model::Tape& tape, const model::Model& m,
                                                       const data::Sample& sample,
                                                       const Vocab& vocab, bool use_ctc,
                                                       double drop_path_rate,
                                                       const data::AugmentOptions& augment,
                                                       Rng& rng) {
  const Image* image = &sample.image;
  Image augmented;
  if (augment.enabled) {
    augmented = data::augment(sample.image, sample.bg_level, augment, rng.next_u64());
    image = &augmented;
  }
  model::DropPathPlan drop{drop_path_rate, &rng};
  model::DropPathPlan* drop_ptr = drop_path_rate > 0 ? &drop : nullptr;
  if (use_ctc) {
    model::Var embedded = m.embed(tape, model::patchify(*image, m.config().patch_width));
    model::Var memory =
        m.add_positions(tape, m.encode(tape, embedded, nullptr, drop_ptr));
    model::Var frames = m.ctc_forward(tape, memory, drop_ptr);
    std::vector<int> ids;
    ids.reserve(sample.text.size());
    for (char c : sample.text) ids.push_back(vocab.char_id(c));
    return losses::ctc_loss(tape, frames, ids, vocab.blank_id);
  }
  model::Var logits = m.forward_recognize(tape, *image, drop_ptr);
  const LabelSeq label = encode_label(sample.text, vocab, m.config().num_queries);
  return losses::recognition_loss(tape, logits, label);
}

}  // namespace

Checkpoint finetune(model::Model& m, const std::string& parent_hash,
                    const data::Dataset& dataset, const Vocab& vocab,
                    const FinetuneOptions& options, std::ostream* log, EvalReport* best_val) {
  if (vocab.size() != m.config().vocab_size)
    throw std::invalid_argument("finetune: vocab size " + std::to_string(vocab.size()) +
                                " does not match model vocab size " +
                                std::to_string(m.config().vocab_size));
  std::vector<int> trainable;
  for (int i = 0; i < m.params().size(); ++i) trainable.push_back(i);
  optim::AdamWConfig adam;
  adam.lr = options.train.lr;
  adam.weight_decay = options.train.weight_decay;
  optim::AdamW opt(m.params(), trainable, adam);

  const double drop_rate = m.config().drop_path_rate;
  const auto loss_fn = [&](model::Tape& tape, int index,
                           Rng& rng) -> losses::LossReport<model::real> {
    return supervised_sample_loss(tape, m, dataset.samples[index], vocab, options.use_ctc,
                                  drop_rate, options.augment, rng);
  };

  const auto val = dataset.val_indices();
  std::vector<std::pair<std::string, model::Mat>> best_tensors;
  EvalReport best_report;
  bool have_best = false;
  const auto on_epoch = [&](int /*epoch*/) {
    if (!options.keep_best_on_val || val.empty()) return;
    EvalReport r = evaluate(m, dataset, val, vocab, options.eval, options.use_ctc,
                            options.train.threads);
    if (!have_best || r.accuracy > best_report.accuracy) {
      best_report = r;
      best_tensors = m.export_tensors();
      have_best = true;
    }
  };

  train::run_training(opt, dataset.train_indices(), options.train, loss_fn, log, on_epoch);

  if (have_best) {
    m.import_tensors(best_tensors);
    if (best_val) *best_val = best_report;
  }
  Rng rng_out(derive_seed(options.train.seed, "stage_rng"));
  return Checkpoint::from_model(m, kStageFinetune, parent_hash, rng_out.serialize_state());
}

Checkpoint linear_probe(model::Model& m, const std::string& parent_hash,
                        const data::Dataset& dataset, const Vocab& vocab,
                        const FinetuneOptions& options, std::ostream* log) {
  if (!m.parts().decoder) throw std::invalid_argument("linear_probe: model needs the decoder");
  const auto trainable = m.param_ids_with_prefix("head.");
  optim::AdamWConfig adam;
  adam.lr = options.train.lr;
  adam.weight_decay = options.train.weight_decay;
  optim::AdamW opt(m.params(), trainable, adam);

  train::TrainOptions train_options = options.train;
  train_options.frozen_params = train::frozen_mask(m.params().size(), trainable);

  const auto loss_fn = [&](model::Tape& tape, int index,
                           Rng& rng) -> losses::LossReport<model::real> {
    return supervised_sample_loss(tape, m, dataset.samples[index], vocab, false, 0.0, {}, rng);
  };
  train::run_training(opt, dataset.train_indices(), train_options, loss_fn, log);

  Rng rng_out(derive_seed(options.train.seed, "stage_rng"));
  return Checkpoint::from_model(m, kStageFinetune, parent_hash, rng_out.serialize_state());
}

json ExperimentSpec::to_json() const {
  json j;
  j["suite"] = suite;
  j["stages"] = stages;
  j["init"] = init;
  j["datasets"] = datasets;
  j["seeds"] = seeds;
  j["config_hash"] = config_hash;
  j["config_text"] = config_text;
  return j;
}

synth::CorpusSpec corpus_from_config(const Config& cfg) {
  synth::CorpusSpec spec;
  spec.alphabet = cfg.get_str("synth.alphabet", "abcdefghijklmnop");
  spec.len_min = static_cast<int>(cfg.get_int("synth.len_min", 3));
  spec.len_max = static_cast<int>(cfg.get_int("synth.len_max", 8));
  spec.size = static_cast<int>(cfg.get_int("synth.language_size", 5000));

  // Structured bigram: each character allows a few successors with strongly
  // skewed weights, so context carries real information about identity.
  const int n = static_cast<int>(spec.alphabet.size());
  const int branching =
      std::clamp<int>(static_cast<int>(cfg.get_int("synth.bigram_branching", 3)), 1, n);
  Rng rng(derive_seed(static_cast<std::uint64_t>(cfg.get_int("synth.corpus_seed", 101)),
                      "bigram"));
  spec.bigram_weights = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const auto successors = rng.sample_without_replacement(n, branching);
    double weight = 1.0;
    for (int j : successors) {
      spec.bigram_weights(i, j) = weight;
      weight *= 0.45;  // geometric falloff: first successor dominates
    }
  }
  return spec;
}

std::vector<synth::GlyphFont> fonts_from_config(const Config& cfg) {
  const std::string alphabet = cfg.get_str("synth.alphabet", "abcdefghijklmnop");
  const int n_fonts = static_cast<int>(cfg.get_int("synth.fonts", 2));
  const auto font_seed = static_cast<std::uint64_t>(cfg.get_int("synth.corpus_seed", 101));
  std::vector<synth::GlyphFont> fonts;
  for (int f = 0; f < n_fonts; ++f) {
    synth::FontParams params;
    params.pattern_rows = static_cast<int>(cfg.get_int("synth.font_rows", 5));
    params.pattern_cols = static_cast<int>(cfg.get_int("synth.font_cols", 3)) + (f % 2);
    params.scale_x = static_cast<int>(cfg.get_int("synth.font_scale", 2));
    params.scale_y = params.scale_x;
    fonts.push_back(synth::make_procedural_font("font" + std::to_string(f), alphabet,
                                                derive_seed(font_seed, std::uint64_t(f)), params));
  }
  return fonts;
}

synth::StyleRange style_from_config(const Config& cfg, const std::string& prefix) {
  synth::StyleRange s;
  s.bg_min = cfg.get_double(prefix + ".bg_min", s.bg_min);
  s.bg_max = cfg.get_double(prefix + ".bg_max", s.bg_max);
  s.fg_min = cfg.get_double(prefix + ".fg_min", s.fg_min);
  s.fg_max = cfg.get_double(prefix + ".fg_max", s.fg_max);
  s.noise_min = cfg.get_double(prefix + ".noise_min", s.noise_min);
  s.noise_max = cfg.get_double(prefix + ".noise_max", s.noise_max);
  s.spacing_min = static_cast<int>(cfg.get_int(prefix + ".spacing_min", s.spacing_min));
  s.spacing_max = static_cast<int>(cfg.get_int(prefix + ".spacing_max", s.spacing_max));
  return s;
}

synth::CanvasSpec canvas_from_config(const Config& cfg) {
  synth::CanvasSpec canvas;
  canvas.channels = static_cast<int>(cfg.get_int("model.channels", 3));
  canvas.height = static_cast<int>(cfg.get_int("model.height", 32));
  canvas.width = static_cast<int>(cfg.get_int("model.width", 128));
  return canvas;
}

data::LoadOptions load_options_from_config(const Config& cfg) {
  data::LoadOptions options;
  const std::string mode = cfg.get_str("data.mode", "word");
  if (mode == "word")
    options.mode = data::PreprocessMode::kWord;
  else if (mode == "line")
    options.mode = data::PreprocessMode::kLine;
  else
    throw std::runtime_error("data.mode must be 'word' or 'line', got " + mode);
  options.target.height = static_cast<int>(cfg.get_int("model.height", 32));
  options.target.width = static_cast<int>(cfg.get_int("model.width", 128));
  options.patch_width = static_cast<int>(cfg.get_int("model.patch_width", 4));
  return options;
}

Vocab vocab_from_config(const Config& cfg) {
  return Vocab::from_chars(cfg.get_str("synth.alphabet", "abcdefghijklmnop"),
                           cfg.get_bool("model.ctc_enabled", false));
}

model::Model init_model(const model::ModelConfig& cfg, const model::Parts& parts,
                        std::uint64_t seed, const Checkpoint* init) {
  model::Model m(cfg, parts, seed);
  if (init) {
    if (!init->config.compatible_with(cfg))
      throw std::runtime_error(
          "checkpoint is incompatible with the requested model configuration "
          "(geometry or vocab size differs)");
    m.import_tensors(init->tensors);
  }
  return m;
}

}  // namespace textmim::harness
