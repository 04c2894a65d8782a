// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "textmim/checkpoint.hpp"
#include "textmim/config.hpp"
#include "textmim/data.hpp"
#include "textmim/model.hpp"
#include "textmim/pretrain_language.hpp"
#include "textmim/pretrain_visual.hpp"
#include "textmim/synth.hpp"
#include "textmim/trainer.hpp"
#include "textmim/vocab.hpp"

namespace textmim::harness {

// ---------- evaluation ----------

struct EvalOptions {
  bool lowercase = true;
  bool strip_spaces = true;
  std::optional<std::filesystem::path> subst_table;  // optional char mapping file
};

struct EvalReport {
  double accuracy = 0.0;
  int n_samples = 0;
  int n_correct = 0;
};

// Text normalization applied to predictions and ground truth alike:
// substitution table (when given), lowercase, strip spaces.
std::string normalize_text(const std::string& text, const std::map<char, char>& subst,
                           const EvalOptions& options);
std::map<char, char> load_subst_table(const std::filesystem::path& path);

// Greedy decoding: argmax per query row, truncate at the first EOS.
std::string greedy_decode(const model::Model& m, const Image& image, const Vocab& vocab);
// CTC variant: argmax per frame, collapse repeats, drop blanks.
std::string greedy_decode_ctc(const model::Model& m, const Image& image, const Vocab& vocab);

// Sequence-level exact-match accuracy on normalized strings. Empty index set
// is an error, not a NaN.
EvalReport evaluate(const model::Model& m, const data::Dataset& dataset,
                    const std::vector<int>& indices, const Vocab& vocab,
                    const EvalOptions& options, bool use_ctc = false, int threads = 1);

// ---------- supervised stages ----------

struct FinetuneOptions {
  train::TrainOptions train;
  bool use_ctc = false;
  data::AugmentOptions augment;
  EvalOptions eval;
  bool keep_best_on_val = true;
};

// Optimizes every parameter under the recognition loss (or CTC loss for the
// variant); retains the best-on-validation parameters when a validation split
// exists. Returns a finetune-tagged checkpoint.
Checkpoint finetune(model::Model& m, const std::string& parent_hash,
                    const data::Dataset& dataset, const Vocab& vocab,
                    const FinetuneOptions& options, std::ostream* log,
                    EvalReport* best_val = nullptr);

// Trains the classifier head only; everything else stays bit-identical.
Checkpoint linear_probe(model::Model& m, const std::string& parent_hash,
                        const data::Dataset& dataset, const Vocab& vocab,
                        const FinetuneOptions& options, std::ostream* log);

// ---------- experiment harness ----------

struct ExperimentSpec {
  std::string suite;
  std::vector<std::string> stages;
  std::string init = "scratch";
  std::map<std::string, std::string> datasets;  // role -> directory
  std::vector<std::uint64_t> seeds;
  std::string config_text;  // canonical key=value dump
  std::string config_hash;

  nlohmann::json to_json() const;
};

// Aggregates per-seed accuracies for one ablation row.
struct CellResult {
  std::string cell;
  std::vector<double> per_seed;
  double mean = 0.0;
  double stddev = 0.0;  // across seeds (population)
  std::optional<double> reference_fullscale;  // large-scale reference, annotation only
};

struct AblationResult {
  std::string suite;
  std::vector<CellResult> cells;
  std::filesystem::path report_path;
};

// Builds the four toy datasets (visual-pretrain / language-pretrain /
// finetune / test) under out_dir/datasets, reusing them when already present.
struct ToyDatasets {
  std::filesystem::path visual_dir;
  std::filesystem::path language_dir;
  std::filesystem::path finetune_dir;
  std::filesystem::path test_dir;
};
ToyDatasets build_toy_datasets(const Config& cfg, const std::filesystem::path& out_dir);

// Suites: vl_table, freeze_table, mask_ratio_sweep, lang_mask_table,
// patch_size, ctc_generalizability. Emits report.jsonl (one record per
// cell x seed), summary.txt, plot.svg, and spec.json under
// out_dir/<suite>/.
AblationResult run_ablation(const std::string& suite, const Config& cfg,
                            const std::filesystem::path& out_dir,
                            const std::vector<std::uint64_t>& seeds, std::ostream* progress);

// Bar chart with error whiskers; labels and values must align.
void write_svg_bar_chart(const std::filesystem::path& path, const std::string& title,
                         const std::vector<std::string>& labels, const std::vector<double>& means,
                         const std::vector<double>& stddevs);

// ---------- config-driven plumbing shared by the CLI ----------

synth::CorpusSpec corpus_from_config(const Config& cfg);
std::vector<synth::GlyphFont> fonts_from_config(const Config& cfg);
synth::StyleRange style_from_config(const Config& cfg, const std::string& prefix);
synth::CanvasSpec canvas_from_config(const Config& cfg);
data::LoadOptions load_options_from_config(const Config& cfg);
Vocab vocab_from_config(const Config& cfg);

// Creates a model, optionally initialized from a checkpoint (validating
// config compatibility, including vocab size).
model::Model init_model(const model::ModelConfig& cfg, const model::Parts& parts,
                        std::uint64_t seed, const Checkpoint* init = nullptr);

}  // namespace textmim::harness
