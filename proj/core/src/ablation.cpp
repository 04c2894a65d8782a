// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include "textmim/harness.hpp"
#include "textmim/io.hpp"

namespace textmim::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::pair<double, double> mean_sample_std(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

train::TrainOptions stage_train_options(const Config& cfg, const std::string& prefix,
                                        std::uint64_t seed, double default_lr, int default_epochs,
                                        int default_batch) {
  train::TrainOptions t;
  t.epochs = static_cast<int>(cfg.get_int(prefix + ".epochs", default_epochs));
  t.batch_size = static_cast<int>(cfg.get_int(prefix + ".batch_size", default_batch));
  t.lr = cfg.get_double(prefix + ".lr", default_lr);
  t.weight_decay = cfg.get_double(prefix + ".weight_decay", 0.05);
  t.warmup_epochs = cfg.get_double(prefix + ".warmup_epochs", 0.5);
  t.threads = static_cast<int>(cfg.get_int("threads", 2));
  t.seed = seed;
  t.log_every = static_cast<int>(cfg.get_int(prefix + ".log_every", 25));
  return t;
}

// One ablation row: which pretraining stages run and how.
struct CellSpec {
  std::string name;
  bool visual = false;
  bool language = false;
  bool freeze = true;
  bool masking = true;
  bool ctc = false;
  double mask_ratio = -1.0;  // -1: visual.mask_ratio from config
  int patch_width = 0;       // 0: model.patch_width from config
  std::optional<double> reference_fullscale;
};

struct SuiteDef {
  std::vector<CellSpec> cells;
};

SuiteDef suite_definition(const std::string& suite) {
  auto cell = [](std::string name) {
    CellSpec c;
    c.name = std::move(name);
    return c;
  };
  SuiteDef def;
  if (suite == "vl_table" || suite == "freeze_table" || suite == "vl_freeze") {
    CellSpec scratch = cell("scratch");
    scratch.reference_fullscale = 75.8;
    CellSpec v = cell("v");
    v.visual = true;
    v.reference_fullscale = 79.8;
    CellSpec l = cell("l");
    l.language = true;
    l.reference_fullscale = 77.7;
    CellSpec vl = cell("v+l");
    vl.visual = vl.language = true;
    vl.reference_fullscale = 80.8;
    CellSpec retrain = cell("retrain_encoder");
    retrain.visual = retrain.language = true;
    retrain.freeze = false;
    retrain.reference_fullscale = 76.7;
    if (suite == "vl_table") def.cells = {scratch, v, l, vl};
    if (suite == "freeze_table") {
      CellSpec fix = vl;
      fix.name = "fix_encoder";
      def.cells = {scratch, retrain, fix};
    }
    if (suite == "vl_freeze") def.cells = {scratch, v, l, vl, retrain};
    return def;
  }
  if (suite == "mask_ratio_sweep") {
    for (const auto& [ratio, ref] :
         std::vector<std::pair<double, double>>{{0.30, 79.3}, {0.45, 79.8}, {0.60, 79.4}}) {
      std::ostringstream name;
      name << "ratio_" << std::fixed << std::setprecision(2) << ratio;
      CellSpec c = cell(name.str());
      c.visual = true;
      c.mask_ratio = ratio;
      c.reference_fullscale = ref;
      def.cells.push_back(c);
    }
    return def;
  }
  if (suite == "lang_mask_table") {
    CellSpec l_nomask = cell("l_without_masking");
    l_nomask.language = true;
    l_nomask.masking = false;
    l_nomask.reference_fullscale = 76.1;
    CellSpec l_mask = cell("l_with_masking");
    l_mask.language = true;
    l_mask.reference_fullscale = 77.7;
    CellSpec vl_nomask = cell("v+l_without_masking");
    vl_nomask.visual = vl_nomask.language = true;
    vl_nomask.masking = false;
    vl_nomask.reference_fullscale = 80.5;
    CellSpec vl_mask = cell("v+l_with_masking");
    vl_mask.visual = vl_mask.language = true;
    vl_mask.reference_fullscale = 80.8;
    def.cells = {l_nomask, l_mask, vl_nomask, vl_mask};
    return def;
  }
  if (suite == "patch_size") {
    CellSpec p4 = cell("patch_32x4");
    p4.patch_width = 4;
    p4.reference_fullscale = 75.8;
    CellSpec p8 = cell("patch_32x8");
    p8.patch_width = 8;
    p8.reference_fullscale = 72.2;
    def.cells = {p4, p8};
    return def;
  }
  if (suite == "ctc_generalizability") {
    CellSpec scratch = cell("ctc_scratch");
    scratch.ctc = true;
    scratch.reference_fullscale = 76.7;
    CellSpec vl = cell("ctc_v+l");
    vl.ctc = vl.visual = vl.language = true;
    vl.reference_fullscale = 80.1;
    def.cells = {scratch, vl};
    return def;
  }
  throw std::invalid_argument(
      "unknown ablation suite '" + suite +
      "' (expected vl_table, freeze_table, vl_freeze, mask_ratio_sweep, lang_mask_table, "
      "patch_size, or ctc_generalizability)");
}

std::string dataset_fingerprint(const Config& cfg) {
  std::ostringstream fp;
  for (const auto& [k, v] : cfg.entries())
    if (k.rfind("synth.", 0) == 0 || k.rfind("style.", 0) == 0 || k == "model.channels" ||
        k == "model.height" || k == "model.width" || k == "data.mode")
      fp << k << '=' << v << '\n';
  return io::sha256_hex(fp.str());
}

}  // namespace

ToyDatasets build_toy_datasets(const Config& cfg, const fs::path& out_dir) {
  const fs::path root = out_dir / "datasets";
  ToyDatasets paths{root / "visual", root / "language", root / "finetune", root / "test"};

  const std::string fingerprint = dataset_fingerprint(cfg);
  const fs::path stamp = root / "build_hash.txt";
  bool reusable = fs::exists(stamp);
  if (reusable) reusable = io::read_text_file(stamp) == fingerprint;
  for (const auto& dir :
       {paths.visual_dir, paths.language_dir, paths.finetune_dir, paths.test_dir})
    reusable = reusable && fs::exists(dir / "manifest.jsonl");
  if (reusable) return paths;

  const auto corpus = corpus_from_config(cfg);
  const auto fonts = fonts_from_config(cfg);
  const auto canvas = canvas_from_config(cfg);
  const auto real_style = style_from_config(cfg, "style.real");
  const auto synth_style = style_from_config(cfg, "style.synth");
  const auto data_seed = static_cast<std::uint64_t>(cfg.get_int("synth.data_seed", 2024));
  const int threads = static_cast<int>(cfg.get_int("threads", 2));

  // Visual pretraining sees target-style ("real") images without labels used;
  // language pretraining sees the differently-styled synthetic rendering.
  synth::BuildOptions visual_opts;
  visual_opts.size = static_cast<int>(cfg.get_int("synth.visual_size", 5000));
  visual_opts.canvas = canvas;
  visual_opts.style = real_style;
  visual_opts.threads = threads;
  synth::build_dataset(corpus, fonts, visual_opts, paths.visual_dir,
                       derive_seed(data_seed, "visual"));

  synth::BuildOptions language_opts = visual_opts;
  language_opts.size = static_cast<int>(cfg.get_int("synth.language_size", 5000));
  language_opts.style = synth_style;
  synth::build_dataset(corpus, fonts, language_opts, paths.language_dir,
                       derive_seed(data_seed, "language"));

  synth::BuildOptions finetune_opts = visual_opts;
  finetune_opts.size = static_cast<int>(cfg.get_int("synth.finetune_size", 2000));
  finetune_opts.train_frac = 1.0 - cfg.get_double("synth.finetune_val_frac", 0.1);
  finetune_opts.val_frac = cfg.get_double("synth.finetune_val_frac", 0.1);
  synth::build_dataset(corpus, fonts, finetune_opts, paths.finetune_dir,
                       derive_seed(data_seed, "finetune"));

  synth::BuildOptions test_opts = visual_opts;
  test_opts.size = static_cast<int>(cfg.get_int("synth.test_size", 500));
  test_opts.train_frac = 0.0;
  test_opts.val_frac = 0.0;
  synth::build_dataset(corpus, fonts, test_opts, paths.test_dir, derive_seed(data_seed, "test"));

  io::atomic_write_file(stamp, fingerprint);
  return paths;
}

namespace {

// Runs cells x seeds for one suite; caches the shared visual checkpoint per
// (seed, ratio, patch width).
class SuiteRunner {
 public:
  SuiteRunner(const Config& cfg, const fs::path& suite_dir, const ToyDatasets& paths,
              std::ostream* progress)
      : cfg_(cfg), suite_dir_(suite_dir), progress_(progress) {
    const auto load = load_options_from_config(cfg);
    ds_visual_ = data::Dataset::load(paths.visual_dir, load);
    ds_language_ = data::Dataset::load(paths.language_dir, load);
    ds_finetune_ = data::Dataset::load(paths.finetune_dir, load);
    ds_test_ = data::Dataset::load(paths.test_dir, load);
    vocab_ = vocab_from_config(cfg);
    mcfg_ = model::ModelConfig::from_config(cfg);
    mcfg_.vocab_size = vocab_.size();
    threads_ = static_cast<int>(cfg.get_int("threads", 2));
  }

  fs::path run_dir(const std::string& cell, std::uint64_t seed) const {
    return suite_dir_ / "runs" / cell / ("seed" + std::to_string(seed));
  }

  double run_cell(const CellSpec& cell, std::uint64_t seed, json* record) {
    const fs::path dir = run_dir(cell.name, seed);
    fs::create_directories(dir);
    model::ModelConfig mcfg = mcfg_;
    if (cell.patch_width > 0) mcfg.patch_width = cell.patch_width;
    mcfg.ctc_enabled = mcfg.ctc_enabled || cell.ctc;

    const Checkpoint* finetune_init = nullptr;
    Checkpoint visual, language;
    if (cell.visual) {
      visual = shared_visual(seed, cell.mask_ratio, mcfg, dir);
      finetune_init = &visual;
      (*record)["visual_hash"] = visual.content_hash();
    }
    if (cell.language) {
      language = run_language(seed, cell, cell.visual ? &visual : nullptr, mcfg, dir);
      language.save(dir / "language.ckpt");
      finetune_init = &language;
      (*record)["language_hash"] = language.content_hash();
    }
    const double accuracy = run_finetune_eval(seed, cell, finetune_init, mcfg, dir, record);
    if (progress_)
      (*progress_) << "[" << cell.name << " seed=" << seed << "] test_accuracy=" << accuracy
                   << "\n";
    return accuracy;
  }

 private:
  Checkpoint shared_visual(std::uint64_t seed, double ratio_override,
                           const model::ModelConfig& mcfg, const fs::path& cell_dir) {
    const double ratio =
        ratio_override > 0 ? ratio_override : cfg_.get_double("visual.mask_ratio", 0.45);
    std::ostringstream key;
    key << seed << ':' << ratio << ':' << mcfg.patch_width << ':' << mcfg.ctc_enabled;
    auto it = visual_cache_.find(key.str());
    if (it != visual_cache_.end()) return it->second;

    model::Parts parts;
    parts.encoder = true;
    parts.mim_head = true;
    model::ModelConfig stage_cfg = mcfg;
    stage_cfg.drop_path_rate = 0.0;  // stochastic depth is a finetuning knob
    model::Model m(stage_cfg, parts, derive_seed(seed, "visual_init"));

    pretrain::VisualPretrainOptions opt;
    const int default_batch = 64;
    opt.train = stage_train_options(cfg_, "visual", derive_seed(seed, "visual_train"),
                                    /*default_lr=*/0.0, /*default_epochs=*/4, default_batch);
    if (opt.train.lr <= 0.0)
      opt.train.lr =
          optim::scaled_lr(cfg_.get_double("visual.base_lr", 1.5e-4), opt.train.batch_size);
    opt.mask_ratio = ratio;
    opt.lambda = cfg_.get_double("visual.lambda", 0.05);

    std::ofstream log(cell_dir / "visual.jsonl");
    Checkpoint ckpt =
        pretrain::pretrain_encoder(m, ds_visual_, ds_visual_.all_indices(), opt, &log);
    ckpt.save(cell_dir / "visual.ckpt");
    visual_cache_[key.str()] = ckpt;
    return ckpt;
  }

  Checkpoint run_language(std::uint64_t seed, const CellSpec& cell, const Checkpoint* parent,
                          const model::ModelConfig& mcfg, const fs::path& dir) {
    model::Parts parts;
    parts.encoder = true;
    parts.decoder = !cell.ctc;
    parts.ctc_head = cell.ctc;
    model::ModelConfig stage_cfg = mcfg;
    stage_cfg.drop_path_rate = 0.0;
    model::Model m = init_model(stage_cfg, parts, derive_seed(seed, "language_init"), parent);

    pretrain::LanguagePretrainOptions opt;
    opt.train = stage_train_options(cfg_, "language", derive_seed(seed, "language_train"),
                                    /*default_lr=*/1e-4, /*default_epochs=*/5, 64);
    opt.char_mask_ratio = cfg_.get_double("language.char_mask_ratio", 0.15);
    opt.freeze_encoder = cell.freeze;
    opt.allow_unpretrained_encoder = parent == nullptr;
    opt.masking_enabled = cell.masking;
    opt.use_ctc = cell.ctc;

    std::ofstream log(dir / "language.jsonl");
    return pretrain::pretrain_decoder(m, parent ? parent->stage : kStageScratch,
                                      parent ? parent->content_hash() : std::string{},
                                      ds_language_, ds_language_.all_indices(), vocab_, opt,
                                      &log);
  }

  double run_finetune_eval(std::uint64_t seed, const CellSpec& cell, const Checkpoint* init,
                           const model::ModelConfig& mcfg, const fs::path& dir, json* record) {
    model::Parts parts;
    parts.encoder = true;
    parts.decoder = !cell.ctc;
    parts.ctc_head = cell.ctc;
    model::Model m = init_model(mcfg, parts, derive_seed(seed, "finetune_init"), init);

    FinetuneOptions opt;
    const double lr = init ? cfg_.get_double("finetune.lr_pretrained", 1e-4)
                           : cfg_.get_double("finetune.lr_scratch", 1e-3);
    opt.train = stage_train_options(cfg_, "finetune", derive_seed(seed, "finetune_train"), lr,
                                    /*default_epochs=*/8, 32);
    opt.train.lr = cfg_.has("finetune.lr") ? cfg_.get_double("finetune.lr", lr) : lr;
    opt.use_ctc = cell.ctc;

    std::ofstream log(dir / "finetune.jsonl");
    EvalReport val;
    Checkpoint ckpt = finetune(m, init ? init->content_hash() : std::string{}, ds_finetune_,
                               vocab_, opt, &log, &val);
    ckpt.save(dir / "finetune.ckpt");

    EvalReport test = evaluate(m, ds_test_, ds_test_.test_indices(), vocab_, opt.eval, cell.ctc,
                               threads_);
    (*record)["finetune_hash"] = ckpt.content_hash();
    (*record)["val_accuracy"] = val.n_samples > 0 ? val.accuracy : -1.0;
    (*record)["test_accuracy"] = test.accuracy;
    (*record)["n_test"] = test.n_samples;
    return test.accuracy;
  }

  const Config& cfg_;
  fs::path suite_dir_;
  std::ostream* progress_;
  data::Dataset ds_visual_, ds_language_, ds_finetune_, ds_test_;
  Vocab vocab_;
  model::ModelConfig mcfg_;
  int threads_ = 1;
  std::map<std::string, Checkpoint> visual_cache_;
};

}  // namespace

AblationResult run_ablation(const std::string& suite, const Config& cfg,
                            const fs::path& out_dir, const std::vector<std::uint64_t>& seeds,
                            std::ostream* progress) {
  if (seeds.empty()) throw std::invalid_argument("run_ablation: need at least one seed");
  SuiteDef def = suite_definition(suite);

  Config suite_cfg = cfg;
  if (suite == "ctc_generalizability") suite_cfg.set("model.ctc_enabled", "true");

  const fs::path suite_dir = out_dir / suite;
  fs::create_directories(suite_dir);
  const ToyDatasets paths = build_toy_datasets(suite_cfg, out_dir);
  SuiteRunner runner(suite_cfg, suite_dir, paths, progress);

  ExperimentSpec spec;
  spec.suite = suite;
  spec.stages = {"pretrain_visual", "pretrain_language", "finetune", "eval"};
  spec.datasets = {{"visual", paths.visual_dir.string()},
                   {"language", paths.language_dir.string()},
                   {"finetune", paths.finetune_dir.string()},
                   {"test", paths.test_dir.string()}};
  spec.seeds = seeds;
  spec.config_text = suite_cfg.canonical_text();
  spec.config_hash = io::sha256_hex(spec.config_text);
  io::atomic_write_file(suite_dir / "spec.json", spec.to_json().dump(2) + "\n");

  AblationResult result;
  result.suite = suite;
  result.report_path = suite_dir / "report.jsonl";
  std::ofstream report(result.report_path, std::ios::trunc);

  for (const auto& cell : def.cells) {
    CellResult cr;
    cr.cell = cell.name;
    cr.reference_fullscale = cell.reference_fullscale;
    for (std::uint64_t seed : seeds) {
      json record;
      record["suite"] = suite;
      record["cell"] = cell.name;
      record["seed"] = seed;
      record["config_hash"] = spec.config_hash;
      const double accuracy = runner.run_cell(cell, seed, &record);
      cr.per_seed.push_back(accuracy);
      report << record.dump() << '\n';
      report.flush();  // partial results survive an aborted suite
    }
    const auto [mean, sd] = mean_sample_std(cr.per_seed);
    cr.mean = mean;
    cr.stddev = sd;
    result.cells.push_back(std::move(cr));
  }

  // Human-readable summary plus the bar chart.
  std::ostringstream summary;
  summary << "suite: " << suite << "\nseeds:";
  for (auto s : seeds) summary << ' ' << s;
  summary << "\n\n";
  summary << std::left << std::setw(24) << "cell" << std::right << std::setw(10) << "mean"
          << std::setw(10) << "std" << std::setw(12) << "reference" << '\n';
  std::vector<std::string> labels;
  std::vector<double> means, stds;
  for (const auto& c : result.cells) {
    summary << std::left << std::setw(24) << c.cell << std::right << std::fixed
            << std::setprecision(4) << std::setw(10) << c.mean << std::setw(10) << c.stddev;
    if (c.reference_fullscale)
      summary << std::setw(12) << std::setprecision(1) << *c.reference_fullscale;
    else
      summary << std::setw(12) << "-";
    summary << '\n';
    labels.push_back(c.cell);
    means.push_back(c.mean);
    stds.push_back(c.stddev);
  }
  summary << "\nreference column: large-scale results recorded for context, not targets at this "
             "scale.\n";
  io::atomic_write_file(suite_dir / "summary.txt", summary.str());
  write_svg_bar_chart(suite_dir / "plot.svg", suite, labels, means, stds);
  return result;
}

void write_svg_bar_chart(const fs::path& path, const std::string& title,
                         const std::vector<std::string>& labels, const std::vector<double>& means,
                         const std::vector<double>& stddevs) {
  if (labels.size() != means.size() || labels.size() != stddevs.size())
    throw std::invalid_argument("write_svg_bar_chart: size mismatch");
  const int width = 720, height = 420;
  const int margin_left = 70, margin_right = 30, margin_top = 50, margin_bottom = 70;
  const int plot_w = width - margin_left - margin_right;
  const int plot_h = height - margin_top - margin_bottom;
  double y_max = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) y_max = std::max(y_max, means[i] + stddevs[i]);
  y_max = y_max <= 0 ? 1.0 : y_max * 1.15;

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n";
  svg << "<rect width='100%' height='100%' fill='white'/>\n";
  svg << "<text x='" << width / 2 << "' y='28' text-anchor='middle' font-size='18' "
      << "font-family='sans-serif'>" << title << "</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double value = y_max * tick / 4.0;
    const double y = margin_top + plot_h - plot_h * tick / 4.0;
    svg << "<line x1='" << margin_left << "' y1='" << y << "' x2='" << margin_left + plot_w
        << "' y2='" << y << "' stroke='#dddddd'/>\n";
    svg << "<text x='" << margin_left - 8 << "' y='" << y + 4
        << "' text-anchor='end' font-size='12' font-family='sans-serif'>" << std::fixed
        << std::setprecision(3) << value << "</text>\n";
  }
  const double slot = static_cast<double>(plot_w) / static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double bar_w = slot * 0.6;
    const double x = margin_left + slot * static_cast<double>(i) + (slot - bar_w) / 2;
    const double bar_h = plot_h * means[i] / y_max;
    const double y = margin_top + plot_h - bar_h;
    svg << "<rect x='" << x << "' y='" << y << "' width='" << bar_w << "' height='" << bar_h
        << "' fill='#4878cf'/>\n";
    if (stddevs[i] > 0) {
      const double cx = x + bar_w / 2;
      const double y0 = margin_top + plot_h - plot_h * (means[i] - stddevs[i]) / y_max;
      const double y1 = margin_top + plot_h - plot_h * (means[i] + stddevs[i]) / y_max;
      svg << "<line x1='" << cx << "' y1='" << y0 << "' x2='" << cx << "' y2='" << y1
          << "' stroke='black'/>\n";
      svg << "<line x1='" << cx - 5 << "' y1='" << y0 << "' x2='" << cx + 5 << "' y2='" << y0
          << "' stroke='black'/>\n";
      svg << "<line x1='" << cx - 5 << "' y1='" << y1 << "' x2='" << cx + 5 << "' y2='" << y1
          << "' stroke='black'/>\n";
    }
    svg << "<text x='" << x + bar_w / 2 << "' y='" << margin_top + plot_h + 18
        << "' text-anchor='middle' font-size='12' font-family='sans-serif'>" << labels[i]
        << "</text>\n";
    svg << "<text x='" << x + bar_w / 2 << "' y='" << y - 6
        << "' text-anchor='middle' font-size='11' font-family='sans-serif'>" << std::fixed
        << std::setprecision(3) << means[i] << "</text>\n";
  }
  svg << "<line x1='" << margin_left << "' y1='" << margin_top + plot_h << "' x2='"
      << margin_left + plot_w << "' y2='" << margin_top + plot_h << "' stroke='black'/>\n";
  svg << "</svg>\n";
  io::atomic_write_file(path, svg.str());
}

}  // namespace textmim::harness
