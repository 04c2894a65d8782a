// SPDX-License-Identifier: Apache-2.0
//
// textmim command-line interface: dataset synthesis, the three training
// stages, evaluation, linear probing, ablation suites, and reconstruction
// dumps. All behavior is driven by a key=value config file plus a seed; every
// metric log the commands write is reproducible bit-for-bit given the same
// config, seed, and platform.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "textmim/checkpoint.hpp"
#include "textmim/harness.hpp"
#include "textmim/io.hpp"
#include "textmim/pretrain_language.hpp"
#include "textmim/pretrain_visual.hpp"

namespace fs = std::filesystem;
using namespace textmim;

namespace {

struct GlobalArgs {
  std::string config_path;
  long long seed = -1;  // -1: take the config's seed
  std::string out_dir = "out";
  std::string device = "cpu";
};

Config load_config(const GlobalArgs& g) {
  Config cfg = g.config_path.empty() ? Config{} : Config::from_file(g.config_path);
  if (g.seed >= 0) cfg.set("seed", std::to_string(g.seed));
  if (g.device != "cpu" && g.device != "0")
    throw std::runtime_error("only CPU execution is supported; --device must be 'cpu' or '0'");
  return cfg;
}

std::uint64_t config_seed(const Config& cfg) {
  return static_cast<std::uint64_t>(cfg.get_int("seed", 0));
}

int config_threads(const Config& cfg) { return static_cast<int>(cfg.get_int("threads", 2)); }

Vocab dataset_vocab(const data::Dataset& ds, const Config& cfg) {
  return Vocab::from_chars(ds.alphabet, cfg.get_bool("model.ctc_enabled", false));
}

model::ModelConfig model_config_for(const Config& cfg, const Vocab& vocab) {
  model::ModelConfig mc = model::ModelConfig::from_config(cfg);
  mc.vocab_size = vocab.size();
  return mc;
}

train::TrainOptions train_options_for(const Config& cfg, const std::string& prefix,
                                      std::uint64_t seed, double default_lr, int default_epochs,
                                      int default_batch) {
  train::TrainOptions t;
  t.epochs = static_cast<int>(cfg.get_int(prefix + ".epochs", default_epochs));
  t.batch_size = static_cast<int>(cfg.get_int(prefix + ".batch_size", default_batch));
  t.lr = cfg.get_double(prefix + ".lr", default_lr);
  t.weight_decay = cfg.get_double(prefix + ".weight_decay", 0.05);
  t.warmup_epochs = cfg.get_double(prefix + ".warmup_epochs", 0.5);
  t.threads = config_threads(cfg);
  t.seed = seed;
  t.log_every = static_cast<int>(cfg.get_int(prefix + ".log_every", 25));
  return t;
}

int cmd_synthesize(const GlobalArgs& g, const std::string& style_name, int size_override) {
  const Config cfg = load_config(g);
  const auto corpus = harness::corpus_from_config(cfg);
  const auto fonts = harness::fonts_from_config(cfg);

  synth::BuildOptions options;
  options.canvas = harness::canvas_from_config(cfg);
  options.style = harness::style_from_config(cfg, "style." + style_name);
  options.size = size_override > 0
                     ? size_override
                     : static_cast<int>(cfg.get_int("synth." + style_name + "_size", 1000));
  options.train_frac = cfg.get_double("synth.train_frac", 1.0);
  options.val_frac = cfg.get_double("synth.val_frac", 0.0);
  options.threads = config_threads(cfg);

  const fs::path out(g.out_dir);
  const auto manifest = synth::build_dataset(corpus, fonts, options, out, config_seed(cfg));
  Vocab::from_chars(corpus.alphabet, cfg.get_bool("model.ctc_enabled", false))
      .save(out / "vocab.txt");
  std::cout << "wrote " << options.size << " samples, manifest at " << manifest << "\n";
  return 0;
}

int cmd_pretrain_encoder(const GlobalArgs& g, const std::string& data_dir) {
  const Config cfg = load_config(g);
  const auto ds = data::Dataset::load(data_dir, harness::load_options_from_config(cfg));
  const Vocab vocab = dataset_vocab(ds, cfg);
  model::ModelConfig mc = model_config_for(cfg, vocab);
  mc.drop_path_rate = 0.0;

  model::Parts parts;
  parts.encoder = true;
  parts.mim_head = true;
  const std::uint64_t seed = config_seed(cfg);
  model::Model m(mc, parts, derive_seed(seed, "visual_init"));

  pretrain::VisualPretrainOptions opt;
  opt.train = train_options_for(cfg, "visual", derive_seed(seed, "visual_train"), 0.0, 4, 64);
  if (opt.train.lr <= 0.0)
    opt.train.lr = optim::scaled_lr(cfg.get_double("visual.base_lr", 1.5e-4), opt.train.batch_size);
  opt.mask_ratio = cfg.get_double("visual.mask_ratio", 0.45);
  opt.lambda = cfg.get_double("visual.lambda", 0.05);
  opt.target_from_full_image = cfg.get_bool("visual.target_from_full_image", false);

  fs::create_directories(g.out_dir);
  std::ofstream log(fs::path(g.out_dir) / "visual_metrics.jsonl");
  const Checkpoint ckpt = pretrain::pretrain_encoder(m, ds, ds.train_indices(), opt, &log);
  const fs::path ckpt_path = fs::path(g.out_dir) / "visual.ckpt";
  ckpt.save(ckpt_path);
  std::cout << "encoder checkpoint " << ckpt_path << " hash " << ckpt.content_hash() << "\n";
  return 0;
}

int cmd_pretrain_decoder(const GlobalArgs& g, const std::string& data_dir,
                         const std::string& encoder_ckpt, bool no_freeze, bool allow_scratch,
                         bool no_masking, bool use_ctc) {
  const Config cfg = load_config(g);
  const auto ds = data::Dataset::load(data_dir, harness::load_options_from_config(cfg));
  Config cfg2 = cfg;
  if (use_ctc) cfg2.set("model.ctc_enabled", "true");
  const Vocab vocab = dataset_vocab(ds, cfg2);
  model::ModelConfig mc = model_config_for(cfg2, vocab);
  mc.drop_path_rate = 0.0;

  const std::uint64_t seed = config_seed(cfg);
  model::Parts parts;
  parts.encoder = true;
  parts.decoder = !use_ctc;
  parts.ctc_head = use_ctc;

  Checkpoint parent;
  const Checkpoint* parent_ptr = nullptr;
  std::string parent_stage = kStageScratch;
  std::string parent_hash;
  if (!encoder_ckpt.empty()) {
    parent = Checkpoint::load(encoder_ckpt);
    parent_ptr = &parent;
    parent_stage = parent.stage;
    parent_hash = parent.content_hash();
  }
  model::Model m = harness::init_model(mc, parts, derive_seed(seed, "language_init"), parent_ptr);

  pretrain::LanguagePretrainOptions opt;
  opt.train = train_options_for(cfg, "language", derive_seed(seed, "language_train"), 1e-4, 5, 64);
  opt.char_mask_ratio = cfg.get_double("language.char_mask_ratio", 0.15);
  opt.freeze_encoder = !no_freeze;
  opt.allow_unpretrained_encoder = allow_scratch;
  opt.masking_enabled = !no_masking;
  opt.use_ctc = use_ctc;

  fs::create_directories(g.out_dir);
  std::ofstream log(fs::path(g.out_dir) / "language_metrics.jsonl");
  const Checkpoint ckpt = pretrain::pretrain_decoder(m, parent_stage, parent_hash, ds,
                                                     ds.train_indices(), vocab, opt, &log);
  const fs::path ckpt_path = fs::path(g.out_dir) / "language.ckpt";
  ckpt.save(ckpt_path);
  std::cout << "decoder checkpoint " << ckpt_path << " hash " << ckpt.content_hash() << "\n";
  return 0;
}

int cmd_finetune(const GlobalArgs& g, const std::string& data_dir, const std::string& init,
                 bool use_ctc) {
  const Config cfg = load_config(g);
  const auto ds = data::Dataset::load(data_dir, harness::load_options_from_config(cfg));
  Config cfg2 = cfg;
  if (use_ctc) cfg2.set("model.ctc_enabled", "true");
  const Vocab vocab = dataset_vocab(ds, cfg2);
  const model::ModelConfig mc = model_config_for(cfg2, vocab);

  Checkpoint parent;
  const Checkpoint* parent_ptr = nullptr;
  if (init != "scratch") {
    parent = Checkpoint::load(init);
    parent_ptr = &parent;
  }
  const std::uint64_t seed = config_seed(cfg);
  model::Parts parts;
  parts.encoder = true;
  parts.decoder = !use_ctc;
  parts.ctc_head = use_ctc;
  model::Model m = harness::init_model(mc, parts, derive_seed(seed, "finetune_init"), parent_ptr);

  harness::FinetuneOptions opt;
  const double default_lr = parent_ptr ? cfg.get_double("finetune.lr_pretrained", 1e-4)
                                       : cfg.get_double("finetune.lr_scratch", 1e-3);
  opt.train = train_options_for(cfg, "finetune", derive_seed(seed, "finetune_train"), default_lr,
                                8, 32);
  opt.use_ctc = use_ctc;
  opt.augment.enabled = cfg.get_bool("augment.enabled", false);
  opt.augment.max_rotate_deg = cfg.get_double("augment.max_rotate_deg", 3.0);
  opt.augment.max_brightness = cfg.get_double("augment.max_brightness", 0.1);

  fs::create_directories(g.out_dir);
  std::ofstream log(fs::path(g.out_dir) / "finetune_metrics.jsonl");
  harness::EvalReport val;
  const Checkpoint ckpt = finetune(
      m, parent_ptr ? parent.content_hash() : std::string{}, ds, vocab, opt, &log, &val);
  const fs::path ckpt_path = fs::path(g.out_dir) / "finetune.ckpt";
  ckpt.save(ckpt_path);
  std::cout << "finetuned checkpoint " << ckpt_path << " hash " << ckpt.content_hash() << "\n";
  if (val.n_samples > 0)
    std::cout << "best validation accuracy " << val.accuracy << " on " << val.n_samples
              << " samples\n";
  return 0;
}

int cmd_probe(const GlobalArgs& g, const std::string& data_dir, const std::string& init) {
  const Config cfg = load_config(g);
  const auto ds = data::Dataset::load(data_dir, harness::load_options_from_config(cfg));
  const Vocab vocab = dataset_vocab(ds, cfg);
  const model::ModelConfig mc = model_config_for(cfg, vocab);

  Checkpoint parent;
  const Checkpoint* parent_ptr = nullptr;
  if (init != "scratch") {
    parent = Checkpoint::load(init);
    parent_ptr = &parent;
  }
  const std::uint64_t seed = config_seed(cfg);
  model::Parts parts;
  parts.encoder = true;
  parts.decoder = true;
  model::Model m = harness::init_model(mc, parts, derive_seed(seed, "probe_init"), parent_ptr);

  harness::FinetuneOptions opt;
  opt.train = train_options_for(cfg, "probe", derive_seed(seed, "probe_train"),
                                cfg.get_double("probe.lr", 1e-3), 4, 32);
  fs::create_directories(g.out_dir);
  std::ofstream log(fs::path(g.out_dir) / "probe_metrics.jsonl");
  linear_probe(m, parent_ptr ? parent.content_hash() : std::string{}, ds, vocab, opt, &log);

  auto eval_indices = ds.test_indices();
  if (eval_indices.empty()) eval_indices = ds.val_indices();
  if (eval_indices.empty()) eval_indices = ds.train_indices();
  const auto report = harness::evaluate(m, ds, eval_indices, vocab, opt.eval, false,
                                        config_threads(cfg));
  nlohmann::json j{{"accuracy", report.accuracy},
                   {"n_samples", report.n_samples},
                   {"n_correct", report.n_correct}};
  io::atomic_write_file(fs::path(g.out_dir) / "probe_eval.json", j.dump(2) + "\n");
  std::cout << "probe accuracy " << report.accuracy << " on " << report.n_samples << " samples\n";
  return 0;
}

int cmd_eval(const GlobalArgs& g, const std::string& data_dir, const std::string& ckpt_path,
             const std::string& subst, bool use_ctc) {
  const Config cfg = load_config(g);
  const auto ds = data::Dataset::load(data_dir, harness::load_options_from_config(cfg));
  Config cfg2 = cfg;
  if (use_ctc) cfg2.set("model.ctc_enabled", "true");
  const Vocab vocab = dataset_vocab(ds, cfg2);
  const model::ModelConfig mc = model_config_for(cfg2, vocab);

  const Checkpoint ckpt = Checkpoint::load(ckpt_path);
  model::Parts parts;
  parts.encoder = true;
  parts.decoder = !use_ctc;
  parts.ctc_head = use_ctc;
  model::Model m = harness::init_model(mc, parts, /*seed=*/0, &ckpt);

  harness::EvalOptions opt;
  opt.lowercase = cfg.get_bool("eval.lowercase", true);
  opt.strip_spaces = cfg.get_bool("eval.strip_spaces", true);
  if (!subst.empty()) opt.subst_table = subst;

  auto indices = ds.test_indices();
  if (indices.empty()) indices = ds.all_indices();
  const auto report = harness::evaluate(m, ds, indices, vocab, opt, use_ctc, config_threads(cfg));
  fs::create_directories(g.out_dir);
  nlohmann::json j{{"accuracy", report.accuracy},
                   {"n_samples", report.n_samples},
                   {"n_correct", report.n_correct},
                   {"checkpoint_hash", ckpt.content_hash()}};
  io::atomic_write_file(fs::path(g.out_dir) / "eval.json", j.dump(2) + "\n");
  std::cout << "sequence accuracy " << report.accuracy << " (" << report.n_correct << "/"
            << report.n_samples << ")\n";
  return 0;
}

int cmd_ablate(const GlobalArgs& g, const std::string& suite) {
  const Config cfg = load_config(g);
  std::vector<std::uint64_t> seeds;
  if (cfg.has("ablate.seeds")) {
    std::istringstream ss(cfg.get_str("ablate.seeds", ""));
    std::string tok;
    while (std::getline(ss, tok, ',')) seeds.push_back(std::stoull(tok));
  } else {
    const auto base = config_seed(cfg);
    const auto n = static_cast<int>(cfg.get_int("ablate.n_seeds", 3));
    for (int i = 0; i < n; ++i) seeds.push_back(base + static_cast<std::uint64_t>(i));
  }
  const auto result = harness::run_ablation(suite, cfg, g.out_dir, seeds, &std::cout);
  std::cout << io::read_text_file(fs::path(g.out_dir) / suite / "summary.txt");
  return 0;
}

int cmd_reconstruct_dump(const GlobalArgs& g, const std::string& data_dir,
                         const std::string& ckpt_path, int count) {
  const Config cfg = load_config(g);
  const auto ds = data::Dataset::load(data_dir, harness::load_options_from_config(cfg));
  const Checkpoint ckpt = Checkpoint::load(ckpt_path);

  model::Parts parts;
  parts.encoder = true;
  parts.mim_head = true;
  model::ModelConfig mc = ckpt.config;
  model::Model m(mc, parts, /*seed=*/0);
  m.import_tensors(ckpt.tensors);

  std::vector<int> indices;
  for (int i = 0; i < std::min<int>(count, static_cast<int>(ds.samples.size())); ++i)
    indices.push_back(i);
  fs::create_directories(g.out_dir);
  const fs::path out = fs::path(g.out_dir) / "reconstructions.ppm";
  pretrain::reconstruct_dump(m, ds, indices, cfg.get_double("visual.mask_ratio", 0.45),
                             config_seed(cfg), out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"masked encoder-decoder pretraining for text recognition"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "key=value config file")->envname("TEXTMIM_CONFIG");
  app.add_option("--seed", g.seed, "global seed (overrides the config's `seed`)");
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--device", g.device, "compute device (cpu only)");

  auto* synthesize = app.add_subcommand("synthesize", "render a synthetic dataset");
  std::string style = "real";
  int size_override = 0;
  synthesize->add_option("--style", style, "style range prefix: real or synth");
  synthesize->add_option("--size", size_override, "sample count (overrides config)");

  std::string data_dir;
  auto* pre_enc = app.add_subcommand("pretrain-encoder", "stage 1: masked image modeling");
  pre_enc->add_option("--data", data_dir, "dataset directory")->required();

  auto* pre_dec =
      app.add_subcommand("pretrain-decoder", "stage 2: masked image-language modeling");
  std::string encoder_ckpt;
  bool no_freeze = false, allow_scratch = false, no_masking = false, dec_ctc = false;
  pre_dec->add_option("--data", data_dir, "dataset directory")->required();
  pre_dec->add_option("--encoder", encoder_ckpt, "visually pretrained encoder checkpoint");
  pre_dec->add_flag("--no-freeze", no_freeze, "retrain the encoder (ablation mode)");
  pre_dec->add_flag("--allow-scratch-encoder", allow_scratch,
                    "permit a randomly initialized encoder (language-only ablation)");
  pre_dec->add_flag("--no-masking", no_masking, "disable character masking (ablation mode)");
  pre_dec->add_flag("--ctc", dec_ctc, "pretrain the CTC-variant sequence head");

  auto* ft = app.add_subcommand("finetune", "supervised recognition training");
  std::string init = "scratch";
  bool ft_ctc = false;
  ft->add_option("--data", data_dir, "dataset directory")->required();
  ft->add_option("--init", init, "checkpoint path or 'scratch'");
  ft->add_flag("--ctc", ft_ctc, "finetune the CTC variant");

  auto* probe = app.add_subcommand("probe", "linear probing of frozen representations");
  probe->add_option("--data", data_dir, "dataset directory")->required();
  probe->add_option("--init", init, "checkpoint path or 'scratch'");

  auto* ev = app.add_subcommand("eval", "sequence-accuracy evaluation");
  std::string ckpt_path, subst;
  bool eval_ctc = false;
  ev->add_option("--data", data_dir, "dataset directory")->required();
  ev->add_option("--ckpt", ckpt_path, "checkpoint to evaluate")->required();
  ev->add_option("--subst", subst, "optional character substitution table");
  ev->add_flag("--ctc", eval_ctc, "decode with the CTC head");

  auto* ablate = app.add_subcommand("ablate", "run an ablation suite");
  std::string suite;
  ablate
      ->add_option("--suite", suite,
                   "vl_table | freeze_table | vl_freeze | mask_ratio_sweep | lang_mask_table | "
                   "patch_size | ctc_generalizability")
      ->required();

  auto* rd = app.add_subcommand("reconstruct-dump", "masked-image reconstruction triptych");
  int rd_count = 8;
  rd->add_option("--data", data_dir, "dataset directory")->required();
  rd->add_option("--ckpt", ckpt_path, "visually pretrained checkpoint")->required();
  rd->add_option("--n", rd_count, "number of samples in the grid");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synthesize->parsed()) return cmd_synthesize(g, style, size_override);
    if (pre_enc->parsed()) return cmd_pretrain_encoder(g, data_dir);
    if (pre_dec->parsed())
      return cmd_pretrain_decoder(g, data_dir, encoder_ckpt, no_freeze, allow_scratch, no_masking,
                                  dec_ctc);
    if (ft->parsed()) return cmd_finetune(g, data_dir, init, ft_ctc);
    if (probe->parsed()) return cmd_probe(g, data_dir, init);
    if (ev->parsed()) return cmd_eval(g, data_dir, ckpt_path, subst, eval_ctc);
    if (ablate->parsed()) return cmd_ablate(g, suite);
    if (rd->parsed()) return cmd_reconstruct_dump(g, data_dir, ckpt_path, rd_count);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
