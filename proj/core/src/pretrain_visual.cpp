// SPDX-License-Identifier: Apache-2.0
#include "textmim/pretrain_visual.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "textmim/io.hpp"
#include "textmim/losses.hpp"

namespace textmim::pretrain {

MaskPlan sample_patch_mask(int n_patches, double ratio, Rng& rng) {
  if (n_patches < 2) throw std::invalid_argument("sample_patch_mask: need at least 2 patches");
  if (ratio <= 0.0 || ratio >= 1.0)
    throw std::invalid_argument("sample_patch_mask: ratio must be in (0, 1)");
  const int n_masked = std::max(1, static_cast<int>(std::floor(ratio * n_patches)));
  MaskPlan plan;
  plan.total = n_patches;
  plan.masked = rng.sample_without_replacement(n_patches, n_masked);
  std::sort(plan.masked.begin(), plan.masked.end());
  std::vector<bool> is_masked(n_patches, false);
  for (int i : plan.masked) is_masked[i] = true;
  for (int i = 0; i < n_patches; ++i)
    if (!is_masked[i]) plan.visible.push_back(i);
  return plan;
}

losses::LossReport<model::real> mim_sample_loss(model::Tape& tape, const model::Model& m,
                                                const Image& image, const MaskPlan& plan,
                                                const VisualPretrainOptions& options) {
  const auto& cfg = m.config();
  const model::Mat patches = model::patchify(image, cfg.patch_width);
  if (plan.total != cfg.n_patches())
    throw std::invalid_argument("mim_sample_loss: mask plan size != patch count");

  std::vector<std::uint8_t> visible_mask(plan.total, 0);
  for (int i : plan.visible) visible_mask[i] = 1;

  model::Var embedded = m.embed(tape, patches);
  model::Var reps = m.encode(tape, embedded, &visible_mask);
  model::Var visible_reps = tape.rows_gather(reps, plan.visible);
  model::Var latent_pred = m.regress_masked(tape, visible_reps, plan.visible, plan.masked);

  // Alignment targets from the encoder itself; mim_loss blocks their gradient.
  model::Var target_reps;
  if (options.target_from_full_image) {
    target_reps = m.encode(tape, embedded, nullptr);
  } else {
    std::vector<std::uint8_t> complement(plan.total, 0);
    for (int i : plan.masked) complement[i] = 1;
    target_reps = m.encode(tape, embedded, &complement);
  }
  model::Var latent_target = tape.rows_gather(target_reps, plan.masked);

  model::Var pixel_pred = m.decode_pixels(tape, latent_pred);
  model::Mat masked_pixels(static_cast<Eigen::Index>(plan.masked.size()), patches.cols());
  for (std::size_t i = 0; i < plan.masked.size(); ++i)
    masked_pixels.row(static_cast<Eigen::Index>(i)) = patches.row(plan.masked[i]);
  model::Var pixel_target =
      tape.constant(losses::patch_pixel_target<model::real>(masked_pixels));

  return losses::mim_loss(tape, pixel_pred, pixel_target, latent_pred, latent_target,
                          static_cast<model::real>(options.lambda));
}

Checkpoint pretrain_encoder(model::Model& m, const data::Dataset& dataset,
                            const std::vector<int>& indices, const VisualPretrainOptions& options,
                            std::ostream* log) {
  if (!m.parts().encoder || !m.parts().mim_head)
    throw std::invalid_argument("pretrain_encoder: model must own encoder and MIM head");
  if (m.parts().decoder)
    throw std::invalid_argument("pretrain_encoder: stage-1 model must not own a decoder");

  std::vector<int> trainable;
  for (int i = 0; i < m.params().size(); ++i) trainable.push_back(i);
  optim::AdamWConfig adam;
  adam.lr = options.train.lr;
  adam.weight_decay = options.train.weight_decay;
  optim::AdamW opt(m.params(), trainable, adam);

  const auto loss_fn = [&](model::Tape& tape, int index,
                           Rng& rng) -> losses::LossReport<model::real> {
    const auto& sample = dataset.samples[index];
    const MaskPlan plan = sample_patch_mask(m.config().n_patches(), options.mask_ratio, rng);
    return mim_sample_loss(tape, m, sample.image, plan, options);
  };
  train::run_training(opt, indices, options.train, loss_fn, log);

  Rng rng_out(derive_seed(options.train.seed, "stage_rng"));
  return Checkpoint::from_model(m, kStageVisualPretrain, /*parent_hash=*/"",
                                rng_out.serialize_state());
}

namespace {

float gray_at(const Image& img, int y, int x) { return img.at(0, y, x); }

}  // namespace

void reconstruct_dump(const model::Model& m, const data::Dataset& dataset,
                      const std::vector<int>& indices, double mask_ratio, std::uint64_t seed,
                      const std::filesystem::path& out_path) {
  if (indices.empty()) throw std::invalid_argument("reconstruct_dump: no samples");
  const auto& cfg = m.config();
  const int pw = cfg.patch_width;
  const int cell_h = cfg.height, cell_w = cfg.width;
  const int sep = 2;
  const int grid_w = 3 * cell_w + 4 * sep;
  const int grid_h = static_cast<int>(indices.size()) * (cell_h + sep) + sep;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(grid_h) * grid_w * 3, 40);

  auto put_gray = [&](int top, int left, int y, int x, float value) {
    const float v = std::clamp(value, 0.f, 1.f);
    const auto byte = static_cast<std::uint8_t>(std::lround(v * 255.f));
    const std::size_t base = (static_cast<std::size_t>(top + y) * grid_w + (left + x)) * 3;
    rgb[base] = rgb[base + 1] = rgb[base + 2] = byte;
  };

  for (std::size_t row = 0; row < indices.size(); ++row) {
    const auto& sample = dataset.samples[indices[row]];
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(row)));
    const MaskPlan plan = sample_patch_mask(cfg.n_patches(), mask_ratio, rng);
    std::vector<std::uint8_t> visible_mask(plan.total, 0);
    for (int i : plan.visible) visible_mask[i] = 1;

    model::Tape tape;
    const model::Mat patches = model::patchify(sample.image, pw);
    model::Var embedded = m.embed(tape, patches);
    model::Var reps = m.encode(tape, embedded, &visible_mask);
    model::Var visible_reps = tape.rows_gather(reps, plan.visible);
    model::Var latent_pred = m.regress_masked(tape, visible_reps, plan.visible, plan.masked);
    const model::Mat predicted = tape.value(m.decode_pixels(tape, latent_pred));

    // Reconstruction: visible patches keep their pixels; masked patches are
    // the predictions mapped back through each patch's own mean/stddev.
    model::Mat recon = patches;
    for (std::size_t i = 0; i < plan.masked.size(); ++i) {
      const int p = plan.masked[i];
      const model::real mean = patches.row(p).mean();
      const model::real sd =
          std::sqrt((patches.row(p).array() - mean).square().mean()) + model::real(1e-6);
      recon.row(p) = predicted.row(static_cast<Eigen::Index>(i)) * sd +
                     model::Mat::Constant(1, patches.cols(), mean);
    }
    const Image recon_img = model::unpatchify(recon, cfg.channels, cfg.height, pw);

    std::vector<bool> is_masked(plan.total, false);
    for (int i : plan.masked) is_masked[i] = true;

    const int top = static_cast<int>(row) * (cell_h + sep) + sep;
    for (int y = 0; y < cell_h; ++y)
      for (int x = 0; x < cell_w; ++x) {
        put_gray(top, sep, y, x, gray_at(sample.image, y, x));
        const bool hidden = is_masked[x / pw];
        put_gray(top, 2 * sep + cell_w, y, x, hidden ? 0.5f : gray_at(sample.image, y, x));
        put_gray(top, 3 * sep + 2 * cell_w, y, x, gray_at(recon_img, y, x));
      }
  }
  io::save_ppm(out_path, rgb, grid_h, grid_w);
}

}  // namespace textmim::pretrain
