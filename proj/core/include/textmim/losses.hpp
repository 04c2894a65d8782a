// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "textmim/ad.hpp"
#include "textmim/vocab.hpp"

namespace textmim::losses {

// Scalar loss node plus logged component values.
template <class S>
struct LossReport {
  typename ad::Tape<S>::Var total;
  std::map<std::string, double> components;
  int counted_positions = 0;

  double value(const ad::Tape<S>& t) const { return static_cast<double>(t.value(total)(0, 0)); }
};

// Sequence recognition loss: mean cross-entropy over the characters plus the
// first EOS position only. Later positions carry no loss and no gradient.
template <class S>
LossReport<S> recognition_loss(ad::Tape<S>& t, typename ad::Tape<S>::Var logits,
                               const LabelSeq& label) {
  const int n_positions = static_cast<int>(t.rows(logits));
  const int length = label.true_length;
  if (static_cast<int>(label.ids.size()) != n_positions)
    throw std::invalid_argument("recognition_loss: label length != query count");
  if (length > n_positions - 1)
    throw std::invalid_argument("recognition_loss: no room for the first EOS (length " +
                                std::to_string(length) + ", positions " +
                                std::to_string(n_positions) + ")");
  std::vector<int> positions(length + 1);
  std::vector<int> targets(length + 1);
  for (int i = 0; i <= length; ++i) {
    positions[i] = i;
    targets[i] = label.ids[i];
  }
  LossReport<S> report;
  report.total = t.cross_entropy_selected(logits, positions, targets);
  report.counted_positions = length + 1;
  report.components["loss_recognition"] = report.value(t);
  return report;
}

// Masked-character objective: mean cross-entropy over exactly the masked
// character positions. EOS and unmasked characters contribute nothing.
template <class S>
LossReport<S> masked_char_loss(ad::Tape<S>& t, typename ad::Tape<S>::Var logits,
                               const LabelSeq& label, const std::vector<int>& masked_positions) {
  if (masked_positions.empty())
    throw std::invalid_argument("masked_char_loss: empty masked position set");
  std::vector<int> targets;
  targets.reserve(masked_positions.size());
  for (int p : masked_positions) {
    if (p < 0 || p >= label.true_length)
      throw std::out_of_range("masked_char_loss: position " + std::to_string(p) +
                              " outside the true label length " +
                              std::to_string(label.true_length));
    targets.push_back(label.ids[p]);
  }
  LossReport<S> report;
  report.total = t.cross_entropy_selected(logits, masked_positions, targets);
  report.counted_positions = static_cast<int>(masked_positions.size());
  report.components["loss_masked_char"] = report.value(t);
  return report;
}

// Per-patch standardization of raw pixels: subtract the patch mean, divide by
// the patch standard deviation (population) plus epsilon. Rows are patches.
template <class S>
Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> patch_pixel_target(
    const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& patch_pixels, S epsilon = S(1e-6)) {
  if (patch_pixels.cols() < 2)
    throw std::invalid_argument("patch_pixel_target: a patch needs at least 2 pixels");
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> out(patch_pixels.rows(), patch_pixels.cols());
  for (Eigen::Index r = 0; r < patch_pixels.rows(); ++r) {
    const S mean = patch_pixels.row(r).mean();
    const S var = (patch_pixels.row(r).array() - mean).square().mean();
    const S denom = std::sqrt(var) + epsilon;
    out.row(r) = ((patch_pixels.row(r).array() - mean) / denom).matrix();
  }
  return out;
}

// Masked image modeling loss: pixel prediction MSE plus lambda-weighted
// latent alignment MSE. The alignment target is gradient-blocked here, so the
// encoder's target branch never receives updates through it.
template <class S>
LossReport<S> mim_loss(ad::Tape<S>& t, typename ad::Tape<S>::Var pixel_pred,
                       typename ad::Tape<S>::Var pixel_target,
                       typename ad::Tape<S>::Var latent_pred,
                       typename ad::Tape<S>::Var latent_target, S lambda) {
  if (t.rows(pixel_pred) == 0) throw std::invalid_argument("mim_loss: zero masked patches");
  auto pixel = t.mse(pixel_pred, pixel_target);
  auto align = t.mse(latent_pred, t.stop_gradient(latent_target));
  LossReport<S> report;
  report.total = t.add(pixel, t.scale(align, lambda));
  report.counted_positions = static_cast<int>(t.rows(pixel_pred));
  report.components["loss_pixel"] = static_cast<double>(t.value(pixel)(0, 0));
  report.components["loss_align"] = static_cast<double>(t.value(align)(0, 0));
  return report;
}

// CTC negative log-likelihood over blank-augmented alignments (log-space
// forward recursion; see ad::Tape::ctc_nll).
template <class S>
LossReport<S> ctc_loss(ad::Tape<S>& t, typename ad::Tape<S>::Var frame_logits,
                       const std::vector<int>& target_ids, int blank_id) {
  LossReport<S> report;
  report.total = t.ctc_nll(frame_logits, target_ids, blank_id);
  report.counted_positions = static_cast<int>(target_ids.size());
  report.components["loss_ctc"] = report.value(t);
  return report;
}

}  // namespace textmim::losses
