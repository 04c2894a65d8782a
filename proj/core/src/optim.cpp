// SPDX-License-Identifier: Apache-2.0
#include "textmim/optim.hpp"

#include <stdexcept>

namespace textmim::optim {

namespace {
bool wants_decay(const std::string& name) {
  auto ends_with = [&](const char* suffix) {
    const std::string s(suffix);
    return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
  };
  return !(ends_with(".bias") || ends_with(".gamma") || ends_with(".beta"));
}
}  // namespace

AdamW::AdamW(model::ParamStore& store, std::vector<int> trainable_ids, const AdamWConfig& config)
    : store_(store), ids_(std::move(trainable_ids)), cfg_(config) {
  m_.resize(store_.size());
  v_.resize(store_.size());
  decay_.resize(store_.size(), false);
  for (int id : ids_) {
    const auto& value = store_.value(id);
    m_[id] = model::Mat::Zero(value.rows(), value.cols());
    v_[id] = model::Mat::Zero(value.rows(), value.cols());
    decay_[id] = wants_decay(store_.name(id));
  }
}

void AdamW::step(const std::vector<model::Mat>& grads, double lr_now) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (int id : ids_) {
    if (id >= static_cast<int>(grads.size()) || grads[id].size() == 0) continue;
    const model::Mat& g = grads[id];
    model::Mat& value = store_.value(id);
    if (g.rows() != value.rows() || g.cols() != value.cols())
      throw std::logic_error("AdamW: gradient shape mismatch for " + store_.name(id));
    m_[id] = static_cast<model::real>(cfg_.beta1) * m_[id] +
             static_cast<model::real>(1.0 - cfg_.beta1) * g;
    v_[id] = static_cast<model::real>(cfg_.beta2) * v_[id].array().matrix() +
             static_cast<model::real>(1.0 - cfg_.beta2) * g.array().square().matrix();
    const auto m_hat = m_[id].array() / static_cast<model::real>(bc1);
    const auto v_hat = v_[id].array() / static_cast<model::real>(bc2);
    value.array() -= static_cast<model::real>(lr_now) *
                     (m_hat / (v_hat.sqrt() + static_cast<model::real>(cfg_.eps)));
    if (decay_[id] && cfg_.weight_decay > 0)
      value.array() -= static_cast<model::real>(lr_now * cfg_.weight_decay) * value.array();
  }
}

double scaled_lr(double base_lr, int batch_size) { return base_lr * batch_size / 256.0; }

}  // namespace textmim::optim
