// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace textmim::ad {

// Reverse-mode tape over dense Eigen matrices. Templated on the scalar so
// training runs in float while gradient checks run the identical code in
// double. One tape per forward pass; leaves referencing model parameters
// accumulate their gradients into an external GradSink indexed by parameter
// id, which keeps batch accumulation deterministic (sink merge order is
// fixed by the caller).
template <class S>
struct GradSink {
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  std::vector<Mat> grads;

  void ensure(int index, Eigen::Index rows, Eigen::Index cols) {
    if (index >= static_cast<int>(grads.size())) grads.resize(index + 1);
    if (grads[index].size() == 0) grads[index] = Mat::Zero(rows, cols);
  }
  void add_to(std::vector<Mat>& total) const {
    if (total.size() < grads.size()) total.resize(grads.size());
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (grads[i].size() == 0) continue;
      if (total[i].size() == 0)
        total[i] = grads[i];
      else
        total[i] += grads[i];
    }
  }
  void clear() { grads.clear(); }
};

template <class S>
class Tape {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  explicit Tape(GradSink<S>* sink = nullptr) : sink_(sink) {}

  void reset() { nodes_.clear(); }

  // Frozen parameters enter the graph as constants: no gradient is computed
  // through them, which both enforces freeze contracts structurally and skips
  // their backward work entirely.
  void set_frozen(std::vector<std::uint8_t> frozen) { frozen_ = std::move(frozen); }
  bool is_frozen(int param_index) const {
    return param_index >= 0 && param_index < static_cast<int>(frozen_.size()) &&
           frozen_[param_index] != 0;
  }

  const Mat& value(Var v) const { return node(v.id).val(); }
  Eigen::Index rows(Var v) const { return value(v).rows(); }
  Eigen::Index cols(Var v) const { return value(v).cols(); }
  const Mat& gradient(Var v) const { return node(v.id).grad; }

  // ---- leaves ----

  // Parameter leaf; `storage` must outlive the tape. Gradient goes to the sink.
  Var param(int param_index, const Mat& storage) {
    Node n;
    n.ref = &storage;
    n.needs_grad = sink_ != nullptr && !is_frozen(param_index);
    n.param_index = param_index;
    return push(std::move(n));
  }

  Var constant(Mat value) {
    Node n;
    n.owned = std::move(value);
    return push(std::move(n));
  }

  // Differentiable leaf whose gradient stays on the tape (gradient checks).
  Var input(Mat value) {
    Node n;
    n.owned = std::move(value);
    n.needs_grad = true;
    return push(std::move(n));
  }

  // ---- elementwise / structural ----

  Var add(Var a, Var b) {
    check_same_shape(a, b, "add");
    Node n;
    n.owned = value(a) + value(b);
    return push_unary_binary(std::move(n), a, b, [this, a, b](const Mat& g) {
      accumulate(a, g);
      accumulate(b, g);
    });
  }

  Var sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    Node n;
    n.owned = value(a) - value(b);
    return push_unary_binary(std::move(n), a, b, [this, a, b](const Mat& g) {
      accumulate(a, g);
      accumulate(b, Mat(-g));
    });
  }

  Var scale(Var a, S s) {
    Node n;
    n.owned = value(a) * s;
    return push_unary_binary(std::move(n), a, Var{}, [this, a, s](const Mat& g) {
      accumulate(a, Mat(g * s));
    });
  }

  // a (m x n) + row vector r (1 x n) broadcast over rows.
  Var add_rowvec(Var a, Var r) {
    if (cols(a) != cols(r) || rows(r) != 1)
      throw std::invalid_argument("add_rowvec: shape mismatch");
    Node n;
    n.owned = value(a).rowwise() + value(r).row(0);
    return push_unary_binary(std::move(n), a, r, [this, a, r](const Mat& g) {
      accumulate(a, g);
      accumulate(r, Mat(g.colwise().sum()));
    });
  }

  Var matmul(Var a, Var b) {
    if (cols(a) != rows(b)) throw std::invalid_argument("matmul: inner dims differ");
    Node n;
    n.owned = value(a) * value(b);
    return push_unary_binary(std::move(n), a, b, [this, a, b](const Mat& g) {
      if (needs_grad(a)) accumulate(a, Mat(g * value(b).transpose()));
      if (needs_grad(b)) accumulate(b, Mat(value(a).transpose() * g));
    });
  }

  Var transpose(Var a) {
    Node n;
    n.owned = value(a).transpose();
    return push_unary_binary(std::move(n), a, Var{}, [this, a](const Mat& g) {
      accumulate(a, Mat(g.transpose()));
    });
  }

  Var stop_gradient(Var a) {
    Node n;
    n.owned = value(a);
    n.needs_grad = false;  // cuts the graph on purpose
    return push(std::move(n));
  }

  Var rows_gather(Var a, std::vector<int> idx) {
    const Mat& v = value(a);
    for (int i : idx)
      if (i < 0 || i >= v.rows()) throw std::out_of_range("rows_gather: index out of range");
    Mat out(static_cast<Eigen::Index>(idx.size()), v.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = v.row(idx[r]);
    Node n;
    n.owned = std::move(out);
    return push_unary_binary(std::move(n), a, Var{}, [this, a, idx = std::move(idx)](const Mat& g) {
      Mat ga = Mat::Zero(value(a).rows(), value(a).cols());
      for (std::size_t r = 0; r < idx.size(); ++r)
        ga.row(idx[r]) += g.row(static_cast<Eigen::Index>(r));
      accumulate(a, ga);
    });
  }

  // Place the rows of `a` at `idx` within a total_rows-tall zero matrix.
  Var rows_scatter(Var a, Eigen::Index total_rows, std::vector<int> idx) {
    const Mat& v = value(a);
    if (static_cast<Eigen::Index>(idx.size()) != v.rows())
      throw std::invalid_argument("rows_scatter: index count != rows");
    Mat out = Mat::Zero(total_rows, v.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      if (idx[r] < 0 || idx[r] >= total_rows) throw std::out_of_range("rows_scatter: bad index");
      out.row(idx[r]) = v.row(static_cast<Eigen::Index>(r));
    }
    Node n;
    n.owned = std::move(out);
    return push_unary_binary(std::move(n), a, Var{}, [this, a, idx = std::move(idx)](const Mat& g) {
      Mat ga(static_cast<Eigen::Index>(idx.size()), g.cols());
      for (std::size_t r = 0; r < idx.size(); ++r)
        ga.row(static_cast<Eigen::Index>(r)) = g.row(idx[r]);
      accumulate(a, ga);
    });
  }

  Var cols_block(Var a, Eigen::Index start, Eigen::Index n_cols) {
    if (start < 0 || start + n_cols > cols(a)) throw std::out_of_range("cols_block: range");
    Node n;
    n.owned = value(a).middleCols(start, n_cols);
    return push_unary_binary(std::move(n), a, Var{}, [this, a, start, n_cols](const Mat& g) {
      Mat ga = Mat::Zero(value(a).rows(), value(a).cols());
      ga.middleCols(start, n_cols) = g;
      accumulate(a, ga);
    });
  }

  Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
    Eigen::Index r = rows(parts[0]), total = 0;
    for (Var p : parts) {
      if (rows(p) != r) throw std::invalid_argument("concat_cols: row mismatch");
      total += cols(p);
    }
    Mat out(r, total);
    Eigen::Index at = 0;
    std::vector<Eigen::Index> offsets;
    bool any_grad = false;
    for (Var p : parts) {
      offsets.push_back(at);
      out.middleCols(at, cols(p)) = value(p);
      at += cols(p);
      any_grad = any_grad || needs_grad(p);
    }
    Node n;
    n.owned = std::move(out);
    n.needs_grad = any_grad;
    Var v = push(std::move(n));
    if (any_grad) {
      node(v.id).back = [this, parts, offsets](const Mat& g) {
        for (std::size_t i = 0; i < parts.size(); ++i)
          accumulate(parts[i], Mat(g.middleCols(offsets[i], value(parts[i]).cols())));
      };
    }
    return v;
  }

  // ---- nonlinearities ----

  Var gelu(Var a) {
    const Mat& x = value(a);
    Mat y(x.rows(), x.cols());
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double xi = static_cast<double>(x(i));
      y(i) = static_cast<S>(xi * 0.5 * (1.0 + std::erf(xi * inv_sqrt2)));
    }
    Node n;
    n.owned = std::move(y);
    return push_unary_binary(std::move(n), a, Var{}, [this, a](const Mat& g) {
      const Mat& x = value(a);
      Mat ga(x.rows(), x.cols());
      constexpr double inv_sqrt2 = 0.7071067811865475244;
      const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = static_cast<double>(x(i));
        const double cdf = 0.5 * (1.0 + std::erf(xi * inv_sqrt2));
        const double pdf = inv_sqrt2pi * std::exp(-0.5 * xi * xi);
        ga(i) = static_cast<S>(g(i) * static_cast<S>(cdf + xi * pdf));
      }
      accumulate(a, ga);
    });
  }

  // Row-wise softmax. When `visible` is non-empty only those columns take
  // part; hidden columns get probability exactly 0 for every row. Rows are
  // never restricted: a hidden query row still yields a defined distribution
  // over the visible keys.
  Var softmax_rows(Var a, std::vector<std::uint8_t> visible = {}) {
    const Mat& x = value(a);
    if (!visible.empty() && static_cast<Eigen::Index>(visible.size()) != x.cols())
      throw std::invalid_argument("softmax_rows: mask size != cols");
    if (!visible.empty()) {
      bool any = false;
      for (auto v : visible) any = any || v != 0;
      if (!any) throw std::invalid_argument("softmax_rows: all columns masked");
    }
    Mat y = Mat::Zero(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      S mx = -std::numeric_limits<S>::infinity();
      for (Eigen::Index c = 0; c < x.cols(); ++c)
        if (visible.empty() || visible[c]) mx = std::max(mx, x(r, c));
      S denom = 0;
      for (Eigen::Index c = 0; c < x.cols(); ++c)
        if (visible.empty() || visible[c]) {
          y(r, c) = std::exp(x(r, c) - mx);
          denom += y(r, c);
        }
      for (Eigen::Index c = 0; c < x.cols(); ++c)
        if (visible.empty() || visible[c]) y(r, c) /= denom;
    }
    Node n;
    n.owned = std::move(y);
    Var out = push_unary_binary(std::move(n), a, Var{},
                                [this, a, out_id = static_cast<int>(nodes_.size())](const Mat& g) {
                                  const Mat& p = node(out_id).val();
                                  Mat ga(p.rows(), p.cols());
                                  for (Eigen::Index r = 0; r < p.rows(); ++r) {
                                    const S dot = g.row(r).cwiseProduct(p.row(r)).sum();
                                    ga.row(r) = p.row(r).cwiseProduct(g.row(r).array().matrix() -
                                                                      Mat::Constant(1, p.cols(), dot));
                                  }
                                  accumulate(a, ga);
                                });
    return out;
  }

  // Pre-norm transformer LayerNorm over each row with learnable gain/bias.
  Var layer_norm_rows(Var x, Var gamma, Var beta, S eps) {
    const Mat& xv = value(x);
    if (rows(gamma) != 1 || cols(gamma) != xv.cols() || rows(beta) != 1 || cols(beta) != xv.cols())
      throw std::invalid_argument("layer_norm_rows: gamma/beta must be 1 x cols");
    const Eigen::Index nc = xv.cols();
    Mat xhat(xv.rows(), nc);
    Mat inv_std(xv.rows(), 1);
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
      const S mu = xv.row(r).mean();
      const S var = (xv.row(r).array() - mu).square().mean();
      const S is = S(1) / std::sqrt(var + eps);
      inv_std(r, 0) = is;
      xhat.row(r) = (xv.row(r).array() - mu).matrix() * is;
    }
    Mat y = (xhat.array().rowwise() * value(gamma).row(0).array()).matrix();
    y.rowwise() += value(beta).row(0);
    Node n;
    n.owned = std::move(y);
    n.needs_grad = needs_grad(x) || needs_grad(gamma) || needs_grad(beta);
    Var out = push(std::move(n));
    if (node(out.id).needs_grad) {
      node(out.id).back = [this, x, gamma, beta, xhat = std::move(xhat),
                           inv_std = std::move(inv_std)](const Mat& g) {
        if (needs_grad(beta)) accumulate(beta, Mat(g.colwise().sum()));
        if (needs_grad(gamma)) accumulate(gamma, Mat(g.cwiseProduct(xhat).colwise().sum()));
        if (needs_grad(x)) {
          const auto& gm = value(gamma).row(0);
          Mat gx(xhat.rows(), xhat.cols());
          const S n_inv = S(1) / static_cast<S>(xhat.cols());
          for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
            Eigen::Matrix<S, 1, Eigen::Dynamic> gy = g.row(r).cwiseProduct(gm);
            const S mean_gy = gy.mean();
            const S mean_gy_xhat = gy.cwiseProduct(xhat.row(r)).mean();
            gx.row(r) = (gy.array() - mean_gy - xhat.row(r).array() * mean_gy_xhat).matrix() *
                        inv_std(r, 0);
            (void)n_inv;
          }
          accumulate(x, gx);
        }
      };
    }
    return out;
  }

  // ---- reductions / losses ----

  // mean((a - b)^2) over all elements; 1x1 result.
  Var mse(Var a, Var b) {
    check_same_shape(a, b, "mse");
    const Mat diff = value(a) - value(b);
    const S inv_count = S(1) / static_cast<S>(diff.size());
    Mat out(1, 1);
    out(0, 0) = diff.array().square().sum() * inv_count;
    Node n;
    n.owned = std::move(out);
    return push_unary_binary(std::move(n), a, b, [this, a, b, diff, inv_count](const Mat& g) {
      const Mat d = diff * (S(2) * inv_count * g(0, 0));
      if (needs_grad(a)) accumulate(a, d);
      if (needs_grad(b)) accumulate(b, Mat(-d));
    });
  }

  // Mean cross-entropy over the selected logit rows only. `targets[i]` is the
  // class id supervised at row `positions[i]`. Rows not listed contribute
  // neither loss nor gradient.
  Var cross_entropy_selected(Var logits, const std::vector<int>& positions,
                             const std::vector<int>& targets) {
    if (positions.empty()) throw std::invalid_argument("cross_entropy_selected: no positions");
    if (positions.size() != targets.size())
      throw std::invalid_argument("cross_entropy_selected: positions/targets size mismatch");
    const Mat& z = value(logits);
    for (std::size_t i = 0; i < positions.size(); ++i) {
      if (positions[i] < 0 || positions[i] >= z.rows())
        throw std::out_of_range("cross_entropy_selected: row out of range");
      if (targets[i] < 0 || targets[i] >= z.cols())
        throw std::out_of_range("cross_entropy_selected: class out of range");
    }
    S total = 0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const auto r = positions[i];
      const S mx = z.row(r).maxCoeff();
      S denom = 0;
      for (Eigen::Index c = 0; c < z.cols(); ++c) denom += std::exp(z(r, c) - mx);
      total += std::log(denom) + mx - z(r, targets[i]);
    }
    const S inv_count = S(1) / static_cast<S>(positions.size());
    Mat out(1, 1);
    out(0, 0) = total * inv_count;
    Node n;
    n.owned = std::move(out);
    return push_unary_binary(
        std::move(n), logits, Var{},
        [this, logits, positions, targets, inv_count](const Mat& g) {
          const Mat& z = value(logits);
          Mat gz = Mat::Zero(z.rows(), z.cols());
          for (std::size_t i = 0; i < positions.size(); ++i) {
            const auto r = positions[i];
            const S mx = z.row(r).maxCoeff();
            Eigen::Matrix<S, 1, Eigen::Dynamic> p = (z.row(r).array() - mx).exp().matrix();
            p /= p.sum();
            gz.row(r) += p * (inv_count * g(0, 0));
            gz(r, targets[i]) -= inv_count * g(0, 0);
          }
          accumulate(logits, gz);
        });
  }

  // CTC negative log-likelihood of `targets` under frame logits (T x V+1),
  // log-space forward recursion; gradient via the alpha-beta posterior.
  Var ctc_nll(Var logits, const std::vector<int>& targets, int blank_id) {
    const Mat& z = value(logits);
    const Eigen::Index T = z.rows();
    const Eigen::Index V = z.cols();
    if (blank_id < 0 || blank_id >= V) throw std::invalid_argument("ctc_nll: bad blank id");
    for (int t : targets)
      if (t < 0 || t >= V || t == blank_id) throw std::invalid_argument("ctc_nll: bad target id");
    Eigen::Index required = static_cast<Eigen::Index>(targets.size());
    for (std::size_t i = 1; i < targets.size(); ++i)
      if (targets[i] == targets[i - 1]) ++required;
    if (T < required)
      throw std::invalid_argument("ctc_nll: target needs " + std::to_string(required) +
                                  " frames but only " + std::to_string(T) + " available");

    // log-softmax per frame
    Mat logp(T, V);
    for (Eigen::Index t = 0; t < T; ++t) {
      const S mx = z.row(t).maxCoeff();
      S denom = 0;
      for (Eigen::Index c = 0; c < V; ++c) denom += std::exp(z(t, c) - mx);
      const S lse = std::log(denom) + mx;
      logp.row(t) = z.row(t).array() - lse;
    }

    const Eigen::Index L = static_cast<Eigen::Index>(targets.size());
    const Eigen::Index E = 2 * L + 1;  // blank-interleaved target
    std::vector<int> ext(E, blank_id);
    for (Eigen::Index i = 0; i < L; ++i) ext[2 * i + 1] = targets[i];
    const S neg_inf = -std::numeric_limits<S>::infinity();
    auto lse2 = [](S a, S b) {
      if (a == -std::numeric_limits<S>::infinity()) return b;
      if (b == -std::numeric_limits<S>::infinity()) return a;
      const S m = std::max(a, b);
      return m + std::log(std::exp(a - m) + std::exp(b - m));
    };

    Mat alpha = Mat::Constant(T, E, neg_inf);
    alpha(0, 0) = logp(0, ext[0]);
    if (E > 1) alpha(0, 1) = logp(0, ext[1]);
    for (Eigen::Index t = 1; t < T; ++t) {
      for (Eigen::Index s = 0; s < E; ++s) {
        S acc = alpha(t - 1, s);
        if (s >= 1) acc = lse2(acc, alpha(t - 1, s - 1));
        if (s >= 2 && ext[s] != blank_id && ext[s] != ext[s - 2])
          acc = lse2(acc, alpha(t - 1, s - 2));
        alpha(t, s) = acc == neg_inf ? neg_inf : acc + logp(t, ext[s]);
      }
    }
    S log_prob = alpha(T - 1, E - 1);
    if (E > 1) log_prob = lse2(log_prob, alpha(T - 1, E - 2));
    if (!(log_prob > neg_inf))
      throw std::runtime_error("ctc_nll: zero-probability alignment set");

    Mat out(1, 1);
    out(0, 0) = -log_prob;
    Node n;
    n.owned = std::move(out);
    return push_unary_binary(
        std::move(n), logits, Var{},
        [this, logits, targets, blank_id, logp = std::move(logp), alpha = std::move(alpha), ext,
         log_prob, lse2](const Mat& g) {
          const Eigen::Index T = logp.rows();
          const Eigen::Index V = logp.cols();
          const Eigen::Index E = static_cast<Eigen::Index>(ext.size());
          const S neg_inf = -std::numeric_limits<S>::infinity();
          Mat beta = Mat::Constant(T, E, neg_inf);
          beta(T - 1, E - 1) = 0;
          if (E > 1) beta(T - 1, E - 2) = 0;
          for (Eigen::Index t = T - 2; t >= 0; --t) {
            for (Eigen::Index s = 0; s < E; ++s) {
              S acc = beta(t + 1, s) == neg_inf ? neg_inf : beta(t + 1, s) + logp(t + 1, ext[s]);
              if (s + 1 < E && beta(t + 1, s + 1) != neg_inf)
                acc = lse2(acc, beta(t + 1, s + 1) + logp(t + 1, ext[s + 1]));
              if (s + 2 < E && ext[s + 2] != blank_id && ext[s + 2] != ext[s] &&
                  beta(t + 1, s + 2) != neg_inf)
                acc = lse2(acc, beta(t + 1, s + 2) + logp(t + 1, ext[s + 2]));
              beta(t, s) = acc;
            }
          }
          // dL/dlogp(t,k) = -sum_{s: ext[s]=k} exp(alpha+beta-logP)
          Mat dlogp = Mat::Zero(T, V);
          for (Eigen::Index t = 0; t < T; ++t)
            for (Eigen::Index s = 0; s < E; ++s) {
              if (alpha(t, s) == neg_inf || beta(t, s) == neg_inf) continue;
              dlogp(t, ext[s]) -= std::exp(alpha(t, s) + beta(t, s) - log_prob);
            }
          // chain through log-softmax: dz = dlogp - softmax * rowsum(dlogp)
          Mat gz(T, V);
          for (Eigen::Index t = 0; t < T; ++t) {
            const S row_sum = dlogp.row(t).sum();
            gz.row(t) = dlogp.row(t) - logp.row(t).array().exp().matrix() * row_sum;
          }
          accumulate(logits, Mat(gz * g(0, 0)));
        });
  }

  // ---- backward driver ----

  void backward(Var loss) {
    Node& ln = node(loss.id);
    if (ln.val().rows() != 1 || ln.val().cols() != 1)
      throw std::invalid_argument("backward: loss must be 1x1");
    if (!ln.needs_grad) return;  // nothing upstream wants gradients
    ln.grad = Mat::Constant(1, 1, S(1));
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.needs_grad || n.grad.size() == 0) continue;
      if (n.param_index >= 0 && sink_) {
        sink_->ensure(n.param_index, n.val().rows(), n.val().cols());
        sink_->grads[n.param_index] += n.grad;
      }
      if (n.back) n.back(n.grad);
    }
  }

  bool needs_grad(Var v) const { return v.valid() && node(v.id).needs_grad; }

 private:
  struct Node {
    Mat owned;
    const Mat* ref = nullptr;
    Mat grad;
    bool needs_grad = false;
    int param_index = -1;
    std::function<void(const Mat&)> back;

    const Mat& val() const { return ref ? *ref : owned; }
  };

  Node& node(int id) { return nodes_.at(id); }
  const Node& node(int id) const { return nodes_.at(id); }

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  // Common path: result needs grad iff any operand does; install closure only
  // when somebody will consume it.
  Var push_unary_binary(Node n, Var a, Var b, std::function<void(const Mat&)> back) {
    n.needs_grad = needs_grad(a) || needs_grad(b);
    if (n.needs_grad) n.back = std::move(back);
    return push(std::move(n));
  }

  void accumulate(Var v, const Mat& g) {
    if (!needs_grad(v)) return;
    Node& n = node(v.id);
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  void check_same_shape(Var a, Var b, const char* op) const {
    if (rows(a) != rows(b) || cols(a) != cols(b))
      throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }

  std::vector<Node> nodes_;
  GradSink<S>* sink_ = nullptr;
  std::vector<std::uint8_t> frozen_;
};

using TapeF = Tape<float>;
using TapeD = Tape<double>;

}  // namespace textmim::ad
