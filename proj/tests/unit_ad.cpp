// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "textmim/ad.hpp"

using textmim::Rng;
using textmim::ad::TapeD;
using textmim::testutil::max_rel_error;
using textmim::testutil::numeric_gradient;
using textmim::testutil::random_matrix;
using Mat = Eigen::MatrixXd;

namespace {

// Checks tape gradients of a scalar-valued graph builder against central
// finite differences with respect to one input leaf.
template <class Builder>
void check_gradient(const Builder& build, const Mat& x0, double tolerance = 1e-6) {
  TapeD tape;
  auto x = tape.input(x0);
  auto loss = build(tape, x);
  tape.backward(loss);
  const Mat analytic = tape.gradient(x);

  const auto value_at = [&](const Mat& probe) {
    TapeD t2;
    auto v = t2.input(probe);
    return t2.value(build(t2, v))(0, 0);
  };
  const Mat numeric = numeric_gradient(value_at, x0);
  CHECK(max_rel_error(analytic, numeric) < tolerance);
}

}  // namespace

TEST_CASE("matmul/add/scale gradients match finite differences") {
  Rng rng(1);
  const Mat a0 = random_matrix(3, 4, rng);
  const Mat b = random_matrix(4, 5, rng);
  const Mat c = random_matrix(3, 5, rng);
  check_gradient(
      [&](TapeD& t, TapeD::Var x) {
        auto y = t.add(t.scale(t.matmul(x, t.constant(b)), 0.7), t.constant(c));
        return t.mse(y, t.constant(Mat::Zero(3, 5)));
      },
      a0);
}

TEST_CASE("add_rowvec broadcasts and back-propagates to the row vector") {
  Rng rng(2);
  const Mat x = random_matrix(4, 3, rng);
  const Mat r0 = random_matrix(1, 3, rng);
  check_gradient(
      [&](TapeD& t, TapeD::Var rv) {
        auto y = t.add_rowvec(t.constant(x), rv);
        return t.mse(y, t.constant(Mat::Ones(4, 3)));
      },
      r0);
}

TEST_CASE("transpose, gather, scatter, column block, concat gradients") {
  Rng rng(3);
  const Mat x0 = random_matrix(5, 6, rng);
  check_gradient(
      [&](TapeD& t, TapeD::Var x) {
        auto g = t.rows_gather(x, {4, 0, 2});
        auto s = t.rows_scatter(g, 7, {1, 3, 5});
        auto blk = t.cols_block(s, 1, 4);
        auto cat = t.concat_cols({blk, t.transpose(t.transpose(t.cols_block(blk, 0, 2)))});
        return t.mse(cat, t.constant(Mat::Zero(7, 6)));
      },
      x0);
}

TEST_CASE("gelu gradient matches finite differences") {
  Rng rng(4);
  check_gradient(
      [&](TapeD& t, TapeD::Var x) { return t.mse(t.gelu(x), t.constant(Mat::Zero(3, 3))); },
      random_matrix(3, 3, rng));
}

TEST_CASE("softmax rows: probabilities and gradient") {
  Rng rng(5);
  const Mat x0 = random_matrix(4, 6, rng);
  {
    TapeD t;
    auto p = t.softmax_rows(t.input(x0));
    for (Eigen::Index r = 0; r < 4; ++r) CHECK(t.value(p).row(r).sum() == doctest::Approx(1.0));
  }
  check_gradient(
      [&](TapeD& t, TapeD::Var x) {
        return t.mse(t.softmax_rows(x), t.constant(Mat::Constant(4, 6, 0.1)));
      },
      x0);
}

TEST_CASE("masked softmax: hidden columns get exactly zero and no gradient") {
  Rng rng(6);
  const Mat x0 = random_matrix(3, 5, rng);
  std::vector<std::uint8_t> visible{1, 0, 1, 1, 0};
  TapeD t;
  auto x = t.input(x0);
  auto p = t.softmax_rows(x, visible);
  const Mat pv = t.value(p);
  for (Eigen::Index r = 0; r < 3; ++r) {
    CHECK(pv(r, 1) == 0.0);
    CHECK(pv(r, 4) == 0.0);
    CHECK(pv.row(r).sum() == doctest::Approx(1.0));
  }
  auto loss = t.mse(p, t.constant(Mat::Constant(3, 5, 0.2)));
  t.backward(loss);
  const Mat g = t.gradient(x);
  for (Eigen::Index r = 0; r < 3; ++r) {
    CHECK(g(r, 1) == 0.0);
    CHECK(g(r, 4) == 0.0);
  }
  check_gradient(
      [&](TapeD& tt, TapeD::Var xx) {
        return tt.mse(tt.softmax_rows(xx, visible), tt.constant(Mat::Constant(3, 5, 0.2)));
      },
      x0);
}

TEST_CASE("softmax with everything masked is rejected") {
  TapeD t;
  auto x = t.input(Mat::Zero(2, 3));
  CHECK_THROWS(t.softmax_rows(x, {0, 0, 0}));
}

TEST_CASE("layer norm: value and gradients for x, gamma, beta") {
  Rng rng(7);
  const Mat x0 = random_matrix(4, 8, rng);
  const Mat gamma0 = random_matrix(1, 8, rng, 0.3);
  const Mat beta0 = random_matrix(1, 8, rng, 0.3);

  {
    TapeD t;
    auto y = t.layer_norm_rows(t.input(x0), t.constant(Mat::Ones(1, 8)),
                               t.constant(Mat::Zero(1, 8)), 1e-12);
    for (Eigen::Index r = 0; r < 4; ++r) {
      CHECK(t.value(y).row(r).mean() == doctest::Approx(0.0).epsilon(1e-9));
      const double var = t.value(y).row(r).array().square().mean();
      CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  check_gradient(
      [&](TapeD& t, TapeD::Var x) {
        return t.mse(t.layer_norm_rows(x, t.constant(gamma0), t.constant(beta0), 1e-5),
                     t.constant(Mat::Zero(4, 8)));
      },
      x0, 1e-5);
  check_gradient(
      [&](TapeD& t, TapeD::Var g) {
        return t.mse(t.layer_norm_rows(t.constant(x0), g, t.constant(beta0), 1e-5),
                     t.constant(Mat::Zero(4, 8)));
      },
      gamma0);
  check_gradient(
      [&](TapeD& t, TapeD::Var b) {
        return t.mse(t.layer_norm_rows(t.constant(x0), t.constant(gamma0), b, 1e-5),
                     t.constant(Mat::Zero(4, 8)));
      },
      beta0);
}

TEST_CASE("cross entropy on selected rows only") {
  Rng rng(8);
  const Mat z0 = random_matrix(5, 4, rng);
  check_gradient(
      [&](TapeD& t, TapeD::Var z) { return t.cross_entropy_selected(z, {0, 2, 4}, {1, 3, 0}); },
      z0);

  // unselected rows receive exactly zero gradient
  TapeD t;
  auto z = t.input(z0);
  t.backward(t.cross_entropy_selected(z, {0, 2}, {1, 2}));
  const Mat g = t.gradient(z);
  CHECK(g.row(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.row(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.row(4).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniform logits give ln(V) cross entropy") {
  TapeD t;
  auto z = t.constant(Mat::Zero(3, 7));
  auto loss = t.cross_entropy_selected(z, {0, 1, 2}, {4, 6, 0});
  CHECK(t.value(loss)(0, 0) == doctest::Approx(std::log(7.0)));
}

TEST_CASE("stop_gradient blocks the target branch") {
  Rng rng(9);
  const Mat x0 = random_matrix(3, 3, rng);
  TapeD t;
  auto x = t.input(x0);
  auto y = t.scale(x, 2.0);
  auto loss = t.mse(y, t.stop_gradient(x));  // d/dx of mean((2x - sg(x))^2) = 2*(2x-x)*2/n
  t.backward(loss);
  const Mat g = t.gradient(x);
  const Mat expected = (2.0 * (2.0 * x0 - x0) * 2.0 / 9.0);
  CHECK((g - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ctc: single frame, single symbol reduces to negative log softmax") {
  Mat z(1, 3);
  z << 0.2, -0.4, 1.1;
  TapeD t;
  auto loss = t.ctc_nll(t.input(z), {1}, 2);
  const double lse = std::log(std::exp(0.2) + std::exp(-0.4) + std::exp(1.1));
  CHECK(t.value(loss)(0, 0) == doctest::Approx(lse - (-0.4)));
}

namespace {

// Brute-force CTC oracle: enumerate every frame labeling and sum the
// probability of those that collapse to the target.
double ctc_brute_force(const Mat& logits, const std::vector<int>& target, int blank) {
  const int frames = static_cast<int>(logits.rows());
  const int classes = static_cast<int>(logits.cols());
  Mat logp(frames, classes);
  for (int f = 0; f < frames; ++f) {
    double mx = logits.row(f).maxCoeff();
    double denom = 0;
    for (int c = 0; c < classes; ++c) denom += std::exp(logits(f, c) - mx);
    for (int c = 0; c < classes; ++c) logp(f, c) = logits(f, c) - mx - std::log(denom);
  }
  double total = 0.0;
  std::vector<int> path(frames, 0);
  while (true) {
    // collapse: merge repeats then drop blanks
    std::vector<int> collapsed;
    int prev = blank;
    for (int f = 0; f < frames; ++f) {
      if (path[f] != prev && path[f] != blank) collapsed.push_back(path[f]);
      prev = path[f];
    }
    if (collapsed == target) {
      double lp = 0;
      for (int f = 0; f < frames; ++f) lp += logp(f, path[f]);
      total += std::exp(lp);
    }
    int at = frames - 1;
    while (at >= 0 && ++path[at] == classes) path[at--] = 0;
    if (at < 0) break;
  }
  return -std::log(total);
}

}  // namespace

TEST_CASE("ctc matches exhaustive enumeration and finite differences") {
  Rng rng(10);
  // M=3 frames, target "ab" (ids 0,1), V=2 plus blank at id 2.
  {
    const Mat z = random_matrix(3, 3, rng);
    TapeD t;
    auto loss = t.ctc_nll(t.input(z), {0, 1}, 2);
    CHECK(t.value(loss)(0, 0) == doctest::Approx(ctc_brute_force(z, {0, 1}, 2)).epsilon(1e-9));
  }
  // randomized small cases, including repeats and empty targets
  for (int rep = 0; rep < 25; ++rep) {
    const int frames = 1 + static_cast<int>(rng.uniform_index(5));
    const int n_chars = 1 + static_cast<int>(rng.uniform_index(3));
    const int blank = n_chars;
    const int max_len = std::min(3, frames);
    std::vector<int> target(rng.uniform_index(max_len + 1));
    for (auto& id : target) id = static_cast<int>(rng.uniform_index(n_chars));
    int required = static_cast<int>(target.size());
    for (std::size_t i = 1; i < target.size(); ++i)
      if (target[i] == target[i - 1]) ++required;
    if (required > frames) {
      target.clear();
    }
    const Mat z = random_matrix(frames, n_chars + 1, rng);
    TapeD t;
    auto loss = t.ctc_nll(t.input(z), target, blank);
    CHECK(t.value(loss)(0, 0) ==
          doctest::Approx(ctc_brute_force(z, target, blank)).epsilon(1e-7));
  }
  // gradient
  const Mat z0 = random_matrix(4, 4, rng);
  check_gradient([&](TapeD& t, TapeD::Var z) { return t.ctc_nll(z, {0, 2, 0}, 3); }, z0, 1e-5);
}

TEST_CASE("ctc rejects infeasible targets") {
  TapeD t;
  auto z = t.input(Mat::Zero(2, 3));
  CHECK_THROWS(t.ctc_nll(z, {0, 0}, 2));           // repeat needs 3 frames
  CHECK_THROWS(t.ctc_nll(z, {0, 1, 0}, 2));        // longer than frame count
  CHECK_THROWS(t.ctc_nll(z, {2}, 2));              // blank as target
  CHECK_NOTHROW(t.ctc_nll(z, {0, 1}, 2));
}

TEST_CASE("frozen parameters receive no gradient and skip the sink") {
  textmim::ad::GradSink<double> sink;
  TapeD t(&sink);
  t.set_frozen({1, 0});
  Mat w0 = Mat::Ones(2, 2);
  Mat w1 = Mat::Ones(2, 2);
  auto a = t.param(0, w0);
  auto b = t.param(1, w1);
  auto loss = t.mse(t.matmul(a, b), t.constant(Mat::Zero(2, 2)));
  t.backward(loss);
  CHECK(sink.grads.size() == 2);
  CHECK(sink.grads[0].size() == 0);  // frozen: nothing accumulated
  CHECK(sink.grads[1].size() == 4);
}
