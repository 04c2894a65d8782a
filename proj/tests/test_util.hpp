// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>

#include "textmim/rng.hpp"

namespace textmim::testutil {

// Central finite differences of a scalar function of one matrix argument.
// Independent of the tape: rebuilds the function value from scratch at every
// probe point.
template <class F>
Eigen::MatrixXd numeric_gradient(const F& f, Eigen::MatrixXd x, double h = 1e-5) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double orig = x(i, j);
      x(i, j) = orig + h;
      const double fp = f(x);
      x(i, j) = orig - h;
      const double fm = f(x);
      x(i, j) = orig;
      g(i, j) = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

inline double max_rel_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i)
    for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
      const double a = analytic(i, j);
      const double n = numeric(i, j);
      const double denom = std::max({std::abs(a), std::abs(n), 1e-6});
      worst = std::max(worst, std::abs(a - n) / denom);
    }
  return worst;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                                     double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal(0.0, scale);
  return m;
}

}  // namespace textmim::testutil
