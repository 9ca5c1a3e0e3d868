// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

// Brute-force reference for small convex QPs and a random instance generator.

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>

#include <Eigen/Dense>

#include "walkstack/qp.hpp"

namespace walkstack::testing {

struct EnumerationResult {
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::infinity();
  bool feasible = false;
};

// Solves the KKT system of every active subset of the inequalities and keeps
// the best primal-feasible stationary point. The optimum is the stationary
// point of its own active set and no feasible point does better.
inline EnumerationResult enumerate_active_sets(const qp::Problem& p, double feas_tol = 1e-9) {
  const int n = p.num_variables();
  const int me = p.num_equalities();
  const int mi = p.num_inequalities();
  EnumerationResult best;
  for (std::uint32_t mask = 0; mask < (1u << mi); ++mask) {
    int k = 0;
    for (int i = 0; i < mi; ++i) k += (mask >> i) & 1u;
    const int rows = me + k;
    if (rows > n) continue;
    Eigen::MatrixXd A(rows, n);
    Eigen::VectorXd b(rows);
    if (me > 0) {
      A.topRows(me) = p.A_eq;
      b.head(me) = p.b_eq;
    }
    int r = me;
    for (int i = 0; i < mi; ++i) {
      if ((mask >> i) & 1u) {
        A.row(r) = p.A_in.row(i);
        b(r) = p.b_in(i);
        ++r;
      }
    }
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + rows, n + rows);
    K.topLeftCorner(n, n) = p.H;
    K.topRightCorner(n, rows) = A.transpose();
    K.bottomLeftCorner(rows, n) = A;
    Eigen::VectorXd rhs(n + rows);
    rhs.head(n) = -p.g;
    rhs.tail(rows) = b;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd x = lu.solve(rhs).head(n);
    if (me > 0 && (p.A_eq * x - p.b_eq).cwiseAbs().maxCoeff() > feas_tol) continue;
    if (mi > 0 && (p.A_in * x - p.b_in).maxCoeff() > feas_tol) continue;
    const double f = qp::objective(p, x);
    if (f < best.objective) {
      best.objective = f;
      best.x = x;
      best.feasible = true;
    }
  }
  return best;
}

// Random strictly convex QP. Inequalities are generated around a known
// interior point so the instance is always feasible.
inline qp::Problem random_qp(std::mt19937_64& rng, int n, int me, int mi) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.05, 1.0);
  auto gaussian = [&](int r, int c) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = normal(rng);
    return m;
  };
  qp::Problem p;
  const Eigen::MatrixXd L = gaussian(n, n);
  p.H = L * L.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  p.g = 3.0 * gaussian(n, 1);
  const Eigen::VectorXd interior = gaussian(n, 1);
  p.A_eq = gaussian(me, n);
  p.b_eq = p.A_eq * interior;
  p.A_in = gaussian(mi, n);
  p.b_in = p.A_in * interior;
  for (int i = 0; i < mi; ++i) p.b_in(i) += uni(rng);
  return p;
}

}  // namespace walkstack::testing
