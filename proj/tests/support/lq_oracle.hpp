// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

// Finite-horizon LQ tracking by backward Riccati recursion, used to check
// the unconstrained preview controller.

#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace walkstack::testing {

struct LqSolution {
  std::vector<Eigen::VectorXd> x;  // x_0..x_N
  std::vector<Eigen::VectorXd> u;  // u_0..u_{N-1}
};

/// minimize sum_{i=1..N} |C x_i - r_i|^2_Q + sum_{i=0..N-1} |u_i|^2_R
/// subject to x_{i+1} = A x_i + B u_i, x_0 given; r has N entries (r_1..r_N).
inline LqSolution lq_tracking(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                              const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                              const std::vector<Eigen::VectorXd>& r, const Eigen::VectorXd& x0) {
  const int N = static_cast<int>(r.size());
  const Eigen::MatrixXd CQC = C.transpose() * Q * C;
  Eigen::MatrixXd P = CQC;
  Eigen::VectorXd q = -C.transpose() * Q * r[static_cast<std::size_t>(N - 1)];
  std::vector<Eigen::MatrixXd> K(static_cast<std::size_t>(N));
  std::vector<Eigen::VectorXd> k(static_cast<std::size_t>(N));
  for (int i = N - 1; i >= 0; --i) {
    const Eigen::MatrixXd S = R + B.transpose() * P * B;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    K[static_cast<std::size_t>(i)] = ldlt.solve(B.transpose() * P * A);
    k[static_cast<std::size_t>(i)] = ldlt.solve(B.transpose() * q);
    const Eigen::MatrixXd Pn = A.transpose() * P * A - A.transpose() * P * B * K[static_cast<std::size_t>(i)];
    const Eigen::VectorXd qn = A.transpose() * (q - P * B * k[static_cast<std::size_t>(i)]);
    if (i > 0) {
      P = Pn + CQC;
      q = qn - C.transpose() * Q * r[static_cast<std::size_t>(i - 1)];
    }
  }
  LqSolution s;
  s.x.push_back(x0);
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd u = -K[static_cast<std::size_t>(i)] * s.x.back() - k[static_cast<std::size_t>(i)];
    s.u.push_back(u);
    s.x.push_back(A * s.x.back() + B * u);
  }
  return s;
}

/// Zero-order-hold discretization through the exponential of the
/// augmented matrix [[A, B], [0, 0]] dt.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> zoh_expm(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                                            double dt) {
  const auto n = A.rows(), m = B.cols();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = A * dt;
  M.topRightCorner(n, m) = B * dt;
  const Eigen::MatrixXd E = M.exp();
  return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

}  // namespace walkstack::testing
