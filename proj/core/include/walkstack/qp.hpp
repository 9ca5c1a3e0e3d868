// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace walkstack::qp {

/// Dense convex quadratic program
///
///   minimize    1/2 x'Hx + g'x
///   subject to  A_eq x  = b_eq
///               A_in x <= b_in
///
/// H must be symmetric positive semidefinite; the solver adds a small
/// multiple of the identity (Options::regularization) before factorizing.
struct Problem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;

  /// Zero-initialized problem with the given dimensions.
  static Problem zeros(int n, int m_eq, int m_in);

  int num_variables() const { return static_cast<int>(g.size()); }
  int num_equalities() const { return static_cast<int>(b_eq.size()); }
  int num_inequalities() const { return static_cast<int>(b_in.size()); }

  /// Throws ConfigError on inconsistent dimensions or an asymmetric Hessian.
  void validate() const;
};

enum class Status { Optimal, Infeasible, IterLimit };

std::string_view to_string(Status s);

struct Solution {
  Eigen::VectorXd x;
  /// Multipliers under the convention H x + g + A_eq' lambda_eq + A_in' lambda_in = 0.
  Eigen::VectorXd lambda_eq;
  Eigen::VectorXd lambda_in;
  /// Inequality rows in the final working set, ascending.
  std::vector<int> active_set;
  Status status = Status::IterLimit;
  double kkt_residual = 0.0;
  int iterations = 0;
  /// Index of the most violated inequality row when status is Infeasible
  /// (-1 when the equality constraints themselves are inconsistent).
  int violated_row = -1;
};

struct Options {
  double tol = 1e-8;
  int max_iter = 1000;
  double regularization = 1e-9;
  std::optional<std::vector<int>> warm_start;
};

/// Primal active-set method on the null space of the equality constraints.
///
/// Equalities are eliminated once through a rank-revealing QR factorization
/// of A_eq'. The remaining inequality-constrained problem is solved by a
/// primal active-set iteration started from a feasible point; when neither
/// the warm start nor the unconstrained minimizer is feasible, a phase-1
/// problem minimizing a single slack finds one (or certifies infeasibility).
/// Ties in the ratio test and in constraint removal go to the lowest index.
Solution solve(const Problem& problem, const Options& options = {});

/// max of stationarity, primal feasibility, dual feasibility and
/// complementarity violations (infinity norms).
double kkt_residual(const Problem& problem, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& lambda_eq, const Eigen::VectorXd& lambda_in);

double objective(const Problem& problem, const Eigen::VectorXd& x);

/// Keeps the last active set and feeds it back as a warm start.
class Solver {
 public:
  explicit Solver(Options options = {}) : options_(std::move(options)) {}

  Solution solve(const Problem& problem);
  void reset() { last_active_.clear(); }
  const Options& options() const { return options_; }
  Options& options() { return options_; }

 private:
  Options options_;
  std::vector<int> last_active_;
};

/// Text dump used to reproduce a problem offline. Layout: a magic line
/// "walkstack-qp 1", a line "n m_eq m_in", then the sections H, g, A_eq,
/// b_eq, A_in, b_in, each introduced by its name on its own line and
/// followed by the row-major entries, one matrix row per line.
void write_problem(std::ostream& os, const Problem& problem);
Problem read_problem(std::istream& is);

}  // namespace walkstack::qp
