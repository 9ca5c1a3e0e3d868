// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkstack/qp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "walkstack/common.hpp"

namespace walkstack::qp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Problem Problem::zeros(int n, int m_eq, int m_in) {
  Problem p;
  p.H = MatrixXd::Zero(n, n);
  p.g = VectorXd::Zero(n);
  p.A_eq = MatrixXd::Zero(m_eq, n);
  p.b_eq = VectorXd::Zero(m_eq);
  p.A_in = MatrixXd::Zero(m_in, n);
  p.b_in = VectorXd::Zero(m_in);
  return p;
}

void Problem::validate() const {
  const auto n = g.size();
  if (H.rows() != n || H.cols() != n) throw ConfigError("qp: Hessian must be n x n with n = size(g)");
  if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != n))
    throw ConfigError("qp: equality block has inconsistent dimensions");
  if (A_in.rows() != b_in.size() || (A_in.rows() > 0 && A_in.cols() != n))
    throw ConfigError("qp: inequality block has inconsistent dimensions");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if (n > 0 && (H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ConfigError("qp: Hessian is not symmetric");
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::IterLimit: return "iter_limit";
  }
  return "unknown";
}

double objective(const Problem& p, const VectorXd& x) { return 0.5 * x.dot(p.H * x) + p.g.dot(x); }

double kkt_residual(const Problem& p, const VectorXd& x, const VectorXd& lambda_eq,
                    const VectorXd& lambda_in) {
  VectorXd stat = p.H * x + p.g;
  if (p.num_equalities() > 0) stat += p.A_eq.transpose() * lambda_eq;
  if (p.num_inequalities() > 0) stat += p.A_in.transpose() * lambda_in;
  double r = stat.size() > 0 ? stat.cwiseAbs().maxCoeff() : 0.0;
  if (p.num_equalities() > 0) r = std::max(r, (p.A_eq * x - p.b_eq).cwiseAbs().maxCoeff());
  if (p.num_inequalities() > 0) {
    const VectorXd slack = p.A_in * x - p.b_in;
    r = std::max(r, std::max(0.0, slack.maxCoeff()));
    r = std::max(r, std::max(0.0, -lambda_in.minCoeff()));
    r = std::max(r, lambda_in.cwiseProduct(slack).cwiseAbs().maxCoeff());
  }
  return r;
}

namespace {

// Inequality-only problem  min 1/2 w'Gw + c'w  s.t.  Cw <= d  with G PD.
struct ReducedProblem {
  MatrixXd G;
  VectorXd c;
  MatrixXd C;
  VectorXd d;
};

struct ReducedResult {
  VectorXd w;
  VectorXd lambda;
  std::vector<int> working;
  Status status = Status::IterLimit;
  int iterations = 0;
  int violated_row = -1;
};

struct Eqp {
  VectorXd w;
  VectorXd lambda;  // one per working row
  bool ok = false;
};

Eqp solve_eqp(const ReducedProblem& rp, const std::vector<int>& working, bool check_rank) {
  const auto p = rp.G.rows();
  const auto k = static_cast<Eigen::Index>(working.size());
  MatrixXd K = MatrixXd::Zero(p + k, p + k);
  VectorXd rhs(p + k);
  K.topLeftCorner(p, p) = rp.G;
  rhs.head(p) = -rp.c;
  for (Eigen::Index j = 0; j < k; ++j) {
    K.block(p + j, 0, 1, p) = rp.C.row(working[j]);
    K.block(0, p + j, p, 1) = rp.C.row(working[j]).transpose();
    rhs(p + j) = rp.d(working[j]);
  }
  Eqp out;
  Eigen::PartialPivLU<MatrixXd> lu(K);
  if (check_rank && lu.rcond() < 1e-13) return out;
  const VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) return out;
  out.w = sol.head(p);
  out.lambda = sol.tail(k);
  out.ok = true;
  return out;
}

// Scaled constraint violation of row i at w (positive when violated).
double violation(const ReducedProblem& rp, const VectorXd& row_norm, int i, const VectorXd& w) {
  return (rp.C.row(i).dot(w) - rp.d(i)) / std::max(1.0, row_norm(i));
}

// Primal active-set iteration from a feasible w.
ReducedResult primal_active_set(const ReducedProblem& rp, VectorXd w, std::vector<int> working,
                                const Options& opt, int iter_budget) {
  const auto m = rp.C.rows();
  VectorXd row_norm(m);
  for (Eigen::Index i = 0; i < m; ++i) row_norm(i) = rp.C.row(i).norm();

  ReducedResult res;
  std::vector<char> in_w(static_cast<size_t>(m), 0);
  for (int i : working) in_w[static_cast<size_t>(i)] = 1;

  int degenerate_streak = 0;
  const double step_tol = std::max(opt.tol * 1e-3, 1e-14);
  for (int iter = 0; iter < iter_budget; ++iter) {
    res.iterations = iter + 1;
    Eqp eqp = solve_eqp(rp, working, false);
    if (!eqp.ok) break;
    const VectorXd step = eqp.w - w;
    const double scale = 1.0 + w.cwiseAbs().maxCoeff();
    if (step.size() == 0 || step.cwiseAbs().maxCoeff() <= step_tol * scale) {
      w = eqp.w;
      const bool bland = degenerate_streak > 8;
      const double lam_scale = 1.0 + (eqp.lambda.size() ? eqp.lambda.cwiseAbs().maxCoeff() : 0.0);
      int drop = -1;
      double most_negative = -opt.tol * lam_scale;
      for (size_t j = 0; j < working.size(); ++j) {
        const double lj = eqp.lambda(static_cast<Eigen::Index>(j));
        if (bland) {
          if (lj < -opt.tol * lam_scale && (drop < 0 || working[j] < working[static_cast<size_t>(drop)]))
            drop = static_cast<int>(j);
        } else if (lj < most_negative) {
          most_negative = lj;
          drop = static_cast<int>(j);
        }
      }
      if (drop < 0) {
        res.status = Status::Optimal;
        res.w = w;
        res.lambda = VectorXd::Zero(m);
        for (size_t j = 0; j < working.size(); ++j)
          res.lambda(working[j]) = std::max(0.0, eqp.lambda(static_cast<Eigen::Index>(j)));
        res.working = working;
        std::sort(res.working.begin(), res.working.end());
        return res;
      }
      in_w[static_cast<size_t>(working[static_cast<size_t>(drop)])] = 0;
      working.erase(working.begin() + drop);
      continue;
    }

    double alpha = 1.0;
    int blocking = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_w[static_cast<size_t>(i)] || row_norm(i) == 0.0) continue;
      const double ap = rp.C.row(i).dot(step);
      if (ap <= 1e-14 * row_norm(i) * step.norm()) continue;
      const double slack = std::max(0.0, rp.d(i) - rp.C.row(i).dot(w));
      const double ratio = slack / ap;
      if (ratio < alpha) {
        alpha = ratio;
        blocking = static_cast<int>(i);
      }
    }
    w += alpha * step;
    if (blocking >= 0) {
      degenerate_streak = alpha == 0.0 ? degenerate_streak + 1 : 0;
      working.push_back(blocking);
      in_w[static_cast<size_t>(blocking)] = 1;
    } else {
      degenerate_streak = 0;
    }
  }
  res.status = Status::IterLimit;
  res.w = w;
  res.lambda = VectorXd::Zero(m);
  res.working = working;
  std::sort(res.working.begin(), res.working.end());
  return res;
}

ReducedResult solve_reduced(const ReducedProblem& rp, const Options& opt) {
  const auto p = rp.G.rows();
  const auto m = rp.C.rows();
  VectorXd row_norm(m);
  for (Eigen::Index i = 0; i < m; ++i) row_norm(i) = rp.C.row(i).norm();

  ReducedResult res;
  // Rows with a vanishing normal reduce to 0 <= d.
  for (Eigen::Index i = 0; i < m; ++i) {
    if (row_norm(i) == 0.0 && rp.d(i) < -opt.tol * (1.0 + std::abs(rp.d(i)))) {
      res.status = Status::Infeasible;
      res.violated_row = static_cast<int>(i);
      res.w = VectorXd::Zero(p);
      res.lambda = VectorXd::Zero(m);
      return res;
    }
  }

  std::vector<int> working;
  if (opt.warm_start) {
    for (int i : *opt.warm_start)
      if (i >= 0 && i < m && row_norm(i) > 0.0) working.push_back(i);
    std::sort(working.begin(), working.end());
    working.erase(std::unique(working.begin(), working.end()), working.end());
    if (static_cast<Eigen::Index>(working.size()) > p) working.clear();
  }

  Eqp start = solve_eqp(rp, working, true);
  if (!start.ok) {
    working.clear();
    start = solve_eqp(rp, working, true);
  }
  if (!start.ok) {
    res.status = Status::Infeasible;
    return res;
  }

  const auto max_violation = [&](const VectorXd& w, int* arg) {
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (row_norm(i) == 0.0) continue;
      const double v = violation(rp, row_norm, static_cast<int>(i), w);
      if (v > worst) {
        worst = v;
        if (arg) *arg = static_cast<int>(i);
      }
    }
    return worst;
  };

  const double feas_tol = opt.tol * (1.0 + (m ? rp.d.cwiseAbs().maxCoeff() : 0.0));
  VectorXd w = start.w;
  int worst_row = -1;
  double worst = m ? max_violation(w, &worst_row) : -1.0;
  int phase1_iters = 0;
  if (worst > feas_tol) {
    // Phase 1: min t + delta/2 (|w - w0|^2 + t^2)  s.t.  Cw - |c_i| t <= d,  -t <= 0.
    ReducedProblem ph;
    const double delta = 1e-6;
    ph.G = delta * MatrixXd::Identity(p + 1, p + 1);
    ph.c = VectorXd::Zero(p + 1);
    ph.c.head(p) = -delta * w;
    ph.c(p) = 1.0;
    ph.C = MatrixXd::Zero(m + 1, p + 1);
    ph.C.topLeftCorner(m, p) = rp.C;
    for (Eigen::Index i = 0; i < m; ++i) ph.C(i, p) = -std::max(1.0, row_norm(i));
    ph.C(m, p) = -1.0;
    ph.d = VectorXd::Zero(m + 1);
    ph.d.head(m) = rp.d;
    VectorXd z(p + 1);
    z.head(p) = w;
    z(p) = std::max(0.0, worst) * (1.0 + 1e-12) + 1e-300;
    ReducedResult r1 = primal_active_set(ph, z, {}, opt, opt.max_iter);
    phase1_iters = r1.iterations;
    if (r1.status != Status::Optimal) {
      res.status = r1.status;
      res.iterations = phase1_iters;
      res.w = w;
      res.lambda = VectorXd::Zero(m);
      return res;
    }
    w = r1.w.head(p);
    worst = max_violation(w, &worst_row);
    if (r1.w(p) > feas_tol || worst > 10.0 * feas_tol) {
      res.status = Status::Infeasible;
      res.violated_row = worst_row;
      res.iterations = phase1_iters;
      res.w = w;
      res.lambda = VectorXd::Zero(m);
      return res;
    }
    // Keep phase-1 constraints that are active at the feasible point, if independent.
    std::vector<int> keep;
    for (int i : r1.working)
      if (i < m && std::abs(violation(rp, row_norm, i, w)) <= feas_tol) keep.push_back(i);
    if (static_cast<Eigen::Index>(keep.size()) > p || !solve_eqp(rp, keep, true).ok) keep.clear();
    working = keep;
  } else if (!working.empty()) {
    // Warm start was feasible: continue from its EQP solution.
  }

  ReducedResult r2 = primal_active_set(rp, w, working, opt, opt.max_iter - phase1_iters);
  r2.iterations += phase1_iters;
  return r2;
}

}  // namespace

Solution solve(const Problem& problem, const Options& opt) {
  problem.validate();
  const auto n = problem.g.size();
  const auto me = problem.b_eq.size();
  const auto mi = problem.b_in.size();

  Solution sol;
  sol.lambda_eq = VectorXd::Zero(me);
  sol.lambda_in = VectorXd::Zero(mi);

  MatrixXd Hr = problem.H;
  Hr.diagonal().array() += opt.regularization;

  // Null-space elimination of the equality constraints.
  VectorXd xp = VectorXd::Zero(n);
  MatrixXd Z;
  MatrixXd Q1;
  Eigen::ColPivHouseholderQR<MatrixXd> qr;
  Eigen::Index rank = 0;
  if (me > 0) {
    qr.compute(problem.A_eq.transpose());
    rank = qr.rank();
    const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, n);
    Q1 = Q.leftCols(rank);
    Z = Q.rightCols(n - rank);
    const MatrixXd R = qr.matrixR().template triangularView<Eigen::Upper>();
    const VectorXd bp = qr.colsPermutation().transpose() * problem.b_eq;
    VectorXd y = VectorXd::Zero(rank);
    if (rank > 0)
      y = R.topLeftCorner(rank, rank).transpose().template triangularView<Eigen::Lower>().solve(bp.head(rank));
    xp = Q1 * y;
    const double eq_res = (problem.A_eq * xp - problem.b_eq).cwiseAbs().maxCoeff();
    const double eq_scale = 1.0 + problem.b_eq.cwiseAbs().maxCoeff();
    if (eq_res > 1e3 * opt.tol * eq_scale) {
      sol.status = Status::Infeasible;
      sol.x = xp;
      sol.violated_row = -1;
      sol.kkt_residual = kkt_residual(problem, sol.x, sol.lambda_eq, sol.lambda_in);
      return sol;
    }
  } else {
    Z = MatrixXd::Identity(n, n);
  }

  ReducedProblem rp;
  const MatrixXd HZ = Hr * Z;
  rp.G = Z.transpose() * HZ;
  rp.G = 0.5 * (rp.G + rp.G.transpose()).eval();
  rp.c = Z.transpose() * (Hr * xp + problem.g);
  if (mi > 0) {
    rp.C = problem.A_in * Z;
    rp.d = problem.b_in - problem.A_in * xp;
  } else {
    rp.C = MatrixXd::Zero(0, Z.cols());
    rp.d = VectorXd::Zero(0);
  }

  ReducedResult rr = solve_reduced(rp, opt);
  sol.status = rr.status;
  sol.iterations = rr.iterations;
  sol.violated_row = rr.violated_row;
  sol.x = rr.w.size() == Z.cols() ? VectorXd(xp + Z * rr.w) : xp;
  if (rr.lambda.size() == mi) sol.lambda_in = rr.lambda;
  sol.active_set = rr.working;

  if (me > 0 && rank > 0) {
    VectorXd rhs = -(problem.H * sol.x + problem.g);
    if (mi > 0) rhs -= problem.A_in.transpose() * sol.lambda_in;
    const MatrixXd R = qr.matrixR().template triangularView<Eigen::Upper>();
    const VectorXd z = R.topLeftCorner(rank, rank).template triangularView<Eigen::Upper>().solve(Q1.transpose() * rhs);
    VectorXd permuted = VectorXd::Zero(me);
    permuted.head(rank) = z;
    sol.lambda_eq = qr.colsPermutation() * permuted;
  }
  sol.kkt_residual = kkt_residual(problem, sol.x, sol.lambda_eq, sol.lambda_in);
  return sol;
}

Solution Solver::solve(const Problem& problem) {
  Options opt = options_;
  if (!last_active_.empty()) opt.warm_start = last_active_;
  Solution s = qp::solve(problem, opt);
  if (s.status == Status::Optimal)
    last_active_ = s.active_set;
  else
    last_active_.clear();
  return s;
}

namespace {

void write_matrix(std::ostream& os, std::string_view name, const MatrixXd& m) {
  os << name << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << m(r, c);
    os << '\n';
  }
}

MatrixXd read_matrix(std::istream& is, std::string_view name, Eigen::Index rows, Eigen::Index cols) {
  std::string tag;
  if (!(is >> tag) || tag != name) throw ConfigError("qp dump: expected section '" + std::string(name) + "'");
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      if (!(is >> m(r, c))) throw ConfigError("qp dump: truncated section '" + std::string(name) + "'");
  return m;
}

}  // namespace

void write_problem(std::ostream& os, const Problem& p) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  os << "walkstack-qp 1\n"
     << p.num_variables() << ' ' << p.num_equalities() << ' ' << p.num_inequalities() << '\n';
  write_matrix(os, "H", p.H);
  write_matrix(os, "g", p.g.transpose());
  write_matrix(os, "A_eq", p.A_eq);
  write_matrix(os, "b_eq", p.b_eq.transpose());
  write_matrix(os, "A_in", p.A_in);
  write_matrix(os, "b_in", p.b_in.transpose());
  os.flags(flags);
  os.precision(prec);
}

Problem read_problem(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "walkstack-qp" || version != 1)
    throw ConfigError("qp dump: bad header");
  Eigen::Index n = 0, me = 0, mi = 0;
  if (!(is >> n >> me >> mi) || n < 0 || me < 0 || mi < 0) throw ConfigError("qp dump: bad dimensions");
  Problem p;
  p.H = read_matrix(is, "H", n, n);
  p.g = read_matrix(is, "g", 1, n).transpose();
  p.A_eq = read_matrix(is, "A_eq", me, n);
  p.b_eq = read_matrix(is, "b_eq", 1, me).transpose();
  p.A_in = read_matrix(is, "A_in", mi, n);
  p.b_in = read_matrix(is, "b_in", 1, mi).transpose();
  p.validate();
  return p;
}

}  // namespace walkstack::qp
