#include "ecmpc/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "ecmpc/errors.hpp"

namespace ecmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void dump_matrix(std::ostream& out, const char* name, const Eigen::MatrixXd& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

// Inequalities as one-sided rows g'w <= rhs in the reduced variable w.
struct OneSided {
  Eigen::MatrixXd g;
  Eigen::VectorXd rhs;
  std::vector<int> row;   // inequality row of the original problem
  std::vector<int> side;  // -1 lower bound, +1 upper bound
};

struct ActiveSetResult {
  Eigen::VectorXd w;
  Eigen::VectorXd lambda;  // one per one-sided row, zero when inactive
  std::vector<int> working;
  int iterations = 0;
  bool converged = false;
};

// Primal active set on min 1/2 w'Hw + f'w, G w <= rhs, starting from a
// feasible w with a linearly independent working set. H = L L'.
ActiveSetResult active_set(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& h,
                           const Eigen::VectorXd& f, const Eigen::MatrixXd& g, const Eigen::VectorXd& rhs,
                           Eigen::VectorXd w, std::vector<int> working, int max_iterations) {
  const Eigen::Index n = w.size();
  const Eigen::Index nc = g.rows();
  const auto l = llt.matrixL();
  // Columns L^-1 g_j for every constraint, computed once.
  Eigen::MatrixXd v_all = g.transpose();
  if (nc > 0) l.solveInPlace(v_all);

  std::vector<char> in_working(static_cast<std::size_t>(nc), 0);
  for (int j : working) in_working[static_cast<std::size_t>(j)] = 1;

  ActiveSetResult out;
  Eigen::VectorXd lambda_w;
  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it + 1;
    const Eigen::VectorXd grad = h * w + f;
    Eigen::VectorXd r = grad;
    l.solveInPlace(r);
    lambda_w.resize(static_cast<Eigen::Index>(working.size()));
    if (!working.empty()) {
      Eigen::MatrixXd v(n, static_cast<Eigen::Index>(working.size()));
      for (std::size_t k = 0; k < working.size(); ++k) v.col(static_cast<Eigen::Index>(k)) = v_all.col(working[k]);
      lambda_w = -v.colPivHouseholderQr().solve(r);
      r += v * lambda_w;
    }
    Eigen::VectorXd p = -r;
    l.transpose().solveInPlace(p);

    const double step_scale = 1e-12 * (1.0 + w.lpNorm<Eigen::Infinity>());
    if (p.lpNorm<Eigen::Infinity>() <= step_scale) {
      int drop = -1;
      double most_negative = -1e-10 * (1.0 + grad.lpNorm<Eigen::Infinity>());
      for (Eigen::Index k = 0; k < lambda_w.size(); ++k)
        if (lambda_w(k) < most_negative) {
          most_negative = lambda_w(k);
          drop = static_cast<int>(k);
        }
      if (drop < 0) {
        out.converged = true;
        break;
      }
      in_working[static_cast<std::size_t>(working[static_cast<std::size_t>(drop)])] = 0;
      working.erase(working.begin() + drop);
      continue;
    }

    double alpha = 1.0;
    int blocking = -1;
    const Eigen::VectorXd gp = g * p;
    for (Eigen::Index j = 0; j < nc; ++j) {
      if (in_working[static_cast<std::size_t>(j)] || gp(j) <= 1e-14 * g.row(j).norm() * p.norm()) continue;
      const double slack = std::max(0.0, rhs(j) - g.row(j).dot(w));
      const double step = slack / gp(j);
      if (step < alpha) {
        alpha = step;
        blocking = static_cast<int>(j);
      }
    }
    w += alpha * p;
    if (blocking >= 0) {
      working.push_back(blocking);
      in_working[static_cast<std::size_t>(blocking)] = 1;
    }
  }

  out.w = std::move(w);
  out.lambda = Eigen::VectorXd::Zero(nc);
  if (out.converged)
    for (std::size_t k = 0; k < working.size(); ++k) out.lambda(working[k]) = std::max(0.0, lambda_w(static_cast<Eigen::Index>(k)));
  out.working = std::move(working);
  return out;
}

// Primal active set in null-space form for a singular H. The reduced Hessian
// Z'HZ is split by eigenvalue: curved directions take the Newton step, and a
// descent component along zero curvature is followed to the nearest blocking
// row. Working rows stay independent because a blocking row has g'p > 0 for p
// in the null space of the current working rows.
ActiveSetResult null_space_active_set(const Eigen::MatrixXd& h, const Eigen::VectorXd& f, const Eigen::MatrixXd& g,
                                      const Eigen::VectorXd& rhs, Eigen::VectorXd w, std::vector<int> working,
                                      int max_iterations) {
  const Eigen::Index n = w.size();
  const Eigen::Index nc = g.rows();
  std::vector<char> in_working(static_cast<std::size_t>(nc), 0);
  for (int j : working) in_working[static_cast<std::size_t>(j)] = 1;
  const double curvature_floor = 1e-10 * std::max(h.cwiseAbs().maxCoeff(), 1e-300);

  ActiveSetResult out;
  Eigen::VectorXd lambda_w;
  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it + 1;
    const Eigen::VectorXd grad = h * w + f;
    const auto k = static_cast<Eigen::Index>(working.size());
    Eigen::MatrixXd aw(n, k);
    for (Eigen::Index c = 0; c < k; ++c) aw.col(c) = g.row(working[static_cast<std::size_t>(c)]).transpose();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(aw);
    const Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd z = q.rightCols(n - k);

    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    bool zero_curvature = false;
    if (n - k > 0) {
      const Eigen::VectorXd gz = z.transpose() * grad;
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(z.transpose() * h * z);
      const Eigen::VectorXd coord = eig.eigenvectors().transpose() * gz;
      Eigen::VectorXd newton = Eigen::VectorXd::Zero(coord.size());
      Eigen::VectorXd flat = Eigen::VectorXd::Zero(coord.size());
      for (Eigen::Index i = 0; i < coord.size(); ++i) {
        if (eig.eigenvalues()(i) > curvature_floor)
          newton(i) = -coord(i) / eig.eigenvalues()(i);
        else
          flat(i) = -coord(i);
      }
      zero_curvature = flat.lpNorm<Eigen::Infinity>() > 1e-11 * (1.0 + grad.lpNorm<Eigen::Infinity>());
      p = z * (eig.eigenvectors() * (zero_curvature ? flat : newton));
    }

    if (!zero_curvature && p.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + w.lpNorm<Eigen::Infinity>())) {
      lambda_w = k > 0 ? Eigen::VectorXd(-qr.solve(grad)) : Eigen::VectorXd();
      int drop = -1;
      double most_negative = -1e-10 * (1.0 + grad.lpNorm<Eigen::Infinity>());
      for (Eigen::Index c = 0; c < k; ++c)
        if (lambda_w(c) < most_negative) {
          most_negative = lambda_w(c);
          drop = static_cast<int>(c);
        }
      if (drop < 0) {
        out.converged = true;
        break;
      }
      in_working[static_cast<std::size_t>(working[static_cast<std::size_t>(drop)])] = 0;
      working.erase(working.begin() + drop);
      continue;
    }

    double alpha = zero_curvature ? kInf : 1.0;
    int blocking = -1;
    const Eigen::VectorXd gp = g * p;
    for (Eigen::Index j = 0; j < nc; ++j) {
      if (in_working[static_cast<std::size_t>(j)] || gp(j) <= 1e-14 * g.row(j).norm() * p.norm()) continue;
      const double step = std::max(0.0, rhs(j) - g.row(j).dot(w)) / gp(j);
      if (step < alpha) {
        alpha = step;
        blocking = static_cast<int>(j);
      }
    }
    if (!std::isfinite(alpha)) break;  // unbounded below
    w += alpha * p;
    if (blocking >= 0) {
      working.push_back(blocking);
      in_working[static_cast<std::size_t>(blocking)] = 1;
    }
  }

  out.w = std::move(w);
  out.lambda = Eigen::VectorXd::Zero(nc);
  if (out.converged)
    for (std::size_t c = 0; c < working.size(); ++c)
      out.lambda(working[c]) = std::max(0.0, lambda_w(static_cast<Eigen::Index>(c)));
  out.working = std::move(working);
  return out;
}

// Tight rows at w, keeping only those linearly independent of the ones
// already chosen.
std::vector<int> tight_independent(const Eigen::MatrixXd& g, const Eigen::VectorXd& rhs, const Eigen::VectorXd& w,
                                   double tol) {
  std::vector<int> chosen;
  Eigen::MatrixXd basis(w.size(), 0);
  for (Eigen::Index j = 0; j < g.rows() && static_cast<Eigen::Index>(chosen.size()) < w.size(); ++j) {
    if (rhs(j) - g.row(j).dot(w) > tol * (1.0 + std::abs(rhs(j)))) continue;
    Eigen::MatrixXd trial(w.size(), basis.cols() + 1);
    trial << basis, g.row(j).transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
    qr.setThreshold(1e-10);
    if (qr.rank() == trial.cols()) {
      basis = std::move(trial);
      chosen.push_back(static_cast<int>(j));
    }
  }
  return chosen;
}

double max_violation(const Eigen::MatrixXd& g, const Eigen::VectorXd& rhs, const Eigen::VectorXd& w) {
  if (g.rows() == 0) return 0.0;
  return std::max(0.0, (g * w - rhs).maxCoeff());
}

}  // namespace

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Solved: return "solved";
    case QpStatus::MaxIterations: return "max_iter";
    case QpStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

void QpProblem::validate() const {
  const Eigen::Index n = f.size();
  if (h.rows() != n || h.cols() != n) throw Error(ErrorCode::DimensionMismatch, "H must be n x n");
  if (a_ineq.rows() > 0 && a_ineq.cols() != n) throw Error(ErrorCode::DimensionMismatch, "A_ineq must have n columns");
  if (lower.size() != a_ineq.rows() || upper.size() != a_ineq.rows())
    throw Error(ErrorCode::DimensionMismatch, "bounds must match A_ineq rows");
  if (a_eq.rows() > 0 && a_eq.cols() != n) throw Error(ErrorCode::DimensionMismatch, "A_eq must have n columns");
  if (b_eq.size() != a_eq.rows()) throw Error(ErrorCode::DimensionMismatch, "b_eq must match A_eq rows");
  if (!h.allFinite() || !f.allFinite() || !a_ineq.allFinite() || !a_eq.allFinite() || !b_eq.allFinite())
    throw Error(ErrorCode::InvalidArgument, "QP data is not finite");
  if (n > 0 && (h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, h.cwiseAbs().maxCoeff()))
    throw Error(ErrorCode::InvalidArgument, "H is not symmetric");
}

double QpProblem::objective(const Eigen::VectorXd& y) const { return 0.5 * y.dot(h * y) + f.dot(y); }

double QpProblem::max_violation(const Eigen::VectorXd& y) const {
  double v = 0.0;
  if (a_ineq.rows() > 0) {
    const Eigen::VectorXd ay = a_ineq * y;
    for (Eigen::Index i = 0; i < ay.size(); ++i) v = std::max({v, lower(i) - ay(i), ay(i) - upper(i)});
  }
  if (a_eq.rows() > 0) v = std::max(v, (a_eq * y - b_eq).lpNorm<Eigen::Infinity>());
  return v;
}

void QpProblem::dump(std::ostream& out) const {
  const auto precision = out.precision(17);
  out << "qp " << num_vars() << ' ' << a_ineq.rows() << ' ' << a_eq.rows() << '\n';
  dump_matrix(out, "h", h);
  dump_matrix(out, "f", f.transpose());
  dump_matrix(out, "a_ineq", a_ineq);
  dump_matrix(out, "lower", lower.transpose());
  dump_matrix(out, "upper", upper.transpose());
  dump_matrix(out, "a_eq", a_eq);
  dump_matrix(out, "b_eq", b_eq.transpose());
  out.precision(precision);
}

QpSolution QpSolver::solve(const QpProblem& problem, const std::optional<Eigen::VectorXd>& warm_start) {
  problem.validate();
  const Eigen::Index n = problem.num_vars();
  const Eigen::Index m_ineq = problem.a_ineq.rows();
  const Eigen::Index m_eq = problem.a_eq.rows();

  QpSolution sol;
  sol.y = Eigen::VectorXd::Zero(n);
  sol.dual_lower = Eigen::VectorXd::Zero(m_ineq);
  sol.dual_upper = Eigen::VectorXd::Zero(m_ineq);
  sol.dual_eq = Eigen::VectorXd::Zero(m_eq);
  for (Eigen::Index i = 0; i < m_ineq; ++i)
    if (problem.lower(i) > problem.upper(i)) return sol;

  // Equality elimination y = y_p + Z w.
  Eigen::MatrixXd z;
  Eigen::VectorXd y_p = Eigen::VectorXd::Zero(n);
  std::optional<Eigen::ColPivHouseholderQR<Eigen::MatrixXd>> eq_qr;
  if (m_eq > 0) {
    eq_qr.emplace(problem.a_eq.transpose());
    eq_qr->setThreshold(1e-12);
    const Eigen::Index rank = eq_qr->rank();
    y_p = problem.a_eq.completeOrthogonalDecomposition().solve(problem.b_eq);
    if ((problem.a_eq * y_p - problem.b_eq).lpNorm<Eigen::Infinity>() > settings_.feas_tol) return sol;
    const Eigen::MatrixXd q = eq_qr->householderQ();
    z = q.rightCols(n - rank);
  }
  const bool reduced = m_eq > 0;
  const Eigen::MatrixXd h_r = reduced ? Eigen::MatrixXd(z.transpose() * problem.h * z) : problem.h;
  const Eigen::VectorXd f_r =
      reduced ? Eigen::VectorXd(z.transpose() * (problem.h * y_p + problem.f)) : problem.f;
  const Eigen::Index nr = h_r.rows();

  OneSided cons;
  {
    for (Eigen::Index i = 0; i < m_ineq; ++i) {
      if (problem.lower(i) > -kInf) {
        cons.row.push_back(static_cast<int>(i));
        cons.side.push_back(-1);
      }
      if (problem.upper(i) < kInf) {
        cons.row.push_back(static_cast<int>(i));
        cons.side.push_back(1);
      }
    }
    const Eigen::Index nc = static_cast<Eigen::Index>(cons.row.size());
    const Eigen::MatrixXd a_r = reduced ? Eigen::MatrixXd(problem.a_ineq * z) : problem.a_ineq;
    const Eigen::VectorXd a_yp = m_ineq > 0 ? Eigen::VectorXd(problem.a_ineq * y_p) : Eigen::VectorXd();
    cons.g.resize(nc, nr);
    cons.rhs.resize(nc);
    for (Eigen::Index k = 0; k < nc; ++k) {
      const int i = cons.row[static_cast<std::size_t>(k)];
      if (cons.side[static_cast<std::size_t>(k)] > 0) {
        cons.g.row(k) = a_r.row(i);
        cons.rhs(k) = problem.upper(i) - a_yp(i);
      } else {
        cons.g.row(k) = -a_r.row(i);
        cons.rhs(k) = a_yp(i) - problem.lower(i);
      }
    }
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(nr);
  if (nr == 0) {
    sol.y = y_p;
    if (max_violation(cons.g, cons.rhs, w) > settings_.feas_tol) return sol;
  }

  // Reduced Hessian factor. A pivot underflow sends the solve down the
  // null-space path, which handles zero curvature without a diagonal shift.
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (nr > 0) {
    llt.compute(h_r);
    const Eigen::VectorXd d = llt.matrixLLT().diagonal().cwiseAbs2();
    sol.singular_hessian = llt.info() != Eigen::Success || !d.allFinite() ||
                      d.minCoeff() <= 1e-14 * std::max(d.maxCoeff(), 1e-300);
  }

  std::vector<int> working;
  int iterations = 0;
  if (nr > 0) {
    if (warm_start && warm_start->size() == n && warm_start->allFinite())
      w = reduced ? Eigen::VectorXd(z.transpose() * (*warm_start - y_p)) : *warm_start;

    // Rounding-level violations (a warm start at the previous optimum) go
    // straight to phase two with the offending rows in the working set.
    const double start_violation = max_violation(cons.g, cons.rhs, w);
    if (start_violation > settings_.feas_tol) {
      // Slack phase: min 1/2 |w - w0|^2 + 1/2 t^2 + c t, G w - t <= rhs,
      // t >= 0. The penalty is exact once c exceeds the multiplier sum of the
      // projection onto the feasible set; c grows until t reaches zero.
      const Eigen::Index nc = cons.g.rows();
      Eigen::MatrixXd h1 = Eigen::MatrixXd::Identity(nr + 1, nr + 1);
      Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(nc + 1, nr + 1);
      g1.topLeftCorner(nc, nr) = cons.g;
      g1.col(nr).head(nc).setConstant(-1.0);
      g1(nc, nr) = -1.0;
      Eigen::VectorXd rhs1(nc + 1);
      rhs1 << cons.rhs, 0.0;
      const Eigen::LLT<Eigen::MatrixXd> llt1(h1);
      Eigen::VectorXd point(nr + 1);
      point << w, start_violation;
      Eigen::VectorXd f1(nr + 1);
      double penalty = 10.0 * (1.0 + start_violation + w.lpNorm<Eigen::Infinity>());
      for (int round = 0; round < 4; ++round, penalty *= 1e3) {
        f1 << -w, penalty;
        const ActiveSetResult phase1 =
            active_set(llt1, h1, f1, g1, rhs1, point, {}, settings_.max_iterations + static_cast<int>(nc));
        iterations += phase1.iterations;
        point = phase1.w;
        if (point(nr) <= settings_.feas_tol) break;
      }
      w = point.head(nr);
      if (point(nr) > settings_.feas_tol || max_violation(cons.g, cons.rhs, w) > settings_.feas_tol) {
        sol.y = reduced ? Eigen::VectorXd(y_p + z * w) : w;
        sol.iterations = iterations;
        return sol;
      }
      working = tight_independent(cons.g, cons.rhs, w, 1e-9);
    } else if (warm_start || start_violation > 0.0) {
      working = tight_independent(cons.g, cons.rhs, w, 1e-9);
    }
  }

  ActiveSetResult result;
  if (nr > 0) {
    result = sol.singular_hessian
                 ? null_space_active_set(h_r, f_r, cons.g, cons.rhs, w, working, settings_.max_iterations)
                 : active_set(llt, h_r, f_r, cons.g, cons.rhs, w, working, settings_.max_iterations);
    iterations += result.iterations;
    w = result.w;
  } else {
    result.lambda = Eigen::VectorXd::Zero(cons.g.rows());
    result.converged = true;
  }

  sol.y = reduced ? Eigen::VectorXd(y_p + z * w) : w;
  sol.iterations = iterations;
  for (std::size_t k = 0; k < cons.row.size(); ++k) {
    const double lam = result.lambda(static_cast<Eigen::Index>(k));
    if (cons.side[k] > 0)
      sol.dual_upper(cons.row[k]) += lam;
    else
      sol.dual_lower(cons.row[k]) += lam;
  }

  Eigen::VectorXd stationarity = problem.h * sol.y + problem.f;
  if (m_ineq > 0) stationarity += problem.a_ineq.transpose() * (sol.dual_upper - sol.dual_lower);
  if (m_eq > 0) {
    sol.dual_eq = -eq_qr->solve(stationarity);
    stationarity += problem.a_eq.transpose() * sol.dual_eq;
  }
  double complementarity = 0.0;
  if (m_ineq > 0) {
    const Eigen::VectorXd ay = problem.a_ineq * sol.y;
    for (Eigen::Index i = 0; i < m_ineq; ++i) {
      if (sol.dual_lower(i) > 0.0) complementarity = std::max(complementarity, sol.dual_lower(i) * std::abs(ay(i) - problem.lower(i)));
      if (sol.dual_upper(i) > 0.0) complementarity = std::max(complementarity, sol.dual_upper(i) * std::abs(problem.upper(i) - ay(i)));
    }
  }
  sol.kkt_residual =
      std::max({stationarity.size() ? stationarity.lpNorm<Eigen::Infinity>() : 0.0, problem.max_violation(sol.y),
                complementarity});
  sol.objective = problem.objective(sol.y);
  sol.status = result.converged ? QpStatus::Solved : QpStatus::MaxIterations;
  return sol;
}

ConstraintBlock build_friction_constraints(double mu, const std::array<bool, 4>& stance, double fz_min,
                                           double fz_max) {
  if (!(mu > 0.0)) throw Error(ErrorCode::InvalidArgument, "mu must be positive");
  if (!(fz_min >= 0.0) || !(fz_max > fz_min)) throw Error(ErrorCode::InvalidArgument, "need 0 <= fz_min < fz_max");
  const int n_stance = static_cast<int>(std::count(stance.begin(), stance.end(), true));
  ConstraintBlock c;
  c.a_ineq = Eigen::MatrixXd::Zero(5 * n_stance, 12);
  c.lower.resize(5 * n_stance);
  c.upper.resize(5 * n_stance);
  c.a_eq = Eigen::MatrixXd::Zero(3 * (4 - n_stance), 12);
  c.b_eq = Eigen::VectorXd::Zero(3 * (4 - n_stance));
  int row = 0;
  int eq = 0;
  for (int leg = 0; leg < 4; ++leg) {
    const int col = 3 * leg;
    if (!stance[static_cast<std::size_t>(leg)]) {
      for (int k = 0; k < 3; ++k) c.a_eq(eq++, col + k) = 1.0;
      continue;
    }
    const double faces[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (const auto& face : faces) {
      c.a_ineq(row, col) = face[0];
      c.a_ineq(row, col + 1) = face[1];
      c.a_ineq(row, col + 2) = -mu;
      c.lower(row) = -kInf;
      c.upper(row) = 0.0;
      ++row;
    }
    c.a_ineq(row, col + 2) = 1.0;
    c.lower(row) = fz_min;
    c.upper(row) = fz_max;
    ++row;
  }
  return c;
}

}  // namespace ecmpc
