#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

namespace ecmpc {

/// min 1/2 y'Hy + f'y  s.t.  lower <= A_ineq y <= upper,  A_eq y = b_eq.
/// Infinite bounds are allowed and ignored.
struct QpProblem {
  Eigen::MatrixXd h;
  Eigen::VectorXd f;
  Eigen::MatrixXd a_ineq;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;

  int num_vars() const { return static_cast<int>(f.size()); }
  /// Throws DimensionMismatch or InvalidArgument (H not symmetric within 1e-10).
  void validate() const;
  double objective(const Eigen::VectorXd& y) const;
  /// Largest bound or equality violation at y.
  double max_violation(const Eigen::VectorXd& y) const;

  /// Text dump of all matrices, one "name rows cols" header per block.
  void dump(std::ostream& out) const;
};

enum class QpStatus { Solved, MaxIterations, Infeasible };

const char* to_string(QpStatus status);

struct QpSolution {
  Eigen::VectorXd y;
  QpStatus status = QpStatus::Infeasible;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool singular_hessian = false;  // solved on the null-space path
  Eigen::VectorXd dual_lower;  // >= 0, one per inequality row
  Eigen::VectorXd dual_upper;  // >= 0
  Eigen::VectorXd dual_eq;
  double objective = 0.0;
};

struct QpSettings {
  double feas_tol = 1e-6;
  double opt_tol = 1e-6;
  int max_iterations = 200;
};

/// Primal active-set solver. Equalities are eliminated by a null-space
/// substitution; the reduced problem is solved with a range-space step on the
/// Cholesky factor of the reduced Hessian. An infeasible start goes through a
/// slack phase first.
class QpSolver {
 public:
  explicit QpSolver(QpSettings settings = {}) : settings_(settings) {}

  /// `warm_start` is a previous solution; the constraints tight at it seed
  /// the working set.
  QpSolution solve(const QpProblem& problem, const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

  const QpSettings& settings() const { return settings_; }

 private:
  QpSettings settings_;
};

struct ConstraintBlock {
  Eigen::MatrixXd a_ineq;  // rows x 12
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::MatrixXd a_eq;    // rows x 12
  Eigen::VectorXd b_eq;
};

/// Four pyramid faces |fx| <= mu fz, |fy| <= mu fz and fz_min <= fz <= fz_max
/// per stance foot; swing feet get f = 0 equality rows.
ConstraintBlock build_friction_constraints(double mu, const std::array<bool, 4>& stance, double fz_min,
                                           double fz_max);

}  // namespace ecmpc
