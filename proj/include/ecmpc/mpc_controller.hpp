#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ecmpc/error_model.hpp"
#include "ecmpc/gait.hpp"
#include "ecmpc/qp_solver.hpp"
#include "ecmpc/srb_dynamics.hpp"

namespace ecmpc {

/// How the compensation c_k enters the prediction. Additive offsets each
/// predicted state, x~_k = x_k + c_k, with the nominal chain x_{k+1} = A x_k
/// + B u_k left untouched. Propagated feeds the offset back into the chain,
/// x_{k+1} = A x_k + B u_k + c_{k+1}.
enum class CompensationMode { Additive, Propagated };

struct MpcConfig {
  int horizon = 12;
  double dt = 0.03;
  /// Diagonal of Q over [theta, p, omega, v, g].
  Vector13 state_weights = (Vector13() << 50, 50, 50, 0, 0, 100, 1, 1, 1, 1, 1, 1, 0).finished();
  double input_weight = 1e-5;
  double mu = 0.6;
  double fz_min = 0.0;
  double fz_max = 500.0;
  bool compensation_enabled = false;
  CompensationMode compensation_mode = CompensationMode::Additive;
  /// Control model.
  double mass = 23.7;
  Matrix3 inertia = Eigen::Vector3d(0.35, 1.28, 1.47).asDiagonal();

  /// Throws InvalidArgument on negative weights, N < 1 or bad bounds.
  void validate() const;
};

struct MotionCommand {
  Vector3 velocity = Vector3::Zero();  // body frame; z ignored
  double yaw_rate = 0.0;
  double height = 0.38;
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;  // desired yaw now; integrated by the caller
};

/// Desired states for steps 0..N.
struct ReferenceTrajectory {
  std::vector<Vector13> states;
};

ReferenceTrajectory build_reference(const MotionCommand& command, const Vector13& x0, const MpcConfig& cfg);

/// Compensated predictions x~_1..x~_N (see CompensationMode). `compensation`
/// may be empty.
std::vector<Vector13> rollout(const std::vector<DiscreteDynamics>& dyn, const std::vector<Vector13>& compensation,
                              const Vector13& x0, const std::vector<Vector12>& inputs,
                              CompensationMode mode = CompensationMode::Additive);

/// Dense QP over the stacked forces u_0..u_{N-1} minimizing
/// sum_k (x_k - ref_k)' Q (x_k - ref_k) + u' R u over k = 1..N. `dyn` holds
/// one model per step (a single entry is reused for all steps);
/// `compensation` is empty or has N entries c_1..c_N. Constraints are left
/// empty.
QpProblem condense(const std::vector<DiscreteDynamics>& dyn, const std::vector<Vector13>& compensation,
                   const Vector13& x0, const ReferenceTrajectory& ref, const MpcConfig& cfg);

/// Friction and swing constraints for every horizon step, block diagonal.
void add_contact_constraints(QpProblem& qp, const std::vector<ContactMask>& contacts, const MpcConfig& cfg);

struct MpcInput {
  Vector13 x = Vector13::Zero();  // measured state
  MotionCommand command;
  std::vector<ContactMask> contacts;              // N steps
  std::vector<std::array<Vector3, 4>> feet;       // N steps, world-frame foot positions
};

struct MpcOutput {
  std::vector<Vector12> grfs;         // N steps; grfs[0] is applied
  std::vector<Vector13> predicted;    // compensated predictions x_1..x_N
  Vector13 nominal_next = Vector13::Zero();  // A x_0 + B u_0 without compensation
  ReferenceTrajectory reference;
  Vector4 compensation = Vector4::Zero();    // first forecast step, zero when unused
  bool compensated = false;
  QpStatus status = QpStatus::Infeasible;
  int iterations = 0;
  double kkt_residual = 0.0;
  bool fallback = false;  // previous first-step forces held
};

/// Receding-horizon controller. An error model is optional; without one, or
/// while it is cold or gated, the QP is exactly the uncompensated one.
class MpcController {
 public:
  explicit MpcController(MpcConfig cfg);

  MpcOutput tick(const MpcInput& in, const OnlineErrorModel* error_model = nullptr);

  /// Previous solution shifted one step, last step repeated; empty before the
  /// first solve.
  std::vector<Vector12> planned_inputs() const;

  int consecutive_failures() const { return failures_; }
  const MpcConfig& config() const { return cfg_; }
  void reset();

  /// Writes every QP to `out` before solving; nullptr disables.
  void set_dump(std::ostream* out) { dump_ = out; }

 private:
  std::vector<DiscreteDynamics> models(const MpcInput& in, const ReferenceTrajectory& ref) const;

  MpcConfig cfg_;
  QpSolver solver_;
  std::vector<Vector12> plan_;
  int failures_ = 0;
  std::ostream* dump_ = nullptr;
};

}  // namespace ecmpc
