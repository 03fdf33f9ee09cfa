#pragma once

#include <Eigen/Dense>

#include <array>

namespace ecmpc {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Vector12 = Eigen::Matrix<double, 12, 1>;
using Vector13 = Eigen::Matrix<double, 13, 1>;
using Matrix13 = Eigen::Matrix<double, 13, 13>;
using Matrix13x12 = Eigen::Matrix<double, 13, 12>;

inline constexpr double kGravity = 9.81;

/// Body state. theta holds roll, pitch, yaw of a Z-Y-X rotation; p, omega and
/// v are world-frame. Packed as [theta, p, omega, v, g].
struct RobotState {
  Vector3 theta = Vector3::Zero();
  Vector3 p = Vector3::Zero();
  Vector3 omega = Vector3::Zero();
  Vector3 v = Vector3::Zero();

  static constexpr double g = kGravity;

  Vector13 to_vector() const;
  /// Element 12 is ignored; gravity is a constant.
  static RobotState from_vector(const Vector13& x);
};

struct ModelParams {
  double mass = 23.7;
  Matrix3 inertia = Matrix3::Identity();  // body frame
  std::array<Vector3, 4> feet{};          // world frame, relative to the CoM

  /// Throws InvalidArgument for mass <= 0 and SingularInertia for an inertia
  /// that is not symmetric positive definite.
  void validate() const;
};

struct ContinuousDynamics {
  Matrix13 a = Matrix13::Zero();
  Matrix13x12 b = Matrix13x12::Zero();
};

struct DiscreteDynamics {
  Matrix13 a_mat = Matrix13::Identity();
  Matrix13x12 b_mat = Matrix13x12::Zero();
  double dt = 0.0;
};

Matrix3 skew(const Vector3& v);
Matrix3 rot_z(double yaw);
/// R = Rz(yaw) Ry(pitch) Rx(roll) for theta = (roll, pitch, yaw).
Matrix3 rotation_from_euler(const Vector3& theta);
Vector3 euler_from_rotation(const Matrix3& r);

/// Linearized SRB model about the given yaw: Euler rates from R_z(yaw)^T
/// omega, angular acceleration I_w^-1 [r_i]x f_i with I_w = R_z I R_z^T,
/// linear acceleration f_i / m, gravity through the constant last state.
ContinuousDynamics continuous_matrices(double yaw, const ModelParams& params);

/// A = I + A_c dt, B = B_c dt.
DiscreteDynamics discretize(const ContinuousDynamics& c, double dt);

Vector13 step(const DiscreteDynamics& dyn, const Vector13& x, const Vector12& u);
RobotState step(const DiscreteDynamics& dyn, const RobotState& x, const Vector12& u);

}  // namespace ecmpc
