#include "ecmpc/srb_dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "ecmpc/errors.hpp"

namespace ecmpc {

Vector13 RobotState::to_vector() const {
  Vector13 x;
  x << theta, p, omega, v, g;
  return x;
}

RobotState RobotState::from_vector(const Vector13& x) {
  RobotState s;
  s.theta = x.segment<3>(0);
  s.p = x.segment<3>(3);
  s.omega = x.segment<3>(6);
  s.v = x.segment<3>(9);
  return s;
}

void ModelParams::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw Error(ErrorCode::InvalidArgument, "mass must be positive");
  if (!inertia.allFinite() || (inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-10 * inertia.norm())
    throw Error(ErrorCode::SingularInertia, "inertia is not symmetric");
  Eigen::LLT<Matrix3> llt(inertia);
  if (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0)
    throw Error(ErrorCode::SingularInertia, "inertia is not positive definite");
}

Matrix3 skew(const Vector3& v) {
  Matrix3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Matrix3 rot_z(double yaw) {
  return Eigen::AngleAxisd(yaw, Vector3::UnitZ()).toRotationMatrix();
}

Matrix3 rotation_from_euler(const Vector3& theta) {
  return (Eigen::AngleAxisd(theta.z(), Vector3::UnitZ()) * Eigen::AngleAxisd(theta.y(), Vector3::UnitY()) *
          Eigen::AngleAxisd(theta.x(), Vector3::UnitX()))
      .toRotationMatrix();
}

Vector3 euler_from_rotation(const Matrix3& r) {
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

ContinuousDynamics continuous_matrices(double yaw, const ModelParams& params) {
  params.validate();
  const Matrix3 rz = rot_z(yaw);
  const Matrix3 inertia_world = rz * params.inertia * rz.transpose();
  const Matrix3 inertia_inv = inertia_world.inverse();

  ContinuousDynamics c;
  c.a.block<3, 3>(0, 6) = rz.transpose();
  c.a.block<3, 3>(3, 9) = Matrix3::Identity();
  c.a(11, 12) = -1.0;
  for (int i = 0; i < 4; ++i) {
    c.b.block<3, 3>(6, 3 * i) = inertia_inv * skew(params.feet[i]);
    c.b.block<3, 3>(9, 3 * i) = Matrix3::Identity() / params.mass;
  }
  return c;
}

DiscreteDynamics discretize(const ContinuousDynamics& c, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  DiscreteDynamics d;
  d.a_mat = Matrix13::Identity() + c.a * dt;
  d.b_mat = c.b * dt;
  d.dt = dt;
  return d;
}

Vector13 step(const DiscreteDynamics& dyn, const Vector13& x, const Vector12& u) {
  return dyn.a_mat * x + dyn.b_mat * u;
}

RobotState step(const DiscreteDynamics& dyn, const RobotState& x, const Vector12& u) {
  return RobotState::from_vector(step(dyn, x.to_vector(), u));
}

}  // namespace ecmpc
