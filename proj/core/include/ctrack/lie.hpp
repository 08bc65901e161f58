#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ctrack {

using Vector3d = Eigen::Vector3d;
using Matrix3d = Eigen::Matrix3d;
using Matrix4d = Eigen::Matrix4d;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector12d = Eigen::Matrix<double, 12, 1>;
using Matrix12x6d = Eigen::Matrix<double, 12, 6>;

/// Tangent vector of SE(3), stacked as [v; w] (linear part first).
using Twist = Vector6d;

inline Vector3d linear(const Twist& tau) { return tau.head<3>(); }
inline Vector3d angular(const Twist& tau) { return tau.tail<3>(); }
inline Twist make_twist(const Vector3d& v, const Vector3d& w) {
  Twist tau;
  tau << v, w;
  return tau;
}

/// Rigid-body transform. Rotation is kept as a 3x3 matrix; no quaternions internally.
class Pose {
 public:
  Pose() : rotation_(Matrix3d::Identity()), translation_(Vector3d::Zero()) {}
  Pose(const Matrix3d& rotation, const Vector3d& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose Identity() { return Pose(); }
  static Pose FromMatrix(const Matrix4d& m) {
    return Pose(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
  }

  const Matrix3d& rotation() const { return rotation_; }
  const Vector3d& translation() const { return translation_; }

  Pose inverse() const {
    const Matrix3d rt = rotation_.transpose();
    return Pose(rt, -(rt * translation_));
  }

  Pose operator*(const Pose& other) const {
    return Pose(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
  }

  /// Applies the transform to a Cartesian point.
  Vector3d operator*(const Vector3d& p) const { return rotation_ * p + translation_; }

  Matrix4d matrix() const {
    Matrix4d m = Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
  }

  bool operator==(const Pose& other) const {
    return rotation_ == other.rotation_ && translation_ == other.translation_;
  }

 private:
  Matrix3d rotation_;
  Vector3d translation_;
};

struct StampedPose {
  double timestamp = 0.0;
  Pose pose;
};

// Below this rotation angle the SO(3) coefficient functions use their Taylor series.
inline constexpr double kSmallAngle = 1e-6;
// Rotations closer than this to pi are rejected by the logarithm.
inline constexpr double kBranchMargin = 1e-6;

Matrix3d skew(const Vector3d& w);
Vector3d unskew(const Matrix3d& m);

Matrix4d hat(const Twist& tau);
Twist vee(const Matrix4d& m);

Matrix3d exp_so3(const Vector3d& w);
/// Principal-branch logarithm; throws BranchError when the angle is within kBranchMargin of pi.
Vector3d log_so3(const Matrix3d& r);
Matrix3d left_jacobian_so3(const Vector3d& w);
Matrix3d left_jacobian_so3_inv(const Vector3d& w);

Pose exp_se3(const Twist& tau);
Twist log_se3(const Pose& pose);

/// Ad_T, mapping body twists to the frame on the left: Exp(Ad_T tau) T = T Exp(tau).
Matrix6d adjoint(const Pose& pose);
/// ad_x, the matrix of the Lie bracket y -> [x, y].
Matrix6d ad(const Twist& x);

Matrix6d left_jacobian(const Twist& tau);
/// Requires the rotation angle of tau to stay below 2*pi.
Matrix6d left_jacobian_inv(const Twist& tau);

/// Columns are the vectorized se(3) generators, in twist order [v; w].
const Matrix12x6d& generators();

/// [R col 1; R col 2; R col 3; t]. The constant last row of the 4x4 form is dropped.
Vector12d vectorize(const Pose& pose);
Pose devectorize(const Vector12d& v);

/// vee(T^-1 * dT/dt): body-frame linear and angular velocity.
Twist body_velocity_from_derivative(const Pose& pose, const Matrix4d& pose_derivative);

}  // namespace ctrack
