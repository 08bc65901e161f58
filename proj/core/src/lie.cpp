#include "ctrack/lie.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ctrack/errors.hpp"

namespace ctrack {
namespace {

// Wider series window for the SE(3) Q-block coefficients; their closed forms cancel
// catastrophically long before kSmallAngle.
constexpr double kSeriesAngleQ = 1e-2;

struct So3Coefficients {
  double a;  // sin(t)/t
  double b;  // (1 - cos(t))/t^2
  double c;  // (t - sin(t))/t^3
};

So3Coefficients so3_coefficients(double theta) {
  const double t2 = theta * theta;
  if (theta < kSmallAngle) {
    const double t4 = t2 * t2;
    return {1.0 - t2 / 6.0 + t4 / 120.0, 0.5 - t2 / 24.0 + t4 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0};
  }
  const double s = std::sin(theta);
  // Half-angle form of 1 - cos(t) avoids cancellation at small t.
  const double h = std::sin(0.5 * theta);
  return {s / theta, 2.0 * h * h / t2, (theta - s) / (t2 * theta)};
}

Matrix3d q_block(const Vector3d& rho, const Vector3d& phi) {
  const double theta = phi.norm();
  const double t2 = theta * theta;
  double c1, c2, c3;
  if (theta < kSeriesAngleQ) {
    const double t4 = t2 * t2;
    c1 = 1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0;
    c2 = 1.0 / 24.0 - t2 / 720.0 + t4 / 40320.0;
    c3 = 1.0 / 120.0 - t2 / 2520.0 + t4 / 120960.0;
  } else {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double t3 = t2 * theta;
    c1 = (theta - s) / t3;
    c2 = (t2 + 2.0 * c - 2.0) / (2.0 * t2 * t2);
    c3 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t2 * t3);
  }
  const Matrix3d r = skew(rho);
  const Matrix3d p = skew(phi);
  const Matrix3d pr = p * r;
  const Matrix3d rp = r * p;
  const Matrix3d prp = pr * p;
  const Matrix3d ppr = p * pr;
  const Matrix3d rpp = rp * p;
  return 0.5 * r + c1 * (pr + rp + prp) + c2 * (ppr + rpp - 3.0 * prp) + c3 * (prp * p + p * prp);
}

}  // namespace

Matrix3d skew(const Vector3d& w) {
  Matrix3d m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return m;
}

Vector3d unskew(const Matrix3d& m) { return Vector3d(m(2, 1), m(0, 2), m(1, 0)); }

Matrix4d hat(const Twist& tau) {
  Matrix4d m = Matrix4d::Zero();
  m.topLeftCorner<3, 3>() = skew(angular(tau));
  m.topRightCorner<3, 1>() = linear(tau);
  return m;
}

Twist vee(const Matrix4d& m) {
  return make_twist(m.topRightCorner<3, 1>(), unskew(m.topLeftCorner<3, 3>()));
}

Matrix3d exp_so3(const Vector3d& w) {
  const So3Coefficients k = so3_coefficients(w.norm());
  const Matrix3d wx = skew(w);
  return Matrix3d::Identity() + k.a * wx + k.b * (wx * wx);
}

Vector3d log_so3(const Matrix3d& r) {
  // sin(theta) * axis from the antisymmetric part, cos(theta) from the trace.
  const Vector3d s_axis = 0.5 * Vector3d(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double cos_theta = 0.5 * (r.trace() - 1.0);
  const double theta = std::atan2(s_axis.norm(), cos_theta);
  if (std::numbers::pi - theta < kBranchMargin) {
    throw BranchError("log_so3: rotation angle " + std::to_string(theta) +
                      " is at the pi branch cut");
  }
  double scale;
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    scale = 1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0;
  } else {
    scale = theta / std::sin(theta);
  }
  return scale * s_axis;
}

Matrix3d left_jacobian_so3(const Vector3d& w) {
  const So3Coefficients k = so3_coefficients(w.norm());
  const Matrix3d wx = skew(w);
  return Matrix3d::Identity() + k.b * wx + k.c * (wx * wx);
}

Matrix3d left_jacobian_so3_inv(const Vector3d& w) {
  const double theta = w.norm();
  double d;
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    d = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    d = 1.0 / (theta * theta) - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  const Matrix3d wx = skew(w);
  return Matrix3d::Identity() - 0.5 * wx + d * (wx * wx);
}

Pose exp_se3(const Twist& tau) {
  const Vector3d w = angular(tau);
  const So3Coefficients k = so3_coefficients(w.norm());
  const Matrix3d wx = skew(w);
  const Matrix3d wx2 = wx * wx;
  const Matrix3d r = Matrix3d::Identity() + k.a * wx + k.b * wx2;
  const Matrix3d v = Matrix3d::Identity() + k.b * wx + k.c * wx2;
  return Pose(r, v * linear(tau));
}

Twist log_se3(const Pose& pose) {
  const Vector3d w = log_so3(pose.rotation());
  return make_twist(left_jacobian_so3_inv(w) * pose.translation(), w);
}

Matrix6d adjoint(const Pose& pose) {
  const Matrix3d& r = pose.rotation();
  Matrix6d m;
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 3>() = skew(pose.translation()) * r;
  m.bottomLeftCorner<3, 3>().setZero();
  m.bottomRightCorner<3, 3>() = r;
  return m;
}

Matrix6d ad(const Twist& x) {
  const Matrix3d wx = skew(angular(x));
  Matrix6d m;
  m.topLeftCorner<3, 3>() = wx;
  m.topRightCorner<3, 3>() = skew(linear(x));
  m.bottomLeftCorner<3, 3>().setZero();
  m.bottomRightCorner<3, 3>() = wx;
  return m;
}

Matrix6d left_jacobian(const Twist& tau) {
  const Matrix3d j = left_jacobian_so3(angular(tau));
  Matrix6d m;
  m.topLeftCorner<3, 3>() = j;
  m.topRightCorner<3, 3>() = q_block(linear(tau), angular(tau));
  m.bottomLeftCorner<3, 3>().setZero();
  m.bottomRightCorner<3, 3>() = j;
  return m;
}

Matrix6d left_jacobian_inv(const Twist& tau) {
  const Matrix3d ji = left_jacobian_so3_inv(angular(tau));
  Matrix6d m;
  m.topLeftCorner<3, 3>() = ji;
  m.topRightCorner<3, 3>() = -ji * q_block(linear(tau), angular(tau)) * ji;
  m.bottomLeftCorner<3, 3>().setZero();
  m.bottomRightCorner<3, 3>() = ji;
  return m;
}

const Matrix12x6d& generators() {
  static const Matrix12x6d g = [] {
    Matrix12x6d out;
    for (int i = 0; i < 6; ++i) {
      const Matrix4d gi = hat(Twist::Unit(i));
      out.col(i) << gi.col(0).head<3>(), gi.col(1).head<3>(), gi.col(2).head<3>(),
          gi.col(3).head<3>();
    }
    return out;
  }();
  return g;
}

Vector12d vectorize(const Pose& pose) {
  Vector12d v;
  v << pose.rotation().col(0), pose.rotation().col(1), pose.rotation().col(2),
      pose.translation();
  return v;
}

Pose devectorize(const Vector12d& v) {
  Matrix3d r;
  r.col(0) = v.segment<3>(0);
  r.col(1) = v.segment<3>(3);
  r.col(2) = v.segment<3>(6);
  return Pose(r, v.segment<3>(9));
}

Twist body_velocity_from_derivative(const Pose& pose, const Matrix4d& pose_derivative) {
  return vee(pose.inverse().matrix() * pose_derivative);
}

}  // namespace ctrack
