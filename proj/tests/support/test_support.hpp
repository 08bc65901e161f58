#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/MatrixFunctions>

#include "ctrack/lie.hpp"
#include "ctrack/spline.hpp"

namespace ctrack::testing {

inline Twist random_twist(std::mt19937_64& rng, double max_norm) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Twist x;
  for (int i = 0; i < 6; ++i) x(i) = u(rng);
  return x * (max_norm * std::uniform_real_distribution<double>(0.05, 1.0)(rng) / x.norm());
}

inline Vector3d random_vector(std::mt19937_64& rng, double half_extent) {
  std::uniform_real_distribution<double> u(-half_extent, half_extent);
  return Vector3d(u(rng), u(rng), u(rng));
}

/// Pose drawn without going through the library exponential.
inline Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return Pose(q.toRotationMatrix(), random_vector(rng, 2.0));
}

/// Matrix exponential of hat(tau), independent of the closed forms under test.
inline Matrix4d expm(const Twist& tau) {
  Matrix4d m = Matrix4d::Zero();
  m(0, 1) = -tau(5);
  m(0, 2) = tau(4);
  m(1, 0) = tau(5);
  m(1, 2) = -tau(3);
  m(2, 0) = -tau(4);
  m(2, 1) = tau(3);
  m.topRightCorner<3, 1>() = tau.head<3>();
  return m.exp();
}

inline Pose perturb_left(const Twist& xi, const Pose& pose) {
  return Pose::FromMatrix(expm(xi) * pose.matrix());
}

/// Random trajectory with increments below max_step; knot spacing drawn in [0.5, 1.5] * dt
/// unless uniform.
inline SplineTrajectory random_trajectory(int order, int n, std::mt19937_64& rng,
                                          bool uniform = false, double max_step = 0.8,
                                          double dt = 0.1) {
  std::uniform_real_distribution<double> spacing(0.5 * dt, 1.5 * dt);
  std::vector<double> knots;
  std::vector<Pose> cps;
  double t = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  Pose c = random_pose(rng);
  for (int i = 0; i < n; ++i) {
    knots.push_back(t);
    cps.push_back(c);
    t += uniform ? dt : spacing(rng);
    c = c * Pose::FromMatrix(expm(random_twist(rng, max_step)));
  }
  return SplineTrajectory(order, std::move(knots), std::move(cps));
}

inline double random_time(const SplineTrajectory& traj, std::mt19937_64& rng) {
  const auto [lo, hi] = traj.domain();
  return lo + std::uniform_real_distribution<double>(0.0, 1.0 - 1e-9)(rng) * (hi - lo);
}

/// Classic pointwise Cox-de Boor basis N_{i,p}(t) of degree p on the given knots.
inline double cox_de_boor(const std::vector<double>& knots, int i, int p, double t) {
  if (p == 0) return (knots[i] <= t && t < knots[i + 1]) ? 1.0 : 0.0;
  double out = 0.0;
  const double d1 = knots[i + p] - knots[i];
  const double d2 = knots[i + p + 1] - knots[i + 1];
  if (d1 > 0.0) out += (t - knots[i]) / d1 * cox_de_boor(knots, i, p - 1, t);
  if (d2 > 0.0) out += (knots[i + p + 1] - t) / d2 * cox_de_boor(knots, i + 1, p - 1, t);
  return out;
}

/// Central differences of f w.r.t. left perturbations of control point `index`.
inline Eigen::MatrixXd numeric_block(const std::function<Eigen::VectorXd(const SplineTrajectory&)>& f,
                                     const SplineTrajectory& traj, int index, double step = 1e-6) {
  const int rows = static_cast<int>(f(traj).size());
  Eigen::MatrixXd out(rows, 6);
  for (int d = 0; d < 6; ++d) {
    Twist xi = Twist::Zero();
    xi(d) = step;
    SplineTrajectory plus = traj, minus = traj;
    plus.set_control_point(index, perturb_left(xi, traj.control_point(index)));
    minus.set_control_point(index, perturb_left(-xi, traj.control_point(index)));
    out.col(d) = (f(plus) - f(minus)) / (2.0 * step);
  }
  return out;
}

/// Body twist vee(T^-1 dT/dt) by central differences of the pose.
inline Twist numeric_body_velocity(const SplineTrajectory& traj, double t, double h = 1e-6) {
  const Matrix4d tp = traj.interpolate_pose(t + h).matrix();
  const Matrix4d tm = traj.interpolate_pose(t - h).matrix();
  const Matrix4d m = traj.interpolate_pose(t).matrix().inverse() * (tp - tm) / (2.0 * h);
  Twist tau;
  tau << m(0, 3), m(1, 3), m(2, 3), m(2, 1), m(0, 2), m(1, 0);
  return tau;
}

}  // namespace ctrack::testing
