#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "ctrack/lie.hpp"
#include "ctrack/spline.hpp"

namespace ctrack {

enum class PoseForm { kVectorized, kLie };

/// Derivative blocks of some quantity w.r.t. the left perturbations T_j <- Exp(xi_j) T_j of
/// the control points of one span. Control points outside the span have zero blocks.
template <int Rows>
struct ControlPointJacobian {
  using Block = Eigen::Matrix<double, Rows, 6>;

  int first_index = 0;
  int order = 0;
  std::array<Block, kMaxOrder> blocks;

  const Block& operator[](int local) const { return blocks[local]; }
  Block& operator[](int local) { return blocks[local]; }
};

using PoseVecJacobian = ControlPointJacobian<12>;
using PoseLogJacobian = ControlPointJacobian<6>;
using VelocityJacobian = ControlPointJacobian<6>;
using ErrorJacobian = ControlPointJacobian<3>;

/// d a_j / d xi_j for local index j; the block w.r.t. xi_{j-1} is its negative.
Matrix6d d_a_d_xi(const SpanEvaluation& e, int j);

PoseVecJacobian d_pose_vec_d_control_points(const SpanEvaluation& e);
PoseVecJacobian d_pose_vec_d_control_points(const SplineTrajectory& traj, double t,
                                            Endpoint endpoint = Endpoint::kOpen);

PoseLogJacobian d_pose_log_d_control_points(const SpanEvaluation& e);
PoseLogJacobian d_pose_log_d_control_points(const SplineTrajectory& traj, double t,
                                            Endpoint endpoint = Endpoint::kOpen);

VelocityJacobian d_velocity_d_control_points(const SpanEvaluation& e);
VelocityJacobian d_velocity_d_control_points(const SplineTrajectory& traj, double t,
                                             Endpoint endpoint = Endpoint::kOpen);

/// e = p_c - T_wc^-1 T_wo p_o differentiated w.r.t. vec(T_wo).
Eigen::Matrix<double, 3, 12> d_error_d_pose_vec(const Vector3d& p_o, const Pose& t_wc,
                                                const Pose& t_wo);
/// Same error differentiated w.r.t. Log(T_wo).
Eigen::Matrix<double, 3, 6> d_error_d_pose_log(const Vector3d& p_o, const Pose& t_wc,
                                               const Pose& t_wo);
Matrix3d d_error_d_point(const Pose& t_wc, const Pose& t_wo);

ErrorJacobian chain_error_jacobian(const Eigen::Matrix<double, 3, 12>& de, const PoseVecJacobian& jt);
ErrorJacobian chain_error_jacobian(const Eigen::Matrix<double, 3, 6>& de, const PoseLogJacobian& jt);

/// d e / d xi_j for every control point of the span, chained through the selected pose form.
ErrorJacobian d_error_d_control_points(const SpanEvaluation& e, const Vector3d& p_o,
                                       const Pose& t_wc, PoseForm form);

/// Central differences of f under T_j <- Exp(+-step e_d) T_j, for control points
/// first .. first + count - 1. Returns one rows x 6 block per control point.
using TrajectoryFunction = std::function<Eigen::VectorXd(const SplineTrajectory&)>;
std::vector<Eigen::MatrixXd> finite_difference_jacobian(const TrajectoryFunction& f,
                                                        const SplineTrajectory& traj, int first,
                                                        int count, double step = 1e-6);

}  // namespace ctrack
