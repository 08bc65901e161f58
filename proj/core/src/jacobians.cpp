#include "ctrack/jacobians.hpp"

#include "ctrack/errors.hpp"

namespace ctrack {
namespace {

// d vec(T) / d eps for the perturbation T <- P Exp(eps) P^-1 T.
Matrix12x6d d_vec_d_tangent(const Pose& p, const Pose& t) {
  const Matrix3d& rp = p.rotation();
  Matrix12x6d d = Matrix12x6d::Zero();
  d.block<3, 3>(9, 0) = rp;
  for (int c = 0; c < 3; ++c) d.block<3, 3>(3 * c, 3) = -skew(t.rotation().col(c)) * rp;
  d.block<3, 3>(9, 3) = -skew(t.translation() - p.translation()) * rp;
  return d;
}

template <int Rows>
ControlPointJacobian<Rows> zero_jacobian(const SpanEvaluation& e) {
  ControlPointJacobian<Rows> out;
  out.first_index = e.first_index;
  out.order = e.order;
  for (auto& b : out.blocks) b.setZero();
  return out;
}

// Each a_j depends on control points j-1 and j with opposite signs; fold the per-increment
// derivatives x[j] (w.r.t. xi_j through a_j or Omega_j) into per-control-point blocks.
template <int Rows>
void fold_increments(ControlPointJacobian<Rows>& out,
                     const std::array<Eigen::Matrix<double, Rows, 6>, kMaxOrder>& x, int k) {
  for (int m = 0; m < k; ++m) {
    out.blocks[m] = x[m];
    if (m + 1 < k) out.blocks[m] -= x[m + 1];
  }
}

}  // namespace

Matrix6d d_a_d_xi(const SpanEvaluation& e, int j) {
  if (j == 0) return Matrix6d::Identity();
  if (j < 0 || j >= e.order) throw ValidationError("control point index outside the span");
  return e.basis.value(j) * left_jacobian_inv(e.omega[j]) * adjoint(e.control[j - 1].inverse());
}

PoseVecJacobian d_pose_vec_d_control_points(const SpanEvaluation& e) {
  const int k = e.order;
  std::array<Eigen::Matrix<double, 12, 6>, kMaxOrder> x;
  x[0] = d_vec_d_tangent(Pose::Identity(), e.pose);
  for (int j = 1; j < k; ++j) {
    x[j] = d_vec_d_tangent(e.prefix[j], e.pose) * left_jacobian(e.a[j]) * d_a_d_xi(e, j);
  }
  auto out = zero_jacobian<12>(e);
  fold_increments(out, x, k);
  return out;
}

PoseVecJacobian d_pose_vec_d_control_points(const SplineTrajectory& traj, double t,
                                            Endpoint endpoint) {
  return d_pose_vec_d_control_points(traj.evaluate(traj.locate(t, endpoint)));
}

PoseLogJacobian d_pose_log_d_control_points(const SpanEvaluation& e) {
  const int k = e.order;
  const Matrix6d jinv = left_jacobian_inv(log_se3(e.pose));
  std::array<Matrix6d, kMaxOrder> x;
  x[0] = jinv;
  for (int j = 1; j < k; ++j) {
    x[j] = jinv * adjoint(e.prefix[j]) * left_jacobian(e.a[j]) * d_a_d_xi(e, j);
  }
  auto out = zero_jacobian<6>(e);
  fold_increments(out, x, k);
  return out;
}

PoseLogJacobian d_pose_log_d_control_points(const SplineTrajectory& traj, double t,
                                            Endpoint endpoint) {
  return d_pose_log_d_control_points(traj.evaluate(traj.locate(t, endpoint)));
}

VelocityJacobian d_velocity_d_control_points(const SpanEvaluation& e) {
  const int k = e.order;
  const VelocityRecursion r = velocity_recursion(e);
  std::array<Matrix6d, kMaxOrder> x;
  x[0].setZero();
  // q carries the later factors' transport, Ad(A_{k-1}^-1) ... Ad(A_{j+1}^-1).
  Matrix6d q = Matrix6d::Identity();
  for (int j = k - 1; j >= 1; --j) {
    const Matrix6d local = e.basis.value(j) * ad(r.h[j]) * left_jacobian(-e.a[j]) +
                           e.basis.first(j) * Matrix6d::Identity();
    x[j] = q * local * left_jacobian_inv(e.omega[j]) * adjoint(e.control[j - 1].inverse());
    q = q * adjoint(e.factor[j].inverse());
  }
  auto out = zero_jacobian<6>(e);
  fold_increments(out, x, k);
  return out;
}

VelocityJacobian d_velocity_d_control_points(const SplineTrajectory& traj, double t,
                                             Endpoint endpoint) {
  return d_velocity_d_control_points(traj.evaluate(traj.locate(t, endpoint)));
}

Eigen::Matrix<double, 3, 12> d_error_d_pose_vec(const Vector3d& p_o, const Pose& t_wc,
                                                const Pose& /*t_wo*/) {
  const Matrix3d r_cw = t_wc.rotation().transpose();
  Eigen::Matrix<double, 3, 12> d;
  for (int c = 0; c < 3; ++c) d.block<3, 3>(0, 3 * c) = -p_o(c) * r_cw;
  d.block<3, 3>(0, 9) = -r_cw;
  return d;
}

Eigen::Matrix<double, 3, 6> d_error_d_pose_log(const Vector3d& p_o, const Pose& t_wc,
                                               const Pose& t_wo) {
  // The skew term uses the predicted point in the camera frame, T_cw T_wo p_o.
  const Pose t_cw = t_wc.inverse();
  const Vector3d p_c = t_cw * (t_wo * p_o);
  const Matrix6d ad_cw = adjoint(t_cw);
  Eigen::Matrix<double, 3, 6> lhs;
  lhs << Matrix3d::Identity(), -skew(p_c);
  return -lhs * left_jacobian(ad_cw * log_se3(t_wo)) * ad_cw;
}

Matrix3d d_error_d_point(const Pose& t_wc, const Pose& t_wo) {
  return -(t_wc.rotation().transpose() * t_wo.rotation());
}

namespace {

template <int Cols>
ErrorJacobian chain(const Eigen::Matrix<double, 3, Cols>& de, const ControlPointJacobian<Cols>& jt) {
  ErrorJacobian out;
  out.first_index = jt.first_index;
  out.order = jt.order;
  for (int m = 0; m < kMaxOrder; ++m) {
    if (m < jt.order) {
      out.blocks[m].noalias() = de * jt.blocks[m];
    } else {
      out.blocks[m].setZero();
    }
  }
  return out;
}

}  // namespace

ErrorJacobian chain_error_jacobian(const Eigen::Matrix<double, 3, 12>& de, const PoseVecJacobian& jt) {
  return chain(de, jt);
}

ErrorJacobian chain_error_jacobian(const Eigen::Matrix<double, 3, 6>& de, const PoseLogJacobian& jt) {
  return chain(de, jt);
}

ErrorJacobian d_error_d_control_points(const SpanEvaluation& e, const Vector3d& p_o,
                                       const Pose& t_wc, PoseForm form) {
  if (form == PoseForm::kVectorized) {
    return chain_error_jacobian(d_error_d_pose_vec(p_o, t_wc, e.pose), d_pose_vec_d_control_points(e));
  }
  return chain_error_jacobian(d_error_d_pose_log(p_o, t_wc, e.pose), d_pose_log_d_control_points(e));
}

std::vector<Eigen::MatrixXd> finite_difference_jacobian(const TrajectoryFunction& f,
                                                        const SplineTrajectory& traj, int first,
                                                        int count, double step) {
  if (!(step > 0.0)) throw ValidationError("finite-difference step must be positive");
  SplineTrajectory work = traj;
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(count);
  for (int m = first; m < first + count; ++m) {
    const Pose original = traj.control_point(m);
    Eigen::MatrixXd block;
    for (int d = 0; d < 6; ++d) {
      const Twist delta = step * Twist::Unit(d);
      work.set_control_point(m, exp_se3(delta) * original);
      const Eigen::VectorXd plus = f(work);
      work.set_control_point(m, exp_se3(-delta) * original);
      const Eigen::VectorXd minus = f(work);
      if (d == 0) block.resize(plus.size(), 6);
      block.col(d) = (plus - minus) / (2.0 * step);
    }
    work.set_control_point(m, original);
    blocks.push_back(std::move(block));
  }
  return blocks;
}

}  // namespace ctrack
