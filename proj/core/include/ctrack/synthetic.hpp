#pragma once

#include <cstdint>
#include <vector>

#include "ctrack/lie.hpp"
#include "ctrack/solver.hpp"
#include "ctrack/spline.hpp"

namespace ctrack {

/// Object turning about the world z axis while spinning about its own x axis.
struct CircularMotionSpec {
  double theta_transl = 0.1;  // rad per frame
  double theta_rot = 0.1;     // rad per frame
  double radius = 1.0;        // m
  double frame_dt = 0.1;      // s
  int n_frames = 30;

  void validate() const;
};

/// Pose at continuous time t (frame k sits at t = k * frame_dt).
Pose circular_pose(const CircularMotionSpec& spec, double t);
/// Analytic body-frame twist [v; w] at time t.
Twist circular_body_velocity(const CircularMotionSpec& spec, double t);

std::vector<StampedPose> generate_circular(const CircularMotionSpec& spec);

/// Log(T_k^-1 T_k1) / dt.
Twist dt_velocity_coupled(const Pose& t_k, const Pose& t_k1, double dt);
/// Translation and rotation rates computed independently.
Twist dt_velocity_decoupled(const Pose& t_k, const Pose& t_k1, double dt);

/// Spline whose control points are the given poses, with the knots shifted back by
/// order/2 frame intervals so that each pose anchors the spline near its own timestamp.
/// Requires uniformly spaced timestamps.
SplineTrajectory matched_spline(const std::vector<StampedPose>& poses, int order);

struct VelocityMseCell {
  double theta_transl = 0.0;
  double theta_rot = 0.0;
  // Mean squared norm of the velocity error: linear in (m/s)^2, angular in (rad/s)^2.
  double ct_v = 0.0, ct_w = 0.0;
  double coupled_v = 0.0, coupled_w = 0.0;
  double decoupled_v = 0.0, decoupled_w = 0.0;
  int n_samples = 0;
};

struct VelocityExperimentConfig {
  std::vector<double> theta_transl;
  std::vector<double> theta_rot;
  CircularMotionSpec base;  // radius, frame_dt, n_frames
  int order = 4;
  int samples_per_interval = 10;

  /// {0, 0.05, ..., 0.5} on both axes, unit radius, 0.1 s frames, 30 frames.
  static VelocityExperimentConfig Default();
};

VelocityMseCell velocity_mse_cell(const CircularMotionSpec& spec, int order,
                                  int samples_per_interval);
/// Row-major over (theta_transl, theta_rot).
std::vector<VelocityMseCell> velocity_mse_experiment(const VelocityExperimentConfig& config);

/// p_c = T_wc^-1 T_wo p_o + N(0, sigma^2 I) for every point and frame. Camera and truth
/// lists must share timestamps.
std::vector<Observation> simulate_observations(const std::vector<StampedPose>& truth,
                                               const std::vector<Vector3d>& points,
                                               const std::vector<StampedPose>& cameras,
                                               double noise_sigma, std::uint64_t seed);

struct SimulatedScene {
  std::vector<StampedPose> ground_truth;
  std::vector<Vector3d> object_points;  // object frame, centered on the origin
  std::vector<StampedPose> camera_poses;
  double noise_sigma = 0.0;
  std::uint64_t rng_seed = 0;
  std::vector<Observation> observations;
};

/// Random object points in a box of the given half-extent, with their centroid moved
/// exactly to the origin.
std::vector<Vector3d> random_object_points(int n, double half_extent, std::uint64_t seed);

/// Circular motion seen from a static camera placed above and behind the circle.
SimulatedScene simulate_circular_scene(const CircularMotionSpec& spec, int n_points,
                                       double noise_sigma, std::uint64_t seed);

/// RMS translational error after a rigid alignment of the estimate onto the truth, fitted
/// on the first align_prefix poses (0 = all).
double ate(const std::vector<Pose>& estimated, const std::vector<Pose>& truth,
           int align_prefix = 0);

}  // namespace ctrack
