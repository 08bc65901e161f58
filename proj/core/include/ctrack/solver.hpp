#pragma once

#include <map>
#include <string>
#include <vector>

#include "ctrack/jacobians.hpp"
#include "ctrack/lie.hpp"
#include "ctrack/spline.hpp"

namespace ctrack {

struct Observation {
  int point_id = 0;
  double timestamp = 0.0;
  Vector3d p_c = Vector3d::Zero();  // measured point, camera frame
  Pose camera_pose;                 // T_wc
  Matrix3d covariance = Matrix3d::Identity();
};

/// Observations sharing one timestamp.
struct Frame {
  double timestamp = 0.0;
  std::vector<Observation> observations;
};

/// Groups observations by timestamp, in increasing time order.
std::vector<Frame> group_frames(const std::vector<Observation>& observations);

enum class BaMode { kSplineBA, kLocalBA };

struct SolverConfig {
  double huber_delta = 0.05;
  int max_iterations = 20;
  double step_tolerance = 1e-8;
  double cost_tolerance = 1e-10;
  double damping_init = 1e-4;
  int max_damping_attempts = 10;
  PoseForm form = PoseForm::kVectorized;
  // Below this reciprocal condition number the normal equations are rejected.
  double min_rcond = 1e-14;
};

struct Window {
  SplineTrajectory trajectory;
  std::map<int, Vector3d> object_points;
  std::vector<Frame> frames;        // the most recent window_size frames
  std::vector<bool> fixed;          // one flag per control point
  std::vector<int> free_points;     // object points updated in LocalBA
  BaMode mode = BaMode::kSplineBA;
  int window_size = 6;

  /// Index of the first control point within reach of the window frames.
  int first_active() const;
};

/// Huber kernel on the squared Mahalanobis norm s.
double huber(double s, double delta);
/// Its derivative, clamped to [0, 1].
double huber_weight(double s, double delta);

/// p_c - T_wc^-1 T_wo(t) p_o. The newest knot is an admissible timestamp.
Vector3d residual(const Observation& obs, const Vector3d& p_o, const SplineTrajectory& traj);

/// Observations of the window that have both an object point and an evaluable timestamp.
std::vector<const Observation*> active_observations(const Window& window);

double total_cost(const Window& window, const SolverConfig& config);
/// sqrt of the mean squared residual norm over the active observations.
double residual_rms(const Window& window);

struct StepResult {
  double step_norm = 0.0;  // infinity norm of the accepted update
  double cost_before = 0.0;
  double cost_after = 0.0;
  bool accepted = false;
  double damping = 0.0;  // 0 for a pure Gauss-Newton step
};

/// One robustified Gauss-Newton update of the free variables, with Levenberg fallback.
StepResult gauss_newton_step(Window& window, const SolverConfig& config, double& damping);

struct SolveReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double rms = 0.0;
  std::string stop_reason;
};

SolveReport solve(Window& window, const SolverConfig& config);

/// Starts a window from the first frame: one control point at the cloud centroid, oriented
/// along its principal axes, and object points expressed in that frame.
Window bootstrap(const Frame& first_frame, int order, BaMode mode, int window_size);

/// Adds the frame's knot and control point, re-initializes the newest free control point
/// from the frame centroid, slides the window and refreshes the gauge flags.
void advance_window(Window& window, const Frame& frame);

/// Recomputes fixed flags and free object points from the window contents: evicted and
/// first active control points (plus the second in LocalBA) and the trailing ones are fixed;
/// in LocalBA only points seen in at least two evaluable frames move.
void apply_gauge_policy(Window& window);

/// Number of window frames needed before optimizing.
int min_frames_for_optimization(int order);

struct TrackResult {
  SplineTrajectory trajectory;
  std::map<int, Vector3d> object_points;
  std::vector<SolveReport> reports;  // one per optimized frame
  double final_rms = 0.0;            // over all evaluable observations
};

/// Runs the sliding-window estimator over a whole observation stream.
TrackResult track_object(const std::vector<Frame>& frames, int order, BaMode mode,
                         int window_size, const SolverConfig& config);

}  // namespace ctrack
