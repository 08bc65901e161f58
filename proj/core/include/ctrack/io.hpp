#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ctrack/lie.hpp"
#include "ctrack/solver.hpp"
#include "ctrack/spline.hpp"

namespace ctrack {

/// Pose from a translation and a unit quaternion (x, y, z, w); the norm must be within 1e-6
/// of one.
Pose pose_from_quaternion(const Vector3d& t, const Eigen::Vector4d& q_xyzw);
/// Unit quaternion (x, y, z, w) with w >= 0.
Eigen::Vector4d quaternion_from_rotation(const Matrix3d& r);

// Whitespace-separated "timestamp tx ty tz qx qy qz qw" records, '#' starts a comment.
std::vector<StampedPose> parse_trajectory(std::istream& in, const std::string& source);
std::vector<StampedPose> read_trajectory(const std::string& path);
std::string format_trajectory(const std::vector<StampedPose>& poses, const std::string& header = {});

// Same records for knots and control points, with an "# order <k>" line.
SplineTrajectory parse_control_points(std::istream& in, const std::string& source);
SplineTrajectory read_control_points(const std::string& path);
std::string format_control_points(const SplineTrajectory& traj);

// CSV: timestamp,point_id,pcx,pcy,pcz,tx,ty,tz,qx,qy,qz,qw (camera pose is T_wc).
std::vector<Observation> parse_observations(std::istream& in, const std::string& source);
std::vector<Observation> read_observations(const std::string& path);
std::string format_observations(const std::vector<Observation>& observations);

// CSV: point_id,x,y,z in the object frame.
std::string format_object_points(const std::map<int, Vector3d>& points);

/// Writes through a temporary file in the same directory, then renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace ctrack
