#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ctrack/lie.hpp"

namespace ctrack {

// Largest supported spline order (number of control points per span).
inline constexpr int kMaxOrder = 8;

using BasisVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxOrder, 1>;
/// Row r holds the coefficients of u^r; column c is the cumulative basis of the c-th
/// control point of the span (oldest first).
using BasisMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxOrder, kMaxOrder>;

/// Knot timestamps plus the spline order k (k = 4 is the cubic spline).
class KnotVector {
 public:
  KnotVector() = default;
  KnotVector(int order, std::vector<double> knots);

  int order() const { return order_; }
  int size() const { return static_cast<int>(knots_.size()); }
  const std::vector<double>& knots() const { return knots_; }

  /// Knot timestamp; indices past the last knot are extrapolated with the final spacing.
  double at(int index) const;

  void append(double t);

 private:
  int order_ = 4;
  std::vector<double> knots_;
};

/// Cumulative basis matrix of span [t_i, t_{i+1}), built from the de Boor-Cox recurrence.
BasisMatrix cumulative_basis_matrix(const KnotVector& kv, int span);

enum class Endpoint {
  kOpen,    // [t_{k-1}, t_n)
  kClosed,  // [t_{k-1}, t_n]; t_n maps to the extrapolated span n
};

struct SplinePoint {
  int span = 0;
  double u = 0.0;
  double dt = 0.0;  // t_{span+1} - t_span
};

struct BasisValues {
  BasisVector value;
  BasisVector first;   // d/dt
  BasisVector second;  // d^2/dt^2
};

class SplineTrajectory;

/// Every intermediate of one pose evaluation; shared by interpolation and the Jacobians.
struct SpanEvaluation {
  int first_index = 0;  // global index of the oldest control point of the span
  int order = 0;
  BasisValues basis;
  std::array<Pose, kMaxOrder> control{};  // control points of the span, oldest first
  std::array<Twist, kMaxOrder> omega{};  // omega[j] = Log(C_{j-1}^-1 C_j); omega[0] unused
  std::array<Twist, kMaxOrder> a{};      // a[j] = B_j * omega[j]
  std::array<Pose, kMaxOrder> factor{};  // factor[0] = C_0, factor[j] = Exp(a[j])
  std::array<Pose, kMaxOrder> prefix{};  // prefix[j] = C_0 * factor[1] ... factor[j-1]; prefix[0] = I
  Pose pose;
};

class SplineTrajectory {
 public:
  SplineTrajectory() = default;
  SplineTrajectory(int order, std::vector<double> knots, std::vector<Pose> control_points);

  int order() const { return knots_.order(); }
  int size() const { return knots_.size(); }
  const KnotVector& knot_vector() const { return knots_; }
  const std::vector<double>& knots() const { return knots_.knots(); }
  const std::vector<Pose>& control_points() const { return control_points_; }
  const Pose& control_point(int index) const { return control_points_.at(index); }

  void set_control_point(int index, const Pose& pose);
  /// Adds a knot after the last one.
  void append(double t, const Pose& pose);

  /// Evaluable time range; throws DomainError for too few control points.
  std::pair<double, double> domain() const;
  bool contains(double t, Endpoint endpoint = Endpoint::kOpen) const;
  SplinePoint locate(double t, Endpoint endpoint = Endpoint::kOpen) const;

  const BasisMatrix& basis_matrix(int span) const;
  /// Log(C_{index-1}^-1 C_index); throws BranchError if it is at the pi cut.
  const Twist& increment(int index) const;

  BasisValues evaluate_basis(const SplinePoint& p) const;
  BasisValues evaluate_basis(double t) const { return evaluate_basis(locate(t)); }

  SpanEvaluation evaluate(const SplinePoint& p) const;

  Pose interpolate_pose(double t, Endpoint endpoint = Endpoint::kOpen) const;
  Twist body_velocity(double t, Endpoint endpoint = Endpoint::kOpen) const;
  Twist body_acceleration(double t, Endpoint endpoint = Endpoint::kOpen) const;

 private:
  void refresh_increment(int index);
  void rebuild_basis();

  KnotVector knots_;
  std::vector<Pose> control_points_;
  // increments_[i] pairs with control point i; entry 0 is unused.
  std::vector<Twist> increments_;
  std::vector<std::string> increment_errors_;
  // basis_[s] belongs to span s + order - 1.
  std::vector<BasisMatrix> basis_;
};

/// Velocity recursion of one span: body twists after each factor, for reuse by the Jacobians.
struct VelocityRecursion {
  std::array<Twist, kMaxOrder> tau{};  // tau[j] after factors 1..j; tau[0] = 0
  std::array<Twist, kMaxOrder> h{};    // h[j] = Ad(factor[j]^-1) tau[j-1]
};
VelocityRecursion velocity_recursion(const SpanEvaluation& e);

/// Body velocity and acceleration of an evaluated span point (e.g. a span end at u = 1).
Twist span_body_velocity(const SpanEvaluation& e);
Twist span_body_acceleration(const SpanEvaluation& e);

}  // namespace ctrack
