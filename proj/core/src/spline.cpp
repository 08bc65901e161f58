#include "ctrack/spline.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "ctrack/errors.hpp"

namespace ctrack {
namespace {

using Poly = BasisVector;  // coefficients in u, lowest power first

std::string format_time(double t) {
  std::ostringstream os;
  os.precision(17);
  os << t;
  return os.str();
}

}  // namespace

KnotVector::KnotVector(int order, std::vector<double> knots) : order_(order), knots_(std::move(knots)) {
  if (order_ < 2 || order_ > kMaxOrder) {
    throw ValidationError("spline order must be in [2, " + std::to_string(kMaxOrder) + "], got " +
                          std::to_string(order_));
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) {
      throw ValidationError("knots must be strictly increasing (index " + std::to_string(i) + ")");
    }
  }
}

double KnotVector::at(int index) const {
  const int n = size() - 1;
  if (index <= n) return knots_.at(index);
  if (n < 1) throw ValidationError("knot extrapolation needs at least two knots");
  return knots_[n] + (index - n) * (knots_[n] - knots_[n - 1]);
}

void KnotVector::append(double t) {
  if (!knots_.empty() && !(t > knots_.back())) {
    throw ValidationError("non-monotonic knot " + format_time(t) + " after " +
                          format_time(knots_.back()));
  }
  knots_.push_back(t);
}

BasisMatrix cumulative_basis_matrix(const KnotVector& kv, int span) {
  const int k = kv.order();
  const int i = span;
  if (i < k - 1 || i >= kv.size()) {
    throw ValidationError("span " + std::to_string(i) + " has insufficient knots for order " +
                          std::to_string(k));
  }
  const double ti = kv.at(i);
  const double dt = kv.at(i + 1) - ti;

  // Standard bases N_j, j = i-k+1 .. i, as polynomials in u on this span. Level 1 is the
  // indicator of the span itself; each level raises the degree by one.
  const int first = i - k + 1;
  std::vector<Poly> n(k + 1, Poly::Zero(k));
  n[k - 1](0) = 1.0;  // N_{i,1}
  for (int m = 2; m <= k; ++m) {
    for (int c = 0; c < k; ++c) {
      const int j = first + c;
      Poly next = Poly::Zero(k);
      // (t - t_j) / (t_{j+m-1} - t_j) * N_{j,m-1}
      const double d1 = kv.at(j + m - 1) - kv.at(j);
      if (d1 > 0.0) {
        const double off = (ti - kv.at(j)) / d1;
        const double slope = dt / d1;
        for (int r = k - 1; r >= 0; --r) {
          next(r) += off * n[c](r);
          if (r + 1 < k) next(r + 1) += slope * n[c](r);
        }
      }
      // (t_{j+m} - t) / (t_{j+m} - t_{j+1}) * N_{j+1,m-1}
      const double d2 = kv.at(j + m) - kv.at(j + 1);
      if (d2 > 0.0) {
        const double off = (kv.at(j + m) - ti) / d2;
        const double slope = -dt / d2;
        for (int r = k - 1; r >= 0; --r) {
          next(r) += off * n[c + 1](r);
          if (r + 1 < k) next(r + 1) += slope * n[c + 1](r);
        }
      }
      n[c] = next;
    }
    n[k].setZero();
  }

  BasisMatrix m(k, k);
  Poly acc = Poly::Zero(k);
  for (int c = k - 1; c >= 1; --c) {
    acc += n[c];
    m.col(c) = acc;
  }
  m.col(0).setZero();
  m(0, 0) = 1.0;
  return m;
}

SplineTrajectory::SplineTrajectory(int order, std::vector<double> knots,
                                   std::vector<Pose> control_points)
    : knots_(order, std::move(knots)), control_points_(std::move(control_points)) {
  if (static_cast<int>(control_points_.size()) != knots_.size()) {
    throw ValidationError("need one control point per knot (" + std::to_string(knots_.size()) +
                          " knots, " + std::to_string(control_points_.size()) +
                          " control points)");
  }
  increments_.assign(control_points_.size(), Twist::Zero());
  increment_errors_.assign(control_points_.size(), std::string());
  for (int i = 1; i < size(); ++i) refresh_increment(i);
  rebuild_basis();
}

void SplineTrajectory::set_control_point(int index, const Pose& pose) {
  control_points_.at(index) = pose;
  if (index >= 1) refresh_increment(index);
  if (index + 1 < size()) refresh_increment(index + 1);
}

void SplineTrajectory::append(double t, const Pose& pose) {
  knots_.append(t);
  control_points_.push_back(pose);
  increments_.push_back(Twist::Zero());
  increment_errors_.emplace_back();
  if (size() > 1) refresh_increment(size() - 1);
  rebuild_basis();
}

void SplineTrajectory::refresh_increment(int index) {
  try {
    increments_[index] = log_se3(control_points_[index - 1].inverse() * control_points_[index]);
    increment_errors_[index].clear();
  } catch (const BranchError& e) {
    increments_[index].setConstant(std::numeric_limits<double>::quiet_NaN());
    increment_errors_[index] = e.what();
  }
}

void SplineTrajectory::rebuild_basis() {
  const int k = order();
  basis_.clear();
  if (size() < std::max(k, 2)) return;
  for (int span = k - 1; span < size(); ++span) basis_.push_back(cumulative_basis_matrix(knots_, span));
}

std::pair<double, double> SplineTrajectory::domain() const {
  const int k = order();
  if (size() < k + 1) {
    throw DomainError("trajectory of order " + std::to_string(k) + " needs at least " +
                      std::to_string(k + 1) + " control points, has " + std::to_string(size()));
  }
  return {knots_.at(k - 1), knots_.at(size() - 1)};
}

bool SplineTrajectory::contains(double t, Endpoint endpoint) const {
  const int k = order();
  if (size() < std::max(k, 2)) return false;
  const double lo = knots_.at(k - 1);
  const double hi = knots_.at(size() - 1);
  if (endpoint == Endpoint::kClosed) return t >= lo && t <= hi;
  return t >= lo && t < hi;
}

SplinePoint SplineTrajectory::locate(double t, Endpoint endpoint) const {
  if (!contains(t, endpoint)) {
    const int k = order();
    if (size() < std::max(k, 2)) {
      throw DomainError("timestamp " + format_time(t) + " outside trajectory: too few control points");
    }
    throw DomainError("timestamp " + format_time(t) + " outside trajectory domain [" +
                      format_time(knots_.at(k - 1)) + ", " + format_time(knots_.at(size() - 1)) +
                      (endpoint == Endpoint::kClosed ? "]" : ")"));
  }
  const auto& ks = knots_.knots();
  const int k = order();
  // Last knot <= t, restricted to spans with a full set of preceding control points.
  auto it = std::upper_bound(ks.begin() + (k - 1), ks.end(), t);
  const int span = static_cast<int>(it - ks.begin()) - 1;
  SplinePoint p;
  p.span = span;
  p.dt = knots_.at(span + 1) - knots_.at(span);
  p.u = (t - knots_.at(span)) / p.dt;
  return p;
}

const BasisMatrix& SplineTrajectory::basis_matrix(int span) const {
  return basis_.at(span - (order() - 1));
}

const Twist& SplineTrajectory::increment(int index) const {
  if (!increment_errors_.at(index).empty()) {
    throw BranchError("control points " + std::to_string(index - 1) + " and " +
                      std::to_string(index) + ": " + increment_errors_[index]);
  }
  return increments_[index];
}

BasisValues SplineTrajectory::evaluate_basis(const SplinePoint& p) const {
  const int k = order();
  const BasisMatrix& m = basis_matrix(p.span);
  BasisVector pw(k), d1(k), d2(k);
  pw.setZero();
  d1.setZero();
  d2.setZero();
  double up = 1.0;  // u^r
  for (int r = 0; r < k; ++r) {
    pw(r) = up;
    if (r + 1 < k) d1(r + 1) = (r + 1) * up;
    if (r + 2 < k) d2(r + 2) = (r + 2) * (r + 1) * up;
    up *= p.u;
  }
  BasisValues out;
  out.value = m.transpose() * pw;
  out.first = m.transpose() * d1 / p.dt;
  out.second = m.transpose() * d2 / (p.dt * p.dt);
  // The oldest control point always carries weight exactly one.
  out.value(0) = 1.0;
  out.first(0) = 0.0;
  out.second(0) = 0.0;
  return out;
}

SpanEvaluation SplineTrajectory::evaluate(const SplinePoint& p) const {
  const int k = order();
  SpanEvaluation e;
  e.order = k;
  e.first_index = p.span - k + 1;
  e.basis = evaluate_basis(p);
  for (int j = 0; j < k; ++j) e.control[j] = control_points_[e.first_index + j];
  e.factor[0] = e.control[0];
  e.prefix[0] = Pose::Identity();
  Pose acc = e.factor[0];
  for (int j = 1; j < k; ++j) {
    e.prefix[j] = acc;
    e.omega[j] = increment(e.first_index + j);
    e.a[j] = e.basis.value(j) * e.omega[j];
    e.factor[j] = exp_se3(e.a[j]);
    acc = acc * e.factor[j];
  }
  e.pose = acc;
  return e;
}

VelocityRecursion velocity_recursion(const SpanEvaluation& e) {
  VelocityRecursion r;
  r.tau[0].setZero();
  r.h[0].setZero();
  for (int j = 1; j < e.order; ++j) {
    r.h[j] = adjoint(e.factor[j].inverse()) * r.tau[j - 1];
    r.tau[j] = r.h[j] + e.basis.first(j) * e.omega[j];
  }
  return r;
}

Pose SplineTrajectory::interpolate_pose(double t, Endpoint endpoint) const {
  return evaluate(locate(t, endpoint)).pose;
}

Twist SplineTrajectory::body_velocity(double t, Endpoint endpoint) const {
  const SpanEvaluation e = evaluate(locate(t, endpoint));
  return velocity_recursion(e).tau[e.order - 1];
}

Twist SplineTrajectory::body_acceleration(double t, Endpoint endpoint) const {
  return span_body_acceleration(evaluate(locate(t, endpoint)));
}

Twist span_body_velocity(const SpanEvaluation& e) { return velocity_recursion(e).tau[e.order - 1]; }

Twist span_body_acceleration(const SpanEvaluation& e) {
  const VelocityRecursion r = velocity_recursion(e);
  Twist acc = Twist::Zero();
  for (int j = 1; j < e.order; ++j) {
    acc = adjoint(e.factor[j].inverse()) * acc + e.basis.second(j) * e.omega[j] -
          e.basis.first(j) * (ad(e.omega[j]) * r.h[j]);
  }
  return acc;
}

}  // namespace ctrack
