#include "ctrack/solver.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "ctrack/errors.hpp"

namespace ctrack {
namespace {

int trailing_fixed(int order) { return std::max(1, order - 2); }

struct Layout {
  std::vector<int> pose_offset;          // per control point, -1 if fixed
  std::map<int, int> point_offset;       // object point id -> offset
  int size = 0;
};

Layout make_layout(const Window& w) {
  Layout l;
  l.pose_offset.assign(w.trajectory.size(), -1);
  for (int i = 0; i < w.trajectory.size(); ++i) {
    if (!w.fixed.at(i)) {
      l.pose_offset[i] = l.size;
      l.size += 6;
    }
  }
  if (w.mode == BaMode::kLocalBA) {
    for (int id : w.free_points) {
      l.point_offset[id] = l.size;
      l.size += 3;
    }
  }
  return l;
}

struct NormalEquations {
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  double cost = 0.0;
};

NormalEquations build_normal_equations(const Window& w, const Layout& l, const SolverConfig& c) {
  NormalEquations ne;
  ne.h = Eigen::MatrixXd::Zero(l.size, l.size);
  ne.g = Eigen::VectorXd::Zero(l.size);
  for (const Frame& f : w.frames) {
    if (!w.trajectory.contains(f.timestamp, Endpoint::kClosed)) continue;
    const SpanEvaluation e = w.trajectory.evaluate(w.trajectory.locate(f.timestamp, Endpoint::kClosed));
    // The pose Jacobian is shared by every observation of the frame.
    PoseVecJacobian jt_vec;
    PoseLogJacobian jt_log;
    if (c.form == PoseForm::kVectorized) {
      jt_vec = d_pose_vec_d_control_points(e);
    } else {
      jt_log = d_pose_log_d_control_points(e);
    }
    for (const Observation& obs : f.observations) {
      const auto it = w.object_points.find(obs.point_id);
      if (it == w.object_points.end()) continue;
      const Vector3d& p_o = it->second;
      const Vector3d r = obs.p_c - obs.camera_pose.inverse() * (e.pose * p_o);
      const Matrix3d info = obs.covariance.inverse();
      const double s = r.dot(info * r);
      ne.cost += 0.5 * huber(s, c.huber_delta);
      const double weight = huber_weight(s, c.huber_delta);

      const ErrorJacobian je =
          c.form == PoseForm::kVectorized
              ? chain_error_jacobian(d_error_d_pose_vec(p_o, obs.camera_pose, e.pose), jt_vec)
              : chain_error_jacobian(d_error_d_pose_log(p_o, obs.camera_pose, e.pose), jt_log);
      // Sparse row block: only the span's free control points and this object point.
      std::vector<std::pair<int, Eigen::Matrix<double, 3, Eigen::Dynamic>>> cols;
      for (int m = 0; m < e.order; ++m) {
        const int off = l.pose_offset[e.first_index + m];
        if (off >= 0) cols.emplace_back(off, je.blocks[m]);
      }
      const auto pit = l.point_offset.find(obs.point_id);
      if (pit != l.point_offset.end()) {
        cols.emplace_back(pit->second, d_error_d_point(obs.camera_pose, e.pose));
      }
      for (const auto& [oa, ja] : cols) {
        const Eigen::MatrixXd wa = weight * ja.transpose() * info;
        ne.g.segment(oa, ja.cols()) += wa * r;
        for (const auto& [ob, jb] : cols) ne.h.block(oa, ob, ja.cols(), jb.cols()) += wa * jb;
      }
    }
  }
  return ne;
}

void apply_update(Window& w, const Layout& l, const Eigen::VectorXd& dx) {
  for (int i = 0; i < w.trajectory.size(); ++i) {
    const int off = l.pose_offset[i];
    if (off < 0) continue;
    const Twist xi = dx.segment<6>(off);
    w.trajectory.set_control_point(i, exp_se3(xi) * w.trajectory.control_point(i));
  }
  for (const auto& [id, off] : l.point_offset) w.object_points[id] += dx.segment<3>(off);
}

Eigen::VectorXd solve_damped(const NormalEquations& ne, double damping, double min_rcond) {
  Eigen::MatrixXd h = ne.h;
  if (damping > 0.0) h.diagonal().array() += damping;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  const double rcond = ldlt.info() == Eigen::Success ? ldlt.rcond() : 0.0;
  if (!(rcond >= min_rcond)) {
    throw SingularSystemError("normal equations are singular or ill-conditioned (rcond " +
                                  std::to_string(rcond) + ", " + std::to_string(h.rows()) +
                                  " unknowns)",
                              rcond);
  }
  return ldlt.solve(-ne.g);
}

Pose principal_axes_pose(const std::vector<Vector3d>& pts) {
  if (pts.size() < 3) {
    throw DegenerateInputError("bootstrap needs at least 3 points, got " + std::to_string(pts.size()));
  }
  Vector3d centroid = Vector3d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Matrix3d cov = Matrix3d::Zero();
  for (const auto& p : pts) cov += (p - centroid) * (p - centroid).transpose();
  cov /= static_cast<double>(pts.size());

  const Eigen::SelfAdjointEigenSolver<Matrix3d> eig(cov);
  const Vector3d ev = eig.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
    throw DegenerateInputError("bootstrap point cloud is collinear or coincident");
  }
  Vector3d a1 = eig.eigenvectors().col(2);
  Vector3d a2 = eig.eigenvectors().col(1);
  constexpr double kAxisEps = 1e-12;
  if (a1.x() < -kAxisEps || (std::abs(a1.x()) <= kAxisEps && a1.y() < 0.0)) a1 = -a1;
  if (a2.y() < -kAxisEps || (std::abs(a2.y()) <= kAxisEps && a2.z() < 0.0)) a2 = -a2;
  Matrix3d r;
  r.col(0) = a1;
  r.col(1) = a2;
  r.col(2) = a1.cross(a2);
  return Pose(r, centroid);
}

void check_frame(const Frame& frame) {
  if (frame.observations.empty()) throw ValidationError("frame without observations");
  for (const auto& o : frame.observations) {
    if (o.timestamp != frame.timestamp) {
      throw ValidationError("observation timestamp differs from its frame timestamp");
    }
  }
}

}  // namespace

std::vector<Frame> group_frames(const std::vector<Observation>& observations) {
  std::map<double, Frame> by_time;
  for (const auto& o : observations) {
    Frame& f = by_time[o.timestamp];
    f.timestamp = o.timestamp;
    f.observations.push_back(o);
  }
  std::vector<Frame> out;
  out.reserve(by_time.size());
  for (auto& [t, f] : by_time) out.push_back(std::move(f));
  return out;
}

// First control point touched by the oldest frame in the window.
int Window::first_active() const {
  return std::max(0, trajectory.size() - window_size - (trajectory.order() - 1));
}

double huber(double s, double delta) {
  const double d2 = delta * delta;
  if (s <= d2) return s;
  return 2.0 * delta * std::sqrt(s) - d2;
}

double huber_weight(double s, double delta) {
  if (s <= delta * delta) return 1.0;
  return std::clamp(delta / std::sqrt(s), 0.0, 1.0);
}

Vector3d residual(const Observation& obs, const Vector3d& p_o, const SplineTrajectory& traj) {
  const Pose t_wo = traj.interpolate_pose(obs.timestamp, Endpoint::kClosed);
  return obs.p_c - obs.camera_pose.inverse() * (t_wo * p_o);
}

std::vector<const Observation*> active_observations(const Window& window) {
  std::vector<const Observation*> out;
  for (const Frame& f : window.frames) {
    if (!window.trajectory.contains(f.timestamp, Endpoint::kClosed)) continue;
    for (const auto& o : f.observations) {
      if (window.object_points.count(o.point_id)) out.push_back(&o);
    }
  }
  return out;
}

double total_cost(const Window& window, const SolverConfig& config) {
  double cost = 0.0;
  for (const Observation* o : active_observations(window)) {
    const Vector3d r = residual(*o, window.object_points.at(o->point_id), window.trajectory);
    cost += 0.5 * huber(r.dot(o->covariance.inverse() * r), config.huber_delta);
  }
  return cost;
}

double residual_rms(const Window& window) {
  const auto obs = active_observations(window);
  if (obs.empty()) return 0.0;
  double sum = 0.0;
  for (const Observation* o : obs) {
    sum += residual(*o, window.object_points.at(o->point_id), window.trajectory).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(obs.size()));
}

StepResult gauss_newton_step(Window& window, const SolverConfig& config, double& damping) {
  const Layout layout = make_layout(window);
  if (layout.size == 0) throw ValidationError("window has no free variables");
  const NormalEquations ne = build_normal_equations(window, layout, config);

  StepResult out;
  out.cost_before = ne.cost;
  out.cost_after = ne.cost;

  auto try_step = [&](double lambda) {
    const Eigen::VectorXd dx = solve_damped(ne, lambda, config.min_rcond);
    Window candidate = window;
    apply_update(candidate, layout, dx);
    const double cost = total_cost(candidate, config);
    if (cost <= ne.cost) {
      window = std::move(candidate);
      out.accepted = true;
      out.cost_after = cost;
      out.step_norm = dx.lpNorm<Eigen::Infinity>();
      out.damping = lambda;
      return true;
    }
    return false;
  };

  if (try_step(0.0)) return out;
  for (int attempt = 0; attempt < config.max_damping_attempts; ++attempt) {
    if (try_step(damping)) {
      damping = std::max(damping / 10.0, config.damping_init * 1e-6);
      return out;
    }
    damping *= 10.0;
  }
  return out;
}

SolveReport solve(Window& window, const SolverConfig& config) {
  SolveReport report;
  report.initial_cost = total_cost(window, config);
  report.final_cost = report.initial_cost;
  double damping = config.damping_init;
  report.stop_reason = "max_iterations";
  for (int it = 0; it < config.max_iterations; ++it) {
    if (report.final_cost == 0.0) {
      report.stop_reason = "zero_cost";
      break;
    }
    const StepResult step = gauss_newton_step(window, config, damping);
    ++report.iterations;
    if (!step.accepted) {
      report.stop_reason = "no_descent";
      break;
    }
    const double previous = report.final_cost;
    report.final_cost = step.cost_after;
    if (step.step_norm < config.step_tolerance) {
      report.stop_reason = "step_tolerance";
      break;
    }
    if (previous - step.cost_after <= config.cost_tolerance * previous) {
      report.stop_reason = "cost_tolerance";
      break;
    }
  }
  report.rms = residual_rms(window);
  return report;
}

void apply_gauge_policy(Window& window) {
  const int n = window.trajectory.size();
  const int k = window.trajectory.order();
  const int first = window.first_active();
  window.fixed.assign(n, false);
  for (int i = 0; i <= std::min(first, n - 1); ++i) window.fixed[i] = true;
  if (window.mode == BaMode::kLocalBA && first + 1 < n) window.fixed[first + 1] = true;
  for (int i = std::max(0, n - trailing_fixed(k)); i < n; ++i) window.fixed[i] = true;

  window.free_points.clear();
  if (window.mode != BaMode::kLocalBA) return;
  std::map<int, int> seen;
  for (const Frame& f : window.frames) {
    if (!window.trajectory.contains(f.timestamp, Endpoint::kClosed)) continue;
    std::set<int> ids;
    for (const auto& o : f.observations) ids.insert(o.point_id);
    for (int id : ids) ++seen[id];
  }
  for (const auto& [id, count] : seen) {
    if (count >= 2 && window.object_points.count(id)) window.free_points.push_back(id);
  }
}

Window bootstrap(const Frame& first_frame, int order, BaMode mode, int window_size) {
  check_frame(first_frame);
  if (window_size < order) {
    throw ValidationError("window size " + std::to_string(window_size) +
                          " is smaller than the spline order " + std::to_string(order));
  }
  std::vector<Vector3d> world;
  world.reserve(first_frame.observations.size());
  for (const auto& o : first_frame.observations) world.push_back(o.camera_pose * o.p_c);
  const Pose t0 = principal_axes_pose(world);

  Window w;
  w.mode = mode;
  w.window_size = window_size;
  w.trajectory = SplineTrajectory(order, {first_frame.timestamp}, {t0});
  const Pose t0_inv = t0.inverse();
  for (std::size_t i = 0; i < world.size(); ++i) {
    w.object_points.emplace(first_frame.observations[i].point_id, t0_inv * world[i]);
  }
  w.frames.push_back(first_frame);
  apply_gauge_policy(w);
  return w;
}

void advance_window(Window& window, const Frame& frame) {
  check_frame(frame);
  SplineTrajectory& traj = window.trajectory;
  if (traj.size() > 0 && !(frame.timestamp > traj.knots().back())) {
    throw ValidationError("non-monotonic frame timestamp " + std::to_string(frame.timestamp));
  }
  traj.append(frame.timestamp, traj.control_points().back());
  const int i = traj.size() - 1;
  const int reinit = i - trailing_fixed(traj.order());
  // Index 0 carries the bootstrap orientation and stays put.
  if (reinit >= 1) {
    Vector3d centroid = Vector3d::Zero();
    for (const auto& o : frame.observations) centroid += o.camera_pose * o.p_c;
    centroid /= static_cast<double>(frame.observations.size());
    traj.set_control_point(reinit, Pose(traj.control_point(reinit - 1).rotation(), centroid));
    // The trailing points have never been optimized; restart them from the fresh estimate
    // so that stale guesses do not accumulate down the stream.
    for (int j = reinit + 1; j <= i; ++j) traj.set_control_point(j, traj.control_point(reinit));
  }
  window.frames.push_back(frame);
  if (static_cast<int>(window.frames.size()) > window.window_size) {
    window.frames.erase(window.frames.begin(),
                        window.frames.end() - window.window_size);
  }
  apply_gauge_policy(window);
}

int min_frames_for_optimization(int order) { return order; }

TrackResult track_object(const std::vector<Frame>& frames, int order, BaMode mode,
                         int window_size, const SolverConfig& config) {
  if (static_cast<int>(frames.size()) < min_frames_for_optimization(order)) {
    throw ValidationError("need at least " + std::to_string(min_frames_for_optimization(order)) +
                          " frames, got " + std::to_string(frames.size()));
  }
  TrackResult result;
  Window w = bootstrap(frames.front(), order, mode, window_size);
  for (std::size_t f = 1; f < frames.size(); ++f) {
    advance_window(w, frames[f]);
    if (w.trajectory.size() < min_frames_for_optimization(order)) continue;
    if (make_layout(w).size == 0) continue;
    result.reports.push_back(solve(w, config));
  }
  result.trajectory = w.trajectory;
  result.object_points = w.object_points;

  // Final residual over the whole stream, with the final trajectory.
  double sum = 0.0;
  std::size_t count = 0;
  for (const Frame& f : frames) {
    if (!w.trajectory.contains(f.timestamp, Endpoint::kClosed)) continue;
    for (const auto& o : f.observations) {
      const auto it = w.object_points.find(o.point_id);
      if (it == w.object_points.end()) continue;
      sum += residual(o, it->second, w.trajectory).squaredNorm();
      ++count;
    }
  }
  result.final_rms = count ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
  return result;
}

}  // namespace ctrack
