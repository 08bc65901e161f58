#include "ctrack/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Geometry>

#include "ctrack/errors.hpp"

namespace ctrack {
namespace {

Matrix3d rot_x(double a) { return Eigen::AngleAxisd(a, Vector3d::UnitX()).toRotationMatrix(); }
Matrix3d rot_z(double a) { return Eigen::AngleAxisd(a, Vector3d::UnitZ()).toRotationMatrix(); }

}  // namespace

void CircularMotionSpec::validate() const {
  if (!(frame_dt > 0.0)) throw ValidationError("frame_dt must be positive");
  if (n_frames < 4) throw ValidationError("n_frames must be at least 4");
  if (!(radius >= 0.0)) throw ValidationError("radius must be non-negative");
}

Pose circular_pose(const CircularMotionSpec& spec, double t) {
  const double s = t / spec.frame_dt;
  const double a = s * spec.theta_transl;
  const Vector3d p(spec.radius * std::cos(a), spec.radius * std::sin(a), 0.0);
  return Pose(rot_z(a) * rot_x(s * spec.theta_rot), p);
}

Twist circular_body_velocity(const CircularMotionSpec& spec, double t) {
  const double s = t / spec.frame_dt;
  const double a = s * spec.theta_transl;
  const double a_dot = spec.theta_transl / spec.frame_dt;
  const double b_dot = spec.theta_rot / spec.frame_dt;
  const Matrix3d rx = rot_x(s * spec.theta_rot);
  const Matrix3d r = rot_z(a) * rx;
  const Vector3d p_dot = spec.radius * a_dot * Vector3d(-std::sin(a), std::cos(a), 0.0);
  const Vector3d w = rx.transpose() * Vector3d(0.0, 0.0, a_dot) + Vector3d(b_dot, 0.0, 0.0);
  return make_twist(r.transpose() * p_dot, w);
}

std::vector<StampedPose> generate_circular(const CircularMotionSpec& spec) {
  spec.validate();
  std::vector<StampedPose> out;
  out.reserve(spec.n_frames);
  for (int k = 0; k < spec.n_frames; ++k) {
    const double t = k * spec.frame_dt;
    out.push_back({t, circular_pose(spec, t)});
  }
  return out;
}

Twist dt_velocity_coupled(const Pose& t_k, const Pose& t_k1, double dt) {
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  return log_se3(t_k.inverse() * t_k1) / dt;
}

Twist dt_velocity_decoupled(const Pose& t_k, const Pose& t_k1, double dt) {
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  const Matrix3d& r_k = t_k.rotation();
  const Vector3d v = r_k.transpose() * (t_k1.translation() - t_k.translation()) / dt;
  const Vector3d w = log_so3(r_k.transpose() * t_k1.rotation()) / dt;
  return make_twist(v, w);
}

SplineTrajectory matched_spline(const std::vector<StampedPose>& poses, int order) {
  if (poses.size() < 2) throw ValidationError("matched_spline needs at least two poses");
  const double dt = poses[1].timestamp - poses[0].timestamp;
  std::vector<double> knots;
  std::vector<Pose> cps;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (i > 0) {
      const double step = poses[i].timestamp - poses[i - 1].timestamp;
      if (std::abs(step - dt) > 1e-9 * std::max(1.0, std::abs(dt))) {
        throw ValidationError("matched_spline needs uniformly spaced timestamps");
      }
    }
    knots.push_back(poses[i].timestamp - 0.5 * order * dt);
    cps.push_back(poses[i].pose);
  }
  return SplineTrajectory(order, std::move(knots), std::move(cps));
}

VelocityExperimentConfig VelocityExperimentConfig::Default() {
  VelocityExperimentConfig c;
  for (int i = 0; i <= 10; ++i) {
    c.theta_transl.push_back(0.05 * i);
    c.theta_rot.push_back(0.05 * i);
  }
  c.base.radius = 1.0;
  c.base.frame_dt = 0.1;
  c.base.n_frames = 30;
  return c;
}

VelocityMseCell velocity_mse_cell(const CircularMotionSpec& spec, int order,
                                  int samples_per_interval) {
  if (samples_per_interval < 1) throw ValidationError("samples_per_interval must be >= 1");
  const std::vector<StampedPose> truth = generate_circular(spec);
  const SplineTrajectory spline = matched_spline(truth, order);
  const auto [lo, hi] = spline.domain();
  const double dt = spec.frame_dt;

  VelocityMseCell cell;
  cell.theta_transl = spec.theta_transl;
  cell.theta_rot = spec.theta_rot;
  // Frame intervals [t_f, t_f+1) lying inside the spline domain.
  for (int f = 0; f + 1 < spec.n_frames; ++f) {
    const double t0 = truth[f].timestamp;
    const double t1 = truth[f + 1].timestamp;
    if (t0 < lo - 1e-9 || t1 > hi + 1e-9) continue;
    const Twist coupled = dt_velocity_coupled(truth[f].pose, truth[f + 1].pose, dt);
    const Twist decoupled = dt_velocity_decoupled(truth[f].pose, truth[f + 1].pose, dt);
    for (int s = 0; s < samples_per_interval; ++s) {
      const double t = std::max(lo, t0 + dt * s / samples_per_interval);
      const Twist gt = circular_body_velocity(spec, t);
      const Twist ct = spline.body_velocity(t);
      cell.ct_v += (linear(ct) - linear(gt)).squaredNorm();
      cell.ct_w += (angular(ct) - angular(gt)).squaredNorm();
      cell.coupled_v += (linear(coupled) - linear(gt)).squaredNorm();
      cell.coupled_w += (angular(coupled) - angular(gt)).squaredNorm();
      cell.decoupled_v += (linear(decoupled) - linear(gt)).squaredNorm();
      cell.decoupled_w += (angular(decoupled) - angular(gt)).squaredNorm();
      ++cell.n_samples;
    }
  }
  if (cell.n_samples == 0) throw ValidationError("no frame interval inside the spline domain");
  const double n = cell.n_samples;
  for (double* v : {&cell.ct_v, &cell.ct_w, &cell.coupled_v, &cell.coupled_w, &cell.decoupled_v,
                    &cell.decoupled_w}) {
    *v /= n;
  }
  return cell;
}

std::vector<VelocityMseCell> velocity_mse_experiment(const VelocityExperimentConfig& config) {
  if (config.theta_transl.empty() || config.theta_rot.empty()) {
    throw ValidationError("velocity experiment grid is empty");
  }
  std::vector<VelocityMseCell> out;
  out.reserve(config.theta_transl.size() * config.theta_rot.size());
  for (double tt : config.theta_transl) {
    for (double tr : config.theta_rot) {
      CircularMotionSpec spec = config.base;
      spec.theta_transl = tt;
      spec.theta_rot = tr;
      out.push_back(velocity_mse_cell(spec, config.order, config.samples_per_interval));
    }
  }
  return out;
}

std::vector<Observation> simulate_observations(const std::vector<StampedPose>& truth,
                                               const std::vector<Vector3d>& points,
                                               const std::vector<StampedPose>& cameras,
                                               double noise_sigma, std::uint64_t seed) {
  if (truth.size() != cameras.size()) {
    throw ValidationError("truth and camera lists differ in length");
  }
  if (noise_sigma < 0.0) throw ValidationError("noise_sigma must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Observation> out;
  out.reserve(truth.size() * points.size());
  for (std::size_t f = 0; f < truth.size(); ++f) {
    if (truth[f].timestamp != cameras[f].timestamp) {
      throw ValidationError("camera timestamp mismatch at frame " + std::to_string(f));
    }
    const Pose t_cw = cameras[f].pose.inverse();
    for (std::size_t i = 0; i < points.size(); ++i) {
      Observation o;
      o.point_id = static_cast<int>(i);
      o.timestamp = truth[f].timestamp;
      o.camera_pose = cameras[f].pose;
      o.p_c = t_cw * (truth[f].pose * points[i]);
      if (noise_sigma > 0.0) {
        for (int a = 0; a < 3; ++a) o.p_c(a) += noise_sigma * noise(rng);
      }
      out.push_back(o);
    }
  }
  return out;
}

std::vector<Vector3d> random_object_points(int n, double half_extent, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-half_extent, half_extent);
  std::vector<Vector3d> pts(n);
  Vector3d mean = Vector3d::Zero();
  for (auto& p : pts) {
    p = Vector3d(u(rng), u(rng), u(rng));
    mean += p;
  }
  if (n > 0) mean /= n;
  for (auto& p : pts) p -= mean;
  return pts;
}

SimulatedScene simulate_circular_scene(const CircularMotionSpec& spec, int n_points,
                                       double noise_sigma, std::uint64_t seed) {
  SimulatedScene scene;
  scene.ground_truth = generate_circular(spec);
  // Separate streams for geometry and measurement noise.
  scene.object_points = random_object_points(n_points, 0.2, seed);
  const Pose camera(rot_x(-0.75 * std::numbers::pi), Vector3d(0.0, -2.0, 2.0));
  for (const auto& g : scene.ground_truth) scene.camera_poses.push_back({g.timestamp, camera});
  scene.noise_sigma = noise_sigma;
  scene.rng_seed = seed;
  scene.observations = simulate_observations(scene.ground_truth, scene.object_points,
                                             scene.camera_poses, noise_sigma, seed + 1);
  return scene;
}

double ate(const std::vector<Pose>& estimated, const std::vector<Pose>& truth, int align_prefix) {
  if (estimated.size() != truth.size()) {
    throw ValidationError("ATE needs equal-length trajectories (" +
                          std::to_string(estimated.size()) + " vs " +
                          std::to_string(truth.size()) + ")");
  }
  if (estimated.empty()) throw ValidationError("ATE of empty trajectories");
  const int n = static_cast<int>(estimated.size());
  const int m = (align_prefix <= 0 || align_prefix > n) ? n : align_prefix;
  Eigen::Matrix3Xd src(3, m), dst(3, m);
  for (int i = 0; i < m; ++i) {
    src.col(i) = estimated[i].translation();
    dst.col(i) = truth[i].translation();
  }
  // Identical positions need no alignment; skipping it keeps the SVD round-off out of the result.
  const Matrix4d a = src == dst && m == n ? Matrix4d::Identity() : Matrix4d(Eigen::umeyama(src, dst, false));
  const Pose align = Pose::FromMatrix(a);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += (align * estimated[i].translation() - truth[i].translation()).squaredNorm();
  }
  return std::sqrt(sum / n);
}

}  // namespace ctrack
