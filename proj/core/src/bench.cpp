#include "ctrack/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "ctrack/errors.hpp"

namespace ctrack {
namespace {

using Clock = std::chrono::steady_clock;

// Keeps the measured results observable so the loops are not optimized away.
volatile double g_sink = 0.0;

struct Problem {
  SplineTrajectory traj;
  double t = 0.0;
  SplinePoint point;
  std::vector<Vector3d> points;
  Pose camera;
};

Twist random_twist(std::mt19937_64& rng, double max_norm) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Twist x;
  for (int i = 0; i < 6; ++i) x(i) = u(rng);
  return x * (max_norm * std::uniform_real_distribution<double>(0.1, 1.0)(rng) / x.norm());
}

Problem make_problem(int order, int n_points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> spacing(0.05, 0.15);
  std::vector<double> knots;
  std::vector<Pose> cps;
  double t = 0.0;
  Pose c = exp_se3(random_twist(rng, 1.0));
  for (int i = 0; i <= order; ++i) {
    knots.push_back(t);
    cps.push_back(c);
    t += spacing(rng);
    c = c * exp_se3(random_twist(rng, 0.9));
  }
  Problem p;
  p.traj = SplineTrajectory(order, std::move(knots), std::move(cps));
  const auto [lo, hi] = p.traj.domain();
  p.t = lo + std::uniform_real_distribution<double>(0.0, 1.0)(rng) * (hi - lo);
  p.point = p.traj.locate(p.t);
  std::uniform_real_distribution<double> coord(-0.3, 0.3);
  for (int i = 0; i < n_points; ++i) p.points.emplace_back(coord(rng), coord(rng), coord(rng));
  p.camera = exp_se3(random_twist(rng, 1.0));
  return p;
}

template <typename Fn>
std::pair<double, double> measure(Fn&& fn, const BenchConfig& config) {
  for (int i = 0; i < config.warmup; ++i) fn();
  // Batch size: enough evaluations to fill the target batch duration.
  int batch = 0;
  const auto start = Clock::now();
  double elapsed = 0.0;
  while (elapsed < config.target_batch_seconds) {
    fn();
    ++batch;
    elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  }
  std::vector<double> means;
  means.reserve(config.repeats);
  for (int r = 0; r < config.repeats; ++r) {
    const auto t0 = Clock::now();
    for (int b = 0; b < batch; ++b) fn();
    means.push_back(std::chrono::duration<double>(Clock::now() - t0).count() / batch);
  }
  double mu = 0.0;
  for (double m : means) mu += m;
  mu /= means.size();
  double var = 0.0;
  for (double m : means) var += (m - mu) * (m - mu);
  const double sd = means.size() > 1 ? std::sqrt(var / (means.size() - 1)) : 0.0;
  std::nth_element(means.begin(), means.begin() + means.size() / 2, means.end());
  return {means[means.size() / 2], sd};
}

Eigen::VectorXd pose_quantity(const SplineTrajectory& s, double t, PoseForm form) {
  const Pose pose = s.interpolate_pose(t);
  if (form == PoseForm::kVectorized) return vectorize(pose);
  return log_se3(pose);
}

// Pose Jacobian blocks as dense matrices, for comparison against finite differences.
std::vector<Eigen::MatrixXd> analytic_pose_blocks(const Problem& p, PoseForm form) {
  const SpanEvaluation e = p.traj.evaluate(p.point);
  std::vector<Eigen::MatrixXd> out;
  if (form == PoseForm::kVectorized) {
    const auto j = d_pose_vec_d_control_points(e);
    for (int m = 0; m < e.order; ++m) out.emplace_back(j.blocks[m]);
  } else {
    const auto j = d_pose_log_d_control_points(e);
    for (int m = 0; m < e.order; ++m) out.emplace_back(j.blocks[m]);
  }
  return out;
}

std::vector<Eigen::MatrixXd> numeric_pose_blocks(const Problem& p, PoseForm form, double step) {
  const int first = p.point.span - p.traj.order() + 1;
  return finite_difference_jacobian(
      [&](const SplineTrajectory& s) { return pose_quantity(s, p.t, form); }, p.traj, first,
      p.traj.order(), step);
}

// Error Jacobian of each observation from numerically differentiated pose Jacobians.
std::vector<Eigen::MatrixXd> numeric_error_blocks(const Problem& p, const Vector3d& p_o,
                                                  PoseForm form, double step) {
  const std::vector<Eigen::MatrixXd> jt = numeric_pose_blocks(p, form, step);
  const Pose pose = p.traj.interpolate_pose(p.t);
  Eigen::MatrixXd de;
  if (form == PoseForm::kVectorized) {
    de = d_error_d_pose_vec(p_o, p.camera, pose);
  } else {
    de = d_error_d_pose_log(p_o, p.camera, pose);
  }
  std::vector<Eigen::MatrixXd> out;
  for (const auto& b : jt) out.push_back(de * b);
  return out;
}

double max_deviation(const std::vector<Eigen::MatrixXd>& a, const std::vector<Eigen::MatrixXd>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return worst;
}

void gate(double deviation, double tolerance, const std::string& what) {
  if (!(deviation < tolerance)) {
    throw NumericalError("benchmark correctness gate failed for " + what + ": deviation " +
                         std::to_string(deviation) + " >= " + std::to_string(tolerance));
  }
}

constexpr double kGateTolerance = 1e-6;

}  // namespace

const char* form_name(PoseForm form) { return form == PoseForm::kVectorized ? "vectorized" : "lie"; }

std::vector<BenchReport> bench_pose_jacobian(const std::vector<PoseForm>& forms,
                                             const BenchConfig& config) {
  if (config.repeats < 30) throw ValidationError("benchmarks need at least 30 repeats");
  const Problem p = make_problem(config.order, 1, config.seed);

  // Gate: each analytic form against its numeric counterpart, and the two analytic forms
  // against each other once chained into an observation error.
  for (PoseForm form : forms) {
    gate(max_deviation(analytic_pose_blocks(p, form), numeric_pose_blocks(p, form, config.step)),
         kGateTolerance, std::string("pose Jacobian (") + form_name(form) + ")");
  }
  {
    const SpanEvaluation e = p.traj.evaluate(p.point);
    const auto ev = d_error_d_control_points(e, p.points[0], p.camera, PoseForm::kVectorized);
    const auto el = d_error_d_control_points(e, p.points[0], p.camera, PoseForm::kLie);
    double dev = 0.0;
    for (int m = 0; m < e.order; ++m) dev = std::max(dev, (ev[m] - el[m]).cwiseAbs().maxCoeff());
    gate(dev, kGateTolerance, "vectorized vs Lie error chain");
  }

  std::vector<BenchReport> out;
  for (PoseForm form : forms) {
    const auto analytic = measure(
        [&] {
          const SpanEvaluation e = p.traj.evaluate(p.point);
          if (form == PoseForm::kVectorized) {
            g_sink = g_sink + d_pose_vec_d_control_points(e)[0](0, 0);
          } else {
            g_sink = g_sink + d_pose_log_d_control_points(e)[0](0, 0);
          }
        },
        config);
    const auto numeric = measure(
        [&] { g_sink = g_sink + numeric_pose_blocks(p, form, config.step)[0](0, 0); }, config);
    out.push_back({"analytic", form_name(form), 0, analytic.first, analytic.second, config.repeats});
    out.push_back({"numeric", form_name(form), 0, numeric.first, numeric.second, config.repeats});
  }
  return out;
}

std::vector<BenchReport> bench_error_chain(const std::vector<int>& n_observations,
                                           const std::vector<PoseForm>& forms,
                                           const BenchConfig& config) {
  if (config.repeats < 30) throw ValidationError("benchmarks need at least 30 repeats");
  int n_max = 0;
  for (int n : n_observations) {
    if (n < 1) throw ValidationError("observation counts must be >= 1");
    n_max = std::max(n_max, n);
  }
  const Problem p = make_problem(config.order, n_max, config.seed);

  for (PoseForm form : forms) {
    const SpanEvaluation e = p.traj.evaluate(p.point);
    double dev = 0.0;
    for (const Vector3d& p_o : p.points) {
      const auto a = d_error_d_control_points(e, p_o, p.camera, form);
      const auto num = numeric_error_blocks(p, p_o, form, config.step);
      for (int m = 0; m < e.order; ++m) dev = std::max(dev, (a[m] - num[m]).cwiseAbs().maxCoeff());
    }
    gate(dev, kGateTolerance, std::string("error chain (") + form_name(form) + ")");
  }

  std::vector<BenchReport> out;
  for (PoseForm form : forms) {
    for (int n : n_observations) {
      const auto analytic = measure(
          [&] {
            for (int i = 0; i < n; ++i) {
              const SpanEvaluation e = p.traj.evaluate(p.point);
              g_sink = g_sink + d_error_d_control_points(e, p.points[i], p.camera, form)[0](0, 0);
            }
          },
          config);
      const auto numeric = measure(
          [&] {
            for (int i = 0; i < n; ++i) {
              g_sink = g_sink + numeric_error_blocks(p, p.points[i], form, config.step)[0](0, 0);
            }
          },
          config);
      out.push_back({"analytic", form_name(form), n, analytic.first, analytic.second, config.repeats});
      out.push_back({"numeric", form_name(form), n, numeric.first, numeric.second, config.repeats});
    }
  }
  return out;
}

double speedup(const std::vector<BenchReport>& reports, PoseForm form, int n_observations) {
  double analytic = 0.0, numeric = 0.0;
  for (const auto& r : reports) {
    if (r.form != form_name(form) || r.n_observations != n_observations) continue;
    if (r.method == "analytic") analytic = r.mean_seconds;
    if (r.method == "numeric") numeric = r.mean_seconds;
  }
  if (!(analytic > 0.0) || !(numeric > 0.0)) {
    throw ValidationError("no matching analytic/numeric rows for the requested speedup");
  }
  return numeric / analytic;
}

}  // namespace ctrack
