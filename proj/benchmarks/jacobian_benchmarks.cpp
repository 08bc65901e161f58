// Analytic control-point Jacobians against central differences.

#include <random>

#include <benchmark/benchmark.h>

#include "ctrack/jacobians.hpp"

namespace {

using namespace ctrack;

struct Fixture {
  SplineTrajectory traj;
  double t = 0.0;
  std::vector<Vector3d> points;
  Pose camera;
};

const Fixture& fixture(int order) {
  static std::vector<Fixture> cache(kMaxOrder + 1);
  Fixture& f = cache[order];
  if (f.traj.size() > 0) return f;
  std::mt19937_64 rng(42 + order);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  auto twist = [&] {
    Twist x;
    for (int i = 0; i < 6; ++i) x(i) = u(rng);
    return x;
  };
  std::vector<double> knots;
  std::vector<Pose> cps;
  Pose c = exp_se3(twist());
  for (int i = 0; i <= order; ++i) {
    knots.push_back(0.1 * i);
    cps.push_back(c);
    c = c * exp_se3(twist());
  }
  f.traj = SplineTrajectory(order, knots, cps);
  const auto [lo, hi] = f.traj.domain();
  f.t = 0.5 * (lo + hi);
  for (int i = 0; i < 100; ++i) f.points.emplace_back(u(rng), u(rng), u(rng));
  f.camera = exp_se3(twist());
  return f;
}

void BM_PoseVecAnalytic(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<int>(state.range(0)));
  const SplinePoint p = f.traj.locate(f.t);
  for (auto _ : state) {
    const SpanEvaluation e = f.traj.evaluate(p);
    benchmark::DoNotOptimize(d_pose_vec_d_control_points(e));
  }
}

void BM_PoseLogAnalytic(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<int>(state.range(0)));
  const SplinePoint p = f.traj.locate(f.t);
  for (auto _ : state) {
    const SpanEvaluation e = f.traj.evaluate(p);
    benchmark::DoNotOptimize(d_pose_log_d_control_points(e));
  }
}

void BM_PoseVecNumeric(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<int>(state.range(0)));
  const int first = f.traj.locate(f.t).span - f.traj.order() + 1;
  const TrajectoryFunction fn = [&f](const SplineTrajectory& s) -> Eigen::VectorXd {
    return vectorize(s.interpolate_pose(f.t));
  };
  for (auto _ : state) benchmark::DoNotOptimize(finite_difference_jacobian(fn, f.traj, first, f.traj.order()));
}

void BM_PoseLogNumeric(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<int>(state.range(0)));
  const int first = f.traj.locate(f.t).span - f.traj.order() + 1;
  const TrajectoryFunction fn = [&f](const SplineTrajectory& s) -> Eigen::VectorXd {
    return log_se3(s.interpolate_pose(f.t));
  };
  for (auto _ : state) benchmark::DoNotOptimize(finite_difference_jacobian(fn, f.traj, first, f.traj.order()));
}

void BM_VelocityAnalytic(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<int>(state.range(0)));
  const SplinePoint p = f.traj.locate(f.t);
  for (auto _ : state) {
    const SpanEvaluation e = f.traj.evaluate(p);
    benchmark::DoNotOptimize(d_velocity_d_control_points(e));
  }
}

// One frame with N observations; every factor is differentiated on its own.
template <PoseForm Form>
void BM_ErrorChainAnalytic(benchmark::State& state) {
  const Fixture& f = fixture(4);
  const SplinePoint p = f.traj.locate(f.t);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    for (int i = 0; i < n; ++i) {
      const SpanEvaluation e = f.traj.evaluate(p);
      benchmark::DoNotOptimize(d_error_d_control_points(e, f.points[i], f.camera, Form));
    }
  }
  state.SetItemsProcessed(state.iterations() * n);
}

template <PoseForm Form>
void BM_ErrorChainNumeric(benchmark::State& state) {
  const Fixture& f = fixture(4);
  const int first = f.traj.locate(f.t).span - 3;
  const int n = static_cast<int>(state.range(0));
  const TrajectoryFunction fn = [&f](const SplineTrajectory& s) -> Eigen::VectorXd {
    if constexpr (Form == PoseForm::kVectorized) return vectorize(s.interpolate_pose(f.t));
    return log_se3(s.interpolate_pose(f.t));
  };
  const Pose pose = f.traj.interpolate_pose(f.t);
  for (auto _ : state) {
    for (int i = 0; i < n; ++i) {
      const auto jt = finite_difference_jacobian(fn, f.traj, first, 4);
      Eigen::MatrixXd de;
      if constexpr (Form == PoseForm::kVectorized) {
        de = d_error_d_pose_vec(f.points[i], f.camera, pose);
      } else {
        de = d_error_d_pose_log(f.points[i], f.camera, pose);
      }
      for (const auto& b : jt) benchmark::DoNotOptimize(Eigen::MatrixXd(de * b));
    }
  }
  state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK(BM_PoseVecAnalytic)->DenseRange(2, 6);
BENCHMARK(BM_PoseVecNumeric)->DenseRange(2, 6);
BENCHMARK(BM_PoseLogAnalytic)->DenseRange(2, 6);
BENCHMARK(BM_PoseLogNumeric)->DenseRange(2, 6);
BENCHMARK(BM_VelocityAnalytic)->DenseRange(2, 6);
BENCHMARK(BM_ErrorChainAnalytic<ctrack::PoseForm::kVectorized>)->Arg(1)->Arg(10)->Arg(100);
BENCHMARK(BM_ErrorChainNumeric<ctrack::PoseForm::kVectorized>)->Arg(1)->Arg(10)->Arg(100);
BENCHMARK(BM_ErrorChainAnalytic<ctrack::PoseForm::kLie>)->Arg(1)->Arg(10)->Arg(100);
BENCHMARK(BM_ErrorChainNumeric<ctrack::PoseForm::kLie>)->Arg(1)->Arg(10)->Arg(100);

BENCHMARK_MAIN();
