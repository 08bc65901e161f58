#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctrack/jacobians.hpp"

namespace ctrack {

struct BenchReport {
  std::string method;  // "analytic" or "numeric"
  std::string form;    // "vectorized" or "lie"
  int n_observations = 0;  // 0 for the bare pose Jacobian
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
  int n_repeats = 0;
};

struct BenchConfig {
  int repeats = 30;
  int warmup = 10;
  // Each repeat times a batch of evaluations lasting about this long.
  double target_batch_seconds = 2e-3;
  int order = 4;
  std::uint64_t seed = 42;
  double step = 1e-6;
};

/// Jacobian of one interpolated pose w.r.t. its control points, analytic vs central
/// differences, for each requested form.
std::vector<BenchReport> bench_pose_jacobian(const std::vector<PoseForm>& forms,
                                             const BenchConfig& config);

/// All d e / d xi blocks of N observations of one frame, each factor differentiated on its
/// own, analytic vs central differences.
std::vector<BenchReport> bench_error_chain(const std::vector<int>& n_observations,
                                           const std::vector<PoseForm>& forms,
                                           const BenchConfig& config);

const char* form_name(PoseForm form);

/// Speedup of analytic over numeric for matching (form, n_observations) rows.
double speedup(const std::vector<BenchReport>& reports, PoseForm form, int n_observations);

}  // namespace ctrack
