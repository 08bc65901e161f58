#include <gtest/gtest.h>

#include <set>

#include "ctrack/bench.hpp"
#include "ctrack/errors.hpp"

using namespace ctrack;

namespace {

BenchConfig quick_config() {
  BenchConfig c;
  c.warmup = 2;
  c.target_batch_seconds = 2e-4;
  return c;
}

const std::vector<PoseForm> kBothForms = {PoseForm::kVectorized, PoseForm::kLie};

}  // namespace

TEST(Bench, RejectsFewerThanThirtyRepeats) {
  BenchConfig c = quick_config();
  c.repeats = 29;
  EXPECT_THROW(bench_pose_jacobian(kBothForms, c), ValidationError);
  EXPECT_THROW(bench_error_chain({1}, kBothForms, c), ValidationError);
}

TEST(Bench, RejectsNonPositiveObservationCounts) {
  EXPECT_THROW(bench_error_chain({0}, kBothForms, quick_config()), ValidationError);
}

TEST(Bench, PoseJacobianRowsCoverMethodsAndForms) {
  const auto rows = bench_pose_jacobian(kBothForms, quick_config());
  ASSERT_EQ(rows.size(), 4u);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : rows) {
    seen.insert({r.method, r.form});
    EXPECT_EQ(r.n_observations, 0);
    EXPECT_EQ(r.n_repeats, 30);
    EXPECT_GT(r.mean_seconds, 0.0);
    EXPECT_GE(r.std_seconds, 0.0);
  }
  EXPECT_EQ(seen.size(), 4u);
}

TEST(Bench, ErrorChainRowsPerObservationCount) {
  const auto rows = bench_error_chain({1, 10}, {PoseForm::kLie}, quick_config());
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].n_observations, 1);
  EXPECT_EQ(rows[2].n_observations, 10);
  for (const auto& r : rows) EXPECT_EQ(r.form, "lie");
}

TEST(Bench, GatesPassForEverySupportedOrder) {
  for (int order = 2; order <= 6; ++order) {
    BenchConfig c = quick_config();
    c.order = order;
    c.target_batch_seconds = 1e-5;
    EXPECT_NO_THROW(bench_error_chain({3}, kBothForms, c)) << "order " << order;
  }
}

TEST(Bench, SpeedupIsNumericOverAnalytic) {
  const std::vector<BenchReport> rows = {
      {"analytic", "lie", 10, 2.0, 0.0, 30},
      {"numeric", "lie", 10, 14.0, 0.0, 30},
      {"analytic", "vectorized", 10, 1.0, 0.0, 30},
      {"numeric", "vectorized", 10, 3.0, 0.0, 30},
  };
  EXPECT_DOUBLE_EQ(speedup(rows, PoseForm::kLie, 10), 7.0);
  EXPECT_DOUBLE_EQ(speedup(rows, PoseForm::kVectorized, 10), 3.0);
}

TEST(Bench, AnalyticIsFasterThanNumericForOneObservation) {
  const auto rows = bench_error_chain({1}, kBothForms, quick_config());
  EXPECT_GT(speedup(rows, PoseForm::kVectorized, 1), 1.0);
  EXPECT_GT(speedup(rows, PoseForm::kLie, 1), 1.0);
}

TEST(Bench, AnalyticChainScalesRoughlyLinearly) {
  const auto rows = bench_error_chain({10, 100}, {PoseForm::kVectorized}, quick_config());
  const double ratio = rows[2].mean_seconds / rows[0].mean_seconds;
  EXPECT_GT(ratio, 3.0);
  EXPECT_LT(ratio, 30.0);
}
