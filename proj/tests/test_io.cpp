#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "ctrack/errors.hpp"
#include "ctrack/io.hpp"
#include "support/test_support.hpp"

using namespace ctrack;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

std::vector<StampedPose> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_trajectory(in, "traj.txt");
}

const char* kObsHeader = "timestamp,point_id,pcx,pcy,pcz,tx,ty,tz,qx,qy,qz,qw\n";

}  // namespace

TEST(FormatDouble, RoundTripsBitExactly) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(format_double(std::numeric_limits<double>::max())),
            std::numeric_limits<double>::max());
}

TEST(Quaternion, NormToleranceIsEnforced) {
  EXPECT_NO_THROW(pose_from_quaternion(Vector3d::Zero(), Eigen::Vector4d(0, 0, 0, 1 + 5e-7)));
  EXPECT_THROW(pose_from_quaternion(Vector3d::Zero(), Eigen::Vector4d(0, 0, 0, 1 + 2e-6)),
               ValidationError);
  EXPECT_THROW(pose_from_quaternion(Vector3d::Zero(), Eigen::Vector4d(0, 0, 0, 0)), ValidationError);
}

TEST(Quaternion, RotationRoundTrip) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Pose p = ctrack::testing::random_pose(rng);
    const Eigen::Vector4d q = quaternion_from_rotation(p.rotation());
    EXPECT_NEAR(q.norm(), 1.0, 1e-15);
    EXPECT_GE(q(3), 0.0);
    const Pose back = pose_from_quaternion(p.translation(), q);
    EXPECT_LT((back.rotation() - p.rotation()).norm(), 1e-14);
  }
}

TEST(Trajectory, ParsesCommentsAndBlankLines) {
  const auto poses = parse("# header\n\n0.5 1 2 3 0 0 0 1\n  1.0 0 0 0 0 0 1 0  \n");
  ASSERT_EQ(poses.size(), 2u);
  EXPECT_EQ(poses[0].timestamp, 0.5);
  EXPECT_EQ(poses[0].pose.translation(), Vector3d(1, 2, 3));
  EXPECT_TRUE(poses[1].pose.rotation().isApprox(Vector3d(-1, -1, 1).asDiagonal().toDenseMatrix()));
}

TEST(Trajectory, BadQuaternionNamesLine) {
  const std::string msg = error_of([] { parse("0 0 0 0 0 0 0 1\n# c\n0.1 0 0 0 0 0 0.5 0.5\n"); });
  EXPECT_NE(msg.find("traj.txt:3:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("quaternion"), std::string::npos) << msg;
}

TEST(Trajectory, FieldCountAndNumbersAreChecked) {
  EXPECT_NE(error_of([] { parse("0 0 0 0 0 0 1\n"); }).find("traj.txt:1:"), std::string::npos);
  EXPECT_NE(error_of([] { parse("0 0 0 0 0 0 0 1\n1 0 x 0 0 0 0 1\n"); }).find("traj.txt:2:"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse("0 0 0 0 0 0 0 1\n0 0 0 0 0 0 0 1\n"); }).find("increasing"),
            std::string::npos);
}

TEST(Trajectory, FormatParseRoundTripIsExact) {
  std::mt19937_64 rng(9);
  std::vector<StampedPose> poses;
  for (int i = 0; i < 20; ++i) poses.push_back({0.1 * i + 1e-3, ctrack::testing::random_pose(rng)});
  const auto once = parse(format_trajectory(poses, "test"));
  ASSERT_EQ(once.size(), poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    EXPECT_EQ(once[i].timestamp, poses[i].timestamp);
    EXPECT_EQ(once[i].pose.translation(), poses[i].pose.translation());
    EXPECT_LT((once[i].pose.rotation() - poses[i].pose.rotation()).norm(), 1e-15);
  }
  // Parsing is deterministic: the same text always yields bit-identical poses.
  const auto again = parse(format_trajectory(poses, "test"));
  for (std::size_t i = 0; i < poses.size(); ++i) EXPECT_TRUE(again[i].pose == once[i].pose);
}

TEST(ControlPoints, RoundTripKeepsOrderAndKnots) {
  std::mt19937_64 rng(11);
  const SplineTrajectory s = ctrack::testing::random_trajectory(5, 9, rng);
  const std::string text = format_control_points(s);
  EXPECT_EQ(text.rfind("# order 5\n", 0), 0u);
  std::istringstream in(text);
  const SplineTrajectory back = parse_control_points(in, "cp.txt");
  EXPECT_EQ(back.order(), 5);
  EXPECT_EQ(back.knots(), s.knots());
  for (int i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back.control_point(i).translation(), s.control_point(i).translation());
    EXPECT_LT((back.control_point(i).rotation() - s.control_point(i).rotation()).norm(), 1e-15);
  }
}

TEST(ControlPoints, TooFewPointsForOrderHaveNoDomain) {
  std::istringstream in("# order 4\n0 0 0 0 0 0 0 1\n1 0 0 0 0 0 0 1\n");
  const SplineTrajectory s = parse_control_points(in, "cp.txt");
  EXPECT_THROW(s.domain(), DomainError);
  EXPECT_THROW(s.interpolate_pose(0.5), DomainError);
}

TEST(ControlPoints, BadOrderNamesSource) {
  std::istringstream in("# order 9\n0 0 0 0 0 0 0 1\n1 0 0 0 0 0 0 1\n");
  EXPECT_NE(error_of([&] { parse_control_points(in, "cp.txt"); }).find("cp.txt"), std::string::npos);
}

TEST(Observations, RequiresExactHeader) {
  std::istringstream bad("timestamp,id,pcx,pcy,pcz,tx,ty,tz,qx,qy,qz,qw\n");
  EXPECT_NE(error_of([&] { parse_observations(bad, "obs.csv"); }).find("obs.csv:1:"), std::string::npos);
  std::istringstream empty("");
  EXPECT_THROW(parse_observations(empty, "obs.csv"), ValidationError);
}

TEST(Observations, ParsesRows) {
  std::istringstream in(std::string(kObsHeader) + "0.1,7,1,2,3,4,5,6,0,0,0,1\n");
  const auto obs = parse_observations(in, "obs.csv");
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].point_id, 7);
  EXPECT_EQ(obs[0].timestamp, 0.1);
  EXPECT_EQ(obs[0].p_c, Vector3d(1, 2, 3));
  EXPECT_EQ(obs[0].camera_pose.translation(), Vector3d(4, 5, 6));
}

TEST(Observations, CameraPoseMustAgreeWithinTimestamp) {
  std::istringstream in(std::string(kObsHeader) + "0.1,0,1,2,3,0,0,0,0,0,0,1\n" +
                        "0.1,1,1,2,3,0,0,1,0,0,0,1\n");
  const std::string msg = error_of([&] { parse_observations(in, "obs.csv"); });
  EXPECT_NE(msg.find("obs.csv:3:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(Observations, FormatParseRoundTrip) {
  std::mt19937_64 rng(2);
  std::vector<Observation> obs;
  for (int i = 0; i < 6; ++i) {
    Observation o;
    o.timestamp = 0.1 * (i / 3);
    o.point_id = i;
    o.p_c = ctrack::testing::random_vector(rng, 1.0);
    obs.push_back(o);
  }
  std::istringstream in(format_observations(obs));
  const auto back = parse_observations(in, "obs.csv");
  ASSERT_EQ(back.size(), obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    EXPECT_EQ(back[i].p_c, obs[i].p_c);
    EXPECT_EQ(back[i].point_id, obs[i].point_id);
  }
}

TEST(AtomicWrite, ReplacesContentAndLeavesNoTemporary) {
  const fs::path dir = fs::temp_directory_path() / "ctrack_io_atomic";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string path = (dir / "out.txt").string();
  write_file_atomic(path, "first\n");
  write_file_atomic(path, "second\n");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "second\n");
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator()), 1);
  write_file_atomic((dir / "nested" / "x.txt").string(), "x");
  EXPECT_TRUE(fs::exists(dir / "nested" / "x.txt"));
  fs::remove_all(dir);
}
