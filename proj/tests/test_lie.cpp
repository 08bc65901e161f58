#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ctrack/errors.hpp"
#include "ctrack/lie.hpp"
#include "support/test_support.hpp"

using namespace ctrack;
using ctrack::testing::expm;
using ctrack::testing::random_pose;
using ctrack::testing::random_twist;

namespace {

Twist random_bounded_twist(std::mt19937_64& rng, double max_angle) {
  Twist tau = random_twist(rng, 1.0);
  tau.tail<3>() = tau.tail<3>().normalized() *
                  std::uniform_real_distribution<double>(0.0, max_angle)(rng);
  tau.head<3>() = ctrack::testing::random_vector(rng, 2.0);
  return tau;
}

double pose_distance(const Pose& a, const Pose& b) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Hat, ZeroTwist) { EXPECT_EQ(hat(Twist::Zero()), Matrix4d::Zero()); }

TEST(Hat, AngularZPutsSkewInRotationBlock) {
  Twist tau;
  tau << 0, 0, 0, 0, 0, 1;
  Matrix4d expected = Matrix4d::Zero();
  expected(0, 1) = -1.0;
  expected(1, 0) = 1.0;
  EXPECT_EQ(hat(tau), expected);
}

TEST(Hat, VeeInvertsHat) {
  Twist tau;
  tau << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(vee(hat(tau)), tau);
  EXPECT_EQ(unskew(skew(Vector3d(4, 5, 6))), Vector3d(4, 5, 6));
}

TEST(ExpSE3, ZeroIsIdentity) { EXPECT_EQ(exp_se3(Twist::Zero()), Pose::Identity()); }

TEST(ExpSE3, QuarterTurnAboutZ) {
  Twist tau;
  tau << 0, 0, 0, 0, 0, std::numbers::pi / 2;
  const Pose t = exp_se3(tau);
  Matrix3d rz;
  rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT((t.rotation() - rz).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(t.translation().norm(), 1e-15);
}

TEST(ExpSE3, MatchesMatrixExponential) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const Twist tau = random_bounded_twist(rng, 3.0);
    EXPECT_LT((exp_se3(tau).matrix() - expm(tau)).cwiseAbs().maxCoeff(), 1e-12) << tau.transpose();
  }
}

TEST(ExpSE3, SmallAnglesMatchMatrixExponential) {
  std::mt19937_64 rng(2);
  for (double angle : {1e-3, 1e-5, 1e-7, 1e-9, 0.0}) {
    Twist tau = random_twist(rng, 1.0);
    tau.head<3>() = tau.head<3>().normalized();
    tau.tail<3>() = tau.tail<3>().normalized() * angle;
    EXPECT_LT((exp_se3(tau).matrix() - expm(tau)).cwiseAbs().maxCoeff(), 1e-14) << angle;
  }
}

TEST(LogSE3, RoundTrip) {
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Twist tau = random_bounded_twist(rng, std::numbers::pi - 0.1);
    worst = std::max(worst, (log_se3(exp_se3(tau)) - tau).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(LogSE3, IdentityAndPureTranslation) {
  EXPECT_EQ(log_se3(Pose::Identity()), Twist::Zero());
  Twist expected;
  expected << 1, 2, 3, 0, 0, 0;
  EXPECT_EQ(log_se3(Pose(Matrix3d::Identity(), Vector3d(1, 2, 3))), expected);
}

TEST(LogSE3, RandomPosesRoundTrip) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    const Pose t = random_pose(rng);
    const Eigen::AngleAxisd aa(t.rotation());
    if (aa.angle() > std::numbers::pi - 1e-3) continue;
    EXPECT_LT(pose_distance(exp_se3(log_se3(t)), t), 1e-9);
  }
}

TEST(LogSO3, RejectsBranchCut) {
  const Matrix3d r = Eigen::AngleAxisd(std::numbers::pi, Vector3d::UnitY()).toRotationMatrix();
  EXPECT_THROW(log_so3(r), BranchError);
  const Matrix3d near = Eigen::AngleAxisd(std::numbers::pi - 1e-7, Vector3d::UnitX()).toRotationMatrix();
  EXPECT_THROW(log_so3(near), BranchError);
  const Matrix3d ok = Eigen::AngleAxisd(std::numbers::pi - 1e-3, Vector3d::UnitX()).toRotationMatrix();
  EXPECT_NEAR(log_so3(ok).norm(), std::numbers::pi - 1e-3, 1e-12);
}

TEST(Adjoint, Identity) { EXPECT_EQ(adjoint(Pose::Identity()), Matrix6d::Identity()); }

TEST(Adjoint, PureRotationHasNoCoupling) {
  const Matrix3d r = Eigen::AngleAxisd(0.7, Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  const Matrix6d a = adjoint(Pose(r, Vector3d::Zero()));
  EXPECT_EQ(Matrix3d(a.topLeftCorner<3, 3>()), r);
  EXPECT_EQ(Matrix3d(a.bottomRightCorner<3, 3>()), r);
  EXPECT_EQ(Matrix3d(a.topRightCorner<3, 3>()), Matrix3d::Zero());
  EXPECT_EQ(Matrix3d(a.bottomLeftCorner<3, 3>()), Matrix3d::Zero());
}

TEST(Adjoint, MovesTwistAcrossPose) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Pose t = random_pose(rng);
    const Twist tau = random_twist(rng, 1.5);
    const Matrix4d lhs = expm(adjoint(t) * tau) * t.matrix();
    const Matrix4d rhs = t.matrix() * expm(tau);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(AdOperator, MatchesBracket) {
  std::mt19937_64 rng(6);
  const Twist x = random_twist(rng, 1.0), y = random_twist(rng, 1.0);
  const Matrix4d bracket = hat(x) * hat(y) - hat(y) * hat(x);
  EXPECT_LT((ad(x) * y - vee(bracket)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LeftJacobian, ZeroIsIdentity) {
  EXPECT_EQ(left_jacobian(Twist::Zero()), Matrix6d::Identity());
  EXPECT_EQ(left_jacobian_inv(Twist::Zero()), Matrix6d::Identity());
}

TEST(LeftJacobian, InverseProduct) {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Twist tau = random_bounded_twist(rng, 3.0);
    worst = std::max(worst, (left_jacobian_inv(tau) * left_jacobian(tau) - Matrix6d::Identity())
                                .cwiseAbs()
                                .maxCoeff());
  }
  EXPECT_LT(worst, 1e-9);
}

// Log(Exp(tau + eps d) Exp(tau)^-1) = eps J_l(tau) d + O(eps^2): the remainder must shrink
// about fourfold when eps is halved.
TEST(LeftJacobian, FirstOrderExpansion) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    const Twist tau = random_bounded_twist(rng, 2.5);
    const Twist d = random_twist(rng, 1.0).normalized();
    auto remainder = [&](double eps) {
      const Pose lhs = exp_se3(tau + eps * d) * exp_se3(tau).inverse();
      return (log_se3(lhs) - eps * left_jacobian(tau) * d).norm();
    };
    const double r1 = remainder(1e-3), r2 = remainder(5e-4);
    EXPECT_GT(r1 / r2, 3.5);
    EXPECT_LT(r1 / r2, 4.5);
  }
}

TEST(LeftJacobian, SmallAngleBranchesAreContinuous) {
  std::mt19937_64 rng(9);
  Twist tau = random_twist(rng, 1.0);
  tau.head<3>() = tau.head<3>().normalized();
  const Vector3d axis = tau.tail<3>().normalized();
  for (double angle : {2e-2, 1.01e-2, 0.99e-2, 1e-4, 1.01e-6, 0.99e-6, 1e-9}) {
    tau.tail<3>() = axis * angle;
    // Oracle: d/de Log(Exp(tau + e x) Exp(tau)^-1) via the matrix exponential.
    Matrix6d numeric;
    for (int c = 0; c < 6; ++c) {
      Twist dx = Twist::Zero();
      dx(c) = 1e-6;
      const Matrix4d p = expm(tau + dx) * expm(tau).inverse();
      const Matrix4d m = expm(tau - dx) * expm(tau).inverse();
      numeric.col(c) = (vee(p.log()) - vee(m.log())) / 2e-6;
    }
    EXPECT_LT((left_jacobian(tau) - numeric).cwiseAbs().maxCoeff(), 1e-8) << angle;
  }
}

TEST(Generators, Structure) {
  const Matrix12x6d& g = generators();
  EXPECT_EQ(g.col(0), (Vector12d() << 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0).finished());
  int nonzero = 0;
  for (int r = 0; r < 12; ++r) {
    for (int c = 0; c < 6; ++c) {
      if (g(r, c) != 0.0) {
        ++nonzero;
        EXPECT_EQ(std::abs(g(r, c)), 1.0);
      }
    }
  }
  // One entry per translation generator, two per rotation generator.
  EXPECT_EQ(nonzero, 9);
}

TEST(Generators, MatchVectorizedHat) {
  std::mt19937_64 rng(10);
  const Twist tau = random_twist(rng, 2.0);
  const Matrix4d h = hat(tau);
  Vector12d expected;
  expected << h.col(0).head<3>(), h.col(1).head<3>(), h.col(2).head<3>(), h.col(3).head<3>();
  EXPECT_LT((generators() * tau - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Vectorize, Layout) {
  EXPECT_EQ(vectorize(Pose::Identity()),
            (Vector12d() << 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0).finished());
  const Vector12d v = vectorize(Pose(Matrix3d::Identity(), Vector3d(1, 2, 3)));
  EXPECT_EQ(Vector3d(v.tail<3>()), Vector3d(1, 2, 3));
  std::mt19937_64 rng(11);
  const Pose t = random_pose(rng);
  EXPECT_EQ(devectorize(vectorize(t)), t);
}

TEST(BodyVelocity, Definition) {
  EXPECT_EQ(body_velocity_from_derivative(Pose::Identity(), Matrix4d::Zero()), Twist::Zero());
  Twist tau;
  tau << 0.1, -0.2, 0.3, 0.4, -0.5, 0.6;
  EXPECT_LT((body_velocity_from_derivative(Pose::Identity(), hat(tau)) - tau).norm(), 1e-15);
}

TEST(BodyVelocity, OneParameterSubgroup) {
  std::mt19937_64 rng(12);
  const Twist delta = random_twist(rng, 1.0);
  for (double t : {-0.7, 0.0, 0.3, 2.1}) {
    // d/dt Exp(t delta) = Exp(t delta) hat(delta).
    const Matrix4d pose = expm(t * delta);
    const Matrix4d derivative = pose * hat(delta);
    EXPECT_LT((body_velocity_from_derivative(Pose::FromMatrix(pose), derivative) - delta).norm(),
              1e-12);
  }
}
