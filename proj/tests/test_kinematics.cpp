#include "posechain/error.hpp"
#include "posechain/kinematics.hpp"
#include "posechain/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace posechain;

namespace {

// Textbook DH matrix written out element by element.
Eigen::Matrix4d dh_matrix(double a, double alpha, double d, double theta) {
  const double ct = std::cos(theta), st = std::sin(theta), ca = std::cos(alpha), sa = std::sin(alpha);
  Eigen::Matrix4d m;
  m << ct, -st * ca, st * sa, a * ct,  //
      st, ct * ca, -ct * sa, a * st,   //
      0, sa, ca, d,                    //
      0, 0, 0, 1;
  return m;
}

}  // namespace

TEST(Kinematics, SingleJointMatchesTextbookMatrix) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const DHJoint j{u(rng), u(rng), u(rng), u(rng)};
    const double q = u(rng);
    const Eigen::Matrix4d expected = dh_matrix(j.a, j.alpha, j.d, q + j.theta_offset);
    EXPECT_LT((dh_transform(j, q).matrix() - expected).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Kinematics, ChainIsProductOfJointMatrices) {
  const DHChain chain = ur5e_chain();
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < 100; ++i) {
    JointState s{"f", Eigen::VectorXd(6)};
    Eigen::Matrix4d expected = Eigen::Matrix4d::Identity();
    for (int k = 0; k < 6; ++k) {
      s.q[k] = u(rng);
      const DHJoint& j = chain.joints[static_cast<std::size_t>(k)];
      expected = expected * dh_matrix(j.a, j.alpha, j.d, s.q[k] + j.theta_offset);
    }
    EXPECT_LT((forward_kinematics(chain, s).matrix() - expected).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Kinematics, UrZeroConfiguration) {
  // all joints at zero: the arm lies stretched along -x of the base
  const DHChain chain = ur5e_chain();
  const RigidTransformd pose = forward_kinematics(chain, {"zero", Eigen::VectorXd::Zero(6)});
  EXPECT_NEAR(pose.translation().x(), -0.425 - 0.3922, 1e-12);
  EXPECT_NEAR(pose.translation().y(), -(0.1333 + 0.0996), 1e-12);
  EXPECT_NEAR(pose.translation().z(), 0.1625 - 0.0997, 1e-12);
}

TEST(Kinematics, DimensionMismatchNamesFrame) {
  const DHChain chain = ur5e_chain();
  try {
    forward_kinematics(chain, {"frame_042", Eigen::VectorXd::Zero(5)});
    FAIL() << "expected DimensionMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    EXPECT_NE(std::string(e.what()).find("frame_042"), std::string::npos);
  }
}

TEST(Kinematics, BatchPreservesOrderAndIds) {
  const DHChain chain = ur5e_chain();
  std::vector<JointState> log;
  for (int i = 0; i < 504; ++i) {
    log.push_back({"img_" + std::to_string(i), Eigen::VectorXd::Constant(6, 0.001 * i)});
  }
  const Trajectory t = batch_fk(chain, log);
  ASSERT_EQ(t.size(), 504u);
  for (int i = 0; i < 504; ++i) {
    EXPECT_EQ(t[static_cast<std::size_t>(i)].frame_id, log[static_cast<std::size_t>(i)].frame_id);
    EXPECT_EQ(t[static_cast<std::size_t>(i)].pose.matrix(), forward_kinematics(chain, log[static_cast<std::size_t>(i)]).matrix());
  }
  EXPECT_TRUE(batch_fk(chain, {}).empty());
}

TEST(Kinematics, InverseKinematicsReachesForwardPose) {
  const DHChain chain = ur5e_chain();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  Eigen::VectorXd home(6);
  home << 0.0, -1.9, 1.6, -1.2, -1.57, 0.3;
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd q = home;
    for (int k = 0; k < 6; ++k) q[k] += u(rng);
    const RigidTransformd target = forward_kinematics(chain, {"t", q});
    const auto solved = inverse_kinematics(chain, target, home);
    ASSERT_TRUE(solved.has_value());
    const RigidTransformd reached = forward_kinematics(chain, {"t", *solved});
    EXPECT_LT((reached.translation() - target.translation()).norm(), 1e-11);
    EXPECT_LT(rotation_angle(reached.inverse() * target), 1e-11);
  }
}

TEST(Kinematics, InverseKinematicsReportsUnreachablePose) {
  const DHChain chain = ur5e_chain();
  const RigidTransformd far = RigidTransformd::from_translation(Eigen::Vector3d(3.0, 0.0, 0.0));
  EXPECT_FALSE(inverse_kinematics(chain, far, Eigen::VectorXd::Zero(6)).has_value());
}
