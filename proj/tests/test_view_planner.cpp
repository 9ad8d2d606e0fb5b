#include "posechain/error.hpp"
#include "posechain/pose_metrics.hpp"
#include "posechain/view_planner.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace posechain;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an exception";
  return ErrorCode::IoError;
}

}  // namespace

TEST(Hemisphere, DefaultGridCount) {
  const HemispherePlan plan;
  EXPECT_EQ(hemisphere_pose_count(plan), 7u * 72u);
  EXPECT_EQ(hemisphere_poses(plan).camera_poses.size(), 504u);
}

TEST(Hemisphere, CountMatchesEnumeration) {
  for (double d_lat : {1.0, 2.5, 7.0, 30.0}) {
    for (double d_lon : {3.0, 7.0, 45.0, 400.0}) {
      HemispherePlan plan;
      plan.d_lat_deg = d_lat;
      plan.d_lon_deg = d_lon;
      EXPECT_EQ(hemisphere_poses(plan).camera_poses.size(), hemisphere_pose_count(plan));
    }
  }
}

TEST(Hemisphere, SingleElevationRow) {
  HemispherePlan plan;
  plan.elevation_min_deg = plan.elevation_max_deg = 60.0;
  EXPECT_EQ(hemisphere_pose_count(plan), 72u);
}

TEST(Hemisphere, CentersOnSphereAndLookingAtCenter) {
  HemispherePlan plan;
  plan.center = Eigen::Vector3d(0.1, -0.2, 0.05);
  plan.radius_m = 0.35;
  const ViewPlan views = hemisphere_poses(plan);
  std::set<std::string> ids;
  for (const auto& e : views.camera_poses) {
    const Eigen::Vector3d c = camera_center(e.pose);
    EXPECT_NEAR((c - plan.center).norm(), plan.radius_m, 1e-12);
    const Eigen::Vector3d in_cam = e.pose * plan.center;
    EXPECT_NEAR(in_cam.head<2>().norm(), 0.0, 1e-12);
    EXPECT_NEAR(in_cam.z(), plan.radius_m, 1e-12);
    ids.insert(e.frame_id);
  }
  EXPECT_EQ(ids.size(), views.camera_poses.size());
  EXPECT_EQ(views.camera_poses[0].frame_id, "r55_c0");
  EXPECT_EQ(views.camera_poses[1].frame_id, "r55_c5");
  EXPECT_EQ(views.camera_poses[72].frame_id, "r60_c0");
}

TEST(Hemisphere, ImageYPointsDownhill) {
  // the image y axis points away from world +z for the upright plan
  const ViewPlan views = hemisphere_poses(HemispherePlan{});
  for (const auto& e : views.camera_poses) {
    const Eigen::Vector3d y_world = e.pose.rotation_matrix().transpose().col(1);
    EXPECT_LT(y_world.z(), 0.0);
  }
}

TEST(Hemisphere, UpsideDownIsHalfTurnRoll) {
  HemispherePlan upright;
  HemispherePlan flipped;
  flipped.upside_down = true;
  const ViewPlan a = hemisphere_poses(upright);
  const ViewPlan b = hemisphere_poses(flipped);
  for (std::size_t i = 0; i < a.camera_poses.size(); ++i) {
    const RigidTransformd rel = b.camera_poses[i].pose * a.camera_poses[i].pose.inverse();
    EXPECT_NEAR(rotation_angle(rel), M_PI, 1e-12);
    EXPECT_NEAR(std::abs(rotation_vector(rel.rotation()).normalized().z()), 1.0, 1e-9);
    EXPECT_LT((camera_center(a.camera_poses[i].pose) - camera_center(b.camera_poses[i].pose)).norm(), 1e-14);
  }
}

TEST(Hemisphere, PoleUsesFallbackUp) {
  HemispherePlan plan;
  plan.elevation_min_deg = plan.elevation_max_deg = 90.0;
  plan.d_lon_deg = 120.0;
  const ViewPlan views = hemisphere_poses(plan);
  ASSERT_EQ(views.camera_poses.size(), 3u);
  for (const auto& e : views.camera_poses) EXPECT_NEAR(camera_center(e.pose).z(), plan.radius_m, 1e-12);
}

TEST(Hemisphere, InvalidPlans) {
  HemispherePlan empty;
  empty.elevation_min_deg = 80.0;
  empty.elevation_max_deg = 60.0;
  EXPECT_EQ(code_of([&] { hemisphere_poses(empty); }), ErrorCode::EmptyRange);
  HemispherePlan radius;
  radius.radius_m = 0.0;
  EXPECT_EQ(code_of([&] { hemisphere_poses(radius); }), ErrorCode::ConfigError);
  HemispherePlan step;
  step.d_lon_deg = -5.0;
  EXPECT_EQ(code_of([&] { hemisphere_pose_count(step); }), ErrorCode::ConfigError);
  HemispherePlan beyond;
  beyond.elevation_max_deg = 95.0;
  EXPECT_EQ(code_of([&] { hemisphere_poses(beyond); }), ErrorCode::ConfigError);
}

TEST(LookAt, DegenerateUp) {
  EXPECT_EQ(code_of([] { look_at(Eigen::Vector3d(0, 0, 1), Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ()); }),
            ErrorCode::DegenerateUp);
  EXPECT_EQ(code_of([] { look_at(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ()); }),
            ErrorCode::DegenerateUp);
}

TEST(ToolPoses, ReproduceCameraPosesThroughChain) {
  const ViewPlan views = hemisphere_poses(HemispherePlan{});
  const RigidTransformd he =
      RigidTransformd::from_rotation_vector(Eigen::Vector3d(0.1, 0.2, 1.5), Eigen::Vector3d(0.01, 0.06, 0.04));
  const RigidTransformd wb =
      RigidTransformd::from_rotation_vector(Eigen::Vector3d(0.0, 0.0, 0.3), Eigen::Vector3d(0.4, 0.1, -0.05));
  const Trajectory tools = tool_poses(views, he, wb);
  ASSERT_EQ(tools.size(), views.camera_poses.size());
  for (std::size_t i = 0; i < tools.size(); ++i) {
    EXPECT_EQ(tools[i].frame_id, views.camera_poses[i].frame_id);
    const RigidTransformd cam = he.inverse() * tools[i].pose.inverse() * wb;
    EXPECT_LT((cam.matrix() - views.camera_poses[i].pose.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  }
}
