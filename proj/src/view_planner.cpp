#include "posechain/view_planner.hpp"

#include "posechain/error.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace posechain {

namespace {

constexpr double kGridSlack = 1e-9;

void validate(const HemispherePlan& plan) {
  if (!(plan.radius_m > 0.0)) throw Error(ErrorCode::ConfigError, "radius must be positive");
  if (!(plan.d_lat_deg > 0.0) || !(plan.d_lon_deg > 0.0)) {
    throw Error(ErrorCode::ConfigError, "angular steps must be positive");
  }
  if (plan.elevation_min_deg > plan.elevation_max_deg) {
    throw Error(ErrorCode::EmptyRange, "elevation_min exceeds elevation_max");
  }
  if (!(plan.elevation_min_deg > 0.0) || plan.elevation_max_deg > 90.0) {
    throw Error(ErrorCode::ConfigError, "elevations must lie in (0, 90] degrees");
  }
}

std::size_t elevation_rows(const HemispherePlan& plan) {
  return static_cast<std::size_t>(
             std::floor((plan.elevation_max_deg - plan.elevation_min_deg) / plan.d_lat_deg + kGridSlack)) +
         1;
}

std::size_t longitude_columns(const HemispherePlan& plan) {
  return static_cast<std::size_t>(std::floor(360.0 / plan.d_lon_deg + kGridSlack));
}

std::string degrees_label(double deg) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", deg);
  return buf;
}

}  // namespace

std::size_t hemisphere_pose_count(const HemispherePlan& plan) {
  validate(plan);
  return elevation_rows(plan) * longitude_columns(plan);
}

RigidTransformd look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                        const Eigen::Vector3d& up_hint, bool roll180) {
  const Eigen::Vector3d view = target - position;
  if (view.norm() <= 1e-12) throw Error(ErrorCode::DegenerateUp, "camera position coincides with the target");
  const Eigen::Vector3d z = view.normalized();
  const Eigen::Vector3d x_raw = z.cross(up_hint);
  if (up_hint.norm() <= 1e-12 || x_raw.norm() <= 1e-9 * up_hint.norm()) {
    throw Error(ErrorCode::DegenerateUp, "up hint is parallel to the viewing direction");
  }
  Eigen::Vector3d x = x_raw.normalized();  // image right
  Eigen::Vector3d y = z.cross(x);          // image down
  if (roll180) {
    x = -x;
    y = -y;
  }
  Eigen::Matrix3d world_from_camera;
  world_from_camera << x, y, z;
  const Eigen::Matrix3d camera_from_world = world_from_camera.transpose();
  return RigidTransformd(camera_from_world, -(camera_from_world * position));
}

ViewPlan hemisphere_poses(const HemispherePlan& plan) {
  validate(plan);
  const std::size_t rows = elevation_rows(plan);
  const std::size_t cols = longitude_columns(plan);
  ViewPlan out;
  for (std::size_t r = 0; r < rows; ++r) {
    const double elevation = plan.elevation_min_deg + static_cast<double>(r) * plan.d_lat_deg;
    const double el = deg_to_rad(elevation);
    for (std::size_t c = 0; c < cols; ++c) {
      const double longitude = static_cast<double>(c) * plan.d_lon_deg;
      const double lon = deg_to_rad(longitude);
      const Eigen::Vector3d dir(std::cos(el) * std::cos(lon), std::cos(el) * std::sin(lon), std::sin(el));
      const Eigen::Vector3d position = plan.center + plan.radius_m * dir;
      // near the pole the world z axis is parallel to the view direction
      const Eigen::Vector3d up = dir.cross(Eigen::Vector3d::UnitZ()).norm() > 1e-6 ? Eigen::Vector3d::UnitZ()
                                                                                    : Eigen::Vector3d::UnitX();
      out.camera_poses.push_back("r" + degrees_label(elevation) + "_c" + degrees_label(longitude),
                                 look_at(position, plan.center, up, plan.upside_down));
    }
  }
  return out;
}

Trajectory tool_poses(const ViewPlan& plan, const RigidTransformd& hand_eye, const RigidTransformd& world_base) {
  const RigidTransformd camera_from_tool = hand_eye.inverse();
  Trajectory out;
  for (const TrajectoryEntry& e : plan.camera_poses) {
    out.push_back(e.frame_id, world_base * e.pose.inverse() * camera_from_tool);
  }
  return out;
}

}  // namespace posechain
