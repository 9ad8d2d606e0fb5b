#pragma once

#include "posechain/se3.hpp"
#include "posechain/trajectory.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>

namespace posechain {

/// Capture poses on a hemisphere around `center`, camera looking at the center.
struct HemispherePlan {
  double radius_m = 0.2;
  double d_lat_deg = 5.0;
  double d_lon_deg = 5.0;
  double elevation_min_deg = 55.0;
  double elevation_max_deg = 85.0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // world frame, meters
  bool upside_down = false;
};

struct ViewPlan {
  Trajectory camera_poses;                // camera_from_world per view
  std::optional<Trajectory> tool_poses;   // base_from_tool per view
};

/// Number of poses hemisphere_poses() generates for `plan`.
std::size_t hemisphere_pose_count(const HemispherePlan& plan);

/// Elevation rows from min to max inclusive (step d_lat), longitudes over
/// [0, 360) (step d_lon). Frame ids "r{elevation}_c{longitude}" in degrees,
/// elevation-major order. Throws EmptyRange when min > max, ConfigError for
/// non-positive radius/steps or an elevation outside (0, 90].
ViewPlan hemisphere_poses(const HemispherePlan& plan);

/// camera_from_world with +z through `target` and the image y axis pointing
/// away from `up_hint`; roll180 rotates the camera half a turn about its
/// optical axis. Throws DegenerateUp if position == target or up_hint is
/// parallel to the viewing direction.
RigidTransformd look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                        const Eigen::Vector3d& up_hint, bool roll180 = false);

/// base_from_tool = base_from_world * camera_from_world^-1 * tool_from_camera^-1,
/// the robot poses that reproduce each planned camera pose through the chain.
Trajectory tool_poses(const ViewPlan& plan, const RigidTransformd& hand_eye, const RigidTransformd& world_base);

}  // namespace posechain
