#pragma once

#include "posechain/camera.hpp"
#include "posechain/se3.hpp"

#include <Eigen/Dense>

#include <string>
#include <unordered_map>
#include <vector>

namespace posechain {

struct TargetPoint {
  std::string point_id;
  Eigen::Vector3d position;  // world frame, meters
};

/// Known 3D points of the calibration object.
class CalibrationTarget {
 public:
  CalibrationTarget() = default;
  /// Throws ConfigError on duplicate ids.
  explicit CalibrationTarget(std::vector<TargetPoint> points);

  const std::vector<TargetPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }

  /// Throws UnknownPointId.
  const Eigen::Vector3d& at(const std::string& point_id) const;
  const Eigen::Vector3d* find(const std::string& point_id) const;

 private:
  std::vector<TargetPoint> points_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Observation {
  std::string point_id;
  PixelPointd pixel;
};

/// One robot pose together with the target points seen from it.
struct CalibrationShot {
  std::string frame_id;
  RigidTransformd robot_pose;  // base-from-tool
  std::vector<Observation> observations;
};

}  // namespace posechain
