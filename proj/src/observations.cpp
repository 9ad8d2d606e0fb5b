#include "posechain/observations.hpp"

#include "posechain/error.hpp"

namespace posechain {

CalibrationTarget::CalibrationTarget(std::vector<TargetPoint> points) : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!index_.emplace(points_[i].point_id, i).second) {
      throw Error(ErrorCode::ConfigError, "duplicate target point id '" + points_[i].point_id + "'");
    }
  }
}

const Eigen::Vector3d& CalibrationTarget::at(const std::string& point_id) const {
  const Eigen::Vector3d* p = find(point_id);
  if (p == nullptr) throw Error(ErrorCode::UnknownPointId, "point id '" + point_id + "' not in target");
  return *p;
}

const Eigen::Vector3d* CalibrationTarget::find(const std::string& point_id) const {
  const auto it = index_.find(point_id);
  return it == index_.end() ? nullptr : &points_[it->second].position;
}

}  // namespace posechain
