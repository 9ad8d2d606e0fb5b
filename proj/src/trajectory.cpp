#include "posechain/trajectory.hpp"

#include "posechain/error.hpp"

namespace posechain {

void Trajectory::push_back(std::string frame_id, const RigidTransformd& pose) {
  if (index_.count(frame_id) != 0) {
    throw Error(ErrorCode::ConfigError, "duplicate frame id '" + frame_id + "'");
  }
  index_.emplace(frame_id, entries_.size());
  entries_.push_back({std::move(frame_id), pose});
}

const RigidTransformd* Trajectory::find(const std::string& frame_id) const {
  const auto it = index_.find(frame_id);
  return it == index_.end() ? nullptr : &entries_[it->second].pose;
}

}  // namespace posechain
