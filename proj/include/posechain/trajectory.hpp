#pragma once

#include "posechain/se3.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace posechain {

struct TrajectoryEntry {
  std::string frame_id;
  RigidTransformd pose;
};

/// Ordered poses keyed by unique frame ids. Insertion order is preserved.
class Trajectory {
 public:
  Trajectory() = default;

  /// Throws ConfigError on a duplicate frame id.
  void push_back(std::string frame_id, const RigidTransformd& pose);

  const RigidTransformd* find(const std::string& frame_id) const;
  bool contains(const std::string& frame_id) const { return index_.count(frame_id) != 0; }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const TrajectoryEntry& operator[](std::size_t i) const { return entries_[i]; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  const std::vector<TrajectoryEntry>& entries() const { return entries_; }

 private:
  std::vector<TrajectoryEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace posechain
