#pragma once

#include "posechain/se3.hpp"
#include "posechain/trajectory.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace posechain {

/// Standard (distal) Denavit-Hartenberg parameters of one revolute joint.
/// Lengths in meters, angles in radians.
struct DHJoint {
  double a = 0.0;
  double alpha = 0.0;
  double d = 0.0;
  double theta_offset = 0.0;
};

struct DHChain {
  std::vector<DHJoint> joints;

  std::size_t size() const { return joints.size(); }
};

struct JointState {
  std::string frame_id;
  Eigen::VectorXd q;  // radians
};

/// Rz(theta) * Tz(d) * Tx(a) * Rx(alpha) for a single joint.
RigidTransformd dh_transform(const DHJoint& joint, double q);

/// Base-from-tool pose. Throws DimensionMismatch if q does not match the chain.
RigidTransformd forward_kinematics(const DHChain& chain, const JointState& joints);

/// One pose per log entry, order and frame ids preserved. DimensionMismatch
/// messages name the offending frame id.
Trajectory batch_fk(const DHChain& chain, const std::vector<JointState>& log);

}  // namespace posechain
