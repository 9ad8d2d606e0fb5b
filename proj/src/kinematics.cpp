#include "posechain/kinematics.hpp"

#include "posechain/error.hpp"

#include <cmath>

namespace posechain {

RigidTransformd dh_transform(const DHJoint& joint, double q) {
  const double theta = q + joint.theta_offset;
  const Eigen::Quaterniond rz(Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitZ()));
  const Eigen::Quaterniond rx(Eigen::AngleAxisd(joint.alpha, Eigen::Vector3d::UnitX()));
  return RigidTransformd(rz * rx, Eigen::Vector3d(joint.a * std::cos(theta), joint.a * std::sin(theta), joint.d));
}

RigidTransformd forward_kinematics(const DHChain& chain, const JointState& joints) {
  if (static_cast<std::size_t>(joints.q.size()) != chain.size()) {
    throw Error(ErrorCode::DimensionMismatch, "frame '" + joints.frame_id + "' has " +
                                                  std::to_string(joints.q.size()) + " joint angles, chain has " +
                                                  std::to_string(chain.size()) + " joints");
  }
  RigidTransformd pose;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    pose = pose * dh_transform(chain.joints[i], joints.q[static_cast<Eigen::Index>(i)]);
  }
  return pose;
}

Trajectory batch_fk(const DHChain& chain, const std::vector<JointState>& log) {
  Trajectory out;
  for (const JointState& state : log) {
    out.push_back(state.frame_id, forward_kinematics(chain, state));
  }
  return out;
}

}  // namespace posechain
