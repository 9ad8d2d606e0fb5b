#include "posechain/pose_metrics.hpp"

#include "posechain/error.hpp"

#include <cmath>

namespace posechain {

RigidTransformd discrepancy(const RigidTransformd& camera_pose, const RigidTransformd& robot_pose,
                            const RigidTransformd& hand_eye, const RigidTransformd& world_base) {
  const RigidTransformd chain = hand_eye.inverse() * robot_pose.inverse() * world_base;
  return chain.inverse() * camera_pose;
}

double rmst(std::span<const RigidTransformd> discrepancies) {
  if (discrepancies.empty()) throw Error(ErrorCode::EmptyInput, "rmst of an empty list");
  double sum = 0.0;
  for (const auto& d : discrepancies) sum += d.translation().squaredNorm();
  return 1000.0 * std::sqrt(sum / static_cast<double>(discrepancies.size()));
}

double rmsr(std::span<const RigidTransformd> discrepancies) {
  if (discrepancies.empty()) throw Error(ErrorCode::EmptyInput, "rmsr of an empty list");
  double sum = 0.0;
  for (const auto& d : discrepancies) {
    const double angle = rotation_angle(d);
    sum += angle * angle;
  }
  return rad_to_deg(std::sqrt(sum / static_cast<double>(discrepancies.size())));
}

double rrms(const std::vector<CalibrationShot>& shots, const Trajectory& camera_poses,
            const CameraIntrinsicsd& intrinsics, const CalibrationTarget& target) {
  if (shots.empty()) throw Error(ErrorCode::EmptyInput, "rrms without shots");
  double outer = 0.0;
  for (const CalibrationShot& shot : shots) {
    const RigidTransformd* pose = camera_poses.find(shot.frame_id);
    if (pose == nullptr) throw Error(ErrorCode::MissingPose, "no camera pose for frame '" + shot.frame_id + "'");
    if (shot.observations.empty()) {
      throw Error(ErrorCode::EmptyInput, "frame '" + shot.frame_id + "' has no observations");
    }
    double inner = 0.0;
    for (const Observation& obs : shot.observations) {
      const PixelPointd predicted = project(Eigen::Vector3d(*pose * target.at(obs.point_id)), intrinsics);
      inner += (obs.pixel - predicted).squaredNorm();
    }
    outer += inner / static_cast<double>(shot.observations.size());
  }
  return std::sqrt(outer / static_cast<double>(shots.size()));
}

Eigen::Vector3d camera_center(const RigidTransformd& world_to_camera) {
  return world_to_camera.inverse().translation();
}

SimilarityTransformd umeyama_align(const Trajectory& source, const Trajectory& reference, bool with_scale) {
  std::vector<Eigen::Vector3d> src;
  std::vector<Eigen::Vector3d> ref;
  for (const TrajectoryEntry& e : source) {
    if (const RigidTransformd* r = reference.find(e.frame_id)) {
      src.push_back(camera_center(e.pose));
      ref.push_back(camera_center(*r));
    }
  }
  const std::size_t n = src.size();
  if (n < 3) {
    throw Error(ErrorCode::DegenerateGeometry, "alignment needs at least 3 shared frames, got " + std::to_string(n));
  }

  Eigen::Vector3d mean_src = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_ref = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mean_src += src[i];
    mean_ref += ref[i];
  }
  mean_src /= static_cast<double>(n);
  mean_ref /= static_cast<double>(n);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d src_scatter = Eigen::Matrix3d::Zero();
  double src_var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d ds = src[i] - mean_src;
    cov += (ref[i] - mean_ref) * ds.transpose();
    src_scatter += ds * ds.transpose();
    src_var += ds.squaredNorm();
  }
  cov /= static_cast<double>(n);
  src_var /= static_cast<double>(n);

  const Eigen::JacobiSVD<Eigen::Matrix3d> scatter_svd(src_scatter);
  const Eigen::Vector3d sv = scatter_svd.singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= 1e-20 * sv[0]) {
    throw Error(ErrorCode::DegenerateGeometry, "camera centers are collinear");
  }

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s[2] = -1.0;
  const Eigen::Matrix3d rotation = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  const double scale = with_scale ? svd.singularValues().dot(s) / src_var : 1.0;

  SimilarityTransformd out;
  out.scale = scale;
  out.rigid = RigidTransformd(rotation, mean_ref - scale * rotation * mean_src);
  return out;
}

PoseErrorReport absolute_pose_error(const Trajectory& source, const Trajectory& reference,
                                    const SimilarityTransformd& alignment) {
  PoseErrorReport report;
  report.alignment = alignment;
  const Eigen::Quaterniond& align_rot = alignment.rigid.rotation();
  double sum_t = 0.0;
  double sum_r = 0.0;
  for (const TrajectoryEntry& e : source) {
    const RigidTransformd* ref = reference.find(e.frame_id);
    if (ref == nullptr) continue;
    const Eigen::Vector3d aligned_center = alignment * camera_center(e.pose);
    // world-to-camera rotation of the aligned source pose
    const Eigen::Quaterniond aligned_rot = e.pose.rotation() * align_rot.conjugate();
    FrameError fe;
    fe.frame_id = e.frame_id;
    fe.translation_mm = 1000.0 * (aligned_center - camera_center(*ref)).norm();
    fe.rotation_deg = rad_to_deg(rotation_angle(Eigen::Quaterniond(aligned_rot * ref->rotation().conjugate())));
    sum_t += fe.translation_mm;
    sum_r += fe.rotation_deg;
    report.per_frame.push_back(std::move(fe));
  }
  if (report.per_frame.empty()) throw Error(ErrorCode::NoSharedFrames, "trajectories share no frame ids");
  report.mte_mm = sum_t / static_cast<double>(report.per_frame.size());
  report.mre_deg = sum_r / static_cast<double>(report.per_frame.size());
  return report;
}

Eigen::Quaterniond average_rotation(std::span<const Eigen::Quaterniond> rotations) {
  if (rotations.empty()) throw Error(ErrorCode::EmptyInput, "average of no rotations");
  Eigen::Vector4d acc = Eigen::Vector4d::Zero();
  const Eigen::Vector4d first = rotations.front().coeffs();
  for (const auto& q : rotations) {
    const Eigen::Vector4d c = q.coeffs();
    acc += c.dot(first) < 0.0 ? Eigen::Vector4d(-c) : c;
  }
  Eigen::Quaterniond mean;
  mean.coeffs() = acc.normalized();
  return mean;
}

RepeatabilityStats repeatability_stats(const std::vector<std::vector<RigidTransformd>>& groups) {
  if (groups.empty()) throw Error(ErrorCode::EmptyInput, "no repeatability groups");
  double sum_t = 0.0;
  double sum_r = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    if (group.size() < 2) {
      throw Error(ErrorCode::GroupTooSmall, "group " + std::to_string(g) + " has fewer than 2 poses");
    }
    const double dof = static_cast<double>(group.size() - 1);

    Eigen::Vector3d mean_t = Eigen::Vector3d::Zero();
    std::vector<Eigen::Quaterniond> rots;
    rots.reserve(group.size());
    for (const auto& pose : group) {
      mean_t += pose.translation();
      rots.push_back(pose.rotation());
    }
    mean_t /= static_cast<double>(group.size());
    const Eigen::Quaterniond mean_r = average_rotation(rots);

    double ss_t = 0.0;
    double ss_r = 0.0;
    for (const auto& pose : group) {
      ss_t += (pose.translation() - mean_t).squaredNorm();
      const double angle = rotation_angle(Eigen::Quaterniond(mean_r.conjugate() * pose.rotation()));
      ss_r += angle * angle;
    }
    sum_t += std::sqrt(ss_t / dof);
    sum_r += std::sqrt(ss_r / dof);
  }
  const double n = static_cast<double>(groups.size());
  return {1000.0 * sum_t / n, rad_to_deg(sum_r / n)};
}

}  // namespace posechain
