#pragma once

#include "posechain/camera.hpp"
#include "posechain/observations.hpp"
#include "posechain/se3.hpp"
#include "posechain/trajectory.hpp"

#include <span>
#include <string>
#include <vector>

// Pose-accuracy statistics. Trajectories holding camera poses are in the
// world-to-camera convention; the camera center is -R^T t.

namespace posechain {

/// Closure residual of the hand-eye chain for one shot:
/// (camera_from_tool * tool_from_base * base_from_world)^-1 * camera_from_world.
RigidTransformd discrepancy(const RigidTransformd& camera_pose, const RigidTransformd& robot_pose,
                            const RigidTransformd& hand_eye, const RigidTransformd& world_base);

/// Root mean square translation length, millimeters. Throws EmptyInput.
double rmst(std::span<const RigidTransformd> discrepancies);

/// Root mean square rotation angle, degrees. Throws EmptyInput.
double rmsr(std::span<const RigidTransformd> discrepancies);

/// Reprojection RMS in pixels: square root of the mean over shots of the
/// per-shot mean squared 2D residual norm. `camera_poses` is keyed by shot
/// frame id. Throws MissingPose, UnknownPointId, EmptyInput.
double rrms(const std::vector<CalibrationShot>& shots, const Trajectory& camera_poses,
            const CameraIntrinsicsd& intrinsics, const CalibrationTarget& target);

Eigen::Vector3d camera_center(const RigidTransformd& world_to_camera);

/// Closed-form least-squares similarity (rigid when with_scale is false)
/// taking source camera centers onto reference centers over shared frame ids.
/// Throws DegenerateGeometry for fewer than 3 shared frames or collinear centers.
SimilarityTransformd umeyama_align(const Trajectory& source, const Trajectory& reference, bool with_scale);

struct FrameError {
  std::string frame_id;
  double translation_mm = 0.0;
  double rotation_deg = 0.0;
};

struct PoseErrorReport {
  double mte_mm = 0.0;
  double mre_deg = 0.0;
  std::vector<FrameError> per_frame;
  SimilarityTransformd alignment;
};

/// Per-frame center distance and relative rotation angle after applying
/// `alignment` to the source. Frames follow source order. Throws NoSharedFrames.
PoseErrorReport absolute_pose_error(const Trajectory& source, const Trajectory& reference,
                                    const SimilarityTransformd& alignment);

struct RepeatabilityStats {
  double sigma_t_mm = 0.0;
  double sigma_r_deg = 0.0;
};

/// Each group holds repeated visits to one commanded pose. Sample (n-1)
/// standard deviations of the positions and of the rotation angles about the
/// group mean rotation, averaged over groups. Throws GroupTooSmall, EmptyInput.
RepeatabilityStats repeatability_stats(const std::vector<std::vector<RigidTransformd>>& groups);

/// Chordal L2 mean of rotations (quaternions sign-aligned to the first).
Eigen::Quaterniond average_rotation(std::span<const Eigen::Quaterniond> rotations);

}  // namespace posechain
