#pragma once

#include "posechain/camera.hpp"
#include "posechain/observations.hpp"
#include "posechain/se3.hpp"
#include "posechain/trajectory.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <string>
#include <vector>

// Hand-eye calibration of a camera rigidly mounted on a robot flange.
//
// Frames: world (w, the calibration target), camera (c), tool (t), base (b).
// A pose named `x_from_y` maps points from y coordinates into x coordinates.
// The chain closes as base_from_world = base_from_tool_j * tool_from_camera
// * camera_from_world_j, so each shot's camera pose is
//
//   camera_from_world_j = tool_from_camera^-1 * base_from_tool_j^-1 * base_from_world.
//
// `hand_eye` is tool_from_camera, `world_base` is base_from_world, and a
// shot's `robot_pose` is base_from_tool_j.

namespace posechain {

/// Which of the nine intrinsic parameters (CameraIntrinsics::params() order)
/// the solver may change.
struct IntrinsicsMask {
  std::array<bool, 9> free{true, true, true, true, true, true, true, true, true};

  static IntrinsicsMask all() { return {}; }
  static IntrinsicsMask none() { return {{false, false, false, false, false, false, false, false, false}}; }
  static IntrinsicsMask without_distortion() { return {{true, true, true, true, false, false, false, false, false}}; }

  int count() const;
};

/// Per-observation scalar weight; the squared residual is multiplied by it.
using ObservationWeight = std::function<double(const CalibrationShot&, const Observation&)>;

struct CalibrationOptions {
  IntrinsicsMask intrinsics_mask;
  int max_iterations = 100;
  double initial_damping = 1e-4;
  double relative_cost_tolerance = 1e-12;
  ObservationWeight weight;  // empty: unit weights
};

struct CalibrationEstimate {
  RigidTransformd hand_eye;    // tool_from_camera
  RigidTransformd world_base;  // base_from_world
  CameraIntrinsicsd intrinsics;
};

struct CalibrationResult {
  RigidTransformd hand_eye;
  RigidTransformd world_base;
  CameraIntrinsicsd intrinsics;
  double rmst_mm = 0.0;
  double rmsr_deg = 0.0;
  double rrms_px = 0.0;
  int iterations = 0;
  bool converged = false;
  double initial_cost = 0.0;
  double final_cost = 0.0;
};

struct ResectionResult {
  RigidTransformd pose;  // camera_from_world
  double rrms_px = 0.0;
};

/// camera_from_world = hand_eye^-1 * robot_pose^-1 * world_base.
template <typename Scalar>
RigidTransform<Scalar> apply_calibration(const RigidTransform<Scalar>& robot_pose,
                                         const RigidTransform<Scalar>& hand_eye,
                                         const RigidTransform<Scalar>& world_base) {
  return hand_eye.inverse() * robot_pose.inverse() * world_base;
}

inline RigidTransformd apply_calibration(const RigidTransformd& robot_pose, const CalibrationResult& result) {
  return apply_calibration(robot_pose, result.hand_eye, result.world_base);
}

/// Predicted pixel of a world point seen through the calibrated chain.
template <typename Scalar>
PixelPoint<Scalar> predict_pixel(const RigidTransform<Scalar>& hand_eye, const RigidTransform<Scalar>& world_base,
                                 const RigidTransform<Scalar>& robot_pose, const CameraIntrinsics<Scalar>& intrinsics,
                                 const Vector3<Scalar>& world_point) {
  return project(Vector3<Scalar>(apply_calibration(robot_pose, hand_eye, world_base) * world_point), intrinsics);
}

/// Spatial resection of one shot: linear DLT (homography for planar targets)
/// on undistorted rays, then reprojection-error refinement of the pose.
/// Throws DegenerateConfiguration for fewer than 6 observations or a
/// rank-deficient linear system.
ResectionResult pnp_pose(const CalibrationShot& shot, const CalibrationTarget& target,
                         const CameraIntrinsicsd& intrinsics);

/// Starting values for refine(): per-shot resection, a linear AX = XB solve
/// for the hand-eye pose, and the averaged chain closure for world_base.
/// Throws InsufficientMotion when fewer than 3 shots are given or all
/// relative rotations share one axis.
CalibrationEstimate initialize(const std::vector<CalibrationShot>& shots, const CalibrationTarget& target,
                               const CameraIntrinsicsd& nominal_intrinsics);

/// Joint reprojection-error minimization over hand_eye (6), world_base (6)
/// and the free intrinsics. Never throws on iteration exhaustion; the result
/// then carries converged = false.
CalibrationResult refine(const std::vector<CalibrationShot>& shots, const CalibrationTarget& target,
                         const CalibrationEstimate& initial, const CalibrationOptions& options = {});

/// initialize() followed by refine().
CalibrationResult calibrate(const std::vector<CalibrationShot>& shots, const CalibrationTarget& target,
                            const CameraIntrinsicsd& nominal_intrinsics, const CalibrationOptions& options = {});

/// Residuals and analytic Jacobian of the calibration cost.
///
/// Residual layout: for every shot, for every observation, (u, v) of
/// sqrt(weight) * (observed - predicted). Parameter layout of the local
/// increment: hand_eye (v, omega), world_base (v, omega), then the free
/// intrinsics in CameraIntrinsics::params() order. A pose increment
/// (v, omega) moves T to T * RigidTransform(exp(omega), v).
class ReprojectionProblem {
 public:
  ReprojectionProblem(const std::vector<CalibrationShot>& shots, const CalibrationTarget& target,
                      IntrinsicsMask mask, ObservationWeight weight = {});

  int residual_count() const { return residual_count_; }
  int parameter_count() const { return 12 + mask_.count(); }

  void evaluate(const CalibrationEstimate& estimate, Eigen::VectorXd& residuals,
                Eigen::MatrixXd* jacobian) const;

  CalibrationEstimate retract(const CalibrationEstimate& estimate, const Eigen::VectorXd& delta) const;

 private:
  struct Term {
    std::size_t shot;
    Eigen::Vector3d world_point;
    PixelPointd observed;
    double sqrt_weight;
  };

  std::vector<RigidTransformd> robot_poses_;
  IntrinsicsMask mask_;
  std::vector<Term> terms_;
  int residual_count_ = 0;
};

/// Pose increment used by every solver in this module.
RigidTransformd retract_pose(const RigidTransformd& pose, const Eigen::Matrix<double, 6, 1>& delta);

}  // namespace posechain
