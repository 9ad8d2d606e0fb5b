#pragma once

#include "posechain/camera.hpp"
#include "posechain/image.hpp"
#include "posechain/io.hpp"
#include "posechain/kinematics.hpp"
#include "posechain/observations.hpp"
#include "posechain/se3.hpp"
#include "posechain/trajectory.hpp"
#include "posechain/view_planner.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

// Synthetic robot-camera rig. Observations are rendered analytically with
// project(), so every downstream result can be checked against known truth.

namespace posechain {

struct NoiseModel {
  double pixel_sigma_px = 0.0;     // RMS length of the 2D pixel error
  double joint_sigma_rad = 0.0;    // per joint
  double pose_sigma_t_mm = 0.0;    // per axis, applied at the flange
  double pose_sigma_r_deg = 0.0;   // per axis, applied at the flange
};

struct CalibrationCapture {
  int shots = 32;
  double radius_m = 0.25;
  double elevation_min_deg = 45.0;
  double elevation_max_deg = 80.0;
  double aim_jitter_m = 0.03;   // camera aims at a random point this close to the target center
  double roll_range_deg = 45.0; // random roll about the optical axis, +-
};

struct SyntheticRigConfig {
  RigidTransformd hand_eye;    // tool_from_camera
  RigidTransformd world_base;  // base_from_world
  CameraIntrinsicsd intrinsics;
  CameraIntrinsicsd nominal_intrinsics;  // starting values handed to calibration
  DHChain chain;
  int target_rows = 5;
  int target_cols = 5;
  double target_spacing_m = 0.03;
  CalibrationCapture calibration;
  HemispherePlan dataset;
  NoiseModel noise;
  std::uint64_t seed = 7;
  int preview_width = 64;  // 0 disables preview images
};

/// UR5e-like arm with a camera on the flange looking at a 5x5 planar grid.
SyntheticRigConfig default_rig_config();

/// Standard DH table of a UR5e.
DHChain ur5e_chain();

/// Planar grid in the world xy plane centered on the origin, ids "p{row}_{col}".
CalibrationTarget grid_target(int rows, int cols, double spacing_m);

/// Throws ConfigError for negative noise, too few shots or an invalid grid.
void validate(const SyntheticRigConfig& config);

struct IkSettings {
  int max_iterations = 200;
  double tolerance = 1e-12;  // on the 6D pose error (m, rad)
  double damping = 1e-6;
};

/// Damped least-squares inverse kinematics started from `seed`.
/// Returns nullopt if the pose error does not fall below the tolerance.
std::optional<Eigen::VectorXd> inverse_kinematics(const DHChain& chain, const RigidTransformd& base_from_tool,
                                                  const Eigen::VectorXd& seed, const IkSettings& settings = {});

struct SyntheticDataset {
  CalibrationTarget target;
  std::vector<JointState> calibration_joints;      // as logged by the robot
  std::vector<CalibrationShot> calibration_shots;  // logged robot pose + noisy pixels
  Trajectory calibration_camera_poses;             // true camera_from_world per shot
  std::vector<JointState> dataset_joints;
  Trajectory dataset_camera_poses;                 // true camera_from_world per frame
  std::vector<std::pair<std::string, ImageBuffer>> previews;
};

/// Deterministic for a given config. Throws ConfigError if a requested pose
/// cannot be reached or leaves target points outside the image.
SyntheticDataset generate_dataset(const SyntheticRigConfig& config);

io::Json rig_config_to_json(const SyntheticRigConfig& config);
/// Missing keys keep the default_rig_config() values; a string "dh" entry is
/// read as a file relative to `base_dir`. Throws ConfigError, ParseError.
SyntheticRigConfig rig_config_from_json(const io::Json& j, const std::filesystem::path& base_dir);

/// Writes the dataset files into `out_dir` (see README for the layout).
void write_dataset(const SyntheticRigConfig& config, const SyntheticDataset& dataset,
                   const std::filesystem::path& out_dir);

}  // namespace posechain
