#pragma once

#include "posechain/camera.hpp"
#include "posechain/handeye.hpp"
#include "posechain/image.hpp"
#include "posechain/kinematics.hpp"
#include "posechain/observations.hpp"
#include "posechain/pose_metrics.hpp"
#include "posechain/se3.hpp"
#include "posechain/trajectory.hpp"
#include "posechain/view_planner.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

// File formats. Poses are serialized as row-major 4x4 homogeneous matrices
// (nested JSON arrays). Every parse failure is reported as ParseError naming
// the file and, for CSV, the line.

namespace posechain::io {

using Json = nlohmann::ordered_json;

Json matrix_to_json(const Eigen::Matrix4d& m);
/// Rejects non-finite entries, a bottom row other than [0 0 0 1], and a
/// rotation block that is not orthonormal with det +1 (tolerance 1e-9).
Eigen::Matrix4d matrix_from_json(const Json& j, const std::string& context);

Json transform_to_json(const RigidTransformd& t);
RigidTransformd transform_from_json(const Json& j, const std::string& context);

/// {fl_x, fl_y, cx, cy, k1, k2, k3, p1, p2, w, h}
Json intrinsics_to_json(const CameraIntrinsicsd& k);
CameraIntrinsicsd intrinsics_from_json(const Json& j, const std::string& context);

/// [{frame_id, transform_matrix}, ...]
Json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const Json& j, const std::string& context);

/// [{a, alpha, d, theta_offset}, ...]
Json dh_chain_to_json(const DHChain& chain);
DHChain dh_chain_from_json(const Json& j, const std::string& context);

/// [{point_id, x, y, z}, ...]
Json target_to_json(const CalibrationTarget& target);
CalibrationTarget target_from_json(const Json& j, const std::string& context);

Json calibration_to_json(const CalibrationResult& r);
CalibrationResult calibration_from_json(const Json& j, const std::string& context);

Json plan_to_json(const HemispherePlan& plan);
/// Missing keys keep their defaults.
HemispherePlan plan_from_json(const Json& j, const std::string& context);

Json pose_error_report_to_json(const PoseErrorReport& report);
Json quality_report_to_json(const QualityReport& report);

/// A NeRF-tool manifest: shared intrinsics plus camera-to-world matrices in
/// the OpenGL camera convention (x right, y up, looking down -z).
struct ManifestFrame {
  std::string file_path;
  Eigen::Matrix4d transform_matrix;
};

struct DatasetManifest {
  CameraIntrinsicsd intrinsics;
  std::vector<ManifestFrame> frames;
};

/// camera_from_world (internal convention) -> OpenGL camera-to-world matrix.
Eigen::Matrix4d manifest_matrix_from_camera_pose(const RigidTransformd& camera_from_world);
RigidTransformd camera_pose_from_manifest_matrix(const Eigen::Matrix4d& m);

Json manifest_to_json(const DatasetManifest& manifest);
/// Throws ParseError, also for duplicate file paths.
DatasetManifest manifest_from_json(const Json& j, const std::string& context);

/// Camera poses of a manifest keyed by file stem.
Trajectory manifest_camera_poses(const DatasetManifest& manifest);

// --- CSV --------------------------------------------------------------------

/// Header `frame_id,q1,...,qn`; one row per image, radians.
std::vector<JointState> read_joint_log(const std::filesystem::path& path);
std::string joint_log_to_csv(const std::vector<JointState>& log);

struct ObservationRow {
  std::string frame_id;
  Observation observation;
};

/// Header `frame_id,point_id,u,v`.
std::vector<ObservationRow> read_observations(const std::filesystem::path& path);
std::string observations_to_csv(const std::vector<CalibrationShot>& shots);

/// Groups observation rows into shots (first-appearance order) and attaches
/// robot poses. Throws MissingPose, UnknownPointId.
std::vector<CalibrationShot> assemble_shots(const std::vector<ObservationRow>& rows, const Trajectory& robot_poses,
                                            const CalibrationTarget& target);

std::string pose_errors_to_csv(const PoseErrorReport& report);
std::string quality_to_csv(const QualityReport& report);
/// frame_id,x,y,z,qw,qx,qy,qz
std::string trajectory_to_csv(const Trajectory& t);

// --- images -----------------------------------------------------------------

/// 8-bit (or 16-bit) gray or RGB PNG mapped to [0, 1] by /255 (/65535).
/// Alpha is dropped.
ImageBuffer read_png(const std::filesystem::path& path);
/// Values are clamped to [0, 1] and rounded to 8 bit. 1 or 3 channels.
void write_png(const std::filesystem::path& path, const ImageBuffer& image);

/// Portable float map; "Pf" (1 channel) or "PF" (3 channels), either endianness.
ImageBuffer read_pfm(const std::filesystem::path& path);
/// Writes little-endian; rows bottom-to-top as the format requires.
void write_pfm(const std::filesystem::path& path, const ImageBuffer& image);

// --- files ------------------------------------------------------------------

std::string read_text(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);
/// Writes to a temporary sibling, then renames over the target.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);
void write_json(const std::filesystem::path& path, const Json& j);

/// %.17g; round-trips doubles exactly.
std::string format_double(double v);

}  // namespace posechain::io
