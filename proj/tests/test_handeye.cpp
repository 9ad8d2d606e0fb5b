#include "posechain/error.hpp"
#include "posechain/handeye.hpp"
#include "posechain/pose_metrics.hpp"
#include "posechain/synth.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace posechain;

namespace {

struct Rig {
  SyntheticRigConfig config;
  SyntheticDataset data;
};

const Rig& noiseless_rig() {
  static const Rig rig = [] {
    Rig r{default_rig_config(), {}};
    r.config.dataset.d_lon_deg = 90.0;  // the dataset part is not needed here
    r.config.preview_width = 0;
    r.data = generate_dataset(r.config);
    return r;
  }();
  return rig;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an exception";
  return ErrorCode::IoError;
}

double pose_gap_m(const RigidTransformd& a, const RigidTransformd& b) {
  return (a.inverse() * b).translation().norm();
}

double pose_gap_rad(const RigidTransformd& a, const RigidTransformd& b) { return rotation_angle(a.inverse() * b); }

}  // namespace

TEST(Resection, RecoversPlanarTargetPose) {
  const Rig& rig = noiseless_rig();
  for (std::size_t i = 0; i < rig.data.calibration_shots.size(); ++i) {
    const ResectionResult r = pnp_pose(rig.data.calibration_shots[i], rig.data.target, rig.config.intrinsics);
    const RigidTransformd& truth = rig.data.calibration_camera_poses[i].pose;
    EXPECT_LT(pose_gap_m(r.pose, truth), 1e-9);
    EXPECT_LT(pose_gap_rad(r.pose, truth), 1e-9);
    EXPECT_LT(r.rrms_px, 1e-8);
  }
}

TEST(Resection, RecoversNonPlanarTargetPose) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  std::vector<TargetPoint> pts;
  for (int i = 0; i < 12; ++i) pts.push_back({"q" + std::to_string(i), Eigen::Vector3d(u(rng), u(rng), u(rng))});
  const CalibrationTarget target(pts);
  const CameraIntrinsicsd k = default_rig_config().intrinsics;
  const RigidTransformd truth =
      RigidTransformd::from_rotation_vector(Eigen::Vector3d(0.2, -0.1, 0.4), Eigen::Vector3d(0.01, -0.02, 0.5));
  CalibrationShot shot{"s", RigidTransformd(), {}};
  for (const auto& p : pts) shot.observations.push_back({p.point_id, project(Eigen::Vector3d(truth * p.position), k)});
  const ResectionResult r = pnp_pose(shot, target, k);
  EXPECT_LT(pose_gap_m(r.pose, truth), 1e-9);
  EXPECT_LT(pose_gap_rad(r.pose, truth), 1e-9);
}

TEST(Resection, TooFewObservations) {
  const Rig& rig = noiseless_rig();
  CalibrationShot shot = rig.data.calibration_shots.front();
  shot.observations.resize(5);
  EXPECT_EQ(code_of([&] { pnp_pose(shot, rig.data.target, rig.config.intrinsics); }),
            ErrorCode::DegenerateConfiguration);
}

TEST(Resection, CollinearTargetIsDegenerate) {
  std::vector<TargetPoint> pts;
  for (int i = 0; i < 8; ++i) pts.push_back({"l" + std::to_string(i), Eigen::Vector3d(0.01 * i, 0.0, 0.0)});
  const CalibrationTarget target(pts);
  const CameraIntrinsicsd k = default_rig_config().intrinsics;
  const RigidTransformd cam = RigidTransformd::from_translation(Eigen::Vector3d(0, 0, 0.5));
  CalibrationShot shot{"s", RigidTransformd(), {}};
  for (const auto& p : pts) shot.observations.push_back({p.point_id, project(Eigen::Vector3d(cam * p.position), k)});
  EXPECT_EQ(code_of([&] { pnp_pose(shot, target, k); }), ErrorCode::DegenerateConfiguration);
}

TEST(Initialize, CloseToTruthOnNoiselessData) {
  const Rig& rig = noiseless_rig();
  const CalibrationEstimate est = initialize(rig.data.calibration_shots, rig.data.target, rig.config.intrinsics);
  EXPECT_LT(pose_gap_m(est.hand_eye, rig.config.hand_eye), 1e-6);
  EXPECT_LT(pose_gap_rad(est.hand_eye, rig.config.hand_eye), 1e-6);
  EXPECT_LT(pose_gap_m(est.world_base, rig.config.world_base), 1e-6);
}

TEST(Initialize, NeedsThreeShots) {
  const Rig& rig = noiseless_rig();
  std::vector<CalibrationShot> two(rig.data.calibration_shots.begin(), rig.data.calibration_shots.begin() + 2);
  EXPECT_EQ(code_of([&] { initialize(two, rig.data.target, rig.config.intrinsics); }), ErrorCode::InsufficientMotion);
}

TEST(Initialize, SingleRotationAxisIsInsufficient) {
  // tool rotates only about its own z axis: the hand-eye translation along z is unobservable
  const SyntheticRigConfig c = default_rig_config();
  const CalibrationTarget target = grid_target(5, 5, 0.03);
  const RigidTransformd start = c.world_base * look_at(Eigen::Vector3d(0.0, -0.05, 0.25), Eigen::Vector3d::Zero(),
                                                      Eigen::Vector3d::UnitZ())
                                                   .inverse() *
                                c.hand_eye.inverse();
  std::vector<CalibrationShot> shots;
  for (int i = 0; i < 6; ++i) {
    const RigidTransformd robot =
        start * RigidTransformd::from_rotation_vector(Eigen::Vector3d(0, 0, 0.15 * i), Eigen::Vector3d::Zero());
    const RigidTransformd cam = apply_calibration(robot, c.hand_eye, c.world_base);
    CalibrationShot s{"s" + std::to_string(i), robot, {}};
    for (const auto& p : target.points()) s.observations.push_back({p.point_id, project(Eigen::Vector3d(cam * p.position), c.intrinsics)});
    shots.push_back(s);
  }
  EXPECT_EQ(code_of([&] { initialize(shots, target, c.intrinsics); }), ErrorCode::InsufficientMotion);
}

TEST(Refine, NoiselessRecoveryIsExact) {
  const Rig& rig = noiseless_rig();
  const CalibrationResult r = calibrate(rig.data.calibration_shots, rig.data.target, rig.config.nominal_intrinsics);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(pose_gap_m(r.hand_eye, rig.config.hand_eye), 1e-9);
  EXPECT_LT(pose_gap_rad(r.hand_eye, rig.config.hand_eye), 1e-9);
  EXPECT_LT(pose_gap_m(r.world_base, rig.config.world_base), 1e-9);
  EXPECT_LT((r.intrinsics.params() - rig.config.intrinsics.params()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT(r.rrms_px, 1e-8);
  EXPECT_LT(r.rmst_mm, 1e-6);
  EXPECT_LT(r.rmsr_deg, 1e-6);
}

TEST(Refine, RrmsEqualsSharedMetric) {
  const Rig& rig = noiseless_rig();
  SyntheticRigConfig noisy = rig.config;
  noisy.noise.pixel_sigma_px = 0.5;
  const SyntheticDataset d = generate_dataset(noisy);
  const CalibrationResult r = calibrate(d.calibration_shots, d.target, noisy.nominal_intrinsics);
  Trajectory chain;
  for (const auto& s : d.calibration_shots) chain.push_back(s.frame_id, apply_calibration(s.robot_pose, r));
  EXPECT_EQ(r.rrms_px, rrms(d.calibration_shots, chain, r.intrinsics, d.target));
}

TEST(Refine, FixedIntrinsicsStayFixed) {
  const Rig& rig = noiseless_rig();
  CalibrationOptions options;
  options.intrinsics_mask = IntrinsicsMask::none();
  const CalibrationEstimate init = initialize(rig.data.calibration_shots, rig.data.target, rig.config.intrinsics);
  const CalibrationResult r = refine(rig.data.calibration_shots, rig.data.target, init, options);
  EXPECT_EQ(r.intrinsics.params(), rig.config.intrinsics.params());
  EXPECT_LT(pose_gap_m(r.hand_eye, rig.config.hand_eye), 1e-9);
}

TEST(Refine, ZeroWeightSilencesOutlier) {
  const Rig& rig = noiseless_rig();
  std::vector<CalibrationShot> shots = rig.data.calibration_shots;
  shots[3].observations[7].pixel += PixelPointd(40.0, -25.0);
  CalibrationOptions options;
  options.weight = [](const CalibrationShot& s, const Observation& o) {
    return s.frame_id == "calib_03" && o.point_id == "p1_2" ? 0.0 : 1.0;
  };
  ASSERT_EQ(shots[3].observations[7].point_id, "p1_2");
  const CalibrationEstimate init = initialize(rig.data.calibration_shots, rig.data.target, rig.config.nominal_intrinsics);
  const CalibrationResult r = refine(shots, rig.data.target, init, options);
  EXPECT_LT(pose_gap_m(r.hand_eye, rig.config.hand_eye), 1e-9);
}

TEST(Refine, NegativeWeightRejected) {
  const Rig& rig = noiseless_rig();
  CalibrationOptions options;
  options.weight = [](const CalibrationShot&, const Observation&) { return -1.0; };
  EXPECT_EQ(code_of([&] {
              refine(rig.data.calibration_shots, rig.data.target,
                     {rig.config.hand_eye, rig.config.world_base, rig.config.intrinsics}, options);
            }),
            ErrorCode::ConfigError);
}

TEST(Refine, IterationCapReportsNotConverged) {
  const Rig& rig = noiseless_rig();
  CalibrationOptions options;
  options.max_iterations = 1;
  CalibrationEstimate start{rig.config.hand_eye, rig.config.world_base, rig.config.nominal_intrinsics};
  start.hand_eye = retract_pose(start.hand_eye, (Eigen::Matrix<double, 6, 1>() << 0.01, 0, 0, 0.02, 0, 0).finished());
  const CalibrationResult r = refine(rig.data.calibration_shots, rig.data.target, start, options);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1);
}

TEST(Refine, UnknownPointId) {
  const Rig& rig = noiseless_rig();
  std::vector<CalibrationShot> shots = rig.data.calibration_shots;
  shots[0].observations[0].point_id = "nope";
  EXPECT_EQ(code_of([&] {
              refine(shots, rig.data.target, {rig.config.hand_eye, rig.config.world_base, rig.config.intrinsics});
            }),
            ErrorCode::UnknownPointId);
}

TEST(Refine, EmptyInput) {
  const Rig& rig = noiseless_rig();
  EXPECT_EQ(code_of([&] { refine({}, rig.data.target, {}); }), ErrorCode::EmptyInput);
}

TEST(ReprojectionProblem, Layout) {
  const Rig& rig = noiseless_rig();
  const ReprojectionProblem all(rig.data.calibration_shots, rig.data.target, IntrinsicsMask::all());
  EXPECT_EQ(all.parameter_count(), 21);
  EXPECT_EQ(all.residual_count(), 2 * 25 * static_cast<int>(rig.data.calibration_shots.size()));
  const ReprojectionProblem pinhole(rig.data.calibration_shots, rig.data.target, IntrinsicsMask::without_distortion());
  EXPECT_EQ(pinhole.parameter_count(), 16);
}

TEST(ReprojectionProblem, ResidualsVanishAtTruth) {
  const Rig& rig = noiseless_rig();
  const ReprojectionProblem problem(rig.data.calibration_shots, rig.data.target, IntrinsicsMask::all());
  Eigen::VectorXd r;
  problem.evaluate({rig.config.hand_eye, rig.config.world_base, rig.config.intrinsics}, r, nullptr);
  EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ApplyCalibration, ChainClosesToWorldBase) {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto rnd = [&] {
    return RigidTransformd::from_rotation_vector(Eigen::Vector3d(n(rng), n(rng), n(rng)),
                                                 Eigen::Vector3d(n(rng), n(rng), n(rng)));
  };
  for (int i = 0; i < 50; ++i) {
    const RigidTransformd robot = rnd(), he = rnd(), wb = rnd();
    const RigidTransformd closure = robot * he * apply_calibration(robot, he, wb);
    EXPECT_LT((closure.matrix() - wb.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  }
}
