#include "posechain/error.hpp"
#include "posechain/io.hpp"
#include "posechain/synth.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

using namespace posechain;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("posechain_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

ErrorCode code_of(const std::function<void()>& f, std::string* message = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  ADD_FAILURE() << "expected an exception";
  return ErrorCode::IoError;
}

RigidTransformd some_pose(int i) {
  return RigidTransformd::from_rotation_vector(Eigen::Vector3d(0.1 * i, -0.7, 0.3 + i),
                                               Eigen::Vector3d(1.0 / 3.0, -2.0 * i, 1e-7));
}

}  // namespace

TEST(Json, TrajectoryRoundTripIsExact) {
  Trajectory t;
  for (int i = 0; i < 10; ++i) t.push_back("f" + std::to_string(i), some_pose(i));
  const io::Json j = io::Json::parse(io::trajectory_to_json(t).dump());
  const Trajectory back = io::trajectory_from_json(j, "mem");
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(back[i].frame_id, t[i].frame_id);
    EXPECT_EQ(back[i].pose.matrix(), RigidTransformd::from_matrix(t[i].pose.matrix()).matrix());
  }
}

TEST(Json, RejectsBadMatrices) {
  io::Json m = io::matrix_to_json(Eigen::Matrix4d::Identity());
  m[3][3] = 2.0;
  EXPECT_EQ(code_of([&] { io::matrix_from_json(m, "t"); }), ErrorCode::ParseError);
  m = io::matrix_to_json(Eigen::Matrix4d::Identity());
  m[0][0] = 1.1;
  EXPECT_EQ(code_of([&] { io::matrix_from_json(m, "t"); }), ErrorCode::ParseError);
  m = io::matrix_to_json(Eigen::Matrix4d::Identity());
  m[0][0] = -1.0;  // reflection
  EXPECT_EQ(code_of([&] { io::matrix_from_json(m, "t"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([&] { io::matrix_from_json(io::Json::array({1, 2}), "t"); }), ErrorCode::ParseError);
}

TEST(Json, IntrinsicsAndCalibrationRoundTrip) {
  const SyntheticRigConfig c = default_rig_config();
  const CameraIntrinsicsd k = io::intrinsics_from_json(io::intrinsics_to_json(c.intrinsics), "k");
  EXPECT_EQ(k.params(), c.intrinsics.params());
  EXPECT_EQ(k.width, c.intrinsics.width);
  CalibrationResult r;
  r.hand_eye = c.hand_eye;
  r.world_base = c.world_base;
  r.intrinsics = c.intrinsics;
  r.rmst_mm = 0.11;
  r.iterations = 7;
  r.converged = true;
  const CalibrationResult back = io::calibration_from_json(io::calibration_to_json(r), "cal");
  EXPECT_EQ(back.intrinsics.params(), r.intrinsics.params());
  EXPECT_EQ(back.rmst_mm, 0.11);
  EXPECT_EQ(back.iterations, 7);
  EXPECT_TRUE(back.converged);
  EXPECT_LT((back.hand_eye.matrix() - r.hand_eye.matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Json, MissingIntrinsicsKey) {
  io::Json j = io::intrinsics_to_json(default_rig_config().intrinsics);
  j.erase("fl_y");
  std::string msg;
  EXPECT_EQ(code_of([&] { io::intrinsics_from_json(j, "cam.json"); }, &msg), ErrorCode::ParseError);
  EXPECT_NE(msg.find("fl_y"), std::string::npos);
}

TEST(Json, PlanDefaultsForMissingKeys) {
  const HemispherePlan p = io::plan_from_json(io::Json::parse(R"({"radius_m": 0.5, "upside_down": true})"), "plan");
  EXPECT_EQ(p.radius_m, 0.5);
  EXPECT_TRUE(p.upside_down);
  EXPECT_EQ(p.d_lat_deg, 5.0);
  EXPECT_EQ(p.elevation_min_deg, 55.0);
}

TEST(Manifest, OpenGlConventionAndExactReimport) {
  const RigidTransformd cam = some_pose(3);
  const Eigen::Matrix4d m = io::manifest_matrix_from_camera_pose(cam);
  // camera center is the translation column; OpenGL looks down -z
  EXPECT_LT((m.topRightCorner<3, 1>() - (-(cam.rotation_matrix().transpose() * cam.translation()))).norm(), 1e-14);
  const Eigen::Vector3d optical_axis_world = cam.rotation_matrix().transpose().col(2);
  EXPECT_LT((m.block<3, 1>(0, 2) + optical_axis_world).norm(), 1e-14);

  io::DatasetManifest manifest;
  manifest.intrinsics = default_rig_config().intrinsics;
  for (int i = 0; i < 5; ++i) {
    manifest.frames.push_back({"images/f" + std::to_string(i) + ".png", io::manifest_matrix_from_camera_pose(some_pose(i))});
  }
  const io::Json j = io::Json::parse(io::manifest_to_json(manifest).dump());
  const io::DatasetManifest back = io::manifest_from_json(j, "transforms.json");
  ASSERT_EQ(back.frames.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(back.frames[i].transform_matrix, manifest.frames[i].transform_matrix);
    EXPECT_EQ(back.frames[i].file_path, manifest.frames[i].file_path);
  }
  const Trajectory poses = io::manifest_camera_poses(back);
  EXPECT_EQ(poses[2].frame_id, "f2");
  EXPECT_LT((poses[2].pose.matrix() - some_pose(2).matrix()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Manifest, DuplicatePathRejected) {
  io::DatasetManifest manifest;
  manifest.intrinsics = default_rig_config().intrinsics;
  manifest.frames.push_back({"a.png", Eigen::Matrix4d::Identity()});
  manifest.frames.push_back({"a.png", Eigen::Matrix4d::Identity()});
  EXPECT_EQ(code_of([&] { io::manifest_from_json(io::manifest_to_json(manifest), "m"); }), ErrorCode::ParseError);
}

TEST(Csv, JointLogRoundTrip) {
  TempDir dir;
  std::vector<JointState> log;
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd q(6);
    q << 0.1 * i, -1.0 / 3.0, 2.0, 1e-17, -3.14159, 0.5;
    log.push_back({"img_" + std::to_string(i), q});
  }
  io::write_text_atomic(dir.path() / "j.csv", io::joint_log_to_csv(log));
  const auto back = io::read_joint_log(dir.path() / "j.csv");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].frame_id, log[i].frame_id);
    EXPECT_EQ(back[i].q, log[i].q);
  }
}

TEST(Csv, EmptyLogIsEmpty) {
  TempDir dir;
  write(dir.path() / "j.csv", "frame_id,q1,q2,q3,q4,q5,q6\n");
  EXPECT_TRUE(io::read_joint_log(dir.path() / "j.csv").empty());
  write(dir.path() / "blank.csv", "");
  EXPECT_TRUE(io::read_joint_log(dir.path() / "blank.csv").empty());
}

TEST(Csv, MalformedRowNamesLine) {
  TempDir dir;
  write(dir.path() / "j.csv", "frame_id,q1,q2\na,0.1,0.2\nb,0.1,abc\n");
  std::string msg;
  EXPECT_EQ(code_of([&] { io::read_joint_log(dir.path() / "j.csv"); }, &msg), ErrorCode::ParseError);
  EXPECT_NE(msg.find("j.csv:3"), std::string::npos) << msg;
  write(dir.path() / "k.csv", "frame_id,q1,q2\na,0.1\n");
  EXPECT_EQ(code_of([&] { io::read_joint_log(dir.path() / "k.csv"); }, &msg), ErrorCode::ParseError);
  EXPECT_NE(msg.find("k.csv:2"), std::string::npos) << msg;
}

TEST(Csv, ObservationsAssembleIntoShots) {
  TempDir dir;
  write(dir.path() / "o.csv", "frame_id,point_id,u,v\nA,p1,1,2\nB,p1,3,4\nA,p2,5,6\n");
  const CalibrationTarget target({{"p1", Eigen::Vector3d::Zero()}, {"p2", Eigen::Vector3d::UnitX()}});
  Trajectory robot;
  robot.push_back("A", some_pose(1));
  robot.push_back("B", some_pose(2));
  const auto shots = io::assemble_shots(io::read_observations(dir.path() / "o.csv"), robot, target);
  ASSERT_EQ(shots.size(), 2u);
  EXPECT_EQ(shots[0].frame_id, "A");
  EXPECT_EQ(shots[0].observations.size(), 2u);
  EXPECT_EQ(shots[0].observations[1].pixel, PixelPointd(5, 6));
  EXPECT_EQ(shots[1].robot_pose.matrix(), some_pose(2).matrix());

  write(dir.path() / "bad.csv", "frame_id,point_id,u,v\nA,p9,1,2\n");
  EXPECT_EQ(code_of([&] { io::assemble_shots(io::read_observations(dir.path() / "bad.csv"), robot, target); }),
            ErrorCode::UnknownPointId);
  write(dir.path() / "nopose.csv", "frame_id,point_id,u,v\nC,p1,1,2\n");
  EXPECT_EQ(code_of([&] { io::assemble_shots(io::read_observations(dir.path() / "nopose.csv"), robot, target); }),
            ErrorCode::MissingPose);
}

TEST(Images, PngRoundTrip8Bit) {
  TempDir dir;
  std::mt19937_64 rng(71);
  std::uniform_int_distribution<int> u(0, 255);
  for (int channels : {1, 3}) {
    ImageBuffer img(7, 5, channels);
    for (double& v : img.data) v = u(rng) / 255.0;
    io::write_png(dir.path() / "x.png", img);
    const ImageBuffer back = io::read_png(dir.path() / "x.png");
    ASSERT_TRUE(back.same_shape(img));
    for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_EQ(back.data[i], img.data[i]);
  }
}

TEST(Images, PfmRoundTripAndOrientation) {
  TempDir dir;
  ImageBuffer img(3, 2, 1);
  img.data = {0.0f, 1.5f, -2.25f, 3.0f, 4.0f, 1e6f};
  io::write_pfm(dir.path() / "x.pfm", img);
  const ImageBuffer back = io::read_pfm(dir.path() / "x.pfm");
  EXPECT_EQ(back.data, img.data);
  // first raster row in the file is the bottom image row
  const std::string raw = io::read_text(dir.path() / "x.pfm");
  const std::string header = "Pf\n3 2\n-1.0\n";
  ASSERT_EQ(raw.substr(0, header.size()), header);
  float first;
  std::memcpy(&first, raw.data() + header.size(), sizeof first);
  EXPECT_EQ(first, 3.0f);
}

TEST(Images, MissingFile) {
  EXPECT_EQ(code_of([] { io::read_png("/nonexistent/x.png"); }), ErrorCode::IoError);
  EXPECT_EQ(code_of([] { io::read_pfm("/nonexistent/x.pfm"); }), ErrorCode::IoError);
}

TEST(Files, AtomicWriteLeavesNoTemp) {
  TempDir dir;
  io::write_text_atomic(dir.path() / "sub" / "a.txt", "hello");
  EXPECT_EQ(io::read_text(dir.path() / "sub" / "a.txt"), "hello");
  EXPECT_FALSE(fs::exists(dir.path() / "sub" / "a.txt.tmp"));
}

TEST(Files, MalformedJson) {
  TempDir dir;
  write(dir.path() / "bad.json", "{\"a\": ");
  EXPECT_EQ(code_of([&] { io::read_json(dir.path() / "bad.json"); }), ErrorCode::ParseError);
}

TEST(Format, DoubleRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) EXPECT_EQ(std::strtod(io::format_double(v).c_str(), nullptr), v);
}
