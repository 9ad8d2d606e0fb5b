#include "posechain/synth.hpp"

#include "posechain/error.hpp"
#include "posechain/handeye.hpp"
#include "posechain/io.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace posechain {

namespace {

constexpr double kPi = std::numbers::pi;

// Keeps calibration points away from the image border.
constexpr double kImageMargin = 0.02;

Eigen::Matrix<double, 6, Eigen::Dynamic> geometric_jacobian(const DHChain& chain, const Eigen::VectorXd& q,
                                                            RigidTransformd& end) {
  const Eigen::Index n = q.size();
  std::vector<RigidTransformd> frames;
  frames.reserve(static_cast<std::size_t>(n));
  RigidTransformd pose;
  for (Eigen::Index i = 0; i < n; ++i) {
    frames.push_back(pose);
    pose = pose * dh_transform(chain.joints[static_cast<std::size_t>(i)], q[i]);
  }
  end = pose;
  Eigen::Matrix<double, 6, Eigen::Dynamic> jac(6, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const RigidTransformd& f = frames[static_cast<std::size_t>(i)];
    const Eigen::Vector3d z = f.rotation_matrix().col(2);
    jac.block<3, 1>(0, i) = z.cross(end.translation() - f.translation());
    jac.block<3, 1>(3, i) = z;
  }
  return jac;
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a <= -kPi ? a + 2.0 * kPi : a;
}

bool target_visible(const RigidTransformd& camera_from_world, const CameraIntrinsicsd& k,
                    const CalibrationTarget& target) {
  const double mx = kImageMargin * k.width;
  const double my = kImageMargin * k.height;
  for (const TargetPoint& p : target.points()) {
    const Eigen::Vector3d pc = camera_from_world * p.position;
    if (pc.z() <= 1e-3) return false;
    const PixelPointd px = project(pc, k);
    if (px.x() < mx || px.y() < my || px.x() > k.width - mx || px.y() > k.height - my) return false;
  }
  return true;
}

/// Flange pose actually reached when the controller reports `q`.
RigidTransformd perturbed_pose(const DHChain& chain, const JointState& logged, const NoiseModel& noise,
                               std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  JointState actual = logged;
  for (Eigen::Index i = 0; i < actual.q.size(); ++i) actual.q[i] += noise.joint_sigma_rad * unit(rng);
  Eigen::Vector3d omega;
  Eigen::Vector3d t;
  for (int i = 0; i < 3; ++i) omega[i] = deg_to_rad(noise.pose_sigma_r_deg) * unit(rng);
  for (int i = 0; i < 3; ++i) t[i] = noise.pose_sigma_t_mm * 1e-3 * unit(rng);
  return forward_kinematics(chain, actual) * RigidTransformd::from_rotation_vector(omega, t);
}

class IkSolver {
 public:
  explicit IkSolver(const DHChain& chain) : chain_(chain), seed_rng_(0x5eed) {
    const Eigen::Index n = static_cast<Eigen::Index>(chain.size());
    if (n == 6) {
      Eigen::VectorXd home(6);
      home << 0.0, -kPi / 2, kPi / 2, -kPi / 2, -kPi / 2, 0.0;
      seeds_.push_back(home);
    }
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    for (int s = 0; s < 40; ++s) {
      Eigen::VectorXd q(n);
      for (Eigen::Index i = 0; i < n; ++i) q[i] = angle(seed_rng_);
      seeds_.push_back(q);
    }
  }

  std::optional<Eigen::VectorXd> solve(const RigidTransformd& base_from_tool) {
    if (last_) {
      if (auto q = inverse_kinematics(chain_, base_from_tool, *last_)) return accept(*q);
    }
    for (const Eigen::VectorXd& seed : seeds_) {
      if (auto q = inverse_kinematics(chain_, base_from_tool, seed)) return accept(*q);
    }
    return std::nullopt;
  }

 private:
  Eigen::VectorXd accept(Eigen::VectorXd q) {
    for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = wrap_angle(q[i]);
    last_ = q;
    return q;
  }

  const DHChain& chain_;
  std::mt19937_64 seed_rng_;
  std::vector<Eigen::VectorXd> seeds_;
  std::optional<Eigen::VectorXd> last_;
};

ImageBuffer render_preview(const RigidTransformd& camera_from_world, const CameraIntrinsicsd& k,
                           const CalibrationTarget& target, int width) {
  const double s = static_cast<double>(width) / k.width;
  const int height = std::max(1, static_cast<int>(std::lround(k.height * s)));
  ImageBuffer img(width, height, 1, 0.1);
  const double sigma = std::max(0.6, 0.004 * width);
  for (const TargetPoint& p : target.points()) {
    const Eigen::Vector3d pc = camera_from_world * p.position;
    if (pc.z() <= 1e-6) continue;
    const PixelPointd px = project(pc, k) * s;
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    for (int y = static_cast<int>(px.y()) - r; y <= static_cast<int>(px.y()) + r; ++y) {
      for (int x = static_cast<int>(px.x()) - r; x <= static_cast<int>(px.x()) + r; ++x) {
        if (x < 0 || y < 0 || x >= width || y >= height) continue;
        const double dx = x + 0.5 - px.x();
        const double dy = y + 0.5 - px.y();
        const double v = 0.9 * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        img.at(x, y) = std::min(1.0, img.at(x, y) + v);
      }
    }
  }
  return img;
}

}  // namespace

DHChain ur5e_chain() {
  DHChain chain;
  chain.joints = {
      {0.0, kPi / 2, 0.1625, 0.0},  {-0.425, 0.0, 0.0, 0.0},       {-0.3922, 0.0, 0.0, 0.0},
      {0.0, kPi / 2, 0.1333, 0.0}, {0.0, -kPi / 2, 0.0997, 0.0}, {0.0, 0.0, 0.0996, 0.0},
  };
  return chain;
}

SyntheticRigConfig default_rig_config() {
  SyntheticRigConfig c;
  // camera ahead of and slightly below the flange, optical axis roughly along the tool z axis
  c.hand_eye = RigidTransformd::from_rotation_vector(Eigen::Vector3d(0.02, -0.03, 1.55),
                                                     Eigen::Vector3d(0.004, 0.062, 0.038));
  // target 0.45 m in front of the base, slightly below the base plane
  c.world_base = RigidTransformd::from_rotation_vector(Eigen::Vector3d(0.01, -0.015, 0.35),
                                                       Eigen::Vector3d(0.45, 0.05, -0.05));
  CameraIntrinsicsd k;
  k.width = 2855;
  k.height = 2848;
  k.fx = 2553.7;
  k.fy = 2551.9;
  k.cx = 1431.2;
  k.cy = 1420.6;
  k.k1 = -0.061;
  k.k2 = 0.094;
  k.k3 = -0.021;
  k.p1 = 3.1e-4;
  k.p2 = -2.2e-4;
  c.intrinsics = k;
  CameraIntrinsicsd nominal;
  nominal.width = k.width;
  nominal.height = k.height;
  nominal.fx = 2550.0;
  nominal.fy = 2550.0;
  nominal.cx = 0.5 * k.width;
  nominal.cy = 0.5 * k.height;
  c.nominal_intrinsics = nominal;
  c.chain = ur5e_chain();
  return c;
}

CalibrationTarget grid_target(int rows, int cols, double spacing_m) {
  if (rows < 1 || cols < 1 || !(spacing_m > 0.0)) throw Error(ErrorCode::ConfigError, "invalid target grid");
  std::vector<TargetPoint> points;
  const double x0 = -0.5 * (cols - 1) * spacing_m;
  const double y0 = -0.5 * (rows - 1) * spacing_m;
  for (int r = 0; r < rows; ++r) {
    for (int col = 0; col < cols; ++col) {
      points.push_back({"p" + std::to_string(r) + "_" + std::to_string(col),
                        Eigen::Vector3d(x0 + col * spacing_m, y0 + r * spacing_m, 0.0)});
    }
  }
  return CalibrationTarget(std::move(points));
}

void validate(const SyntheticRigConfig& config) {
  const NoiseModel& n = config.noise;
  for (double v : {n.pixel_sigma_px, n.joint_sigma_rad, n.pose_sigma_t_mm, n.pose_sigma_r_deg}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::ConfigError, "noise magnitudes must be >= 0");
  }
  const CalibrationCapture& cal = config.calibration;
  if (cal.shots < 3) throw Error(ErrorCode::ConfigError, "at least 3 calibration shots are needed");
  if (!(cal.radius_m > 0.0) || !(cal.aim_jitter_m >= 0.0) || !(cal.roll_range_deg >= 0.0)) {
    throw Error(ErrorCode::ConfigError, "invalid calibration capture geometry");
  }
  if (cal.elevation_min_deg > cal.elevation_max_deg) {
    throw Error(ErrorCode::EmptyRange, "calibration elevation_min exceeds elevation_max");
  }
  if (!(cal.elevation_min_deg > 0.0) || cal.elevation_max_deg > 90.0) {
    throw Error(ErrorCode::ConfigError, "calibration elevations must lie in (0, 90] degrees");
  }
  if (config.chain.joints.empty()) throw Error(ErrorCode::ConfigError, "DH chain is empty");
  if (!config.intrinsics.valid() || !config.nominal_intrinsics.valid()) {
    throw Error(ErrorCode::ConfigError, "intrinsics need positive focal lengths and image size");
  }
  if (config.preview_width < 0) throw Error(ErrorCode::ConfigError, "preview width must be >= 0");
  hemisphere_pose_count(config.dataset);  // throws EmptyRange / ConfigError
}

std::optional<Eigen::VectorXd> inverse_kinematics(const DHChain& chain, const RigidTransformd& base_from_tool,
                                                  const Eigen::VectorXd& seed, const IkSettings& settings) {
  if (static_cast<std::size_t>(seed.size()) != chain.size()) {
    throw Error(ErrorCode::DimensionMismatch, "IK seed does not match the chain");
  }
  Eigen::VectorXd q = seed;
  const Eigen::Matrix3d target_rot = base_from_tool.rotation_matrix();
  for (int it = 0; it < settings.max_iterations; ++it) {
    RigidTransformd end;
    const Eigen::Matrix<double, 6, Eigen::Dynamic> jac = geometric_jacobian(chain, q, end);
    Eigen::Matrix<double, 6, 1> err;
    err.head<3>() = base_from_tool.translation() - end.translation();
    err.tail<3>() = rotation_vector(Eigen::Quaterniond(target_rot * end.rotation_matrix().transpose()));
    if (err.norm() < settings.tolerance) return q;
    const Eigen::Matrix<double, 6, 6> jjt =
        jac * jac.transpose() + settings.damping * settings.damping * Eigen::Matrix<double, 6, 6>::Identity();
    Eigen::VectorXd step = jac.transpose() * jjt.ldlt().solve(err);
    const double norm = step.norm();
    if (!std::isfinite(norm)) return std::nullopt;
    if (norm > 0.5) step *= 0.5 / norm;
    q += step;
  }
  return std::nullopt;
}

SyntheticDataset generate_dataset(const SyntheticRigConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double pixel_sigma_axis = config.noise.pixel_sigma_px / std::sqrt(2.0);

  SyntheticDataset out;
  out.target = grid_target(config.target_rows, config.target_cols, config.target_spacing_m);
  IkSolver ik(config.chain);
  const RigidTransformd camera_from_tool = config.hand_eye.inverse();

  const CalibrationCapture& cap = config.calibration;
  constexpr int kMaxAttempts = 200;
  for (int shot = 0; shot < cap.shots; ++shot) {
    char id[32];
    std::snprintf(id, sizeof id, "calib_%02d", shot);
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const double el = deg_to_rad(cap.elevation_min_deg + (cap.elevation_max_deg - cap.elevation_min_deg) * unit(rng));
      const double lon = 2.0 * kPi * unit(rng);
      const Eigen::Vector3d aim((2.0 * unit(rng) - 1.0) * cap.aim_jitter_m, (2.0 * unit(rng) - 1.0) * cap.aim_jitter_m,
                                0.0);
      const double roll = deg_to_rad((2.0 * unit(rng) - 1.0) * cap.roll_range_deg);
      const Eigen::Vector3d dir(std::cos(el) * std::cos(lon), std::cos(el) * std::sin(lon), std::sin(el));
      const Eigen::Vector3d up = dir.cross(Eigen::Vector3d::UnitZ()).norm() > 1e-6 ? Eigen::Vector3d::UnitZ()
                                                                                  : Eigen::Vector3d::UnitX();
      const RigidTransformd camera_from_world =
          RigidTransformd::from_rotation_vector(Eigen::Vector3d(0.0, 0.0, roll), Eigen::Vector3d::Zero()) *
          look_at(aim + cap.radius_m * dir, aim, up);
      if (!target_visible(camera_from_world, config.intrinsics, out.target)) continue;
      const auto q = ik.solve(config.world_base * camera_from_world.inverse() * camera_from_tool);
      if (!q) continue;
      placed = true;
      const JointState logged{id, *q};
      const RigidTransformd actual = perturbed_pose(config.chain, logged, config.noise, rng);
      const RigidTransformd true_camera = apply_calibration(actual, config.hand_eye, config.world_base);
      CalibrationShot s{id, forward_kinematics(config.chain, logged), {}};
      for (const TargetPoint& p : out.target.points()) {
        PixelPointd px = project(Eigen::Vector3d(true_camera * p.position), config.intrinsics);
        if (pixel_sigma_axis > 0.0) {
          px.x() += pixel_sigma_axis * gauss(rng);
          px.y() += pixel_sigma_axis * gauss(rng);
        }
        s.observations.push_back({p.point_id, px});
      }
      out.calibration_joints.push_back(logged);
      out.calibration_shots.push_back(std::move(s));
      out.calibration_camera_poses.push_back(id, true_camera);
    }
    if (!placed) throw Error(ErrorCode::ConfigError, std::string("could not place calibration shot ") + id);
  }

  const ViewPlan plan = hemisphere_poses(config.dataset);
  const Trajectory tools = tool_poses(plan, config.hand_eye, config.world_base);
  for (const TrajectoryEntry& e : tools) {
    const auto q = ik.solve(e.pose);
    if (!q) throw Error(ErrorCode::ConfigError, "dataset pose '" + e.frame_id + "' is out of reach");
    const JointState logged{e.frame_id, *q};
    const RigidTransformd actual = perturbed_pose(config.chain, logged, config.noise, rng);
    const RigidTransformd true_camera = apply_calibration(actual, config.hand_eye, config.world_base);
    out.dataset_joints.push_back(logged);
    out.dataset_camera_poses.push_back(e.frame_id, true_camera);
    if (config.preview_width > 0) {
      out.previews.emplace_back(e.frame_id,
                                render_preview(true_camera, config.intrinsics, out.target, config.preview_width));
    }
  }
  return out;
}

void write_dataset(const SyntheticRigConfig& config, const SyntheticDataset& dataset,
                   const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  io::write_json(out_dir / "synth_config.json", rig_config_to_json(config));
  io::write_json(out_dir / "dh.json", io::dh_chain_to_json(config.chain));
  io::write_json(out_dir / "target.json", io::target_to_json(dataset.target));
  io::write_json(out_dir / "intrinsics_nominal.json", io::intrinsics_to_json(config.nominal_intrinsics));
  io::write_text_atomic(out_dir / "calibration_joints.csv", io::joint_log_to_csv(dataset.calibration_joints));
  io::write_text_atomic(out_dir / "calibration_observations.csv", io::observations_to_csv(dataset.calibration_shots));
  io::write_text_atomic(out_dir / "dataset_joints.csv", io::joint_log_to_csv(dataset.dataset_joints));
  io::Json gt;
  gt["hand_eye"] = io::transform_to_json(config.hand_eye);
  gt["world_base"] = io::transform_to_json(config.world_base);
  gt["intrinsics"] = io::intrinsics_to_json(config.intrinsics);
  io::write_json(out_dir / "gt_calibration.json", gt);
  io::write_json(out_dir / "gt_calibration_camera_poses.json", io::trajectory_to_json(dataset.calibration_camera_poses));
  io::write_json(out_dir / "gt_camera_poses.json", io::trajectory_to_json(dataset.dataset_camera_poses));
  for (const auto& [name, image] : dataset.previews) io::write_png(out_dir / "images" / (name + ".png"), image);
}

// --- config -----------------------------------------------------------------

io::Json rig_config_to_json(const SyntheticRigConfig& c) {
  io::Json j;
  j["seed"] = c.seed;
  j["hand_eye"] = io::transform_to_json(c.hand_eye);
  j["world_base"] = io::transform_to_json(c.world_base);
  j["intrinsics"] = io::intrinsics_to_json(c.intrinsics);
  j["nominal_intrinsics"] = io::intrinsics_to_json(c.nominal_intrinsics);
  j["dh"] = io::dh_chain_to_json(c.chain);
  j["target"] = {{"rows", c.target_rows}, {"cols", c.target_cols}, {"spacing_m", c.target_spacing_m}};
  j["calibration"] = {{"shots", c.calibration.shots},
                      {"radius_m", c.calibration.radius_m},
                      {"elevation_min_deg", c.calibration.elevation_min_deg},
                      {"elevation_max_deg", c.calibration.elevation_max_deg},
                      {"aim_jitter_m", c.calibration.aim_jitter_m},
                      {"roll_range_deg", c.calibration.roll_range_deg}};
  j["dataset"] = io::plan_to_json(c.dataset);
  j["noise"] = {{"pixel_sigma_px", c.noise.pixel_sigma_px},
                {"joint_sigma_rad", c.noise.joint_sigma_rad},
                {"pose_sigma_t_mm", c.noise.pose_sigma_t_mm},
                {"pose_sigma_r_deg", c.noise.pose_sigma_r_deg}};
  j["preview_width"] = c.preview_width;
  return j;
}

namespace {

double get_number(const io::Json& j, const char* key, double fallback, const std::string& context) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw Error(ErrorCode::ConfigError, context + ": '" + key + "' must be a number");
  return j.at(key).get<double>();
}

int get_int(const io::Json& j, const char* key, int fallback, const std::string& context) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw Error(ErrorCode::ConfigError, context + ": '" + key + "' must be an integer");
  return j.at(key).get<int>();
}

}  // namespace

SyntheticRigConfig rig_config_from_json(const io::Json& j, const std::filesystem::path& base_dir) {
  const std::string ctx = "synth config";
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, ctx + " must be a JSON object");
  SyntheticRigConfig c = default_rig_config();
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw Error(ErrorCode::ConfigError, ctx + ": seed must be unsigned");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("hand_eye")) c.hand_eye = io::transform_from_json(j.at("hand_eye"), ctx + ".hand_eye");
  if (j.contains("world_base")) c.world_base = io::transform_from_json(j.at("world_base"), ctx + ".world_base");
  if (j.contains("intrinsics")) c.intrinsics = io::intrinsics_from_json(j.at("intrinsics"), ctx + ".intrinsics");
  if (j.contains("nominal_intrinsics")) {
    c.nominal_intrinsics = io::intrinsics_from_json(j.at("nominal_intrinsics"), ctx + ".nominal_intrinsics");
  }
  if (j.contains("dh")) {
    const io::Json& dh = j.at("dh");
    c.chain = dh.is_string() ? io::dh_chain_from_json(io::read_json(base_dir / dh.get<std::string>()), dh.get<std::string>())
                             : io::dh_chain_from_json(dh, ctx + ".dh");
  }
  if (j.contains("target")) {
    const io::Json& t = j.at("target");
    c.target_rows = get_int(t, "rows", c.target_rows, ctx + ".target");
    c.target_cols = get_int(t, "cols", c.target_cols, ctx + ".target");
    c.target_spacing_m = get_number(t, "spacing_m", c.target_spacing_m, ctx + ".target");
  }
  if (j.contains("calibration")) {
    const io::Json& t = j.at("calibration");
    const std::string cc = ctx + ".calibration";
    c.calibration.shots = get_int(t, "shots", c.calibration.shots, cc);
    c.calibration.radius_m = get_number(t, "radius_m", c.calibration.radius_m, cc);
    c.calibration.elevation_min_deg = get_number(t, "elevation_min_deg", c.calibration.elevation_min_deg, cc);
    c.calibration.elevation_max_deg = get_number(t, "elevation_max_deg", c.calibration.elevation_max_deg, cc);
    c.calibration.aim_jitter_m = get_number(t, "aim_jitter_m", c.calibration.aim_jitter_m, cc);
    c.calibration.roll_range_deg = get_number(t, "roll_range_deg", c.calibration.roll_range_deg, cc);
  }
  if (j.contains("dataset")) c.dataset = io::plan_from_json(j.at("dataset"), ctx + ".dataset");
  if (j.contains("noise")) {
    const io::Json& n = j.at("noise");
    const std::string nc = ctx + ".noise";
    c.noise.pixel_sigma_px = get_number(n, "pixel_sigma_px", 0.0, nc);
    c.noise.joint_sigma_rad = get_number(n, "joint_sigma_rad", 0.0, nc);
    c.noise.pose_sigma_t_mm = get_number(n, "pose_sigma_t_mm", 0.0, nc);
    c.noise.pose_sigma_r_deg = get_number(n, "pose_sigma_r_deg", 0.0, nc);
  }
  c.preview_width = get_int(j, "preview_width", c.preview_width, ctx);
  validate(c);
  return c;
}

}  // namespace posechain
