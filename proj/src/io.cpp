#include "posechain/io.hpp"

#include "posechain/error.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace posechain::io {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void parse_fail(const std::string& context, const std::string& what) {
  throw Error(ErrorCode::ParseError, context + ": " + what);
}

double number(const Json& j, const char* key, const std::string& context) {
  if (!j.is_object() || !j.contains(key)) parse_fail(context, std::string("missing key '") + key + "'");
  const Json& v = j.at(key);
  if (!v.is_number()) parse_fail(context, std::string("key '") + key + "' is not a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) parse_fail(context, std::string("key '") + key + "' is not finite");
  return d;
}

std::string text(const Json& j, const char* key, const std::string& context) {
  if (!j.is_object() || !j.contains(key)) parse_fail(context, std::string("missing key '") + key + "'");
  const Json& v = j.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  parse_fail(context, std::string("key '") + key + "' is not a string");
}

double optional_number(const Json& j, const char* key, double fallback, const std::string& context) {
  if (!j.contains(key)) return fallback;
  return number(j, key, context);
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  if (s.empty()) parse_fail(context, "empty numeric field");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) parse_fail(context, "invalid number '" + s + "'");
  return v;
}

/// Non-empty lines with their 1-based line numbers.
std::vector<std::pair<int, std::string>> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::pair<int, std::string>> lines;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    lines.emplace_back(number, line);
  }
  return lines;
}

std::string line_context(const fs::path& path, int line) { return path.string() + ":" + std::to_string(line); }

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// --- JSON -------------------------------------------------------------------

Json matrix_to_json(const Eigen::Matrix4d& m) {
  Json rows = Json::array();
  for (int r = 0; r < 4; ++r) {
    Json row = Json::array();
    for (int c = 0; c < 4; ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::Matrix4d matrix_from_json(const Json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 4) parse_fail(context, "transform_matrix must be 4 rows");
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != 4) parse_fail(context, "transform_matrix rows must have 4 entries");
    for (int c = 0; c < 4; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) parse_fail(context, "transform_matrix entry is not a number");
      m(r, c) = v.get<double>();
      if (!std::isfinite(m(r, c))) parse_fail(context, "transform_matrix entry is not finite");
    }
  }
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0) {
    parse_fail(context, "bottom row must be [0, 0, 0, 1]");
  }
  const Eigen::Matrix3d rot = m.topLeftCorner<3, 3>();
  if ((rot.transpose() * rot - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      std::abs(rot.determinant() - 1.0) > 1e-9) {
    parse_fail(context, "rotation block is not a proper rotation");
  }
  return m;
}

Json transform_to_json(const RigidTransformd& t) { return matrix_to_json(t.matrix()); }

RigidTransformd transform_from_json(const Json& j, const std::string& context) {
  return RigidTransformd::from_matrix(matrix_from_json(j, context));
}

Json intrinsics_to_json(const CameraIntrinsicsd& k) {
  Json j;
  j["fl_x"] = k.fx;
  j["fl_y"] = k.fy;
  j["cx"] = k.cx;
  j["cy"] = k.cy;
  j["k1"] = k.k1;
  j["k2"] = k.k2;
  j["k3"] = k.k3;
  j["p1"] = k.p1;
  j["p2"] = k.p2;
  j["w"] = k.width;
  j["h"] = k.height;
  return j;
}

CameraIntrinsicsd intrinsics_from_json(const Json& j, const std::string& context) {
  CameraIntrinsicsd k;
  k.fx = number(j, "fl_x", context);
  k.fy = number(j, "fl_y", context);
  k.cx = number(j, "cx", context);
  k.cy = number(j, "cy", context);
  k.k1 = optional_number(j, "k1", 0.0, context);
  k.k2 = optional_number(j, "k2", 0.0, context);
  k.k3 = optional_number(j, "k3", 0.0, context);
  k.p1 = optional_number(j, "p1", 0.0, context);
  k.p2 = optional_number(j, "p2", 0.0, context);
  const double w = number(j, "w", context);
  const double h = number(j, "h", context);
  k.width = static_cast<int>(w);
  k.height = static_cast<int>(h);
  if (k.width != w || k.height != h) parse_fail(context, "image size must be integral");
  if (!k.valid()) parse_fail(context, "focal lengths and image size must be positive");
  return k;
}

Json trajectory_to_json(const Trajectory& t) {
  Json arr = Json::array();
  for (const TrajectoryEntry& e : t) {
    Json item;
    item["frame_id"] = e.frame_id;
    item["transform_matrix"] = transform_to_json(e.pose);
    arr.push_back(std::move(item));
  }
  return arr;
}

Trajectory trajectory_from_json(const Json& j, const std::string& context) {
  if (!j.is_array()) parse_fail(context, "trajectory must be a JSON array");
  Trajectory t;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string ctx = context + "[" + std::to_string(i) + "]";
    const std::string id = text(j[i], "frame_id", ctx);
    if (!j[i].contains("transform_matrix")) parse_fail(ctx, "missing key 'transform_matrix'");
    if (t.contains(id)) parse_fail(ctx, "duplicate frame_id '" + id + "'");
    t.push_back(id, transform_from_json(j[i].at("transform_matrix"), ctx));
  }
  return t;
}

Json dh_chain_to_json(const DHChain& chain) {
  Json arr = Json::array();
  for (const DHJoint& joint : chain.joints) {
    Json item;
    item["a"] = joint.a;
    item["alpha"] = joint.alpha;
    item["d"] = joint.d;
    item["theta_offset"] = joint.theta_offset;
    arr.push_back(std::move(item));
  }
  return arr;
}

DHChain dh_chain_from_json(const Json& j, const std::string& context) {
  const Json& joints = j.is_object() && j.contains("joints") ? j.at("joints") : j;
  if (!joints.is_array() || joints.empty()) parse_fail(context, "DH chain must be a non-empty array");
  DHChain chain;
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const std::string ctx = context + "[" + std::to_string(i) + "]";
    DHJoint joint;
    joint.a = number(joints[i], "a", ctx);
    joint.alpha = number(joints[i], "alpha", ctx);
    joint.d = number(joints[i], "d", ctx);
    joint.theta_offset = optional_number(joints[i], "theta_offset", 0.0, ctx);
    chain.joints.push_back(joint);
  }
  return chain;
}

Json target_to_json(const CalibrationTarget& target) {
  Json arr = Json::array();
  for (const TargetPoint& p : target.points()) {
    Json item;
    item["point_id"] = p.point_id;
    item["x"] = p.position.x();
    item["y"] = p.position.y();
    item["z"] = p.position.z();
    arr.push_back(std::move(item));
  }
  return arr;
}

CalibrationTarget target_from_json(const Json& j, const std::string& context) {
  if (!j.is_array()) parse_fail(context, "target must be a JSON array");
  std::vector<TargetPoint> points;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string ctx = context + "[" + std::to_string(i) + "]";
    points.push_back({text(j[i], "point_id", ctx),
                      Eigen::Vector3d(number(j[i], "x", ctx), number(j[i], "y", ctx), number(j[i], "z", ctx))});
  }
  try {
    return CalibrationTarget(std::move(points));
  } catch (const Error& e) {
    parse_fail(context, e.what());
  }
}

Json calibration_to_json(const CalibrationResult& r) {
  Json j;
  j["hand_eye"] = transform_to_json(r.hand_eye);
  j["world_base"] = transform_to_json(r.world_base);
  j["intrinsics"] = intrinsics_to_json(r.intrinsics);
  j["rmst_mm"] = r.rmst_mm;
  j["rmsr_deg"] = r.rmsr_deg;
  j["rrms_px"] = r.rrms_px;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["initial_cost"] = r.initial_cost;
  j["final_cost"] = r.final_cost;
  return j;
}

CalibrationResult calibration_from_json(const Json& j, const std::string& context) {
  if (!j.is_object()) parse_fail(context, "calibration must be a JSON object");
  for (const char* key : {"hand_eye", "world_base", "intrinsics"}) {
    if (!j.contains(key)) parse_fail(context, std::string("missing key '") + key + "'");
  }
  CalibrationResult r;
  r.hand_eye = transform_from_json(j.at("hand_eye"), context + ".hand_eye");
  r.world_base = transform_from_json(j.at("world_base"), context + ".world_base");
  r.intrinsics = intrinsics_from_json(j.at("intrinsics"), context + ".intrinsics");
  const auto stat = [&](const char* key) {
    return j.contains(key) && j.at(key).is_number() ? j.at(key).get<double>() : std::nan("");
  };
  r.rmst_mm = stat("rmst_mm");
  r.rmsr_deg = stat("rmsr_deg");
  r.rrms_px = stat("rrms_px");
  r.iterations = j.contains("iterations") && j.at("iterations").is_number_integer() ? j.at("iterations").get<int>() : 0;
  r.converged = j.contains("converged") && j.at("converged").is_boolean() && j.at("converged").get<bool>();
  r.initial_cost = stat("initial_cost");
  r.final_cost = stat("final_cost");
  return r;
}

Json plan_to_json(const HemispherePlan& plan) {
  Json j;
  j["radius_m"] = plan.radius_m;
  j["d_lat_deg"] = plan.d_lat_deg;
  j["d_lon_deg"] = plan.d_lon_deg;
  j["elevation_min_deg"] = plan.elevation_min_deg;
  j["elevation_max_deg"] = plan.elevation_max_deg;
  j["center"] = Json::array({plan.center.x(), plan.center.y(), plan.center.z()});
  j["upside_down"] = plan.upside_down;
  return j;
}

HemispherePlan plan_from_json(const Json& j, const std::string& context) {
  if (!j.is_object()) parse_fail(context, "plan must be a JSON object");
  HemispherePlan plan;
  plan.radius_m = optional_number(j, "radius_m", plan.radius_m, context);
  plan.d_lat_deg = optional_number(j, "d_lat_deg", plan.d_lat_deg, context);
  plan.d_lon_deg = optional_number(j, "d_lon_deg", plan.d_lon_deg, context);
  plan.elevation_min_deg = optional_number(j, "elevation_min_deg", plan.elevation_min_deg, context);
  plan.elevation_max_deg = optional_number(j, "elevation_max_deg", plan.elevation_max_deg, context);
  if (j.contains("center")) {
    const Json& c = j.at("center");
    if (!c.is_array() || c.size() != 3 || !c[0].is_number() || !c[1].is_number() || !c[2].is_number()) {
      parse_fail(context, "center must be [x, y, z]");
    }
    plan.center = Eigen::Vector3d(c[0].get<double>(), c[1].get<double>(), c[2].get<double>());
  }
  if (j.contains("upside_down")) {
    if (!j.at("upside_down").is_boolean()) parse_fail(context, "upside_down must be a boolean");
    plan.upside_down = j.at("upside_down").get<bool>();
  }
  return plan;
}

Json pose_error_report_to_json(const PoseErrorReport& report) {
  Json j;
  j["mte_mm"] = report.mte_mm;
  j["mre_deg"] = report.mre_deg;
  j["frames"] = report.per_frame.size();
  j["alignment"] = {{"scale", report.alignment.scale}, {"transform_matrix", transform_to_json(report.alignment.rigid)}};
  Json per = Json::array();
  for (const FrameError& fe : report.per_frame) {
    per.push_back({{"frame_id", fe.frame_id}, {"translation_mm", fe.translation_mm}, {"rotation_deg", fe.rotation_deg}});
  }
  j["per_frame"] = std::move(per);
  return j;
}

Json quality_report_to_json(const QualityReport& report) {
  Json j;
  const bool all_identical = std::isinf(report.psnr_mean);
  j["psnr_mean"] = all_identical ? Json(nullptr) : Json(report.psnr_mean);
  j["psnr_std"] = report.psnr_std;
  j["psnr_identical"] = all_identical;
  j["ssim_mean"] = report.ssim_mean;
  j["ssim_std"] = report.ssim_std;
  j["count"] = report.count;
  j["infinite_psnr_count"] = report.infinite_psnr_count;
  j["single_sample"] = report.single_sample;
  j["summary"] = format_quality_row(report);
  Json per = Json::array();
  for (const ImageScore& s : report.per_image) {
    const bool identical = std::isinf(s.psnr);
    per.push_back({{"name", s.name},
                   {"psnr", identical ? Json(nullptr) : Json(s.psnr)},
                   {"identical", identical},
                   {"ssim", s.ssim}});
  }
  j["per_image"] = std::move(per);
  return j;
}

// --- manifest ---------------------------------------------------------------

namespace {

// camera axes (x right, y down, z forward) <-> (x right, y up, z backward)
const Eigen::Matrix4d& axis_flip() {
  static const Eigen::Matrix4d flip = Eigen::Vector4d(1.0, -1.0, -1.0, 1.0).asDiagonal();
  return flip;
}

}  // namespace

Eigen::Matrix4d manifest_matrix_from_camera_pose(const RigidTransformd& camera_from_world) {
  return camera_from_world.inverse().matrix() * axis_flip();
}

RigidTransformd camera_pose_from_manifest_matrix(const Eigen::Matrix4d& m) {
  return RigidTransformd::from_matrix(m * axis_flip()).inverse();
}

Json manifest_to_json(const DatasetManifest& manifest) {
  Json j = intrinsics_to_json(manifest.intrinsics);
  j["camera_model"] = "OPENCV";
  Json frames = Json::array();
  for (const ManifestFrame& f : manifest.frames) {
    Json item;
    item["file_path"] = f.file_path;
    item["transform_matrix"] = matrix_to_json(f.transform_matrix);
    frames.push_back(std::move(item));
  }
  j["frames"] = std::move(frames);
  return j;
}

DatasetManifest manifest_from_json(const Json& j, const std::string& context) {
  if (!j.is_object() || !j.contains("frames") || !j.at("frames").is_array()) {
    parse_fail(context, "manifest needs a 'frames' array");
  }
  DatasetManifest m;
  m.intrinsics = intrinsics_from_json(j, context);
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < j.at("frames").size(); ++i) {
    const Json& f = j.at("frames")[i];
    const std::string ctx = context + ".frames[" + std::to_string(i) + "]";
    ManifestFrame frame;
    frame.file_path = text(f, "file_path", ctx);
    if (!f.contains("transform_matrix")) parse_fail(ctx, "missing key 'transform_matrix'");
    frame.transform_matrix = matrix_from_json(f.at("transform_matrix"), ctx);
    if (seen[frame.file_path]++ > 0) parse_fail(ctx, "duplicate file_path '" + frame.file_path + "'");
    m.frames.push_back(std::move(frame));
  }
  return m;
}

Trajectory manifest_camera_poses(const DatasetManifest& manifest) {
  Trajectory t;
  for (const ManifestFrame& f : manifest.frames) {
    t.push_back(fs::path(f.file_path).stem().string(), camera_pose_from_manifest_matrix(f.transform_matrix));
  }
  return t;
}

// --- CSV --------------------------------------------------------------------

std::vector<JointState> read_joint_log(const fs::path& path) {
  const auto lines = read_lines(path);
  std::vector<JointState> log;
  if (lines.empty()) return log;
  const std::vector<std::string> header = split_csv_line(lines.front().second);
  if (header.size() < 2 || header[0] != "frame_id") {
    parse_fail(line_context(path, lines.front().first), "header must be frame_id,q1,...,qn");
  }
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c] != "q" + std::to_string(c)) {
      parse_fail(line_context(path, lines.front().first), "unexpected column '" + header[c] + "'");
    }
  }
  const std::size_t joints = header.size() - 1;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string ctx = line_context(path, lines[i].first);
    const std::vector<std::string> fields = split_csv_line(lines[i].second);
    if (fields.size() != header.size()) {
      parse_fail(ctx, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) parse_fail(ctx, "empty frame_id");
    JointState state;
    state.frame_id = fields[0];
    state.q.resize(static_cast<Eigen::Index>(joints));
    for (std::size_t c = 0; c < joints; ++c) state.q[static_cast<Eigen::Index>(c)] = parse_double(fields[c + 1], ctx);
    log.push_back(std::move(state));
  }
  return log;
}

std::string joint_log_to_csv(const std::vector<JointState>& log) {
  std::string out = "frame_id";
  const Eigen::Index n = log.empty() ? 6 : log.front().q.size();
  for (Eigen::Index i = 1; i <= n; ++i) out += ",q" + std::to_string(i);
  out += "\n";
  for (const JointState& s : log) {
    out += s.frame_id;
    for (Eigen::Index i = 0; i < s.q.size(); ++i) out += "," + format_double(s.q[i]);
    out += "\n";
  }
  return out;
}

std::vector<ObservationRow> read_observations(const fs::path& path) {
  const auto lines = read_lines(path);
  std::vector<ObservationRow> rows;
  if (lines.empty()) return rows;
  const std::vector<std::string> header = split_csv_line(lines.front().second);
  if (header != std::vector<std::string>{"frame_id", "point_id", "u", "v"}) {
    parse_fail(line_context(path, lines.front().first), "header must be frame_id,point_id,u,v");
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string ctx = line_context(path, lines[i].first);
    const std::vector<std::string> f = split_csv_line(lines[i].second);
    if (f.size() != 4) parse_fail(ctx, "expected 4 fields, got " + std::to_string(f.size()));
    if (f[0].empty() || f[1].empty()) parse_fail(ctx, "empty id");
    rows.push_back({f[0], {f[1], PixelPointd(parse_double(f[2], ctx), parse_double(f[3], ctx))}});
  }
  return rows;
}

std::string observations_to_csv(const std::vector<CalibrationShot>& shots) {
  std::string out = "frame_id,point_id,u,v\n";
  for (const CalibrationShot& shot : shots) {
    for (const Observation& o : shot.observations) {
      out += shot.frame_id + "," + o.point_id + "," + format_double(o.pixel.x()) + "," + format_double(o.pixel.y()) +
             "\n";
    }
  }
  return out;
}

std::vector<CalibrationShot> assemble_shots(const std::vector<ObservationRow>& rows, const Trajectory& robot_poses,
                                            const CalibrationTarget& target) {
  std::vector<CalibrationShot> shots;
  std::map<std::string, std::size_t> index;
  for (const ObservationRow& row : rows) {
    if (target.find(row.observation.point_id) == nullptr) {
      throw Error(ErrorCode::UnknownPointId,
                  "frame '" + row.frame_id + "' observes unknown point '" + row.observation.point_id + "'");
    }
    auto it = index.find(row.frame_id);
    if (it == index.end()) {
      const RigidTransformd* pose = robot_poses.find(row.frame_id);
      if (pose == nullptr) throw Error(ErrorCode::MissingPose, "no robot pose for frame '" + row.frame_id + "'");
      it = index.emplace(row.frame_id, shots.size()).first;
      shots.push_back({row.frame_id, *pose, {}});
    }
    shots[it->second].observations.push_back(row.observation);
  }
  return shots;
}

std::string pose_errors_to_csv(const PoseErrorReport& report) {
  std::string out = "frame_id,translation_mm,rotation_deg\n";
  for (const FrameError& fe : report.per_frame) {
    out += fe.frame_id + "," + format_double(fe.translation_mm) + "," + format_double(fe.rotation_deg) + "\n";
  }
  return out;
}

std::string quality_to_csv(const QualityReport& report) {
  std::string out = "name,psnr_db,ssim\n";
  for (const ImageScore& s : report.per_image) {
    out += s.name + "," + (std::isinf(s.psnr) ? std::string("inf") : format_double(s.psnr)) + "," +
           format_double(s.ssim) + "\n";
  }
  return out;
}

std::string trajectory_to_csv(const Trajectory& t) {
  std::string out = "frame_id,x,y,z,qw,qx,qy,qz\n";
  for (const TrajectoryEntry& e : t) {
    const Eigen::Vector3d& p = e.pose.translation();
    const Eigen::Quaterniond& q = e.pose.rotation();
    out += e.frame_id;
    for (double v : {p.x(), p.y(), p.z(), q.w(), q.x(), q.y(), q.z()}) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

// --- images -----------------------------------------------------------------

ImageBuffer read_png(const fs::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&img, path.c_str()) == 0) {
    throw Error(ErrorCode::IoError, "cannot read PNG " + path.string() + ": " + img.message);
  }
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(img));
  if (png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr) == 0) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::IoError, "cannot decode PNG " + path.string() + ": " + msg);
  }
  ImageBuffer out(static_cast<int>(img.width), static_cast<int>(img.height), color ? 3 : 1);
  for (std::size_t i = 0; i < buffer.size(); ++i) out.data[i] = buffer[i] / 255.0;
  return out;
}

void write_png(const fs::path& path, const ImageBuffer& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw Error(ErrorCode::DimensionMismatch, "PNG output needs 1 or 3 channels");
  }
  std::vector<std::uint8_t> buffer(image.data.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const double v = std::clamp(image.data[i], 0.0, 1.0);
    buffer[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  if (png_image_write_to_file(&img, tmp.c_str(), 0, buffer.data(), 0, nullptr) == 0) {
    throw Error(ErrorCode::IoError, "cannot write PNG " + path.string() + ": " + img.message);
  }
  fs::rename(tmp, path);
}

ImageBuffer read_pfm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string magic;
  int width = 0;
  int height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (!in || (magic != "Pf" && magic != "PF") || width <= 0 || height <= 0 || scale == 0.0) {
    parse_fail(path.string(), "invalid PFM header");
  }
  in.get();  // single whitespace before the raster
  const int channels = magic == "PF" ? 3 : 1;
  std::vector<float> raster(static_cast<std::size_t>(width) * height * channels);
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size() * sizeof(float)));
  if (!in) parse_fail(path.string(), "truncated PFM raster");
  const bool file_little = scale < 0.0;
  if (file_little != (std::endian::native == std::endian::little)) {
    for (float& f : raster) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      bits = __builtin_bswap32(bits);
      std::memcpy(&f, &bits, sizeof bits);
    }
  }
  ImageBuffer out(width, height, channels);
  const std::size_t row = static_cast<std::size_t>(width) * channels;
  for (int y = 0; y < height; ++y) {
    const std::size_t src = static_cast<std::size_t>(height - 1 - y) * row;
    for (std::size_t i = 0; i < row; ++i) out.data[static_cast<std::size_t>(y) * row + i] = raster[src + i];
  }
  return out;
}

void write_pfm(const fs::path& path, const ImageBuffer& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw Error(ErrorCode::DimensionMismatch, "PFM output needs 1 or 3 channels");
  }
  static_assert(std::endian::native == std::endian::little, "PFM writer assumes a little-endian host");
  std::string content = (image.channels == 3 ? "PF\n" : "Pf\n") + std::to_string(image.width) + " " +
                        std::to_string(image.height) + "\n-1.0\n";
  const std::size_t row = static_cast<std::size_t>(image.width) * image.channels;
  const std::size_t header = content.size();
  content.resize(header + row * image.height * sizeof(float));
  char* dst = content.data() + header;
  for (int y = image.height - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < row; ++i) {
      const float f = static_cast<float>(image.data[static_cast<std::size_t>(y) * row + i]);
      std::memcpy(dst, &f, sizeof f);
      dst += sizeof f;
    }
  }
  write_text_atomic(path, content);
}

// --- files ------------------------------------------------------------------

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    parse_fail(path.string(), e.what());
  }
}

void write_text_atomic(const fs::path& path, const std::string& content) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const Json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

}  // namespace posechain::io
