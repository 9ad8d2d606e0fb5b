#include "posechain/cli.hpp"

#include "posechain/ensemble.hpp"
#include "posechain/error.hpp"
#include "posechain/handeye.hpp"
#include "posechain/image.hpp"
#include "posechain/io.hpp"
#include "posechain/kinematics.hpp"
#include "posechain/pose_metrics.hpp"
#include "posechain/synth.hpp"
#include "posechain/view_planner.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace posechain {

namespace fs = std::filesystem;
using io::Json;

namespace {

struct GlobalOptions {
  bool json = false;
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = ".";
};

/// Collects what a command produced and prints it at the end, either as
/// human-readable lines or as one JSON document.
class Report {
 public:
  Report(std::string command, const GlobalOptions& options, std::ostream& out)
      : options_(options), out_(out), start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["outputs"] = Json::array();
  }

  void file(const fs::path& path) { doc_["outputs"].push_back(path.generic_string()); }
  void set(const std::string& key, Json value) { doc_[key] = std::move(value); }
  void line(const std::string& text) { lines_.push_back(text); }

  void finish() {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (options_.json) {
      doc_["elapsed_s"] = elapsed;
      out_ << doc_.dump(2) << "\n";
      return;
    }
    for (const std::string& l : lines_) out_ << l << "\n";
    for (const Json& f : doc_["outputs"]) out_ << "wrote " << f.get<std::string>() << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "elapsed: %.3f s", elapsed);
    out_ << buf << "\n";
  }

 private:
  const GlobalOptions& options_;
  std::ostream& out_;
  std::chrono::steady_clock::time_point start_;
  Json doc_;
  std::vector<std::string> lines_;
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

fs::path out_dir(const GlobalOptions& g) {
  const fs::path dir(g.out);
  fs::create_directories(dir);
  return dir;
}

Trajectory read_trajectory(const fs::path& path) {
  const Json j = io::read_json(path);
  if (j.is_object() && j.contains("frames")) return io::manifest_camera_poses(io::manifest_from_json(j, path.string()));
  return io::trajectory_from_json(j, path.string());
}

CameraIntrinsicsd read_intrinsics(const fs::path& path) {
  const Json j = io::read_json(path);
  if (j.is_object() && j.contains("intrinsics")) return io::intrinsics_from_json(j.at("intrinsics"), path.string());
  return io::intrinsics_from_json(j, path.string());
}

Trajectory robot_poses_from(const std::string& joints, const std::string& dh, const std::string& robot_poses) {
  if (!robot_poses.empty()) return read_trajectory(robot_poses);
  if (joints.empty() || dh.empty()) {
    throw Error(ErrorCode::ConfigError, "robot poses need either --robot-poses or --joints with --dh");
  }
  return batch_fk(io::dh_chain_from_json(io::read_json(dh), dh), io::read_joint_log(joints));
}

std::vector<fs::path> png_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

CalibrationOptions calibration_options(const std::string& config) {
  CalibrationOptions options;
  if (config.empty()) return options;
  const Json j = io::read_json(config);
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, config + ": expected a JSON object");
  if (j.contains("intrinsics_mask")) {
    const Json& m = j.at("intrinsics_mask");
    if (m == "all") {
      options.intrinsics_mask = IntrinsicsMask::all();
    } else if (m == "none") {
      options.intrinsics_mask = IntrinsicsMask::none();
    } else if (m == "pinhole") {
      options.intrinsics_mask = IntrinsicsMask::without_distortion();
    } else if (m.is_array() && m.size() == 9) {
      for (std::size_t i = 0; i < 9; ++i) {
        if (!m[i].is_boolean()) throw Error(ErrorCode::ConfigError, config + ": intrinsics_mask entries must be booleans");
        options.intrinsics_mask.free[i] = m[i].get<bool>();
      }
    } else {
      throw Error(ErrorCode::ConfigError, config + ": intrinsics_mask must be all, none, pinhole or 9 booleans");
    }
  }
  if (j.contains("max_iterations")) options.max_iterations = j.at("max_iterations").get<int>();
  if (j.contains("initial_damping")) options.initial_damping = j.at("initial_damping").get<double>();
  if (j.contains("relative_cost_tolerance")) {
    options.relative_cost_tolerance = j.at("relative_cost_tolerance").get<double>();
  }
  return options;
}

// --- commands ---------------------------------------------------------------

void cmd_synth(const GlobalOptions& g, Report& report) {
  SyntheticRigConfig config = default_rig_config();
  if (!g.config.empty()) {
    const fs::path path(g.config);
    config = rig_config_from_json(io::read_json(path), path.parent_path());
  }
  if (g.seed) config.seed = *g.seed;
  const SyntheticDataset dataset = generate_dataset(config);
  const fs::path dir = out_dir(g);
  write_dataset(config, dataset, dir);
  report.file(dir);
  report.set("seed", config.seed);
  report.set("calibration_shots", dataset.calibration_shots.size());
  report.set("dataset_frames", dataset.dataset_joints.size());
  report.line("synthetic rig, seed " + std::to_string(config.seed) + ": " +
              std::to_string(dataset.calibration_shots.size()) + " calibration shots, " +
              std::to_string(dataset.dataset_joints.size()) + " dataset frames");
}

void cmd_fk(const GlobalOptions& g, Report& report, const std::string& joints, const std::string& dh) {
  const auto start = std::chrono::steady_clock::now();
  const Trajectory poses = batch_fk(io::dh_chain_from_json(io::read_json(dh), dh), io::read_joint_log(joints));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const fs::path path = out_dir(g) / "robot_poses.json";
  io::write_json(path, io::trajectory_to_json(poses));
  report.file(path);
  report.set("frames", poses.size());
  report.set("fk_seconds", seconds);
  report.line(std::to_string(poses.size()) + " poses computed in " + fmt("%.4f", seconds) + " s");
}

struct CalibrateArgs {
  std::string observations, target, joints, dh, robot_poses, intrinsics;
};

void cmd_calibrate(const GlobalOptions& g, Report& report, const CalibrateArgs& a) {
  const CalibrationTarget target = io::target_from_json(io::read_json(a.target), a.target);
  const Trajectory robot = robot_poses_from(a.joints, a.dh, a.robot_poses);
  const std::vector<CalibrationShot> shots = io::assemble_shots(io::read_observations(a.observations), robot, target);
  const CalibrationResult result = calibrate(shots, target, read_intrinsics(a.intrinsics), calibration_options(g.config));
  const fs::path path = out_dir(g) / "calibration.json";
  io::write_json(path, io::calibration_to_json(result));
  report.file(path);
  report.set("shots", shots.size());
  report.set("rmst_mm", finite_or_null(result.rmst_mm));
  report.set("rmsr_deg", finite_or_null(result.rmsr_deg));
  report.set("rrms_px", finite_or_null(result.rrms_px));
  report.set("iterations", result.iterations);
  report.set("converged", result.converged);
  report.line("calibrated from " + std::to_string(shots.size()) + " shots, " + std::to_string(result.iterations) +
              " iterations" + (result.converged ? "" : " (not converged)"));
  report.line("RMST = " + fmt("%.4g", result.rmst_mm) + " mm, RMSR = " + fmt("%.4g", result.rmsr_deg) +
              "°, RRMS = " + fmt("%.4g", result.rrms_px) + " px");
}

void cmd_plan(const GlobalOptions& g, Report& report, const std::string& calibration) {
  HemispherePlan plan;
  if (!g.config.empty()) plan = io::plan_from_json(io::read_json(g.config), g.config);
  ViewPlan views = hemisphere_poses(plan);
  const fs::path dir = out_dir(g);
  io::write_json(dir / "camera_poses.json", io::trajectory_to_json(views.camera_poses));
  report.file(dir / "camera_poses.json");
  if (!calibration.empty()) {
    const CalibrationResult cal = io::calibration_from_json(io::read_json(calibration), calibration);
    views.tool_poses = tool_poses(views, cal.hand_eye, cal.world_base);
    io::write_json(dir / "tool_poses.json", io::trajectory_to_json(*views.tool_poses));
    io::write_text_atomic(dir / "tool_poses.csv", io::trajectory_to_csv(*views.tool_poses));
    report.file(dir / "tool_poses.json");
    report.file(dir / "tool_poses.csv");
  }
  report.set("poses", views.camera_poses.size());
  report.line(std::to_string(views.camera_poses.size()) + " hemisphere poses");
}

void cmd_export_manifest(const GlobalOptions& g, Report& report, const std::string& trajectory,
                         const std::string& calibration, const std::string& images) {
  const Trajectory robot = read_trajectory(trajectory);
  const CalibrationResult cal = io::calibration_from_json(io::read_json(calibration), calibration);
  const fs::path dir = out_dir(g);
  io::DatasetManifest manifest;
  manifest.intrinsics = cal.intrinsics;
  Trajectory camera_poses;
  for (const TrajectoryEntry& e : robot) {
    fs::path image;
    for (const char* ext : {".png", ".jpg", ".jpeg"}) {
      const fs::path candidate = fs::path(images) / (e.frame_id + ext);
      if (fs::is_regular_file(candidate)) {
        image = candidate;
        break;
      }
    }
    if (image.empty()) throw Error(ErrorCode::MissingImage, "no image for frame '" + e.frame_id + "' in " + images);
    const RigidTransformd pose = apply_calibration(e.pose, cal);
    camera_poses.push_back(e.frame_id, pose);
    manifest.frames.push_back({fs::relative(image, dir).generic_string(), io::manifest_matrix_from_camera_pose(pose)});
  }
  io::write_json(dir / "transforms.json", io::manifest_to_json(manifest));
  io::write_json(dir / "camera_poses.json", io::trajectory_to_json(camera_poses));
  report.file(dir / "transforms.json");
  report.file(dir / "camera_poses.json");
  report.set("frames", manifest.frames.size());
  report.line(std::to_string(manifest.frames.size()) + " frames exported");
}

struct EvalTrajArgs {
  std::string source, reference, observations, target, intrinsics;
  bool with_scale = false;
};

void cmd_eval_traj(const GlobalOptions& g, Report& report, const EvalTrajArgs& a) {
  const Trajectory source = read_trajectory(a.source);
  const Trajectory reference = read_trajectory(a.reference);
  const bool any_shared =
      std::any_of(source.begin(), source.end(), [&](const TrajectoryEntry& e) { return reference.contains(e.frame_id); });
  if (!any_shared) throw Error(ErrorCode::NoSharedFrames, "source and reference share no frame ids");
  const SimilarityTransformd alignment = umeyama_align(source, reference, a.with_scale);
  const PoseErrorReport errors = absolute_pose_error(source, reference, alignment);
  Json doc = io::pose_error_report_to_json(errors);
  std::string row = "MTE = " + fmt("%.4g", errors.mte_mm) + " mm, MRE = " + fmt("%.4g", errors.mre_deg) + "°";
  if (!a.observations.empty()) {
    if (a.target.empty() || a.intrinsics.empty()) {
      throw Error(ErrorCode::ConfigError, "RRMS needs --observations, --target and --intrinsics together");
    }
    const CalibrationTarget target = io::target_from_json(io::read_json(a.target), a.target);
    const std::vector<CalibrationShot> shots =
        io::assemble_shots(io::read_observations(a.observations), source, target);
    const double value = rrms(shots, source, read_intrinsics(a.intrinsics), target);
    doc["rrms_px"] = value;
    report.set("rrms_px", value);
    row += ", RRMS = " + fmt("%.4f", value) + " px";
  }
  const fs::path dir = out_dir(g);
  io::write_json(dir / "pose_errors.json", doc);
  io::write_text_atomic(dir / "pose_errors.csv", io::pose_errors_to_csv(errors));
  report.file(dir / "pose_errors.json");
  report.file(dir / "pose_errors.csv");
  report.set("mte_mm", errors.mte_mm);
  report.set("mre_deg", errors.mre_deg);
  report.set("frames", errors.per_frame.size());
  report.set("scale", alignment.scale);
  report.line(std::to_string(errors.per_frame.size()) + " shared frames, " +
              (a.with_scale ? "similarity" : "rigid") + " alignment (scale " + fmt("%.9g", alignment.scale) + ")");
  report.line(row);
}

void cmd_eval_images(const GlobalOptions& g, Report& report, const std::string& renders,
                     const std::string& references) {
  std::vector<ImageScore> scores;
  Json skipped = Json::array();
  for (const fs::path& render : png_files(renders)) {
    const std::string name = render.filename().string();
    const fs::path ref = fs::path(references) / name;
    if (!fs::is_regular_file(ref)) {
      skipped.push_back({{"name", name}, {"reason", "MissingImage"}});
      continue;
    }
    try {
      const ImageBuffer a = io::read_png(render);
      const ImageBuffer b = io::read_png(ref);
      scores.push_back({name, psnr(a, b), ssim(a, b)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DimensionMismatch && e.code() != ErrorCode::ImageTooSmall) throw;
      skipped.push_back({{"name", name}, {"reason", std::string(to_string(e.code()))}});
    }
  }
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "no comparable image pairs");
  const QualityReport quality = aggregate(scores);
  Json doc = io::quality_report_to_json(quality);
  doc["skipped"] = skipped;
  const fs::path dir = out_dir(g);
  io::write_json(dir / "quality.json", doc);
  io::write_text_atomic(dir / "quality.csv", io::quality_to_csv(quality));
  report.file(dir / "quality.json");
  report.file(dir / "quality.csv");
  report.set("summary", format_quality_row(quality));
  report.set("count", quality.count);
  report.set("skipped", skipped.size());
  report.line(std::to_string(quality.count) + " image pairs, " + std::to_string(skipped.size()) + " skipped");
  report.line("PSNR / SSIM: " + format_quality_row(quality));
}

ImageBuffer normalized_preview(const ImageBuffer& map) {
  const double peak = *std::max_element(map.data.begin(), map.data.end());
  ImageBuffer out = map;
  if (peak > 0.0) {
    for (double& v : out.data) v /= peak;
  }
  return out;
}

void write_map(const fs::path& dir, const std::string& stem, const std::string& kind, const ImageBuffer& map,
               Report& report) {
  io::write_pfm(dir / (stem + "_" + kind + ".pfm"), map);
  io::write_png(dir / (stem + "_" + kind + ".png"), normalized_preview(map));
  report.file(dir / (stem + "_" + kind + ".pfm"));
  report.file(dir / (stem + "_" + kind + ".png"));
}

void cmd_ensemble(const GlobalOptions& g, Report& report, const std::vector<std::string>& members,
                  const std::string& reference, const std::string& density) {
  if (members.size() < 2) throw Error(ErrorCode::StackTooSmall, "ensemble needs at least 2 member directories");
  const fs::path dir = out_dir(g);
  Json images = Json::array();
  double correlation_sum = 0.0;
  std::size_t correlation_count = 0;
  for (const fs::path& ref_path : png_files(reference)) {
    const std::string name = ref_path.filename().string();
    const std::string stem = ref_path.stem().string();
    EnsembleStack stack;
    for (const std::string& m : members) {
      const fs::path p = fs::path(m) / name;
      if (!fs::is_regular_file(p)) throw Error(ErrorCode::MissingImage, "member " + m + " lacks " + name);
      stack.members.push_back(io::read_png(p));
    }
    std::optional<ImageBuffer> dens;
    if (!density.empty()) {
      const fs::path p = fs::path(density) / (stem + ".pfm");
      if (!fs::is_regular_file(p)) throw Error(ErrorCode::MissingImage, "no density map " + p.string());
      dens = io::read_pfm(p);
    }
    const UncertaintyReport uq = uq_report(stack, io::read_png(ref_path), dens ? &*dens : nullptr);
    io::write_pfm(dir / (stem + "_mean.pfm"), uq.maps.mean);
    io::write_png(dir / (stem + "_mean.png"), uq.maps.mean);
    report.file(dir / (stem + "_mean.pfm"));
    report.file(dir / (stem + "_mean.png"));
    write_map(dir, stem, "std", uq.maps.std, report);
    write_map(dir, stem, "residual", uq.maps.residual, report);
    if (uq.maps.density_weighted) write_map(dir, stem, "uncertainty", *uq.maps.density_weighted, report);
    if (uq.summary.correlation) {
      correlation_sum += *uq.summary.correlation;
      ++correlation_count;
    }
    images.push_back({{"name", name},
                      {"correlation", uq.summary.correlation ? Json(*uq.summary.correlation) : Json(nullptr)},
                      {"zero_variance", uq.summary.zero_variance},
                      {"mean_std", uq.summary.mean_std},
                      {"mean_residual", uq.summary.mean_residual}});
  }
  if (images.empty()) throw Error(ErrorCode::EmptyInput, "no reference images in " + reference);
  Json summary;
  summary["members"] = members.size();
  summary["images"] = images.size();
  summary["mean_correlation"] =
      correlation_count > 0 ? Json(correlation_sum / static_cast<double>(correlation_count)) : Json(nullptr);
  summary["per_image"] = images;
  io::write_json(dir / "uncertainty_summary.json", summary);
  report.file(dir / "uncertainty_summary.json");
  report.set("mean_correlation", summary["mean_correlation"]);
  report.line(std::to_string(images.size()) + " images, " + std::to_string(members.size()) + " members");
  if (correlation_count > 0) {
    report.line("mean std/residual correlation: " + fmt("%.4f", correlation_sum / static_cast<double>(correlation_count)));
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robot-camera pose chain: calibration, planning, export and evaluation", "posechain"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_flag("--json", g.json, "Print a machine-readable JSON report");
  app.add_option("--seed", g.seed, "Seed for commands that draw random numbers");
  app.add_option("--config", g.config, "Command configuration JSON");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  const auto sub = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    s->fallthrough();
    return s;
  };

  CLI::App* synth = sub("synth", "Generate a synthetic robot-camera dataset");

  std::string joints, dh;
  CLI::App* fk = sub("fk", "Forward kinematics of a joint log");
  fk->add_option("--joints", joints, "Joint log CSV")->required();
  fk->add_option("--dh", dh, "DH table JSON")->required();

  CalibrateArgs cal;
  CLI::App* calibrate_cmd = sub("calibrate", "Hand-eye and intrinsics calibration");
  calibrate_cmd->add_option("--observations", cal.observations, "Observation CSV")->required();
  calibrate_cmd->add_option("--target", cal.target, "Target JSON")->required();
  calibrate_cmd->add_option("--joints", cal.joints, "Joint log CSV");
  calibrate_cmd->add_option("--dh", cal.dh, "DH table JSON");
  calibrate_cmd->add_option("--robot-poses", cal.robot_poses, "Robot pose trajectory JSON");
  calibrate_cmd->add_option("--intrinsics", cal.intrinsics, "Nominal intrinsics JSON")->required();

  std::string plan_calibration;
  CLI::App* plan = sub("plan", "Hemisphere view plan");
  plan->add_option("--calibration", plan_calibration, "Calibration JSON; adds robot tool poses");

  std::string trajectory, export_calibration, images;
  CLI::App* export_cmd = sub("export-manifest", "Write a NeRF dataset manifest");
  export_cmd->add_option("--trajectory", trajectory, "Robot pose trajectory JSON")->required();
  export_cmd->add_option("--calibration", export_calibration, "Calibration JSON")->required();
  export_cmd->add_option("--images", images, "Image directory")->required();

  EvalTrajArgs et;
  CLI::App* eval_traj = sub("eval-traj", "Absolute pose error against a reference");
  eval_traj->add_option("--source", et.source, "Trajectory or manifest JSON to evaluate")->required();
  eval_traj->add_option("--reference", et.reference, "Reference trajectory or manifest JSON")->required();
  eval_traj->add_flag("--scale", et.with_scale, "Similarity alignment instead of rigid");
  eval_traj->add_option("--observations", et.observations, "Observation CSV for RRMS");
  eval_traj->add_option("--target", et.target, "Target JSON for RRMS");
  eval_traj->add_option("--intrinsics", et.intrinsics, "Intrinsics or calibration JSON for RRMS");

  std::string renders, references;
  CLI::App* eval_images = sub("eval-images", "PSNR and SSIM of renders against references");
  eval_images->add_option("--renders", renders, "Rendered image directory")->required();
  eval_images->add_option("--references", references, "Reference image directory")->required();

  std::vector<std::string> members;
  std::string ens_reference, density;
  CLI::App* ensemble = sub("ensemble", "Ensemble uncertainty maps");
  ensemble->add_option("--members", members, "Member render directories")->required();
  ensemble->add_option("--reference", ens_reference, "Reference image directory")->required();
  ensemble->add_option("--density", density, "Accumulated density PFM directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    Report report(chosen->get_name(), g, out);
    if (chosen == synth) {
      cmd_synth(g, report);
    } else if (chosen == fk) {
      cmd_fk(g, report, joints, dh);
    } else if (chosen == calibrate_cmd) {
      cmd_calibrate(g, report, cal);
    } else if (chosen == plan) {
      cmd_plan(g, report, plan_calibration);
    } else if (chosen == export_cmd) {
      cmd_export_manifest(g, report, trajectory, export_calibration, images);
    } else if (chosen == eval_traj) {
      cmd_eval_traj(g, report, et);
    } else if (chosen == eval_images) {
      cmd_eval_images(g, report, renders, references);
    } else if (chosen == ensemble) {
      cmd_ensemble(g, report, members, ens_reference, density);
    }
    report.finish();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error: ParseError: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: IoError: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace posechain
