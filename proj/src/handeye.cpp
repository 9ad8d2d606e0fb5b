#include "posechain/handeye.hpp"

#include "levenberg_marquardt.hpp"
#include "posechain/error.hpp"
#include "posechain/pose_metrics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace posechain {

namespace {

using Vector6d = Eigen::Matrix<double, 6, 1>;

struct Correspondence {
  Eigen::Vector3d world;
  PixelPointd pixel;
  Eigen::Vector2d ray;  // undistorted normalized coordinates
};

std::vector<Correspondence> gather(const CalibrationShot& shot, const CalibrationTarget& target,
                                   const CameraIntrinsicsd& intrinsics) {
  std::vector<Correspondence> out;
  out.reserve(shot.observations.size());
  for (const Observation& obs : shot.observations) {
    out.push_back({target.at(obs.point_id), obs.pixel, undistort(obs.pixel, intrinsics)});
  }
  return out;
}

/// Similarity normalization of 2D points: centroid to origin, mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform_2d(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double dist = 0.0;
  for (const auto& p : pts) dist += (p - mean).norm();
  dist /= static_cast<double>(pts.size());
  const double s = dist > 0.0 ? std::sqrt(2.0) / dist : 1.0;
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 0) = s;
  t(1, 1) = s;
  t.topRightCorner<2, 1>() = -s * mean;
  return t;
}

Eigen::Matrix4d normalizing_transform_3d(const std::vector<Eigen::Vector3d>& pts) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double dist = 0.0;
  for (const auto& p : pts) dist += (p - mean).norm();
  dist /= static_cast<double>(pts.size());
  const double s = dist > 0.0 ? std::sqrt(3.0) / dist : 1.0;
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.topLeftCorner<3, 3>() *= s;
  t.topRightCorner<3, 1>() = -s * mean;
  return t;
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

constexpr double kRankTolerance = 1e-10;

/// Planar target: homography between plane coordinates and rays.
RigidTransformd resect_planar(const std::vector<Correspondence>& corr, const Eigen::Vector3d& centroid,
                              const Eigen::Matrix3d& plane_basis) {
  std::vector<Eigen::Vector2d> plane;
  std::vector<Eigen::Vector2d> rays;
  for (const auto& c : corr) {
    const Eigen::Vector3d local = plane_basis.transpose() * (c.world - centroid);
    plane.emplace_back(local.x(), local.y());
    rays.push_back(c.ray);
  }
  const Eigen::Matrix3d tp = normalizing_transform_2d(plane);
  const Eigen::Matrix3d tr = normalizing_transform_2d(rays);

  Eigen::MatrixXd a(2 * corr.size(), 9);
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const Eigen::Vector3d p = tp * plane[i].homogeneous();
    const Eigen::Vector3d x = tr * rays[i].homogeneous();
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << 0, 0, 0, -p.x(), -p.y(), -1, x.y() * p.x(), x.y() * p.y(), x.y();
    a.row(r + 1) << p.x(), p.y(), 1, 0, 0, 0, -x.x() * p.x(), -x.x() * p.y(), -x.x();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv[7] <= kRankTolerance * sv[0]) {
    throw Error(ErrorCode::DegenerateConfiguration, "homography system is rank deficient");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
  const Eigen::Matrix3d hom = tr.inverse() * hn * tp;

  double scale = 2.0 / (hom.col(0).norm() + hom.col(1).norm());
  if (hom(2, 2) * scale < 0.0) scale = -scale;  // plane origin in front of the camera
  Eigen::Matrix3d r;
  r.col(0) = scale * hom.col(0);
  r.col(1) = scale * hom.col(1);
  r.col(2) = r.col(0).cross(r.col(1));
  const Eigen::Matrix3d rot = nearest_rotation(r);
  const Eigen::Vector3d t = scale * hom.col(2);

  const Eigen::Matrix3d rot_world = rot * plane_basis.transpose();
  return RigidTransformd(rot_world, t - rot_world * centroid);
}

RigidTransformd resect_general(const std::vector<Correspondence>& corr) {
  std::vector<Eigen::Vector3d> world;
  std::vector<Eigen::Vector2d> rays;
  for (const auto& c : corr) {
    world.push_back(c.world);
    rays.push_back(c.ray);
  }
  const Eigen::Matrix4d tw = normalizing_transform_3d(world);
  const Eigen::Matrix3d tr = normalizing_transform_2d(rays);

  Eigen::MatrixXd a(2 * corr.size(), 12);
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const Eigen::Vector4d p = tw * world[i].homogeneous();
    const Eigen::Vector3d x = tr * rays[i].homogeneous();
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << p.transpose(), Eigen::RowVector4d::Zero(), -x.x() * p.transpose();
    a.row(r + 1) << Eigen::RowVector4d::Zero(), p.transpose(), -x.y() * p.transpose();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv[10] <= kRankTolerance * sv[0]) {
    throw Error(ErrorCode::DegenerateConfiguration, "DLT system is rank deficient");
  }
  const Eigen::VectorXd v = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> pn;
  pn << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11];
  Eigen::Matrix<double, 3, 4> p = tr.inverse() * pn * tw;

  Eigen::Matrix3d m = p.leftCols<3>();
  if (m.determinant() < 0.0) {
    p = -p;
    m = -m;
  }
  const Eigen::JacobiSVD<Eigen::Matrix3d> msvd(m);
  const double scale = msvd.singularValues().mean();
  return RigidTransformd(nearest_rotation(m), Eigen::Vector3d(p.col(3) / scale));
}

double shot_rrms(const std::vector<Correspondence>& corr, const RigidTransformd& pose,
                 const CameraIntrinsicsd& intrinsics) {
  double sum = 0.0;
  for (const auto& c : corr) sum += (c.pixel - project(Eigen::Vector3d(pose * c.world), intrinsics)).squaredNorm();
  return std::sqrt(sum / static_cast<double>(corr.size()));
}

/// Quaternion product matrices in (w, x, y, z) order: q * p = left(q) p = right(p) q.
Eigen::Matrix4d quat_left(const Eigen::Quaterniond& q) {
  Eigen::Matrix4d m;
  m << q.w(), -q.x(), -q.y(), -q.z(),  //
      q.x(), q.w(), -q.z(), q.y(),     //
      q.y(), q.z(), q.w(), -q.x(),     //
      q.z(), -q.y(), q.x(), q.w();
  return m;
}

Eigen::Matrix4d quat_right(const Eigen::Quaterniond& q) {
  Eigen::Matrix4d m;
  m << q.w(), -q.x(), -q.y(), -q.z(),  //
      q.x(), q.w(), q.z(), -q.y(),     //
      q.y(), -q.z(), q.w(), q.x(),     //
      q.z(), q.y(), -q.x(), q.w();
  return m;
}

Eigen::Quaterniond positive_w(Eigen::Quaterniond q) {
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

}  // namespace

int IntrinsicsMask::count() const {
  int n = 0;
  for (bool f : free) n += f ? 1 : 0;
  return n;
}

RigidTransformd retract_pose(const RigidTransformd& pose, const Vector6d& delta) {
  return pose * RigidTransformd::from_rotation_vector(delta.tail<3>(), delta.head<3>());
}

ResectionResult pnp_pose(const CalibrationShot& shot, const CalibrationTarget& target,
                         const CameraIntrinsicsd& intrinsics) {
  if (shot.observations.size() < 6) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "frame '" + shot.frame_id + "' has " + std::to_string(shot.observations.size()) +
                    " observations, resection needs at least 6");
  }
  const std::vector<Correspondence> corr = gather(shot, target, intrinsics);

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& c : corr) centroid += c.world;
  centroid /= static_cast<double>(corr.size());
  Eigen::MatrixXd centered(3, corr.size());
  for (std::size_t i = 0; i < corr.size(); ++i) centered.col(static_cast<Eigen::Index>(i)) = corr[i].world - centroid;
  const Eigen::JacobiSVD<Eigen::MatrixXd> spread(centered, Eigen::ComputeFullU);
  const Eigen::Vector3d sv = spread.singularValues();
  if (sv[1] <= kRankTolerance * sv[0]) {
    throw Error(ErrorCode::DegenerateConfiguration, "target points of frame '" + shot.frame_id + "' are collinear");
  }

  RigidTransformd pose;
  if (sv[2] <= 1e-9 * sv[0]) {
    Eigen::Matrix3d basis = spread.matrixU();
    basis.col(2) = basis.col(0).cross(basis.col(1));
    pose = resect_planar(corr, centroid, basis);
  } else {
    pose = resect_general(corr);
  }

  auto evaluate = [&](const RigidTransformd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    r.resize(static_cast<Eigen::Index>(2 * corr.size()));
    if (jac != nullptr) jac->resize(r.size(), 6);
    const Eigen::Matrix3d rot = p.rotation_matrix();
    for (std::size_t i = 0; i < corr.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(2 * i);
      const Eigen::Vector3d pc = p * corr[i].world;
      if (!(pc.z() > 1e-12)) {
        r.setConstant(std::numeric_limits<double>::infinity());
        return;
      }
      r.segment<2>(row) = corr[i].pixel - project(pc, intrinsics);
      if (jac != nullptr) {
        const Eigen::Matrix<double, 2, 3> jp = projection_jacobian(pc, intrinsics).leftCols<3>();
        jac->block<2, 3>(row, 0) = -jp * rot;
        jac->block<2, 3>(row, 3) = jp * rot * skew(corr[i].world);
      }
    }
  };
  auto retract = [](const RigidTransformd& p, const Eigen::VectorXd& d) { return retract_pose(p, Vector6d(d)); };

  detail::LmSettings settings;
  settings.max_iterations = 100;
  detail::levenberg_marquardt(pose, evaluate, retract, settings);
  return {pose, shot_rrms(corr, pose, intrinsics)};
}

CalibrationEstimate initialize(const std::vector<CalibrationShot>& shots, const CalibrationTarget& target,
                               const CameraIntrinsicsd& nominal_intrinsics) {
  if (shots.size() < 3) {
    throw Error(ErrorCode::InsufficientMotion, "hand-eye initialization needs at least 3 shots");
  }
  std::vector<RigidTransformd> cams;
  cams.reserve(shots.size());
  for (const auto& shot : shots) cams.push_back(pnp_pose(shot, target, nominal_intrinsics).pose);

  // Relative motions A X = X B with A = tool_j^-1 tool_i and B = cam_j cam_i^-1.
  struct Motion {
    RigidTransformd tool;
    RigidTransformd cam;
  };
  std::vector<Motion> motions;
  Eigen::Matrix3d axis_scatter = Eigen::Matrix3d::Zero();
  Eigen::Matrix4d quat_normal = Eigen::Matrix4d::Zero();
  for (std::size_t i = 0; i < shots.size(); ++i) {
    for (std::size_t j = i + 1; j < shots.size(); ++j) {
      const RigidTransformd a = shots[j].robot_pose.inverse() * shots[i].robot_pose;
      const RigidTransformd b = cams[j] * cams[i].inverse();
      if (rotation_angle(a) < 1e-3) continue;
      const Eigen::Vector3d axis = rotation_vector(a.rotation()).normalized();
      axis_scatter += axis * axis.transpose();
      const Eigen::Matrix4d k = quat_left(positive_w(a.rotation())) - quat_right(positive_w(b.rotation()));
      quat_normal += k.transpose() * k;
      motions.push_back({a, b});
    }
  }
  if (motions.empty()) throw Error(ErrorCode::InsufficientMotion, "robot poses barely rotate");
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> axes(axis_scatter);
  if (axes.eigenvalues()[1] <= 1e-4 * axes.eigenvalues()[2]) {
    throw Error(ErrorCode::InsufficientMotion, "all relative rotations share one axis");
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> qsolve(quat_normal);
  const Eigen::Vector4d wxyz = qsolve.eigenvectors().col(0);
  const Eigen::Quaterniond rot_x(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
  const Eigen::Matrix3d rx = rot_x.normalized().toRotationMatrix();

  // (R_A - I) t_X = R_X t_B - t_A
  Eigen::MatrixXd lhs(3 * motions.size(), 3);
  Eigen::VectorXd rhs(3 * motions.size());
  for (std::size_t m = 0; m < motions.size(); ++m) {
    const auto row = static_cast<Eigen::Index>(3 * m);
    lhs.block<3, 3>(row, 0) = motions[m].tool.rotation_matrix() - Eigen::Matrix3d::Identity();
    rhs.segment<3>(row) = rx * motions[m].cam.translation() - motions[m].tool.translation();
  }
  const Eigen::Vector3d tx = lhs.colPivHouseholderQr().solve(rhs);

  CalibrationEstimate est;
  est.hand_eye = RigidTransformd(rx, tx);
  est.intrinsics = nominal_intrinsics;

  std::vector<Eigen::Quaterniond> rotations;
  Eigen::Vector3d mean_t = Eigen::Vector3d::Zero();
  for (std::size_t j = 0; j < shots.size(); ++j) {
    const RigidTransformd closure = shots[j].robot_pose * est.hand_eye * cams[j];
    rotations.push_back(closure.rotation());
    mean_t += closure.translation();
  }
  est.world_base = RigidTransformd(average_rotation(rotations), mean_t / static_cast<double>(shots.size()));
  return est;
}

ReprojectionProblem::ReprojectionProblem(const std::vector<CalibrationShot>& shots, const CalibrationTarget& target,
                                         IntrinsicsMask mask, ObservationWeight weight)
    : mask_(mask) {
  robot_poses_.reserve(shots.size());
  for (std::size_t s = 0; s < shots.size(); ++s) {
    robot_poses_.push_back(shots[s].robot_pose);
    for (const Observation& obs : shots[s].observations) {
      const double w = weight ? weight(shots[s], obs) : 1.0;
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw Error(ErrorCode::ConfigError, "observation weight must be finite and non-negative");
      }
      terms_.push_back({s, target.at(obs.point_id), obs.pixel, std::sqrt(w)});
    }
  }
  residual_count_ = static_cast<int>(2 * terms_.size());
}

void ReprojectionProblem::evaluate(const CalibrationEstimate& estimate, Eigen::VectorXd& residuals,
                                   Eigen::MatrixXd* jacobian) const {
  residuals.resize(residual_count_);
  if (jacobian != nullptr) jacobian->setZero(residual_count_, parameter_count());

  std::vector<RigidTransformd> cams;
  cams.reserve(robot_poses_.size());
  for (const auto& robot : robot_poses_) {
    cams.push_back(apply_calibration(robot, estimate.hand_eye, estimate.world_base));
  }

  std::array<int, 9> column{};
  for (int p = 0, c = 12; p < 9; ++p) column[static_cast<std::size_t>(p)] = mask_.free[static_cast<std::size_t>(p)] ? c++ : -1;

  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const Term& term = terms_[i];
    const auto row = static_cast<Eigen::Index>(2 * i);
    const RigidTransformd& cam = cams[term.shot];
    const Eigen::Vector3d pc = cam * term.world_point;
    if (!(pc.z() > 1e-12)) {
      // a candidate step pushed a point behind the camera; reject it
      residuals.setConstant(std::numeric_limits<double>::infinity());
      if (jacobian != nullptr) throw Error(ErrorCode::NonPositiveDepth, "target point behind the camera");
      return;
    }
    residuals.segment<2>(row) = term.sqrt_weight * (term.observed - project(pc, estimate.intrinsics));
    if (jacobian == nullptr) continue;

    const Eigen::Matrix<double, 2, 12> jp = projection_jacobian(pc, estimate.intrinsics);
    const Eigen::Matrix<double, 2, 3> jpoint = jp.leftCols<3>();
    const Eigen::Matrix3d rot_cam = cam.rotation_matrix();
    const double s = -term.sqrt_weight;
    // hand-eye increment: pc -> exp(-delta) pc
    jacobian->block<2, 3>(row, 0) = s * (-jpoint);
    jacobian->block<2, 3>(row, 3) = s * jpoint * skew(pc);
    // world-base increment: pc -> R_cam (q + v + omega x q) + t_cam
    jacobian->block<2, 3>(row, 6) = s * jpoint * rot_cam;
    jacobian->block<2, 3>(row, 9) = s * (-jpoint * rot_cam * skew(term.world_point));
    for (std::size_t p = 0; p < 9; ++p) {
      if (column[p] >= 0) jacobian->block<2, 1>(row, column[p]) = s * jp.col(static_cast<Eigen::Index>(3 + p));
    }
  }
}

CalibrationEstimate ReprojectionProblem::retract(const CalibrationEstimate& estimate,
                                                 const Eigen::VectorXd& delta) const {
  CalibrationEstimate out = estimate;
  out.hand_eye = retract_pose(estimate.hand_eye, Vector6d(delta.segment<6>(0)));
  out.world_base = retract_pose(estimate.world_base, Vector6d(delta.segment<6>(6)));
  CameraIntrinsicsd::Params params = estimate.intrinsics.params();
  for (std::size_t p = 0, c = 12; p < 9; ++p) {
    if (mask_.free[p]) params[static_cast<Eigen::Index>(p)] += delta[static_cast<Eigen::Index>(c++)];
  }
  out.intrinsics.set_params(params);
  return out;
}

CalibrationResult refine(const std::vector<CalibrationShot>& shots, const CalibrationTarget& target,
                         const CalibrationEstimate& initial, const CalibrationOptions& options) {
  if (shots.empty()) throw Error(ErrorCode::EmptyInput, "no calibration shots");
  const ReprojectionProblem problem(shots, target, options.intrinsics_mask, options.weight);

  detail::LmSettings settings;
  settings.max_iterations = options.max_iterations;
  settings.initial_damping = options.initial_damping;
  settings.relative_cost_tolerance = options.relative_cost_tolerance;

  CalibrationEstimate estimate = initial;
  const detail::LmSummary summary = detail::levenberg_marquardt(
      estimate,
      [&](const CalibrationEstimate& e, Eigen::VectorXd& r, Eigen::MatrixXd* j) { problem.evaluate(e, r, j); },
      [&](const CalibrationEstimate& e, const Eigen::VectorXd& d) { return problem.retract(e, d); }, settings);

  CalibrationResult result;
  result.hand_eye = estimate.hand_eye;
  result.world_base = estimate.world_base;
  result.intrinsics = estimate.intrinsics;
  result.iterations = summary.iterations;
  result.converged = summary.converged;
  result.initial_cost = summary.initial_cost;
  result.final_cost = summary.final_cost;

  Trajectory chain_poses;
  std::vector<RigidTransformd> discrepancies;
  for (const CalibrationShot& shot : shots) {
    chain_poses.push_back(shot.frame_id, apply_calibration(shot.robot_pose, result));
    if (shot.observations.size() >= 6) {
      const RigidTransformd direct = pnp_pose(shot, target, result.intrinsics).pose;
      discrepancies.push_back(discrepancy(direct, shot.robot_pose, result.hand_eye, result.world_base));
    }
  }
  result.rrms_px = rrms(shots, chain_poses, result.intrinsics, target);
  if (discrepancies.empty()) {
    result.rmst_mm = std::numeric_limits<double>::quiet_NaN();
    result.rmsr_deg = std::numeric_limits<double>::quiet_NaN();
  } else {
    result.rmst_mm = rmst(discrepancies);
    result.rmsr_deg = rmsr(discrepancies);
  }
  return result;
}

CalibrationResult calibrate(const std::vector<CalibrationShot>& shots, const CalibrationTarget& target,
                            const CameraIntrinsicsd& nominal_intrinsics, const CalibrationOptions& options) {
  return refine(shots, target, initialize(shots, target, nominal_intrinsics), options);
}

}  // namespace posechain
