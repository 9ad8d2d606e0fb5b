#pragma once

#include "posechain/error.hpp"
#include "posechain/se3.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace posechain {

template <typename Scalar>
using PixelPoint = Eigen::Matrix<Scalar, 2, 1>;

/// Pinhole camera with Brown-Conrady distortion (k1, k2, k3 radial; p1, p2
/// tangential) applied in normalized image coordinates.
template <typename Scalar>
struct CameraIntrinsics {
  static constexpr int kParamCount = 9;
  using Params = Eigen::Matrix<Scalar, kParamCount, 1>;

  Scalar fx = Scalar(1);
  Scalar fy = Scalar(1);
  Scalar cx = Scalar(0);
  Scalar cy = Scalar(0);
  Scalar k1 = Scalar(0);
  Scalar k2 = Scalar(0);
  Scalar k3 = Scalar(0);
  Scalar p1 = Scalar(0);
  Scalar p2 = Scalar(0);
  int width = 1;
  int height = 1;

  /// Order: fx, fy, cx, cy, k1, k2, k3, p1, p2.
  Params params() const {
    Params p;
    p << fx, fy, cx, cy, k1, k2, k3, p1, p2;
    return p;
  }

  void set_params(const Params& p) {
    fx = p[0];
    fy = p[1];
    cx = p[2];
    cy = p[3];
    k1 = p[4];
    k2 = p[5];
    k3 = p[6];
    p1 = p[7];
    p2 = p[8];
  }

  template <typename Other>
  CameraIntrinsics<Other> cast() const {
    CameraIntrinsics<Other> out;
    out.set_params(params().template cast<Other>());
    out.width = width;
    out.height = height;
    return out;
  }

  bool valid() const { return fx > Scalar(0) && fy > Scalar(0) && width > 0 && height > 0; }
};

using CameraIntrinsicsd = CameraIntrinsics<double>;
using PixelPointd = PixelPoint<double>;

namespace detail {

template <typename Scalar>
void check_depth(const Vector3<Scalar>& p) {
  if (!(p.z() > Scalar(1e-12))) {
    throw Error(ErrorCode::NonPositiveDepth, "point at or behind the camera plane");
  }
}

}  // namespace detail

/// Distortion of a normalized point (x, y) -> (xd, yd).
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> distort_normalized(const Eigen::Matrix<Scalar, 2, 1>& xy,
                                               const CameraIntrinsics<Scalar>& k) {
  const Scalar x = xy.x();
  const Scalar y = xy.y();
  const Scalar r2 = x * x + y * y;
  const Scalar radial = Scalar(1) + r2 * (k.k1 + r2 * (k.k2 + r2 * k.k3));
  return {x * radial + Scalar(2) * k.p1 * x * y + k.p2 * (r2 + Scalar(2) * x * x),
          y * radial + k.p1 * (r2 + Scalar(2) * y * y) + Scalar(2) * k.p2 * x * y};
}

template <typename Scalar>
PixelPoint<Scalar> project(const Vector3<Scalar>& point_camera, const CameraIntrinsics<Scalar>& k) {
  detail::check_depth(point_camera);
  const Eigen::Matrix<Scalar, 2, 1> xy(point_camera.x() / point_camera.z(),
                                       point_camera.y() / point_camera.z());
  const Eigen::Matrix<Scalar, 2, 1> d = distort_normalized(xy, k);
  return {k.fx * d.x() + k.cx, k.fy * d.y() + k.cy};
}

/// Columns 0..2: d(u,v)/d(point_camera); columns 3..11: d(u,v)/d(intrinsics)
/// in CameraIntrinsics::params() order.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 12> projection_jacobian(const Vector3<Scalar>& point_camera,
                                                 const CameraIntrinsics<Scalar>& k) {
  detail::check_depth(point_camera);
  const Scalar inv_z = Scalar(1) / point_camera.z();
  const Scalar x = point_camera.x() * inv_z;
  const Scalar y = point_camera.y() * inv_z;
  const Scalar r2 = x * x + y * y;
  const Scalar r4 = r2 * r2;
  const Scalar radial = Scalar(1) + r2 * (k.k1 + r2 * (k.k2 + r2 * k.k3));
  const Scalar dradial_dr2 = k.k1 + Scalar(2) * k.k2 * r2 + Scalar(3) * k.k3 * r4;
  const Scalar xd = x * radial + Scalar(2) * k.p1 * x * y + k.p2 * (r2 + Scalar(2) * x * x);
  const Scalar yd = y * radial + k.p1 * (r2 + Scalar(2) * y * y) + Scalar(2) * k.p2 * x * y;

  Eigen::Matrix<Scalar, 2, 2> d_dist;  // d(xd, yd) / d(x, y)
  d_dist(0, 0) = radial + Scalar(2) * x * x * dradial_dr2 + Scalar(2) * k.p1 * y + Scalar(6) * k.p2 * x;
  d_dist(0, 1) = Scalar(2) * x * y * dradial_dr2 + Scalar(2) * k.p1 * x + Scalar(2) * k.p2 * y;
  d_dist(1, 0) = Scalar(2) * x * y * dradial_dr2 + Scalar(2) * k.p1 * x + Scalar(2) * k.p2 * y;
  d_dist(1, 1) = radial + Scalar(2) * y * y * dradial_dr2 + Scalar(6) * k.p1 * y + Scalar(2) * k.p2 * x;

  Eigen::Matrix<Scalar, 2, 3> d_norm;  // d(x, y) / d(X, Y, Z)
  d_norm << inv_z, Scalar(0), -x * inv_z,  //
      Scalar(0), inv_z, -y * inv_z;

  Eigen::Matrix<Scalar, 2, 2> focal = Eigen::Matrix<Scalar, 2, 2>::Zero();
  focal(0, 0) = k.fx;
  focal(1, 1) = k.fy;

  Eigen::Matrix<Scalar, 2, 12> J = Eigen::Matrix<Scalar, 2, 12>::Zero();
  J.template leftCols<3>() = focal * d_dist * d_norm;

  J(0, 3) = xd;
  J(1, 4) = yd;
  J(0, 5) = Scalar(1);
  J(1, 6) = Scalar(1);
  J(0, 7) = k.fx * x * r2;
  J(1, 7) = k.fy * y * r2;
  J(0, 8) = k.fx * x * r4;
  J(1, 8) = k.fy * y * r4;
  J(0, 9) = k.fx * x * r4 * r2;
  J(1, 9) = k.fy * y * r4 * r2;
  J(0, 10) = k.fx * Scalar(2) * x * y;
  J(1, 10) = k.fy * (r2 + Scalar(2) * y * y);
  J(0, 11) = k.fx * (r2 + Scalar(2) * x * x);
  J(1, 11) = k.fy * Scalar(2) * x * y;
  return J;
}

/// Inverts the distortion by fixed-point iteration starting from the
/// distorted normalized point. Returns the undistorted normalized point.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> undistort(const PixelPoint<Scalar>& pixel, const CameraIntrinsics<Scalar>& k,
                                      int max_iterations = 50) {
  using std::isfinite;
  const Eigen::Matrix<Scalar, 2, 1> distorted((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy);
  const Scalar tolerance_px = Scalar(1e-10);
  Eigen::Matrix<Scalar, 2, 1> xy = distorted;
  for (int it = 0; it <= max_iterations; ++it) {
    const Eigen::Matrix<Scalar, 2, 1> d = distort_normalized(xy, k);
    const Scalar err_u = (d.x() - distorted.x()) * k.fx;
    const Scalar err_v = (d.y() - distorted.y()) * k.fy;
    if (!isfinite(err_u) || !isfinite(err_v)) break;
    if (err_u * err_u + err_v * err_v < tolerance_px * tolerance_px) return xy;
    if (it == max_iterations) break;
    const Scalar x = xy.x();
    const Scalar y = xy.y();
    const Scalar r2 = x * x + y * y;
    const Scalar radial = Scalar(1) + r2 * (k.k1 + r2 * (k.k2 + r2 * k.k3));
    const Scalar dx = Scalar(2) * k.p1 * x * y + k.p2 * (r2 + Scalar(2) * x * x);
    const Scalar dy = k.p1 * (r2 + Scalar(2) * y * y) + Scalar(2) * k.p2 * x * y;
    xy = Eigen::Matrix<Scalar, 2, 1>((distorted.x() - dx) / radial, (distorted.y() - dy) / radial);
  }
  throw Error(ErrorCode::NoConvergence, "distortion inversion did not converge");
}

}  // namespace posechain
