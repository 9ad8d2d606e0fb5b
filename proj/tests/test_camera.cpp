#include "posechain/camera.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace posechain;

namespace {

CameraIntrinsicsd test_camera() {
  CameraIntrinsicsd k;
  k.fx = 800.0;
  k.fy = 790.0;
  k.cx = 320.0;
  k.cy = 240.0;
  k.k1 = -0.12;
  k.k2 = 0.05;
  k.k3 = -0.01;
  k.p1 = 1e-3;
  k.p2 = -5e-4;
  k.width = 640;
  k.height = 480;
  return k;
}

}  // namespace

TEST(Camera, PinholeProjectionOfCenteredPoint) {
  CameraIntrinsicsd k = test_camera();
  const PixelPointd px = project(Eigen::Vector3d(0.0, 0.0, 2.0), k);
  EXPECT_DOUBLE_EQ(px.x(), 320.0);
  EXPECT_DOUBLE_EQ(px.y(), 240.0);
}

TEST(Camera, UndistortedPinholeMatchesHandComputation) {
  CameraIntrinsicsd k;
  k.fx = 100.0;
  k.fy = 200.0;
  k.cx = 10.0;
  k.cy = 20.0;
  k.width = 64;
  k.height = 64;
  const PixelPointd px = project(Eigen::Vector3d(0.5, -0.25, 2.0), k);
  EXPECT_DOUBLE_EQ(px.x(), 100.0 * 0.25 + 10.0);
  EXPECT_DOUBLE_EQ(px.y(), 200.0 * -0.125 + 20.0);
}

TEST(Camera, DistortionMatchesOpenCvFormula) {
  // closed-form Brown-Conrady as written in the OpenCV documentation
  const CameraIntrinsicsd k = test_camera();
  const double x = 0.3;
  const double y = -0.2;
  const double r2 = x * x + y * y;
  const double radial = 1 + k.k1 * r2 + k.k2 * r2 * r2 + k.k3 * r2 * r2 * r2;
  const double xd = x * radial + 2 * k.p1 * x * y + k.p2 * (r2 + 2 * x * x);
  const double yd = y * radial + k.p1 * (r2 + 2 * y * y) + 2 * k.p2 * x * y;
  const PixelPointd px = project(Eigen::Vector3d(x * 3.0, y * 3.0, 3.0), k);
  EXPECT_NEAR(px.x(), k.fx * xd + k.cx, 1e-12);
  EXPECT_NEAR(px.y(), k.fy * yd + k.cy, 1e-12);
}

TEST(Camera, NonPositiveDepthThrows) {
  const CameraIntrinsicsd k = test_camera();
  for (double z : {0.0, -1.0}) {
    try {
      project(Eigen::Vector3d(0.1, 0.1, z), k);
      FAIL() << "expected NonPositiveDepth";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NonPositiveDepth);
    }
  }
  EXPECT_THROW(projection_jacobian(Eigen::Vector3d(0.0, 0.0, 0.0), k), Error);
}

TEST(Camera, JacobianMatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const CameraIntrinsics<long double> kl = test_camera().cast<long double>();
  for (int s = 0; s < 200; ++s) {
    const Eigen::Vector3d p(u(rng), u(rng), 1.0 + 2.0 * (u(rng) + 0.5));
    const Eigen::Matrix<double, 2, 12> J = projection_jacobian(p, test_camera());
    const long double h = 1e-7L;
    for (int c = 0; c < 12; ++c) {
      Eigen::Matrix<long double, 3, 1> pp = p.cast<long double>();
      Eigen::Matrix<long double, 3, 1> pm = pp;
      CameraIntrinsics<long double> kp = kl;
      CameraIntrinsics<long double> km = kl;
      long double step = h;
      if (c < 3) {
        pp[c] += h;
        pm[c] -= h;
      } else {
        auto params = kl.params();
        // pixels are linear in each intrinsic, so a wide step is exact and avoids cancellation
        step = 1e-3L * std::max<long double>(1.0L, std::abs(params[c - 3]));
        params[c - 3] += step;
        kp.set_params(params);
        params[c - 3] -= 2 * step;
        km.set_params(params);
      }
      const auto fd = ((project(pp, kp) - project(pm, km)) / (2 * step)).eval();
      for (int r = 0; r < 2; ++r) {
        const double f = static_cast<double>(fd[r]);
        EXPECT_LE(std::abs(J(r, c) - f) / std::max(std::abs(f), 1e-6), 1e-6) << "row " << r << " col " << c;
      }
    }
  }
}

TEST(Camera, UndistortInvertsDistortion) {
  const CameraIntrinsicsd k = test_camera();
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.35, 0.35);
  for (int s = 0; s < 500; ++s) {
    const Eigen::Vector2d xy(u(rng), u(rng));
    const PixelPointd px = project(Eigen::Vector3d(xy.x(), xy.y(), 1.0), k);
    const Eigen::Vector2d back = undistort(px, k);
    EXPECT_LT((back - xy).norm() * k.fx, 1e-9);
  }
}

TEST(Camera, UndistortReportsNoConvergence) {
  CameraIntrinsicsd k = test_camera();
  k.k1 = -5.0;  // strongly non-monotonic, fixed-point iteration diverges far from center
  try {
    undistort(PixelPointd(5000.0, 5000.0), k, 10);
    FAIL() << "expected NoConvergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoConvergence);
  }
}

TEST(Camera, ParamsRoundTrip) {
  const CameraIntrinsicsd k = test_camera();
  CameraIntrinsicsd other;
  other.set_params(k.params());
  EXPECT_EQ(other.params(), k.params());
  EXPECT_TRUE(k.valid());
  CameraIntrinsicsd bad = k;
  bad.fx = 0.0;
  EXPECT_FALSE(bad.valid());
}
