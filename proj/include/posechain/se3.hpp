#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace posechain {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;

/// Rigid motion x -> R x + t. Rotation is stored as a unit quaternion and
/// re-normalized on construction, so composition chains never drift off SO(3).
template <typename Scalar>
class RigidTransform {
 public:
  using Quaternion = Eigen::Quaternion<Scalar>;

  RigidTransform() : rotation_(Quaternion::Identity()), translation_(Vector3<Scalar>::Zero()) {}

  RigidTransform(const Quaternion& rotation, const Vector3<Scalar>& translation)
      : rotation_(canonical(rotation)), translation_(translation) {}

  RigidTransform(const Matrix3<Scalar>& rotation, const Vector3<Scalar>& translation)
      : RigidTransform(Quaternion(rotation), translation) {}

  static RigidTransform identity() { return {}; }

  static RigidTransform from_translation(const Vector3<Scalar>& t) {
    return RigidTransform(Quaternion::Identity(), t);
  }

  /// Rotation vector (axis * angle, radians) plus translation.
  static RigidTransform from_rotation_vector(const Vector3<Scalar>& omega,
                                             const Vector3<Scalar>& t = Vector3<Scalar>::Zero()) {
    return RigidTransform(quaternion_from_rotation_vector(omega), t);
  }

  /// Takes the upper-left 3x3 as rotation; the matrix must already be rigid.
  static RigidTransform from_matrix(const Matrix4<Scalar>& m) {
    return RigidTransform(Matrix3<Scalar>(m.template topLeftCorner<3, 3>()),
                          Vector3<Scalar>(m.template topRightCorner<3, 1>()));
  }

  const Quaternion& rotation() const { return rotation_; }
  const Vector3<Scalar>& translation() const { return translation_; }
  Matrix3<Scalar> rotation_matrix() const { return rotation_.toRotationMatrix(); }

  Matrix4<Scalar> matrix() const {
    Matrix4<Scalar> m = Matrix4<Scalar>::Identity();
    m.template topLeftCorner<3, 3>() = rotation_matrix();
    m.template topRightCorner<3, 1>() = translation_;
    return m;
  }

  Vector3<Scalar> operator*(const Vector3<Scalar>& p) const { return rotation_ * p + translation_; }

  /// Applies `other` first, then `*this`.
  RigidTransform operator*(const RigidTransform& other) const {
    return RigidTransform(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
  }

  RigidTransform inverse() const {
    const Quaternion inv = rotation_.conjugate();
    return RigidTransform(inv, -(inv * translation_));
  }

  template <typename Other>
  RigidTransform<Other> cast() const {
    return RigidTransform<Other>(rotation_.template cast<Other>(), translation_.template cast<Other>());
  }

  static Quaternion quaternion_from_rotation_vector(const Vector3<Scalar>& omega) {
    using std::cos;
    using std::sin;
    using std::sqrt;
    const Scalar theta2 = omega.squaredNorm();
    if (theta2 < Scalar(1e-24)) {
      // second order Taylor expansion of the exponential map
      return Quaternion(Scalar(1) - theta2 / Scalar(8), omega.x() / Scalar(2), omega.y() / Scalar(2),
                        omega.z() / Scalar(2));
    }
    const Scalar theta = sqrt(theta2);
    const Scalar s = sin(theta / Scalar(2)) / theta;
    return Quaternion(cos(theta / Scalar(2)), s * omega.x(), s * omega.y(), s * omega.z());
  }

 private:
  static Quaternion canonical(const Quaternion& q) {
    Quaternion n = q.normalized();
    if (n.w() < Scalar(0)) n.coeffs() = -n.coeffs();
    return n;
  }

  Quaternion rotation_;
  Vector3<Scalar> translation_;
};

/// Maps x -> scale * R x + t, with `rigid` holding R and t.
template <typename Scalar>
struct SimilarityTransform {
  Scalar scale = Scalar(1);
  RigidTransform<Scalar> rigid;

  Vector3<Scalar> operator*(const Vector3<Scalar>& p) const {
    return scale * (rigid.rotation() * p) + rigid.translation();
  }

  Matrix4<Scalar> matrix() const {
    Matrix4<Scalar> m = rigid.matrix();
    m.template topLeftCorner<3, 3>() *= scale;
    return m;
  }
};

using RigidTransformd = RigidTransform<double>;
using SimilarityTransformd = SimilarityTransform<double>;

template <typename Scalar>
RigidTransform<Scalar> compose(const RigidTransform<Scalar>& a, const RigidTransform<Scalar>& b) {
  return a * b;
}

template <typename Scalar>
RigidTransform<Scalar> invert(const RigidTransform<Scalar>& t) {
  return t.inverse();
}

/// Angle of the rotation part in [0, pi]; atan2 form stays accurate near 0 and pi.
template <typename Scalar>
Scalar rotation_angle(const Eigen::Quaternion<Scalar>& q) {
  using std::abs;
  using std::atan2;
  return Scalar(2) * atan2(q.vec().norm(), abs(q.w()));
}

template <typename Scalar>
Scalar rotation_angle(const RigidTransform<Scalar>& t) {
  return rotation_angle(t.rotation());
}

template <typename Scalar>
Scalar translation_norm(const RigidTransform<Scalar>& t) {
  return t.translation().norm();
}

/// Axis-angle vector of the rotation (log map of SO(3)).
template <typename Scalar>
Vector3<Scalar> rotation_vector(const Eigen::Quaternion<Scalar>& q) {
  const Scalar angle = rotation_angle(q);
  const Scalar vnorm = q.vec().norm();
  if (vnorm < Scalar(1e-300)) return Vector3<Scalar>::Zero();
  const Scalar sign = q.w() < Scalar(0) ? Scalar(-1) : Scalar(1);
  return sign * angle / vnorm * q.vec();
}

template <typename Scalar>
Matrix3<Scalar> skew(const Vector3<Scalar>& v) {
  Matrix3<Scalar> m;
  m << Scalar(0), -v.z(), v.y(),  //
      v.z(), Scalar(0), -v.x(),   //
      -v.y(), v.x(), Scalar(0);
  return m;
}

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace posechain
