#ifndef UR_STACK_KIN_POSE_HPP
#define UR_STACK_KIN_POSE_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <cmath>

namespace urstack::kin {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Rotation vector (axis * angle) from a rotation matrix, canonical angle
// in [0, pi]. Extraction goes through the unit quaternion: angle =
// 2*atan2(|v|, w) stays well conditioned near both 0 and pi, where the
// trace/acos form loses half the significant digits.
inline Vec3 rotation_matrix_to_vector(const Mat3& R) {
  Eigen::Quaterniond q(R);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  double n = q.vec().norm();
  if (n < 1e-300) return Vec3::Zero();
  double angle = 2.0 * std::atan2(n, q.w());
  return q.vec() * (angle / n);
}

inline Mat3 rotation_vector_to_matrix(const Vec3& rv) {
  double angle = rv.norm();
  if (angle < 1e-12) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, rv / angle).toRotationMatrix();
}

// Pose as position + rotation vector; the public pose form of the stack.
struct Pose6 {
  Vec3 position = Vec3::Zero();
  Vec3 rotation = Vec3::Zero();

  static Pose6 from_matrix(const Mat4& T) {
    Pose6 p;
    p.position = T.block<3, 1>(0, 3);
    p.rotation = rotation_matrix_to_vector(T.block<3, 3>(0, 0));
    return p;
  }

  Mat4 to_matrix() const {
    Mat4 T = Mat4::Identity();
    T.block<3, 3>(0, 0) = rotation_vector_to_matrix(rotation);
    T.block<3, 1>(0, 3) = position;
    return T;
  }

  std::array<double, 6> to_array() const {
    return {position.x(), position.y(), position.z(),
            rotation.x(), rotation.y(), rotation.z()};
  }

  static Pose6 from_array(const std::array<double, 6>& a) {
    Pose6 p;
    p.position = Vec3(a[0], a[1], a[2]);
    p.rotation = Vec3(a[3], a[4], a[5]);
    return p;
  }
};

// Twist from current toward target: linear delta plus the rotation vector
// of R_target * R_current^T.
inline Vec6 pose_error(const Pose6& target, const Pose6& current) {
  Vec6 e;
  e.head<3>() = target.position - current.position;
  Mat3 Rrel = rotation_vector_to_matrix(target.rotation) *
              rotation_vector_to_matrix(current.rotation).transpose();
  e.tail<3>() = rotation_matrix_to_vector(Rrel);
  return e;
}

// Interpolate between poses: linear in position, geodesic in rotation.
inline Pose6 pose_interpolate(const Pose6& a, const Pose6& b, double s) {
  Pose6 p;
  p.position = a.position + s * (b.position - a.position);
  Mat3 Ra = rotation_vector_to_matrix(a.rotation);
  Mat3 Rb = rotation_vector_to_matrix(b.rotation);
  Vec3 rel = rotation_matrix_to_vector(Rb * Ra.transpose());
  p.rotation = rotation_matrix_to_vector(rotation_vector_to_matrix(rel * s) * Ra);
  return p;
}

}  // namespace urstack::kin

#endif  // UR_STACK_KIN_POSE_HPP
