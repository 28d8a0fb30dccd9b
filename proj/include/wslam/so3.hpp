#pragma once

#include <cmath>

#include "wslam/types.hpp"

namespace wslam {
namespace so3 {

inline Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0, -w.z(), w.y(),
       w.z(), 0, -w.x(),
       -w.y(), w.x(), 0;
  return m;
}

inline Vec3 vee(const Mat3& m) {
  return Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)) * 0.5;
}

// Rodrigues formula; stable for small angles via Taylor expansion.
inline Mat3 exp(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 W = hat(w);
  double a, b;
  if (theta < 1e-8) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat3::Identity() + a * W + b * W * W;
}

// Inverse of exp; valid for rotation angle < pi.
inline Vec3 log(const Mat3& R) {
  const Vec3 v = vee(R);  // sin(theta) * axis
  const double s = v.norm();
  const double c = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::atan2(s, c);
  if (theta < 1e-8) return v * (1.0 + theta * theta / 6.0);
  if (c > -0.99) return v * (theta / s);
  // Near pi the antisymmetric part vanishes; take axis^2 from the symmetric
  // part B = I cos + (1 - cos) aa^T, which stays well conditioned.
  const Mat3 B = 0.5 * (R + R.transpose());
  int k;
  B.diagonal().maxCoeff(&k);
  const double denom = 1.0 - c;
  Vec3 a = Vec3::Zero();
  a[k] = std::sqrt(std::max((B(k, k) - c) / denom, 0.0));
  for (int j = 0; j < 3; ++j)
    if (j != k) a[j] = B(k, j) / (denom * a[k]);
  a.normalize();
  if (v.dot(a) < 0) a = -a;
  return a * theta;
}

// Nearest rotation matrix in Frobenius norm, det +1 enforced.
inline Mat3 project(const Mat3& M) {
  Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0) {
    Mat3 D = Mat3::Identity();
    D(2, 2) = -1;
    R = svd.matrixU() * D * svd.matrixV().transpose();
  }
  return R;
}

// Geodesic angle between two rotations, radians in [0, pi].
inline double angular_distance(const Mat3& R1, const Mat3& R2) {
  const double c = std::clamp(((R1.transpose() * R2).trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

inline double rotation_angle(const Mat3& R) {
  return angular_distance(Mat3::Identity(), R);
}

inline Mat3 from_quat(const Quat& q) { return q.normalized().toRotationMatrix(); }

inline Quat to_quat(const Mat3& R) { return Quat(R).normalized(); }

inline Mat3 rot_x(double rad) { return exp(Vec3(rad, 0, 0)); }
inline Mat3 rot_y(double rad) { return exp(Vec3(0, rad, 0)); }
inline Mat3 rot_z(double rad) { return exp(Vec3(0, 0, rad)); }

inline bool is_rotation(const Mat3& R, double tol = 1e-9) {
  return ((R * R.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() < tol) &&
         std::abs(R.determinant() - 1.0) < tol;
}

}  // namespace so3
}  // namespace wslam
