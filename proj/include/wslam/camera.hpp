#pragma once

#include <cmath>

#include "wslam/so3.hpp"
#include "wslam/types.hpp"

namespace wslam {

// World-to-camera pose: a point X (world) maps to q = R * (X - C) in the
// camera frame. C is the camera center expressed in world coordinates.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 C = Vec3::Zero();

  Vec3 to_camera(const Vec3& X) const { return R * (X - C); }
  Vec3 to_world(const Vec3& q) const { return R.transpose() * q + C; }

  Pose inverse() const { return Pose{R.transpose(), -(R * C)}; }

  // this ∘ other: first apply other, then this.
  Pose compose(const Pose& other) const {
    // q = R*( (R_o*(X - C_o)) ... ) composition in world->cam chain form.
    Pose p;
    p.R = R * other.R;
    p.C = other.C + other.R.transpose() * C;
    return p;
  }
};

// Pinhole camera with a single radial coefficient. The radial model relates
// an observed (measured) point to its ideal pinhole projection on the
// observation side:
//
//   x_obs * Psi(x_obs) = x_ideal,   Psi(x) = 1 + r * ||x||^2,
//
// with x in normalized image coordinates relative to the principal point.
struct CameraIntrinsics {
  double focal = 1.0;           // pixels
  Vec2 principal_point = Vec2::Zero();
  double distortion_r = 0.0;

  bool valid() const { return focal > 0.0 && std::isfinite(focal); }

  Vec2 pixel_to_normalized(const Vec2& px) const {
    return (px - principal_point) / focal;
  }
  Vec2 normalized_to_pixel(const Vec2& xn) const {
    return principal_point + focal * xn;
  }

  // Measured point -> ideal pinhole point (normalized coordinates).
  Vec2 correct_observation_normalized(const Vec2& x_obs) const {
    return x_obs * (1.0 + distortion_r * x_obs.squaredNorm());
  }

  // Measured pixel -> ideal pinhole point in normalized coordinates,
  // ready for epipolar geometry / triangulation.
  Vec2 undistort_pixel(const Vec2& px) const {
    return correct_observation_normalized(pixel_to_normalized(px));
  }

  // Ideal pinhole point -> the point the camera would actually measure.
  // Solves rho + r*rho^3 = rho_ideal for the observed radius (monotone on
  // the working range r*||x||^2 < 0.5).
  Vec2 distort_normalized(const Vec2& x_ideal) const {
    const double rho_ideal = x_ideal.norm();
    if (rho_ideal == 0.0 || distortion_r == 0.0) return x_ideal;
    double rho = rho_ideal;
    for (int it = 0; it < 20; ++it) {
      const double g = rho + distortion_r * rho * rho * rho - rho_ideal;
      const double dg = 1.0 + 3.0 * distortion_r * rho * rho;
      const double step = g / dg;
      rho -= step;
      if (std::abs(step) < 1e-15) break;
    }
    return x_ideal * (rho / rho_ideal);
  }
};

// Projects X through (pose, intr) to the pixel the camera would measure.
// Throws BehindCamera for non-positive depth.
inline Vec2 project(const CameraIntrinsics& intr, const Pose& pose, const Vec3& X) {
  const Vec3 q = pose.to_camera(X);
  if (q.z() <= 0.0) throw BehindCamera("project: point has non-positive depth");
  const Vec2 ideal(q.x() / q.z(), q.y() / q.z());
  return intr.normalized_to_pixel(intr.distort_normalized(ideal));
}

inline double depth_in_camera(const Pose& pose, const Vec3& X) {
  return pose.to_camera(X).z();
}

}  // namespace wslam
