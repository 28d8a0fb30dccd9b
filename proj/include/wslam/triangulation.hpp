#pragma once

#include <Eigen/Dense>
#include <vector>

#include "wslam/camera.hpp"
#include "wslam/types.hpp"

namespace wslam {

// Largest angle between the world-frame rays of any two observing views.
inline double max_pairwise_ray_angle(const std::vector<Pose>& poses,
                                     const std::vector<Vec2>& obs) {
  std::vector<Vec3> rays(poses.size());
  for (size_t k = 0; k < poses.size(); ++k)
    rays[k] = (poses[k].R.transpose() * Vec3(obs[k].x(), obs[k].y(), 1.0)).normalized();
  double best = 0.0;
  for (size_t i = 0; i < rays.size(); ++i)
    for (size_t j = i + 1; j < rays.size(); ++j) {
      const double c = std::clamp(rays[i].dot(rays[j]), -1.0, 1.0);
      best = std::max(best, std::acos(c));
    }
  return best;
}

// DLT triangulation from >= 2 views with normalized observations.
// Throws LowParallax when the maximum pairwise ray angle is below
// parallax_min_rad, and BehindCamera when the solution has non-positive
// depth in any contributing view.
inline Vec3 triangulate_linear(const std::vector<Pose>& poses,
                               const std::vector<Vec2>& obs,
                               double parallax_min_rad = deg2rad(1.0)) {
  const size_t n = poses.size();
  if (n < 2 || obs.size() != n)
    throw DegenerateConfiguration("triangulate_linear: needs >= 2 views with matching observations");
  if (max_pairwise_ray_angle(poses, obs) < parallax_min_rad)
    throw LowParallax("triangulate_linear: maximum ray angle below parallax floor");

  MatX A(2 * n, 4);
  for (size_t k = 0; k < n; ++k) {
    Eigen::Matrix<double, 3, 4> P;
    P.leftCols<3>() = poses[k].R;
    P.col(3) = -poses[k].R * poses[k].C;
    A.row(2 * k) = obs[k].x() * P.row(2) - P.row(0);
    A.row(2 * k + 1) = obs[k].y() * P.row(2) - P.row(1);
  }
  Eigen::JacobiSVD<MatX> svd(A, Eigen::ComputeFullV);
  Vec4 Xh = svd.matrixV().col(3);
  if (std::abs(Xh(3)) < 1e-15)
    throw LowParallax("triangulate_linear: point at infinity");
  const Vec3 X = Xh.head<3>() / Xh(3);

  for (const auto& pose : poses)
    if (depth_in_camera(pose, X) <= 0.0)
      throw BehindCamera("triangulate_linear: non-positive depth in a contributing view");
  return X;
}

}  // namespace wslam
