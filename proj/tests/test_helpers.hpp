#pragma once

#include <random>
#include <vector>

#include "wslam/camera.hpp"
#include "wslam/essential.hpp"
#include "wslam/so3.hpp"
#include "wslam/types.hpp"

namespace wslam::testing {

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Vec3 random_unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3 v(g(rng), g(rng), g(rng));
  while (v.norm() < 1e-6) v = Vec3(g(rng), g(rng), g(rng));
  return v.normalized();
}

inline Mat3 random_rotation(std::mt19937_64& rng, double max_angle = kPi * 0.9) {
  std::uniform_real_distribution<double> u(0.0, max_angle);
  return so3::exp(random_unit_vector(rng) * u(rng));
}

// Scene points in a box in front of both cameras of the pair (R, t):
// X_cam1 = R * X_cam0 + t. Points are expressed in camera-0 coordinates.
struct TwoViewScene {
  Mat3 R;
  Vec3 t;
  std::vector<Vec3> points;
  std::vector<Correspondence> corrs;
};

inline TwoViewScene make_two_view_scene(const Mat3& R, const Vec3& t, int n_points,
                                        std::uint64_t seed, double noise_normalized = 0.0) {
  TwoViewScene scene;
  scene.R = R;
  scene.t = t;
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> ux(-3.5, 3.5);
  std::uniform_real_distribution<double> uz(3.0, 9.0);
  std::normal_distribution<double> g(0.0, 1.0);
  while (static_cast<int>(scene.points.size()) < n_points) {
    const Vec3 X(ux(rng), ux(rng), uz(rng));
    const Vec3 X1 = R * X + t;
    if (X.z() <= 0.5 || X1.z() <= 0.5) continue;
    Correspondence m;
    m.x0 = X.head<2>() / X.z();
    m.x1 = X1.head<2>() / X1.z();
    if (noise_normalized > 0) {
      m.x0 += noise_normalized * Vec2(g(rng), g(rng));
      m.x1 += noise_normalized * Vec2(g(rng), g(rng));
    }
    scene.points.push_back(X);
    scene.corrs.push_back(m);
  }
  return scene;
}

}  // namespace wslam::testing
