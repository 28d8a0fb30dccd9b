#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "wslam/so3.hpp"
#include "wslam/types.hpp"

namespace wslam {

// One normalized (intrinsics removed, distortion corrected) 2D<->2D match.
// x0 lives in the first view, x1 in the second.
struct Correspondence {
  Vec2 x0;
  Vec2 x1;
};

// Convention used throughout: for a pair (i, j), points map between camera
// frames as X_j = R * X_i + t, and the essential matrix satisfying
// x1^T E x0 = 0 is E = [t]_x R.
inline Mat3 essential_from_pose(const Mat3& R, const Vec3& t) {
  return so3::hat(t) * R;
}

// Nearest matrix with singular values (s, s, 0).
inline Mat3 project_to_essential(const Mat3& M) {
  Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double s = 0.5 * (svd.singularValues()(0) + svd.singularValues()(1));
  Vec3 sv(s, s, 0.0);
  return svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
}

inline bool satisfies_essential_invariants(const Mat3& E) {
  Eigen::JacobiSVD<Mat3> svd(E);
  const Vec3 s = svd.singularValues();
  if (s(0) <= 0) return false;
  const double ratio = s(1) / s(0);
  return ratio > 1.0 - 1e-6 && s(2) / s(0) < 1e-6;
}

// First-order geometric (Sampson) distance in normalized coordinates.
inline double sampson_distance(const Mat3& E, const Vec2& x0, const Vec2& x1) {
  const Vec3 p0(x0.x(), x0.y(), 1.0);
  const Vec3 p1(x1.x(), x1.y(), 1.0);
  const Vec3 Ep0 = E * p0;
  const Vec3 Etp1 = E.transpose() * p1;
  const double num = p1.dot(Ep0);
  const double den2 = Ep0.head<2>().squaredNorm() + Etp1.head<2>().squaredNorm();
  if (den2 <= 0) return std::numeric_limits<double>::infinity();
  return std::abs(num) / std::sqrt(den2);
}

// Depths of a match under (R, t): solves z1 * x1h = z0 * R x0h + t in least
// squares. Returns (z0, z1); both positive means the point is in front of
// both cameras.
inline Vec2 two_view_depths(const Mat3& R, const Vec3& t, const Vec2& x0, const Vec2& x1) {
  const Vec3 a = R * Vec3(x0.x(), x0.y(), 1.0);
  const Vec3 b(x1.x(), x1.y(), 1.0);
  Eigen::Matrix<double, 3, 2> A;
  A.col(0) = a;
  A.col(1) = -b;
  const Vec2 z = A.colPivHouseholderQr().solve(-t);
  return z;
}

// The four (R, t) candidates of an essential matrix, det(R) = +1 enforced.
inline std::array<std::pair<Mat3, Vec3>, 4> essential_candidates(const Mat3& E) {
  Eigen::JacobiSVD<Mat3> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  Mat3 V = svd.matrixV();
  if (U.determinant() < 0) U.col(2) *= -1;
  if (V.determinant() < 0) V.col(2) *= -1;
  Mat3 W;
  W << 0, -1, 0,
       1, 0, 0,
       0, 0, 1;
  const Mat3 Ra = U * W * V.transpose();
  const Mat3 Rb = U * W.transpose() * V.transpose();
  const Vec3 t = U.col(2).normalized();
  return {{{Ra, t}, {Ra, -t}, {Rb, t}, {Rb, -t}}};
}

struct DecompositionResult {
  std::array<std::pair<Mat3, Vec3>, 4> candidates;
  Mat3 R;
  Vec3 t;                // unit
  int positive_depths;   // matches in front of both views under the winner
};

// Picks the candidate with the strictly largest count of points triangulating
// in front of both cameras. Throws CheiralityTie when no candidate wins.
inline DecompositionResult decompose_essential(const Mat3& E,
                                               const std::vector<Correspondence>& corrs) {
  DecompositionResult res;
  res.candidates = essential_candidates(E);
  std::array<int, 4> votes{0, 0, 0, 0};
  for (int c = 0; c < 4; ++c) {
    const auto& [R, t] = res.candidates[c];
    for (const auto& m : corrs) {
      const Vec2 z = two_view_depths(R, t, m.x0, m.x1);
      if (z(0) > 0 && z(1) > 0) ++votes[c];
    }
  }
  int best = 0;
  for (int c = 1; c < 4; ++c)
    if (votes[c] > votes[best]) best = c;
  bool strict = true;
  for (int c = 0; c < 4; ++c)
    if (c != best && votes[c] == votes[best]) strict = false;
  if (!strict || corrs.empty()) {
    CheiralityTie err("decompose_essential: no candidate strictly wins cheirality");
    err.candidates = res.candidates;
    throw err;
  }
  res.R = res.candidates[best].first;
  res.t = res.candidates[best].second;
  res.positive_depths = votes[best];
  return res;
}

// Normalized eight-point solve followed by projection onto the essential
// manifold. Input points are already in camera-normalized coordinates; the
// extra Hartley conditioning still improves the linear system.
inline Mat3 solve_essential_eight_point(const std::vector<Correspondence>& corrs) {
  const int n = static_cast<int>(corrs.size());
  if (n < 8) throw DegenerateConfiguration("eight_point: needs >= 8 correspondences");

  Vec2 c0 = Vec2::Zero(), c1 = Vec2::Zero();
  for (const auto& m : corrs) {
    c0 += m.x0;
    c1 += m.x1;
  }
  c0 /= n;
  c1 /= n;
  double s0 = 0, s1 = 0;
  for (const auto& m : corrs) {
    s0 += (m.x0 - c0).norm();
    s1 += (m.x1 - c1).norm();
  }
  s0 = (s0 > 1e-12 * n) ? std::sqrt(2.0) * n / s0 : 1.0;
  s1 = (s1 > 1e-12 * n) ? std::sqrt(2.0) * n / s1 : 1.0;

  MatX A(n, 9);
  for (int i = 0; i < n; ++i) {
    const Vec2 a = (corrs[i].x0 - c0) * s0;
    const Vec2 b = (corrs[i].x1 - c1) * s1;
    A.row(i) << b.x() * a.x(), b.x() * a.y(), b.x(),
                b.y() * a.x(), b.y() * a.y(), b.y(),
                a.x(), a.y(), 1.0;
  }
  Eigen::JacobiSVD<MatX> svd(A, Eigen::ComputeFullV);
  if (svd.rank() < 8) throw DegenerateConfiguration("eight_point: degenerate point set");
  const VecX e = svd.matrixV().col(8);
  Mat3 En;
  En << e(0), e(1), e(2),
        e(3), e(4), e(5),
        e(6), e(7), e(8);

  Mat3 T0 = Mat3::Identity(), T1 = Mat3::Identity();
  T0(0, 0) = T0(1, 1) = s0;
  T0.block<2, 1>(0, 2) = -s0 * c0;
  T1(0, 0) = T1(1, 1) = s1;
  T1.block<2, 1>(0, 2) = -s1 * c1;
  const Mat3 E = T1.transpose() * En * T0;
  return project_to_essential(E);
}

}  // namespace wslam
