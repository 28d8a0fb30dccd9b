#pragma once

#include <Eigen/Dense>
#include <vector>

#include "wslam/camera.hpp"
#include "wslam/types.hpp"

namespace wslam {

// 7-dof similarity X -> s * R * X + t.
struct Similarity {
  double s = 1.0;
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& X) const { return s * (R * X) + t; }

  Similarity inverse() const {
    Similarity inv;
    inv.s = 1.0 / s;
    inv.R = R.transpose();
    inv.t = -(inv.s) * (inv.R * t);
    return inv;
  }

  // this ∘ other.
  Similarity compose(const Similarity& other) const {
    Similarity out;
    out.s = s * other.s;
    out.R = R * other.R;
    out.t = s * (R * other.t) + t;
    return out;
  }

  // World-to-camera pose of a camera whose world was remapped by *this.
  Pose apply(const Pose& pose) const {
    Pose out;
    out.R = pose.R * R.transpose();
    out.C = apply(pose.C);
    return out;
  }
};

// Least-squares similarity mapping src onto dst (Umeyama's closed form with
// SVD sign correction so det(R) = +1). With allow_rank_deficient the
// collinearity guard is skipped; the returned transform then aligns the
// principal axis and scale, with the roll about that axis unconstrained.
inline Similarity umeyama_similarity(const std::vector<Vec3>& src,
                                     const std::vector<Vec3>& dst,
                                     bool allow_rank_deficient = false) {
  const size_t n = src.size();
  if (n < 3 || dst.size() != n)
    throw DegenerateSet("umeyama_similarity: needs >= 3 point pairs of equal length");

  Vec3 mu_s = Vec3::Zero(), mu_d = Vec3::Zero();
  for (size_t i = 0; i < n; ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  mu_s /= double(n);
  mu_d /= double(n);

  Mat3 Sigma = Mat3::Zero();
  double var_s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const Vec3 ds = src[i] - mu_s;
    Sigma += (dst[i] - mu_d) * ds.transpose();
    var_s += ds.squaredNorm();
  }
  Sigma /= double(n);
  var_s /= double(n);

  Eigen::JacobiSVD<Mat3> svd(Sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  // Collinear or coincident: rank < 2 leaves the rotation underdetermined.
  if (!allow_rank_deficient && sv(1) < 1e-12 * sv(0))
    throw DegenerateSet("umeyama_similarity: source/target points are collinear or coincident");
  if (var_s < 1e-24)
    throw DegenerateSet("umeyama_similarity: source points are coincident");

  Mat3 S = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) S(2, 2) = -1;

  Similarity sim;
  sim.R = svd.matrixU() * S * svd.matrixV().transpose();
  sim.s = (sv(0) * S(0, 0) + sv(1) * S(1, 1) + sv(2) * S(2, 2)) / var_s;
  sim.t = mu_d - sim.s * (sim.R * mu_s);
  return sim;
}

inline double similarity_rms_residual(const Similarity& sim,
                                      const std::vector<Vec3>& src,
                                      const std::vector<Vec3>& dst) {
  double se = 0.0;
  for (size_t i = 0; i < src.size(); ++i) se += (dst[i] - sim.apply(src[i])).squaredNorm();
  return std::sqrt(se / std::max<size_t>(1, src.size()));
}

}  // namespace wslam
