#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "wslam/essential.hpp"
#include "wslam/five_point.hpp"
#include "wslam/types.hpp"

namespace wslam {

enum class MinimalSolver { EightPoint, FivePoint };

struct RansacConfig {
  std::uint64_t seed = 0;
  int max_iterations = 1000;
  double threshold = 1e-3;        // Sampson distance in normalized coordinates
  double min_inlier_ratio = 0.33;
  double confidence = 0.999;
  MinimalSolver solver = MinimalSolver::EightPoint;
};

// Relative pose of the second view w.r.t. the first: X_1 = R * X_0 + s * direction
// for some unrecovered scale s >= 0.
struct RelativePose {
  Mat3 rotation = Mat3::Identity();
  Vec3 direction = Vec3::UnitZ();
  int inlier_count = 0;
  double edge_weight = 0.0;
  // Median rotation-compensated ray angle of the inliers; near zero means the
  // pair carries no usable translation signal.
  double median_parallax = 0.0;
  std::vector<int> inliers;
};

namespace detail {

inline Vec3 bearing(const Vec2& x) { return Vec3(x.x(), x.y(), 1.0).normalized(); }

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

// Least-squares rotation aligning bearings of view 0 onto view 1.
inline Mat3 kabsch_rotation(const std::vector<Correspondence>& corrs,
                            const std::vector<int>& subset) {
  Mat3 H = Mat3::Zero();
  for (int i : subset) H += bearing(corrs[i].x1) * bearing(corrs[i].x0).transpose();
  return so3::project(H);
}

inline double rotation_residual(const Mat3& R, const Correspondence& m) {
  const double c = std::clamp(bearing(m.x1).dot(R * bearing(m.x0)), -1.0, 1.0);
  return std::acos(c);
}

struct MsacScore {
  double score = std::numeric_limits<double>::infinity();
  int inliers = 0;
};

inline MsacScore msac_score(const Mat3& E, const std::vector<Correspondence>& corrs,
                            double threshold) {
  MsacScore s;
  s.score = 0.0;
  const double t2 = threshold * threshold;
  for (const auto& m : corrs) {
    const double d = sampson_distance(E, m.x0, m.x1);
    const double d2 = d * d;
    if (d2 < t2) {
      s.score += d2;
      ++s.inliers;
    } else {
      s.score += t2;
    }
  }
  return s;
}

// Minimal (R, t-direction) parameterization: rotation updated on the right,
// translation direction updated in its tangent plane.
struct PosePoint {
  Mat3 R;
  Vec3 t;  // unit
};

inline PosePoint apply_pose_step(const PosePoint& p, const Eigen::Matrix<double, 5, 1>& dx) {
  PosePoint out;
  out.R = p.R * so3::exp(dx.head<3>());
  Vec3 u = p.t.unitOrthogonal();
  Vec3 v = p.t.cross(u);
  out.t = (p.t + dx(3) * u + dx(4) * v).normalized();
  return out;
}

// Levenberg-Marquardt refinement of the (optionally weighted) Sampson error
// over the essential manifold, with a numeric central-difference Jacobian
// (5 parameters).
inline PosePoint refine_pose_sampson(PosePoint p, const std::vector<Correspondence>& corrs,
                                     const VecX* weights = nullptr, int max_iters = 15) {
  auto residuals = [&corrs, weights](const PosePoint& q, VecX& r) {
    const Mat3 E = essential_from_pose(q.R, q.t);
    r.resize(static_cast<int>(corrs.size()));
    for (size_t i = 0; i < corrs.size(); ++i) {
      const Vec3 p0(corrs[i].x0.x(), corrs[i].x0.y(), 1.0);
      const Vec3 p1(corrs[i].x1.x(), corrs[i].x1.y(), 1.0);
      const Vec3 Ep0 = E * p0;
      const Vec3 Etp1 = E.transpose() * p1;
      const double den2 = Ep0.head<2>().squaredNorm() + Etp1.head<2>().squaredNorm();
      double ri = den2 > 0 ? p1.dot(Ep0) / std::sqrt(den2) : 0.0;
      if (weights) ri *= (*weights)(static_cast<int>(i));
      r(static_cast<int>(i)) = ri;
    }
  };

  VecX r0;
  residuals(p, r0);
  double cost = r0.squaredNorm();
  double lambda = 1e-6;
  const int m = static_cast<int>(corrs.size());
  for (int it = 0; it < max_iters; ++it) {
    MatX J(m, 5);
    const double h = 1e-6;
    for (int k = 0; k < 5; ++k) {
      Eigen::Matrix<double, 5, 1> dx = Eigen::Matrix<double, 5, 1>::Zero();
      dx(k) = h;
      VecX rp, rm;
      residuals(apply_pose_step(p, dx), rp);
      dx(k) = -h;
      residuals(apply_pose_step(p, dx), rm);
      J.col(k) = (rp - rm) / (2.0 * h);
    }
    const Eigen::Matrix<double, 5, 5> H = J.transpose() * J;
    const Eigen::Matrix<double, 5, 1> g = J.transpose() * r0;
    bool stepped = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::Matrix<double, 5, 5> Hd = H;
      Hd.diagonal() += lambda * H.diagonal().cwiseMax(1e-12);
      const Eigen::Matrix<double, 5, 1> dx = Hd.ldlt().solve(-g);
      const PosePoint cand = apply_pose_step(p, dx);
      VecX rc;
      residuals(cand, rc);
      const double c = rc.squaredNorm();
      if (c < cost) {
        p = cand;
        r0 = rc;
        const bool converged = (cost - c) < 1e-14 * (1.0 + cost);
        cost = c;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (converged) return p;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) break;
  }
  return p;
}

}  // namespace detail

// Robust two-view relative pose from normalized correspondences: MSAC over a
// minimal essential solver, local refit on the inlier set, cheirality
// disambiguation, and a rotation-only prefit that catches (near-)zero-baseline
// pairs whose translation direction is unrecoverable.
inline RelativePose estimate_relative_pose(const std::vector<Correspondence>& corrs,
                                           const RansacConfig& cfg = {}) {
  const int n = static_cast<int>(corrs.size());
  if (n < 8) throw DegenerateConfiguration("estimate_relative_pose: needs >= 8 correspondences");

  // Rotation-only prefit. If a pure rotation already explains the matches to
  // within the inlier threshold, the essential matrix is ill-defined and the
  // pair only contributes its rotation.
  {
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    std::vector<int> subset = all;
    Mat3 R0 = Mat3::Identity();
    for (int it = 0; it < 3; ++it) {
      R0 = detail::kabsch_rotation(corrs, subset);
      subset.clear();
      for (int i = 0; i < n; ++i)
        if (detail::rotation_residual(R0, corrs[i]) < cfg.threshold) subset.push_back(i);
      if (subset.size() < 3) break;
    }
    if (static_cast<int>(subset.size()) >= std::max(8, n / 2)) {
      std::vector<double> res;
      res.reserve(subset.size());
      for (int i : subset) res.push_back(detail::rotation_residual(R0, corrs[i]));
      const double med = detail::median_of(res);
      if (med < 0.5 * cfg.threshold) {
        RelativePose out;
        out.rotation = R0;
        out.direction = Vec3::UnitZ();  // placeholder; parallax flags it unusable
        out.inliers = subset;
        out.inlier_count = static_cast<int>(subset.size());
        out.edge_weight = out.inlier_count;
        out.median_parallax = med;
        return out;
      }
    }
  }

  const int sample_size = cfg.solver == MinimalSolver::EightPoint ? 8 : 5;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);

  auto collect_inliers = [&](const Mat3& E) {
    std::vector<Correspondence> inl;
    for (const auto& m : corrs)
      if (sampson_distance(E, m.x0, m.x1) < cfg.threshold) inl.push_back(m);
    return inl;
  };

  // Local optimization: decompose, then iterate Sampson LM refinement with
  // inlier recollection until the MSAC score stops improving.
  auto local_optimize = [&](const Mat3& E0, detail::MsacScore score0)
      -> std::pair<detail::PosePoint, detail::MsacScore> {
    detail::PosePoint model;
    try {
      const auto dec = decompose_essential(E0, collect_inliers(E0));
      model = {dec.R, dec.t};
    } catch (const CheiralityTie&) {
      return {detail::PosePoint{Mat3::Identity(), Vec3::UnitZ()},
              detail::MsacScore{std::numeric_limits<double>::infinity(), 0}};
    }
    auto best = score0;
    auto cur = model;
    for (int round = 0; round < 5; ++round) {
      const auto inl = collect_inliers(essential_from_pose(cur.R, cur.t));
      if (static_cast<int>(inl.size()) < 8) break;
      cur = detail::refine_pose_sampson(cur, inl);
      const auto s = detail::msac_score(essential_from_pose(cur.R, cur.t), corrs, cfg.threshold);
      if (s.score < best.score - 1e-15) {
        best = s;
        model = cur;
      } else {
        break;
      }
    }
    return {model, best};
  };

  detail::PosePoint best_model{Mat3::Identity(), Vec3::UnitZ()};
  bool have_model = false;
  // Raw score gates which samples are worth optimizing; the polished score
  // tracks the best refined model.
  double best_raw = std::numeric_limits<double>::infinity();
  detail::MsacScore best{std::numeric_limits<double>::infinity(), 0};
  int degenerate_samples = 0, tried = 0;
  int max_iters = cfg.max_iterations;

  for (int it = 0; it < max_iters; ++it) {
    ++tried;
    std::vector<int> sample;
    sample.reserve(sample_size);
    while (static_cast<int>(sample.size()) < sample_size) {
      const int idx = pick(rng);
      if (std::find(sample.begin(), sample.end(), idx) == sample.end()) sample.push_back(idx);
    }
    std::vector<Correspondence> minimal(sample_size);
    for (int k = 0; k < sample_size; ++k) minimal[k] = corrs[sample[k]];

    std::vector<Mat3> hypotheses;
    try {
      if (cfg.solver == MinimalSolver::EightPoint)
        hypotheses.push_back(solve_essential_eight_point(minimal));
      else
        hypotheses = solve_essential_five_point(minimal);
    } catch (const DegenerateConfiguration&) {
      ++degenerate_samples;
      continue;
    }
    if (hypotheses.empty()) {
      ++degenerate_samples;
      continue;
    }

    for (const Mat3& E : hypotheses) {
      const auto s = detail::msac_score(E, corrs, cfg.threshold);
      if (s.score >= best_raw || s.inliers < sample_size) continue;
      best_raw = s.score;
      // New best sample: refine inside its own basin before comparing on.
      const auto [model, s_lo] = local_optimize(E, s);
      if (s_lo.score < best.score) {
        best = s_lo;
        best_model = model;
        have_model = true;
        // Adaptive termination from the refined inlier ratio.
        const double w = static_cast<double>(best.inliers) / n;
        if (w > 0) {
          const double p_fail = 1.0 - std::pow(w, sample_size);
          if (p_fail < 1e-12) {
            max_iters = it + 1;
          } else if (p_fail < 1.0) {
            const double needed = std::log(1.0 - cfg.confidence) / std::log(p_fail);
            if (needed < static_cast<double>(cfg.max_iterations))
              max_iters = std::max(it + 1, static_cast<int>(std::ceil(needed)));
          }
        }
      }
    }
  }

  if (!have_model || best.inliers == 0) {
    if (degenerate_samples == tried)
      throw DegenerateConfiguration("estimate_relative_pose: all minimal samples degenerate");
    throw InsufficientInliers("estimate_relative_pose: no model explained any correspondence");
  }
  detail::PosePoint model = best_model;

  if (static_cast<double>(best.inliers) / n < cfg.min_inlier_ratio)
    throw InsufficientInliers("estimate_relative_pose: inlier ratio below floor");

  // The sign of t is unobservable in E; orient it by cheirality.
  const Mat3 E_final = essential_from_pose(model.R, model.t);
  std::vector<int> inlier_idx;
  std::vector<Correspondence> inlier_corrs;
  for (int i = 0; i < n; ++i)
    if (sampson_distance(E_final, corrs[i].x0, corrs[i].x1) < cfg.threshold) {
      inlier_idx.push_back(i);
      inlier_corrs.push_back(corrs[i]);
    }
  int in_front = 0;
  for (const auto& m : inlier_corrs) {
    const Vec2 z = two_view_depths(model.R, model.t, m.x0, m.x1);
    if (z(0) > 0 && z(1) > 0) ++in_front;
  }
  if (2 * in_front < static_cast<int>(inlier_corrs.size())) model.t = -model.t;

  RelativePose out;
  out.rotation = model.R;
  out.direction = model.t;
  out.inliers = std::move(inlier_idx);
  out.inlier_count = static_cast<int>(inlier_corrs.size());
  out.edge_weight = out.inlier_count;
  std::vector<double> par;
  par.reserve(inlier_corrs.size());
  for (const auto& m : inlier_corrs) par.push_back(detail::rotation_residual(model.R, m));
  out.median_parallax = detail::median_of(par);
  return out;
}

}  // namespace wslam
