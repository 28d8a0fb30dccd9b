#pragma once

#include <vector>

#include "wslam/image.hpp"
#include "wslam/types.hpp"

namespace wslam {

struct LkConfig {
  int levels = 3;
  int window = 21;        // odd
  int max_iterations = 30;
  double epsilon = 0.01;  // convergence threshold, px
  double fb_max = 1.0;    // forward-backward rejection threshold, px
  // Floor on the per-pixel minimum eigenvalue of the spatial gradient matrix
  // (raw intensity units); rejects flat patches.
  double min_eigenvalue = 1e-4;
};

struct FlowResult {
  Vec2 point = Vec2::Zero();  // position in the next frame
  double fb_error = std::numeric_limits<double>::infinity();
  bool ok = false;
};

namespace detail {

// One pyramid level of the iterative LK update (Bouguet formulation).
inline bool lk_level(const Image& prev, const Image& next, const Vec2& p_prev, Vec2& delta,
                     const LkConfig& cfg) {
  const int half = cfg.window / 2;
  if (!prev.contains(p_prev.x(), p_prev.y(), 1.0)) return false;

  const int n = cfg.window * cfg.window;
  std::vector<double> patch(n), gx(n), gy(n);
  double a = 0, b = 0, c = 0;
  int idx = 0;
  for (int dy = -half; dy <= half; ++dy)
    for (int dx = -half; dx <= half; ++dx, ++idx) {
      const double x = p_prev.x() + dx, y = p_prev.y() + dy;
      patch[idx] = prev.sample(x, y);
      const double ix = 0.5 * (prev.sample(x + 1, y) - prev.sample(x - 1, y));
      const double iy = 0.5 * (prev.sample(x, y + 1) - prev.sample(x, y - 1));
      gx[idx] = ix;
      gy[idx] = iy;
      a += ix * ix;
      b += ix * iy;
      c += iy * iy;
    }
  const double half_tr = 0.5 * (a + c);
  const double min_eig = half_tr - std::sqrt(std::max(0.25 * (a - c) * (a - c) + b * b, 0.0));
  if (min_eig / n < cfg.min_eigenvalue) return false;
  const double det = a * c - b * b;
  if (det <= 0) return false;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    const Vec2 q = p_prev + delta;
    // Border windows are clamp-padded by sample(); only the center must stay
    // inside. The forward-backward check screens out the biased cases.
    if (!next.contains(q.x(), q.y(), 1.0)) return false;
    double bx = 0, by = 0;
    idx = 0;
    for (int dy = -half; dy <= half; ++dy)
      for (int dx = -half; dx <= half; ++dx, ++idx) {
        const double diff = patch[idx] - next.sample(q.x() + dx, q.y() + dy);
        bx += diff * gx[idx];
        by += diff * gy[idx];
      }
    const Vec2 step((c * bx - b * by) / det, (a * by - b * bx) / det);
    delta += step;
    if (step.norm() < cfg.epsilon) break;
  }
  return true;
}

inline bool lk_pyramidal(const std::vector<Image>& prev_pyr, const std::vector<Image>& next_pyr,
                         const Vec2& p, Vec2& out, const LkConfig& cfg) {
  const int levels = static_cast<int>(std::min(prev_pyr.size(), next_pyr.size()));
  Vec2 delta = Vec2::Zero();
  for (int l = levels - 1; l >= 0; --l) {
    const double scale = static_cast<double>(1 << l);
    Vec2 p_l = p / scale;
    if (!lk_level(prev_pyr[static_cast<size_t>(l)], next_pyr[static_cast<size_t>(l)], p_l, delta,
                  cfg))
      return false;
    if (l > 0) delta *= 2.0;
  }
  out = p + delta;
  return next_pyr[0].contains(out.x(), out.y());
}

}  // namespace detail

// Bidirectional pyramidal Lucas-Kanade: forward track, then backward from the
// forward result; fb_error is the distance between the backward landing point
// and the original.
inline std::vector<FlowResult> track_bidirectional(const Image& prev, const Image& next,
                                                   const std::vector<Vec2>& points,
                                                   const LkConfig& cfg = {}) {
  if (prev.width != next.width || prev.height != next.height)
    throw DimensionMismatch("track_bidirectional: frame dimensions differ");
  if (prev.empty()) throw EmptyImage("track_bidirectional: empty frame");

  const auto prev_pyr = build_pyramid(prev, cfg.levels);
  const auto next_pyr = build_pyramid(next, cfg.levels);

  std::vector<FlowResult> out(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    Vec2 fwd;
    if (!detail::lk_pyramidal(prev_pyr, next_pyr, points[i], fwd, cfg)) continue;
    Vec2 back;
    if (!detail::lk_pyramidal(next_pyr, prev_pyr, fwd, back, cfg)) continue;
    const double fb = (back - points[i]).norm();
    out[i].point = fwd;
    out[i].fb_error = fb;
    out[i].ok = fb <= cfg.fb_max;
  }
  return out;
}

}  // namespace wslam
