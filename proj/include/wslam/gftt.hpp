#pragma once

#include <algorithm>
#include <vector>

#include "wslam/image.hpp"
#include "wslam/types.hpp"

namespace wslam {

struct Corner {
  Vec2 position;
  double response;
};

// Shi-Tomasi "good features to track": minimum eigenvalue of the 3x3-summed
// structure tensor, quality-thresholded relative to the strongest response,
// non-maximum suppressed at min_distance, strongest first.
inline std::vector<Corner> detect_corners(const Image& img, int max_corners,
                                          double min_distance, double quality) {
  if (img.empty()) throw EmptyImage("detect_corners: empty image");
  if (quality <= 0.0 || quality > 1.0)
    throw ConfigError("detect_corners: quality must be in (0, 1]");
  const int w = img.width, h = img.height;
  if (w < 8 || h < 8) return {};

  std::vector<float> ix(static_cast<size_t>(w) * h, 0.f), iy(ix);
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) {
      ix[static_cast<size_t>(y) * w + x] = 0.5f * (img.at(x + 1, y) - img.at(x - 1, y));
      iy[static_cast<size_t>(y) * w + x] = 0.5f * (img.at(x, y + 1) - img.at(x, y - 1));
    }

  // min-eigenvalue response over a 3x3 neighborhood
  std::vector<float> response(static_cast<size_t>(w) * h, 0.f);
  float max_response = 0.f;
  for (int y = 2; y < h - 2; ++y)
    for (int x = 2; x < w - 2; ++x) {
      double a = 0, b = 0, c = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const size_t i = static_cast<size_t>(y + dy) * w + (x + dx);
          a += double(ix[i]) * ix[i];
          b += double(ix[i]) * iy[i];
          c += double(iy[i]) * iy[i];
        }
      const double half_tr = 0.5 * (a + c);
      const double det_term = std::sqrt(std::max(0.25 * (a - c) * (a - c) + b * b, 0.0));
      const float r = static_cast<float>(half_tr - det_term);
      response[static_cast<size_t>(y) * w + x] = r;
      max_response = std::max(max_response, r);
    }
  if (max_response <= 1e-6f) return {};  // featureless frame

  const float floor = static_cast<float>(quality) * max_response;
  std::vector<Corner> candidates;
  for (int y = 2; y < h - 2; ++y)
    for (int x = 2; x < w - 2; ++x) {
      const float r = response[static_cast<size_t>(y) * w + x];
      if (r < floor) continue;
      bool local_max = true;
      for (int dy = -1; dy <= 1 && local_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (response[static_cast<size_t>(y + dy) * w + (x + dx)] > r) {
            local_max = false;
            break;
          }
        }
      if (local_max) candidates.push_back({Vec2(x, y), r});
    }

  std::sort(candidates.begin(), candidates.end(),
            [](const Corner& lhs, const Corner& rhs) { return lhs.response > rhs.response; });

  // greedy spatial suppression on a coarse grid
  const double cell = std::max(min_distance, 1.0);
  const int gw = static_cast<int>(w / cell) + 1, gh = static_cast<int>(h / cell) + 1;
  std::vector<std::vector<Vec2>> grid(static_cast<size_t>(gw) * gh);
  std::vector<Corner> out;
  const double min_d2 = min_distance * min_distance;
  for (const auto& cand : candidates) {
    if (static_cast<int>(out.size()) >= max_corners) break;
    const int cx = static_cast<int>(cand.position.x() / cell);
    const int cy = static_cast<int>(cand.position.y() / cell);
    bool keep = true;
    for (int gy = std::max(0, cy - 1); gy <= std::min(gh - 1, cy + 1) && keep; ++gy)
      for (int gx = std::max(0, cx - 1); gx <= std::min(gw - 1, cx + 1); ++gx) {
        for (const auto& p : grid[static_cast<size_t>(gy) * gw + gx])
          if ((p - cand.position).squaredNorm() < min_d2) {
            keep = false;
            break;
          }
        if (!keep) break;
      }
    if (!keep) continue;
    grid[static_cast<size_t>(cy) * gw + cx].push_back(cand.position);
    out.push_back(cand);
  }
  return out;
}

}  // namespace wslam
