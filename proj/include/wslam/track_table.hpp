#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "wslam/gftt.hpp"
#include "wslam/lucas_kanade.hpp"
#include "wslam/types.hpp"

namespace wslam {

struct Frame {
  FrameIndex index = 0;
  double timestamp = 0.0;
  Image image;  // may be empty when tracks are ingested
};

struct TrackerConfig {
  int max_corners = 800;
  double quality = 0.01;
  double min_distance = 10.0;
  LkConfig lk;

  // Corners closer than this to the border do not seed new tracks; pyramidal
  // LK cannot hold them through the coarse levels.
  double spawn_margin() const { return lk.window / 2.0; }
};

struct TrackObservation {
  FrameIndex frame = 0;
  Vec2 px = Vec2::Zero();
};

struct Track {
  TrackId id = 0;
  std::vector<TrackObservation> obs;
  bool alive = true;
  std::vector<double> fb_history;

  FrameIndex first_frame() const { return obs.front().frame; }
  FrameIndex last_frame() const { return obs.back().frame; }
  const Vec2& last_position() const { return obs.back().px; }

  const Vec2* position_at(FrameIndex f) const {
    if (obs.empty() || f < obs.front().frame || f > obs.back().frame) return nullptr;
    const auto& o = obs[static_cast<size_t>(f - obs.front().frame)];
    return o.frame == f ? &o.px : nullptr;  // contiguity makes this O(1)
  }
};

enum class KeyframeReason { PeriodElapsed, FlowThreshold };

struct KeyframeDecision {
  FrameIndex frame_index = 0;
  KeyframeReason reason = KeyframeReason::PeriodElapsed;
  double mean_flow = 0.0;
};

// Designates a keyframe every P frames or as soon as the mean optical flow
// accumulated since the last keyframe crosses m pixels, whichever first.
inline std::optional<KeyframeDecision> decide_keyframe(double mean_flow_since_kf,
                                                       int frames_since_kf,
                                                       FrameIndex current_frame, int period = 30,
                                                       double flow_threshold = 20.0) {
  if (period < 1 || flow_threshold <= 0)
    throw ConfigError("decide_keyframe: period must be >= 1 and flow threshold positive");
  if (mean_flow_since_kf < 0) throw ConfigError("decide_keyframe: negative mean flow");
  if (mean_flow_since_kf >= flow_threshold)
    return KeyframeDecision{current_frame, KeyframeReason::FlowThreshold, mean_flow_since_kf};
  if (frames_since_kf >= period)
    return KeyframeDecision{current_frame, KeyframeReason::PeriodElapsed, mean_flow_since_kf};
  return std::nullopt;
}

// Feature tracks over a frame sequence. Frames advance one at a time; alive
// tracks are extended by bidirectional LK, dead ones are closed, and new
// corners are spawned to keep max_corners alive.
class TrackTable {
 public:
  const std::map<TrackId, Track>& tracks() const { return tracks_; }
  FrameIndex last_frame() const { return last_frame_; }
  bool empty() const { return tracks_.empty(); }

  std::vector<TrackId> alive_ids() const {
    std::vector<TrackId> ids;
    for (const auto& [id, t] : tracks_)
      if (t.alive) ids.push_back(id);
    return ids;
  }

  // Observations present at a frame: (track_id, pixel).
  std::vector<std::pair<TrackId, Vec2>> observations_at(FrameIndex f) const {
    std::vector<std::pair<TrackId, Vec2>> out;
    for (const auto& [id, t] : tracks_)
      if (const Vec2* p = t.position_at(f)) out.emplace_back(id, *p);
    return out;
  }

  // LK path: extend alive tracks into the new frame and refill with corners.
  void advance(const Frame& frame, const TrackerConfig& cfg) {
    if (frame.image.empty()) throw EmptyImage("TrackTable::advance: frame has no image");
    if (last_frame_ >= 0 && frame.index != last_frame_ + 1)
      throw NonContiguousFrame("TrackTable::advance: frame indices must be contiguous");

    if (last_frame_ < 0) {
      spawn_corners(frame, cfg);
    } else {
      std::vector<TrackId> ids;
      std::vector<Vec2> pts;
      for (auto& [id, t] : tracks_)
        if (t.alive) {
          ids.push_back(id);
          pts.push_back(t.last_position());
        }
      if (!pts.empty()) {
        const auto flows = track_bidirectional(prev_image_, frame.image, pts, cfg.lk);
        for (size_t i = 0; i < ids.size(); ++i) {
          Track& t = tracks_[ids[i]];
          if (flows[i].ok && frame.image.contains(flows[i].point.x(), flows[i].point.y())) {
            t.obs.push_back({frame.index, flows[i].point});
            t.fb_history.push_back(flows[i].fb_error);
          } else {
            t.alive = false;
          }
        }
      }
      spawn_corners(frame, cfg);
    }
    prev_image_ = frame.image;
    last_frame_ = frame.index;
  }

  // Ingestion path: append one observation; invariants are enforced.
  void add_observation(TrackId id, FrameIndex frame, const Vec2& px) {
    Track& t = tracks_[id];
    if (t.obs.empty()) {
      t.id = id;
    } else if (frame != t.last_frame() + 1) {
      throw FormatError("track " + std::to_string(id) + ": frames must be contiguous");
    }
    if (!px.allFinite()) throw FormatError("track " + std::to_string(id) + ": non-finite pixel");
    t.obs.push_back({frame, px});
    last_frame_ = std::max(last_frame_, frame);
  }

  void close_all() {
    for (auto& [id, t] : tracks_) t.alive = false;
  }

 private:
  void spawn_corners(const Frame& frame, const TrackerConfig& cfg) {
    int alive = 0;
    std::vector<Vec2> occupied;
    for (const auto& [id, t] : tracks_)
      if (t.alive && t.last_frame() == frame.index) {
        ++alive;
        occupied.push_back(t.last_position());
      }
    if (alive >= cfg.max_corners) return;
    // Over-detect so border- and proximity-filtered candidates can be replaced.
    const auto corners =
        detect_corners(frame.image, 2 * cfg.max_corners, cfg.min_distance, cfg.quality);
    const double min_d2 = cfg.min_distance * cfg.min_distance;
    for (const auto& c : corners) {
      if (alive >= cfg.max_corners) break;
      if (!frame.image.contains(c.position.x(), c.position.y(), cfg.spawn_margin())) continue;
      bool clear = true;
      for (const auto& p : occupied)
        if ((p - c.position).squaredNorm() < min_d2) {
          clear = false;
          break;
        }
      if (!clear) continue;
      Track t;
      t.id = next_id_++;
      t.obs.push_back({frame.index, c.position});
      tracks_[t.id] = std::move(t);
      occupied.push_back(c.position);
      ++alive;
    }
  }

  std::map<TrackId, Track> tracks_;
  Image prev_image_;
  FrameIndex last_frame_ = -1;
  TrackId next_id_ = 0;
};

// --- tracks file: one observation per line, "track_id frame_index x y" ---

inline void save_tracks(const TrackTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  char buf[128];
  for (const auto& [id, t] : table.tracks())
    for (const auto& o : t.obs) {
      std::snprintf(buf, sizeof(buf), "%lld %d %.12g %.12g\n", static_cast<long long>(id), o.frame,
                    o.px.x(), o.px.y());
      out << buf;
    }
}

inline TrackTable load_tracks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  // Observations may appear in any order; collect then validate.
  std::map<TrackId, std::vector<TrackObservation>> raw;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    long long id;
    int frame;
    double x, y;
    if (!(ss >> id >> frame >> x >> y))
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected 'id frame x y'");
    raw[id].push_back({frame, Vec2(x, y)});
  }
  TrackTable table;
  for (auto& [id, obs] : raw) {
    std::sort(obs.begin(), obs.end(),
              [](const TrackObservation& a, const TrackObservation& b) { return a.frame < b.frame; });
    for (const auto& o : obs) table.add_observation(id, o.frame, o.px);
  }
  // Duplicate-coordinate guard: no two tracks may share identical coordinates
  // (within 1e-9) in the same frame.
  std::map<std::tuple<FrameIndex, long long, long long>, TrackId> seen;
  for (const auto& [id, t] : table.tracks())
    for (const auto& o : t.obs) {
      const auto key = std::make_tuple(o.frame, std::llround(o.px.x() * 1e9),
                                       std::llround(o.px.y() * 1e9));
      auto [it, inserted] = seen.emplace(key, id);
      if (!inserted && it->second != id)
        throw FormatError(path + ": duplicate observation coordinates at frame " +
                          std::to_string(o.frame));
    }
  table.close_all();
  return table;
}

}  // namespace wslam
