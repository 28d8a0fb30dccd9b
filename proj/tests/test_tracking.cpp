#include <catch_amalgamated.hpp>

#include <filesystem>

#include "test_helpers.hpp"
#include "wslam/gftt.hpp"
#include "wslam/image.hpp"
#include "wslam/lucas_kanade.hpp"
#include "wslam/track_table.hpp"

using namespace wslam;

namespace {

// Band-limited analytic texture: sum of random cosine waves. Sampling it at
// shifted coordinates gives an exact continuous translation of the image.
struct CosineTexture {
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves;

  static CosineTexture make(std::uint64_t seed, int n_waves = 40) {
    CosineTexture t;
    auto rng = testing::make_rng(seed);
    std::uniform_real_distribution<double> uf(0.02, 0.25);
    std::uniform_real_distribution<double> up(0.0, 2.0 * kPi);
    std::uniform_real_distribution<double> ua(2.0, 8.0);
    for (int i = 0; i < n_waves; ++i)
      t.waves.push_back({uf(rng), uf(rng), up(rng), ua(rng)});
    return t;
  }

  double operator()(double x, double y) const {
    double v = 128.0;
    for (const auto& w : waves) v += w.amp * std::cos(w.fx * x + w.fy * y + w.phase);
    return std::clamp(v, 0.0, 255.0);
  }

  Image render(int w, int h, double shift_x = 0.0, double shift_y = 0.0) const {
    Image img = Image::create(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<float>((*this)(x - shift_x, y - shift_y));
    return img;
  }
};

Image four_squares_image() {
  Image img = Image::create(120, 120, 0.f);
  const int corners[4][2] = {{20, 20}, {70, 20}, {20, 70}, {70, 70}};
  for (const auto& c : corners)
    for (int y = c[1]; y < c[1] + 24; ++y)
      for (int x = c[0]; x < c[0] + 24; ++x) img.at(x, y) = 255.f;
  return img;
}

}  // namespace

TEST_CASE("constant image has no corners") {
  REQUIRE(detect_corners(Image::create(64, 64, 100.f), 100, 5, 0.01).empty());
}

TEST_CASE("empty image is rejected") {
  REQUIRE_THROWS_AS(detect_corners(Image{}, 10, 5, 0.01), EmptyImage);
}

TEST_CASE("four isolated squares yield corners near their vertices") {
  const Image img = four_squares_image();
  const auto corners = detect_corners(img, 100, 5, 0.05);
  REQUIRE(corners.size() >= 4);
  // Every square vertex set; each detection must be within 2 px of one.
  std::vector<Vec2> expected;
  const int base[4][2] = {{20, 20}, {70, 20}, {20, 70}, {70, 70}};
  for (const auto& c : base) {
    // square spans [c, c+24); boundary pixels are c-ish and c+23-ish
    expected.emplace_back(c[0], c[1]);
    expected.emplace_back(c[0] + 23, c[1]);
    expected.emplace_back(c[0], c[1] + 23);
    expected.emplace_back(c[0] + 23, c[1] + 23);
  }
  int near_vertex = 0;
  for (const auto& det : corners) {
    double best = 1e9;
    for (const auto& e : expected) best = std::min(best, (det.position - e).norm());
    if (best <= 2.0) ++near_vertex;
  }
  REQUIRE(near_vertex >= 4);
}

TEST_CASE("corner count cap returns the strongest responses sorted") {
  const auto tex = CosineTexture::make(7);
  const Image img = tex.render(160, 120);
  const auto corners = detect_corners(img, 10, 3, 0.001);
  REQUIRE(corners.size() == 10);
  for (size_t i = 1; i < corners.size(); ++i)
    REQUIRE(corners[i - 1].response >= corners[i].response);
}

TEST_CASE("min distance is respected") {
  const auto tex = CosineTexture::make(8);
  const Image img = tex.render(160, 120);
  const auto corners = detect_corners(img, 200, 12.0, 0.001);
  for (size_t i = 0; i < corners.size(); ++i)
    for (size_t j = i + 1; j < corners.size(); ++j)
      REQUIRE((corners[i].position - corners[j].position).norm() >= 12.0);
}

TEST_CASE("LK recovers a synthetic translation to subpixel accuracy") {
  const auto tex = CosineTexture::make(21);
  const Image prev = tex.render(200, 150);
  const Image next = tex.render(200, 150, 3.0, 0.0);
  const auto corners = detect_corners(prev, 40, 8, 0.01);
  REQUIRE(corners.size() >= 20);
  std::vector<Vec2> pts;
  for (const auto& c : corners)
    if (prev.contains(c.position.x(), c.position.y(), 20)) pts.push_back(c.position);
  REQUIRE(pts.size() >= 10);
  const auto flows = track_bidirectional(prev, next, pts);
  int tracked = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    if (!flows[i].ok) continue;
    ++tracked;
    REQUIRE((flows[i].point - (pts[i] + Vec2(3, 0))).norm() < 0.1);
    REQUIRE(flows[i].fb_error < 0.05);
  }
  REQUIRE(tracked >= static_cast<int>(pts.size() * 0.9));
}

TEST_CASE("identity frame gives zero displacement") {
  const auto tex = CosineTexture::make(22);
  const Image prev = tex.render(160, 120);
  std::vector<Vec2> pts = {Vec2(60, 60), Vec2(90, 40), Vec2(40, 80)};
  const auto flows = track_bidirectional(prev, prev, pts);
  for (size_t i = 0; i < pts.size(); ++i) {
    REQUIRE(flows[i].ok);
    REQUIRE((flows[i].point - pts[i]).norm() < 1e-3);
    REQUIRE(flows[i].fb_error < 1e-3);
  }
}

TEST_CASE("textureless regions are rejected") {
  Image prev = Image::create(160, 120, 50.f);
  // texture only in the left half
  const auto tex = CosineTexture::make(23);
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x < 70; ++x) prev.at(x, y) = static_cast<float>(tex(x, y));
  const auto flows = track_bidirectional(prev, prev, {Vec2(120, 60)});
  REQUIRE_FALSE(flows[0].ok);
}

TEST_CASE("dimension mismatch is rejected") {
  REQUIRE_THROWS_AS(
      track_bidirectional(Image::create(64, 64), Image::create(32, 32), {Vec2(10, 10)}),
      DimensionMismatch);
}

TEST_CASE("first frame fills the table with single-observation tracks") {
  const auto tex = CosineTexture::make(31);
  TrackTable table;
  TrackerConfig cfg;
  cfg.max_corners = 50;
  cfg.min_distance = 8;
  table.advance(Frame{0, 0.0, tex.render(200, 150)}, cfg);
  REQUIRE(table.tracks().size() == 50);
  for (const auto& [id, t] : table.tracks()) {
    REQUIRE(t.obs.size() == 1);
    REQUIRE(t.alive);
  }
}

TEST_CASE("static scene keeps all tracks alive for ten frames") {
  const auto tex = CosineTexture::make(32);
  const Image img = tex.render(200, 150);
  TrackTable table;
  TrackerConfig cfg;
  cfg.max_corners = 40;
  cfg.min_distance = 10;
  for (int f = 0; f < 10; ++f) table.advance(Frame{f, f / 30.0, img}, cfg);
  int full_length = 0;
  for (const auto& [id, t] : table.tracks())
    if (t.alive && static_cast<int>(t.obs.size()) == 10) ++full_length;
  REQUIRE(full_length >= 35);
  // Every alive track's last observation is at the current frame.
  for (const auto& [id, t] : table.tracks())
    if (t.alive) REQUIRE(t.last_frame() == 9);
}

TEST_CASE("corrupting half the image kills and refills tracks") {
  const auto tex = CosineTexture::make(33);
  TrackTable table;
  TrackerConfig cfg;
  cfg.max_corners = 60;
  cfg.min_distance = 8;
  for (int f = 0; f < 5; ++f) table.advance(Frame{f, f / 30.0, tex.render(200, 150)}, cfg);
  const int before = static_cast<int>(table.alive_ids().size());

  // Replace the right half with fresh noise, breaking appearance there.
  Image corrupted = tex.render(200, 150);
  auto rng = testing::make_rng(99);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  for (int y = 0; y < 150; ++y)
    for (int x = 100; x < 200; ++x) corrupted.at(x, y) = static_cast<float>(u(rng));
  table.advance(Frame{5, 5 / 30.0, corrupted}, cfg);

  int died = 0;
  for (const auto& [id, t] : table.tracks())
    if (!t.alive && t.last_frame() == 4) ++died;
  REQUIRE(died >= static_cast<int>(0.4 * before * 0.5));  // >= 40% of right-half tracks
  // refilled in the same frame
  int alive_now = 0;
  for (const auto& [id, t] : table.tracks())
    if (t.alive && t.last_frame() == 5) ++alive_now;
  REQUIRE(alive_now >= before / 2);
}

TEST_CASE("non-contiguous frames are rejected") {
  const auto tex = CosineTexture::make(34);
  TrackTable table;
  TrackerConfig cfg;
  table.advance(Frame{0, 0.0, tex.render(100, 100)}, cfg);
  REQUIRE_THROWS_AS(table.advance(Frame{2, 0.1, tex.render(100, 100)}, cfg), NonContiguousFrame);
}

TEST_CASE("keyframe cadence under zero flow follows the period") {
  std::vector<FrameIndex> kfs;
  int frames_since = 0;
  for (int f = 1; f <= 95; ++f) {
    ++frames_since;
    if (auto d = decide_keyframe(0.0, frames_since, f)) {
      REQUIRE(d->reason == KeyframeReason::PeriodElapsed);
      kfs.push_back(d->frame_index);
      frames_since = 0;
    }
  }
  REQUIRE(kfs == std::vector<FrameIndex>{30, 60, 90});
}

TEST_CASE("flow threshold fires before the period") {
  // 4 px/frame of accumulated mean flow crosses m=20 at frame 5.
  int frames_since = 0;
  std::optional<KeyframeDecision> hit;
  for (int f = 1; f <= 30 && !hit; ++f) {
    ++frames_since;
    hit = decide_keyframe(4.0 * frames_since, frames_since, f);
  }
  REQUIRE(hit.has_value());
  REQUIRE(hit->frame_index == 5);
  REQUIRE(hit->reason == KeyframeReason::FlowThreshold);

  // 0.5 px/frame never reaches m: period fires at 30.
  frames_since = 0;
  hit.reset();
  for (int f = 1; f <= 40 && !hit; ++f) {
    ++frames_since;
    hit = decide_keyframe(0.5 * frames_since, frames_since, f);
  }
  REQUIRE(hit->frame_index == 30);
  REQUIRE(hit->reason == KeyframeReason::PeriodElapsed);
}

TEST_CASE("keyframe spacing never exceeds the period") {
  auto rng = testing::make_rng(35);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  int frames_since = 0;
  FrameIndex last_kf = 0;
  double flow = 0;
  for (int f = 1; f < 500; ++f) {
    ++frames_since;
    flow += u(rng);
    if (auto d = decide_keyframe(flow, frames_since, f)) {
      REQUIRE(d->frame_index - last_kf <= 30);
      last_kf = d->frame_index;
      frames_since = 0;
      flow = 0;
    }
  }
}

TEST_CASE("tracks file round trip preserves observations") {
  TrackTable table;
  table.add_observation(3, 0, Vec2(10.123456789, 20.5));
  table.add_observation(3, 1, Vec2(11.0, 21.25));
  table.add_observation(7, 5, Vec2(100.0, 200.0));
  const std::string path = (std::filesystem::temp_directory_path() / "wslam_tracks_test.txt").string();
  save_tracks(table, path);
  const TrackTable loaded = load_tracks(path);
  REQUIRE(loaded.tracks().size() == 2);
  const auto& t3 = loaded.tracks().at(3);
  REQUIRE(t3.obs.size() == 2);
  REQUIRE(t3.obs[0].px.x() == Catch::Approx(10.123456789).epsilon(1e-9));
  REQUIRE(t3.obs[1].frame == 1);
  std::filesystem::remove(path);
}

TEST_CASE("tracks file validation rejects malformed input") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path();

  {
    const std::string p = (dir / "wslam_bad1.txt").string();
    std::ofstream(p) << "1 0 10.0\n";  // missing column
    REQUIRE_THROWS_AS(load_tracks(p), FormatError);
    fs::remove(p);
  }
  {
    const std::string p = (dir / "wslam_bad2.txt").string();
    std::ofstream(p) << "1 0 10 10\n1 2 11 11\n";  // gap in frames
    REQUIRE_THROWS_AS(load_tracks(p), FormatError);
    fs::remove(p);
  }
  {
    const std::string p = (dir / "wslam_bad3.txt").string();
    std::ofstream(p) << "1 0 10 10\n2 0 10 10\n";  // duplicate coordinates
    REQUIRE_THROWS_AS(load_tracks(p), FormatError);
    fs::remove(p);
  }
}

TEST_CASE("PGM round trip") {
  const auto tex = CosineTexture::make(36);
  const Image img = tex.render(64, 48);
  const std::string path = (std::filesystem::temp_directory_path() / "wslam_img_test.pgm").string();
  save_pgm(img, path);
  const Image back = load_pgm(path);
  REQUIRE(back.width == 64);
  REQUIRE(back.height == 48);
  double max_err = 0;
  for (size_t i = 0; i < img.data.size(); ++i)
    max_err = std::max(max_err, std::abs(double(img.data[i]) - back.data[i]));
  REQUIRE(max_err <= 1.0);  // 8-bit quantization
  std::filesystem::remove(path);
}

TEST_CASE("sequence reversal keeps tracking consistent on a rigid scene") {
  // Track a drifting texture forward and backward; matched positions of
  // corresponding frames must agree for nearly all observations.
  const auto tex = CosineTexture::make(37);
  const int n = 6;
  std::vector<Image> frames;
  for (int f = 0; f < n; ++f) frames.push_back(tex.render(180, 140, 1.5 * f, 0.7 * f));

  TrackerConfig cfg;
  cfg.max_corners = 40;
  cfg.min_distance = 10;
  TrackTable fwd, bwd;
  for (int f = 0; f < n; ++f) fwd.advance(Frame{f, f / 30.0, frames[static_cast<size_t>(f)]}, cfg);
  for (int f = 0; f < n; ++f)
    bwd.advance(Frame{f, f / 30.0, frames[static_cast<size_t>(n - 1 - f)]}, cfg);

  // Compare per-frame observation sets: every forward observation should have
  // a backward observation at the same location in the corresponding frame.
  int matched = 0, total = 0;
  for (int f = 0; f < n; ++f) {
    const auto obs_f = fwd.observations_at(f);
    const auto obs_b = bwd.observations_at(n - 1 - f);
    for (const auto& [id, p] : obs_f) {
      ++total;
      for (const auto& [id2, q] : obs_b)
        if ((p - q).norm() < 0.5) {
          ++matched;
          break;
        }
    }
  }
  REQUIRE(total > 0);
  REQUIRE(matched >= static_cast<int>(0.95 * total));
}
