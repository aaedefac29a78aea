#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pcvqa/error.hpp"
#include "pcvqa/renderer.hpp"
#include "pcvqa/toy_dataset.hpp"
#include "test_util.hpp"

using namespace pcvqa;

namespace {

RenderConfig small_config() {
  RenderConfig cfg;
  cfg.width = 320;
  cfg.height = 240;
  return cfg;
}

CameraPose looking_down_x() { return {{-5, 0, 0}, {0, 0, 0}, {0, 0, 1}}; }

std::size_t non_background(const Frame& f, Rgb8 bg) {
  std::size_t n = 0;
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) n += f.at(x, y) == bg ? 0 : 1;
  }
  return n;
}

Vec3 rotate(const Vec3& p, double a) {  // about the z axis
  return {std::cos(a) * p.x - std::sin(a) * p.y, std::sin(a) * p.x + std::cos(a) * p.y, p.z};
}

}  // namespace

TEST(Render, PointOnOpticalAxisLandsAtCenter) {
  const auto pc = PointCloud::create({{0, 0, 0}}, {{1, 0, 0}});
  const RenderConfig cfg = small_config();
  const Frame f = render_frame(pc, looking_down_x(), cfg);
  int minx = 1 << 30, maxx = -1, miny = 1 << 30, maxy = -1;
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      if (f.at(x, y) == Rgb8{255, 0, 0}) {
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
        miny = std::min(miny, y);
        maxy = std::max(maxy, y);
      }
    }
  }
  ASSERT_GE(maxx, 0);
  EXPECT_EQ(maxx - minx, 2);  // 3x3 splat
  EXPECT_EQ(maxy - miny, 2);
  EXPECT_LE(std::abs(0.5 * (minx + maxx) - cfg.width / 2.0), 1.0);
  EXPECT_LE(std::abs(0.5 * (miny + maxy) - cfg.height / 2.0), 1.0);
}

TEST(Render, PointBehindCameraIsCulled) {
  const auto pc = PointCloud::create({{-10, 0, 0}}, {{0, 0, 0}});
  const RenderConfig cfg = small_config();
  EXPECT_EQ(render_frame(pc, looking_down_x(), cfg), Frame::filled(cfg.width, cfg.height, cfg.background));
}

TEST(Render, NearerPointWinsRegardlessOfOrder) {
  // Both on the optical axis: same pixel, depths 4 and 6.
  const auto near_first = PointCloud::create({{-1, 0, 0}, {1, 0, 0}}, {{0, 0, 1}, {0, 1, 0}});
  const auto far_first = PointCloud::create({{1, 0, 0}, {-1, 0, 0}}, {{0, 1, 0}, {0, 0, 1}});
  const RenderConfig cfg = small_config();
  const Frame a = render_frame(near_first, looking_down_x(), cfg);
  const Frame b = render_frame(far_first, looking_down_x(), cfg);
  EXPECT_EQ(a.at(cfg.width / 2, cfg.height / 2), (Rgb8{0, 0, 255}));
  EXPECT_EQ(a, b);
}

TEST(Render, DepthTieKeepsLowestIndex) {
  const auto pc = PointCloud::create({{0, 0, 0}, {0, 0, 0}}, {{1, 0, 0}, {0, 1, 0}});
  const RenderConfig cfg = small_config();
  EXPECT_EQ(render_frame(pc, looking_down_x(), cfg).at(cfg.width / 2, cfg.height / 2), (Rgb8{255, 0, 0}));
}

TEST(Render, OutsideFrustumIsCulled) {
  const auto pc = PointCloud::create({{0, 100, 0}, {0, 0, 100}}, {{0, 0, 0}, {0, 0, 0}});
  RenderConfig cfg = small_config();
  EXPECT_EQ(non_background(render_frame(pc, looking_down_x(), cfg), cfg.background), 0u);
  cfg.far_plane = 4.0;  // origin sits at depth 5
  const auto on_axis = PointCloud::create({{0, 0, 0}}, {{0, 0, 0}});
  EXPECT_EQ(non_background(render_frame(on_axis, looking_down_x(), cfg), cfg.background), 0u);
}

TEST(Render, Errors) {
  const auto pc = PointCloud::create({{0, 0, 0}});
  RenderConfig cfg = small_config();
  EXPECT_THROW(render_frame(pc, {{1, 1, 1}, {1, 1, 1}, {0, 0, 1}}, cfg), ValidationError);
  EXPECT_THROW(render_frame(pc, {{0, 0, 5}, {0, 0, 0}, {0, 0, 1}}, cfg), ValidationError);
  cfg.width = 0;
  EXPECT_THROW(render_frame(pc, looking_down_x(), cfg), ValidationError);
  cfg = small_config();
  cfg.splat_radius = -1;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Render, PermutationInvariantWithDistinctDepths) {
  Rng rng(6);
  const auto pc = testutil::random_cloud(400, rng);
  std::vector<Vec3> pos(pc.positions().begin(), pc.positions().end());
  std::vector<Color> col(pc.colors().begin(), pc.colors().end());
  std::reverse(pos.begin(), pos.end());
  std::reverse(col.begin(), col.end());
  const auto rev = PointCloud::create(pos, col);
  const RenderConfig cfg = small_config();
  const auto seq = build_sequence(mean_center(pc), 4.0, 72.0);
  for (const auto& t : seq) {
    for (const auto& pose : t.poses) EXPECT_EQ(render_frame(pc, pose, cfg), render_frame(rev, pose, cfg));
  }
}

TEST(Render, RigidRotationLeavesFrameNearlyUnchanged) {
  Rng rng(9);
  std::vector<Vec3> pos;
  std::vector<Color> col;
  for (int i = 0; i < 30; ++i) {
    pos.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    col.push_back({0, 0, 0});
  }
  RenderConfig cfg = small_config();
  cfg.splat_radius = 0;
  const auto pc = PointCloud::create(pos, col);
  const double a = 0.7;
  std::vector<Vec3> rpos;
  for (const auto& p : pos) rpos.push_back(rotate(p, a));
  const auto rpc = PointCloud::create(rpos, col);
  const CameraPose pose{{4, 1, 0.5}, {0, 0, 0}, {0, 0, 1}};
  const CameraPose rpose{rotate(pose.position, a), {0, 0, 0}, {0, 0, 1}};
  const Frame f = render_frame(pc, pose, cfg);
  const Frame g = render_frame(rpc, rpose, cfg);
  // Every drawn pixel in one frame has a drawn pixel within 1 px in the other.
  const auto near_drawn = [&](const Frame& other, int x, int y) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int xx = x + dx, yy = y + dy;
        if (xx >= 0 && yy >= 0 && xx < other.width && yy < other.height && other.at(xx, yy) == Rgb8{0, 0, 0}) return true;
      }
    }
    return false;
  };
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      if (f.at(x, y) == Rgb8{0, 0, 0}) {
        EXPECT_TRUE(near_drawn(g, x, y));
      }
      if (g.at(x, y) == Rgb8{0, 0, 0}) {
        EXPECT_TRUE(near_drawn(f, x, y));
      }
    }
  }
}

TEST(Capture, StructureDeterminismAndCoverage) {
  const auto sphere = make_shape(ToyShape::sphere, 3000);
  const auto c = mean_center(sphere);
  const double b = bounding_radius(sphere, c);
  const double r = choose_radius(b);
  const RenderConfig cfg = with_clip_planes(small_config(), r, b);
  const auto seq = build_sequence(c, r);
  const auto v1 = capture_video(sphere, seq, cfg);
  const auto v2 = capture_video(sphere, seq, cfg, 3);
  ASSERT_EQ(v1.clips.size(), 4u);
  EXPECT_EQ(v1.frame_count(), 120u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(v1.clips[i].pathway, kAllPathways[i]);
    ASSERT_EQ(v1.clips[i].frames.size(), 30u);
    for (std::size_t k = 0; k < 30; ++k) {
      EXPECT_EQ(v1.clips[i].frames[k], v2.clips[i].frames[k]);
      EXPECT_GT(non_background(v1.clips[i].frames[k], cfg.background), 0u);
      EXPECT_EQ(v1.clips[i].frames[k], render_frame(sphere, seq[i].poses[k], cfg));
    }
  }
  std::size_t streamed = 0;
  capture_video_streaming(sphere, seq, cfg, [&](std::size_t ci, std::size_t k, const Frame& f) {
    EXPECT_EQ(f, v1.clips[ci].frames[k]);
    ++streamed;
  });
  EXPECT_EQ(streamed, 120u);
}

TEST(Capture, ClipPlanes) {
  const RenderConfig cfg = with_clip_planes(RenderConfig{}, 2.5, 1.0);
  EXPECT_DOUBLE_EQ(cfg.near_plane, 0.75);
  EXPECT_DOUBLE_EQ(cfg.far_plane, 7.0);
  EXPECT_GT(with_clip_planes(RenderConfig{}, 1.0, 1.0).near_plane, 0.0);
}

TEST(Capture, ExportImportClip) {
  testutil::TempDir dir("clip");
  Rng rng(10);
  Clip clip{PathwayId::C, {}};
  for (int k = 0; k < 3; ++k) clip.frames.push_back(testutil::random_frame(16, 8, rng));
  export_clip(dir.path(), clip);
  const Clip back = import_clip(dir.path());
  EXPECT_EQ(back.pathway, PathwayId::C);
  ASSERT_EQ(back.frames.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(back.frames[k], clip.frames[k]);
  EXPECT_THROW(import_clip(dir / "nope"), IoError);
}
