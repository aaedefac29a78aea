#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "pcvqa/error.hpp"
#include "pcvqa/point_cloud.hpp"
#include "test_util.hpp"

using namespace pcvqa;

namespace {

std::vector<oracle::P3> to_p3(const PointCloud& pc) {
  std::vector<oracle::P3> out;
  for (const auto& p : pc.positions()) out.push_back({p.x, p.y, p.z});
  return out;
}

PointCloud cube_corners() {
  std::vector<Vec3> pos;
  for (int i = 0; i < 8; ++i) pos.push_back({double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1)});
  return PointCloud::create(pos);
}

}  // namespace

TEST(ParsePly, SingleColoredVertex) {
  const auto pc = parse_ply(
      "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n0 0 0 255 0 0\n");
  ASSERT_EQ(pc.size(), 1u);
  EXPECT_EQ(pc.positions()[0], (Vec3{0, 0, 0}));
  EXPECT_EQ(pc.colors()[0], (Color{1, 0, 0}));
  EXPECT_TRUE(pc.has_native_color());
}

TEST(ParsePly, ColorlessDefaultsToMidGray) {
  const auto pc = parse_ply(
      "ply\nformat ascii 1.0\nelement vertex 2\nproperty double x\nproperty double y\nproperty double z\n"
      "end_header\n1 2 3\n4 5 6\n");
  ASSERT_EQ(pc.size(), 2u);
  for (const auto& c : pc.colors()) EXPECT_EQ(c, (Color{0.5, 0.5, 0.5}));
  EXPECT_FALSE(pc.has_native_color());
  EXPECT_EQ(pc.positions()[1], (Vec3{4, 5, 6}));
}

TEST(ParsePly, FloatColorsAndExtraElements) {
  const auto pc = parse_ply(
      "ply\nformat ascii 1.0\ncomment made by hand\nelement camera 1\nproperty float f\n"
      "element vertex 1\nproperty float32 x\nproperty float32 y\nproperty float32 z\nproperty int label\n"
      "property float red\nproperty float green\nproperty float blue\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
      "9.5\n1 2 3 17 0.25 0.5 1\n3 0 0 0\n");
  ASSERT_EQ(pc.size(), 1u);
  EXPECT_EQ(pc.positions()[0], (Vec3{1, 2, 3}));
  EXPECT_EQ(pc.colors()[0], (Color{0.25, 0.5, 1.0}));
}

TEST(ParsePly, Errors) {
  const std::string head = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
                           "property float z\nend_header\n";
  EXPECT_THROW(parse_ply(head + "0 0 0\n"), ParseError);                   // truncated
  EXPECT_THROW(parse_ply(head + "0 0 0\nnan 0 0\n"), ParseError);          // non-finite
  EXPECT_THROW(parse_ply(std::string("plx\n") + head.substr(4)), ParseError);  // bad magic
  EXPECT_THROW(parse_ply("ply\nformat binary_big_endian 1.0\nelement vertex 1\nproperty float x\n"
                         "property float y\nproperty float z\nend_header\n"),
               ParseError);
  EXPECT_THROW(parse_ply("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"),
               ParseError);  // no end_header
  EXPECT_THROW(parse_ply("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
                         "end_header\n0 0\n"),
               ParseError);  // no z
  EXPECT_THROW(parse_ply("ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\n"
                         "property float z\nend_header\n"),
               ValidationError);  // empty cloud
}

TEST(ParsePly, BinaryTruncationIsError) {
  const auto pc = PointCloud::create({{1, 2, 3}, {4, 5, 6}});
  auto bytes = write_ply(pc, PlyEncoding::binary_le);
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(parse_ply(std::span<const std::uint8_t>(bytes)), ParseError);
}

TEST(WritePly, HeaderDeclaresVertexCount) {
  const auto pc = PointCloud::create({{0, 0, 0}});
  const auto bytes = write_ply(pc, PlyEncoding::ascii);
  const std::string text(bytes.begin(), bytes.end());
  EXPECT_NE(text.find("element vertex 1\n"), std::string::npos);
}

TEST(WritePly, RoundTripBothEncodings) {
  Rng rng(17);
  for (const std::size_t n : {1u, 17u, 1000u}) {
    const auto pc = testutil::random_cloud(n, rng, 123.456);
    for (const auto mode : {PlyEncoding::ascii, PlyEncoding::binary_le}) {
      const auto bytes = write_ply(pc, mode);
      const auto back = parse_ply(std::span<const std::uint8_t>(bytes));
      ASSERT_EQ(back.size(), n);
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_EQ(back.positions()[i], pc.positions()[i]);
        EXPECT_LE(std::abs(back.colors()[i].r - pc.colors()[i].r), 1.0 / 255);
        EXPECT_LE(std::abs(back.colors()[i].g - pc.colors()[i].g), 1.0 / 255);
        EXPECT_LE(std::abs(back.colors()[i].b - pc.colors()[i].b), 1.0 / 255);
      }
    }
    const auto a = parse_ply(std::span<const std::uint8_t>(write_ply(pc, PlyEncoding::ascii)));
    const auto b = parse_ply(std::span<const std::uint8_t>(write_ply(pc, PlyEncoding::binary_le)));
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(a.positions()[i], b.positions()[i]);
  }
}

TEST(WritePly, ColorRoundsToNearest) {
  const auto pc = PointCloud::create({{0, 0, 0}}, {{0.5, 1.0 / 255 * 0.49, 1.0 / 255 * 0.51}});
  const auto back = parse_ply(std::span<const std::uint8_t>(write_ply(pc, PlyEncoding::binary_le)));
  EXPECT_EQ(back.colors()[0], (Color{128.0 / 255, 0.0, 1.0 / 255}));
}

TEST(PlyFile, ReadWrite) {
  testutil::TempDir dir("ply");
  Rng rng(2);
  const auto pc = testutil::random_cloud(50, rng);
  write_ply_file(dir / "a.ply", pc, PlyEncoding::binary_le);
  const auto back = read_ply_file(dir / "a.ply");
  EXPECT_EQ(back.size(), 50u);
  EXPECT_THROW(read_ply_file(dir / "missing.ply"), IoError);
}

TEST(PointCloudInvariants, RejectsInvalid) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(PointCloud::create(std::vector<Vec3>{}), ValidationError);
  EXPECT_THROW(PointCloud::create({{0, inf, 0}}), ValidationError);
  EXPECT_THROW(PointCloud::create({{0, 0, 0}}, {}), ValidationError);
  EXPECT_THROW(PointCloud::create({{0, 0, 0}}, {{1.5, 0, 0}}), ValidationError);
}

TEST(MeanCenter, Examples) {
  EXPECT_EQ(mean_center(PointCloud::create({{3, -1, 2}})).xyz, (Vec3{3, -1, 2}));
  const auto c = mean_center(cube_corners()).xyz;
  EXPECT_DOUBLE_EQ(c.x, 0.5);
  EXPECT_DOUBLE_EQ(c.y, 0.5);
  EXPECT_DOUBLE_EQ(c.z, 0.5);
}

TEST(MeanCenter, MatchesCompensatedOracle) {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pc = testutil::random_cloud(5, rng, 1000.0);
    const auto got = mean_center(pc).xyz;
    const auto want = oracle::compensated_mean(to_p3(pc));
    EXPECT_NEAR(got.x, want.x, 1e-12 * std::max(1.0, std::abs(want.x)));
    EXPECT_NEAR(got.y, want.y, 1e-12 * std::max(1.0, std::abs(want.y)));
    EXPECT_NEAR(got.z, want.z, 1e-12 * std::max(1.0, std::abs(want.z)));
  }
}

TEST(MeanCenter, TranslationEquivariant) {
  Rng rng(4);
  const auto pc = testutil::random_cloud(300, rng);
  const Vec3 t{10.25, -3.5, 7.125};
  const auto a = mean_center(pc.translated(t)).xyz;
  const auto b = mean_center(pc).xyz + t;
  EXPECT_NEAR(a.x, b.x, 1e-9);
  EXPECT_NEAR(a.y, b.y, 1e-9);
  EXPECT_NEAR(a.z, b.z, 1e-9);
}

TEST(BoundingRadius, Examples) {
  const auto single = PointCloud::create({{2, 2, 2}});
  EXPECT_EQ(bounding_radius(single, mean_center(single)), 0.0);
  const auto cube = cube_corners();
  EXPECT_NEAR(bounding_radius(cube, Center3{{0.5, 0.5, 0.5}}), std::sqrt(3.0) / 2, 1e-15);
}

TEST(BoundingRadius, MatchesScanAndTransforms) {
  Rng rng(5);
  const auto pc = testutil::random_cloud(500, rng, 3.0);
  const auto c = mean_center(pc);
  const double r = bounding_radius(pc, c);
  EXPECT_EQ(r, oracle::max_distance(to_p3(pc), {c.xyz.x, c.xyz.y, c.xyz.z}));
  const Vec3 t{-40, 2, 9};
  const auto moved = pc.translated(t);
  EXPECT_NEAR(bounding_radius(moved, mean_center(moved)), r, 1e-9 * r);
  const auto big = pc.scaled(3.7);
  EXPECT_NEAR(bounding_radius(big, mean_center(big)), 3.7 * r, 1e-9 * 3.7 * r);
}
