#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "pcvqa/error.hpp"
#include "pcvqa/image.hpp"
#include "test_util.hpp"

using namespace pcvqa;

TEST(Resize, ConstantStaysConstant) {
  const Frame src = Frame::filled(1920, 1080, {12, 200, 99});
  const Frame dst = resize_frame(src, 224, 224);
  EXPECT_EQ(dst, Frame::filled(224, 224, {12, 200, 99}));
}

TEST(Resize, CheckerboardAveragesToMidGray) {
  // One-pixel checker with a 2x2 period.
  Frame src = Frame::filled(448, 448, {0, 0, 0});
  for (int y = 0; y < 448; ++y) {
    for (int x = 0; x < 448; ++x) {
      if ((x + y) % 2) src.set(x, y, {255, 255, 255});
    }
  }
  const Frame dst = resize_frame(src, 224, 224);
  for (const auto v : dst.pixels) EXPECT_LE(std::abs(v / 255.0 - 0.5), 1.0 / 255);
}

TEST(Resize, ExactHalvingIsBlockMean) {
  // Half-pixel-centred bilinear at scale 2 samples midway between source pixels.
  Rng rng(8);
  const Frame src = testutil::random_frame(64, 48, rng);
  const Frame dst = resize_frame(src, 32, 24);
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 32; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        const double m = (src.pixels[src.index(2 * x, 2 * y) + ch] + src.pixels[src.index(2 * x + 1, 2 * y) + ch] +
                          src.pixels[src.index(2 * x, 2 * y + 1) + ch] + src.pixels[src.index(2 * x + 1, 2 * y + 1) + ch]) /
                         4.0;
        EXPECT_LE(std::abs(dst.pixels[dst.index(x, y) + ch] - m), 0.5 + 1e-9);
      }
    }
  }
}

TEST(Resize, RejectsUpscaling) {
  const Frame src = Frame::filled(100, 300, {1, 2, 3});
  EXPECT_THROW(resize_frame(src, 224, 224), ValidationError);
  EXPECT_NO_THROW(resize_frame(src, 100, 224));
}

TEST(Resize, ClipDimensions) {
  Clip clip{PathwayId::B, std::vector<Frame>(30, Frame::filled(320, 240, {5, 5, 5}))};
  const Clip small = resize_clip(clip);
  EXPECT_EQ(small.pathway, PathwayId::B);
  ASSERT_EQ(small.frames.size(), 30u);
  for (const auto& f : small.frames) {
    EXPECT_EQ(f.width, 224);
    EXPECT_EQ(f.height, 224);
  }
}

TEST(Crop, IdentityOnPatchSizedFrame) {
  Rng rng(1);
  const Frame f = testutil::random_frame(224, 224, rng);
  EXPECT_EQ(crop_patch(f, 224, CropMode::center), f);
  EXPECT_EQ(crop_patch(f, 224, CropMode::random, 77), f);
}

TEST(Crop, CenterOfFullHd) {
  EXPECT_EQ(crop_origin(1920, 1080, 224, CropMode::center, 0), std::make_pair(848, 428));
  Rng rng(2);
  const Frame f = testutil::random_frame(1920, 1080, rng);
  const Frame p = crop_patch(f, 224, CropMode::center);
  EXPECT_EQ(p.at(0, 0), f.at(848, 428));
  EXPECT_EQ(p.at(223, 223), f.at(848 + 223, 428 + 223));
}

TEST(Crop, RandomIsSeededAndInRange) {
  const auto a = crop_origin(1920, 1080, 224, CropMode::random, 1234);
  EXPECT_EQ(a, crop_origin(1920, 1080, 224, CropMode::random, 1234));
  bool differs = false;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto [x, y] = crop_origin(1920, 1080, 224, CropMode::random, s);
    ASSERT_GE(x, 0);
    ASSERT_LE(x, 1920 - 224);
    ASSERT_GE(y, 0);
    ASSERT_LE(y, 1080 - 224);
    differs = differs || std::make_pair(x, y) != a;
  }
  EXPECT_TRUE(differs);
  EXPECT_THROW(crop_origin(200, 1080, 224, CropMode::center, 0), ValidationError);
}

TEST(ImageF, FromFrameScalesToUnit) {
  Frame f = Frame::filled(2, 1, {255, 0, 51});
  const ImageF img = ImageF::from_frame(f);
  EXPECT_DOUBLE_EQ(img.r(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(img.g(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(img.b(1, 0), 0.2);
}

TEST(FrameIo, PngRoundTrip) {
  testutil::TempDir dir("png");
  Rng rng(3);
  const Frame f = testutil::random_frame(37, 21, rng);
  write_png(dir / "f.png", f);
  EXPECT_EQ(read_png(dir / "f.png"), f);
  EXPECT_THROW(read_png(dir / "none.png"), IoError);
  std::ofstream(dir / "junk.png") << "not a png";
  EXPECT_THROW(read_png(dir / "junk.png"), Error);
}

TEST(FrameIo, RawRoundTripAndHeader) {
  Rng rng(4);
  const Frame f = testutil::random_frame(5, 3, rng);
  const auto bytes = encode_raw(f);
  ASSERT_EQ(bytes.size(), 8u + 5 * 3 * 3);
  EXPECT_EQ(bytes[0], 5);
  EXPECT_EQ(bytes[4], 3);
  EXPECT_EQ(decode_raw(bytes), f);
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 1);
  EXPECT_THROW(decode_raw(cut), ParseError);
}
