#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace pcvqa {

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend constexpr bool operator==(const Rgb8&, const Rgb8&) = default;
};

/// Row-major interleaved RGB8 image.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  static Frame filled(int width, int height, Rgb8 color);

  Rgb8 at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  void set(int x, int y, Rgb8 c) {
    const std::size_t i = index(x, y);
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
  }
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
  }
  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Floating-point RGB image with channels nominally in [0, 1]; the feature
/// extractors work on this so they are not tied to 8-bit quantization.
struct ImageF {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;  // interleaved, row-major

  static ImageF from_frame(const Frame& f);
  double r(int x, int y) const { return rgb[idx(x, y)]; }
  double g(int x, int y) const { return rgb[idx(x, y) + 1]; }
  double b(int x, int y) const { return rgb[idx(x, y) + 2]; }
  std::size_t idx(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
  }
};

/// Bilinear full-frame resample (pixel-center aligned). Downscaling only;
/// throws ValidationError if either target dimension exceeds the source.
Frame resize_frame(const Frame& src, int width, int height);

enum class CropMode { center, random };

inline constexpr int kPatchSize = 224;

/// Square patch. Center mode uses the floor-centered window; random mode
/// draws the top-left corner uniformly from the valid offsets with `seed`.
Frame crop_patch(const Frame& frame, int size = kPatchSize, CropMode mode = CropMode::center,
                 std::uint64_t seed = 0);

/// Top-left corner crop_patch would use.
std::pair<int, int> crop_origin(int frame_width, int frame_height, int size, CropMode mode,
                                std::uint64_t seed);

void write_png(const std::filesystem::path& path, const Frame& frame);
Frame read_png(const std::filesystem::path& path);

/// Raw dump: width u32 LE, height u32 LE, then width*height*3 bytes.
std::vector<std::uint8_t> encode_raw(const Frame& frame);
Frame decode_raw(std::span<const std::uint8_t> bytes);

}  // namespace pcvqa
