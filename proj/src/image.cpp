#include "pcvqa/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include "pcvqa/error.hpp"
#include "pcvqa/random.hpp"

namespace pcvqa {

Frame Frame::filled(int width, int height, Rgb8 color) {
  if (width <= 0 || height <= 0) throw ValidationError("frame dimensions must be positive");
  Frame f;
  f.width = width;
  f.height = height;
  f.pixels.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < f.pixels.size(); i += 3) {
    f.pixels[i] = color.r;
    f.pixels[i + 1] = color.g;
    f.pixels[i + 2] = color.b;
  }
  return f;
}

ImageF ImageF::from_frame(const Frame& f) {
  ImageF img;
  img.width = f.width;
  img.height = f.height;
  img.rgb.resize(f.pixels.size());
  for (std::size_t i = 0; i < f.pixels.size(); ++i) img.rgb[i] = f.pixels[i] / 255.0;
  return img;
}

Frame resize_frame(const Frame& src, int width, int height) {
  if (width <= 0 || height <= 0) throw ValidationError("resize target must be positive");
  if (width > src.width || height > src.height) {
    throw ValidationError("resize would upscale " + std::to_string(src.width) + "x" +
                          std::to_string(src.height) + " to " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
  Frame out;
  out.width = width;
  out.height = height;
  out.pixels.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);

  struct Tap {
    int i0, i1;
    double w1;
  };
  const auto taps = [](int dst, int srcn) {
    std::vector<Tap> t(static_cast<std::size_t>(dst));
    const double scale = static_cast<double>(srcn) / dst;
    for (int i = 0; i < dst; ++i) {
      const double s = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(srcn - 1));
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, srcn - 1);
      t[static_cast<std::size_t>(i)] = {i0, i1, s - i0};
    }
    return t;
  };
  const auto tx = taps(width, src.width);
  const auto ty = taps(height, src.height);
  for (int y = 0; y < height; ++y) {
    const Tap& vy = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const Tap& vx = tx[static_cast<std::size_t>(x)];
      const std::size_t a = src.index(vx.i0, vy.i0), b = src.index(vx.i1, vy.i0);
      const std::size_t c = src.index(vx.i0, vy.i1), d = src.index(vx.i1, vy.i1);
      const std::size_t o = out.index(x, y);
      for (int ch = 0; ch < 3; ++ch) {
        const double top = src.pixels[a + ch] + vx.w1 * (src.pixels[b + ch] - src.pixels[a + ch]);
        const double bot = src.pixels[c + ch] + vx.w1 * (src.pixels[d + ch] - src.pixels[c + ch]);
        const double v = top + vy.w1 * (bot - top);
        out.pixels[o + ch] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

std::pair<int, int> crop_origin(int frame_width, int frame_height, int size, CropMode mode,
                                std::uint64_t seed) {
  if (size <= 0) throw ValidationError("patch size must be positive");
  if (frame_width < size || frame_height < size) {
    throw ValidationError("frame " + std::to_string(frame_width) + "x" + std::to_string(frame_height) +
                          " is smaller than the " + std::to_string(size) + " px patch");
  }
  const int span_x = frame_width - size;
  const int span_y = frame_height - size;
  if (mode == CropMode::center) return {span_x / 2, span_y / 2};
  Rng rng(seed);
  const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(span_x) + 1));
  const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(span_y) + 1));
  return {x0, y0};
}

Frame crop_patch(const Frame& frame, int size, CropMode mode, std::uint64_t seed) {
  const auto [x0, y0] = crop_origin(frame.width, frame.height, size, mode, seed);
  Frame out;
  out.width = size;
  out.height = size;
  out.pixels.resize(static_cast<std::size_t>(size) * static_cast<std::size_t>(size) * 3);
  const std::size_t row_bytes = static_cast<std::size_t>(size) * 3;
  for (int y = 0; y < size; ++y) {
    std::memcpy(out.pixels.data() + out.index(0, y), frame.pixels.data() + frame.index(x0, y0 + y),
                row_bytes);
  }
  return out;
}

// ---------------------------------------------------------------------------
// PNG

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png(const std::filesystem::path& path, const Frame& frame) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot create '" + path.string() + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed for '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(frame.width), static_cast<png_uint_32>(frame.height),
               8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 3);
  png_write_info(png, info);
  for (int y = 0; y < frame.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(frame.pixels.data() + frame.index(0, y)));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Frame read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open '" + path.string() + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialization failed");
  }
  Frame frame;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("invalid PNG '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_set_gray_to_rgb(png);
  }
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  frame.width = static_cast<int>(png_get_image_width(png, info));
  frame.height = static_cast<int>(png_get_image_height(png, info));
  frame.pixels.resize(static_cast<std::size_t>(frame.width) * static_cast<std::size_t>(frame.height) * 3);
  std::vector<png_bytep> rows(static_cast<std::size_t>(frame.height));
  for (int y = 0; y < frame.height; ++y) rows[static_cast<std::size_t>(y)] = frame.pixels.data() + frame.index(0, y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return frame;
}

// ---------------------------------------------------------------------------
// Raw

std::vector<std::uint8_t> encode_raw(const Frame& frame) {
  std::vector<std::uint8_t> out(8 + frame.pixels.size());
  const auto put = [&](std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out[at + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v >> (8 * i));
  };
  put(0, static_cast<std::uint32_t>(frame.width));
  put(4, static_cast<std::uint32_t>(frame.height));
  std::copy(frame.pixels.begin(), frame.pixels.end(), out.begin() + 8);
  return out;
}

Frame decode_raw(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw ParseError("raw frame shorter than its 8-byte header");
  const auto get = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + static_cast<std::size_t>(i)]) << (8 * i);
    return v;
  };
  const std::uint64_t w = get(0), h = get(4);
  if (w == 0 || h == 0 || bytes.size() - 8 != w * h * 3) {
    throw ParseError("raw frame payload does not match its declared size");
  }
  Frame f;
  f.width = static_cast<int>(w);
  f.height = static_cast<int>(h);
  f.pixels.assign(bytes.begin() + 8, bytes.end());
  return f;
}

}  // namespace pcvqa
