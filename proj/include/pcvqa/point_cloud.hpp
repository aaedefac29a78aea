#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pcvqa/vec3.hpp"

namespace pcvqa {

/// RGB color with channels in [0, 1].
struct Color {
  double r = 0.5;
  double g = 0.5;
  double b = 0.5;
  friend constexpr bool operator==(const Color&, const Color&) = default;
};

/// A colored point cloud. Construct through PointCloud::create (or a parser)
/// to get the invariants checked: at least one point, finite coordinates,
/// one color per point with channels in [0, 1].
class PointCloud {
 public:
  static PointCloud create(std::vector<Vec3> positions, std::vector<Color> colors,
                           bool has_native_color = true);
  /// Geometry-only cloud filled with mid-gray.
  static PointCloud create(std::vector<Vec3> positions);

  std::size_t size() const noexcept { return positions_.size(); }
  std::span<const Vec3> positions() const noexcept { return positions_; }
  std::span<const Color> colors() const noexcept { return colors_; }
  bool has_native_color() const noexcept { return has_native_color_; }

  /// Copy with every position shifted by t.
  PointCloud translated(const Vec3& t) const;
  /// Copy with every position scaled about the origin.
  PointCloud scaled(double s) const;

 private:
  PointCloud() = default;
  std::vector<Vec3> positions_;
  std::vector<Color> colors_;
  bool has_native_color_ = true;
};

/// Geometric mean center of a cloud, in model units.
struct Center3 {
  Vec3 xyz;
};

enum class PlyEncoding { ascii, binary_le };

/// Parses PLY content (ASCII or binary little-endian). Throws ParseError on a
/// malformed header, big-endian data, truncated vertex data or non-finite
/// coordinates.
PointCloud parse_ply(std::span<const std::uint8_t> bytes);
PointCloud parse_ply(std::string_view text);

/// Serializes a cloud; positions as float64 so the round trip is exact,
/// colors as uint8 rounded to nearest.
std::vector<std::uint8_t> write_ply(const PointCloud& pc, PlyEncoding mode);

PointCloud read_ply_file(const std::filesystem::path& path);
void write_ply_file(const std::filesystem::path& path, const PointCloud& pc, PlyEncoding mode);

Center3 mean_center(const PointCloud& pc);

/// Maximum Euclidean distance from center to any point.
double bounding_radius(const PointCloud& pc, const Center3& center);

}  // namespace pcvqa
