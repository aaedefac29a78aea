#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pcvqa/point_cloud.hpp"

namespace pcvqa {

enum class ToyShape { sphere, cube, torus, cone, cylinder, blob };

inline constexpr std::array<ToyShape, 6> kToyShapes{ToyShape::sphere, ToyShape::cube,     ToyShape::torus,
                                                    ToyShape::cone,   ToyShape::cylinder, ToyShape::blob};

/// Noise standard deviation per distortion level, as a fraction of the
/// bounding radius. Pseudo-MOS of level l is 5 - l.
inline constexpr std::array<double, 5> kToyNoiseLevels{0.0, 0.005, 0.01, 0.02, 0.04};

const char* shape_name(ToyShape s);

/// Regularly sampled, procedurally colored surface of roughly `points` points
/// with bounding radius near 1. Only the blob uses the seed.
PointCloud make_shape(ToyShape shape, std::size_t points = 20000, std::uint64_t seed = 0);

/// Adds isotropic Gaussian noise of sigma_fraction * bounding radius to every
/// coordinate. Colors are kept.
PointCloud add_geometric_noise(const PointCloud& pc, double sigma_fraction, std::uint64_t seed);

struct ToySample {
  std::string id;     // e.g. "torus_2"
  std::string group;  // shape name
  int level = 0;
  double mos = 0.0;
  PointCloud cloud;
};

ToySample make_toy_sample(ToyShape shape, int level, std::uint64_t seed, std::size_t points = 20000);

/// Writes <id>.ply for all 30 samples and manifest.csv (path,mos,group).
void write_toy_dataset(const std::filesystem::path& dir, std::uint64_t seed, std::size_t points = 20000);

}  // namespace pcvqa
