#include "pcvqa/toy_dataset.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "pcvqa/error.hpp"
#include "pcvqa/evaluation.hpp"
#include "pcvqa/random.hpp"

namespace pcvqa {

namespace {

constexpr double kPi = std::numbers::pi;

Color palette(const Vec3& p) {
  const double r = 0.5 + 0.45 * std::sin(3.0 * p.x + 1.0);
  const double g = 0.5 + 0.45 * std::sin(4.0 * p.y + 2.0 * p.z);
  const double b = 0.5 + 0.45 * std::cos(5.0 * p.z - p.x);
  return {r, g, b};
}

// Fibonacci lattice on the unit sphere.
std::vector<Vec3> fibonacci_sphere(std::size_t n) {
  std::vector<Vec3> out;
  out.reserve(n);
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double y = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double r = std::sqrt(1.0 - y * y);
    const double phi = golden * static_cast<double>(i);
    out.push_back({r * std::cos(phi), y, r * std::sin(phi)});
  }
  return out;
}

std::vector<Vec3> cube(std::size_t n) {
  const double half = 1.0 / std::sqrt(3.0);
  const auto g = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n) / 6.0)));
  std::vector<Vec3> out;
  for (int axis = 0; axis < 3; ++axis) {
    for (const double side : {-half, half}) {
      for (std::size_t i = 0; i < g; ++i) {
        for (std::size_t j = 0; j < g; ++j) {
          const double u = -half + 2.0 * half * (static_cast<double>(i) + 0.5) / static_cast<double>(g);
          const double v = -half + 2.0 * half * (static_cast<double>(j) + 0.5) / static_cast<double>(g);
          if (axis == 0) out.push_back({side, u, v});
          if (axis == 1) out.push_back({u, side, v});
          if (axis == 2) out.push_back({u, v, side});
        }
      }
    }
  }
  return out;
}

std::vector<Vec3> torus(std::size_t n) {
  const double big = 0.7, small = 0.3;
  const auto nv = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n) * small / big)));
  const std::size_t nu = n / nv;
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < nu; ++i) {
    const double u = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(nu);
    for (std::size_t j = 0; j < nv; ++j) {
      const double v = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(nv);
      const double ring = big + small * std::cos(v);
      out.push_back({ring * std::cos(u), small * std::sin(v), ring * std::sin(u)});
    }
  }
  return out;
}

// Lateral surface plus base disk(s) sampled on concentric rings. `top` is the
// radius at y = +h (0 for a cone).
std::vector<Vec3> solid_of_revolution(std::size_t n, double base, double top, double h, bool top_cap) {
  const double slant = std::hypot(base - top, 2.0 * h);
  const double lateral = kPi * (base + top) * slant;
  const double caps = kPi * base * base + (top_cap ? kPi * top * top : 0.0);
  const double spacing = std::sqrt((lateral + caps) / static_cast<double>(n));
  std::vector<Vec3> out;
  const auto rows = static_cast<std::size_t>(std::max(2.0, std::round(slant / spacing)));
  for (std::size_t i = 0; i < rows; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(rows);
    const double r = base + (top - base) * t;
    const double y = -h + 2.0 * h * t;
    const auto count = static_cast<std::size_t>(std::max(1.0, std::round(2.0 * kPi * r / spacing)));
    for (std::size_t k = 0; k < count; ++k) {
      const double a = 2.0 * kPi * (static_cast<double>(k) + 0.5 * static_cast<double>(i % 2)) /
                       static_cast<double>(count);
      out.push_back({r * std::cos(a), y, r * std::sin(a)});
    }
  }
  const auto disk = [&](double radius, double y) {
    const auto rings = static_cast<std::size_t>(std::max(1.0, std::round(radius / spacing)));
    for (std::size_t i = 0; i < rings; ++i) {
      const double r = radius * (static_cast<double>(i) + 0.5) / static_cast<double>(rings);
      const auto count = static_cast<std::size_t>(std::max(1.0, std::round(2.0 * kPi * r / spacing)));
      for (std::size_t k = 0; k < count; ++k) {
        const double a = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(count);
        out.push_back({r * std::cos(a), y, r * std::sin(a)});
      }
    }
  };
  disk(base, -h);
  if (top_cap) disk(top, h);
  return out;
}

std::vector<Vec3> blob(std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "toy-blob"));
  struct Bump {
    Vec3 dir;
    double amp;
    double width;
  };
  std::vector<Bump> bumps;
  for (int i = 0; i < 6; ++i) {
    const Vec3 d = normalized(Vec3{rng.normal(), rng.normal(), rng.normal()});
    bumps.push_back({d, rng.uniform(0.1, 0.35), rng.uniform(2.0, 6.0)});
  }
  std::vector<Vec3> out = fibonacci_sphere(n);
  for (Vec3& p : out) {
    double r = 0.75;
    for (const Bump& b : bumps) r += b.amp * std::exp(-b.width * (1.0 - dot(p, b.dir)));
    p = p * r;
  }
  return out;
}

}  // namespace

const char* shape_name(ToyShape s) {
  switch (s) {
    case ToyShape::sphere: return "sphere";
    case ToyShape::cube: return "cube";
    case ToyShape::torus: return "torus";
    case ToyShape::cone: return "cone";
    case ToyShape::cylinder: return "cylinder";
    case ToyShape::blob: return "blob";
  }
  return "?";
}

PointCloud make_shape(ToyShape shape, std::size_t points, std::uint64_t seed) {
  if (points < 100) throw ValidationError("toy shapes need at least 100 points");
  std::vector<Vec3> pos;
  switch (shape) {
    case ToyShape::sphere: pos = fibonacci_sphere(points); break;
    case ToyShape::cube: pos = cube(points); break;
    case ToyShape::torus: pos = torus(points); break;
    case ToyShape::cone: pos = solid_of_revolution(points, 0.8, 0.0, 0.6, false); break;
    case ToyShape::cylinder: pos = solid_of_revolution(points, 0.6, 0.6, 0.8, true); break;
    case ToyShape::blob: pos = blob(points, seed); break;
  }
  std::vector<Color> colors;
  colors.reserve(pos.size());
  for (const Vec3& p : pos) colors.push_back(palette(p));
  return PointCloud::create(std::move(pos), std::move(colors));
}

PointCloud add_geometric_noise(const PointCloud& pc, double sigma_fraction, std::uint64_t seed) {
  if (!(sigma_fraction >= 0.0) || !std::isfinite(sigma_fraction)) {
    throw ValidationError("noise fraction must be finite and non-negative");
  }
  const double sigma = sigma_fraction * bounding_radius(pc, mean_center(pc));
  Rng rng(seed);
  std::vector<Vec3> pos(pc.positions().begin(), pc.positions().end());
  if (sigma > 0.0) {
    for (Vec3& p : pos) p = p + Vec3{sigma * rng.normal(), sigma * rng.normal(), sigma * rng.normal()};
  }
  return PointCloud::create(std::move(pos), std::vector<Color>(pc.colors().begin(), pc.colors().end()),
                            pc.has_native_color());
}

ToySample make_toy_sample(ToyShape shape, int level, std::uint64_t seed, std::size_t points) {
  if (level < 0 || level >= static_cast<int>(kToyNoiseLevels.size())) {
    throw ValidationError("toy distortion level must be in [0, 4]");
  }
  const std::string group = shape_name(shape);
  const std::string id = group + "_" + std::to_string(level);
  const PointCloud clean = make_shape(shape, points, seed);
  return ToySample{id, group, level, 5.0 - level,
                   add_geometric_noise(clean, kToyNoiseLevels[static_cast<std::size_t>(level)],
                                       derive_seed(seed, "toy-noise:" + id))};
}

void write_toy_dataset(const std::filesystem::path& dir, std::uint64_t seed, std::size_t points) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries;
  for (const ToyShape shape : kToyShapes) {
    for (int level = 0; level < static_cast<int>(kToyNoiseLevels.size()); ++level) {
      const ToySample s = make_toy_sample(shape, level, seed, points);
      write_ply_file(dir / (s.id + ".ply"), s.cloud, PlyEncoding::binary_le);
      entries.push_back({s.id + ".ply", s.mos, s.group});
    }
  }
  std::ofstream out(dir / "manifest.csv", std::ios::binary);
  if (!out) throw IoError("cannot create '" + (dir / "manifest.csv").string() + "'");
  write_manifest(out, entries);
}

}  // namespace pcvqa
