#include "pcvqa/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "pcvqa/error.hpp"

namespace pcvqa {

void RenderConfig::validate() const {
  if (width <= 0 || height <= 0) throw ValidationError("viewport must have positive area");
  if (!(vertical_fov_deg > 0.0 && vertical_fov_deg < 180.0)) {
    throw ValidationError("vertical field of view must lie in (0, 180) degrees");
  }
  if (splat_radius < 0) throw ValidationError("splat radius must be non-negative");
  if (!(near_plane > 0.0)) throw ValidationError("near plane must be positive");
  if (!(far_plane > near_plane)) throw ValidationError("far plane must lie beyond the near plane");
}

RenderConfig with_clip_planes(RenderConfig cfg, double view_radius, double bounding_radius) {
  cfg.near_plane = std::max(0.5 * (view_radius - bounding_radius), 1e-3 * view_radius);
  cfg.far_plane = 2.0 * (view_radius + bounding_radius);
  return cfg;
}

std::size_t VideoSequence::frame_count() const {
  std::size_t n = 0;
  for (const Clip& c : clips) n += c.frames.size();
  return n;
}

Rasterizer::Rasterizer(RenderConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Rasterizer::render(const PointCloud& pc, const CameraPose& pose, Frame& out) {
  const Vec3 view = pose.target - pose.position;
  const double view_len = norm(view);
  if (!(view_len > 0.0)) throw ValidationError("degenerate camera pose: position equals target");
  const Vec3 forward = view * (1.0 / view_len);
  const Vec3 side = cross(forward, pose.up);
  const double side_len = norm(side);
  if (!(side_len > 1e-12)) throw ValidationError("degenerate camera pose: up is parallel to view direction");
  const Vec3 right = side * (1.0 / side_len);
  const Vec3 up = cross(right, forward);

  const int w = cfg_.width;
  const int h = cfg_.height;
  const double focal = 0.5 * h / std::tan(cfg_.vertical_fov_deg * std::numbers::pi / 360.0);
  const double cx = 0.5 * w;
  const double cy = 0.5 * h;

  if (out.width != w || out.height != h) out = Frame::filled(w, h, cfg_.background);
  else {
    for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
      out.pixels[i] = cfg_.background.r;
      out.pixels[i + 1] = cfg_.background.g;
      out.pixels[i + 2] = cfg_.background.b;
    }
  }
  depth_.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h),
                std::numeric_limits<double>::infinity());

  const auto positions = pc.positions();
  const auto colors = pc.colors();
  const int r = cfg_.splat_radius;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const Vec3 rel = positions[i] - pose.position;
    const double z = dot(rel, forward);
    if (z < cfg_.near_plane || z > cfg_.far_plane) continue;
    const double px = cx + focal * dot(rel, right) / z;
    const double py = cy - focal * dot(rel, up) / z;
    if (!(px >= 0.0 && px < w && py >= 0.0 && py < h)) continue;
    const int ix = static_cast<int>(px);
    const int iy = static_cast<int>(py);
    const Color& c = colors[i];
    const std::uint8_t cr = static_cast<std::uint8_t>(std::lround(c.r * 255.0));
    const std::uint8_t cg = static_cast<std::uint8_t>(std::lround(c.g * 255.0));
    const std::uint8_t cb = static_cast<std::uint8_t>(std::lround(c.b * 255.0));
    const int x0 = std::max(ix - r, 0), x1 = std::min(ix + r, w - 1);
    const int y0 = std::max(iy - r, 0), y1 = std::min(iy + r, h - 1);
    for (int y = y0; y <= y1; ++y) {
      const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(w);
      for (int x = x0; x <= x1; ++x) {
        const std::size_t p = row + static_cast<std::size_t>(x);
        // Strict comparison: points arrive in index order, so an equal depth
        // keeps the earlier (lower-index) point.
        if (z < depth_[p]) {
          depth_[p] = z;
          out.pixels[3 * p] = cr;
          out.pixels[3 * p + 1] = cg;
          out.pixels[3 * p + 2] = cb;
        }
      }
    }
  }
}

Frame render_frame(const PointCloud& pc, const CameraPose& pose, const RenderConfig& cfg) {
  Rasterizer raster(cfg);
  Frame f;
  raster.render(pc, pose, f);
  return f;
}

VideoSequence capture_video(const PointCloud& pc, std::span<const Trajectory> sequence,
                            const RenderConfig& cfg, unsigned threads) {
  cfg.validate();
  VideoSequence video;
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t c = 0; c < sequence.size(); ++c) {
    video.clips.push_back({sequence[c].pathway, std::vector<Frame>(sequence[c].poses.size())});
    for (std::size_t k = 0; k < sequence[c].poses.size(); ++k) jobs.emplace_back(c, k);
  }
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
  std::vector<std::exception_ptr> errors(threads);
  const auto work = [&](std::size_t begin, std::size_t stride) {
    try {
      Rasterizer raster(cfg);
      for (std::size_t j = begin; j < jobs.size(); j += stride) {
        const auto [c, k] = jobs[j];
        raster.render(pc, sequence[c].poses[k], video.clips[c].frames[k]);
      }
    } catch (...) {
      errors[begin] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return video;
}

void capture_video_streaming(const PointCloud& pc, std::span<const Trajectory> sequence,
                             const RenderConfig& cfg, const FrameSink& sink) {
  Rasterizer raster(cfg);
  Frame frame;
  for (std::size_t c = 0; c < sequence.size(); ++c) {
    for (std::size_t k = 0; k < sequence[c].poses.size(); ++k) {
      raster.render(pc, sequence[c].poses[k], frame);
      sink(c, k, frame);
    }
  }
}

Clip resize_clip(const Clip& clip, int width, int height) {
  Clip out;
  out.pathway = clip.pathway;
  out.frames.reserve(clip.frames.size());
  for (const Frame& f : clip.frames) out.frames.push_back(resize_frame(f, width, height));
  return out;
}

void export_clip(const std::filesystem::path& dir, const Clip& clip) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "frames.txt");
  if (!manifest) throw IoError("cannot create '" + (dir / "frames.txt").string() + "'");
  char name[32];
  for (std::size_t k = 0; k < clip.frames.size(); ++k) {
    std::snprintf(name, sizeof name, "frame_%03zu.png", k);
    write_png(dir / name, clip.frames[k]);
    manifest << k << ' ' << name << ' ' << pathway_letter(clip.pathway) << '\n';
  }
}

Clip import_clip(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "frames.txt");
  if (!manifest) throw IoError("missing frame manifest in '" + dir.string() + "'");
  Clip clip;
  std::string line;
  bool first = true;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::size_t k = 0;
    std::string file;
    char letter = 0;
    if (!(ss >> k >> file >> letter)) throw ParseError("malformed frame manifest line '" + line + "'");
    if (k != clip.frames.size()) throw ParseError("frame manifest out of order in '" + dir.string() + "'");
    const PathwayId id = pathway_from_letter(letter);
    if (first) clip.pathway = id;
    first = false;
    Frame f = read_png(dir / file);
    if (!clip.frames.empty() &&
        (f.width != clip.frames.front().width || f.height != clip.frames.front().height)) {
      throw ValidationError("frame '" + file + "' differs in size from the rest of the clip");
    }
    clip.frames.push_back(std::move(f));
  }
  if (clip.frames.empty()) throw ValidationError("clip '" + dir.string() + "' has no frames");
  return clip;
}

}  // namespace pcvqa
