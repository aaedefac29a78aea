#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "pcvqa/image.hpp"
#include "pcvqa/point_cloud.hpp"
#include "pcvqa/trajectory.hpp"

namespace pcvqa {

struct RenderConfig {
  int width = 1920;
  int height = 1080;
  double vertical_fov_deg = kDefaultVerticalFovDeg;
  int splat_radius = 1;  // square splat of side 2r+1
  Rgb8 background{255, 255, 255};
  double near_plane = 1e-3;
  double far_plane = 1e6;

  void validate() const;
};

/// Sets near/far so that a cloud of `bounding_radius` seen from distance
/// `view_radius` lies strictly between them.
RenderConfig with_clip_planes(RenderConfig cfg, double view_radius, double bounding_radius);

struct Clip {
  PathwayId pathway = PathwayId::A;
  std::vector<Frame> frames;
};

struct VideoSequence {
  std::vector<Clip> clips;
  std::size_t frame_count() const;
};

/// Perspective point rasterizer with a private z-buffer. Reusing one instance
/// across frames avoids reallocating buffers; results do not depend on reuse.
class Rasterizer {
 public:
  explicit Rasterizer(RenderConfig cfg);

  /// Nearest point wins each pixel; equal depths keep the lowest point index.
  /// Throws ValidationError on a degenerate pose.
  void render(const PointCloud& pc, const CameraPose& pose, Frame& out);

  const RenderConfig& config() const noexcept { return cfg_; }

 private:
  RenderConfig cfg_;
  std::vector<double> depth_;
};

Frame render_frame(const PointCloud& pc, const CameraPose& pose, const RenderConfig& cfg);

/// Renders every pose of every trajectory in order; clip i follows
/// trajectory i. `threads` > 1 renders frames concurrently with identical output.
VideoSequence capture_video(const PointCloud& pc, std::span<const Trajectory> sequence,
                            const RenderConfig& cfg, unsigned threads = 1);

/// Streaming variant: frames are handed to `sink(clip, index, frame)` in
/// capture order and not retained.
using FrameSink = std::function<void(std::size_t clip, std::size_t index, const Frame& frame)>;
void capture_video_streaming(const PointCloud& pc, std::span<const Trajectory> sequence,
                             const RenderConfig& cfg, const FrameSink& sink);

/// Resizes every frame of a clip (default 224x224).
Clip resize_clip(const Clip& clip, int width = kPatchSize, int height = kPatchSize);

/// Writes frame_000.png ... into dir plus a frames.txt manifest with one
/// "index file pathway" line per frame.
void export_clip(const std::filesystem::path& dir, const Clip& clip);
Clip import_clip(const std::filesystem::path& dir);

}  // namespace pcvqa
