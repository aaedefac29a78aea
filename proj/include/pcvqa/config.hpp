#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pcvqa/evaluation.hpp"
#include "pcvqa/image.hpp"
#include "pcvqa/keyframes.hpp"
#include "pcvqa/quality_model.hpp"
#include "pcvqa/renderer.hpp"
#include "pcvqa/trajectory.hpp"

namespace pcvqa {

enum class KeyframeMode { fixed, vmd };
enum class ExtractorMode { reference, import };

/// Every knob of the pipeline. Defaults follow the reference setup: 12 degree
/// steps over all four pathways, key frame 7, 1920x1080 capture, batch 32,
/// 50 epochs, learning rate 5e-5 decayed by 0.9 every 10 epochs.
struct PipelineConfig {
  RenderConfig render;
  double step_deg = kDefaultStepDeg;
  double kappa = kDefaultKappa;
  std::vector<PathwayId> pathways{kAllPathways.begin(), kAllPathways.end()};

  KeyframeMode keyframe_mode = KeyframeMode::fixed;
  int keyframe_index = kDefaultKeyframeIndex;
  VmdObjective vmd_objective = VmdObjective::max_min;

  ExtractorMode extractor = ExtractorMode::reference;
  std::filesystem::path import_dir;
  CropMode train_crop = CropMode::random;  // test patches are always centered

  int aligned_channels = kDefaultAlignedChannels;
  TrainConfig train;
  MappingMode mapping = MappingMode::correlation_only;

  int folds = 5;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";

  void validate() const;
  int frames_per_clip() const { return frames_per_orbit(step_deg); }
  /// Sorted "key = value" lines covering every setting.
  std::string canonical() const;
  /// FNV-1a of canonical(), as 16 hex digits.
  std::string hash() const;
};

/// Applies one "key = value" setting. Unknown keys and malformed values are
/// ValidationErrors.
void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value);

/// Parses "key = value" lines; '#' starts a comment.
PipelineConfig parse_config(std::istream& in, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

std::string pathways_string(const std::vector<PathwayId>& ids);
std::vector<PathwayId> parse_pathways(std::string_view letters);

}  // namespace pcvqa
