#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pcvqa/config.hpp"
#include "pcvqa/evaluation.hpp"
#include "pcvqa/point_cloud.hpp"
#include "pcvqa/quality_model.hpp"

namespace pcvqa {

/// Camera placement derived from a cloud and the config.
struct CaptureSetup {
  Center3 center;
  double bounding_radius = 0.0;
  double view_radius = 0.0;
  RenderConfig render;
  std::vector<Trajectory> sequence;
};

CaptureSetup prepare_capture(const PointCloud& pc, const PipelineConfig& cfg);

/// Key frame index per clip according to the config.
std::vector<int> select_keyframes(std::span<const Trajectory> sequence, const PipelineConfig& cfg);

/// Pooled per-clip features of one point cloud. `train_clips` carry the
/// spatial features of the training crop; `test_clips` those of the centered
/// crop. Temporal features are shared.
struct CloudFeatures {
  std::vector<PathwayId> pathways;
  std::vector<int> keyframes;
  std::vector<ClipFeatures> test_clips;
  std::vector<ClipFeatures> train_clips;

  /// Restriction to a subset of the captured pathways.
  CloudFeatures select(std::span<const PathwayId> subset) const;
};

/// Seed for the training crop of one clip of one cloud.
std::uint64_t crop_seed(const PipelineConfig& cfg, const std::string& cloud_id, std::size_t clip);

/// Renders, selects key frames and extracts reference features in memory,
/// without keeping the full-resolution video.
CloudFeatures extract_cloud_features(const PointCloud& pc, const PipelineConfig& cfg,
                                     const std::string& cloud_id);

/// Extraction from already captured (or otherwise supplied) clips.
CloudFeatures extract_from_clips(std::span<const Clip> clips, std::span<const int> keyframes,
                                 const PipelineConfig& cfg, const std::string& cloud_id);

/// capture: writes clip_<P>/frame_NNN.png, trajectory.txt, config.txt and manifest.txt.
struct CaptureSummary {
  std::size_t frames = 0;
  std::string config_hash;
};
CaptureSummary run_capture(const std::filesystem::path& ply, const PipelineConfig& cfg,
                           const std::filesystem::path& out_dir);

/// features: reads a capture directory (or imports OQAF maps in import mode)
/// and writes <P>_spatial.oqaf, <P>_temporal.oqaf, train_crops/ and keyframes.txt.
CloudFeatures run_features(const std::filesystem::path& capture_dir, const PipelineConfig& cfg,
                           const std::filesystem::path& out_dir);

void write_cloud_features(const std::filesystem::path& dir, const CloudFeatures& f);
CloudFeatures read_cloud_features(const std::filesystem::path& dir, std::span<const PathwayId> pathways);

/// Imported deep feature maps: <dir>/<P>_spatial.oqaf and <P>_temporal.oqaf,
/// pooled with gap.
CloudFeatures import_cloud_features(const std::filesystem::path& dir, std::span<const PathwayId> pathways);

/// Features for a manifest path: a feature directory, a capture directory,
/// or a PLY file.
CloudFeatures features_for_path(const std::filesystem::path& path, const PipelineConfig& cfg);

struct LabeledFeatures {
  std::string id;
  std::string group;
  double mos = 0.0;
  CloudFeatures features;
};

std::vector<Sample> training_samples(std::span<const LabeledFeatures> data, std::span<const std::size_t> which);

TrainResult train_on(std::span<const LabeledFeatures> data, std::span<const std::size_t> which,
                     const PipelineConfig& cfg, std::uint64_t seed);

double predict_score(const QualityModel& model, const CloudFeatures& f);

struct FoldResult {
  std::vector<std::size_t> test;
  std::vector<double> predictions;
  EvaluationReport report;
  bool defined = true;  // false when a criterion was undefined (e.g. constant predictions)
  std::vector<EpochStats> curve;
};

struct KFoldResult {
  std::vector<FoldResult> folds;
  EvaluationReport mean;  // mean of the four criteria over folds
};

KFoldResult run_kfold(std::span<const LabeledFeatures> data, const PipelineConfig& cfg);

void write_kfold_table(std::ostream& os, const KFoldResult& r);
void write_kfold_csv(std::ostream& os, const KFoldResult& r);

}  // namespace pcvqa
