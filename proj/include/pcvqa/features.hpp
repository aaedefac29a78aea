#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pcvqa/image.hpp"
#include "pcvqa/renderer.hpp"

namespace pcvqa {

/// Channel-first dense array: dims[0] channels, remaining dims spatial or
/// spatio-temporal. Values are float32, matching the on-disk format.
struct FeatureMap {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;  // C-order

  std::size_t channels() const { return dims.empty() ? 0 : dims.front(); }
  std::size_t element_count() const;
  void validate() const;
};

struct SpatialFeatures {
  Eigen::VectorXd values;
};

struct TemporalFeatures {
  Eigen::VectorXd values;
};

inline constexpr int kSpatialRefChannels = 15;
inline constexpr int kTemporalRefChannels = 12;
inline constexpr int kDefaultAlignedChannels = 32;

/// Global average pooling: per-channel mean over every non-channel axis.
Eigen::VectorXd gap(const FeatureMap& map);

/// Handcrafted spatial descriptor of a 224x224 patch. For scales 224, 112 and
/// 56 (2x box downsampling) it emits light, RMS contrast, colorfulness,
/// sharpness (Laplacian variance) and spatial information (Sobel magnitude
/// deviation): 15 values, scale-major.
SpatialFeatures spatial_extract_ref(const ImageF& patch);
SpatialFeatures spatial_extract_ref(const Frame& patch);

/// Handcrafted temporal descriptor of a 224x224 clip. For strides 1, 2 and 4
/// over absolute luminance differences: mean, standard deviation, nearest-rank
/// 90th percentile and the deviation of per-frame mean differences; 12 values,
/// stride-major. The clip needs more frames than the largest stride.
TemporalFeatures temporal_extract_ref(const Clip& clip);
TemporalFeatures temporal_extract_ref(std::span<const ImageF> frames);

/// Learnable channel-alignment projections (bias-free).
struct FusionWeights {
  Eigen::MatrixXd ws;  // aligned x spatial
  Eigen::MatrixXd wp;  // aligned x temporal

  Eigen::Index aligned() const { return ws.rows(); }
};

/// ws * s concatenated with wp * t. Throws ValidationError on a dimension mismatch.
Eigen::VectorXd fuse(const SpatialFeatures& s, const TemporalFeatures& t, const FusionWeights& w);

/// "OQAF" feature file: magic, version u16, rank u8, dims u32..., float32
/// payload, all little-endian.
std::vector<std::uint8_t> encode_feature_file(const FeatureMap& map);
FeatureMap decode_feature_file(std::span<const std::uint8_t> bytes);
void write_feature_file(const std::filesystem::path& path, const FeatureMap& map);
FeatureMap import_features(const std::filesystem::path& path);

/// Rank-1 map wrapping a pooled vector, for exporting reference features.
FeatureMap vector_feature_map(const Eigen::VectorXd& v);

}  // namespace pcvqa
