#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "pcvqa/features.hpp"

namespace pcvqa {

inline constexpr int kHiddenUnits = 128;

/// Two fully-connected layers (128 units, rectifier, 1 unit).
struct RegressionHead {
  Eigen::MatrixXd w1;  // 128 x 2C'
  Eigen::VectorXd b1;  // 128
  Eigen::VectorXd w2;  // 128 (the single output row)
  double b2 = 0.0;
};

/// Everything that is trained: the fusion projections and the head.
struct QualityModel {
  FusionWeights fusion;
  RegressionHead head;

  Eigen::Index spatial_dim() const { return fusion.ws.cols(); }
  Eigen::Index temporal_dim() const { return fusion.wp.cols(); }
  Eigen::Index aligned_dim() const { return fusion.ws.rows(); }

  /// Same shape, every parameter zero.
  static QualityModel zeros(Eigen::Index spatial, Eigen::Index temporal, Eigen::Index aligned);
  /// Uniform +-sqrt(6 / (fan_in + fan_out)) per matrix, zero biases.
  static QualityModel initialize(Eigen::Index spatial, Eigen::Index temporal, Eigen::Index aligned,
                                 std::uint64_t seed);
  void validate() const;
};

/// Calls f(double* data, size) for every parameter block in a fixed order.
template <typename Model, typename F>
void for_each_parameter_block(Model& m, F&& f) {
  f(m.fusion.ws.data(), m.fusion.ws.size());
  f(m.fusion.wp.data(), m.fusion.wp.size());
  f(m.head.w1.data(), m.head.w1.size());
  f(m.head.b1.data(), m.head.b1.size());
  f(m.head.w2.data(), m.head.w2.size());
  f(&m.head.b2, Eigen::Index{1});
}

struct ClipFeatures {
  SpatialFeatures spatial;
  TemporalFeatures temporal;
};

/// One point cloud: features of each captured clip and its subjective score.
struct Sample {
  std::vector<ClipFeatures> clips;
  double mos = 0.0;
};

struct QualityScore {
  std::vector<double> per_clip;
  double overall = 0.0;
};

double predict_clip(const Eigen::VectorXd& fused, const RegressionHead& head);

/// Mean of the clip scores. `expected_clips` is 4 for the full capture and
/// smaller for pathway-subset runs; a different count is a ValidationError.
QualityScore predict_pointcloud(std::span<const double> clip_scores, std::size_t expected_clips = 4);

/// Full forward pass for one point cloud.
QualityScore predict(const QualityModel& model, std::span<const ClipFeatures> clips);

double mse_loss(std::span<const double> predicted, std::span<const double> labels);

/// Mean squared error of the model over `batch`; when `grad` is non-null it
/// receives d(loss)/d(parameter) for every parameter (shaped like the model).
double loss_and_gradient(const QualityModel& model, std::span<const Sample> batch, QualityModel* grad);

struct TrainConfig {
  int batch_size = 32;
  int epochs = 50;
  double learning_rate = 5e-5;
  double lr_decay = 0.9;
  int lr_decay_every = 10;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Step schedule: learning_rate * lr_decay^floor(epoch / lr_decay_every), epochs from 0.
double learning_rate_at(const TrainConfig& cfg, int epoch);

/// Adaptive-moment optimizer over all model parameters.
class AdamOptimizer {
 public:
  AdamOptimizer(const QualityModel& shape, double beta1, double beta2, double epsilon);
  void step(QualityModel& params, const QualityModel& grad, double lr);

 private:
  QualityModel m_;
  QualityModel v_;
  double beta1_, beta2_, epsilon_;
  long step_count_ = 0;
};

struct EpochStats {
  int epoch = 0;
  double learning_rate = 0.0;
  double loss = 0.0;  // full training set, after the epoch's updates
};

struct TrainResult {
  QualityModel model;
  std::vector<EpochStats> curve;
  double initial_loss = 0.0;
};

/// Mini-batch training of fusion projections and head on the MSE of the
/// pooled point-cloud score. Deterministic for a given seed. Throws
/// TrainingDiverged when the loss turns non-finite or grows past 1e6x its
/// initial value.
TrainResult train(std::span<const Sample> dataset, const TrainConfig& cfg, QualityModel init);

void write_loss_csv(std::ostream& os, std::span<const EpochStats> curve);

/// "OQAM" checkpoint: magic, version u16, C_s, C_t, C' (u32), then Ws, Wp,
/// layer1, bias1, layer2, bias2 as row-major float32, little-endian.
std::vector<std::uint8_t> encode_checkpoint(const QualityModel& model);
QualityModel decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const QualityModel& model);
QualityModel load_checkpoint(const std::filesystem::path& path);

}  // namespace pcvqa
