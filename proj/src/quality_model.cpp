#include "pcvqa/quality_model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <ostream>

#include "pcvqa/error.hpp"
#include "pcvqa/random.hpp"

namespace pcvqa {

QualityModel QualityModel::zeros(Eigen::Index spatial, Eigen::Index temporal, Eigen::Index aligned) {
  if (spatial <= 0 || temporal <= 0 || aligned <= 0) {
    throw ValidationError("model dimensions must be positive");
  }
  QualityModel m;
  m.fusion.ws = Eigen::MatrixXd::Zero(aligned, spatial);
  m.fusion.wp = Eigen::MatrixXd::Zero(aligned, temporal);
  m.head.w1 = Eigen::MatrixXd::Zero(kHiddenUnits, 2 * aligned);
  m.head.b1 = Eigen::VectorXd::Zero(kHiddenUnits);
  m.head.w2 = Eigen::VectorXd::Zero(kHiddenUnits);
  m.head.b2 = 0.0;
  return m;
}

QualityModel QualityModel::initialize(Eigen::Index spatial, Eigen::Index temporal, Eigen::Index aligned,
                                      std::uint64_t seed) {
  QualityModel m = zeros(spatial, temporal, aligned);
  Rng rng(derive_seed(seed, "model-init"));
  const auto fill = [&](double* data, Eigen::Index size, Eigen::Index fan_in, Eigen::Index fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index i = 0; i < size; ++i) data[i] = rng.uniform(-limit, limit);
  };
  fill(m.fusion.ws.data(), m.fusion.ws.size(), spatial, aligned);
  fill(m.fusion.wp.data(), m.fusion.wp.size(), temporal, aligned);
  fill(m.head.w1.data(), m.head.w1.size(), 2 * aligned, kHiddenUnits);
  fill(m.head.w2.data(), m.head.w2.size(), kHiddenUnits, 1);
  return m;
}

void QualityModel::validate() const {
  const Eigen::Index c = aligned_dim();
  if (c <= 0 || fusion.wp.rows() != c || head.w1.rows() != kHiddenUnits || head.w1.cols() != 2 * c ||
      head.b1.size() != kHiddenUnits || head.w2.size() != kHiddenUnits) {
    throw ValidationError("model parameter shapes are inconsistent");
  }
  bool finite = std::isfinite(head.b2);
  for_each_parameter_block(*this, [&](const double* d, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) finite = finite && std::isfinite(d[i]);
  });
  if (!finite) throw ValidationError("model contains non-finite parameters");
}

double predict_clip(const Eigen::VectorXd& fused, const RegressionHead& head) {
  if (fused.size() != head.w1.cols()) {
    throw ValidationError("fused feature length " + std::to_string(fused.size()) +
                          " does not match head input " + std::to_string(head.w1.cols()));
  }
  const Eigen::VectorXd hidden = (head.w1 * fused + head.b1).cwiseMax(0.0);
  return head.w2.dot(hidden) + head.b2;
}

QualityScore predict_pointcloud(std::span<const double> clip_scores, std::size_t expected_clips) {
  if (clip_scores.empty() || clip_scores.size() != expected_clips) {
    throw ValidationError("expected " + std::to_string(expected_clips) + " clip scores, got " +
                          std::to_string(clip_scores.size()));
  }
  QualityScore q;
  q.per_clip.assign(clip_scores.begin(), clip_scores.end());
  q.overall = std::accumulate(clip_scores.begin(), clip_scores.end(), 0.0) /
              static_cast<double>(clip_scores.size());
  return q;
}

QualityScore predict(const QualityModel& model, std::span<const ClipFeatures> clips) {
  std::vector<double> scores;
  scores.reserve(clips.size());
  for (const ClipFeatures& c : clips) {
    scores.push_back(predict_clip(fuse(c.spatial, c.temporal, model.fusion), model.head));
  }
  return predict_pointcloud(scores, clips.size());
}

double mse_loss(std::span<const double> predicted, std::span<const double> labels) {
  if (predicted.size() != labels.size()) throw ValidationError("prediction and label counts differ");
  if (predicted.empty()) throw ValidationError("mse_loss needs at least one sample");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = labels[i] - predicted[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predicted.size());
}

double loss_and_gradient(const QualityModel& model, std::span<const Sample> batch, QualityModel* grad) {
  if (batch.empty()) throw ValidationError("empty batch");
  const Eigen::Index c = model.aligned_dim();
  if (grad) {
    *grad = QualityModel::zeros(model.spatial_dim(), model.temporal_dim(), c);
  }
  const double n = static_cast<double>(batch.size());
  double loss = 0.0;
  Eigen::VectorXd fused(2 * c);
  for (const Sample& s : batch) {
    if (s.clips.empty()) throw ValidationError("sample without clips");
    const double m = static_cast<double>(s.clips.size());
    struct Cache {
      Eigen::VectorXd fused, pre;
    };
    std::vector<Cache> caches;
    caches.reserve(s.clips.size());
    double q = 0.0;
    for (const ClipFeatures& clip : s.clips) {
      Cache& k = caches.emplace_back();
      k.fused = fuse(clip.spatial, clip.temporal, model.fusion);
      k.pre = model.head.w1 * k.fused + model.head.b1;
      q += model.head.w2.dot(k.pre.cwiseMax(0.0)) + model.head.b2;
    }
    q /= m;
    const double residual = q - s.mos;
    loss += residual * residual;
    if (!grad) continue;
    // d(loss)/d(Q_i) for each clip score.
    const double g = 2.0 * residual / (n * m);
    for (std::size_t i = 0; i < s.clips.size(); ++i) {
      const Cache& k = caches[i];
      const Eigen::VectorXd act = k.pre.cwiseMax(0.0);
      grad->head.w2 += g * act;
      grad->head.b2 += g;
      const Eigen::VectorXd d_pre =
          (g * model.head.w2).cwiseProduct((k.pre.array() > 0.0).cast<double>().matrix());
      grad->head.w1.noalias() += d_pre * k.fused.transpose();
      grad->head.b1 += d_pre;
      const Eigen::VectorXd d_fused = model.head.w1.transpose() * d_pre;
      grad->fusion.ws.noalias() += d_fused.head(c) * s.clips[i].spatial.values.transpose();
      grad->fusion.wp.noalias() += d_fused.tail(c) * s.clips[i].temporal.values.transpose();
    }
  }
  return loss / n;
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (batch_size <= 0 || epochs <= 0 || lr_decay_every <= 0) {
    throw ValidationError("batch size, epochs and decay period must be positive");
  }
  if (!(learning_rate > 0.0) || !(lr_decay > 0.0) || !(adam_epsilon > 0.0)) {
    throw ValidationError("learning rate, decay and epsilon must be positive");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ValidationError("moment decay rates must lie in [0, 1)");
  }
}

double learning_rate_at(const TrainConfig& cfg, int epoch) {
  return cfg.learning_rate * std::pow(cfg.lr_decay, epoch / cfg.lr_decay_every);
}

AdamOptimizer::AdamOptimizer(const QualityModel& shape, double beta1, double beta2, double epsilon)
    : m_(QualityModel::zeros(shape.spatial_dim(), shape.temporal_dim(), shape.aligned_dim())),
      v_(m_),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon) {}

void AdamOptimizer::step(QualityModel& params, const QualityModel& grad, double lr) {
  ++step_count_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  std::vector<double*> p, m, v;
  std::vector<const double*> g;
  std::vector<Eigen::Index> sizes;
  for_each_parameter_block(params, [&](double* d, Eigen::Index n) { p.push_back(d); sizes.push_back(n); });
  for_each_parameter_block(m_, [&](double* d, Eigen::Index) { m.push_back(d); });
  for_each_parameter_block(v_, [&](double* d, Eigen::Index) { v.push_back(d); });
  for_each_parameter_block(grad, [&](const double* d, Eigen::Index) { g.push_back(d); });
  for (std::size_t b = 0; b < p.size(); ++b) {
    for (Eigen::Index i = 0; i < sizes[b]; ++i) {
      const double gi = g[b][i];
      m[b][i] = beta1_ * m[b][i] + (1.0 - beta1_) * gi;
      v[b][i] = beta2_ * v[b][i] + (1.0 - beta2_) * gi * gi;
      const double mhat = m[b][i] / c1;
      const double vhat = v[b][i] / c2;
      p[b][i] -= lr * mhat / (std::sqrt(vhat) + epsilon_);
    }
  }
}

TrainResult train(std::span<const Sample> dataset, const TrainConfig& cfg, QualityModel init) {
  cfg.validate();
  init.validate();
  if (dataset.empty()) throw ValidationError("training set is empty");
  for (const Sample& s : dataset) {
    if (s.clips.size() != dataset.front().clips.size()) {
      throw ValidationError("training samples have different clip counts");
    }
    if (!std::isfinite(s.mos)) throw ValidationError("training label is not finite");
    for (const ClipFeatures& c : s.clips) {
      if (c.spatial.values.size() != init.spatial_dim() || c.temporal.values.size() != init.temporal_dim()) {
        throw ValidationError("feature dimensions do not match the model");
      }
    }
  }

  TrainResult result;
  result.model = std::move(init);
  result.initial_loss = loss_and_gradient(result.model, dataset, nullptr);
  AdamOptimizer adam(result.model, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);

  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), dataset.size());
  std::vector<std::size_t> order(dataset.size());
  std::vector<Sample> minibatch;
  QualityModel grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = learning_rate_at(cfg, epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, "epoch-order", static_cast<std::uint64_t>(epoch)));
    shuffle(std::span<std::size_t>(order), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      minibatch.clear();
      for (std::size_t i = start; i < stop; ++i) minibatch.push_back(dataset[order[i]]);
      const double batch_loss = loss_and_gradient(result.model, minibatch, &grad);
      if (!std::isfinite(batch_loss)) throw TrainingDiverged(epoch, "non-finite batch loss");
      adam.step(result.model, grad, lr);
    }
    const double loss = loss_and_gradient(result.model, dataset, nullptr);
    if (!std::isfinite(loss)) throw TrainingDiverged(epoch, "non-finite training loss");
    if (loss > 1e6 * std::max(result.initial_loss, 1e-300)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "loss %.6g exceeds 1e6 times the initial %.6g", loss,
                    result.initial_loss);
      throw TrainingDiverged(epoch, buf);
    }
    result.curve.push_back({epoch, lr, loss});
  }
  return result;
}

void write_loss_csv(std::ostream& os, std::span<const EpochStats> curve) {
  os << "epoch,lr,loss\n";
  char line[128];
  for (const EpochStats& e : curve) {
    std::snprintf(line, sizeof line, "%d,%.6g,%.6g\n", e.epoch, e.learning_rate, e.loss);
    os << line;
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[4] = {'O', 'Q', 'A', 'M'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(&v);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(bytes[i]);
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw ParseError("checkpoint is truncated");
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

void put_matrix(std::vector<std::uint8_t>& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_le(out, static_cast<float>(m(r, c)));
  }
}

void get_matrix(std::span<const std::uint8_t> bytes, std::size_t& pos, Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get_le<float>(bytes, pos);
  }
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const QualityModel& model) {
  model.validate();
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_le(out, kVersion);
  put_le(out, static_cast<std::uint32_t>(model.spatial_dim()));
  put_le(out, static_cast<std::uint32_t>(model.temporal_dim()));
  put_le(out, static_cast<std::uint32_t>(model.aligned_dim()));
  put_matrix(out, model.fusion.ws);
  put_matrix(out, model.fusion.wp);
  put_matrix(out, model.head.w1);
  put_matrix(out, model.head.b1);
  put_matrix(out, model.head.w2.transpose());
  put_le(out, static_cast<float>(model.head.b2));
  return out;
}

QualityModel decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ParseError("not a model checkpoint (bad magic)");
  }
  std::size_t pos = 4;
  const auto version = get_le<std::uint16_t>(bytes, pos);
  if (version != kVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
  const auto cs = get_le<std::uint32_t>(bytes, pos);
  const auto ct = get_le<std::uint32_t>(bytes, pos);
  const auto ca = get_le<std::uint32_t>(bytes, pos);
  if (cs == 0 || ct == 0 || ca == 0 || cs > (1u << 20) || ct > (1u << 20) || ca > (1u << 16)) {
    throw ParseError("checkpoint declares implausible dimensions");
  }
  QualityModel m = QualityModel::zeros(cs, ct, ca);
  get_matrix(bytes, pos, m.fusion.ws);
  get_matrix(bytes, pos, m.fusion.wp);
  get_matrix(bytes, pos, m.head.w1);
  Eigen::MatrixXd b1(kHiddenUnits, 1);
  get_matrix(bytes, pos, b1);
  m.head.b1 = b1.col(0);
  Eigen::MatrixXd w2(1, kHiddenUnits);
  get_matrix(bytes, pos, w2);
  m.head.w2 = w2.row(0).transpose();
  m.head.b2 = get_le<float>(bytes, pos);
  if (pos != bytes.size()) throw ParseError("checkpoint has trailing bytes");
  try {
    m.validate();
  } catch (const ValidationError& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const QualityModel& model) {
  const auto bytes = encode_checkpoint(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

QualityModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace pcvqa
