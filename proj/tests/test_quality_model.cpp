#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pcvqa/error.hpp"
#include "pcvqa/quality_model.hpp"
#include "test_util.hpp"

using namespace pcvqa;
using testutil::random_clip_features;
using testutil::linear_teacher;
using testutil::teacher_config;

namespace {

Sample random_sample(int cs, int ct, Rng& rng, std::size_t clips = 4) {
  Sample s;
  for (std::size_t c = 0; c < clips; ++c) s.clips.push_back(random_clip_features(cs, ct, rng));
  s.mos = rng.uniform(1, 5);
  return s;
}

std::vector<double*> parameters(QualityModel& m) {
  std::vector<double*> out;
  for_each_parameter_block(m, [&](double* d, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) out.push_back(d + i);
  });
  return out;
}

}  // namespace

TEST(Model, InitializeShapesAndBounds) {
  const QualityModel m = QualityModel::initialize(15, 12, 32, 5);
  EXPECT_EQ(m.fusion.ws.rows(), 32);
  EXPECT_EQ(m.fusion.ws.cols(), 15);
  EXPECT_EQ(m.fusion.wp.cols(), 12);
  EXPECT_EQ(m.head.w1.rows(), kHiddenUnits);
  EXPECT_EQ(m.head.w1.cols(), 64);
  EXPECT_EQ(m.head.w2.size(), kHiddenUnits);
  EXPECT_TRUE(m.head.b1.isZero());
  EXPECT_EQ(m.head.b2, 0.0);
  EXPECT_LE(m.fusion.ws.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 47));
  EXPECT_LE(m.head.w1.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 192));
  EXPECT_LE(m.head.w2.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 129));
  const QualityModel same = QualityModel::initialize(15, 12, 32, 5);
  EXPECT_EQ(m.head.w1, same.head.w1);
  EXPECT_NE(m.head.w1, QualityModel::initialize(15, 12, 32, 6).head.w1);
}

TEST(Model, ForwardMatchesLoopOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    QualityModel m = QualityModel::initialize(15, 12, 32, 100 + trial);
    for (Eigen::Index i = 0; i < m.head.b1.size(); ++i) m.head.b1[i] = rng.uniform(-0.5, 0.5);
    m.head.b2 = rng.uniform(-1, 1);
    const auto net = testutil::to_net(m);
    const ClipFeatures c = random_clip_features(15, 12, rng);
    const double want = oracle::clip_score(net, testutil::to_std(c.spatial.values), testutil::to_std(c.temporal.values));
    const double got = predict_clip(fuse(c.spatial, c.temporal, m.fusion), m.head);
    EXPECT_NEAR(got, want, 1e-12 * std::max(1.0, std::abs(want)));
  }
}

TEST(Model, PredictClipRectifies) {
  RegressionHead h;
  h.w1 = Eigen::MatrixXd::Zero(2, 2);
  h.w1(0, 0) = 1;
  h.w1(1, 1) = 1;
  h.b1 = Eigen::VectorXd::Zero(2);
  h.w2 = Eigen::VectorXd::Ones(2);
  h.b2 = 0.5;
  EXPECT_DOUBLE_EQ(predict_clip(Eigen::Vector2d(2, -3), h), 2.5);
  EXPECT_DOUBLE_EQ(predict_clip(Eigen::Vector2d(-1, -1), h), 0.5);
  EXPECT_THROW(predict_clip(Eigen::Vector3d(1, 1, 1), h), ValidationError);
}

TEST(PredictPointcloud, Examples) {
  const std::vector<double> c(4, 3.25);
  EXPECT_DOUBLE_EQ(predict_pointcloud(c).overall, 3.25);
  const std::vector<double> s{1, 2, 3, 4};
  const QualityScore q = predict_pointcloud(s);
  EXPECT_DOUBLE_EQ(q.overall, 2.5);
  EXPECT_EQ(q.per_clip, s);
}

TEST(PredictPointcloud, SubsetAveragesOverM) {
  const std::vector<double> three{1, 2, 6};
  EXPECT_DOUBLE_EQ(predict_pointcloud(three, 3).overall, 3.0);
  const std::vector<double> one{4.5};
  EXPECT_DOUBLE_EQ(predict_pointcloud(one, 1).overall, 4.5);
  EXPECT_THROW(predict_pointcloud(three), ValidationError);
  EXPECT_THROW(predict_pointcloud(std::vector<double>{}, 0), ValidationError);
}

TEST(PredictPointcloud, PermutationInvariant) {
  std::vector<double> s{0.3, -1.7, 2.9, 4.4};
  const double base = predict_pointcloud(s).overall;
  std::sort(s.begin(), s.end());
  do {
    EXPECT_DOUBLE_EQ(predict_pointcloud(s).overall, base);
  } while (std::next_permutation(s.begin(), s.end()));
}

TEST(Predict, FullForwardAveragesClips) {
  Rng rng(4);
  const QualityModel m = QualityModel::initialize(6, 5, 8, 2);
  const Sample s = random_sample(6, 5, rng);
  const QualityScore q = predict(m, s.clips);
  ASSERT_EQ(q.per_clip.size(), 4u);
  double mean = 0.0;
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_DOUBLE_EQ(q.per_clip[c], predict_clip(fuse(s.clips[c].spatial, s.clips[c].temporal, m.fusion), m.head));
    mean += q.per_clip[c] / 4;
  }
  EXPECT_NEAR(q.overall, mean, 1e-15);
}

TEST(MseLoss, Examples) {
  const std::vector<double> a{1.5, 2, -3};
  EXPECT_EQ(mse_loss(a, a), 0.0);
  EXPECT_EQ(mse_loss(std::vector<double>{3}, std::vector<double>{1}), 4.0);
  EXPECT_THROW(mse_loss(a, std::vector<double>{1, 2}), ValidationError);
  EXPECT_THROW(mse_loss(std::vector<double>{}, std::vector<double>{}), ValidationError);
}

TEST(MseLoss, MatchesSummationOracle) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(300);
    std::vector<double> p(n), l(n), sq(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.uniform(-5, 5);
      l[i] = rng.uniform(-5, 5);
      sq[i] = (l[i] - p[i]) * (l[i] - p[i]);
    }
    EXPECT_NEAR(mse_loss(p, l), oracle::compensated_sum(sq) / static_cast<double>(n), 1e-12);
  }
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    QualityModel m = QualityModel::initialize(15, 12, 32, 50 + trial);
    for (Eigen::Index i = 0; i < m.head.b1.size(); ++i) m.head.b1[i] = rng.uniform(-0.3, 0.3);
    std::vector<Sample> batch;
    for (int s = 0; s < 3; ++s) batch.push_back(random_sample(15, 12, rng));
    testutil::away_from_kinks(m, batch, rng);
    QualityModel grad;
    loss_and_gradient(m, batch, &grad);
    auto p = parameters(m);
    auto g = parameters(grad);
    ASSERT_EQ(p.size(), g.size());
    // Check a spread of parameters from every block, including the last bias.
    for (std::size_t k = 0; k < p.size(); k += 97) {
      for (std::size_t idx : {k, p.size() - 1}) {
        const double saved = *p[idx];
        const double h = 1e-4;
        *p[idx] = saved + h;
        const double up = loss_and_gradient(m, batch, nullptr);
        *p[idx] = saved - h;
        const double down = loss_and_gradient(m, batch, nullptr);
        *p[idx] = saved;
        const double fd = (up - down) / (2 * h);
        EXPECT_LE(std::abs(fd - *g[idx]), 1e-4 * std::max({std::abs(fd), std::abs(*g[idx]), 1e-6}))
            << "parameter " << idx << " fd " << fd << " analytic " << *g[idx];
      }
    }
  }
}

TEST(Gradient, EmptyBatchRejected) {
  const QualityModel m = QualityModel::initialize(3, 3, 4, 1);
  EXPECT_THROW(loss_and_gradient(m, {}, nullptr), ValidationError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  QualityModel m = QualityModel::initialize(15, 12, 32, 8);
  const QualityModel before = m;
  AdamOptimizer adam(m, 0.9, 0.999, 1e-8);
  const QualityModel zero = QualityModel::zeros(15, 12, 32);
  for (int i = 0; i < 3; ++i) adam.step(m, zero, 1e-2);
  EXPECT_EQ(m.fusion.ws, before.fusion.ws);
  EXPECT_EQ(m.fusion.wp, before.fusion.wp);
  EXPECT_EQ(m.head.w1, before.head.w1);
  EXPECT_EQ(m.head.b1, before.head.b1);
  EXPECT_EQ(m.head.w2, before.head.w2);
  EXPECT_EQ(m.head.b2, before.head.b2);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  QualityModel m = QualityModel::zeros(2, 2, 2);
  QualityModel g = QualityModel::zeros(2, 2, 2);
  g.head.b2 = 3.0;
  g.fusion.ws(0, 0) = -0.01;
  AdamOptimizer adam(m, 0.9, 0.999, 1e-8);
  adam.step(m, g, 0.1);
  EXPECT_NEAR(m.head.b2, -0.1, 1e-8);
  EXPECT_NEAR(m.fusion.ws(0, 0), 0.1, 1e-6);
  EXPECT_EQ(m.head.w1(0, 0), 0.0);
}

TEST(Schedule, StepDecay) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(learning_rate_at(cfg, 0), 5e-5);
  EXPECT_DOUBLE_EQ(learning_rate_at(cfg, 9), 5e-5);
  EXPECT_DOUBLE_EQ(learning_rate_at(cfg, 10), 5e-5 * 0.9);
  EXPECT_NEAR(learning_rate_at(cfg, 25), 4.05e-5, 1e-18);
  EXPECT_NEAR(learning_rate_at(cfg, 49), 5e-5 * std::pow(0.9, 4), 1e-18);
}

TEST(TrainConfigCheck, Rejects) {
  auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), ValidationError);
  };
  bad([](TrainConfig& c) { c.batch_size = 0; });
  bad([](TrainConfig& c) { c.epochs = 0; });
  bad([](TrainConfig& c) { c.learning_rate = -1; });
  bad([](TrainConfig& c) { c.lr_decay_every = 0; });
  bad([](TrainConfig& c) { c.adam_beta2 = 1.0; });
}

TEST(Train, LinearTeacherConvergesMonotonically) {
  const testutil::LinearTeacher t = linear_teacher(64);
  const TrainResult r = train(t.data, teacher_config(), t.init);
  ASSERT_EQ(r.curve.size(), 50u);
  EXPECT_GT(r.initial_loss, 1e-2);
  EXPECT_LT(r.curve.back().loss, 1e-3);
  double prev = r.initial_loss;
  for (const EpochStats& e : r.curve) {
    EXPECT_LE(e.loss, prev + 1e-8) << "epoch " << e.epoch;
    prev = e.loss;
  }
  std::vector<double> pred, labels;
  for (const Sample& s : t.data) {
    pred.push_back(predict(r.model, s.clips).overall);
    labels.push_back(s.mos);
  }
  EXPECT_NEAR(mse_loss(pred, labels), r.curve.back().loss, 1e-12);
}

TEST(Train, DeterministicForSeed) {
  Rng rng(5);
  std::vector<Sample> data;
  for (int i = 0; i < 40; ++i) data.push_back(random_sample(15, 12, rng));
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 17;
  const QualityModel init = QualityModel::initialize(15, 12, 32, 1);
  const TrainResult a = train(data, cfg, init);
  const TrainResult b = train(data, cfg, init);
  EXPECT_EQ(encode_checkpoint(a.model), encode_checkpoint(b.model));
  EXPECT_TRUE(a.model.head.w1 == b.model.head.w1);
  EXPECT_TRUE(a.model.fusion.ws == b.model.fusion.ws);
  for (std::size_t e = 0; e < a.curve.size(); ++e) EXPECT_EQ(a.curve[e].loss, b.curve[e].loss);
  cfg.seed = 18;
  const TrainResult c = train(data, cfg, init);
  EXPECT_FALSE(c.model.head.w1 == a.model.head.w1);
}

TEST(Train, CurveRecordsSchedule) {
  Rng rng(6);
  std::vector<Sample> data;
  for (int i = 0; i < 5; ++i) data.push_back(random_sample(4, 3, rng));
  TrainConfig cfg;
  cfg.epochs = 21;
  const TrainResult r = train(data, cfg, QualityModel::initialize(4, 3, 8, 0));
  ASSERT_EQ(r.curve.size(), 21u);
  for (const EpochStats& e : r.curve) {
    EXPECT_EQ(e.learning_rate, learning_rate_at(cfg, e.epoch));
  }
}

TEST(Train, DivergenceReportsEpoch) {
  Rng rng(7);
  std::vector<Sample> data;
  for (int i = 0; i < 4; ++i) {
    Sample s = random_sample(4, 3, rng);
    for (ClipFeatures& c : s.clips) c.spatial.values *= 1e200;
    data.push_back(std::move(s));
  }
  try {
    train(data, TrainConfig{}, QualityModel::initialize(4, 3, 8, 0));
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_EQ(e.epoch(), 0);
    EXPECT_NE(std::string(e.what()).find("epoch 0"), std::string::npos);
  }
}

TEST(Train, RejectsBadInput) {
  Rng rng(8);
  const QualityModel init = QualityModel::initialize(4, 3, 8, 0);
  EXPECT_THROW(train({}, TrainConfig{}, init), ValidationError);
  std::vector<Sample> data{random_sample(4, 3, rng), random_sample(5, 3, rng)};
  EXPECT_THROW(train(data, TrainConfig{}, init), ValidationError);
  data = {random_sample(4, 3, rng), random_sample(4, 3, rng, 3)};
  EXPECT_THROW(train(data, TrainConfig{}, init), ValidationError);
  data = {random_sample(4, 3, rng)};
  data[0].mos = std::nan("");
  EXPECT_THROW(train(data, TrainConfig{}, init), ValidationError);
}

TEST(Checkpoint, RoundTripIsFloat32) {
  QualityModel m = QualityModel::initialize(15, 12, 32, 3);
  m.head.b1.setConstant(0.1);
  m.head.b2 = -2.75;
  const auto bytes = encode_checkpoint(m);
  EXPECT_EQ(bytes.size(), 4 + 2 + 12 + 4 * static_cast<std::size_t>(32 * 15 + 32 * 12 + 128 * 64 + 128 + 128 + 1));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "OQAM");
  const QualityModel back = decode_checkpoint(bytes);
  EXPECT_EQ(back.spatial_dim(), 15);
  EXPECT_EQ(back.temporal_dim(), 12);
  EXPECT_EQ(back.aligned_dim(), 32);
  EXPECT_TRUE(back.head.w1 == m.head.w1.cast<float>().cast<double>());
  EXPECT_TRUE(back.fusion.wp == m.fusion.wp.cast<float>().cast<double>());
  EXPECT_EQ(back.head.b2, -2.75);
  EXPECT_EQ(encode_checkpoint(back), bytes);

  testutil::TempDir dir("ckpt");
  save_checkpoint(dir / "m.oqam", m);
  EXPECT_EQ(encode_checkpoint(load_checkpoint(dir / "m.oqam")), bytes);
  EXPECT_THROW(load_checkpoint(dir / "missing.oqam"), IoError);
}

TEST(Checkpoint, RejectsCorruption) {
  auto bytes = encode_checkpoint(QualityModel::initialize(3, 2, 4, 0));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), ParseError);
  bad = bytes;
  bad.pop_back();
  EXPECT_THROW(decode_checkpoint(bad), ParseError);
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW(decode_checkpoint(bad), ParseError);
}

TEST(LossCsv, Format) {
  std::vector<EpochStats> curve{{0, 5e-5, 0.25}, {1, 4.5e-5, 0.125}};
  std::ostringstream os;
  write_loss_csv(os, curve);
  EXPECT_EQ(os.str(), "epoch,lr,loss\n0,5e-05,0.25\n1,4.5e-05,0.125\n");
}
