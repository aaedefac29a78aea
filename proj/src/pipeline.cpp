#include "pcvqa/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "pcvqa/error.hpp"
#include "pcvqa/random.hpp"

namespace pcvqa {

namespace fs = std::filesystem;

CaptureSetup prepare_capture(const PointCloud& pc, const PipelineConfig& cfg) {
  cfg.validate();
  CaptureSetup s;
  s.center = mean_center(pc);
  s.bounding_radius = bounding_radius(pc, s.center);
  s.view_radius = choose_radius(s.bounding_radius, cfg.kappa, cfg.render.vertical_fov_deg);
  s.render = with_clip_planes(cfg.render, s.view_radius, s.bounding_radius);
  s.sequence = build_sequence(s.center, s.view_radius, cfg.step_deg, cfg.pathways);
  return s;
}

std::vector<int> select_keyframes(std::span<const Trajectory> sequence, const PipelineConfig& cfg) {
  if (cfg.keyframe_mode == KeyframeMode::vmd) return select_vmd(sequence, cfg.vmd_objective).indices;
  return select_fixed(cfg.keyframe_index, sequence).indices;
}

CloudFeatures CloudFeatures::select(std::span<const PathwayId> subset) const {
  CloudFeatures out;
  for (const PathwayId id : subset) {
    const auto it = std::find(pathways.begin(), pathways.end(), id);
    if (it == pathways.end()) {
      throw ValidationError(std::string("features lack pathway ") + pathway_letter(id));
    }
    const auto i = static_cast<std::size_t>(it - pathways.begin());
    out.pathways.push_back(id);
    if (i < keyframes.size()) out.keyframes.push_back(keyframes[i]);
    out.test_clips.push_back(test_clips[i]);
    out.train_clips.push_back(train_clips[i]);
  }
  return out;
}

std::uint64_t crop_seed(const PipelineConfig& cfg, const std::string& cloud_id, std::size_t clip) {
  return derive_seed(cfg.seed, "train-crop:" + cloud_id, clip);
}

namespace {

// Collects, per clip, the 224x224 resized frames and the two key frame patches.
class ClipAccumulator {
 public:
  ClipAccumulator(std::vector<PathwayId> pathways, std::vector<int> keyframes, const PipelineConfig& cfg,
                  std::string cloud_id)
      : pathways_(std::move(pathways)),
        keyframes_(std::move(keyframes)),
        cfg_(cfg),
        id_(std::move(cloud_id)),
        small_(pathways_.size()),
        center_(pathways_.size()),
        train_(pathways_.size()) {}

  void add(std::size_t clip, std::size_t index, const Frame& frame) {
    small_[clip].push_back(ImageF::from_frame(resize_frame(frame, kPatchSize, kPatchSize)));
    if (static_cast<int>(index) == keyframes_[clip]) {
      center_[clip] = crop_patch(frame, kPatchSize, CropMode::center);
      train_[clip] = crop_patch(frame, kPatchSize, cfg_.train_crop, crop_seed(cfg_, id_, clip));
    }
  }

  CloudFeatures finish() {
    CloudFeatures f;
    f.pathways = pathways_;
    f.keyframes = keyframes_;
    for (std::size_t c = 0; c < pathways_.size(); ++c) {
      if (center_[c].pixels.empty()) {
        throw ValidationError("key frame " + std::to_string(keyframes_[c]) + " missing from clip " +
                              pathway_letter(pathways_[c]));
      }
      const TemporalFeatures t = temporal_extract_ref(small_[c]);
      f.test_clips.push_back({spatial_extract_ref(center_[c]), t});
      f.train_clips.push_back({spatial_extract_ref(train_[c]), t});
      small_[c].clear();
    }
    return f;
  }

 private:
  std::vector<PathwayId> pathways_;
  std::vector<int> keyframes_;
  const PipelineConfig& cfg_;
  std::string id_;
  std::vector<std::vector<ImageF>> small_;
  std::vector<Frame> center_;
  std::vector<Frame> train_;
};

std::vector<PathwayId> pathways_of(std::span<const Trajectory> seq) {
  std::vector<PathwayId> ids;
  for (const auto& t : seq) ids.push_back(t.pathway);
  return ids;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string manifest_value(const std::string& manifest, const std::string& key) {
  std::istringstream in(manifest);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
  }
  return {};
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CloudFeatures extract_cloud_features(const PointCloud& pc, const PipelineConfig& cfg, const std::string& cloud_id) {
  const CaptureSetup setup = prepare_capture(pc, cfg);
  ClipAccumulator acc(pathways_of(setup.sequence), select_keyframes(setup.sequence, cfg), cfg, cloud_id);
  capture_video_streaming(pc, setup.sequence, setup.render,
                          [&](std::size_t c, std::size_t k, const Frame& f) { acc.add(c, k, f); });
  return acc.finish();
}

CloudFeatures extract_from_clips(std::span<const Clip> clips, std::span<const int> keyframes,
                                 const PipelineConfig& cfg, const std::string& cloud_id) {
  if (clips.size() != keyframes.size()) throw ValidationError("one key frame index per clip is required");
  std::vector<PathwayId> ids;
  for (const Clip& c : clips) ids.push_back(c.pathway);
  ClipAccumulator acc(ids, std::vector<int>(keyframes.begin(), keyframes.end()), cfg, cloud_id);
  for (std::size_t c = 0; c < clips.size(); ++c) {
    const int n = static_cast<int>(clips[c].frames.size());
    if (keyframes[c] < 0 || keyframes[c] >= n) {
      throw ValidationError("key frame index " + std::to_string(keyframes[c]) + " outside clip of " +
                            std::to_string(n) + " frames");
    }
    for (std::size_t k = 0; k < clips[c].frames.size(); ++k) acc.add(c, k, clips[c].frames[k]);
  }
  return acc.finish();
}

CaptureSummary run_capture(const fs::path& ply, const PipelineConfig& cfg, const fs::path& out_dir) {
  const PointCloud pc = read_ply_file(ply);
  const CaptureSetup setup = prepare_capture(pc, cfg);
  fs::create_directories(out_dir);

  std::vector<fs::path> dirs;
  std::vector<std::ofstream> frame_lists;
  for (const Trajectory& t : setup.sequence) {
    const fs::path d = out_dir / (std::string("clip_") + pathway_letter(t.pathway));
    fs::create_directories(d);
    dirs.push_back(d);
    frame_lists.emplace_back(d / "frames.txt", std::ios::binary);
    if (!frame_lists.back()) throw IoError("cannot create '" + (d / "frames.txt").string() + "'");
  }
  CaptureSummary summary;
  capture_video_streaming(pc, setup.sequence, setup.render, [&](std::size_t c, std::size_t k, const Frame& f) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%03zu.png", k);
    write_png(dirs[c] / name, f);
    frame_lists[c] << k << ' ' << name << ' ' << pathway_letter(setup.sequence[c].pathway) << '\n';
    ++summary.frames;
  });
  for (auto& fl : frame_lists) fl.close();

  std::ostringstream traj;
  write_trajectory_table(traj, setup.sequence);
  write_text(out_dir / "trajectory.txt", traj.str());
  write_text(out_dir / "config.txt", cfg.canonical());

  summary.config_hash = cfg.hash();
  const Vec3& c = setup.center.xyz;
  std::ostringstream m;
  m << "config_hash " << summary.config_hash << '\n'
    << "seed " << cfg.seed << '\n'
    << "source " << ply.generic_string() << '\n'
    << "points " << pc.size() << '\n'
    << "center " << fmt17(c.x) << ' ' << fmt17(c.y) << ' ' << fmt17(c.z) << '\n'
    << "bounding_radius " << fmt17(setup.bounding_radius) << '\n'
    << "view_radius " << fmt17(setup.view_radius) << '\n'
    << "pathways " << pathways_string(cfg.pathways) << '\n'
    << "frames_per_clip " << cfg.frames_per_clip() << '\n'
    << "frames " << summary.frames << '\n';
  write_text(out_dir / "manifest.txt", m.str());
  return summary;
}

void write_cloud_features(const fs::path& dir, const CloudFeatures& f) {
  fs::create_directories(dir / "train_crops");
  for (std::size_t c = 0; c < f.pathways.size(); ++c) {
    const std::string p(1, pathway_letter(f.pathways[c]));
    write_feature_file(dir / (p + "_spatial.oqaf"), vector_feature_map(f.test_clips[c].spatial.values));
    write_feature_file(dir / (p + "_temporal.oqaf"), vector_feature_map(f.test_clips[c].temporal.values));
    write_feature_file(dir / "train_crops" / (p + "_spatial.oqaf"),
                       vector_feature_map(f.train_clips[c].spatial.values));
  }
  std::string line = pathways_string(f.pathways) + ' ' + format_selection(f.keyframes) + '\n';
  write_text(dir / "keyframes.txt", line);
}

CloudFeatures import_cloud_features(const fs::path& dir, std::span<const PathwayId> pathways) {
  CloudFeatures f;
  for (const PathwayId id : pathways) {
    const std::string p(1, pathway_letter(id));
    ClipFeatures clip;
    clip.spatial.values = gap(import_features(dir / (p + "_spatial.oqaf")));
    clip.temporal.values = gap(import_features(dir / (p + "_temporal.oqaf")));
    f.pathways.push_back(id);
    f.test_clips.push_back(clip);
    f.train_clips.push_back(std::move(clip));
  }
  return f;
}

CloudFeatures read_cloud_features(const fs::path& dir, std::span<const PathwayId> pathways) {
  CloudFeatures f = import_cloud_features(dir, pathways);
  if (fs::exists(dir / "train_crops")) {
    for (std::size_t c = 0; c < f.pathways.size(); ++c) {
      const std::string p(1, pathway_letter(f.pathways[c]));
      f.train_clips[c].spatial.values = gap(import_features(dir / "train_crops" / (p + "_spatial.oqaf")));
    }
  }
  if (fs::exists(dir / "keyframes.txt")) {
    std::istringstream in(read_text(dir / "keyframes.txt"));
    std::string letters;
    in >> letters;
    std::vector<int> all;
    int k = 0;
    while (in >> k) all.push_back(k);
    for (const PathwayId id : f.pathways) {
      const auto pos = letters.find(pathway_letter(id));
      if (pos != std::string::npos && pos < all.size()) f.keyframes.push_back(all[pos]);
    }
  }
  return f;
}

CloudFeatures run_features(const fs::path& capture_dir, const PipelineConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  CloudFeatures f;
  if (cfg.extractor == ExtractorMode::import) {
    f = import_cloud_features(cfg.import_dir.empty() ? capture_dir : cfg.import_dir, cfg.pathways);
  } else {
    const std::string manifest = read_text(capture_dir / "manifest.txt");
    const std::string source = manifest_value(manifest, "source");
    std::ifstream traj_in(capture_dir / "trajectory.txt");
    if (!traj_in) throw IoError("capture directory lacks trajectory.txt");
    const auto all = read_trajectory_table(traj_in);
    std::vector<Trajectory> seq;
    std::vector<Clip> clips;
    for (const PathwayId id : cfg.pathways) {
      const auto it = std::find_if(all.begin(), all.end(), [&](const Trajectory& t) { return t.pathway == id; });
      if (it == all.end()) throw ValidationError(std::string("capture lacks pathway ") + pathway_letter(id));
      seq.push_back(*it);
      clips.push_back(import_clip(capture_dir / (std::string("clip_") + pathway_letter(id))));
      if (clips.back().frames.size() != it->poses.size()) {
        throw ValidationError(std::string("clip ") + pathway_letter(id) + " has " +
                              std::to_string(clips.back().frames.size()) + " frames, trajectory has " +
                              std::to_string(it->poses.size()));
      }
    }
    const auto keyframes = select_keyframes(seq, cfg);
    f = extract_from_clips(clips, keyframes, cfg, source.empty() ? capture_dir.generic_string() : source);
  }
  write_cloud_features(out_dir, f);
  return f;
}

CloudFeatures features_for_path(const fs::path& path, const PipelineConfig& cfg) {
  if (fs::is_directory(path)) {
    const std::string first(1, pathway_letter(cfg.pathways.front()));
    if (fs::exists(path / (first + "_temporal.oqaf"))) return read_cloud_features(path, cfg.pathways);
    if (fs::exists(path / "trajectory.txt")) {
      const fs::path tmp = fs::temp_directory_path() / ("pcvqa_features_" + cfg.hash());
      CloudFeatures f = run_features(path, cfg, tmp);
      fs::remove_all(tmp);
      return f;
    }
    throw ValidationError("'" + path.string() + "' is neither a feature nor a capture directory");
  }
  if (cfg.extractor == ExtractorMode::import) {
    throw ValidationError("extractor = import needs feature directories, got file '" + path.string() + "'");
  }
  return extract_cloud_features(read_ply_file(path), cfg, path.generic_string());
}

// ---------------------------------------------------------------------------

std::vector<Sample> training_samples(std::span<const LabeledFeatures> data, std::span<const std::size_t> which) {
  std::vector<Sample> out;
  out.reserve(which.size());
  for (const std::size_t i : which) out.push_back({data[i].features.train_clips, data[i].mos});
  return out;
}

TrainResult train_on(std::span<const LabeledFeatures> data, std::span<const std::size_t> which,
                     const PipelineConfig& cfg, std::uint64_t seed) {
  if (which.empty()) throw ValidationError("no training samples");
  const auto samples = training_samples(data, which);
  const ClipFeatures& first = samples.front().clips.front();
  QualityModel init = QualityModel::initialize(first.spatial.values.size(), first.temporal.values.size(),
                                               cfg.aligned_channels, seed);
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  return train(samples, tc, std::move(init));
}

double predict_score(const QualityModel& model, const CloudFeatures& f) {
  return predict(model, f.test_clips).overall;
}

KFoldResult run_kfold(std::span<const LabeledFeatures> data, const PipelineConfig& cfg) {
  std::vector<ManifestEntry> entries;
  for (const auto& d : data) entries.push_back({d.id, d.mos, d.group});
  const auto folds = kfold_split(entries, cfg.folds, cfg.seed);
  KFoldResult result;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  double sums[4] = {0, 0, 0, 0};
  for (std::size_t f = 0; f < folds.size(); ++f) {
    FoldResult fr;
    fr.test = folds[f].test;
    TrainResult tr = train_on(data, folds[f].train, cfg, derive_seed(cfg.seed, "fold", f));
    fr.curve = tr.curve;
    std::vector<double> mos;
    for (const std::size_t i : fr.test) {
      fr.predictions.push_back(predict_score(tr.model, data[i].features));
      mos.push_back(data[i].mos);
    }
    try {
      fr.report = evaluate(fr.predictions, mos, cfg.mapping);
    } catch (const UndefinedStatistic&) {
      fr.defined = false;
      fr.report.n = mos.size();
      fr.report.srcc = fr.report.krcc = fr.report.plcc = fr.report.rmse = nan;
    }
    sums[0] += fr.report.srcc;
    sums[1] += fr.report.krcc;
    sums[2] += fr.report.plcc;
    sums[3] += fr.report.rmse;
    result.mean.n += fr.report.n;
    result.folds.push_back(std::move(fr));
  }
  const double k = static_cast<double>(folds.size());
  result.mean.srcc = sums[0] / k;
  result.mean.krcc = sums[1] / k;
  result.mean.plcc = sums[2] / k;
  result.mean.rmse = sums[3] / k;
  for (auto& b : result.mean.logistic.beta) b = nan;
  return result;
}

void write_kfold_table(std::ostream& os, const KFoldResult& r) {
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %5s %10s %10s %10s %10s\n", "fold", "n", "SRCC", "KRCC", "PLCC", "RMSE");
  os << line;
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    const auto& rep = r.folds[f].report;
    std::snprintf(line, sizeof line, "%-6zu %5zu %10.6g %10.6g %10.6g %10.6g\n", f + 1, rep.n, rep.srcc, rep.krcc,
                  rep.plcc, rep.rmse);
    os << line;
  }
  std::snprintf(line, sizeof line, "%-6s %5zu %10.6g %10.6g %10.6g %10.6g\n", "mean", r.mean.n, r.mean.srcc,
                r.mean.krcc, r.mean.plcc, r.mean.rmse);
  os << line;
}

void write_kfold_csv(std::ostream& os, const KFoldResult& r) {
  write_report_csv_header(os, true);
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    write_report_csv_row(os, r.folds[f].report, "fold" + std::to_string(f + 1));
  }
  write_report_csv_row(os, r.mean, "mean");
}

}  // namespace pcvqa
