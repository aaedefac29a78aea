// Command line front end: capture, features, train, predict, evaluate,
// pipeline and toydata.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "pcvqa/config.hpp"
#include "pcvqa/error.hpp"
#include "pcvqa/pipeline.hpp"
#include "pcvqa/toy_dataset.hpp"

namespace fs = std::filesystem;
using namespace pcvqa;

namespace {

struct GlobalOptions {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::vector<std::string> settings;
};

PipelineConfig resolve_config(const GlobalOptions& g) {
  PipelineConfig cfg;
  if (!g.config.empty()) cfg = load_config(g.config);
  for (const std::string& kv : g.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed_set) cfg.seed = g.seed;
  if (!g.out.empty()) cfg.out_dir = g.out;
  cfg.validate();
  return cfg;
}

std::vector<LabeledFeatures> load_features(const std::vector<ManifestEntry>& entries, const PipelineConfig& cfg) {
  std::vector<LabeledFeatures> data;
  data.reserve(entries.size());
  for (const auto& e : entries) {
    std::cerr << "features: " << e.path.generic_string() << '\n';
    data.push_back({e.path.generic_string(), e.group, e.mos, features_for_path(e.path, cfg)});
  }
  return data;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  return out;
}

// "path,score" CSV; relative paths resolve against the CSV's directory.
std::map<std::string, double> read_predictions(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open '" + csv.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("predictions file is empty");
  std::map<std::string, double> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw ParseError("predictions line " + std::to_string(lineno) + " lacks a score");
    }
    fs::path p = line.substr(0, comma);
    if (p.is_relative()) p = csv.parent_path() / p;
    try {
      out[p.lexically_normal().generic_string()] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ParseError("predictions line " + std::to_string(lineno) + " has a malformed score");
    }
  }
  return out;
}

int cmd_capture(const GlobalOptions& g, const std::string& ply) {
  const PipelineConfig cfg = resolve_config(g);
  const CaptureSummary s = run_capture(ply, cfg, cfg.out_dir);
  std::cout << s.frames << " frames written to " << cfg.out_dir.generic_string() << " (config " << s.config_hash
            << ")\n";
  return 0;
}

int cmd_features(const GlobalOptions& g, const std::string& capture_dir) {
  const PipelineConfig cfg = resolve_config(g);
  const CloudFeatures f = run_features(capture_dir, cfg, cfg.out_dir);
  std::cout << f.pathways.size() << " clips, key frames " << format_selection(f.keyframes) << '\n';
  return 0;
}

int cmd_train(const GlobalOptions& g, const std::string& manifest) {
  const PipelineConfig cfg = resolve_config(g);
  const auto entries = read_manifest(manifest);
  const auto data = load_features(entries, cfg);
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const TrainResult r = train_on(data, all, cfg, cfg.seed);
  fs::create_directories(cfg.out_dir);
  save_checkpoint(cfg.out_dir / "model.oqam", r.model);
  auto loss = open_out(cfg.out_dir / "loss.csv");
  write_loss_csv(loss, r.curve);
  std::printf("trained on %zu samples, final loss %.6g\n", data.size(), r.curve.empty() ? r.initial_loss
                                                                                         : r.curve.back().loss);
  return 0;
}

int cmd_predict(const GlobalOptions& g, const std::string& checkpoint, const std::string& target) {
  const PipelineConfig cfg = resolve_config(g);
  const QualityModel model = load_checkpoint(checkpoint);
  std::printf("%.6f\n", predict_score(model, features_for_path(target, cfg)));
  return 0;
}

int cmd_evaluate(const GlobalOptions& g, const std::string& predictions, const std::string& manifest) {
  const PipelineConfig cfg = resolve_config(g);
  const auto scores = read_predictions(predictions);
  const auto entries = read_manifest(manifest);
  std::vector<double> pred, mos;
  for (const auto& e : entries) {
    const auto it = scores.find(e.path.lexically_normal().generic_string());
    if (it == scores.end()) throw ValidationError("no prediction for '" + e.path.generic_string() + "'");
    pred.push_back(it->second);
    mos.push_back(e.mos);
  }
  const EvaluationReport r = evaluate(pred, mos, cfg.mapping);
  write_report_text(std::cout, r);
  if (!g.out.empty()) {
    auto out = open_out(cfg.out_dir / "report.csv");
    write_report_csv_header(out);
    write_report_csv_row(out, r);
  }
  return 0;
}

int cmd_pipeline(const GlobalOptions& g, const std::string& manifest) {
  const PipelineConfig cfg = resolve_config(g);
  const auto entries = read_manifest(manifest);
  const auto data = load_features(entries, cfg);
  const KFoldResult r = run_kfold(data, cfg);
  write_kfold_table(std::cout, r);
  fs::create_directories(cfg.out_dir);
  auto csv = open_out(cfg.out_dir / "report.csv");
  write_kfold_csv(csv, r);
  auto txt = open_out(cfg.out_dir / "report.txt");
  write_kfold_table(txt, r);
  auto preds = open_out(cfg.out_dir / "predictions.csv");
  preds << "fold,path,mos,score\n";
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    for (std::size_t j = 0; j < r.folds[f].test.size(); ++j) {
      const auto& d = data[r.folds[f].test[j]];
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6g,%.9g", d.mos, r.folds[f].predictions[j]);
      preds << f + 1 << ',' << d.id << ',' << buf << '\n';
    }
  }
  return 0;
}

int cmd_toydata(const GlobalOptions& g, const std::string& dir, std::size_t points) {
  const PipelineConfig cfg = resolve_config(g);
  write_toy_dataset(dir, cfg.seed, points);
  std::cout << "toy dataset written to " << dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"No-reference point cloud quality assessment via captured video"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "Config file of key = value lines");
  auto* seed_opt = app.add_option("--seed", g.seed, "Root seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--set", g.settings, "Override one setting, key=value");

  std::string a, b;
  std::size_t points = 20000;
  auto* capture = app.add_subcommand("capture", "Render the four-pathway video of a PLY cloud");
  capture->add_option("cloud", a, "PLY file")->required();
  auto* features = app.add_subcommand("features", "Extract pooled features from a capture directory");
  features->add_option("capture_dir", a, "Capture directory")->required();
  auto* train = app.add_subcommand("train", "Train a model on a manifest");
  train->add_option("manifest", a, "CSV with path,mos,group")->required();
  auto* predict = app.add_subcommand("predict", "Score a cloud, capture or feature directory");
  predict->add_option("checkpoint", a, "Model checkpoint")->required();
  predict->add_option("target", b, "PLY file or directory")->required();
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Compare predictions with a manifest");
  evaluate_cmd->add_option("predictions", a, "CSV with path,score")->required();
  evaluate_cmd->add_option("manifest", b, "CSV with path,mos,group")->required();
  auto* pipeline = app.add_subcommand("pipeline", "Grouped k-fold train and evaluate");
  pipeline->add_option("manifest", a, "CSV with path,mos,group")->required();
  auto* toydata = app.add_subcommand("toydata", "Write the synthetic shape dataset");
  toydata->add_option("dir", a, "Output directory")->required();
  toydata->add_option("--points", points, "Points per shape");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  g.seed_set = seed_opt->count() > 0;

  try {
    if (*capture) return cmd_capture(g, a);
    if (*features) return cmd_features(g, a);
    if (*train) return cmd_train(g, a);
    if (*predict) return cmd_predict(g, a, b);
    if (*evaluate_cmd) return cmd_evaluate(g, a, b);
    if (*pipeline) return cmd_pipeline(g, a);
    if (*toydata) return cmd_toydata(g, a, points);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
