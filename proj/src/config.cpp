#include "pcvqa/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include "pcvqa/error.hpp"

namespace pcvqa {
namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ValidationError("invalid value '" + std::string(value) + "' for config key '" + std::string(key) + "'");
}

double to_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(d)) bad_value(key, v);
  return d;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view v) {
  Int out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

Rgb8 to_rgb(std::string_view key, std::string_view v) {
  std::array<int, 3> c{};
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t comma = v.find(',', start);
    if ((i < 2) != (comma != std::string_view::npos)) bad_value(key, v);
    const std::string part = trim(v.substr(start, comma == std::string_view::npos ? v.npos : comma - start));
    c[static_cast<std::size_t>(i)] = to_int<int>(key, part);
    if (c[static_cast<std::size_t>(i)] < 0 || c[static_cast<std::size_t>(i)] > 255) bad_value(key, v);
    start = comma + 1;
  }
  return {static_cast<std::uint8_t>(c[0]), static_cast<std::uint8_t>(c[1]), static_cast<std::uint8_t>(c[2])};
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string pathways_string(const std::vector<PathwayId>& ids) {
  std::string s;
  for (const PathwayId id : ids) s += pathway_letter(id);
  return s;
}

std::vector<PathwayId> parse_pathways(std::string_view letters) {
  std::vector<PathwayId> out;
  for (const char c : letters) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) continue;
    const PathwayId id = pathway_from_letter(c);
    if (std::find(out.begin(), out.end(), id) != out.end()) {
      throw ValidationError(std::string("pathway '") + c + "' listed twice");
    }
    out.push_back(id);
  }
  if (out.empty()) throw ValidationError("pathway subset must not be empty");
  // Captures always run in A, B, C, D order.
  std::sort(out.begin(), out.end());
  return out;
}

void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  if (key == "width") cfg.render.width = to_int<int>(key, v);
  else if (key == "height") cfg.render.height = to_int<int>(key, v);
  else if (key == "vertical_fov") cfg.render.vertical_fov_deg = to_double(key, v);
  else if (key == "splat_radius") cfg.render.splat_radius = to_int<int>(key, v);
  else if (key == "background") cfg.render.background = to_rgb(key, v);
  else if (key == "step_deg") cfg.step_deg = to_double(key, v);
  else if (key == "kappa") cfg.kappa = to_double(key, v);
  else if (key == "pathways") cfg.pathways = parse_pathways(v);
  else if (key == "keyframe_mode") {
    if (v == "fixed") cfg.keyframe_mode = KeyframeMode::fixed;
    else if (v == "vmd") cfg.keyframe_mode = KeyframeMode::vmd;
    else bad_value(key, v);
  } else if (key == "keyframe_index") cfg.keyframe_index = to_int<int>(key, v);
  else if (key == "vmd_objective") {
    if (v == "max_min") cfg.vmd_objective = VmdObjective::max_min;
    else if (v == "max_sum") cfg.vmd_objective = VmdObjective::max_sum;
    else bad_value(key, v);
  } else if (key == "extractor") {
    if (v == "reference") cfg.extractor = ExtractorMode::reference;
    else if (v == "import") cfg.extractor = ExtractorMode::import;
    else bad_value(key, v);
  } else if (key == "import_dir") cfg.import_dir = v;
  else if (key == "train_crop") {
    if (v == "random") cfg.train_crop = CropMode::random;
    else if (v == "center") cfg.train_crop = CropMode::center;
    else bad_value(key, v);
  } else if (key == "aligned_channels") cfg.aligned_channels = to_int<int>(key, v);
  else if (key == "batch_size") cfg.train.batch_size = to_int<int>(key, v);
  else if (key == "epochs") cfg.train.epochs = to_int<int>(key, v);
  else if (key == "learning_rate") cfg.train.learning_rate = to_double(key, v);
  else if (key == "lr_decay") cfg.train.lr_decay = to_double(key, v);
  else if (key == "lr_decay_every") cfg.train.lr_decay_every = to_int<int>(key, v);
  else if (key == "adam_beta1") cfg.train.adam_beta1 = to_double(key, v);
  else if (key == "adam_beta2") cfg.train.adam_beta2 = to_double(key, v);
  else if (key == "adam_epsilon") cfg.train.adam_epsilon = to_double(key, v);
  else if (key == "mapping") {
    if (v == "correlation_only") cfg.mapping = MappingMode::correlation_only;
    else if (v == "all_criteria") cfg.mapping = MappingMode::all_criteria;
    else bad_value(key, v);
  } else if (key == "k") cfg.folds = to_int<int>(key, v);
  else if (key == "seed") cfg.seed = to_int<std::uint64_t>(key, v);
  else if (key == "out") cfg.out_dir = v;
  else throw ValidationError("unknown config key '" + std::string(key) + "'");
}

void PipelineConfig::validate() const {
  render.validate();
  const int n = frames_per_orbit(step_deg);
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");
  // Reuses the containment check without needing a cloud.
  (void)choose_radius(1.0, kappa, render.vertical_fov_deg);
  if (pathways.empty()) throw ValidationError("pathway subset must not be empty");
  if (keyframe_mode == KeyframeMode::fixed && (keyframe_index < 0 || keyframe_index >= n)) {
    throw ValidationError("keyframe_index " + std::to_string(keyframe_index) + " outside [0, " +
                          std::to_string(n) + ") for a " + fmt(step_deg) + " degree step");
  }
  if (render.width < kPatchSize || render.height < kPatchSize) {
    throw ValidationError("capture resolution must be at least 224x224");
  }
  if (extractor == ExtractorMode::import && import_dir.empty()) {
    throw ValidationError("extractor = import requires import_dir");
  }
  if (aligned_channels <= 0) throw ValidationError("aligned_channels must be positive");
  train.validate();
  if (folds < 2) throw ValidationError("k must be at least 2");
}

std::string PipelineConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["width"] = std::to_string(render.width);
  kv["height"] = std::to_string(render.height);
  kv["vertical_fov"] = fmt(render.vertical_fov_deg);
  kv["splat_radius"] = std::to_string(render.splat_radius);
  kv["background"] = std::to_string(render.background.r) + "," + std::to_string(render.background.g) + "," +
                     std::to_string(render.background.b);
  kv["step_deg"] = fmt(step_deg);
  kv["kappa"] = fmt(kappa);
  kv["pathways"] = pathways_string(pathways);
  kv["keyframe_mode"] = keyframe_mode == KeyframeMode::fixed ? "fixed" : "vmd";
  kv["keyframe_index"] = std::to_string(keyframe_index);
  kv["vmd_objective"] = vmd_objective == VmdObjective::max_min ? "max_min" : "max_sum";
  kv["extractor"] = extractor == ExtractorMode::reference ? "reference" : "import";
  kv["import_dir"] = import_dir.generic_string();
  kv["train_crop"] = train_crop == CropMode::random ? "random" : "center";
  kv["aligned_channels"] = std::to_string(aligned_channels);
  kv["batch_size"] = std::to_string(train.batch_size);
  kv["epochs"] = std::to_string(train.epochs);
  kv["learning_rate"] = fmt(train.learning_rate);
  kv["lr_decay"] = fmt(train.lr_decay);
  kv["lr_decay_every"] = std::to_string(train.lr_decay_every);
  kv["adam_beta1"] = fmt(train.adam_beta1);
  kv["adam_beta2"] = fmt(train.adam_beta2);
  kv["adam_epsilon"] = fmt(train.adam_epsilon);
  kv["mapping"] = mapping == MappingMode::correlation_only ? "correlation_only" : "all_criteria";
  kv["k"] = std::to_string(folds);
  kv["seed"] = std::to_string(seed);
  kv["out"] = out_dir.generic_string();
  std::string s;
  for (const auto& [k, v] : kv) s += k + " = " + v + "\n";
  return s;
}

std::string PipelineConfig::hash() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : canonical()) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PipelineConfig parse_config(std::istream& in, PipelineConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) + " is not 'key = value'");
    }
    apply_setting(base, trim(std::string_view(t).substr(0, eq)), std::string_view(t).substr(eq + 1));
  }
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return parse_config(in, std::move(base));
}

}  // namespace pcvqa
