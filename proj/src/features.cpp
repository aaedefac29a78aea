#include "pcvqa/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pcvqa/error.hpp"

namespace pcvqa {

std::size_t FeatureMap::element_count() const {
  std::size_t n = dims.empty() ? 0 : 1;
  for (const auto d : dims) n *= d;
  return n;
}

void FeatureMap::validate() const {
  if (dims.empty()) throw ValidationError("feature map needs at least one dimension");
  for (const auto d : dims) {
    if (d == 0) throw ValidationError("feature map dimensions must be positive");
  }
  if (values.size() != element_count()) throw ValidationError("feature map payload does not match its shape");
  for (const float v : values) {
    if (!std::isfinite(v)) throw ValidationError("feature map contains a non-finite value");
  }
}

Eigen::VectorXd gap(const FeatureMap& map) {
  map.validate();
  const std::size_t c = map.channels();
  const std::size_t per = map.values.size() / c;
  Eigen::VectorXd out(static_cast<Eigen::Index>(c));
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum = 0.0;
    const float* p = map.values.data() + ch * per;
    for (std::size_t i = 0; i < per; ++i) sum += p[i];
    out[static_cast<Eigen::Index>(ch)] = sum / static_cast<double>(per);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spatial reference extractor

namespace {

struct Planes {
  int w = 0, h = 0;
  std::vector<double> r, g, b;
  double& at(std::vector<double>& p, int x, int y) const { return p[static_cast<std::size_t>(y * w + x)]; }
};

Planes split_planes(const ImageF& img) {
  Planes p;
  p.w = img.width;
  p.h = img.height;
  const std::size_t n = static_cast<std::size_t>(p.w) * static_cast<std::size_t>(p.h);
  p.r.resize(n);
  p.g.resize(n);
  p.b.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.r[i] = img.rgb[3 * i];
    p.g[i] = img.rgb[3 * i + 1];
    p.b[i] = img.rgb[3 * i + 2];
  }
  return p;
}

Planes box_downsample(const Planes& s) {
  Planes d;
  d.w = s.w / 2;
  d.h = s.h / 2;
  const std::size_t n = static_cast<std::size_t>(d.w) * static_cast<std::size_t>(d.h);
  d.r.resize(n);
  d.g.resize(n);
  d.b.resize(n);
  const auto down = [&](const std::vector<double>& src, std::vector<double>& dst) {
    for (int y = 0; y < d.h; ++y) {
      for (int x = 0; x < d.w; ++x) {
        const std::size_t i00 = static_cast<std::size_t>((2 * y) * s.w + 2 * x);
        const std::size_t i10 = i00 + static_cast<std::size_t>(s.w);
        dst[static_cast<std::size_t>(y * d.w + x)] = 0.25 * (src[i00] + src[i00 + 1] + src[i10] + src[i10 + 1]);
      }
    }
  };
  down(s.r, d.r);
  down(s.g, d.g);
  down(s.b, d.b);
  return d;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments moments(std::span<const double> v) {
  Moments m;
  for (const double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  for (const double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(v.size());
  return m;
}

void append_scale_features(const Planes& p, std::vector<double>& out) {
  const std::size_t n = p.r.size();
  std::vector<double> y(n), rg(n), yb(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = 0.299 * p.r[i] + 0.587 * p.g[i] + 0.114 * p.b[i];
    rg[i] = p.r[i] - p.g[i];
    yb[i] = 0.5 * (p.r[i] + p.g[i]) - p.b[i];
  }
  const Moments lum = moments(y);
  const Moments mrg = moments(rg);
  const Moments myb = moments(yb);
  const double colorfulness = std::sqrt(mrg.var + myb.var) +
                              0.3 * std::sqrt(mrg.mean * mrg.mean + myb.mean * myb.mean);

  // Derivative filters over the interior (no border padding).
  std::vector<double> lap, grad;
  const int w = p.w;
  const auto Y = [&](int xx, int yy) { return y[static_cast<std::size_t>(yy * w + xx)]; };
  for (int yy = 1; yy + 1 < p.h; ++yy) {
    for (int xx = 1; xx + 1 < w; ++xx) {
      lap.push_back(Y(xx - 1, yy) + Y(xx + 1, yy) + Y(xx, yy - 1) + Y(xx, yy + 1) - 4.0 * Y(xx, yy));
      const double gx = (Y(xx + 1, yy - 1) + 2.0 * Y(xx + 1, yy) + Y(xx + 1, yy + 1)) -
                        (Y(xx - 1, yy - 1) + 2.0 * Y(xx - 1, yy) + Y(xx - 1, yy + 1));
      const double gy = (Y(xx - 1, yy + 1) + 2.0 * Y(xx, yy + 1) + Y(xx + 1, yy + 1)) -
                        (Y(xx - 1, yy - 1) + 2.0 * Y(xx, yy - 1) + Y(xx + 1, yy - 1));
      grad.push_back(std::sqrt(gx * gx + gy * gy));
    }
  }
  out.push_back(lum.mean);
  out.push_back(std::sqrt(lum.var));
  out.push_back(colorfulness);
  out.push_back(moments(lap).var);
  out.push_back(std::sqrt(moments(grad).var));
}

}  // namespace

SpatialFeatures spatial_extract_ref(const ImageF& patch) {
  if (patch.width != kPatchSize || patch.height != kPatchSize ||
      patch.rgb.size() != static_cast<std::size_t>(kPatchSize * kPatchSize * 3)) {
    throw ValidationError("spatial extractor expects a 224x224 RGB patch, got " +
                          std::to_string(patch.width) + "x" + std::to_string(patch.height));
  }
  std::vector<double> out;
  out.reserve(kSpatialRefChannels);
  Planes p = split_planes(patch);
  for (int scale = 0; scale < 3; ++scale) {
    if (scale > 0) p = box_downsample(p);
    append_scale_features(p, out);
  }
  SpatialFeatures f;
  f.values = Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
  return f;
}

SpatialFeatures spatial_extract_ref(const Frame& patch) {
  return spatial_extract_ref(ImageF::from_frame(patch));
}

// ---------------------------------------------------------------------------
// Temporal reference extractor

TemporalFeatures temporal_extract_ref(std::span<const ImageF> frames) {
  constexpr int kStrides[] = {1, 2, 4};
  if (frames.size() <= 4) {
    throw ValidationError("temporal extractor needs more than 4 frames, got " + std::to_string(frames.size()));
  }
  const std::size_t n = static_cast<std::size_t>(kPatchSize) * kPatchSize;
  std::vector<std::vector<double>> lum(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const ImageF& f = frames[k];
    if (f.width != kPatchSize || f.height != kPatchSize || f.rgb.size() != 3 * n) {
      throw ValidationError("temporal extractor expects 224x224 frames");
    }
    lum[k].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      lum[k][i] = 0.299 * f.rgb[3 * i] + 0.587 * f.rgb[3 * i + 1] + 0.114 * f.rgb[3 * i + 2];
    }
  }
  std::vector<double> out;
  std::vector<double> diffs;
  for (const int s : kStrides) {
    const std::size_t pairs = frames.size() - static_cast<std::size_t>(s);
    diffs.resize(pairs * n);
    std::vector<double> frame_means(pairs);
    for (std::size_t k = 0; k < pairs; ++k) {
      double sum = 0.0;
      const auto& a = lum[k];
      const auto& b = lum[k + static_cast<std::size_t>(s)];
      for (std::size_t i = 0; i < n; ++i) {
        const double d = std::abs(b[i] - a[i]);
        diffs[k * n + i] = d;
        sum += d;
      }
      frame_means[k] = sum / static_cast<double>(n);
    }
    const Moments all = moments(diffs);
    // Nearest-rank percentile: the ceil(0.9 * M)-th smallest value.
    const std::size_t m = diffs.size();
    const std::size_t rank = (9 * m + 9) / 10;
    std::nth_element(diffs.begin(), diffs.begin() + static_cast<std::ptrdiff_t>(rank - 1), diffs.end());
    const double p90 = diffs[rank - 1];
    out.push_back(all.mean);
    out.push_back(std::sqrt(all.var));
    out.push_back(p90);
    out.push_back(std::sqrt(moments(frame_means).var));
  }
  TemporalFeatures t;
  t.values = Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
  return t;
}

TemporalFeatures temporal_extract_ref(const Clip& clip) {
  std::vector<ImageF> frames;
  frames.reserve(clip.frames.size());
  for (const Frame& f : clip.frames) frames.push_back(ImageF::from_frame(f));
  return temporal_extract_ref(frames);
}

// ---------------------------------------------------------------------------

Eigen::VectorXd fuse(const SpatialFeatures& s, const TemporalFeatures& t, const FusionWeights& w) {
  if (w.ws.cols() != s.values.size() || w.wp.cols() != t.values.size() || w.ws.rows() != w.wp.rows()) {
    throw ValidationError("fusion weights do not match feature dimensions");
  }
  Eigen::VectorXd out(2 * w.ws.rows());
  out.head(w.ws.rows()) = w.ws * s.values;
  out.tail(w.wp.rows()) = w.wp * t.values;
  return out;
}

// ---------------------------------------------------------------------------
// Feature files

namespace {

constexpr char kMagic[4] = {'O', 'Q', 'A', 'F'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(&v);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(bytes[i]);
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw ParseError("feature file is truncated");
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_feature_file(const FeatureMap& map) {
  map.validate();
  if (map.dims.size() > 255) throw ValidationError("feature map rank exceeds 255");
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_le(out, kVersion);
  out.push_back(static_cast<std::uint8_t>(map.dims.size()));
  for (const auto d : map.dims) put_le(out, d);
  out.reserve(out.size() + 4 * map.values.size());
  for (const float v : map.values) put_le(out, v);
  return out;
}

FeatureMap decode_feature_file(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ParseError("not a feature file (bad magic)");
  }
  std::size_t pos = 4;
  const auto version = get_le<std::uint16_t>(bytes, pos);
  if (version != kVersion) throw ParseError("unsupported feature file version " + std::to_string(version));
  const auto rank = get_le<std::uint8_t>(bytes, pos);
  if (rank == 0) throw ParseError("feature file declares rank 0");
  FeatureMap map;
  for (int i = 0; i < rank; ++i) {
    const auto d = get_le<std::uint32_t>(bytes, pos);
    if (d == 0) throw ParseError("feature file declares a zero dimension");
    map.dims.push_back(d);
  }
  const std::size_t count = map.element_count();
  if (bytes.size() - pos != 4 * count) {
    throw ParseError("feature file payload holds " + std::to_string((bytes.size() - pos) / 4) +
                     " floats but its shape needs " + std::to_string(count));
  }
  map.values.resize(count);
  std::memcpy(map.values.data(), bytes.data() + pos, 4 * count);
  for (const float v : map.values) {
    if (!std::isfinite(v)) throw ParseError("feature file contains a non-finite value");
  }
  return map;
}

void write_feature_file(const std::filesystem::path& path, const FeatureMap& map) {
  const auto bytes = encode_feature_file(map);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

FeatureMap import_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_feature_file(bytes);
}

FeatureMap vector_feature_map(const Eigen::VectorXd& v) {
  FeatureMap m;
  m.dims = {static_cast<std::uint32_t>(v.size())};
  m.values.resize(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) m.values[static_cast<std::size_t>(i)] = static_cast<float>(v[i]);
  return m;
}

}  // namespace pcvqa
