#include "pcvqa/point_cloud.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

#include "pcvqa/error.hpp"

namespace pcvqa {

PointCloud PointCloud::create(std::vector<Vec3> positions, std::vector<Color> colors,
                              bool has_native_color) {
  if (positions.empty()) throw ValidationError("point cloud must contain at least one point");
  if (colors.size() != positions.size()) {
    throw ValidationError("point cloud has " + std::to_string(positions.size()) + " positions but " +
                          std::to_string(colors.size()) + " colors");
  }
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!is_finite(positions[i])) {
      throw ValidationError("non-finite coordinate at point " + std::to_string(i));
    }
    const Color& c = colors[i];
    for (const double ch : {c.r, c.g, c.b}) {
      if (!(ch >= 0.0 && ch <= 1.0)) {
        throw ValidationError("color channel outside [0,1] at point " + std::to_string(i));
      }
    }
  }
  PointCloud pc;
  pc.positions_ = std::move(positions);
  pc.colors_ = std::move(colors);
  pc.has_native_color_ = has_native_color;
  return pc;
}

PointCloud PointCloud::create(std::vector<Vec3> positions) {
  std::vector<Color> colors(positions.size(), Color{0.5, 0.5, 0.5});
  return create(std::move(positions), std::move(colors), false);
}

PointCloud PointCloud::translated(const Vec3& t) const {
  PointCloud out = *this;
  for (auto& p : out.positions_) p += t;
  return out;
}

PointCloud PointCloud::scaled(double s) const {
  PointCloud out = *this;
  for (auto& p : out.positions_) p *= s;
  return out;
}

// ---------------------------------------------------------------------------
// PLY parsing

namespace {

enum class ScalarType { int8, uint8, int16, uint16, int32, uint32, float32, float64 };

std::optional<ScalarType> scalar_type_from_name(std::string_view name) {
  if (name == "char" || name == "int8") return ScalarType::int8;
  if (name == "uchar" || name == "uint8") return ScalarType::uint8;
  if (name == "short" || name == "int16") return ScalarType::int16;
  if (name == "ushort" || name == "uint16") return ScalarType::uint16;
  if (name == "int" || name == "int32") return ScalarType::int32;
  if (name == "uint" || name == "uint32") return ScalarType::uint32;
  if (name == "float" || name == "float32") return ScalarType::float32;
  if (name == "double" || name == "float64") return ScalarType::float64;
  return std::nullopt;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::int8:
    case ScalarType::uint8: return 1;
    case ScalarType::int16:
    case ScalarType::uint16: return 2;
    case ScalarType::int32:
    case ScalarType::uint32:
    case ScalarType::float32: return 4;
    case ScalarType::float64: return 8;
  }
  return 0;
}

bool is_floating(ScalarType t) { return t == ScalarType::float32 || t == ScalarType::float64; }

struct Property {
  std::string name;
  ScalarType type = ScalarType::float32;
  bool is_list = false;
  ScalarType count_type = ScalarType::uint8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  bool ascii = true;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

Header parse_header(std::string_view data) {
  Header h;
  std::size_t pos = 0;
  bool saw_format = false;
  bool first = true;
  while (true) {
    const std::size_t eol = data.find('\n', pos);
    if (eol == std::string_view::npos) throw ParseError("PLY header is not terminated by end_header");
    std::string_view line = data.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    const auto tok = split_ws(line);
    if (first) {
      if (tok.size() != 1 || tok[0] != "ply") throw ParseError("missing 'ply' magic line");
      first = false;
      continue;
    }
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() < 2) throw ParseError("malformed format line");
      if (tok[1] == "ascii") {
        h.ascii = true;
      } else if (tok[1] == "binary_little_endian") {
        h.ascii = false;
      } else if (tok[1] == "binary_big_endian") {
        throw ParseError("unsupported PLY format: binary_big_endian");
      } else {
        throw ParseError("unknown PLY format '" + std::string(tok[1]) + "'");
      }
      saw_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError("malformed element line");
      Element e;
      e.name = tok[1];
      std::size_t count = 0;
      const auto [p, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), count);
      if (ec != std::errc{} || p != tok[2].data() + tok[2].size()) {
        throw ParseError("invalid element count '" + std::string(tok[2]) + "'");
      }
      e.count = count;
      h.elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (h.elements.empty()) throw ParseError("property declared before any element");
      Property prop;
      if (tok.size() == 5 && tok[1] == "list") {
        const auto ct = scalar_type_from_name(tok[2]);
        const auto it = scalar_type_from_name(tok[3]);
        if (!ct || !it || is_floating(*ct)) throw ParseError("malformed list property");
        prop.is_list = true;
        prop.count_type = *ct;
        prop.type = *it;
        prop.name = tok[4];
      } else if (tok.size() == 3) {
        const auto t = scalar_type_from_name(tok[1]);
        if (!t) throw ParseError("unknown property type '" + std::string(tok[1]) + "'");
        prop.type = *t;
        prop.name = tok[2];
      } else {
        throw ParseError("malformed property line");
      }
      h.elements.back().properties.push_back(std::move(prop));
    } else {
      throw ParseError("unexpected header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!saw_format) throw ParseError("PLY header lacks a format line");
  h.body_offset = pos;
  return h;
}

template <typename T>
T load_le(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
  return v;
}

double load_scalar(ScalarType t, const std::uint8_t* p) {
  switch (t) {
    case ScalarType::int8: return load_le<std::int8_t>(p);
    case ScalarType::uint8: return load_le<std::uint8_t>(p);
    case ScalarType::int16: return load_le<std::int16_t>(p);
    case ScalarType::uint16: return load_le<std::uint16_t>(p);
    case ScalarType::int32: return load_le<std::int32_t>(p);
    case ScalarType::uint32: return load_le<std::uint32_t>(p);
    case ScalarType::float32: return load_le<float>(p);
    case ScalarType::float64: return load_le<double>(p);
  }
  return 0.0;
}

// Column roles inside the vertex element.
struct VertexLayout {
  int x = -1, y = -1, z = -1;
  int r = -1, g = -1, b = -1;
};

VertexLayout vertex_layout(const Element& v) {
  VertexLayout l;
  for (int i = 0; i < static_cast<int>(v.properties.size()); ++i) {
    const Property& p = v.properties[static_cast<std::size_t>(i)];
    if (p.is_list) continue;
    if (p.name == "x") l.x = i;
    else if (p.name == "y") l.y = i;
    else if (p.name == "z") l.z = i;
    else if (p.name == "red") l.r = i;
    else if (p.name == "green") l.g = i;
    else if (p.name == "blue") l.b = i;
  }
  if (l.x < 0 || l.y < 0 || l.z < 0) throw ParseError("vertex element lacks x/y/z properties");
  for (const int i : {l.x, l.y, l.z}) {
    if (!is_floating(v.properties[static_cast<std::size_t>(i)].type)) {
      throw ParseError("vertex coordinates must be float or double");
    }
  }
  const int present = (l.r >= 0) + (l.g >= 0) + (l.b >= 0);
  if (present != 0 && present != 3) throw ParseError("vertex has an incomplete red/green/blue set");
  if (present == 3) {
    for (const int i : {l.r, l.g, l.b}) {
      const ScalarType t = v.properties[static_cast<std::size_t>(i)].type;
      if (t != ScalarType::uint8 && !is_floating(t)) {
        throw ParseError("color properties must be uchar, float or double");
      }
    }
  }
  return l;
}

double color_value(ScalarType t, double raw) { return t == ScalarType::uint8 ? raw / 255.0 : raw; }

struct Assembler {
  const Element& vertex;
  VertexLayout layout;
  std::vector<Vec3> positions;
  std::vector<Color> colors;
  bool has_color() const { return layout.r >= 0; }

  void add(std::span<const double> row) {
    const auto at = [&](int i) { return row[static_cast<std::size_t>(i)]; };
    const Vec3 p{at(layout.x), at(layout.y), at(layout.z)};
    if (!is_finite(p)) {
      throw ParseError("non-finite coordinate at vertex " + std::to_string(positions.size()));
    }
    positions.push_back(p);
    if (has_color()) {
      const auto& props = vertex.properties;
      colors.push_back({color_value(props[static_cast<std::size_t>(layout.r)].type, at(layout.r)),
                        color_value(props[static_cast<std::size_t>(layout.g)].type, at(layout.g)),
                        color_value(props[static_cast<std::size_t>(layout.b)].type, at(layout.b))});
    }
  }

  PointCloud finish() {
    if (positions.empty()) throw ParseError("PLY file declares no vertices");
    try {
      if (!has_color()) return PointCloud::create(std::move(positions));
      return PointCloud::create(std::move(positions), std::move(colors), true);
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(e.what());
    }
  }
};

double parse_ascii_number(std::string_view tok) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = first + tok.size();
  if (!tok.empty() && tok.front() == '+') ++first;
  const auto [p, ec] = std::from_chars(first, last, v);
  if (p != last || (ec != std::errc{} && ec != std::errc::result_out_of_range)) {
    // from_chars rejects "nan"/"inf" spellings some writers use; strtod accepts them.
    std::string s(tok);
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw ParseError("invalid number '" + s + "'");
  }
  return v;
}

PointCloud parse_body_ascii(std::string_view body, const Header& h, std::size_t vertex_index) {
  // Tokenize the whole body lazily; elements are consumed in header order.
  std::size_t pos = 0;
  auto next_token = [&]() -> std::optional<std::string_view> {
    while (pos < body.size() && std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
    if (pos >= body.size()) return std::nullopt;
    const std::size_t start = pos;
    while (pos < body.size() && !std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
    return body.substr(start, pos - start);
  };
  const Element& vertex = h.elements[vertex_index];
  Assembler as{vertex, vertex_layout(vertex), {}, {}};
  std::vector<double> row;
  for (std::size_t ei = 0; ei <= vertex_index; ++ei) {
    const Element& e = h.elements[ei];
    for (std::size_t n = 0; n < e.count; ++n) {
      row.clear();
      for (const Property& p : e.properties) {
        const auto tok = next_token();
        if (!tok) {
          throw ParseError("element '" + e.name + "' declares " + std::to_string(e.count) +
                           " entries but data ends at entry " + std::to_string(n));
        }
        double v = parse_ascii_number(*tok);
        if (p.is_list) {
          const auto len = static_cast<std::size_t>(v);
          for (std::size_t k = 0; k < len; ++k) {
            if (!next_token()) throw ParseError("truncated list property in element '" + e.name + "'");
          }
        }
        row.push_back(v);
      }
      if (ei == vertex_index) as.add(row);
    }
  }
  return as.finish();
}

PointCloud parse_body_binary(std::span<const std::uint8_t> body, const Header& h,
                             std::size_t vertex_index) {
  std::size_t pos = 0;
  const Element& vertex = h.elements[vertex_index];
  Assembler as{vertex, vertex_layout(vertex), {}, {}};
  as.positions.reserve(vertex.count);
  if (as.has_color()) as.colors.reserve(vertex.count);
  std::vector<double> row;
  for (std::size_t ei = 0; ei <= vertex_index; ++ei) {
    const Element& e = h.elements[ei];
    for (std::size_t n = 0; n < e.count; ++n) {
      row.clear();
      for (const Property& p : e.properties) {
        const auto need = [&](std::size_t bytes) {
          if (pos + bytes > body.size()) {
            throw ParseError("element '" + e.name + "' declares " + std::to_string(e.count) +
                             " entries but data ends at entry " + std::to_string(n));
          }
        };
        if (p.is_list) {
          need(scalar_size(p.count_type));
          const auto len = static_cast<std::size_t>(load_scalar(p.count_type, body.data() + pos));
          pos += scalar_size(p.count_type);
          need(len * scalar_size(p.type));
          pos += len * scalar_size(p.type);
          row.push_back(static_cast<double>(len));
        } else {
          need(scalar_size(p.type));
          row.push_back(load_scalar(p.type, body.data() + pos));
          pos += scalar_size(p.type);
        }
      }
      if (ei == vertex_index) as.add(row);
    }
  }
  return as.finish();
}

}  // namespace

PointCloud parse_ply(std::span<const std::uint8_t> bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const Header h = parse_header(text);
  const auto it = std::find_if(h.elements.begin(), h.elements.end(),
                               [](const Element& e) { return e.name == "vertex"; });
  if (it == h.elements.end()) throw ParseError("PLY file has no vertex element");
  const auto vertex_index = static_cast<std::size_t>(it - h.elements.begin());
  if (h.ascii) return parse_body_ascii(text.substr(h.body_offset), h, vertex_index);
  return parse_body_binary(bytes.subspan(h.body_offset), h, vertex_index);
}

PointCloud parse_ply(std::string_view text) {
  return parse_ply(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                                 text.size()));
}

// ---------------------------------------------------------------------------
// PLY writing

namespace {

std::uint8_t to_u8(double c) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(c * 255.0), 0L, 255L));
}

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

}  // namespace

std::vector<std::uint8_t> write_ply(const PointCloud& pc, PlyEncoding mode) {
  std::ostringstream hdr;
  hdr << "ply\n"
      << "format " << (mode == PlyEncoding::ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
      << "element vertex " << pc.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";
  const std::string header = hdr.str();
  std::vector<std::uint8_t> out(header.begin(), header.end());

  const auto pos = pc.positions();
  const auto col = pc.colors();
  if (mode == PlyEncoding::ascii) {
    char line[160];
    for (std::size_t i = 0; i < pc.size(); ++i) {
      const int n = std::snprintf(line, sizeof line, "%.17g %.17g %.17g %u %u %u\n", pos[i].x,
                                  pos[i].y, pos[i].z, unsigned{to_u8(col[i].r)},
                                  unsigned{to_u8(col[i].g)}, unsigned{to_u8(col[i].b)});
      out.insert(out.end(), line, line + n);
    }
  } else {
    out.reserve(out.size() + pc.size() * 27);
    for (std::size_t i = 0; i < pc.size(); ++i) {
      append_le(out, pos[i].x);
      append_le(out, pos[i].y);
      append_le(out, pos[i].z);
      out.push_back(to_u8(col[i].r));
      out.push_back(to_u8(col[i].g));
      out.push_back(to_u8(col[i].b));
    }
  }
  return out;
}

PointCloud read_ply_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_ply(bytes);
}

void write_ply_file(const std::filesystem::path& path, const PointCloud& pc, PlyEncoding mode) {
  const auto bytes = write_ply(pc, mode);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------

Center3 mean_center(const PointCloud& pc) {
  Vec3 sum;
  for (const Vec3& p : pc.positions()) sum += p;
  return {sum * (1.0 / static_cast<double>(pc.size()))};
}

double bounding_radius(const PointCloud& pc, const Center3& center) {
  double best = 0.0;
  for (const Vec3& p : pc.positions()) best = std::max(best, distance(p, center.xyz));
  return best;
}

}  // namespace pcvqa
