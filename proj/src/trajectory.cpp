#include "pcvqa/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "pcvqa/error.hpp"

namespace pcvqa {

char pathway_letter(PathwayId id) { return static_cast<char>('A' + static_cast<int>(id)); }

PathwayId pathway_from_letter(char c) {
  if (c >= 'a' && c <= 'd') c = static_cast<char>(c - 'a' + 'A');
  if (c < 'A' || c > 'D') throw ValidationError(std::string("unknown pathway '") + c + "'");
  return static_cast<PathwayId>(c - 'A');
}

Vec3 pathway_up(PathwayId id) {
  constexpr double h = std::numbers::sqrt2 / 2.0;
  switch (id) {
    case PathwayId::A: return {0.0, 0.0, 1.0};
    case PathwayId::B: return {1.0, 0.0, 0.0};
    case PathwayId::C: return {h, 0.0, h};
    case PathwayId::D: return {h, 0.0, -h};
  }
  return {0.0, 0.0, 1.0};
}

int frames_per_orbit(double step_deg) {
  if (!(step_deg > 0.0) || !std::isfinite(step_deg)) {
    throw ValidationError("rotation step must be positive");
  }
  const double n = 360.0 / step_deg;
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-9 || rounded < 1.0) {
    throw ValidationError("rotation step " + std::to_string(step_deg) + " does not divide 360");
  }
  return static_cast<int>(rounded);
}

namespace {

Vec3 orbit_offset(PathwayId id, double radius, double t) {
  const double c = std::cos(t);
  const double s = std::sin(t);
  constexpr double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  switch (id) {
    case PathwayId::A: return {radius * c, radius * s, 0.0};
    case PathwayId::B: return {0.0, radius * c, radius * s};
    case PathwayId::C: return {radius * c * inv_sqrt2, radius * s, -radius * c * inv_sqrt2};
    case PathwayId::D: return {radius * c * inv_sqrt2, radius * s, radius * c * inv_sqrt2};
  }
  return {};
}

}  // namespace

Trajectory generate_pathway(PathwayId pathway, const Center3& center, double radius,
                            double step_deg) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ValidationError("viewing radius must be positive and finite");
  }
  if (!is_finite(center.xyz)) throw ValidationError("center must be finite");
  const int n = frames_per_orbit(step_deg);
  Trajectory traj;
  traj.pathway = pathway;
  traj.radius = radius;
  traj.step_deg = step_deg;
  traj.poses.reserve(static_cast<std::size_t>(n));
  const Vec3 up = pathway_up(pathway);
  for (int k = 0; k < n; ++k) {
    // Exact multiples of the step in degrees, converted once, keep the
    // angular spacing uniform to rounding.
    const double t = (static_cast<double>(k) * step_deg) * (std::numbers::pi / 180.0);
    traj.poses.push_back({center.xyz + orbit_offset(pathway, radius, t), center.xyz, up});
  }
  return traj;
}

std::vector<Trajectory> build_sequence(const Center3& center, double radius, double step_deg,
                                       std::span<const PathwayId> pathways) {
  if (pathways.empty()) throw ValidationError("at least one pathway is required");
  std::vector<Trajectory> seq;
  seq.reserve(pathways.size());
  for (const PathwayId id : pathways) seq.push_back(generate_pathway(id, center, radius, step_deg));
  return seq;
}

double choose_radius(double bounding_radius, double kappa, double vertical_fov_deg) {
  if (!(bounding_radius >= 0.0) || !std::isfinite(bounding_radius)) {
    throw ValidationError("bounding radius must be finite and non-negative");
  }
  if (!(vertical_fov_deg > 0.0 && vertical_fov_deg < 180.0)) {
    throw ValidationError("vertical field of view must lie in (0, 180) degrees");
  }
  const double half = vertical_fov_deg * std::numbers::pi / 360.0;
  const double min_kappa = 2.0 / (2.0 * std::sin(half));
  if (!(kappa > min_kappa)) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "kappa %.6g is not above %.6g: at a %.6g degree field of view the cloud may "
                  "clip the view frustum",
                  kappa, min_kappa, vertical_fov_deg);
    throw ValidationError(buf);
  }
  return bounding_radius == 0.0 ? kappa : kappa * bounding_radius;
}

void write_trajectory_table(std::ostream& os, std::span<const Trajectory> sequence) {
  char line[256];
  if (!sequence.empty() && !sequence.front().poses.empty()) {
    const Trajectory& t = sequence.front();
    const Vec3 c = t.poses.front().target;
    std::snprintf(line, sizeof line, "# center %.17g %.17g %.17g radius %.17g step %.17g\n", c.x,
                  c.y, c.z, t.radius, t.step_deg);
    os << line;
  }
  os << "# pathway k px py pz ux uy uz\n";
  for (const Trajectory& t : sequence) {
    for (std::size_t k = 0; k < t.poses.size(); ++k) {
      const CameraPose& p = t.poses[k];
      std::snprintf(line, sizeof line, "%c %zu %.17g %.17g %.17g %.17g %.17g %.17g\n",
                    pathway_letter(t.pathway), k, p.position.x, p.position.y, p.position.z, p.up.x,
                    p.up.y, p.up.z);
      os << line;
    }
  }
}

std::vector<Trajectory> read_trajectory_table(std::istream& is) {
  std::vector<Trajectory> seq;
  Vec3 center;
  double radius = 0.0;
  double step = 0.0;
  bool have_center = false;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string key, rkey, skey;
      if (ss >> key && key == "center") {
        if (!(ss >> center.x >> center.y >> center.z >> rkey >> radius >> skey >> step) ||
            rkey != "radius" || skey != "step") {
          throw ParseError("malformed trajectory center line");
        }
        have_center = true;
      }
      continue;
    }
    std::istringstream ss(line);
    char letter = 0;
    std::size_t k = 0;
    CameraPose pose;
    if (!(ss >> letter >> k >> pose.position.x >> pose.position.y >> pose.position.z >> pose.up.x >>
          pose.up.y >> pose.up.z)) {
      throw ParseError("malformed trajectory row at line " + std::to_string(lineno));
    }
    const PathwayId id = pathway_from_letter(letter);
    if (seq.empty() || seq.back().pathway != id) {
      seq.push_back({});
      seq.back().pathway = id;
      seq.back().radius = radius;
      seq.back().step_deg = step;
    }
    if (k != seq.back().poses.size()) {
      throw ParseError("trajectory rows out of order at line " + std::to_string(lineno));
    }
    pose.target = center;
    seq.back().poses.push_back(pose);
  }
  if (!have_center) throw ParseError("trajectory table lacks its '# center' line");
  return seq;
}

}  // namespace pcvqa
