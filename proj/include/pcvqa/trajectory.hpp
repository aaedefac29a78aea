#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pcvqa/point_cloud.hpp"
#include "pcvqa/vec3.hpp"

namespace pcvqa {

/// The four circular orbits around the mean center:
///   A: X^2 + Y^2 = R^2, Z = 0
///   B: Y^2 + Z^2 = R^2, X = 0
///   C: X^2 + Y^2 + Z^2 = R^2, X + Z = 0
///   D: X^2 + Y^2 + Z^2 = R^2, X - Z = 0
/// (coordinates relative to the center).
enum class PathwayId { A = 0, B = 1, C = 2, D = 3 };

inline constexpr std::array<PathwayId, 4> kAllPathways{PathwayId::A, PathwayId::B, PathwayId::C,
                                                       PathwayId::D};

char pathway_letter(PathwayId id);
PathwayId pathway_from_letter(char c);

/// Constant orbit-plane normal used as the camera up vector.
Vec3 pathway_up(PathwayId id);

struct CameraPose {
  Vec3 position;
  Vec3 target;
  Vec3 up;
};

struct Trajectory {
  PathwayId pathway = PathwayId::A;
  double radius = 1.0;
  double step_deg = 12.0;
  std::vector<CameraPose> poses;
};

inline constexpr double kDefaultStepDeg = 12.0;
inline constexpr double kDefaultKappa = 2.5;
inline constexpr double kDefaultVerticalFovDeg = 60.0;

/// Poses at t_k = k * step_deg for k = 0 .. 360/step_deg - 1, counter-clockwise
/// from t = 0. Throws ValidationError on non-positive radius or a step that
/// does not divide 360.
Trajectory generate_pathway(PathwayId pathway, const Center3& center, double radius,
                            double step_deg = kDefaultStepDeg);

/// Orbits for the given pathways in order (A, B, C, D by default).
std::vector<Trajectory> build_sequence(const Center3& center, double radius,
                                       double step_deg = kDefaultStepDeg,
                                       std::span<const PathwayId> pathways = kAllPathways);

/// Viewing distance R = kappa * bounding_radius (kappa when the radius is 0).
/// Rejects kappa <= 1 / sin(vfov / 2): below that a cloud of the given
/// bounding radius can poke outside the vertical field of view.
double choose_radius(double bounding_radius, double kappa = kDefaultKappa,
                     double vertical_fov_deg = kDefaultVerticalFovDeg);

/// Frames per orbit for a step, i.e. 360 / step_deg.
int frames_per_orbit(double step_deg);

/// Plain-text audit table: one "pathway k px py pz ux uy uz" row per pose.
void write_trajectory_table(std::ostream& os, std::span<const Trajectory> sequence);
std::vector<Trajectory> read_trajectory_table(std::istream& is);

}  // namespace pcvqa
