#pragma once

#include <span>
#include <string>
#include <vector>

#include "pcvqa/trajectory.hpp"
#include "pcvqa/vec3.hpp"

namespace pcvqa {

inline constexpr int kDefaultKeyframeIndex = 7;

struct KeyframeSelection {
  std::vector<int> indices;       // one per clip
  std::vector<Vec3> viewpoints;   // camera position of each selected frame
};

/// How spread-out a choice of one viewpoint per clip is.
enum class VmdObjective {
  max_min,  // maximize the smallest pairwise distance
  max_sum,  // maximize the sum of pairwise distances
};

/// Same frame index in every clip. Throws ValidationError unless
/// 0 <= index < clip_length.
KeyframeSelection select_fixed(int index, std::span<const Trajectory> sequence);
std::vector<int> select_fixed_indices(int index, std::size_t clip_count, int clip_length = 30);

/// Viewpoint-max-distance selection: one viewpoint per list, chosen to
/// maximize the objective over all pairs; ties resolve to the
/// lexicographically smallest index tuple. Exact (branch and bound).
KeyframeSelection select_vmd(std::span<const std::vector<Vec3>> viewpoints,
                             VmdObjective objective = VmdObjective::max_min);
KeyframeSelection select_vmd(std::span<const Trajectory> sequence,
                             VmdObjective objective = VmdObjective::max_min);

/// "i0 i1 i2 i3" line for run manifests.
std::string format_selection(const std::vector<int>& indices);

}  // namespace pcvqa
