#include "pcvqa/keyframes.hpp"

#include <algorithm>
#include <limits>

#include "pcvqa/error.hpp"

namespace pcvqa {

std::vector<int> select_fixed_indices(int index, std::size_t clip_count, int clip_length) {
  if (index < 0 || index >= clip_length) {
    throw ValidationError("key frame index " + std::to_string(index) + " outside [0, " +
                          std::to_string(clip_length) + ")");
  }
  return std::vector<int>(clip_count, index);
}

KeyframeSelection select_fixed(int index, std::span<const Trajectory> sequence) {
  KeyframeSelection sel;
  for (const Trajectory& t : sequence) {
    const int len = static_cast<int>(t.poses.size());
    sel.indices.push_back(select_fixed_indices(index, 1, len).front());
    sel.viewpoints.push_back(t.poses[static_cast<std::size_t>(index)].position);
  }
  return sel;
}

namespace {

// Depth-first search over clips in order with candidate indices ascending, so
// the first tuple reaching a value is the lexicographically smallest one.
// Only strict improvements replace the incumbent.
class VmdSearch {
 public:
  VmdSearch(std::span<const std::vector<Vec3>> vps, VmdObjective obj) : vps_(vps), obj_(obj) {
    const std::size_t m = vps.size();
    dist_.resize(m * m);
    max_dist_.assign(m * m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) {
        auto& d = dist_[a * m + b];
        d.resize(vps[a].size() * vps[b].size());
        for (std::size_t i = 0; i < vps[a].size(); ++i) {
          for (std::size_t j = 0; j < vps[b].size(); ++j) {
            const double v = distance(vps[a][i], vps[b][j]);
            d[i * vps[b].size() + j] = v;
            max_dist_[a * m + b] = std::max(max_dist_[a * m + b], v);
          }
        }
      }
    }
    // Upper bound on what clips >= c can still add to a sum objective.
    suffix_bound_.assign(m + 1, 0.0);
    for (std::size_t c = m; c-- > 0;) {
      double add = 0.0;
      for (std::size_t a = 0; a < c; ++a) add += max_dist_[a * m + c];
      suffix_bound_[c] = suffix_bound_[c + 1] + add;
    }
    current_.assign(m, 0);
    best_.assign(m, 0);
  }

  std::vector<int> run() {
    const double start = obj_ == VmdObjective::max_min ? std::numeric_limits<double>::infinity() : 0.0;
    descend(0, start);
    return best_;
  }

 private:
  double pair(std::size_t a, std::size_t b) const {
    const std::size_t m = vps_.size();
    return dist_[a * m + b][static_cast<std::size_t>(current_[a]) * vps_[b].size() +
                            static_cast<std::size_t>(current_[b])];
  }

  void descend(std::size_t clip, double partial) {
    const std::size_t m = vps_.size();
    if (clip == m) {
      if (!found_ || partial > best_value_) {
        found_ = true;
        best_value_ = partial;
        best_ = current_;
      }
      return;
    }
    for (std::size_t j = 0; j < vps_[clip].size(); ++j) {
      current_[clip] = static_cast<int>(j);
      double value = partial;
      for (std::size_t a = 0; a < clip; ++a) {
        const double d = pair(a, clip);
        value = obj_ == VmdObjective::max_min ? std::min(value, d) : value + d;
      }
      if (found_) {
        // No completion can strictly beat the incumbent.
        const double bound = obj_ == VmdObjective::max_min ? value : value + suffix_bound_[clip + 1];
        if (bound <= best_value_) continue;
      }
      descend(clip + 1, value);
    }
  }

  std::span<const std::vector<Vec3>> vps_;
  VmdObjective obj_;
  std::vector<std::vector<double>> dist_;
  std::vector<double> max_dist_;
  std::vector<double> suffix_bound_;
  std::vector<int> current_;
  std::vector<int> best_;
  bool found_ = false;
  double best_value_ = 0.0;
};

}  // namespace

KeyframeSelection select_vmd(std::span<const std::vector<Vec3>> viewpoints, VmdObjective objective) {
  if (viewpoints.empty()) throw ValidationError("VMD selection needs at least one viewpoint list");
  for (const auto& v : viewpoints) {
    if (v.empty()) throw ValidationError("VMD selection needs non-empty viewpoint lists");
  }
  KeyframeSelection sel;
  sel.indices = VmdSearch(viewpoints, objective).run();
  for (std::size_t c = 0; c < viewpoints.size(); ++c) {
    sel.viewpoints.push_back(viewpoints[c][static_cast<std::size_t>(sel.indices[c])]);
  }
  return sel;
}

KeyframeSelection select_vmd(std::span<const Trajectory> sequence, VmdObjective objective) {
  std::vector<std::vector<Vec3>> vps;
  for (const Trajectory& t : sequence) {
    auto& v = vps.emplace_back();
    for (const CameraPose& p : t.poses) v.push_back(p.position);
  }
  return select_vmd(vps, objective);
}

std::string format_selection(const std::vector<int>& indices) {
  std::string out;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(indices[i]);
  }
  return out;
}

}  // namespace pcvqa
