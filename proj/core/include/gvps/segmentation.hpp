#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "gvps/policy.hpp"

namespace gvps {

// Token positions below are 1-based, matching boundary notation t_1 = 1 and
// t_{M+1} = T + 1.

struct CutpointSet {
  std::vector<int> positions;  // strictly increasing, each with entropy >= threshold_tau
  double threshold_tau = 0.0;  // nats
  double percentile_p = 0.0;
};

enum class SegmentStrategy { adaptive_entropy, fixed_token };

std::string_view to_string(SegmentStrategy strategy);
SegmentStrategy parse_segment_strategy(std::string_view name);

struct SegmentedTrajectory {
  Trajectory trajectory;
  std::vector<int> boundaries;  // t_1..t_{M+1}
  int M = 0;
  SegmentStrategy strategy = SegmentStrategy::adaptive_entropy;

  int length() const noexcept { return trajectory.length(); }
  int segment_length(int m) const { return boundaries[m + 1] - boundaries[m]; }  // m is 0-based
  // 0-based segment index of 1-based position t.
  int segment_of(int t) const;
};

// Linear-interpolation quantile (Hyndman-Fan type 7) of `values` at p in [0, 1].
double quantile_linear(std::span<const double> values, double p);

SegmentedTrajectory partition_adaptive(const Trajectory& trajectory, const CutpointSet& cutpoints, int n_per_segment);
CutpointSet find_cutpoints(const Trajectory& trajectory, double percentile_p);
SegmentedTrajectory partition_fixed(const Trajectory& trajectory, int n_segments);

// Checks the tiling invariants; throws StateError naming the violated one.
void check_segmentation(const SegmentedTrajectory& seg);

// First `length` tokens of `trajectory` with their logprobs and entropies.
Trajectory truncate(const Trajectory& trajectory, int length);

}  // namespace gvps
