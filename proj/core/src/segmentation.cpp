#include "gvps/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gvps/error.hpp"

namespace gvps {

namespace {
constexpr const char* kModule = "segmentation";
}

std::string_view to_string(SegmentStrategy strategy) {
  return strategy == SegmentStrategy::adaptive_entropy ? "adaptive_entropy" : "fixed_token";
}

SegmentStrategy parse_segment_strategy(std::string_view name) {
  if (name == "adaptive_entropy" || name == "adaptive") return SegmentStrategy::adaptive_entropy;
  if (name == "fixed_token" || name == "fixed") return SegmentStrategy::fixed_token;
  throw InputError(kModule, "unknown segmentation strategy '" + std::string(name) + "'");
}

int SegmentedTrajectory::segment_of(int t) const {
  if (t < 1 || t > length()) throw InputError(kModule, "position outside trajectory");
  const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), t);
  return static_cast<int>(it - boundaries.begin()) - 1;
}

double quantile_linear(std::span<const double> values, double p) {
  if (values.empty()) throw InputError(kModule, "quantile of empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  const double q = sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
  return std::clamp(q, sorted[lo], sorted[lo + 1]);
}

CutpointSet find_cutpoints(const Trajectory& trajectory, double percentile_p) {
  if (!(percentile_p > 0.0 && percentile_p < 1.0)) {
    throw InputError(kModule, "percentile_p must be in (0, 1)");
  }
  if (trajectory.entropies.empty()) throw InputError(kModule, "cannot segment an empty trajectory");
  CutpointSet cut;
  cut.percentile_p = percentile_p;
  cut.threshold_tau = quantile_linear(trajectory.entropies, percentile_p);
  for (std::size_t i = 0; i < trajectory.entropies.size(); ++i) {
    if (trajectory.entropies[i] >= cut.threshold_tau) cut.positions.push_back(static_cast<int>(i) + 1);
  }
  return cut;
}

SegmentedTrajectory partition_adaptive(const Trajectory& trajectory, const CutpointSet& cutpoints, int n_per_segment) {
  if (n_per_segment < 1) throw InputError(kModule, "n_per_segment must be at least 1");
  const int T = trajectory.length();
  if (T < 1) throw InputError(kModule, "cannot segment an empty trajectory");
  const auto& U = cutpoints.positions;
  for (std::size_t i = 0; i < U.size(); ++i) {
    if (U[i] < 1 || U[i] > T || (i > 0 && U[i] <= U[i - 1])) {
      throw InputError(kModule, "cutpoints must be strictly increasing positions in [1, T]");
    }
  }
  const int n_cut = static_cast<int>(U.size());
  const int M = std::max(1, n_cut / n_per_segment);

  SegmentedTrajectory seg;
  seg.trajectory = trajectory;
  seg.strategy = SegmentStrategy::adaptive_entropy;
  seg.M = M;
  seg.boundaries.push_back(1);
  // Contiguous runs of cutpoints; the first n_cut % M runs take one extra.
  const int base = n_cut / M;
  const int extra = n_cut % M;
  int consumed = 0;
  for (int m = 0; m + 1 < M; ++m) {
    consumed += base + (m < extra ? 1 : 0);
    seg.boundaries.push_back(U[static_cast<std::size_t>(consumed - 1)] + 1);
  }
  seg.boundaries.push_back(T + 1);
  return seg;
}

SegmentedTrajectory partition_fixed(const Trajectory& trajectory, int n_segments) {
  if (n_segments < 1) throw InputError(kModule, "n_segments must be at least 1");
  const int T = trajectory.length();
  if (T < 1) throw InputError(kModule, "cannot segment an empty trajectory");
  const int M = std::min(n_segments, T);
  SegmentedTrajectory seg;
  seg.trajectory = trajectory;
  seg.strategy = SegmentStrategy::fixed_token;
  seg.M = M;
  for (int m = 0; m <= M; ++m) seg.boundaries.push_back((m * T + M - 1) / M + 1);
  return seg;
}

void check_segmentation(const SegmentedTrajectory& seg) {
  const int T = seg.length();
  if (seg.M < 1 || static_cast<int>(seg.boundaries.size()) != seg.M + 1) {
    throw StateError(kModule, "boundary count does not match M");
  }
  if (seg.boundaries.front() != 1 || seg.boundaries.back() != T + 1) {
    throw StateError(kModule, "segments do not cover [1, T]");
  }
  for (int m = 0; m < seg.M; ++m) {
    if (seg.boundaries[m + 1] <= seg.boundaries[m]) throw StateError(kModule, "empty or reversed segment");
  }
}

Trajectory truncate(const Trajectory& trajectory, int length) {
  if (length < 0 || length > trajectory.length()) throw InputError(kModule, "truncation length out of range");
  Trajectory out;
  out.prompt_ids = trajectory.prompt_ids;
  const auto n = static_cast<std::size_t>(length);
  out.response_ids.assign(trajectory.response_ids.begin(), trajectory.response_ids.begin() + n);
  out.step_logprobs.assign(trajectory.step_logprobs.begin(), trajectory.step_logprobs.begin() + n);
  out.entropies.assign(trajectory.entropies.begin(), trajectory.entropies.begin() + n);
  out.terminated = false;
  return out;
}

}  // namespace gvps
