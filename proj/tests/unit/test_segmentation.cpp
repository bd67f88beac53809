#include <gtest/gtest.h>

#include <algorithm>

#include "gvps/error.hpp"
#include "gvps/random.hpp"
#include "gvps/segmentation.hpp"
#include "oracle.hpp"

using namespace gvps;

namespace {

Trajectory with_entropies(std::vector<double> e) {
  Trajectory t;
  t.prompt_ids = {0};
  t.response_ids.assign(e.size(), 3);
  t.step_logprobs.assign(e.size(), -0.5);
  t.entropies = std::move(e);
  return t;
}

Trajectory of_length(int T) { return with_entropies(std::vector<double>(static_cast<std::size_t>(T), 0.5)); }

CutpointSet cuts(std::vector<int> positions) {
  CutpointSet c;
  c.positions = std::move(positions);
  return c;
}

std::vector<int> lengths(const SegmentedTrajectory& s) {
  std::vector<int> out;
  for (int m = 0; m < s.M; ++m) out.push_back(s.segment_length(m));
  return out;
}

// All ways to split k items into M contiguous non-empty runs with sizes
// differing by at most one, listed as run sizes.
void balanced_splits(int k, int M, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == M) {
    if (k == 0) {
      const auto [lo, hi] = std::minmax_element(cur.begin(), cur.end());
      if (*hi - *lo <= 1) out.push_back(cur);
    }
    return;
  }
  for (int s = 1; s <= k; ++s) {
    cur.push_back(s);
    balanced_splits(k - s, M, cur, out);
    cur.pop_back();
  }
}

}  // namespace

TEST(Quantile, MatchesHandValues) {
  const std::vector<double> v{5, 1, 4, 2, 3};
  EXPECT_DOUBLE_EQ(quantile_linear(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_linear(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile_linear(v, 0.95), 4.8);
  EXPECT_DOUBLE_EQ(quantile_linear(v, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(quantile_linear(std::vector<double>{7.0}, 0.3), 7.0);
  EXPECT_THROW(quantile_linear(std::vector<double>{}, 0.5), InputError);
}

TEST(Quantile, MatchesSortingOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(uniform_int(rng, 1, 40)));
    for (double& x : v) x = uniform01(rng) * 3.0;
    const double p = uniform01(rng);
    EXPECT_NEAR(quantile_linear(v, p), oracle::quantile7(v, p), 1e-12);
  }
}

TEST(Cutpoints, WorkedExample) {
  const auto t = with_entropies({0.1, 0.9, 0.2, 0.8, 0.05});
  const auto c = find_cutpoints(t, 0.6);
  // sorted: 0.05 0.1 0.2 0.8 0.9; h = 4 * 0.6 = 2.4 -> 0.2 + 0.4 * 0.6 = 0.44
  EXPECT_NEAR(c.threshold_tau, 0.44, 1e-12);
  EXPECT_EQ(c.positions, (std::vector<int>{2, 4}));
}

TEST(Cutpoints, ConstantEntropiesMakeEveryTokenACutpoint) {
  const auto c = find_cutpoints(with_entropies(std::vector<double>(9, 0.3)), 0.95);
  EXPECT_EQ(c.positions.size(), 9u);
}

TEST(Cutpoints, RejectsBadInput) {
  EXPECT_THROW(find_cutpoints(with_entropies({}), 0.5), InputError);
  EXPECT_THROW(find_cutpoints(of_length(3), 0.0), InputError);
  EXPECT_THROW(find_cutpoints(of_length(3), 1.0), InputError);
}

TEST(Adaptive, ExactDivision) {
  const auto s = partition_adaptive(of_length(30), cuts({2, 4, 6, 8, 10, 12, 14, 16}), 4);
  EXPECT_EQ(s.M, 2);
  EXPECT_EQ(s.boundaries, (std::vector<int>{1, 9, 31}));
}

TEST(Adaptive, FloorClampsToOneSegment) {
  const auto s = partition_adaptive(of_length(12), cuts({1, 3, 5, 7, 9}), 4);
  EXPECT_EQ(s.M, 1);
  EXPECT_EQ(s.boundaries, (std::vector<int>{1, 13}));
}

TEST(Adaptive, RemainderFirstMatchesEnumeratedSplits) {
  const auto s = partition_adaptive(of_length(20), cuts({3, 7, 11, 15}), 2);
  EXPECT_EQ(s.boundaries, (std::vector<int>{1, 8, 21}));

  // For every (|U|, M) the chosen run sizes are the lexicographically largest
  // balanced split, i.e. earlier runs take the remainder.
  for (int k = 1; k <= 12; ++k) {
    for (int n = 1; n <= k; ++n) {
      std::vector<int> U;
      for (int i = 1; i <= k; ++i) U.push_back(2 * i);
      const auto seg = partition_adaptive(of_length(2 * k + 1), cuts(U), n);
      const int M = std::max(1, k / n);
      ASSERT_EQ(seg.M, M);
      std::vector<std::vector<int>> splits;
      std::vector<int> cur;
      balanced_splits(k, M, cur, splits);
      const auto expected = *std::max_element(splits.begin(), splits.end());
      std::vector<int> got;
      for (int m = 0; m < M; ++m) {
        got.push_back(static_cast<int>(std::count_if(U.begin(), U.end(), [&](int u) {
          return u >= seg.boundaries[m] && u < seg.boundaries[m + 1];
        })));
      }
      EXPECT_EQ(got, expected) << "k=" << k << " n=" << n;
    }
  }
}

TEST(Adaptive, IdentityWhenNAtLeastCutpointCount) {
  const auto s = partition_adaptive(of_length(10), cuts({2, 5, 9}), 3);
  EXPECT_EQ(s.M, 1);
  EXPECT_EQ(partition_adaptive(of_length(10), cuts({2, 5, 9}), 50).M, 1);
}

TEST(Adaptive, RejectsBadCutpoints) {
  EXPECT_THROW(partition_adaptive(of_length(5), cuts({3, 2}), 1), InputError);
  EXPECT_THROW(partition_adaptive(of_length(5), cuts({6}), 1), InputError);
  EXPECT_THROW(partition_adaptive(of_length(5), cuts({2}), 0), InputError);
}

TEST(Fixed, Examples) {
  EXPECT_EQ(lengths(partition_fixed(of_length(12), 6)), (std::vector<int>{2, 2, 2, 2, 2, 2}));
  EXPECT_EQ(lengths(partition_fixed(of_length(7), 6)), (std::vector<int>{2, 1, 1, 1, 1, 1}));
  EXPECT_EQ(lengths(partition_fixed(of_length(9), 1)), (std::vector<int>{9}));
  EXPECT_EQ(lengths(partition_fixed(of_length(3), 6)), (std::vector<int>{1, 1, 1}));
}

TEST(Fixed, MatchesCeilingOracle) {
  for (int T = 1; T <= 40; ++T) {
    for (int n = 1; n <= 10; ++n) {
      const auto s = partition_fixed(of_length(T), n);
      const int M = std::min(n, T);
      ASSERT_EQ(s.M, M);
      for (int m = 0; m <= M; ++m) {
        const int ceil = (m * T + M - 1) / M;
        EXPECT_EQ(s.boundaries[m], ceil + 1);
      }
      EXPECT_NO_THROW(check_segmentation(s));
    }
  }
}

TEST(Segmentation, RandomProfilesTileAndBalance) {
  Rng rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const int T = uniform_int(rng, 1, 60);
    std::vector<double> e(static_cast<std::size_t>(T));
    for (double& x : e) x = uniform01(rng) < 0.2 ? 0.4 : uniform01(rng) * 2.0;
    const auto t = with_entropies(e);
    const double p = 0.05 + 0.9 * uniform01(rng);
    const int n = uniform_int(rng, 1, 6);
    const auto c = find_cutpoints(t, p);
    ASSERT_GE(c.positions.size(), 1u);
    const auto s = partition_adaptive(t, c, n);
    ASSERT_NO_THROW(check_segmentation(s));
    int lo = T, hi = 0;
    for (int m = 0; m < s.M; ++m) {
      const int k = static_cast<int>(std::count_if(c.positions.begin(), c.positions.end(), [&](int u) {
        return u >= s.boundaries[m] && u < s.boundaries[m + 1];
      }));
      lo = std::min(lo, k);
      hi = std::max(hi, k);
    }
    EXPECT_LE(hi - lo, 1);
    EXPECT_LE(find_cutpoints(t, std::min(0.99, p + 0.05)).positions.size(), c.positions.size());
  }
}

TEST(Segmentation, SegmentOfMapsEveryPosition) {
  const auto s = partition_fixed(of_length(10), 3);
  for (int t = 1; t <= 10; ++t) {
    const int m = s.segment_of(t);
    EXPECT_GE(t, s.boundaries[m]);
    EXPECT_LT(t, s.boundaries[m + 1]);
  }
}

TEST(Segmentation, CheckRejectsBrokenTilings) {
  auto s = partition_fixed(of_length(10), 3);
  s.boundaries[1] = s.boundaries[2];
  EXPECT_THROW(check_segmentation(s), StateError);
  s = partition_fixed(of_length(10), 3);
  s.boundaries.back() = 10;
  EXPECT_THROW(check_segmentation(s), StateError);
}

TEST(Segmentation, TruncateKeepsPrefix) {
  const auto t = with_entropies({0.1, 0.2, 0.3});
  const auto u = truncate(t, 2);
  EXPECT_EQ(u.entropies, (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(u.length(), 2);
  EXPECT_THROW(truncate(t, 4), InputError);
}

TEST(Segmentation, StrategyNames) {
  EXPECT_EQ(parse_segment_strategy("adaptive"), SegmentStrategy::adaptive_entropy);
  EXPECT_EQ(parse_segment_strategy("fixed_token"), SegmentStrategy::fixed_token);
  EXPECT_THROW(parse_segment_strategy("random"), InputError);
}
