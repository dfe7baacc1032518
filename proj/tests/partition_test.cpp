#include <gtest/gtest.h>

#include "support.hpp"

using namespace skelscene;
using namespace testing_support;

namespace {

// Coverage mask by brute force: an entry is active when nonzero, or when it
// is a zero inside a run of at most `gap` zeros bounded by nonzeros.
std::vector<bool> scan_mask(const std::vector<double>& s, std::size_t gap) {
    const std::size_t n = s.size();
    std::vector<bool> on(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (s[i] != 0.0) {
            on[i] = true;
            continue;
        }
        std::size_t l = i, r = i;
        while (l > 0 && s[l - 1] == 0.0) --l;
        while (r + 1 < n && s[r + 1] == 0.0) ++r;
        on[i] = l > 0 && r + 1 < n && (r - l + 1) <= gap;
    }
    return on;
}

std::vector<FrameInterval> runs(const std::vector<bool>& on) {
    std::vector<FrameInterval> out;
    for (std::size_t i = 0; i < on.size(); ++i) {
        if (!on[i]) continue;
        std::size_t j = i;
        while (j + 1 < on.size() && on[j + 1]) ++j;
        out.push_back({i, j});
        i = j;
    }
    return out;
}

std::vector<bool> cover(const std::vector<FrameInterval>& ivs, std::size_t n) {
    std::vector<bool> on(n, false);
    for (const auto& iv : ivs) {
        for (std::size_t f = iv.start; f <= iv.end; ++f) on[f] = true;
    }
    return on;
}

std::vector<double> random_series(Rng& rng, std::size_t n) {
    // Bursty series: alternating active and idle stretches of random length.
    std::vector<double> s(n, 0.0);
    const double density = uniform(rng, 0.05, 0.9);
    for (std::size_t i = 0; i < n; ++i) {
        if (uniform01(rng) < density) s[i] = uniform(rng, 0.1, 3.0);
    }
    return s;
}

}  // namespace

TEST(ActiveIntervals, Examples) {
    const std::vector<double> s{0, 0, 2, 3, 0, 4, 0};
    EXPECT_EQ(active_intervals(s, 0), (std::vector<FrameInterval>{{2, 3}, {5, 5}}));
    EXPECT_EQ(active_intervals(s, 1), (std::vector<FrameInterval>{{2, 5}}));
    EXPECT_TRUE(active_intervals(std::vector<double>(10, 0.0), 3).empty());
    EXPECT_TRUE(active_intervals(std::vector<double>{}, 0).empty());
}

TEST(ActiveIntervals, MatchesScanOracle) {
    Rng rng(101);
    for (int t = 0; t < 300; ++t) {
        const auto s = random_series(rng, 10 + uniform_index(rng, 500));
        const std::size_t gap = uniform_index(rng, 6);
        EXPECT_EQ(active_intervals(s, gap), runs(scan_mask(s, gap)));
    }
}

TEST(ActiveIntervals, GapZeroLeavesZerosUncovered) {
    Rng rng(102);
    for (int t = 0; t < 100; ++t) {
        const auto s = random_series(rng, 200);
        const auto on = cover(active_intervals(s, 0), s.size());
        for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(on[i], s[i] != 0.0);
    }
}

TEST(MergePartIntervals, Examples) {
    using V = std::vector<FrameInterval>;
    EXPECT_EQ(merge_part_intervals(V{{2, 4}}, V{{3, 6}}), (V{{2, 6}}));
    EXPECT_EQ(merge_part_intervals(V{{1, 2}}, V{{5, 6}}), (V{{1, 2}, {5, 6}}));
    const V x{{1, 3}, {7, 9}};
    EXPECT_EQ(merge_part_intervals(x, V{}), x);
    EXPECT_EQ(merge_part_intervals(V{}, x), x);
}

TEST(MergePartIntervals, MatchesUnionOracle) {
    Rng rng(103);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 10 + uniform_index(rng, 500);
        const auto a = active_intervals(random_series(rng, n), uniform_index(rng, 4));
        const auto b = active_intervals(random_series(rng, n), uniform_index(rng, 4));
        auto on = cover(a, n);
        const auto ob = cover(b, n);
        for (std::size_t i = 0; i < n; ++i) on[i] = on[i] || ob[i];
        EXPECT_EQ(merge_part_intervals(a, b), runs(on));
    }
}

TEST(AttentionSelect, KeepsEverythingUnderBudget) {
    const SpeedSeries s{Joint::lhand, {0, 1, 1, 0, 0, 2, 2, 0}};
    const std::vector<FrameInterval> ivs{{1, 2}, {5, 6}};
    const auto pas = attention_select(ivs, std::span(&s, 1), 0.5, 30, 4);
    ASSERT_EQ(pas.size(), 2u);
    EXPECT_EQ(pas[0].interval, ivs[0]);
    EXPECT_EQ(pas[1].interval, ivs[1]);
    EXPECT_EQ(pas[0].ordinal, 0u);
    EXPECT_EQ(pas[1].ordinal, 1u);
    EXPECT_DOUBLE_EQ(pas[0].score, 1.0);
    EXPECT_DOUBLE_EQ(pas[1].score, 2.0);
    EXPECT_EQ(pas[1].stream, 4u);
}

TEST(AttentionSelect, DropsTheLowestScore) {
    // 31 intervals of length 2; every one has speed 1 except one with speed 2.
    // The score tie at 1 is broken toward earlier intervals, so the last
    // speed-1 interval is the one dropped.
    std::vector<double> v;
    std::vector<FrameInterval> ivs;
    for (std::size_t i = 0; i < 31; ++i) {
        ivs.push_back({v.size(), v.size() + 1});
        const double speed = i == 10 ? 2.0 : 1.0;
        v.insert(v.end(), {speed, speed, 0.0});
    }
    const SpeedSeries s{Joint::lhand, v};
    const auto pas = attention_select(ivs, std::span(&s, 1), 0.02, 30);
    ASSERT_EQ(pas.size(), 30u);
    // Oracle: score every interval, drop the minimum with the latest start.
    std::vector<FrameInterval> expected(ivs.begin(), ivs.end() - 1);
    for (std::size_t q = 0; q < 30; ++q) {
        EXPECT_EQ(pas[q].interval, expected[q]);
        EXPECT_EQ(pas[q].ordinal, q);
    }
}

TEST(AttentionSelect, SpeedOutweighsTime) {
    // Short fast interval against a longer slow one, budget one.
    const SpeedSeries s{Joint::lhand, {3, 3, 0, 1, 1, 1, 1}};
    const std::vector<FrameInterval> ivs{{0, 1}, {3, 6}};
    const auto pas = attention_select(ivs, std::span(&s, 1), 0.1, 1);
    ASSERT_EQ(pas.size(), 1u);
    EXPECT_EQ(pas[0].interval, ivs[0]);
}

TEST(AttentionSelect, UsesTheLargerEndJointSpeed) {
    const std::array<SpeedSeries, 2> s{SpeedSeries{Joint::lhumerus, {1, 0, 4}}, SpeedSeries{Joint::lhand, {2, 3, 0}}};
    const auto pas = attention_select(std::vector<FrameInterval>{{0, 2}}, s, 1.0, 5);
    EXPECT_DOUBLE_EQ(pas[0].score, 9.0);
    EXPECT_THROW(attention_select(std::vector<FrameInterval>{{0, 2}}, s, 1.0, 0), std::invalid_argument);
}

TEST(AttentionSelect, PropertiesOnRandomSeries) {
    Rng rng(104);
    for (int t = 0; t < 200; ++t) {
        const auto v = random_series(rng, 50 + uniform_index(rng, 1000));
        const SpeedSeries s{Joint::lhand, v};
        const auto ivs = active_intervals(v, uniform_index(rng, 4));
        const std::size_t max_pa = 1 + uniform_index(rng, 40);
        const auto pas = attention_select(ivs, std::span(&s, 1), 0.02, max_pa);
        EXPECT_EQ(pas.size(), std::min(max_pa, ivs.size()));
        for (std::size_t q = 0; q < pas.size(); ++q) {
            EXPECT_GE(pas[q].score, 0.0);
            EXPECT_EQ(pas[q].ordinal, q);
            if (q > 0) EXPECT_GT(pas[q].interval.start, pas[q - 1].interval.end);
        }
        // Time shift: prefixing k zeros shifts every interval, scores unchanged.
        const std::size_t k = uniform_index(rng, 20);
        std::vector<double> shifted(k, 0.0);
        shifted.insert(shifted.end(), v.begin(), v.end());
        const SpeedSeries ss{Joint::lhand, shifted};
        const auto spas = attention_select(active_intervals(shifted, 2), std::span(&ss, 1), 0.02, max_pa);
        const auto base = attention_select(active_intervals(v, 2), std::span(&s, 1), 0.02, max_pa);
        ASSERT_EQ(spas.size(), base.size());
        for (std::size_t q = 0; q < base.size(); ++q) {
            EXPECT_EQ(spas[q].interval.start, base[q].interval.start + k);
            EXPECT_EQ(spas[q].interval.end, base[q].interval.end + k);
            EXPECT_DOUBLE_EQ(spas[q].score, base[q].score);
        }
    }
}

class ScriptedSegments : public ::testing::TestWithParam<std::tuple<int, std::size_t>> {};

// On a noise-free scene every scripted segment becomes exactly one primitive
// action on its part's stream, and nothing else moves.
TEST_P(ScriptedSegments, RecoversTheScriptedCount) {
    const auto [part, count] = GetParam();
    const auto [seq, label] = generate_synthetic_scene(single_part_spec(part, count), 1);
    const auto seg = segment_scene(seq, PartitionConfig{});
    for (std::size_t s = 1; s < kStreamCount; ++s) {
        const std::size_t expected = static_cast<int>(s) == part ? count : 0;
        EXPECT_EQ(seg.streams[s].size(), expected) << stream_name(s);
    }
    EXPECT_EQ(seg.streams[kGlobalStream].size(), part == 1 ? count : 0u);
}

INSTANTIATE_TEST_SUITE_P(Parts, ScriptedSegments,
                         ::testing::Combine(::testing::Values(1, 2, 3, 4, 5, 6, 7),
                                            ::testing::Values(std::size_t{1}, std::size_t{3}, std::size_t{5})));

TEST(SegmentStream, IntervalsAreFrameIndices) {
    // lhand moves between frames 10 and 20 only.
    Pose p = rest_pose();
    std::vector<SkeletonFrame> frames;
    for (std::size_t f = 0; f < 40; ++f) {
        Pose q = p;
        const double t = std::clamp((static_cast<double>(f) - 10.0) / 10.0, 0.0, 1.0);
        q[index_of(Joint::lhand)] += Vec3(0, 0.2 * t, 0);
        frames.emplace_back(f, q);
    }
    const SkeletonSequence seq(frames, 0.02);
    const auto seg = segment_scene(seq, PartitionConfig{});
    ASSERT_EQ(seg.streams[4].size(), 1u);
    EXPECT_EQ(seg.streams[4][0].interval, (FrameInterval{10, 20}));
    EXPECT_NEAR(seg.streams[4][0].score, 0.2, 1e-12);
}
