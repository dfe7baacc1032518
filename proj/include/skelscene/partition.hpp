#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <iterator>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "skelscene/kinematics.hpp"
#include "skelscene/skeleton.hpp"

namespace skelscene {

struct FrameInterval {
    std::size_t start = 0;  // inclusive
    std::size_t end = 0;    // inclusive

    std::size_t length() const noexcept { return end - start + 1; }
    friend bool operator==(const FrameInterval&, const FrameInterval&) = default;
};

// Stream 0 is the global (whole-body) stream; streams 1..7 are the body
// parts in table order.
inline constexpr std::size_t kStreamCount = kPartCount + 1;
inline constexpr std::size_t kGlobalStream = 0;

inline std::string_view stream_name(std::size_t stream) {
    if (stream == kGlobalStream) return "global";
    if (stream > kPartCount) throw std::out_of_range("stream index out of range");
    return kPartTable[stream - 1].name;
}

inline std::array<Joint, 2> stream_joints(std::size_t stream) {
    if (stream == kGlobalStream) return {Joint::lhip, Joint::rhip};
    if (stream > kPartCount) throw std::out_of_range("stream index out of range");
    return kPartTable[stream - 1].ends;
}

struct PrimitiveAction {
    std::size_t stream = 0;
    FrameInterval interval;
    double score = 0.0;  // sum of speed * dt over the interval (metres)
    std::size_t ordinal = 0;
};

// Maximal runs of nonzero entries; runs separated by at most `gap` zero
// entries are joined. Intervals index into `series`.
inline std::vector<FrameInterval> active_intervals(std::span<const double> series, std::size_t gap) {
    std::vector<FrameInterval> out;
    std::size_t i = 0;
    const std::size_t n = series.size();
    while (i < n) {
        if (series[i] == 0.0) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end + 1 < n && series[end + 1] != 0.0) ++end;
        if (!out.empty() && i - out.back().end - 1 <= gap) {
            out.back().end = end;
        } else {
            out.push_back({i, end});
        }
        i = end + 1;
    }
    return out;
}

// Union of two sorted disjoint interval lists, as maximal disjoint intervals.
// Touching intervals ([1,2] and [3,4]) cover a contiguous range and are joined.
inline std::vector<FrameInterval> merge_part_intervals(std::span<const FrameInterval> a,
                                                       std::span<const FrameInterval> b) {
    std::vector<FrameInterval> all;
    all.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(all),
               [](const FrameInterval& x, const FrameInterval& y) { return x.start < y.start; });
    std::vector<FrameInterval> out;
    for (const auto& iv : all) {
        if (!out.empty() && iv.start <= out.back().end + 1) {
            out.back().end = std::max(out.back().end, iv.end);
        } else {
            out.push_back(iv);
        }
    }
    return out;
}

// Motion-attention selection. Each interval is scored by the sum over its
// entries of the larger end-joint speed times dt; when there are more than
// max_pa intervals the highest scores are kept (ties keep the earlier one).
// The result is chronological with ordinals 0..k-1 and carries the same
// index space as `intervals`.
inline std::vector<PrimitiveAction> attention_select(std::span<const FrameInterval> intervals,
                                                     std::span<const SpeedSeries> speeds, double dt,
                                                     std::size_t max_pa, std::size_t stream = 0) {
    if (max_pa < 1) throw std::invalid_argument("max_pa must be >= 1");
    std::vector<PrimitiveAction> scored;
    scored.reserve(intervals.size());
    for (const auto& iv : intervals) {
        double score = 0.0;
        for (std::size_t f = iv.start; f <= iv.end; ++f) {
            double v = 0.0;
            for (const auto& s : speeds) {
                if (f >= s.values.size()) throw std::out_of_range("interval exceeds speed series");
                v = std::max(v, s.values[f]);
            }
            score += v * dt;
        }
        scored.push_back({stream, iv, score, 0});
    }
    if (scored.size() > max_pa) {
        std::stable_sort(scored.begin(), scored.end(), [](const PrimitiveAction& x, const PrimitiveAction& y) {
            if (x.score != y.score) return x.score > y.score;
            return x.interval.start < y.interval.start;
        });
        scored.resize(max_pa);
        std::sort(scored.begin(), scored.end(), [](const PrimitiveAction& x, const PrimitiveAction& y) {
            return x.interval.start < y.interval.start;
        });
    }
    for (std::size_t q = 0; q < scored.size(); ++q) scored[q].ordinal = q;
    return scored;
}

// ------------------------------------------------------------------ scene level

struct PartitionConfig {
    ThresholdPolicy threshold;
    std::size_t gap = 3;      // zero entries bridged inside one run
    std::size_t min_run = 2;  // shorter active runs are flicker and dropped
    std::size_t max_pa = 30;
    SpeedFrame frame = SpeedFrame::mixed;
};

// Thresholded speeds of the stream's two end joints. The global stream is
// always measured in the global frame.
inline std::array<SpeedSeries, 2> stream_speeds(const SkeletonSequence& global, const SkeletonSequence& local,
                                                std::size_t stream, const PartitionConfig& cfg) {
    const auto joints = stream_joints(stream);
    std::array<SpeedSeries, 2> out;
    for (std::size_t n = 0; n < 2; ++n) {
        const SpeedSeries raw = stream == kGlobalStream ? joint_speed(global, joints[n])
                                                        : joint_speed(global, local, joints[n], cfg.frame);
        out[n] = threshold_speed(raw, speed_threshold(raw, cfg.threshold));
    }
    return out;
}

// Segments one stream. Returned intervals are in frame indices: a speed run
// over entries [a, b] spans frames [a, b + 1].
inline std::vector<PrimitiveAction> segment_stream(const SkeletonSequence& global, const SkeletonSequence& local,
                                                   std::size_t stream, const PartitionConfig& cfg) {
    const auto speeds = stream_speeds(global, local, stream, cfg);
    const auto a = active_intervals(speeds[0].values, cfg.gap);
    const auto b = active_intervals(speeds[1].values, cfg.gap);
    auto merged = merge_part_intervals(a, b);
    std::erase_if(merged, [&](const FrameInterval& iv) { return iv.length() < cfg.min_run; });
    auto pas = attention_select(merged, speeds, global.dt(), cfg.max_pa, stream);
    for (auto& pa : pas) pa.interval.end += 1;
    return pas;
}

struct SceneSegmentation {
    SkeletonSequence local;
    std::array<std::vector<PrimitiveAction>, kStreamCount> streams;
};

inline SceneSegmentation segment_scene(const SkeletonSequence& global, const PartitionConfig& cfg) {
    SceneSegmentation out{to_local(global), {}};
    for (std::size_t s = 0; s < kStreamCount; ++s) out.streams[s] = segment_stream(global, out.local, s, cfg);
    return out;
}

}  // namespace skelscene
