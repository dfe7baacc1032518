#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "skelscene/errors.hpp"
#include "skelscene/skeleton.hpp"

namespace skelscene {

// Synthetic (magnitude) speed of one joint. values[k] is the speed between
// frames k and k+1, so a sequence of n frames yields n-1 values.
struct SpeedSeries {
    Joint joint = Joint::root;
    std::vector<double> values;
};

// values[k] is the acceleration between speed samples k and k+1 (n-2 values).
struct AccelSeries {
    Joint joint = Joint::root;
    std::vector<double> values;
};

// Per-axis velocity (m/s) of `joint`; entry k is (s[k+1] - s[k]) / dt.
inline std::vector<Vec3> joint_speed_components(const SkeletonSequence& seq, Joint joint) {
    if (seq.size() < 2) throw SequenceTooShort("speed needs at least two frames");
    std::vector<Vec3> out;
    out.reserve(seq.size() - 1);
    for (std::size_t f = 1; f < seq.size(); ++f) {
        out.push_back((seq.position(f, joint) - seq.position(f - 1, joint)) / seq.dt());
    }
    return out;
}

inline double synthetic_speed(const Vec3& v) {
    return std::sqrt(v.x() * v.x() + v.y() * v.y() + v.z() * v.z());
}

inline SpeedSeries synthetic_speed(std::span<const Vec3> components, Joint joint = Joint::root) {
    SpeedSeries out{joint, {}};
    out.values.reserve(components.size());
    for (const auto& v : components) out.values.push_back(synthetic_speed(v));
    return out;
}

inline SpeedSeries joint_speed(const SkeletonSequence& seq, Joint joint) {
    const auto comps = joint_speed_components(seq, joint);
    return synthetic_speed(comps, joint);
}

inline AccelSeries synthetic_acceleration(const SpeedSeries& speeds, double dt) {
    if (speeds.values.size() < 2) throw SequenceTooShort("acceleration needs at least two speed samples");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    AccelSeries out{speeds.joint, {}};
    out.values.reserve(speeds.values.size() - 1);
    for (std::size_t k = 1; k < speeds.values.size(); ++k) {
        out.values.push_back((speeds.values[k] - speeds.values[k - 1]) / dt);
    }
    return out;
}

// Euclidean distance between two acceleration sequences.
inline double motion_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw LengthMismatch("motion similarity needs equal-length series (" + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()) + ")");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

inline double motion_similarity(const AccelSeries& a, const AccelSeries& b) {
    return motion_similarity(a.values, b.values);
}

// Keeps v where v >= threshold, zero elsewhere.
inline SpeedSeries threshold_speed(const SpeedSeries& speeds, double threshold) {
    if (!(threshold >= 0.0)) throw std::invalid_argument("speed threshold must be >= 0");
    SpeedSeries out{speeds.joint, speeds.values};
    for (double& v : out.values) {
        if (!(v >= threshold)) v = 0.0;
    }
    return out;
}

// ------------------------------------------------------------------ policies

// Threshold = max(floor, fraction * p95(speed)).
struct ThresholdPolicy {
    double fraction = 0.1;
    double floor = 0.05;  // m/s
};

// Linear-interpolated percentile (q in [0, 1]) of the values.
inline double percentile(std::span<const double> values, double q) {
    if (values.empty()) return 0.0;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double speed_threshold(const SpeedSeries& speeds, const ThresholdPolicy& policy) {
    return std::max(policy.floor, policy.fraction * percentile(speeds.values, 0.95));
}

// Which coordinate frame speeds are measured in.
//  mixed:      hips (lower torso) in the global frame, every other joint in the local frame
//  all_global: every joint in the global frame
//  all_local:  every joint in the local frame
enum class SpeedFrame { mixed, all_global, all_local };

inline bool uses_global_frame(Joint j, SpeedFrame policy) noexcept {
    switch (policy) {
        case SpeedFrame::all_global: return true;
        case SpeedFrame::all_local: return false;
        case SpeedFrame::mixed: break;
    }
    return j == Joint::lhip || j == Joint::rhip || j == Joint::root;
}

// Speed of `joint` taken from the global or the local sequence per `policy`.
inline SpeedSeries joint_speed(const SkeletonSequence& global, const SkeletonSequence& local, Joint joint,
                               SpeedFrame policy) {
    return joint_speed(uses_global_frame(joint, policy) ? global : local, joint);
}

}  // namespace skelscene
